//! ZeroMat: matrix factorization trained on the rated-pairs pattern alone.
//!
//! The trainer never sees star values. It ascends the log of the product
//! likelihood over rated pairs, `Σ log(U_i·V_j)`, with Gaussian priors on
//! the factor rows, using the per-pair stochastic update
//!
//! ```text
//! U_i ← U_i + φ·(V_j/g − 2·U_i)      g = max(U_i·V_j, ε)
//! V_j ← V_j + φ·(U_i/g − 2·V_j)      (pre-update U_i on the right)
//! ```

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::config::{TrainConfig, TrainTrace};
use crate::error::{Error, Result};
use crate::factors::{dot, init_factors, FactorModel};
use crate::matrix::IncidencePattern;
use crate::rng::{derive_seed, rng_from_seed};

/// Stream tag for the epoch-shuffle generator, kept distinct from the
/// factor-initialization seed.
const SHUFFLE_STREAM: u64 = 0x5a;

/// A trained ZeroMat model with the config that produced it and its trace.
#[derive(Debug, Clone)]
pub struct ZeroMatState {
    pub model: FactorModel,
    pub config: TrainConfig,
    pub trace: TrainTrace,
}

/// Log of the pattern likelihood with Gaussian priors, up to the additive
/// normalization constant of the priors (which is independent of U and V
/// and therefore excluded):
///
/// `Σ_(i,j)∈pattern log(max(U_i·V_j, ε)) − Σ_i ‖U_i‖²/σ_u² − Σ_j ‖V_j‖²/σ_v²`
pub fn zeromat_loglik(
    model: &FactorModel,
    pattern: &IncidencePattern,
    sigma_u: f64,
    sigma_v: f64,
    eps: f64,
) -> Result<f64> {
    if model.n_users() != pattern.n_users() || model.n_items() != pattern.n_items() {
        return Err(Error::mismatch(format!(
            "model is {}x{} but pattern is {}x{}",
            model.n_users(),
            model.n_items(),
            pattern.n_users(),
            pattern.n_items()
        )));
    }
    let mut ll = 0.0;
    for &(u, i) in pattern.pairs() {
        ll += dot(model.user_row(u), model.item_row(i)).max(eps).ln();
    }
    for u in 0..model.n_users() {
        ll -= sq_norm(model.user_row(u)) / (sigma_u * sigma_u);
    }
    for i in 0..model.n_items() {
        ll -= sq_norm(model.item_row(i)) / (sigma_v * sigma_v);
    }
    Ok(ll)
}

fn sq_norm(row: &[f64]) -> f64 {
    row.iter().map(|x| x * x).sum()
}

/// One stochastic ascent step on the rated pair (user, item).
pub fn zeromat_update(
    model: &mut FactorModel,
    user: usize,
    item: usize,
    lr: f64,
    eps: f64,
) -> Result<()> {
    let (u_row, v_row) = model.pair_rows_mut(user, item);
    let g = dot(u_row, v_row).max(eps);
    let mut finite = true;
    for (u, v) in u_row.iter_mut().zip(v_row.iter_mut()) {
        let u_old = *u;
        *u += lr * (*v / g - 2.0 * u_old);
        *v += lr * (u_old / g - 2.0 * *v);
        finite &= u.is_finite() && v.is_finite();
    }
    if !finite {
        return Err(Error::divergence(format!(
            "non-finite factor after update of pair ({}, {})",
            user, item
        )));
    }
    Ok(())
}

/// Trains on an incidence pattern: seeded init, then per epoch one pass
/// over all pairs in seeded-shuffled order. The trace records the
/// log-likelihood after each epoch.
pub fn zeromat_train(pattern: &IncidencePattern, config: &TrainConfig) -> Result<ZeroMatState> {
    config.validate()?;
    if pattern.is_empty() {
        return Err(Error::invalid("cannot train ZeroMat on an empty pattern"));
    }
    let mut model = init_factors(
        pattern.n_users(),
        pattern.n_items(),
        config.dim,
        config.seed,
    )?;
    let mut order: Vec<usize> = (0..pattern.len()).collect();
    let mut rng = rng_from_seed(derive_seed(config.seed, SHUFFLE_STREAM));
    let mut trace = TrainTrace::new();
    for epoch in 0..config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        for &pair_idx in &order {
            let (u, i) = pattern.pairs()[pair_idx];
            zeromat_update(&mut model, u, i, config.lr, config.eps)
                .map_err(|e| Error::divergence(format!("epoch {}: {}", epoch, e)))?;
        }
        let ll = zeromat_loglik(&model, pattern, config.sigma_u, config.sigma_v, config.eps)?;
        trace.push_epoch(ll, started.elapsed());
    }
    Ok(ZeroMatState {
        model,
        config: config.clone(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{strip_values, RatingEntry, RatingMatrix};

    #[test]
    fn loglik_empty_pattern_zero_factors() {
        let pattern = IncidencePattern::new(1, 1, vec![]).unwrap();
        let model = FactorModel::from_rows(vec![vec![0.0]], vec![vec![0.0]]).unwrap();
        let ll = zeromat_loglik(&model, &pattern, 1.0, 1.0, 1e-8).unwrap();
        assert_eq!(ll, 0.0);
    }

    #[test]
    fn loglik_single_pair_hand_value() {
        let pattern = IncidencePattern::new(1, 1, vec![(0, 0)]).unwrap();
        let model = FactorModel::from_rows(vec![vec![1.0]], vec![vec![1.0]]).unwrap();
        let ll = zeromat_loglik(&model, &pattern, 1.0, 1.0, 1e-8).unwrap();
        assert!((ll - (-2.0)).abs() < 1e-15);
    }

    #[test]
    fn loglik_rejects_dimension_mismatch() {
        let pattern = IncidencePattern::new(2, 2, vec![(0, 0)]).unwrap();
        let model = FactorModel::from_rows(vec![vec![1.0]], vec![vec![1.0]]).unwrap();
        assert!(zeromat_loglik(&model, &pattern, 1.0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn update_hand_value() {
        // U=[1,0], V=[1,0], φ=0.1: g=1, both rows become [0.9, 0].
        let mut model = FactorModel::from_rows(vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]]).unwrap();
        zeromat_update(&mut model, 0, 0, 0.1, 1e-8).unwrap();
        let u = model.user_row(0);
        let v = model.item_row(0);
        assert!((u[0] - 0.9).abs() < 1e-15 && u[1].abs() < 1e-15);
        assert!((v[0] - 0.9).abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut model = init_factors(2, 2, 3, 5).unwrap();
        let before = model.clone();
        zeromat_update(&mut model, 1, 1, 0.0, 1e-8).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn update_uses_pre_update_user_row() {
        // With distinct U and V the V rule must see the original U.
        let mut model = FactorModel::from_rows(vec![vec![2.0]], vec![vec![0.5]]).unwrap();
        let (lr, eps) = (0.1, 1e-8);
        let g: f64 = 1.0; // 2.0 * 0.5
        let u_new = 2.0 + lr * (0.5 / g - 2.0 * 2.0);
        let v_new = 0.5 + lr * (2.0 / g - 2.0 * 0.5);
        zeromat_update(&mut model, 0, 0, lr, eps).unwrap();
        assert!((model.user_row(0)[0] - u_new).abs() < 1e-15);
        assert!((model.item_row(0)[0] - v_new).abs() < 1e-15);
    }

    #[test]
    fn train_zero_epochs_returns_init() {
        let pattern = IncidencePattern::new(3, 3, vec![(0, 0), (1, 2)]).unwrap();
        let config = TrainConfig {
            epochs: 0,
            dim: 4,
            seed: 11,
            ..TrainConfig::default()
        };
        let state = zeromat_train(&pattern, &config).unwrap();
        let init = init_factors(3, 3, 4, 11).unwrap();
        assert_eq!(state.model, init);
        assert!(state.trace.is_empty());
    }

    #[test]
    fn train_is_deterministic() {
        let pattern = IncidencePattern::new(4, 4, vec![(0, 0), (1, 1), (2, 3), (3, 0)]).unwrap();
        let config = TrainConfig {
            epochs: 5,
            dim: 3,
            seed: 9,
            ..TrainConfig::default()
        };
        let a = zeromat_train(&pattern, &config).unwrap();
        let b = zeromat_train(&pattern, &config).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.trace.losses(), b.trace.losses());
    }

    #[test]
    fn train_rejects_empty_pattern() {
        let pattern = IncidencePattern::new(2, 2, vec![]).unwrap();
        assert!(zeromat_train(&pattern, &TrainConfig::default()).is_err());
    }

    #[test]
    fn training_ignores_star_values() {
        let entries = vec![
            RatingEntry {
                user: 0,
                item: 0,
                star: 5,
            },
            RatingEntry {
                user: 0,
                item: 1,
                star: 1,
            },
            RatingEntry {
                user: 1,
                item: 1,
                star: 3,
            },
        ];
        let m = RatingMatrix::from_entries(2, 2, 5, entries).unwrap();
        let permuted = m.permute_stars(77);
        let config = TrainConfig {
            epochs: 10,
            dim: 3,
            seed: 4,
            ..TrainConfig::default()
        };
        let a = zeromat_train(&strip_values(&m), &config).unwrap();
        let b = zeromat_train(&strip_values(&permuted), &config).unwrap();
        assert_eq!(a.model, b.model);
    }
}
