//! Full-data baselines: regularized matrix factorization and the trivial
//! predictors every algorithm is compared against.

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::config::{TrainConfig, TrainTrace};
use crate::error::{Error, Result};
use crate::factors::{dot, dot_predict, init_factors, FactorModel};
use crate::matrix::RatingMatrix;
use crate::rng::{derive_seed, rng_from_seed};

const SHUFFLE_STREAM: u64 = 0x3f;

/// Classic regularized MF on observed entries:
/// `U_i += φ(e·V_j − λ_u·U_i)`, `V_j += φ(e·U_i − λ_v·V_j)` with
/// `e = R_ij − U_i·V_j`, λ = 1/σ², pre-update U_i in the V rule.
/// The trace records training MAE per epoch.
pub fn mf_train(matrix: &RatingMatrix, config: &TrainConfig) -> Result<(FactorModel, TrainTrace)> {
    config.validate()?;
    if matrix.is_empty() {
        return Err(Error::invalid("cannot train MF on an empty matrix"));
    }
    let lambda_u = 1.0 / (config.sigma_u * config.sigma_u);
    let lambda_v = 1.0 / (config.sigma_v * config.sigma_v);
    let mut model = init_factors(matrix.n_users(), matrix.n_items(), config.dim, config.seed)?;
    let mut order: Vec<usize> = (0..matrix.len()).collect();
    let mut rng = rng_from_seed(derive_seed(config.seed, SHUFFLE_STREAM));
    let mut trace = TrainTrace::new();
    for epoch in 0..config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        for &idx in &order {
            let e = matrix.entries()[idx];
            let (u_row, v_row) = model.pair_rows_mut(e.user, e.item);
            let err = e.star as f64 - dot(u_row, v_row);
            let mut finite = true;
            for (u, v) in u_row.iter_mut().zip(v_row.iter_mut()) {
                let u_old = *u;
                *u += config.lr * (err * *v - lambda_u * u_old);
                *v += config.lr * (err * u_old - lambda_v * *v);
                finite &= u.is_finite() && v.is_finite();
            }
            if !finite {
                return Err(Error::divergence(format!(
                    "epoch {}: non-finite factor after entry ({}, {})",
                    epoch, e.user, e.item
                )));
            }
        }
        trace.push_epoch(training_mae(&model, matrix), started.elapsed());
    }
    Ok((model, trace))
}

fn training_mae(model: &FactorModel, matrix: &RatingMatrix) -> f64 {
    let total: f64 = matrix
        .entries()
        .iter()
        .map(|e| {
            let pred = dot(model.user_row(e.user), model.item_row(e.item))
                .clamp(1.0, matrix.scale() as f64);
            (pred - e.star as f64).abs()
        })
        .sum();
    total / matrix.len() as f64
}

/// A unified scoring interface over trained models and heuristics.
/// Every variant yields a finite score for any in-range (user, item).
#[derive(Debug, Clone)]
pub enum Predictor {
    Factor(FactorModel),
    GlobalMean(f64),
    ItemMean {
        means: Vec<Option<f64>>,
        fallback: f64,
    },
    UniformRandom {
        seed: u64,
        scale: u32,
    },
}

impl Predictor {
    pub fn factor(model: FactorModel) -> Self {
        Predictor::Factor(model)
    }

    /// Mean star of the training matrix, predicted everywhere.
    pub fn global_mean(train: &RatingMatrix) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid(
                "global mean of an empty matrix is undefined",
            ));
        }
        let sum: f64 = train.entries().iter().map(|e| e.star as f64).sum();
        Ok(Predictor::GlobalMean(sum / train.len() as f64))
    }

    /// Per-item mean star; unrated items fall back to the global mean.
    pub fn item_mean(train: &RatingMatrix) -> Result<Self> {
        let Predictor::GlobalMean(fallback) = Predictor::global_mean(train)? else {
            unreachable!()
        };
        let means = (0..train.n_items())
            .map(|item| {
                let stars: Vec<f64> = train.item_entries(item).map(|e| e.star as f64).collect();
                if stars.is_empty() {
                    None
                } else {
                    Some(stars.iter().sum::<f64>() / stars.len() as f64)
                }
            })
            .collect();
        Ok(Predictor::ItemMean { means, fallback })
    }

    /// Deterministic per-pair uniform draw on [1, scale].
    pub fn uniform_random(seed: u64, scale: u32) -> Self {
        Predictor::UniformRandom { seed, scale }
    }

    /// Short stable name for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Predictor::Factor(_) => "factor-model",
            Predictor::GlobalMean(_) => "global-mean",
            Predictor::ItemMean { .. } => "item-mean",
            Predictor::UniformRandom { .. } => "uniform-random",
        }
    }

    pub fn predict(&self, user: usize, item: usize) -> Result<f64> {
        match self {
            Predictor::Factor(model) => dot_predict(model, user, item),
            Predictor::GlobalMean(mean) => Ok(*mean),
            Predictor::ItemMean { means, fallback } => {
                let mean = means.get(item).ok_or_else(|| {
                    Error::invalid(format!(
                        "item {} out of range for item-mean predictor",
                        item
                    ))
                })?;
                Ok(mean.unwrap_or(*fallback))
            }
            Predictor::UniformRandom { seed, scale } => Ok(pair_uniform(*seed, user, item, *scale)),
        }
    }
}

/// Hashes (seed, user, item) to a uniform value in [1, scale]; pure, so
/// repeated queries agree.
fn pair_uniform(seed: u64, user: usize, item: usize, scale: u32) -> f64 {
    use crate::rng::derive_seed;
    let mixed = derive_seed(derive_seed(seed, user as u64), item as u64);
    let unit = (mixed >> 11) as f64 / (1u64 << 53) as f64; // [0, 1)
    1.0 + (scale as f64 - 1.0) * unit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RatingEntry;

    fn single_cell() -> RatingMatrix {
        RatingMatrix::from_entries(
            1,
            1,
            5,
            vec![RatingEntry {
                user: 0,
                item: 0,
                star: 3,
            }],
        )
        .unwrap()
    }

    #[test]
    fn mf_fits_single_cell() {
        let config = TrainConfig {
            lr: 0.05,
            epochs: 200,
            dim: 1,
            sigma_u: 10.0, // λ = 0.01
            sigma_v: 10.0,
            seed: 1,
            ..TrainConfig::default()
        };
        let (model, _) = mf_train(&single_cell(), &config).unwrap();
        let pred = dot_predict(&model, 0, 0).unwrap();
        assert!(
            (pred - 3.0).abs() < 0.1,
            "prediction {} too far from 3",
            pred
        );
    }

    #[test]
    fn mf_zero_epochs_returns_init() {
        let config = TrainConfig {
            epochs: 0,
            dim: 2,
            seed: 6,
            ..TrainConfig::default()
        };
        let (model, trace) = mf_train(&single_cell(), &config).unwrap();
        assert_eq!(model, init_factors(1, 1, 2, 6).unwrap());
        assert!(trace.is_empty());
    }

    #[test]
    fn mf_is_deterministic() {
        let m = RatingMatrix::from_entries(
            2,
            2,
            5,
            vec![
                RatingEntry {
                    user: 0,
                    item: 0,
                    star: 4,
                },
                RatingEntry {
                    user: 1,
                    item: 1,
                    star: 2,
                },
            ],
        )
        .unwrap();
        let config = TrainConfig {
            epochs: 10,
            dim: 3,
            seed: 5,
            ..TrainConfig::default()
        };
        let (a, _) = mf_train(&m, &config).unwrap();
        let (b, _) = mf_train(&m, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn item_mean_with_fallback() {
        let m = RatingMatrix::from_entries(
            2,
            3,
            5,
            vec![
                RatingEntry {
                    user: 0,
                    item: 0,
                    star: 4,
                },
                RatingEntry {
                    user: 1,
                    item: 0,
                    star: 2,
                },
                RatingEntry {
                    user: 0,
                    item: 2,
                    star: 5,
                },
            ],
        )
        .unwrap();
        let p = Predictor::item_mean(&m).unwrap();
        assert_eq!(p.predict(0, 0).unwrap(), 3.0);
        assert_eq!(p.predict(1, 2).unwrap(), 5.0);
        // item 1 unrated → global mean (11/3)
        assert!((p.predict(0, 1).unwrap() - 11.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_random_is_pure_and_in_range() {
        let p = Predictor::uniform_random(9, 5);
        let a = p.predict(3, 7).unwrap();
        let b = p.predict(3, 7).unwrap();
        assert_eq!(a, b);
        assert!((1.0..=5.0).contains(&a));
        assert_ne!(p.predict(3, 7).unwrap(), p.predict(3, 8).unwrap());
    }
}
