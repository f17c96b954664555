//! Skellam rank: pairwise cross-user ranking whose pair probability is a
//! Skellam density over user rating intensities.
//!
//! Each user gets an intensity `E = mean(rating)/scale ∈ (0, 1]`. For a
//! user pair (i, w) the density is
//!
//! `pmf(E_i, E_w) = e^(−(E_i+E_w)) · (E_i/E_w)^(ν/2) · I_ν(2√(E_i·E_w))`
//!
//! with ν = E_i − E_w and I the modified Bessel function of the first kind
//! evaluated by its gamma-generalized series. Training descends the
//! negative log of sampled pair terms, with gradients flowing through
//! intensities computed from clamped model predictions.

mod bessel;

pub use bessel::{bessel_i, digamma, MAX_TERMS};

use std::collections::HashSet;
use std::time::Instant;

use crate::config::{TrainConfig, TrainTrace, PMF_FLOOR};
use crate::error::{Error, Result};
use crate::factors::{dot, init_factors, FactorModel};
use crate::matrix::RatingMatrix;
use crate::pareto::has_strict_pair;
use crate::rng::{derive_seed, rng_from_seed, sample_distinct};

const SAMPLE_STREAM: u64 = 0x5c;

/// Intensities of a user pair. Order and argument of the Bessel factor are
/// always derived from the stored intensities, never cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkellamParams {
    e_i: f64,
    e_w: f64,
}

impl SkellamParams {
    /// Clamps both intensities below at `eps`.
    pub fn new(e_i: f64, e_w: f64, eps: f64) -> Self {
        Self {
            e_i: e_i.max(eps),
            e_w: e_w.max(eps),
        }
    }

    pub fn e_i(&self) -> f64 {
        self.e_i
    }

    pub fn e_w(&self) -> f64 {
        self.e_w
    }

    /// Bessel order ν = E_i − E_w.
    pub fn order(&self) -> f64 {
        self.e_i - self.e_w
    }

    /// Bessel argument x = 2√(E_i·E_w).
    pub fn arg(&self) -> f64 {
        2.0 * (self.e_i * self.e_w).sqrt()
    }
}

/// Mean rating normalized by the scale, clamped below at `eps`.
/// Accepts real-valued inputs so predicted ratings can be fed through it.
pub fn intensity(values: &[f64], scale: u32, eps: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid(
            "intensity of an empty rating list is undefined",
        ));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok((mean / scale as f64).max(eps))
}

/// Skellam density at the pair's own order ν = E_i − E_w.
pub fn skellam_pmf(params: &SkellamParams) -> Result<f64> {
    let nu = params.order();
    let value = (-(params.e_i + params.e_w)).exp()
        * (params.e_i / params.e_w).powf(nu / 2.0)
        * bessel_i(nu, params.arg())?;
    if !value.is_finite() {
        return Err(Error::divergence(format!(
            "non-finite skellam pmf for intensities ({}, {})",
            params.e_i, params.e_w
        )));
    }
    Ok(value)
}

/// Standard integer-order Skellam PMF: probability that a Poisson(mu_i)
/// count exceeds a Poisson(mu_w) count by exactly `k`. Sums to one over k.
pub fn skellam_pmf_int(k: i64, mu_i: f64, mu_w: f64) -> Result<f64> {
    if !(mu_i > 0.0 && mu_w > 0.0) {
        return Err(Error::invalid(
            "integer skellam pmf requires positive intensities",
        ));
    }
    let value = (-(mu_i + mu_w)).exp()
        * (mu_i / mu_w).powf(k as f64 / 2.0)
        * bessel_i(k.unsigned_abs() as f64, 2.0 * (mu_i * mu_w).sqrt())?;
    Ok(value)
}

/// Per-user intensities of the model's predictions: dot products clamped
/// to [eps, scale], averaged per user, normalized by the scale.
pub fn predicted_intensities(
    model: &FactorModel,
    matrix: &RatingMatrix,
    eps: f64,
) -> Result<Vec<f64>> {
    check_dims(model, matrix)?;
    let scale = matrix.scale() as f64;
    (0..matrix.n_users())
        .map(|user| {
            let preds: Vec<f64> = matrix
                .user_entries(user)
                .map(|e| dot(model.user_row(user), model.item_row(e.item)).clamp(eps, scale))
                .collect();
            if preds.is_empty() {
                return Err(Error::invalid(format!(
                    "user {} has no ratings; its intensity is undefined",
                    user
                )));
            }
            intensity(&preds, matrix.scale(), eps)
        })
        .collect()
}

/// Number of ordered within-user pairs (j, k) with R[u,j] > R[u,k].
fn strict_pair_count(matrix: &RatingMatrix, user: usize) -> u64 {
    let stars: Vec<u32> = matrix.user_entries(user).map(|e| e.star).collect();
    let mut count = 0;
    for a in &stars {
        for b in &stars {
            if a > b {
                count += 1;
            }
        }
    }
    count
}

/// Full negative-log Skellam loss:
/// `Σ_i Σ_w Σ_{(j,k): R[i,j]>R[i,k]} −log(max(pmf(E_i, E_w), floor))`.
///
/// The inner term depends on (i, w) only, so the quadruple sum is computed
/// as `Σ_i strict_pairs(i) · Σ_w term(i, w)`.
pub fn skellam_loss(model: &FactorModel, matrix: &RatingMatrix, eps: f64) -> Result<f64> {
    let intensities = predicted_intensities(model, matrix, eps)?;
    let mut loss = 0.0;
    for i in 0..matrix.n_users() {
        let pairs = strict_pair_count(matrix, i) as f64;
        if pairs == 0.0 {
            continue;
        }
        for &e_w in &intensities {
            let pmf = skellam_pmf(&SkellamParams::new(intensities[i], e_w, eps))?;
            loss += pairs * -(pmf.max(PMF_FLOOR)).ln();
        }
    }
    Ok(loss)
}

/// Everything the chain rule needs about one user's predicted intensity.
struct IntensityInfo {
    value: f64,
    n_rated: usize,
    /// Σ over interior rated items of V_j'[t].
    sum_v_interior: Vec<f64>,
    /// Rated items whose prediction lies strictly inside (eps, scale).
    interior_items: HashSet<usize>,
    /// False when the intensity itself sits on its lower clamp.
    active: bool,
}

fn intensity_info(
    model: &FactorModel,
    matrix: &RatingMatrix,
    user: usize,
    eps: f64,
) -> Result<IntensityInfo> {
    let scale = matrix.scale() as f64;
    let dim = model.dim();
    let mut sum_v_interior = vec![0.0; dim];
    let mut interior_items = HashSet::new();
    let mut sum_pred = 0.0;
    let mut n_rated = 0usize;
    for e in matrix.user_entries(user) {
        let raw = dot(model.user_row(user), model.item_row(e.item));
        sum_pred += raw.clamp(eps, scale);
        n_rated += 1;
        if raw > eps && raw < scale {
            interior_items.insert(e.item);
            for (acc, v) in sum_v_interior.iter_mut().zip(model.item_row(e.item)) {
                *acc += v;
            }
        }
    }
    if n_rated == 0 {
        return Err(Error::invalid(format!(
            "user {} has no ratings; its intensity is undefined",
            user
        )));
    }
    let mean_norm = sum_pred / n_rated as f64 / scale;
    Ok(IntensityInfo {
        value: mean_norm.max(eps),
        n_rated,
        sum_v_interior,
        interior_items,
        active: mean_norm > eps,
    })
}

/// Gradient of one `−log pmf(E_i, E_w)` term with respect to the four
/// touched rows.
pub struct TermGradient {
    pub du_i: Vec<f64>,
    pub du_w: Vec<f64>,
    pub dv_j: Vec<f64>,
    pub dv_k: Vec<f64>,
}

/// Value of the sampled-pair term for users (i, w) under the current model.
pub fn term_value(
    model: &FactorModel,
    matrix: &RatingMatrix,
    user_i: usize,
    user_w: usize,
    eps: f64,
) -> Result<f64> {
    let e_i = intensity_info(model, matrix, user_i, eps)?.value;
    let e_w = intensity_info(model, matrix, user_w, eps)?.value;
    let pmf = skellam_pmf(&SkellamParams::new(e_i, e_w, eps))?;
    Ok(-(pmf.max(PMF_FLOOR)).ln())
}

/// Chain-rule gradient of `term_value` with respect to U_i, U_w, V_j, V_k.
///
/// Intensities are means of clamped predictions, so
/// `∂E_i/∂U_i = Σ_{j' interior} V_j' / (n_i·scale)` and
/// `∂E_i/∂V_x = U_i/(n_i·scale)` when user i rated x with an interior
/// prediction. Contributions through both intensities are summed, which
/// also covers the self-paired case i = w.
pub fn term_gradient(
    model: &FactorModel,
    matrix: &RatingMatrix,
    user_i: usize,
    user_w: usize,
    item_j: usize,
    item_k: usize,
    eps: f64,
) -> Result<TermGradient> {
    let info_i = intensity_info(model, matrix, user_i, eps)?;
    let info_w = intensity_info(model, matrix, user_w, eps)?;
    let (pmf, dlog_da, dlog_db) = bessel::pmf_with_log_gradient(info_i.value, info_w.value)?;
    // T = −log(max(pmf, floor)); below the floor the term is constant.
    let (dt_da, dt_db) = if pmf > PMF_FLOOR {
        (-dlog_da, -dlog_db)
    } else {
        (0.0, 0.0)
    };
    let dim = model.dim();
    let scale = matrix.scale() as f64;

    let coef_i = if info_i.active {
        dt_da / (info_i.n_rated as f64 * scale)
    } else {
        0.0
    };
    let coef_w = if info_w.active {
        dt_db / (info_w.n_rated as f64 * scale)
    } else {
        0.0
    };

    let mut du_i = vec![0.0; dim];
    let mut du_w = vec![0.0; dim];
    for t in 0..dim {
        du_i[t] = coef_i * info_i.sum_v_interior[t];
        du_w[t] = coef_w * info_w.sum_v_interior[t];
    }
    // When i == w the term is T(E_i, E_i): both partials flow into U_i.
    // The caller applies du_i and du_w to the same row, which sums them.

    let item_grad = |item: usize| -> Vec<f64> {
        let mut g = vec![0.0; dim];
        if info_i.interior_items.contains(&item) {
            for (t, u) in model.user_row(user_i).iter().enumerate() {
                g[t] += coef_i * u;
            }
        }
        if info_w.interior_items.contains(&item) {
            for (t, u) in model.user_row(user_w).iter().enumerate() {
                g[t] += coef_w * u;
            }
        }
        g
    };
    let dv_j = item_grad(item_j);
    let dv_k = item_grad(item_k);
    Ok(TermGradient {
        du_i,
        du_w,
        dv_j,
        dv_k,
    })
}

fn apply_term(
    model: &mut FactorModel,
    user_i: usize,
    user_w: usize,
    item_j: usize,
    item_k: usize,
    grad: &TermGradient,
    lr: f64,
) -> Result<()> {
    let mut finite = true;
    {
        let row = model.user_row_mut(user_i);
        for (x, g) in row.iter_mut().zip(&grad.du_i) {
            *x -= lr * g;
            finite &= x.is_finite();
        }
    }
    {
        let row = model.user_row_mut(user_w);
        for (x, g) in row.iter_mut().zip(&grad.du_w) {
            *x -= lr * g;
            finite &= x.is_finite();
        }
    }
    {
        let (vj, vk) = model.item_rows_mut(item_j, item_k);
        for t in 0..grad.dv_j.len() {
            vj[t] -= lr * grad.dv_j[t];
            vk[t] -= lr * grad.dv_k[t];
            finite &= vj[t].is_finite() && vk[t].is_finite();
        }
    }
    if !finite {
        return Err(Error::divergence(format!(
            "non-finite factor after skellam step on users ({}, {}), items ({}, {})",
            user_i, user_w, item_j, item_k
        )));
    }
    Ok(())
}

/// Skellam rank trainer.
///
/// Per epoch: sample users; pair each sampled user i with the next sampled
/// user (round-robin) as w; sample items from i's rating list, sort them by
/// decreasing rating, and take one descent step per strict-preference pair.
/// The trace records the full loss after each epoch. Predictions are
/// reconstructed as dot products of the returned factors.
pub fn skellam_train(
    matrix: &RatingMatrix,
    config: &TrainConfig,
) -> Result<(FactorModel, TrainTrace)> {
    config.validate()?;
    if !has_strict_pair(matrix) {
        return Err(Error::invalid(
            "all ratings tied: no strict preference pair to rank",
        ));
    }
    let mut model = init_factors(matrix.n_users(), matrix.n_items(), config.dim, config.seed)?;
    let mut rng = rng_from_seed(derive_seed(config.seed, SAMPLE_STREAM));
    let mut trace = TrainTrace::new();
    for epoch in 0..config.epochs {
        let started = Instant::now();
        let users: Vec<usize> = sample_distinct(&mut rng, matrix.n_users(), config.user_sample)
            .into_iter()
            .filter(|&u| matrix.user_count(u) > 0)
            .collect();
        for (pos, &user_i) in users.iter().enumerate() {
            let user_w = users[(pos + 1) % users.len()];
            let entries: Vec<_> = matrix.user_entries(user_i).collect();
            if entries.len() < 2 {
                continue;
            }
            let picked = sample_distinct(&mut rng, entries.len(), config.item_sample);
            let mut sampled: Vec<_> = picked.iter().map(|&p| entries[p]).collect();
            sampled.sort_by(|a, b| b.star.cmp(&a.star).then(a.item.cmp(&b.item)));
            for p in 0..sampled.len() {
                for q in p + 1..sampled.len() {
                    if sampled[p].star > sampled[q].star {
                        let grad = term_gradient(
                            &model,
                            matrix,
                            user_i,
                            user_w,
                            sampled[p].item,
                            sampled[q].item,
                            config.eps,
                        )?;
                        apply_term(
                            &mut model,
                            user_i,
                            user_w,
                            sampled[p].item,
                            sampled[q].item,
                            &grad,
                            config.lr,
                        )
                        .map_err(|e| Error::divergence(format!("epoch {}: {}", epoch, e)))?;
                    }
                }
            }
        }
        let loss = skellam_loss(&model, matrix, config.eps)?;
        trace.push_epoch(loss, started.elapsed());
    }
    Ok((model, trace))
}

fn check_dims(model: &FactorModel, matrix: &RatingMatrix) -> Result<()> {
    if model.n_users() != matrix.n_users() || model.n_items() != matrix.n_items() {
        return Err(Error::mismatch(format!(
            "model is {}x{} but matrix is {}x{}",
            model.n_users(),
            model.n_items(),
            matrix.n_users(),
            matrix.n_items()
        )));
    }
    Ok(())
}
