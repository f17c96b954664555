//! Pareto pairwise ranking: learning-to-rank with inverse-power pairwise
//! terms over within-user preference margins.
//!
//! For a triple (user i, preferred item j, other item k) with margin
//! `g = max(U_i·(V_j − V_k), ε)` the update rules are
//!
//! ```text
//! U_i ← U_i + φα(V_j − V_k)/g
//! V_j ← V_j + φα·U_i/g          (pre-update U_i in both item rules)
//! V_k ← V_k − φα·U_i/g
//! ```
//!
//! and the reported loss is `Σ 1/gᵅ` over all strict-preference triples.

use std::time::Instant;

use crate::config::{TrainConfig, TrainTrace};
use crate::error::{Error, Result};
use crate::factors::{dot, init_factors, FactorModel};
use crate::matrix::RatingMatrix;
use crate::rng::{derive_seed, rng_from_seed, sample_distinct};

const SAMPLE_STREAM: u64 = 0x70;

/// A within-user strict preference: the user rated `preferred_item`
/// strictly above `other_item`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankTriple {
    pub user: usize,
    pub preferred_item: usize,
    pub other_item: usize,
}

/// Sum of `1/max(U_i·V_j − U_i·V_k, ε)^α` over every triple (i, j, k)
/// where the matrix has `R[i,j] > R[i,k]`.
pub fn ppr_loss(model: &FactorModel, matrix: &RatingMatrix, alpha: f64, eps: f64) -> Result<f64> {
    check_dims(model, matrix)?;
    let mut loss = 0.0;
    for user in 0..matrix.n_users() {
        let entries: Vec<_> = matrix.user_entries(user).collect();
        let u_row = model.user_row(user);
        let scores: Vec<f64> = entries
            .iter()
            .map(|e| dot(u_row, model.item_row(e.item)))
            .collect();
        for (a, &score_a) in entries.iter().zip(&scores) {
            for (b, &score_b) in entries.iter().zip(&scores) {
                if a.star > b.star {
                    loss += (score_a - score_b).max(eps).powf(-alpha);
                }
            }
        }
    }
    Ok(loss)
}

/// One ascent step on a triple's margin. All three rules read the
/// pre-update rows.
pub fn ppr_update(
    model: &mut FactorModel,
    triple: &RankTriple,
    lr: f64,
    alpha: f64,
    eps: f64,
) -> Result<()> {
    if triple.preferred_item == triple.other_item {
        return Err(Error::invalid("rank triple items must be distinct"));
    }
    let u_old: Vec<f64> = model.user_row(triple.user).to_vec();
    let g = (dot(&u_old, model.item_row(triple.preferred_item))
        - dot(&u_old, model.item_row(triple.other_item)))
    .max(eps);
    let coef = lr * alpha / g;
    let mut finite = true;
    {
        let vj_old = model.item_row(triple.preferred_item).to_vec();
        let vk_old = model.item_row(triple.other_item).to_vec();
        let u_row = model.user_row_mut(triple.user);
        for t in 0..u_old.len() {
            u_row[t] += coef * (vj_old[t] - vk_old[t]);
            finite &= u_row[t].is_finite();
        }
    }
    {
        let (vj, vk) = model.item_rows_mut(triple.preferred_item, triple.other_item);
        for t in 0..u_old.len() {
            let step = coef * u_old[t];
            vj[t] += step;
            vk[t] -= step;
            finite &= vj[t].is_finite() && vk[t].is_finite();
        }
    }
    if !finite {
        return Err(Error::divergence(format!(
            "non-finite factor after triple ({}, {}, {})",
            triple.user, triple.preferred_item, triple.other_item
        )));
    }
    Ok(())
}

/// Epoch loop: sample users, sample each user's rated items, apply one
/// update per strict-preference ordered pair among the sampled items.
/// The trace records the full loss after each epoch.
pub fn ppr_train(matrix: &RatingMatrix, config: &TrainConfig) -> Result<(FactorModel, TrainTrace)> {
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
        let users = sample_distinct(&mut rng, matrix.n_users(), config.user_sample);
        for &user in &users {
            let entries: Vec<_> = matrix.user_entries(user).collect();
            if entries.len() < 2 {
                continue;
            }
            let picked = sample_distinct(&mut rng, entries.len(), config.item_sample);
            for &a in &picked {
                for &b in &picked {
                    if entries[a].star > entries[b].star {
                        let triple = RankTriple {
                            user,
                            preferred_item: entries[a].item,
                            other_item: entries[b].item,
                        };
                        ppr_update(&mut model, &triple, config.lr, config.alpha, config.eps)
                            .map_err(|e| Error::divergence(format!("epoch {}: {}", epoch, e)))?;
                    }
                }
            }
        }
        let loss = ppr_loss(&model, matrix, config.alpha, config.eps)?;
        trace.push_epoch(loss, started.elapsed());
    }
    Ok((model, trace))
}

pub(crate) fn has_strict_pair(matrix: &RatingMatrix) -> bool {
    (0..matrix.n_users()).any(|user| {
        let mut stars = matrix.user_entries(user).map(|e| e.star);
        match stars.next() {
            Some(first) => stars.any(|s| s != first),
            None => false,
        }
    })
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
