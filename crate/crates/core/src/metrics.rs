//! Evaluation metrics: MAE, popularity-bias fairness, pairwise ranking
//! accuracy, and Kendall tau over rankings.

use std::collections::HashMap;

use crate::baselines::Predictor;
use crate::error::{Error, Result};
use crate::matrix::RatingMatrix;

/// One evaluation run, the unit of CLI output.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub algo: String,
    pub mae: f64,
    pub fairness: f64,
    pub pairwise_accuracy: f64,
    pub kendall_tau: Option<f64>,
    pub n_test: usize,
    pub seed: u64,
    pub runtime_ms: u64,
}

/// Mean absolute error over test entries, with predictions clamped to
/// [1, scale] first so scale drift is not conflated with ranking error.
pub fn mae(predictor: &Predictor, test: &RatingMatrix) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::invalid("MAE over an empty test set is undefined"));
    }
    let scale = test.scale() as f64;
    let mut total = 0.0;
    for e in test.entries() {
        let pred = predictor.predict(e.user, e.item)?.clamp(1.0, scale);
        total += (pred - e.star as f64).abs();
    }
    Ok(total / test.len() as f64)
}

/// Popularity bias: |Pearson correlation| between per-item rating count
/// and per-item mean predicted score over all users. Zero variance on
/// either side scores 0 (a constant predictor is perfectly fair).
pub fn fairness_popularity(predictor: &Predictor, matrix: &RatingMatrix) -> Result<f64> {
    if matrix.n_items() < 2 {
        return Err(Error::invalid("fairness needs at least two items"));
    }
    let popularity: Vec<f64> = (0..matrix.n_items())
        .map(|i| matrix.item_count(i) as f64)
        .collect();
    let mut mean_scores = Vec::with_capacity(matrix.n_items());
    for item in 0..matrix.n_items() {
        let mut sum = 0.0;
        for user in 0..matrix.n_users() {
            sum += predictor.predict(user, item)?;
        }
        mean_scores.push(sum / matrix.n_users() as f64);
    }
    Ok(pearson(&popularity, &mean_scores).abs())
}

/// Pearson correlation; 0 when either side has zero variance.
fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return 0.0;
    }
    cov / (var_x * var_y).sqrt()
}

/// Fraction of within-user strict preference pairs the predictor orders
/// correctly; prediction ties count one half.
pub fn pairwise_accuracy(predictor: &Predictor, test: &RatingMatrix) -> Result<f64> {
    let mut correct = 0.0;
    let mut total = 0u64;
    for user in 0..test.n_users() {
        let entries: Vec<_> = test.user_entries(user).collect();
        let mut preds = Vec::with_capacity(entries.len());
        for e in &entries {
            preds.push(predictor.predict(user, e.item)?);
        }
        for (a, &pred_a) in entries.iter().zip(&preds) {
            for (b, &pred_b) in entries.iter().zip(&preds) {
                if a.star > b.star {
                    total += 1;
                    if pred_a > pred_b {
                        correct += 1.0;
                    } else if pred_a == pred_b {
                        correct += 0.5;
                    }
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::invalid("no strict preference pair in the test set"));
    }
    Ok(correct / total as f64)
}

/// Kendall tau-a between two rankings of one id set:
/// (concordant − discordant) / C(n, 2).
pub fn kendall_tau(ranking_a: &[usize], ranking_b: &[usize]) -> Result<f64> {
    if ranking_a.len() != ranking_b.len() {
        return Err(Error::invalid(format!(
            "rankings have different lengths: {} vs {}",
            ranking_a.len(),
            ranking_b.len()
        )));
    }
    if ranking_a.len() < 2 {
        return Err(Error::invalid("kendall tau needs at least two ids"));
    }
    let pos_of = |ranking: &[usize]| -> Result<HashMap<usize, usize>> {
        let mut map = HashMap::with_capacity(ranking.len());
        for (pos, &id) in ranking.iter().enumerate() {
            if map.insert(id, pos).is_some() {
                return Err(Error::invalid(format!("duplicate id {} in ranking", id)));
            }
        }
        Ok(map)
    };
    let pos_a = pos_of(ranking_a)?;
    let pos_b = pos_of(ranking_b)?;
    if ranking_a.iter().any(|id| !pos_b.contains_key(id)) {
        return Err(Error::invalid("rankings cover different id sets"));
    }
    let ids: Vec<usize> = ranking_a.to_vec();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for (idx, &x) in ids.iter().enumerate() {
        for &y in &ids[idx + 1..] {
            let da = pos_a[&x] as i64 - pos_a[&y] as i64;
            let db = pos_b[&x] as i64 - pos_b[&y] as i64;
            if da * db > 0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n = ids.len() as i64;
    Ok((concordant - discordant) as f64 / (n * (n - 1) / 2) as f64)
}
