//! Latent factor model: user and item embeddings scored by dot product.

use rand::distributions::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Lower bound of the factor initialization range. Keeping entries away
/// from zero keeps initial dot products strictly positive, which the
/// log-likelihood trainers divide by.
pub const INIT_LOW: f64 = 0.01;
pub const INIT_HIGH: f64 = 1.0;

/// User matrix U (n_users × dim) and item matrix V (n_items × dim),
/// stored row-major. Predictions are row dot products.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    dim: usize,
    n_users: usize,
    n_items: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FactorModel {
    /// Builds a model from explicit rows. All rows must share one length.
    pub fn from_rows(u_rows: Vec<Vec<f64>>, v_rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = u_rows
            .first()
            .or(v_rows.first())
            .map(|r| r.len())
            .unwrap_or(0);
        if dim == 0 || u_rows.is_empty() || v_rows.is_empty() {
            return Err(Error::invalid("factor model needs nonempty U and V rows"));
        }
        if u_rows.iter().chain(v_rows.iter()).any(|r| r.len() != dim) {
            return Err(Error::mismatch("factor rows must all share one dimension"));
        }
        Ok(Self {
            dim,
            n_users: u_rows.len(),
            n_items: v_rows.len(),
            u: u_rows.into_iter().flatten().collect(),
            v: v_rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn user_row(&self, user: usize) -> &[f64] {
        &self.u[user * self.dim..(user + 1) * self.dim]
    }

    pub fn item_row(&self, item: usize) -> &[f64] {
        &self.v[item * self.dim..(item + 1) * self.dim]
    }

    pub(crate) fn user_row_mut(&mut self, user: usize) -> &mut [f64] {
        &mut self.u[user * self.dim..(user + 1) * self.dim]
    }

    /// Mutable borrows of one user row and one item row at once.
    pub(crate) fn pair_rows_mut(&mut self, user: usize, item: usize) -> (&mut [f64], &mut [f64]) {
        let d = self.dim;
        (
            &mut self.u[user * d..(user + 1) * d],
            &mut self.v[item * d..(item + 1) * d],
        )
    }

    /// Mutable borrows of two distinct item rows at once.
    pub(crate) fn item_rows_mut(&mut self, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
        assert_ne!(a, b, "item rows must be distinct");
        let d = self.dim;
        if a < b {
            let (lo, hi) = self.v.split_at_mut(b * d);
            (&mut lo[a * d..(a + 1) * d], &mut hi[..d])
        } else {
            let (lo, hi) = self.v.split_at_mut(a * d);
            let item_b = &mut lo[b * d..(b + 1) * d];
            (&mut hi[..d], item_b)
        }
    }

    pub fn all_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

/// Draws every factor entry i.i.d. uniform on (0.01, 1.0), deterministically
/// for a given seed.
pub fn init_factors(n_users: usize, n_items: usize, dim: usize, seed: u64) -> Result<FactorModel> {
    if n_users == 0 || n_items == 0 || dim == 0 {
        return Err(Error::invalid(
            "init_factors requires nonzero counts and dimension",
        ));
    }
    let mut rng = rng_from_seed(seed);
    let dist = Uniform::new(INIT_LOW, INIT_HIGH);
    let u: Vec<f64> = (0..n_users * dim).map(|_| dist.sample(&mut rng)).collect();
    let v: Vec<f64> = (0..n_items * dim).map(|_| dist.sample(&mut rng)).collect();
    Ok(FactorModel {
        dim,
        n_users,
        n_items,
        u,
        v,
    })
}

/// U_user · V_item.
pub fn dot_predict(model: &FactorModel, user: usize, item: usize) -> Result<f64> {
    if user >= model.n_users || item >= model.n_items {
        return Err(Error::invalid(format!(
            "pair ({}, {}) out of range for {}x{} model",
            user, item, model.n_users, model.n_items
        )));
    }
    Ok(dot(model.user_row(user), model.item_row(item)))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
