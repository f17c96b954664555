//! Sparse integer star ratings and their value-free incidence view.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// One observed rating: `user` gave `item` `star` stars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingEntry {
    pub user: usize,
    pub item: usize,
    pub star: u32,
}

/// Sparse user×item star ratings with adjacency indexes kept consistent
/// with the entry list at all times. Immutable after construction.
#[derive(Debug, Clone)]
pub struct RatingMatrix {
    n_users: usize,
    n_items: usize,
    scale: u32,
    entries: Vec<RatingEntry>,
    by_user: Vec<Vec<usize>>, // entry indices per user
    by_item: Vec<Vec<usize>>, // entry indices per item
}

impl RatingMatrix {
    /// Validates and indexes a list of entries. Each (user, item) pair may
    /// appear at most once and stars must lie in `[1, scale]`.
    pub fn from_entries(
        n_users: usize,
        n_items: usize,
        scale: u32,
        entries: Vec<RatingEntry>,
    ) -> Result<Self> {
        if n_users == 0 || n_items == 0 {
            return Err(Error::invalid(
                "matrix must have at least one user and one item",
            ));
        }
        if scale < 1 {
            return Err(Error::invalid("rating scale must be >= 1"));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        let mut by_user = vec![Vec::new(); n_users];
        let mut by_item = vec![Vec::new(); n_items];
        for (idx, e) in entries.iter().enumerate() {
            if e.user >= n_users || e.item >= n_items {
                return Err(Error::invalid(format!(
                    "entry ({}, {}) out of range for {}x{} matrix",
                    e.user, e.item, n_users, n_items
                )));
            }
            if e.star < 1 || e.star > scale {
                return Err(Error::invalid(format!(
                    "star {} for ({}, {}) outside [1, {}]",
                    e.star, e.user, e.item, scale
                )));
            }
            if !seen.insert((e.user, e.item)) {
                return Err(Error::invalid(format!(
                    "duplicate rating for pair ({}, {})",
                    e.user, e.item
                )));
            }
            by_user[e.user].push(idx);
            by_item[e.item].push(idx);
        }
        Ok(Self {
            n_users,
            n_items,
            scale,
            entries,
            by_user,
            by_item,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Maximum star value on this matrix's scale.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[RatingEntry] {
        &self.entries
    }

    /// Entries rated by `user`, in insertion order.
    pub fn user_entries(&self, user: usize) -> impl Iterator<Item = &RatingEntry> {
        self.by_user[user].iter().map(move |&i| &self.entries[i])
    }

    /// Entries rating `item`, in insertion order.
    pub fn item_entries(&self, item: usize) -> impl Iterator<Item = &RatingEntry> {
        self.by_item[item].iter().map(move |&i| &self.entries[i])
    }

    /// Number of ratings a user has issued.
    pub fn user_count(&self, user: usize) -> usize {
        self.by_user[user].len()
    }

    /// Number of raters an item has drawn (its popularity).
    pub fn item_count(&self, item: usize) -> usize {
        self.by_item[item].len()
    }

    /// Returns a matrix with the same pairs but star values permuted among
    /// the entries. Used by the value-agnosticism audit.
    pub fn permute_stars(&self, seed: u64) -> RatingMatrix {
        let mut stars: Vec<u32> = self.entries.iter().map(|e| e.star).collect();
        let mut rng = rng_from_seed(seed);
        stars.shuffle(&mut rng);
        let entries = self
            .entries
            .iter()
            .zip(stars)
            .map(|(e, star)| RatingEntry {
                user: e.user,
                item: e.item,
                star,
            })
            .collect();
        RatingMatrix::from_entries(self.n_users, self.n_items, self.scale, entries)
            .expect("permuting stars preserves validity")
    }
}

/// The rated-pairs pattern of a matrix with star values dropped: the input
/// a data-agnostic trainer is allowed to see.
#[derive(Debug, Clone)]
pub struct IncidencePattern {
    n_users: usize,
    n_items: usize,
    pairs: Vec<(usize, usize)>,
    by_user: Vec<Vec<usize>>, // item ids per user
    item_counts: Vec<usize>,
}

impl IncidencePattern {
    pub fn new(n_users: usize, n_items: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if n_users == 0 || n_items == 0 {
            return Err(Error::invalid(
                "pattern must have at least one user and one item",
            ));
        }
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut by_user = vec![Vec::new(); n_users];
        let mut item_counts = vec![0usize; n_items];
        for &(u, i) in &pairs {
            if u >= n_users || i >= n_items {
                return Err(Error::invalid(format!(
                    "pair ({}, {}) out of range for {}x{} pattern",
                    u, i, n_users, n_items
                )));
            }
            if !seen.insert((u, i)) {
                return Err(Error::invalid(format!("duplicate pair ({}, {})", u, i)));
            }
            by_user[u].push(i);
            item_counts[i] += 1;
        }
        Ok(Self {
            n_users,
            n_items,
            pairs,
            by_user,
            item_counts,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Item ids rated by `user`.
    pub fn user_items(&self, user: usize) -> &[usize] {
        &self.by_user[user]
    }

    /// Number of raters an item has drawn.
    pub fn item_count(&self, item: usize) -> usize {
        self.item_counts[item]
    }
}

/// Drops star values, keeping exactly the rated pairs.
pub fn strip_values(matrix: &RatingMatrix) -> IncidencePattern {
    let pairs = matrix.entries().iter().map(|e| (e.user, e.item)).collect();
    IncidencePattern::new(matrix.n_users(), matrix.n_items(), pairs)
        .expect("a valid matrix always strips to a valid pattern")
}

/// Splits entries uniformly at random into (train, test).
///
/// Train size is round-half-up of `fraction * N`. Both halves keep the
/// original user/item counts and scale; their entry sets partition the
/// input.
pub fn split_holdout(
    matrix: &RatingMatrix,
    train_fraction: f64,
    seed: u64,
) -> Result<(RatingMatrix, RatingMatrix)> {
    if matrix.is_empty() {
        return Err(Error::invalid("cannot split an empty matrix"));
    }
    if train_fraction.is_nan() || train_fraction <= 0.0 || train_fraction >= 1.0 {
        return Err(Error::invalid(format!(
            "train fraction {} outside (0, 1)",
            train_fraction
        )));
    }
    let n = matrix.len();
    let train_size = (train_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    order.shuffle(&mut rng);
    let mut train = Vec::with_capacity(train_size);
    let mut test = Vec::with_capacity(n - train_size);
    for (pos, &idx) in order.iter().enumerate() {
        if pos < train_size {
            train.push(matrix.entries()[idx]);
        } else {
            test.push(matrix.entries()[idx]);
        }
    }
    let mk = |entries| {
        RatingMatrix::from_entries(matrix.n_users(), matrix.n_items(), matrix.scale(), entries)
    };
    Ok((mk(train)?, mk(test)?))
}
