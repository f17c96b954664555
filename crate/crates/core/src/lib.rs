//! Rating-value-agnostic recommenders and voting tally simulation.
//!
//! The crate trains factor models that never read star values (ZeroMat),
//! pairwise rankers built on Pareto and Skellam pair probabilities, and a
//! classic matrix factorization baseline, then measures how well
//! Borda-count and range-voting tallies can be predicted from the rated
//! incidence pattern alone. All seeded operations use one portable
//! generator and are bit-reproducible.

pub mod baselines;
pub mod config;
pub mod error;
pub mod factors;
pub mod matrix;
pub mod metrics;
pub mod pareto;
pub mod rng;
pub mod skellam;
pub mod voting;
pub mod zeromat;

pub use baselines::{mf_train, Predictor};
pub use config::{TrainConfig, TrainTrace, DEFAULT_EPS, PMF_FLOOR};
pub use error::{Error, Result};
pub use factors::{dot_predict, init_factors, FactorModel};
pub use matrix::{split_holdout, strip_values, IncidencePattern, RatingEntry, RatingMatrix};
pub use metrics::{fairness_popularity, kendall_tau, mae, pairwise_accuracy, EvalReport};
pub use pareto::{ppr_loss, ppr_train, ppr_update, RankTriple};
pub use rng::{derive_seed, rng_from_seed, SeededRng};
pub use skellam::{
    bessel_i, intensity, skellam_loss, skellam_pmf, skellam_pmf_int, skellam_train, SkellamParams,
};
pub use voting::{
    borda_tally, claim_experiment, generate_synthetic, predict_tally_agnostic, range_tally,
    zipf_star_mean, zipf_star_sample, AgnosticPrediction, ClaimReport, Election, OrdinalBallot,
    SynthSpec, Tally,
};
pub use zeromat::{zeromat_loglik, zeromat_train, zeromat_update, ZeroMatState};
