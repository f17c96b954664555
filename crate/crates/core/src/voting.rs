//! Zipf-distributed rating generation, Borda and range-voting tallies, the
//! value-free tally predictors, and the predictability experiment.
//!
//! The generator couples audience size to quality: an item of true class s
//! draws s times the raters of a class-1 item in expectation, so a 5-star
//! item draws five times the audience of a 1-star item on a 5-star scale.
//! That coupling is a modeling assumption and is what makes value-free
//! tally prediction work; reports label it as such.

use rand::Rng;

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::factors::dot;
use crate::matrix::{IncidencePattern, RatingEntry, RatingMatrix};
use crate::metrics::kendall_tau;
use crate::rng::{derive_seed, normal, rng_from_seed, SeededRng};
use crate::zeromat::zeromat_train;

const ZEROMAT_STREAM: u64 = 0x21;
const NULL_STREAM_BASE: u64 = 0x1000;

/// Draws a star class s ∈ [1, S] with probability s / (S(S+1)/2), so class
/// s is s times as likely as class 1.
pub fn zipf_star_sample(scale: u32, rng: &mut SeededRng) -> u32 {
    assert!(scale >= 1, "scale must be >= 1");
    let total = (scale as u64 * (scale as u64 + 1) / 2) as f64;
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for s in 1..=scale {
        cumulative += s as f64 / total;
        if u < cumulative {
            return s;
        }
    }
    scale
}

/// Expected star under the Zipf class distribution: Σ s·P(s) = (2S+1)/3.
pub fn zipf_star_mean(scale: u32) -> f64 {
    (2.0 * scale as f64 + 1.0) / 3.0
}

/// Parameters of the synthetic Zipf rating generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub scale: u32,
    /// Expected fraction of (user, item) pairs rated, in (0, 1].
    pub density: f64,
    /// Std dev of the Gaussian noise added to an item's true class.
    pub noise_sd: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items == 0 {
            return Err(Error::invalid(
                "synthetic spec needs nonzero users and items",
            ));
        }
        if self.scale < 2 {
            return Err(Error::invalid(
                "scale must be >= 2 for a nontrivial election",
            ));
        }
        if self.density.is_nan() || self.density <= 0.0 || self.density > 1.0 {
            return Err(Error::invalid(format!(
                "density {} outside (0, 1]",
                self.density
            )));
        }
        if self.noise_sd.is_nan() || self.noise_sd < 0.0 {
            return Err(Error::invalid("noise_sd must be >= 0"));
        }
        Ok(())
    }
}

/// Generates a rating matrix whose audience per star class is proportional
/// to the class value.
///
/// Each item draws a true class s via `zipf_star_sample`; every user then
/// rates it independently with probability `density·s/S̄`, S̄ = (S+1)/2,
/// and an included rating is `clamp(round(s + N(0, noise_sd)), 1, S)`.
/// `density = 1` is the degenerate full matrix: every pair is rated.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<RatingMatrix> {
    spec.validate()?;
    let s_bar = (spec.scale as f64 + 1.0) / 2.0;
    let full = spec.density == 1.0;
    if !full && spec.density * spec.scale as f64 / s_bar > 1.0 {
        return Err(Error::invalid(format!(
            "density {} implies per-user probability > 1 for class {} items",
            spec.density, spec.scale
        )));
    }
    let mut rng = rng_from_seed(spec.seed);
    let mut entries = Vec::new();
    for item in 0..spec.n_items {
        let class = zipf_star_sample(spec.scale, &mut rng);
        let p = if full {
            1.0
        } else {
            spec.density * class as f64 / s_bar
        };
        for user in 0..spec.n_users {
            let include = rng.gen::<f64>() < p;
            if include {
                let noisy = class as f64 + normal(&mut rng, spec.noise_sd);
                let star = noisy.round().clamp(1.0, spec.scale as f64) as u32;
                entries.push(RatingEntry { user, item, star });
            }
        }
    }
    RatingMatrix::from_entries(spec.n_users, spec.n_items, spec.scale, entries)
}

/// One voter's ordinal ranking, most-favorite first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalBallot {
    pub voter: usize,
    pub ranking: Vec<usize>,
}

/// A candidate set with validated ordinal ballots.
#[derive(Debug, Clone)]
pub struct Election {
    n_candidates: usize,
    ballots: Vec<OrdinalBallot>,
}

impl Election {
    /// Validates every ballot: nonempty, no duplicate candidates, ids in
    /// range. Errors name the offending ballot.
    pub fn new(n_candidates: usize, ballots: Vec<OrdinalBallot>) -> Result<Self> {
        for ballot in &ballots {
            if ballot.ranking.is_empty() {
                return Err(Error::invalid(format!(
                    "ballot of voter {} is empty",
                    ballot.voter
                )));
            }
            let mut seen = vec![false; n_candidates];
            for &c in &ballot.ranking {
                if c >= n_candidates {
                    return Err(Error::invalid(format!(
                        "ballot of voter {} names candidate {} but only {} exist",
                        ballot.voter, c, n_candidates
                    )));
                }
                if seen[c] {
                    return Err(Error::invalid(format!(
                        "ballot of voter {} ranks candidate {} twice",
                        ballot.voter, c
                    )));
                }
                seen[c] = true;
            }
        }
        Ok(Self {
            n_candidates,
            ballots,
        })
    }

    pub fn n_candidates(&self) -> usize {
        self.n_candidates
    }

    pub fn ballots(&self) -> &[OrdinalBallot] {
        &self.ballots
    }
}

/// Per-candidate scores with the induced ranking (score descending, ties
/// broken by lowest candidate id).
#[derive(Debug, Clone, PartialEq)]
pub struct Tally {
    pub scores: Vec<f64>,
    pub ranking: Vec<usize>,
}

impl Tally {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut ranking: Vec<usize> = (0..scores.len()).collect();
        ranking.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        Self { scores, ranking }
    }

    /// Highest-scoring candidate, lowest id on ties; None for an empty
    /// candidate set.
    pub fn winner(&self) -> Option<usize> {
        self.ranking.first().copied()
    }
}

/// Borda count: a ballot ranking L candidates awards L − r + 1 points to
/// its rank-r candidate; unranked candidates get nothing from that ballot.
pub fn borda_tally(election: &Election) -> Tally {
    let mut scores = vec![0.0; election.n_candidates()];
    for ballot in election.ballots() {
        let len = ballot.ranking.len();
        for (rank_index, &candidate) in ballot.ranking.iter().enumerate() {
            scores[candidate] += (len - rank_index) as f64;
        }
    }
    Tally::from_scores(scores)
}

/// Range voting: per-candidate sum of star values across voters, reading
/// the matrix as voters × candidates.
pub fn range_tally(matrix: &RatingMatrix) -> Tally {
    let mut scores = vec![0.0; matrix.n_items()];
    for e in matrix.entries() {
        scores[e.item] += e.star as f64;
    }
    Tally::from_scores(scores)
}

/// Both value-free tally predictions for an incidence pattern.
#[derive(Debug, Clone)]
pub struct AgnosticPrediction {
    /// rater_count(c) · E[star | Zipf].
    pub count_scores: Vec<f64>,
    /// Σ over the candidate's rating voters of clamped U_v·V_c from a
    /// ZeroMat model trained on the pattern.
    pub zeromat_scores: Vec<f64>,
}

/// Predicts tally scores without reading any star value: once from rater
/// counts alone, once from ZeroMat factors trained on the pattern.
pub fn predict_tally_agnostic(
    pattern: &IncidencePattern,
    scale: u32,
    zeromat_config: &TrainConfig,
) -> Result<AgnosticPrediction> {
    if pattern.is_empty() {
        return Err(Error::invalid(
            "cannot predict a tally from an empty pattern",
        ));
    }
    let expected_star = zipf_star_mean(scale);
    let count_scores: Vec<f64> = (0..pattern.n_items())
        .map(|c| pattern.item_count(c) as f64 * expected_star)
        .collect();

    let state = zeromat_train(pattern, zeromat_config)?;
    let mut zeromat_scores = vec![0.0; pattern.n_items()];
    for &(voter, candidate) in pattern.pairs() {
        let pred = dot(state.model.user_row(voter), state.model.item_row(candidate))
            .clamp(1.0, scale as f64);
        zeromat_scores[candidate] += pred;
    }
    Ok(AgnosticPrediction {
        count_scores,
        zeromat_scores,
    })
}

/// Outcome of the tally-predictability experiment.
#[derive(Debug, Clone)]
pub struct ClaimReport {
    pub spec: SynthSpec,
    pub n_permutations: usize,
    /// Kendall tau of the count predictor's ranking against the range tally.
    pub count_tau: f64,
    /// Kendall tau of the ZeroMat predictor's ranking against the range tally.
    pub zeromat_tau: f64,
    /// 99th percentile (nearest-rank) of the permutation-null taus.
    pub null_p99: f64,
    pub count_passes: bool,
    pub zeromat_passes: bool,
    /// True when every candidate drew the same rater count, which reduces
    /// the count prediction to the id tie-break order.
    pub count_degenerate: bool,
    pub truth_winner: Option<usize>,
    pub count_winner: Option<usize>,
    pub zeromat_winner: Option<usize>,
}

/// Runs the full experiment: generate ratings, tally them, predict the
/// tally from the value-free pattern, and compare each prediction's
/// Kendall tau against a seeded permutation null. Fully deterministic for
/// a given spec.
pub fn claim_experiment(spec: &SynthSpec, n_permutations: usize) -> Result<ClaimReport> {
    if n_permutations == 0 {
        return Err(Error::invalid(
            "permutation null needs at least one permutation",
        ));
    }
    let matrix = generate_synthetic(spec)?;
    if matrix.is_empty() {
        return Err(Error::invalid("generated matrix is empty; raise density"));
    }
    let truth = range_tally(&matrix);
    let pattern = crate::matrix::strip_values(&matrix);
    let zeromat_config = TrainConfig {
        seed: derive_seed(spec.seed, ZEROMAT_STREAM),
        ..TrainConfig::default()
    };
    let prediction = predict_tally_agnostic(&pattern, spec.scale, &zeromat_config)?;
    let count_tally = Tally::from_scores(prediction.count_scores.clone());
    let zeromat_tally = Tally::from_scores(prediction.zeromat_scores.clone());
    let count_tau = kendall_tau(&count_tally.ranking, &truth.ranking)?;
    let zeromat_tau = kendall_tau(&zeromat_tally.ranking, &truth.ranking)?;

    let mut null_taus = Vec::with_capacity(n_permutations);
    for perm in 0..n_permutations {
        let mut candidates: Vec<usize> = (0..matrix.n_items()).collect();
        let mut rng = rng_from_seed(derive_seed(spec.seed, NULL_STREAM_BASE + perm as u64));
        use rand::seq::SliceRandom;
        candidates.shuffle(&mut rng);
        null_taus.push(kendall_tau(&candidates, &truth.ranking)?);
    }
    null_taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Nearest-rank percentile: the ⌈0.99·n⌉-th smallest value.
    let rank = ((0.99 * n_permutations as f64).ceil() as usize).clamp(1, n_permutations);
    let null_p99 = null_taus[rank - 1];

    let counts: Vec<usize> = (0..pattern.n_items())
        .map(|c| pattern.item_count(c))
        .collect();
    let count_degenerate = counts.iter().all(|&c| c == counts[0]);

    Ok(ClaimReport {
        spec: spec.clone(),
        n_permutations,
        count_tau,
        zeromat_tau,
        null_p99,
        count_passes: count_tau > null_p99,
        zeromat_passes: zeromat_tau > null_p99,
        count_degenerate,
        truth_winner: truth.winner(),
        count_winner: count_tally.winner(),
        zeromat_winner: zeromat_tally.winner(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zipf_single_class_always_one() {
        let mut rng = rng_from_seed(0);
        for _ in 0..20 {
            assert_eq!(zipf_star_sample(1, &mut rng), 1);
        }
    }

    #[test]
    fn zipf_five_scale_frequencies() {
        // P(s) = s/15; 100k samples within 0.01 absolute of each.
        let mut rng = rng_from_seed(2024);
        let mut counts = [0u32; 5];
        let n = 100_000;
        for _ in 0..n {
            counts[(zipf_star_sample(5, &mut rng) - 1) as usize] += 1;
        }
        for s in 1..=5u32 {
            let freq = counts[(s - 1) as usize] as f64 / n as f64;
            let expect = s as f64 / 15.0;
            assert!(
                (freq - expect).abs() < 0.01,
                "class {}: frequency {} vs expected {}",
                s,
                freq,
                expect
            );
        }
        // the headline ratio: class 5 draws five times the raters of class 1
        let ratio = counts[4] as f64 / counts[0] as f64;
        assert!((ratio - 5.0).abs() < 0.5, "ratio {}", ratio);
    }

    #[test]
    fn zipf_star_mean_matches_definition() {
        assert!((zipf_star_mean(5) - 11.0 / 3.0).abs() < 1e-15);
        let direct: f64 = (1..=5).map(|s| s as f64 * s as f64 / 15.0).sum();
        assert!((zipf_star_mean(5) - direct).abs() < 1e-15);
    }

    #[test]
    fn generator_noiseless_ratings_equal_class() {
        let spec = SynthSpec {
            n_users: 40,
            n_items: 10,
            scale: 5,
            density: 0.3,
            noise_sd: 0.0,
            seed: 5,
        };
        let m = generate_synthetic(&spec).unwrap();
        assert!(!m.is_empty());
        for item in 0..m.n_items() {
            let stars: Vec<u32> = m.item_entries(item).map(|e| e.star).collect();
            assert!(
                stars.windows(2).all(|w| w[0] == w[1]),
                "item {} mixed stars",
                item
            );
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = SynthSpec {
            n_users: 30,
            n_items: 8,
            scale: 5,
            density: 0.4,
            noise_sd: 0.5,
            seed: 99,
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn generator_rejects_overdense_spec() {
        let spec = SynthSpec {
            n_users: 10,
            n_items: 10,
            scale: 5,
            density: 0.9, // 0.9·5/3 = 1.5 > 1
            noise_sd: 0.0,
            seed: 1,
        };
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn generator_full_density_rates_every_pair() {
        let spec = SynthSpec {
            n_users: 7,
            n_items: 5,
            scale: 5,
            density: 1.0,
            noise_sd: 0.0,
            seed: 3,
        };
        let m = generate_synthetic(&spec).unwrap();
        assert_eq!(m.len(), 35);
    }

    #[test]
    fn generator_audience_ratio_tracks_class() {
        // Expected raters of a class-5 item = 5× those of a class-1 item.
        let spec = SynthSpec {
            n_users: 400,
            n_items: 200,
            scale: 5,
            density: 0.2,
            noise_sd: 0.0,
            seed: 17,
        };
        let m = generate_synthetic(&spec).unwrap();
        // noiseless: every rating equals the item's class
        let mut raters_by_class = [0u64; 5];
        let mut items_by_class = [0u64; 5];
        for item in 0..m.n_items() {
            let stars: Vec<u32> = m.item_entries(item).map(|e| e.star).collect();
            if let Some(&class) = stars.first() {
                raters_by_class[(class - 1) as usize] += stars.len() as u64;
                items_by_class[(class - 1) as usize] += 1;
            }
        }
        let per_item = |c: usize| raters_by_class[c] as f64 / items_by_class[c].max(1) as f64;
        let ratio = per_item(4) / per_item(0);
        assert!(
            (ratio - 5.0).abs() / 5.0 < 0.10,
            "audience ratio {} off by >10%",
            ratio
        );
    }

    #[test]
    fn borda_single_ballot() {
        let election = Election::new(
            3,
            vec![OrdinalBallot {
                voter: 0,
                ranking: vec![0, 1, 2],
            }],
        )
        .unwrap();
        let tally = borda_tally(&election);
        assert_eq!(tally.scores, vec![3.0, 2.0, 1.0]);
        assert_eq!(tally.winner(), Some(0));
    }

    #[test]
    fn borda_symmetric_ballots_tie_break_by_id() {
        let election = Election::new(
            2,
            vec![
                OrdinalBallot {
                    voter: 0,
                    ranking: vec![0, 1],
                },
                OrdinalBallot {
                    voter: 1,
                    ranking: vec![1, 0],
                },
            ],
        )
        .unwrap();
        let tally = borda_tally(&election);
        assert_eq!(tally.scores, vec![3.0, 3.0]);
        assert_eq!(tally.winner(), Some(0));
    }

    #[test]
    fn borda_partial_ballot_awards_zero_to_unranked() {
        let election = Election::new(
            3,
            vec![OrdinalBallot {
                voter: 0,
                ranking: vec![2, 0],
            }],
        )
        .unwrap();
        let tally = borda_tally(&election);
        assert_eq!(tally.scores, vec![1.0, 0.0, 2.0]);
    }

    #[test]
    fn election_rejects_malformed_ballots() {
        let empty = Election::new(
            2,
            vec![OrdinalBallot {
                voter: 7,
                ranking: vec![],
            }],
        );
        assert!(empty.unwrap_err().to_string().contains("voter 7"));
        let dup = Election::new(
            2,
            vec![OrdinalBallot {
                voter: 3,
                ranking: vec![1, 1],
            }],
        );
        assert!(dup.unwrap_err().to_string().contains("voter 3"));
        let range = Election::new(
            2,
            vec![OrdinalBallot {
                voter: 1,
                ranking: vec![2],
            }],
        );
        assert!(range.is_err());
    }

    #[test]
    fn range_tally_single_voter() {
        let m = RatingMatrix::from_entries(
            1,
            3,
            5,
            vec![RatingEntry {
                user: 0,
                item: 1,
                star: 5,
            }],
        )
        .unwrap();
        let tally = range_tally(&m);
        assert_eq!(tally.scores, vec![0.0, 5.0, 0.0]);
        assert_eq!(tally.winner(), Some(1));
    }

    #[test]
    fn range_tally_hand_values() {
        let m = RatingMatrix::from_entries(
            2,
            2,
            5,
            vec![
                RatingEntry {
                    user: 0,
                    item: 0,
                    star: 5,
                },
                RatingEntry {
                    user: 1,
                    item: 0,
                    star: 3,
                },
                RatingEntry {
                    user: 1,
                    item: 1,
                    star: 4,
                },
            ],
        )
        .unwrap();
        let tally = range_tally(&m);
        assert_eq!(tally.scores, vec![8.0, 4.0]);
        assert_eq!(tally.winner(), Some(0));
    }

    #[test]
    fn count_predictor_ranks_by_rater_count() {
        let pairs = (0..10)
            .map(|v| (v, 1))
            .chain((0..20).map(|v| (v, 0)))
            .collect();
        let pattern = IncidencePattern::new(20, 2, pairs).unwrap();
        let config = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let pred = predict_tally_agnostic(&pattern, 5, &config).unwrap();
        assert!(pred.count_scores[0] > pred.count_scores[1]);
    }

    #[test]
    fn count_predictor_ties_on_equal_counts() {
        let pairs = vec![(0, 0), (0, 1), (1, 0), (1, 1)];
        let pattern = IncidencePattern::new(2, 2, pairs).unwrap();
        let config = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let pred = predict_tally_agnostic(&pattern, 5, &config).unwrap();
        assert_eq!(pred.count_scores[0], pred.count_scores[1]);
    }

    #[test]
    fn claim_experiment_is_deterministic() {
        let spec = SynthSpec {
            n_users: 60,
            n_items: 12,
            scale: 5,
            density: 0.25,
            noise_sd: 0.5,
            seed: 11,
        };
        let a = claim_experiment(&spec, 50).unwrap();
        let b = claim_experiment(&spec, 50).unwrap();
        assert_eq!(a.count_tau.to_bits(), b.count_tau.to_bits());
        assert_eq!(a.zeromat_tau.to_bits(), b.zeromat_tau.to_bits());
        assert_eq!(a.null_p99.to_bits(), b.null_p99.to_bits());
    }

    #[test]
    fn claim_experiment_degenerate_full_density() {
        // Every voter rates every candidate: all rater counts equal, so the
        // count prediction degenerates to the tie-break order.
        let spec = SynthSpec {
            n_users: 30,
            n_items: 8,
            scale: 5,
            density: 1.0,
            noise_sd: 0.0,
            seed: 4,
        };
        let report = claim_experiment(&spec, 50).unwrap();
        assert!(report.count_degenerate);
        assert!(report.count_tau.is_finite());
        assert!(report.zeromat_tau.is_finite());
    }

    #[test]
    fn borda_conservation_of_points() {
        let mut rng = rng_from_seed(31);
        let n_candidates = 6;
        let mut ballots = Vec::new();
        for voter in 0..50 {
            let len = rng.gen_range(1..=n_candidates);
            let ranking = crate::rng::sample_distinct(&mut rng, n_candidates, len);
            ballots.push(OrdinalBallot { voter, ranking });
        }
        let expected: f64 = ballots
            .iter()
            .map(|b| (b.ranking.len() * (b.ranking.len() + 1) / 2) as f64)
            .sum();
        let election = Election::new(n_candidates, ballots).unwrap();
        let total: f64 = borda_tally(&election).scores.iter().sum();
        assert_eq!(total, expected);
    }
}
