//! File formats: ratings (MovieLens-compatible TSV and headed CSV),
//! versioned model files, ballots, tallies, traces, and reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use zvl_core::{
    dot_predict, Election, EvalReport, FactorModel, OrdinalBallot, Predictor, RatingEntry,
    RatingMatrix, Tally, TrainTrace,
};

use crate::error::{CliError, Result};

pub const MODEL_MAGIC: &str = "zvl-model v1";

/// Input rating formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// `user<TAB>item<TAB>star<TAB>timestamp`, no header (MovieLens u.data).
    MovielensTab,
    /// `user,item,rating` with that exact header.
    Csv,
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "movielens-tab" => Ok(DatasetFormat::MovielensTab),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(format!(
                "unknown format '{}' (expected movielens-tab or csv)",
                other
            )),
        }
    }
}

/// Raw-to-dense id remapping produced at load time. Dense ids are assigned
/// in ascending raw-id order, so a file whose ids are already dense and
/// 0-based maps to itself regardless of row order.
#[derive(Debug, Clone, Default)]
pub struct IdMaps {
    pub users: Vec<u64>,
    pub items: Vec<u64>,
}

/// A dataset on disk plus how to read it.
#[derive(Debug, Clone)]
pub struct DatasetDescriptor {
    pub path: PathBuf,
    pub format: DatasetFormat,
    pub scale_override: Option<u32>,
}

/// Parses a ratings file, densely remapping raw ids. The scale is the
/// maximum observed star unless overridden.
pub fn load_ratings(descriptor: &DatasetDescriptor) -> Result<(RatingMatrix, IdMaps)> {
    let path = &descriptor.path;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.clone(), e))?;
    let mut raw_rows: Vec<(u64, u64, u32)> = Vec::new();
    let mut lines = text.lines().enumerate();
    if descriptor.format == DatasetFormat::Csv {
        match lines.next() {
            Some((_, header)) if header.trim() == "user,item,rating" => {}
            Some((_, header)) => {
                return Err(CliError::parse(
                    path.clone(),
                    1,
                    format!(
                        "expected header 'user,item,rating', found '{}'",
                        header.trim()
                    ),
                ));
            }
            None => return Err(CliError::file(path.clone(), "empty ratings file")),
        }
    }
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (fields, want): (Vec<&str>, usize) = match descriptor.format {
            DatasetFormat::MovielensTab => (line.split('\t').collect(), 4),
            DatasetFormat::Csv => (line.split(',').collect(), 3),
        };
        if fields.len() != want {
            return Err(CliError::parse(
                path.clone(),
                line_no,
                format!("expected {} fields, found {}", want, fields.len()),
            ));
        }
        let user: u64 = fields[0].trim().parse().map_err(|_| {
            CliError::parse(
                path.clone(),
                line_no,
                format!("bad user id '{}'", fields[0]),
            )
        })?;
        let item: u64 = fields[1].trim().parse().map_err(|_| {
            CliError::parse(
                path.clone(),
                line_no,
                format!("bad item id '{}'", fields[1]),
            )
        })?;
        let star: u32 = fields[2].trim().parse().map_err(|_| {
            CliError::parse(
                path.clone(),
                line_no,
                format!("rating '{}' is not a positive integer", fields[2]),
            )
        })?;
        if star == 0 {
            return Err(CliError::parse(
                path.clone(),
                line_no,
                "rating must be >= 1",
            ));
        }
        raw_rows.push((user, item, star));
    }
    if raw_rows.is_empty() {
        return Err(CliError::file(path.clone(), "empty ratings file"));
    }
    let max_star = raw_rows.iter().map(|r| r.2).max().unwrap();
    let scale = match descriptor.scale_override {
        Some(s) => {
            if max_star > s {
                return Err(CliError::file(
                    path.clone(),
                    format!("rating {} exceeds declared scale {}", max_star, s),
                ));
            }
            s
        }
        None => max_star,
    };
    let mut users: Vec<u64> = raw_rows.iter().map(|r| r.0).collect();
    users.sort_unstable();
    users.dedup();
    let mut items: Vec<u64> = raw_rows.iter().map(|r| r.1).collect();
    items.sort_unstable();
    items.dedup();
    let user_index: std::collections::HashMap<u64, usize> = users
        .iter()
        .enumerate()
        .map(|(dense, &raw)| (raw, dense))
        .collect();
    let item_index: std::collections::HashMap<u64, usize> = items
        .iter()
        .enumerate()
        .map(|(dense, &raw)| (raw, dense))
        .collect();
    let mut entries = Vec::with_capacity(raw_rows.len());
    let mut seen_pairs = std::collections::HashSet::new();
    for (user_raw, item_raw, star) in raw_rows {
        if !seen_pairs.insert((user_raw, item_raw)) {
            return Err(CliError::file(
                path.clone(),
                format!("duplicate rating for pair ({}, {})", user_raw, item_raw),
            ));
        }
        entries.push(RatingEntry {
            user: user_index[&user_raw],
            item: item_index[&item_raw],
            star,
        });
    }
    let maps = IdMaps { users, items };
    let matrix = RatingMatrix::from_entries(maps.users.len(), maps.items.len(), scale, entries)?;
    Ok((matrix, maps))
}

/// Writes a matrix as MovieLens-compatible TSV with dense ids and a zero
/// timestamp column.
pub fn write_ratings_tsv(matrix: &RatingMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    for e in matrix.entries() {
        writeln!(out, "{}\t{}\t{}\t0", e.user, e.item, e.star).unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::io(path.to_path_buf(), e))
}

/// Persists the raw-to-dense id mapping next to an output.
pub fn write_id_maps(maps: &IdMaps, path: &Path) -> Result<()> {
    let mut out = String::from("kind,raw,dense\n");
    for (dense, raw) in maps.users.iter().enumerate() {
        writeln!(out, "user,{},{}", raw, dense).unwrap();
    }
    for (dense, raw) in maps.items.iter().enumerate() {
        writeln!(out, "item,{},{}", raw, dense).unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::io(path.to_path_buf(), e))
}

fn fmt_f64(x: f64) -> String {
    // shortest representation that round-trips the exact bits
    format!("{}", x)
}

fn factor_text(model: &FactorModel, algo: Option<&str>) -> String {
    let mut out = String::new();
    writeln!(out, "{}", MODEL_MAGIC).unwrap();
    writeln!(out, "kind factor").unwrap();
    if let Some(algo) = algo {
        writeln!(out, "algo {}", algo).unwrap();
    }
    writeln!(out, "dim {}", model.dim()).unwrap();
    writeln!(out, "n_users {}", model.n_users()).unwrap();
    writeln!(out, "n_items {}", model.n_items()).unwrap();
    for u in 0..model.n_users() {
        let row: Vec<String> = model.user_row(u).iter().map(|&x| fmt_f64(x)).collect();
        writeln!(out, "u {}", row.join(" ")).unwrap();
    }
    for i in 0..model.n_items() {
        let row: Vec<String> = model.item_row(i).iter().map(|&x| fmt_f64(x)).collect();
        writeln!(out, "v {}", row.join(" ")).unwrap();
    }
    out
}

/// Serializes a factor model as versioned structured text: dim, then U
/// rows, then V rows at full decimal precision.
pub fn save_model(model: &FactorModel, path: &Path) -> Result<()> {
    fs::write(path, factor_text(model, None)).map_err(|e| CliError::io(path.to_path_buf(), e))
}

/// Loads a factor model saved by `save_model`, restoring predictions
/// bit-exactly.
pub fn load_model(path: &Path) -> Result<FactorModel> {
    match load_predictor(path)? {
        (Predictor::Factor(model), _) => Ok(model),
        (other, _) => Err(CliError::file(
            path.to_path_buf(),
            format!(
                "expected a factor model file, found kind '{}'",
                other.kind()
            ),
        )),
    }
}

/// Serializes any predictor with a kind tag; factor models delegate to the
/// `save_model` layout.
pub fn save_predictor(predictor: &Predictor, algo: &str, path: &Path) -> Result<()> {
    match predictor {
        Predictor::Factor(model) => fs::write(path, factor_text(model, Some(algo)))
            .map_err(|e| CliError::io(path.to_path_buf(), e)),
        Predictor::GlobalMean(value) => {
            let out = format!(
                "{}\nkind global-mean\nalgo {}\nvalue {}\n",
                MODEL_MAGIC,
                algo,
                fmt_f64(*value)
            );
            fs::write(path, out).map_err(|e| CliError::io(path.to_path_buf(), e))
        }
        Predictor::ItemMean { means, fallback } => {
            let mut out = String::new();
            writeln!(out, "{}", MODEL_MAGIC).unwrap();
            writeln!(out, "kind item-mean").unwrap();
            writeln!(out, "algo {}", algo).unwrap();
            writeln!(out, "fallback {}", fmt_f64(*fallback)).unwrap();
            writeln!(out, "n_items {}", means.len()).unwrap();
            for mean in means {
                match mean {
                    Some(m) => writeln!(out, "m {}", fmt_f64(*m)).unwrap(),
                    None => writeln!(out, "m -").unwrap(),
                }
            }
            fs::write(path, out).map_err(|e| CliError::io(path.to_path_buf(), e))
        }
        Predictor::UniformRandom { seed, scale } => {
            let out = format!(
                "{}\nkind uniform-random\nalgo {}\nseed {}\nscale {}\n",
                MODEL_MAGIC, algo, seed, scale
            );
            fs::write(path, out).map_err(|e| CliError::io(path.to_path_buf(), e))
        }
    }
}

/// Loads any predictor file; returns the predictor and its algo tag.
pub fn load_predictor(path: &Path) -> Result<(Predictor, String)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.to_path_buf(), e))?;
    let mut lines = text.lines().enumerate().peekable();
    let expect = |got: Option<(usize, &str)>, what: &str| -> Result<(usize, String)> {
        match got {
            Some((idx, line)) => Ok((idx + 1, line.to_string())),
            None => Err(CliError::file(
                path.to_path_buf(),
                format!("truncated file: missing {}", what),
            )),
        }
    };
    let (line_no, magic) = expect(lines.next(), "header")?;
    if magic.trim() != MODEL_MAGIC {
        return Err(CliError::parse(
            path.to_path_buf(),
            line_no,
            format!("unsupported model header '{}'", magic.trim()),
        ));
    }
    let (_, kind_line) = expect(lines.next(), "kind")?;
    let kind = kind_line
        .strip_prefix("kind ")
        .ok_or_else(|| CliError::parse(path.to_path_buf(), 2, "expected 'kind <name>'"))?;
    // optional algo line
    let mut algo = kind.to_string();
    if let Some((_, line)) = lines.peek() {
        if let Some(tag) = line.strip_prefix("algo ") {
            algo = tag.to_string();
            lines.next();
        }
    }
    let mut fields = std::collections::HashMap::new();
    let mut u_rows: Vec<Vec<f64>> = Vec::new();
    let mut v_rows: Vec<Vec<f64>> = Vec::new();
    let mut means: Vec<Option<f64>> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (tag, rest) = line.split_once(' ').ok_or_else(|| {
            CliError::parse(
                path.to_path_buf(),
                line_no,
                format!("malformed line '{}'", line),
            )
        })?;
        let parse_row = |rest: &str| -> Result<Vec<f64>> {
            rest.split_whitespace()
                .map(|tok| {
                    let x: f64 = tok.parse().map_err(|_| {
                        CliError::parse(path.to_path_buf(), line_no, format!("bad float '{}'", tok))
                    })?;
                    if !x.is_finite() {
                        return Err(CliError::parse(
                            path.to_path_buf(),
                            line_no,
                            "non-finite factor value",
                        ));
                    }
                    Ok(x)
                })
                .collect()
        };
        match tag {
            "u" => u_rows.push(parse_row(rest)?),
            "v" => v_rows.push(parse_row(rest)?),
            "m" => means.push(if rest.trim() == "-" {
                None
            } else {
                Some(rest.trim().parse().map_err(|_| {
                    CliError::parse(path.to_path_buf(), line_no, format!("bad mean '{}'", rest))
                })?)
            }),
            _ => {
                fields.insert(tag.to_string(), rest.trim().to_string());
            }
        }
    }
    let get_field = |name: &str| -> Result<String> {
        fields.get(name).cloned().ok_or_else(|| {
            CliError::file(
                path.to_path_buf(),
                format!("truncated file: missing '{}'", name),
            )
        })
    };
    let predictor = match kind {
        "factor" => {
            let dim: usize = get_field("dim")?
                .parse()
                .map_err(|_| CliError::file(path.to_path_buf(), "bad dim"))?;
            let n_users: usize = get_field("n_users")?
                .parse()
                .map_err(|_| CliError::file(path.to_path_buf(), "bad n_users"))?;
            let n_items: usize = get_field("n_items")?
                .parse()
                .map_err(|_| CliError::file(path.to_path_buf(), "bad n_items"))?;
            if u_rows.len() != n_users || v_rows.len() != n_items {
                return Err(CliError::file(
                    path.to_path_buf(),
                    format!(
                        "shape mismatch: expected {} user and {} item rows, found {} and {}",
                        n_users,
                        n_items,
                        u_rows.len(),
                        v_rows.len()
                    ),
                ));
            }
            if u_rows.iter().chain(v_rows.iter()).any(|r| r.len() != dim) {
                return Err(CliError::file(
                    path.to_path_buf(),
                    format!("shape mismatch: a row does not have dim {}", dim),
                ));
            }
            Predictor::Factor(FactorModel::from_rows(u_rows, v_rows)?)
        }
        "global-mean" => Predictor::GlobalMean(
            get_field("value")?
                .parse()
                .map_err(|_| CliError::file(path.to_path_buf(), "bad value"))?,
        ),
        "item-mean" => {
            let n_items: usize = get_field("n_items")?
                .parse()
                .map_err(|_| CliError::file(path.to_path_buf(), "bad n_items"))?;
            if means.len() != n_items {
                return Err(CliError::file(
                    path.to_path_buf(),
                    format!(
                        "shape mismatch: expected {} means, found {}",
                        n_items,
                        means.len()
                    ),
                ));
            }
            let fallback: f64 = get_field("fallback")?
                .parse()
                .map_err(|_| CliError::file(path.to_path_buf(), "bad fallback"))?;
            Predictor::ItemMean { means, fallback }
        }
        "uniform-random" => {
            let seed: u64 = get_field("seed")?
                .parse()
                .map_err(|_| CliError::file(path.to_path_buf(), "bad seed"))?;
            let scale: u32 = get_field("scale")?
                .parse()
                .map_err(|_| CliError::file(path.to_path_buf(), "bad scale"))?;
            Predictor::UniformRandom { seed, scale }
        }
        other => {
            return Err(CliError::file(
                path.to_path_buf(),
                format!("unknown model kind '{}'", other),
            ));
        }
    };
    Ok((predictor, algo))
}

/// Ballots CSV: header `voter,rank1,rank2,...`, then variable-length rows
/// of candidate ids, most-favorite first.
pub fn load_ballots(path: &Path) -> Result<Election> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.to_path_buf(), e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_start().starts_with("voter") => {}
        Some((_, header)) => {
            return Err(CliError::parse(
                path.to_path_buf(),
                1,
                format!(
                    "expected a 'voter,rank1,...' header, found '{}'",
                    header.trim()
                ),
            ));
        }
        None => return Err(CliError::file(path.to_path_buf(), "empty ballots file")),
    }
    let mut ballots = Vec::new();
    let mut max_candidate = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let voter: usize = fields
            .next()
            .unwrap()
            .trim()
            .parse()
            .map_err(|_| CliError::parse(path.to_path_buf(), line_no, "bad voter id"))?;
        let ranking: Vec<usize> = fields
            .map(|f| {
                f.trim().parse().map_err(|_| {
                    CliError::parse(
                        path.to_path_buf(),
                        line_no,
                        format!("bad candidate id '{}'", f.trim()),
                    )
                })
            })
            .collect::<Result<_>>()?;
        if ranking.is_empty() {
            return Err(CliError::parse(
                path.to_path_buf(),
                line_no,
                format!("ballot of voter {} lists no candidates", voter),
            ));
        }
        max_candidate = max_candidate.max(*ranking.iter().max().unwrap());
        ballots.push(OrdinalBallot { voter, ranking });
    }
    if ballots.is_empty() {
        return Err(CliError::file(path.to_path_buf(), "no ballots in file"));
    }
    Ok(Election::new(max_candidate + 1, ballots)?)
}

/// Tally CSV: `candidate,score,rank`, one row per candidate in rank order.
pub fn write_tally_csv(tally: &Tally, path: &Path) -> Result<()> {
    let mut out = String::from("candidate,score,rank\n");
    for (rank_index, &candidate) in tally.ranking.iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            candidate,
            fmt_f64(tally.scores[candidate]),
            rank_index + 1
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::io(path.to_path_buf(), e))
}

/// Trace CSV: `epoch,loss`. Wall-clock is deliberately excluded so the
/// file is bit-stable across runs.
pub fn write_trace_csv(trace: &TrainTrace, path: &Path) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (epoch, loss) in trace.losses().iter().enumerate() {
        writeln!(out, "{},{}", epoch, fmt_f64(*loss)).unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::io(path.to_path_buf(), e))
}

pub const EVAL_CSV_HEADER: &str =
    "model,algo,mae,fairness,pairwise_accuracy,kendall_tau,n_test,seed,runtime_ms";

pub fn eval_csv_row(model_path: &str, report: &EvalReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        model_path,
        report.algo,
        fmt_f64(report.mae),
        fmt_f64(report.fairness),
        fmt_f64(report.pairwise_accuracy),
        report
            .kendall_tau
            .map(fmt_f64)
            .unwrap_or_else(|| "-".into()),
        report.n_test,
        report.seed,
        report.runtime_ms
    )
}

pub fn eval_text_block(model_path: &str, report: &EvalReport) -> String {
    format!(
        "model {}\nalgo {}\nmae {}\nfairness {}\npairwise_accuracy {}\nkendall_tau {}\nn_test {}\nseed {}\nruntime_ms {}\n",
        model_path,
        report.algo,
        fmt_f64(report.mae),
        fmt_f64(report.fairness),
        fmt_f64(report.pairwise_accuracy),
        report.kendall_tau.map(fmt_f64).unwrap_or_else(|| "-".into()),
        report.n_test,
        report.seed,
        report.runtime_ms
    )
}

/// Round-trip check helper used by tests: predictions must agree bit-for-bit.
pub fn models_predict_identically(a: &FactorModel, b: &FactorModel) -> bool {
    if a.dim() != b.dim() || a.n_users() != b.n_users() || a.n_items() != b.n_items() {
        return false;
    }
    for u in 0..a.n_users() {
        for i in 0..a.n_items() {
            let pa = dot_predict(a, u, i).unwrap();
            let pb = dot_predict(b, u, i).unwrap();
            if pa.to_bits() != pb.to_bits() {
                return false;
            }
        }
    }
    true
}
