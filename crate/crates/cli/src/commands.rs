//! One function per subcommand. Every command writes its outputs plus a
//! RunManifest next to the primary output, and prints a one-line summary.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use zvl_core::{
    borda_tally, claim_experiment, derive_seed, fairness_popularity, mae, mf_train,
    pairwise_accuracy, ppr_train, range_tally, skellam_train, split_holdout, strip_values,
    zeromat_train, ClaimReport, EvalReport, Predictor, RatingMatrix, SynthSpec, Tally, TrainConfig,
    TrainTrace,
};

use crate::cli::{
    Algo, BordaTallyArgs, ClaimArgs, DataArgs, EvaluateArgs, GenerateArgs, RangeTallyArgs,
    TrainArgs,
};
use crate::error::{CliError, Result};
use crate::formats::{
    eval_csv_row, eval_text_block, load_ballots, load_predictor, load_ratings, save_predictor,
    write_id_maps, write_ratings_tsv, write_tally_csv, write_trace_csv, DatasetDescriptor,
    EVAL_CSV_HEADER,
};
use crate::manifest::{checksum_file, RunManifest};

const SPLIT_STREAM: u64 = 0x11;
const AUDIT_STREAM: u64 = 0x22;

fn ids_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".ids.csv");
    PathBuf::from(name)
}

/// Evaluation thread cap: ZVL_THREADS, default 4, at least 1.
fn thread_cap() -> usize {
    std::env::var("ZVL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(4)
        .clamp(1, 64)
}

pub fn run_generate(args: &GenerateArgs, argv: &[String]) -> Result<()> {
    let spec = SynthSpec {
        n_users: args.users,
        n_items: args.items,
        scale: args.scale,
        density: args.density,
        noise_sd: args.noise,
        seed: args.seed,
    };
    let matrix = zvl_core::generate_synthetic(&spec)?;
    write_ratings_tsv(&matrix, &args.out)?;
    let mut manifest = RunManifest::new(argv.to_vec(), args.seed);
    manifest
        .config_entry("users", args.users)
        .config_entry("items", args.items)
        .config_entry("scale", args.scale)
        .config_entry("density", args.density)
        .config_entry("noise", args.noise);
    manifest.add_output(&args.out)?;
    manifest.write_next_to(&args.out)?;
    println!(
        "generated {} ratings ({} users x {} items) -> {}",
        matrix.len(),
        args.users,
        args.items,
        args.out.display()
    );
    Ok(())
}

fn load_with_split(
    data: &DataArgs,
    seed: u64,
) -> Result<(RatingMatrix, RatingMatrix, crate::formats::IdMaps, u64)> {
    let descriptor = DatasetDescriptor {
        path: data.input.clone(),
        format: data.format,
        scale_override: data.scale,
    };
    let (full, maps) = load_ratings(&descriptor)?;
    let split_seed = data
        .split_seed
        .unwrap_or_else(|| derive_seed(seed, SPLIT_STREAM));
    match data.split {
        Some(fraction) => {
            let (train, test) = split_holdout(&full, fraction, split_seed)?;
            Ok((train, test, maps, split_seed))
        }
        None => Ok((full.clone(), full, maps, split_seed)),
    }
}

pub fn run_train(args: &TrainArgs, argv: &[String]) -> Result<()> {
    if args.audit_agnostic && args.algo != Algo::Zeromat {
        return Err(CliError::Usage(
            "--audit-agnostic only applies to the value-agnostic trainer (--algo zeromat)".into(),
        ));
    }
    let (train, _test, maps, split_seed) = load_with_split(&args.data, args.seed)?;
    let config = TrainConfig {
        lr: args.lr,
        alpha: args.alpha,
        sigma_u: args.sigma_u,
        sigma_v: args.sigma_v,
        epochs: args.epochs,
        dim: args.dim,
        eps: args.eps,
        user_sample: args.user_sample,
        item_sample: args.item_sample,
        seed: args.seed,
    };
    let (predictor, trace) = train_by_algo(args.algo, &train, &config)?;
    save_predictor(&predictor, args.algo.name(), &args.out)?;
    if let Some(trace_path) = &args.trace {
        write_trace_csv(&trace, trace_path)?;
    }
    let ids = ids_path(&args.out);
    write_id_maps(&maps, &ids)?;

    if args.audit_agnostic {
        let baseline = checksum_file(&args.out)?;
        let permuted = train.permute_stars(derive_seed(args.seed, AUDIT_STREAM));
        let (audit_predictor, _) = train_by_algo(args.algo, &permuted, &config)?;
        let audit_path = args.out.with_extension("audit.tmp");
        save_predictor(&audit_predictor, args.algo.name(), &audit_path)?;
        let audited = checksum_file(&audit_path)?;
        std::fs::remove_file(&audit_path).ok();
        if baseline != audited {
            return Err(CliError::file(
                args.out.clone(),
                format!(
                    "value-agnosticism audit failed: checksum {} after star permutation vs {}",
                    audited, baseline
                ),
            ));
        }
        println!("agnosticism audit: ok ({})", baseline);
    }

    let mut manifest = RunManifest::new(argv.to_vec(), args.seed);
    manifest
        .config_entry("algo", args.algo.name())
        .config_entry("dim", args.dim)
        .config_entry("lr", args.lr)
        .config_entry("alpha", args.alpha)
        .config_entry("epochs", args.epochs)
        .config_entry("eps", args.eps)
        .config_entry("user_sample", args.user_sample)
        .config_entry("item_sample", args.item_sample)
        .config_entry("sigma_u", args.sigma_u)
        .config_entry("sigma_v", args.sigma_v)
        .config_entry("split_seed", split_seed);
    if let Some(fraction) = args.data.split {
        manifest.config_entry("split", fraction);
    }
    manifest.add_input(&args.data.input)?;
    manifest.add_output(&args.out)?;
    if let Some(trace_path) = &args.trace {
        manifest.add_output(trace_path)?;
    }
    manifest.add_output(&ids)?;
    manifest.write_next_to(&args.out)?;
    println!(
        "trained {} on {} ratings -> {}",
        args.algo.name(),
        train.len(),
        args.out.display()
    );
    Ok(())
}

fn train_by_algo(
    algo: Algo,
    train: &RatingMatrix,
    config: &TrainConfig,
) -> Result<(Predictor, TrainTrace)> {
    Ok(match algo {
        Algo::Zeromat => {
            let state = zeromat_train(&strip_values(train), config)?;
            (Predictor::factor(state.model), state.trace)
        }
        Algo::Ppr => {
            let (model, trace) = ppr_train(train, config)?;
            (Predictor::factor(model), trace)
        }
        Algo::Skellam => {
            let (model, trace) = skellam_train(train, config)?;
            (Predictor::factor(model), trace)
        }
        Algo::Mf => {
            let (model, trace) = mf_train(train, config)?;
            (Predictor::factor(model), trace)
        }
        Algo::Itemmean => (Predictor::item_mean(train)?, TrainTrace::new()),
        Algo::Random => (
            Predictor::uniform_random(config.seed, train.scale()),
            TrainTrace::new(),
        ),
    })
}

pub fn run_evaluate(args: &EvaluateArgs, argv: &[String]) -> Result<()> {
    let (train, test, _maps, split_seed) = load_with_split(&args.data, args.seed)?;
    let n_models = args.model.len();
    let results: Mutex<Vec<Option<(String, EvalReport)>>> = Mutex::new(vec![None; n_models]);
    let next: AtomicUsize = AtomicUsize::new(0);
    let workers = thread_cap().min(n_models);
    let failure: Mutex<Option<CliError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= n_models {
                    break;
                }
                let path = &args.model[idx];
                match evaluate_one(path, &train, &test, args.seed) {
                    Ok(report) => {
                        results.lock().unwrap()[idx] = Some((path.display().to_string(), report));
                    }
                    Err(e) => {
                        *failure.lock().unwrap() = Some(e);
                        break;
                    }
                }
            });
        }
    });
    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }
    let results = results.into_inner().unwrap();
    let mut csv = String::from(EVAL_CSV_HEADER);
    csv.push('\n');
    let mut text = String::new();
    for slot in &results {
        let (path, report) = slot.as_ref().expect("all slots filled");
        csv.push_str(&eval_csv_row(path, report));
        csv.push('\n');
        text.push_str(&eval_text_block(path, report));
        text.push('\n');
    }
    std::fs::write(&args.out, &csv).map_err(|e| CliError::io(args.out.clone(), e))?;
    if let Some(text_path) = &args.text {
        std::fs::write(text_path, &text).map_err(|e| CliError::io(text_path.clone(), e))?;
    }

    let mut manifest = RunManifest::new(argv.to_vec(), args.seed);
    manifest
        .config_entry("split_seed", split_seed)
        .config_entry("n_test", test.len());
    if let Some(fraction) = args.data.split {
        manifest.config_entry("split", fraction);
    }
    manifest.add_input(&args.data.input)?;
    for model in &args.model {
        manifest.add_input(model)?;
    }
    manifest.add_output(&args.out)?;
    if let Some(text_path) = &args.text {
        manifest.add_output(text_path)?;
    }
    manifest.write_next_to(&args.out)?;
    for slot in &results {
        let (path, report) = slot.as_ref().unwrap();
        println!(
            "evaluated {}: mae {:.4}, fairness {:.4}, pairwise accuracy {:.4}",
            path, report.mae, report.fairness, report.pairwise_accuracy
        );
    }
    Ok(())
}

fn evaluate_one(
    model_path: &Path,
    train: &RatingMatrix,
    test: &RatingMatrix,
    seed: u64,
) -> Result<EvalReport> {
    let (predictor, algo) = load_predictor(model_path)?;
    let started = Instant::now();
    let mae_value = mae(&predictor, test)?;
    let fairness = fairness_popularity(&predictor, train)?;
    let accuracy = pairwise_accuracy(&predictor, test)?;
    Ok(EvalReport {
        algo,
        mae: mae_value,
        fairness,
        pairwise_accuracy: accuracy,
        kendall_tau: None,
        n_test: test.len(),
        seed,
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}

pub fn run_borda_tally(args: &BordaTallyArgs, argv: &[String]) -> Result<()> {
    let election = load_ballots(&args.ballots)?;
    let tally = borda_tally(&election);
    write_tally_csv(&tally, &args.out)?;
    let mut manifest = RunManifest::new(argv.to_vec(), 0);
    manifest.add_input(&args.ballots)?;
    manifest.add_output(&args.out)?;
    manifest.write_next_to(&args.out)?;
    summarize_tally("borda", &tally, &args.out);
    Ok(())
}

pub fn run_range_tally(args: &RangeTallyArgs, argv: &[String]) -> Result<()> {
    let descriptor = DatasetDescriptor {
        path: args.ratings.clone(),
        format: args.format,
        scale_override: args.scale,
    };
    let (matrix, _maps) = load_ratings(&descriptor)?;
    let tally = range_tally(&matrix);
    write_tally_csv(&tally, &args.out)?;
    let mut manifest = RunManifest::new(argv.to_vec(), 0);
    manifest.add_input(&args.ratings)?;
    manifest.add_output(&args.out)?;
    manifest.write_next_to(&args.out)?;
    summarize_tally("range", &tally, &args.out);
    Ok(())
}

fn summarize_tally(kind: &str, tally: &Tally, out: &Path) {
    match tally.winner() {
        Some(winner) => println!(
            "{} tally: winner candidate {} with score {} -> {}",
            kind,
            winner,
            tally.scores[winner],
            out.display()
        ),
        None => println!("{} tally: no candidates -> {}", kind, out.display()),
    }
}

pub fn run_claim(args: &ClaimArgs, argv: &[String]) -> Result<()> {
    let spec = SynthSpec {
        n_users: args.users,
        n_items: args.items,
        scale: args.scale,
        density: args.density,
        noise_sd: args.noise,
        seed: args.seed,
    };
    let report = claim_experiment(&spec, args.permutations)?;
    std::fs::write(&args.out, claim_text(&report))
        .map_err(|e| CliError::io(args.out.clone(), e))?;
    let csv_path = args.out.with_extension("csv");
    std::fs::write(&csv_path, claim_csv(&report)).map_err(|e| CliError::io(csv_path.clone(), e))?;

    let mut manifest = RunManifest::new(argv.to_vec(), args.seed);
    manifest
        .config_entry("users", args.users)
        .config_entry("items", args.items)
        .config_entry("scale", args.scale)
        .config_entry("density", args.density)
        .config_entry("noise", args.noise)
        .config_entry("permutations", args.permutations);
    manifest.add_output(&args.out)?;
    manifest.add_output(&csv_path)?;
    manifest.write_next_to(&args.out)?;
    println!(
        "claim experiment: count tau {:.4} (null p99 {:.4}, {}), zeromat tau {:.4} ({}) -> {}",
        report.count_tau,
        report.null_p99,
        if report.count_passes {
            "passes"
        } else {
            "fails"
        },
        report.zeromat_tau,
        if report.zeromat_passes {
            "passes"
        } else {
            "fails"
        },
        args.out.display()
    );
    Ok(())
}

fn claim_text(r: &ClaimReport) -> String {
    let fmt_winner = |w: Option<usize>| w.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
    format!(
        "claim experiment\n\
         users {}\nitems {}\nscale {}\ndensity {}\nnoise_sd {}\nseed {}\npermutations {}\n\
         count_tau {}\nzeromat_tau {}\nnull_p99 {}\n\
         count_passes {}\nzeromat_passes {}\ncount_degenerate {}\n\
         truth_winner {}\ncount_winner {}\nzeromat_winner {}\n\
         note rater-count coupling (audience proportional to true class) is the modeled mechanism; both predictors are value-free\n",
        r.spec.n_users,
        r.spec.n_items,
        r.spec.scale,
        r.spec.density,
        r.spec.noise_sd,
        r.spec.seed,
        r.n_permutations,
        r.count_tau,
        r.zeromat_tau,
        r.null_p99,
        r.count_passes,
        r.zeromat_passes,
        r.count_degenerate,
        fmt_winner(r.truth_winner),
        fmt_winner(r.count_winner),
        fmt_winner(r.zeromat_winner),
    )
}

fn claim_csv(r: &ClaimReport) -> String {
    let fmt_winner = |w: Option<usize>| w.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
    format!(
        "users,items,scale,density,noise_sd,seed,permutations,count_tau,zeromat_tau,null_p99,count_passes,zeromat_passes,count_degenerate,truth_winner,count_winner,zeromat_winner\n\
         {},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.spec.n_users,
        r.spec.n_items,
        r.spec.scale,
        r.spec.density,
        r.spec.noise_sd,
        r.spec.seed,
        r.n_permutations,
        r.count_tau,
        r.zeromat_tau,
        r.null_p99,
        r.count_passes,
        r.zeromat_passes,
        r.count_degenerate,
        fmt_winner(r.truth_winner),
        fmt_winner(r.count_winner),
        fmt_winner(r.zeromat_winner),
    )
}
