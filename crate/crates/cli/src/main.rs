use clap::Parser;

use zvl_cli::cli::{BordaCommand, Cli, Command, RangeCommand};
use zvl_cli::commands;

fn main() {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let outcome = match &cli.command {
        Command::Generate(args) => commands::run_generate(args, &argv),
        Command::Train(args) => commands::run_train(args, &argv),
        Command::Evaluate(args) => commands::run_evaluate(args, &argv),
        Command::Borda {
            command: BordaCommand::Tally(args),
        } => commands::run_borda_tally(args, &argv),
        Command::Range {
            command: RangeCommand::Tally(args),
        } => commands::run_range_tally(args, &argv),
        Command::ClaimExperiment(args) => commands::run_claim(args, &argv),
    };
    if let Err(e) = outcome {
        eprintln!("error: {}", e);
        std::process::exit(1);
    }
}
