//! `dirmix <verb> --config <file> [--out <dir>]`: run one experiment per
//! invocation and exit with a code that names the failure class.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dirmix::run::{run_experiment, Verb};

#[derive(Parser)]
#[command(
    name = "dirmix",
    version,
    about = "Exact directional mixing experiments over lattice actions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report, sidecar, and manifest.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical strip density table over growing truncation length.
    Strip(RunArgs),
    /// Averaged correlation deviations of two events along a strip.
    Correlate(RunArgs),
    /// Averaged absolute pairings of two observables along a strip.
    Wmavg(RunArgs),
    /// Normalized sequence entropy of a partition along an explicit plan.
    Entropy(RunArgs),
    /// Greedy construction of a full-entropy sequence inside a strip.
    Fullseq(RunArgs),
    /// Certified small-deviation thresholds and the excluded strip points.
    Densityone(RunArgs),
    /// Mean ergodic averages of an event over a plan, in exact L2 norm.
    Ergodic(RunArgs),
    /// Sampled suspension-flow correlations of two rectangles.
    Suspend(RunArgs),
    /// Coverage of a square window by sums of two strips.
    Sumset(RunArgs),
    /// Invariant/weak-mixing splitting of an observable for a direction.
    Kvn(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, args) = match &cli.command {
        Command::Strip(a) => (Verb::Strip, a),
        Command::Correlate(a) => (Verb::Correlate, a),
        Command::Wmavg(a) => (Verb::Wmavg, a),
        Command::Entropy(a) => (Verb::Entropy, a),
        Command::Fullseq(a) => (Verb::Fullseq, a),
        Command::Densityone(a) => (Verb::Densityone, a),
        Command::Ergodic(a) => (Verb::Ergodic, a),
        Command::Suspend(a) => (Verb::Suspend, a),
        Command::Sumset(a) => (Verb::Sumset, a),
        Command::Kvn(a) => (Verb::Kvn, a),
    };
    match run_experiment(verb, &args.config, &args.out) {
        Ok(summary) => {
            println!("wrote {}", summary.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
