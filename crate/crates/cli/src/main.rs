use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod assign;
mod bench;
mod config;
mod encode;
mod eval;
mod failure;
mod heatmap;
mod synth;

use config::ConfigArgs;
use failure::Failure;

const THREADS_ENV: &str = "RADAR_MRF_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "radar-mrf",
    version,
    about = "Density features, pillar/voxel encodings, target assignment and AP evaluation for 4D radar scans",
    long_about = None,
    after_help = "Exit codes: 0 ok, 1 internal error, 2 input format error, 3 configuration error.\n\
                  Set RADAR_MRF_THREADS to cap the number of worker threads."
)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,

    /// More log output (repeatable). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write density, pillar and voxel artifacts for each scan.
    Encode(encode::Args),
    /// Render a bird's-eye density heatmap as PGM plus CSV.
    KdeHeatmap(heatmap::Args),
    /// Assign anchor targets for every frame of a label file.
    Assign(assign::Args),
    /// Compute AP_3D / AP_BEV from detection and label files.
    Eval(eval::Args),
    /// Generate seeded synthetic scans with labels.
    Synth(synth::Args),
    /// Time the preprocessing stages on a set of scans.
    Bench(bench::Args),
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::internal(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    let cfg = cli.config.resolve()?;
    log::debug!("profile {} seed {}", cfg.profile, cfg.seed);
    match cli.command {
        Command::Encode(a) => encode::run(&cfg, a),
        Command::KdeHeatmap(a) => heatmap::run(&cfg, a),
        Command::Assign(a) => assign::run(&cfg, a),
        Command::Eval(a) => eval::run(&cfg, a),
        Command::Synth(a) => synth::run(&cfg, a),
        Command::Bench(a) => bench::run(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
