mod config;
mod pipeline;

use clap::{Parser, Subcommand};
use config::CliOverrides;
use std::path::PathBuf;
use std::process::ExitCode;

/// Blockmodeling pipeline for temporal co-authorship networks: builds
/// per-period networks, fits multi-core/semi-periphery/periphery
/// blockmodels, measures core stability and runs the discipline-level
/// analysis.
#[derive(Parser)]
#[command(name = "blockstab", version)]
struct Cli {
    /// TOML configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Delimited input file with pub_id, author_id, year columns.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory (default: out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed recorded in every artifact.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo replicates for the chance correction.
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Local-search restarts (0 = automatic).
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Worker threads (0 = all cores; env BLOCKSTAB_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Default cluster count: an integer or scan:MIN..MAX.
    #[arg(long, global = true)]
    k: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the input and write one network file per discipline and period.
    Build,
    /// Fit blockmodels to the built networks.
    Fit,
    /// Compute the stability index report between consecutive periods.
    Stability,
    /// Emit core transition tables, event classifications and flow diagrams.
    Transitions,
    /// Cluster disciplines and run the stability regressions.
    Analyze,
    /// Run the whole pipeline.
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = CliOverrides {
        config: cli.config,
        input: cli.input,
        out: cli.out,
        seed: cli.seed,
        replicates: cli.replicates,
        restarts: cli.restarts,
        workers: cli.workers,
        k: cli.k,
    };
    let cfg = match config::resolve(&overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if cfg.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
        {
            eprintln!("error: cannot configure {} workers: {e}", cfg.workers);
            return ExitCode::FAILURE;
        }
    }

    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        eprintln!("error: cannot create `{}`: {e}", cfg.out.display());
        return ExitCode::FAILURE;
    }
    let manifest = config::manifest_json(&cfg);
    let manifest_path = cfg.out.join("run.json");
    if let Err(e) = std::fs::write(&manifest_path, manifest) {
        eprintln!("error: cannot write `{}`: {e}", manifest_path.display());
        return ExitCode::FAILURE;
    }

    let result = match cli.command {
        Command::Build => pipeline::cmd_build(&cfg),
        Command::Fit => pipeline::cmd_fit(&cfg),
        Command::Stability => pipeline::cmd_stability(&cfg),
        Command::Transitions => pipeline::cmd_transitions(&cfg),
        Command::Analyze => pipeline::cmd_analyze(&cfg),
        Command::All => pipeline::cmd_all(&cfg),
    };
    match result {
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
        Ok(mut logs) => {
            logs.lines.sort();
            for line in &logs.lines {
                println!("{line}");
            }
            for warning in &logs.warnings {
                eprintln!("warning: {warning}");
            }
            for error in &logs.errors {
                eprintln!("error: {error}");
            }
            if logs.errors.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
