use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use regsel::config::{parse_rows, RunConfig};
use regsel::pipeline::{run_pipeline, run_stage, Stage};
use regsel::synth;

#[derive(Parser)]
#[command(name = "regsel", version, about = "AIC-driven linear model selection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Pipeline configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Cross-validation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// 1-based rows of the prepared data to drop for the second analysis, e.g. `985,12`.
    #[arg(long, value_parser = parse_rows)]
    exclude_rows: Option<Vec<usize>>,
    /// Output directory; overrides REGSEL_OUT_DIR and the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, merge and clean the input tables.
    Prep(RunArgs),
    /// Drop collinear numeric predictors.
    Prune(RunArgs),
    /// Run stepwise selection in each configured direction.
    Select(RunArgs),
    /// Influence, comparison, residual and added-variable outputs.
    Diagnose(RunArgs),
    /// Monte-Carlo cross-validation of the selected models.
    Cv(RunArgs),
    /// Final model summary and file manifest.
    Report(RunArgs),
    /// Every stage in order.
    All(RunArgs),
    /// Write the synthetic example dataset and a matching config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = synth::DEFAULT_SYNTH_SEED)]
        seed: u64,
    },
}

fn load_config(args: &RunArgs) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::from_file(&args.config).map_err(|e| format!("[config] {e}"))?;
    if let Some(dir) = std::env::var_os("REGSEL_OUT_DIR") {
        cfg.out = PathBuf::from(dir);
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(rows) = &args.exclude_rows {
        cfg.exclude_rows = rows.clone();
    }
    cfg.validate().map_err(|e| format!("[config] {e}"))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), String> {
    let (stage, args) = match cli.command {
        Command::Synth { out, seed } => {
            let s = synth::generate(&out, seed).map_err(|e| format!("[synth] {e}"))?;
            println!("wrote {} ({} complete rows)", s.config.display(), s.complete_rows);
            return Ok(());
        }
        Command::All(a) => (None, a),
        Command::Prep(a) => (Some(Stage::Prep), a),
        Command::Prune(a) => (Some(Stage::Prune), a),
        Command::Select(a) => (Some(Stage::Select), a),
        Command::Diagnose(a) => (Some(Stage::Diagnose), a),
        Command::Cv(a) => (Some(Stage::Cv), a),
        Command::Report(a) => (Some(Stage::Report), a),
    };
    let cfg = load_config(&args)?;
    match stage {
        Some(s) => run_stage(&cfg, s).map_err(|e| e.to_string()),
        None => {
            let bundle = run_pipeline(&cfg).map_err(|e| e.to_string())?;
            println!("{} files in {}", bundle.files.len(), bundle.out_dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
