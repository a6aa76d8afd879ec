use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ttnpe_core::model::{load_model, save_model};
use ttnpe_core::Variant;
use ttnpe_harness::experiment::{
    classify_with_model, embed_csv, fit_model, to_json, write_bytes, write_convergence, write_experiment,
};
use ttnpe_harness::{run_convergence, run_experiment, ExperimentConfig, HarnessError, Result, RunOptions};

#[derive(Parser)]
#[command(name = "ttnpe", version, about = "Tensor-train neighborhood preserving embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config variant (tn or atn).
    #[arg(long)]
    variant: Option<Variant>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            variant: self.variant,
            threads: self.threads,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit on the first training split with the first tau and save the model.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Solver report; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project every sample of the dataset with a saved model (CSV).
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the first test split with a saved model.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every (snr, trial, tau) cell and write the report, CSV and timing files.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Defaults to the config output_path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record per-sweep objective traces of both variants.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_bytes(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| HarnessError::io("writing stdout", e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { common, model, out } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let (chain, report, tau) = fit_model(&cfg, &common.options())?;
            save_model(&model, &chain, Some(tau))?;
            emit(out.as_deref(), &to_json(&report)?)
        }
        Command::Embed { common, model, out } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let (chain, _) = load_model(&model)?;
            emit(out.as_deref(), &embed_csv(&cfg, &chain)?)
        }
        Command::Classify { common, model, out } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let (chain, _) = load_model(&model)?;
            let result = classify_with_model(&cfg, &chain, &common.options())?;
            emit(out.as_deref(), &to_json(&result)?)
        }
        Command::Experiment { common, out } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let (report, timing) = run_experiment(&cfg, &common.options())?;
            let path = out.unwrap_or_else(|| cfg.output_path.clone());
            for p in write_experiment(&path, &report, &timing)? {
                log::info!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Convergence { common, out } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            let report = run_convergence(&cfg, &common.options())?;
            let path = out.unwrap_or_else(|| cfg.output_path.clone());
            for p in write_convergence(&path, &report)? {
                log::info!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
