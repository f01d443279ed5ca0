use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pigd_lab::config::{self, RateFitSection};
use pigd_lab::experiment::{resolve_cache, resolve_out, run_experiment, RunOptions};
use pigd_lab::ode_run::run_ode;
use pigd_lab::refit::refit;
use pigd_lab::sweep::run_sweep;

#[derive(Parser)]
#[command(name = "pigd", version, about = "Proximal inertial gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment.
    Run {
        #[command(flatten)]
        common: Common,
        /// Added to every stochastic seed.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Run the config's grid over c, β₀ and θ.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Integrate the heavy-ball ODE described by the config's `ode` section.
    Ode {
        #[command(flatten)]
        common: Common,
    },
    /// Re-fit rates from existing trace CSVs.
    Rates {
        /// Trace CSVs to fit.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Take the `rate_fit` section from this config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write `rates.json` here instead of printing to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sets the default floor `1e-14(1+|F*|)`.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        f_star: f64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, seed_offset } => {
            let cfg = config::load(&common.config)?;
            let out = resolve_out(common.out.as_deref(), &cfg)?;
            let cache = resolve_cache(&out, &cfg);
            let summary = run_experiment(&cfg, &out, &cache, &RunOptions { seed_offset })
                .with_context(|| format!("running {}", common.config.display()))?;
            println!("{}", serde_json::to_string_pretty(&summary.rates)?);
            eprintln!("wrote {}", out.display());
        }
        Command::Sweep {
            common,
            workers,
            seed_offset,
        } => {
            let cfg = config::load(&common.config)?;
            let out = resolve_out(common.out.as_deref(), &cfg)?;
            let records = run_sweep(&cfg, &out, workers, &RunOptions { seed_offset })?;
            eprintln!("wrote {} runs under {}", records.len(), out.display());
        }
        Command::Ode { common } => {
            let cfg = config::load(&common.config)?;
            let out = resolve_out(common.out.as_deref(), &cfg)?;
            let (_, summary) = run_ode(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Rates {
            csv,
            config: cfg_path,
            out,
            f_star,
        } => {
            let fit = match cfg_path {
                Some(p) => config::load(&p)?.rate_fit,
                None => RateFitSection::default(),
            };
            let results = refit(&csv, &fit, f_star)?;
            let text = serde_json::to_string_pretty(&results)? + "\n";
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    std::fs::write(dir.join("rates.json"), text)?;
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
