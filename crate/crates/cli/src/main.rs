use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use porder::executor::Mode;
use porder_cli::{BaselineMethod, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "porder", version, about = "Infer, score and execute partial orders from action traces")]
struct Cli {
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Replaces every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; the run directory is `<out>/<name>`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curate traces from the ground-truth graph to a coverage target.
    Simulate,
    /// Run the sampler, one chain per seed.
    Infer,
    /// Summarize chains into marginals and point estimates.
    Estimate {
        #[arg(long = "alpha")]
        alpha: Vec<f64>,
    },
    /// Score estimates against the ground truth.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        estimate: Option<PathBuf>,
    },
    /// Fit a baseline estimator.
    Baseline {
        #[arg(long, value_enum)]
        method: BaselineMethod,
    },
    /// Execute an estimate against the configured scenario.
    Execute {
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        #[arg(long, value_name = "PATH")]
        estimate: Option<PathBuf>,
    },
    /// All enabled stages in order.
    Run,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "expert" => Ok(Mode::Expert),
        "hybrid" => Ok(Mode::Hybrid),
        _ => Err(format!("unknown mode `{s}`; expected expert or hybrid")),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }
    if let Some(out) = cli.out {
        config.out = out;
    }
    let print = |value: serde_json::Value| println!("{value:#}");
    match cli.command {
        Command::Simulate => print(serde_json::json!(porder_cli::simulate(&config)?)),
        Command::Infer => {
            for path in porder_cli::infer(&config)? {
                println!("{}", path.display());
            }
        }
        Command::Estimate { alpha } => {
            if !alpha.is_empty() {
                config.estimator.alpha = alpha;
                config.validate()?;
            }
            print(serde_json::json!(porder_cli::estimate(&config)?));
        }
        Command::Evaluate { estimate } => {
            print(serde_json::json!(porder_cli::evaluate(&config, estimate.as_deref())?))
        }
        Command::Baseline { method } => {
            println!("{}", porder_cli::baseline(&config, method)?.display())
        }
        Command::Execute { mode, estimate } => {
            let report = porder_cli::execute(&config, mode, estimate.as_deref())?;
            print(serde_json::json!({
                "success": report.success,
                "completeness": report.completeness,
                "fallback_count": report.fallback_count,
                "llm_calls": report.llm_calls,
                "timesteps": report.timesteps,
            }));
        }
        Command::Run => porder_cli::pipeline(&config)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Parser::try_parse().map_err(|e: clap::Error| e) {
        Ok(cli) => match run(cli) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Err(e) => {
            let _ = e.print();
            ExitCode::from(if e.use_stderr() { 2 } else { 0 })
        }
    }
}
