use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ttda_cli::commands::{decompose, eval_saved, synth, train_model};
use ttda_cli::config::{parse_list, parse_rank_lists};
use ttda_cli::experiment::{emit_results, grid, run, sweep, write_trace};
use ttda_cli::{CliError, CliResult, ExperimentConfig, Method, RankSpec};
use ttda_core::Truncation;

#[derive(Parser)]
#[command(name = "ttda", version, about = "Tensor-train discriminant analysis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration file plus overrides. Named flags are applied after the
/// file, then every `--set` in order.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Dataset: `synthetic`, `tten:DIR` or `pgm:DIR`.
    #[arg(long)]
    source: Option<String>,
    /// lda, cmda, dgtda, ttda, 2wttda or 3wttda.
    #[arg(long)]
    method: Option<String>,
    /// Target sample shape, e.g. `8,8,8,8`.
    #[arg(long)]
    reshape: Option<String>,
    /// Truncation threshold for rank selection.
    #[arg(long)]
    tau: Option<f64>,
    /// Explicit ranks, e.g. `2,4,4,3` or `2,3;2,3` per branch.
    #[arg(long)]
    ranks: Option<String>,
    /// λ value or `auto`.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Results CSV path (stdout when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Objective-trace CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Any configuration key, `key=value`; repeatable.
    #[arg(long = "set", short = 's', value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let named = [
            ("source", self.source.clone()),
            ("method", self.method.clone()),
            ("reshape", self.reshape.clone()),
            ("tau", self.tau.map(|t| t.to_string())),
            ("ranks", self.ranks.clone()),
            ("lambda", self.lambda.clone()),
            ("seed", self.seed.map(|s| s.to_string())),
            ("repeats", self.repeats.map(|r| r.to_string())),
            ("output", self.output.as_ref().map(|p| p.display().to_string())),
            ("trace", self.trace.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        for pair in &self.set {
            cfg.apply_override(pair)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// TT-SVD of a TTEN file; prints ranks and reconstruction error.
    Decompose {
        input: PathBuf,
        #[arg(long, conflicts_with = "ranks")]
        tau: Option<f64>,
        /// Bond ranks `R_1..R_N`.
        #[arg(long)]
        ranks: Option<String>,
        /// Write the chain here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on the first split and save a model directory.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        model_dir: PathBuf,
    },
    /// Evaluate a saved model, or run the repeated protocol when no model
    /// directory is given.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Run a grid of methods × rank settings.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated methods (default: the configured method).
        #[arg(long)]
        methods: Option<String>,
        /// Comma-separated τ values.
        #[arg(long, conflicts_with = "rank_grid")]
        taus: Option<String>,
        /// Rank settings separated by `|`, e.g. `2,2,2|3,3,3`.
        #[arg(long)]
        rank_grid: Option<String>,
    },
    /// Run every method one after another on the configured ranks.
    Bench {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated methods (default: all).
        #[arg(long)]
        methods: Option<String>,
    },
    /// Write the configured synthetic dataset as a TTEN directory.
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the effective configuration.
    Config {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn methods_arg(s: Option<&str>, fallback: Vec<Method>) -> CliResult<Vec<Method>> {
    match s {
        Some(s) => s.split(',').map(|m| m.parse()).collect(),
        None => Ok(fallback),
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> CliResult<()> {
    println!("{}", serde_json::to_string(v)?);
    Ok(())
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Decompose { input, tau, ranks, out } => {
            let truncation = match (tau, ranks) {
                (_, Some(r)) => Truncation::Ranks(parse_list(&r)?),
                (Some(t), None) => Truncation::Threshold(t),
                (None, None) => return Err(CliError::Config("decompose needs --tau or --ranks".into())),
            };
            print_json(&decompose(&input, &truncation, out.as_deref())?)
        }
        Command::Train { cfg, model_dir } => print_json(&train_model(&cfg.resolve()?, &model_dir)?),
        Command::Eval { cfg, model_dir: Some(dir) } => {
            let mut overrides = cfg.set.clone();
            if let Some(s) = &cfg.source {
                overrides.push(format!("source={s}"));
            }
            print_json(&eval_saved(&dir, &overrides)?)
        }
        Command::Eval { cfg, model_dir: None } => {
            let cfg = cfg.resolve()?;
            let outcome = run(&cfg)?;
            if let Some(path) = &cfg.trace {
                write_trace(path, outcome.trace())?;
            }
            emit_results(&cfg, &[outcome.row])
        }
        Command::Sweep { cfg, methods, taus, rank_grid } => {
            let cfg = cfg.resolve()?;
            let methods = methods_arg(methods.as_deref(), vec![cfg.method])?;
            let ranks: Vec<RankSpec> = match (taus, rank_grid) {
                (Some(t), _) => parse_list::<f64>(&t)?.into_iter().map(RankSpec::Tau).collect(),
                (None, Some(g)) => {
                    g.split('|').map(|r| parse_rank_lists(r).map(RankSpec::Explicit)).collect::<CliResult<_>>()?
                }
                (None, None) => vec![cfg.ranks.clone()],
            };
            emit_results(&cfg, &sweep(&cfg, &grid(&methods, &ranks))?)
        }
        Command::Bench { cfg, methods } => {
            let mut cfg = cfg.resolve()?;
            cfg.workers = 1;
            let methods = methods_arg(methods.as_deref(), Method::ALL.to_vec())?;
            emit_results(&cfg, &sweep(&cfg, &grid(&methods, std::slice::from_ref(&cfg.ranks)))?)
        }
        Command::Synth { cfg, out } => print_json(&synth(&cfg.resolve()?, &out)?),
        Command::Config { cfg } => {
            print!("{}", cfg.resolve()?.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "status": "error", "kind": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
