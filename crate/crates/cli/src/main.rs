use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use pacimdp::pipeline::{self, RunConfig};

/// Sample-based interval-MDP abstraction and reach-avoid controller synthesis.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the number of Monte Carlo runs (0 skips validation).
    #[arg(long, global = true)]
    runs: Option<usize>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Recompute scaling factors even if a cached table exists.
    #[arg(long, global = true)]
    no_cache: bool,

    /// Log verbosity: -v for stage timings, -vv for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every stage, from dataset to validation (the default).
    Run,
    /// Scaling factors, probability intervals and the IMDP.
    Abstract,
    /// Robust value iteration on the IMDP stored by `abstract`.
    Synthesize,
    /// Monte Carlo validation of the scheduler stored by `synthesize`.
    Simulate,
    /// Interval-model export of the IMDP stored by `abstract`.
    Export,
    /// Rerun everything downstream of the scaling factors for several Λ.
    Sweep {
        /// Comma-separated maximum scaling factors.
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
    },
}

fn load_config(common: &Common) -> anyhow::Result<RunConfig> {
    let Some(path) = &common.config else {
        bail!("--config is required");
    };
    let mut cfg = RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = common.runs {
        cfg.validation.runs = runs;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    if common.no_cache {
        cfg.output.cache = false;
    }
    Ok(cfg)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.common.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        if !pacimdp::exec::configure_threads(t) {
            log::warn!("--threads {t} ignored (sequential build or pool already running)");
        }
    }
    let cfg = load_config(&cli.common)?;

    match cli.command.unwrap_or(Command::Run) {
        Command::Run => {
            let m = pipeline::run_pipeline(cfg)?;
            println!(
                "{}: {} states, {} actions, {} transitions; value at x_I = {:.6}",
                m.config.name, m.imdp.num_states, m.imdp.num_actions, m.imdp.num_transitions, m.initial_value
            );
            if let Some(v) = &m.validation {
                println!(
                    "validation: {}/{} reached goal, Wilson 95% [{:.4}, {:.4}], bound {:.4}: {}",
                    v.successes,
                    v.runs,
                    v.wilson_lower,
                    v.wilson_upper,
                    v.imdp_bound,
                    if v.pass { "pass" } else { "FAIL" }
                );
            }
            for t in &m.timing {
                println!("  {:<12} {:>9.3} s", t.stage, t.seconds);
            }
        }
        Command::Abstract => {
            let s = pipeline::run_abstract(cfg)?;
            println!(
                "{} states, {} actions, {} transitions, beta = {:.4e}",
                s.num_states, s.num_actions, s.num_transitions, s.beta
            );
        }
        Command::Synthesize => {
            let initial = pipeline::Pipeline::new(cfg.clone())?.initial_state();
            let s = pipeline::run_synthesize(cfg)?;
            println!(
                "value at x_I = {:.6} after {} sweeps (residual {:.3e})",
                s.values[initial], s.iterations, s.residual
            );
        }
        Command::Simulate => match pipeline::run_simulate(cfg)? {
            Some(v) => println!("{}", serde_json::to_string_pretty(&v)?),
            None => println!("validation disabled (runs = 0)"),
        },
        Command::Export => {
            let (tra, lab) = pipeline::run_export(cfg)?;
            println!("wrote {} and {}", tra.display(), lab.display());
        }
        Command::Sweep { lambda } => {
            let ms = pipeline::run_sweep(cfg, &lambda)?;
            for m in ms {
                println!(
                    "lambda = {}: {} actions, value at x_I = {:.6}",
                    m.config.abstraction.lambda_max, m.imdp.num_actions, m.initial_value
                );
            }
        }
    }
    Ok(())
}
