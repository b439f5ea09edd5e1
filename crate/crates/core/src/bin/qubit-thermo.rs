use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use qubit_thermo::experiment::{run_experiment, ExperimentConfig, Outcome, Preset, RunOptions};
use qubit_thermo::sme::Scheme;

/// Simulate a weakly measured driven qubit and write work/heat statistics.
#[derive(Debug, Parser)]
#[command(name = "qubit-thermo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-trajectory first-law series
    Fig1,
    /// Averaged transition probabilities with work and heat parts
    Fig2,
    /// Feedback on/off comparison at 1400 steps
    Fig3a,
    /// Feedback on/off comparison at 2500 steps
    Fig3b,
    /// Jarzynski free-energy estimate at beta = 10
    Jarzynski,
    /// Run a config file
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Trajectories (per initial eigenstate for transition presets)
    #[arg(long, global = true)]
    n_traj: Option<usize>,

    /// ito | stratonovich | bayesian
    #[arg(long, global = true)]
    scheme: Option<Scheme>,

    /// Output directory
    #[arg(long, global = true, env = "QUBIT_THERMO_OUT", default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, overrides_with = "no_feedback")]
    feedback: bool,

    #[arg(long, global = true)]
    no_feedback: bool,

    /// Feedback strength
    #[arg(long, global = true)]
    f: Option<f64>,

    /// Worker threads (0 = all cores); never changes results
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

fn resolve(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.command {
        Command::Fig1 => ExperimentConfig::preset(Preset::Fig1),
        Command::Fig2 => ExperimentConfig::preset(Preset::Fig2),
        Command::Fig3a => ExperimentConfig::preset(Preset::Fig3a),
        Command::Fig3b => ExperimentConfig::preset(Preset::Fig3b),
        Command::Jarzynski => ExperimentConfig::preset(Preset::Jarzynski),
        Command::Run { config } => {
            let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            ExperimentConfig::from_toml_str(&text).with_context(|| format!("in {}", config.display()))?
        }
    };
    let o = &cli.overrides;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(n) = o.n_traj {
        cfg.n_traj = n;
    }
    if let Some(s) = o.scheme {
        cfg.scheme = s;
    }
    if let Some(f) = o.f {
        cfg.f = f;
    }
    if o.feedback {
        cfg.feedback = true;
    }
    if o.no_feedback {
        cfg.feedback = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(&cli).and_then(|cfg| {
        let opts = RunOptions {
            out_dir: cli.overrides.out.clone(),
            workers: cli.overrides.workers,
        };
        Ok(run_experiment(&cfg, &opts)?)
    });
    match result {
        Ok(artifacts) => {
            match &artifacts.outcome {
                Outcome::Fig1(s) => eprintln!(
                    "W = {:.6}  Q = {:.6}  dU = {:.6}  max residual {:.2e}",
                    s.work, s.heat, s.delta_u, s.ensemble_max_step_residual
                ),
                Outcome::Transitions(t) => eprintln!("p_tau = {:?}", t.p_tau),
                Outcome::Feedback(c) => eprintln!(
                    "feedback z-scores {:?}, heat suppressed {:?}",
                    c.feedback_z_scores, c.heat_suppressed
                ),
                Outcome::Jarzynski(j) => eprintln!(
                    "dF_est = {:.4} ± {:.4}  dF_exact = {:.4}",
                    j.delta_f_est, j.delta_f_stderr, j.delta_f_exact
                ),
            }
            for f in &artifacts.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
