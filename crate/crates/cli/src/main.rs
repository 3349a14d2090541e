//! Command-line entry points: train, evaluate, ablate, run and export.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use safecross::config::ScenarioConfig;
use safecross::harness::evaluate::run_cell;
use safecross::harness::export::{export_trace, export_training};
use safecross::harness::io::{read_checkpoint_file, write_file};
use safecross::harness::{ablate, evaluate, train, PolicySource, Scenario, ShieldMode};
use safecross::nn::{Checkpoint, PolicyParams};
use safecross::HarnessError;

#[derive(Parser)]
#[command(name = "safecross", version, about = "Shielded RL for an unprotected left turn")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the training seed (train, ablate) or the episode seeds
    /// (evaluate, run).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shield {
    On,
    Off,
}

impl From<Shield> for ShieldMode {
    fn from(s: Shield) -> Self {
        match s {
            Shield::On => ShieldMode::On,
            Shield::Off => ShieldMode::Off,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    /// Network from --checkpoint.
    Learned,
    /// Freshly initialised network seeded by the training seed.
    Untrained,
    FullThrottle,
    SpeedLimit,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy with PPO.
    Train {
        #[command(flatten)]
        common: Common,
        /// Environment step budget.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Run the delay × seed sweep and write report.json and episodes.csv.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "learned")]
        policy: Policy,
        #[arg(long, value_enum, default_value = "on")]
        shield: Shield,
        /// Sample actions instead of using the mean.
        #[arg(long)]
        stochastic: bool,
    },
    /// Train with and without the shield penalty and compare.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Simulate one episode and write trace.csv and summary.json.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "learned")]
        policy: Policy,
        #[arg(long, value_enum, default_value = "on")]
        shield: Shield,
        /// North spawn delay, s.
        #[arg(long, default_value_t = 0.0)]
        delay: f64,
    },
    /// Cut a trace or training log into plot-ready CSV panels.
    Export {
        /// A trace.csv written by `run`.
        #[arg(long, conflicts_with = "episodes", required_unless_present = "episodes")]
        trace: Option<PathBuf>,
        /// An episodes.csv written by `train`.
        #[arg(long)]
        episodes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, HarnessError> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            // an unreadable config is a bad argument, not a runtime failure
            let text = std::fs::read_to_string(p)
                .map_err(|e| HarnessError::Input(format!("cannot read config {}: {e}", p.display())))?;
            Ok(ScenarioConfig::from_toml(&text)?)
        }
    }
}

fn config_with(common: &Common, steps: Option<u64>) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = load_config(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.train.seed = s;
    }
    if let Some(n) = steps {
        cfg.train.total_steps = n;
    }
    Ok(cfg)
}

fn load_policy(
    cfg: &ScenarioConfig,
    policy: Policy,
    checkpoint: Option<&Path>,
) -> Result<Option<PolicyParams<f32>>, HarnessError> {
    match policy {
        Policy::Learned => {
            let p = checkpoint.ok_or_else(|| HarnessError::Input("--policy learned needs --checkpoint".into()))?;
            let ck = Checkpoint::<f32>::from_bytes(&read_checkpoint_file(p)?)?;
            if ck.policy.net.spec() != &cfg.network {
                return Err(HarnessError::Input("checkpoint network does not match the config".into()));
            }
            Ok(Some(ck.policy))
        }
        Policy::Untrained => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
            let p = PolicyParams::new(cfg.network.clone(), cfg.ppo.gamma, cfg.ppo.norm_clip, &mut rng)?;
            Ok(Some(p))
        }
        Policy::FullThrottle | Policy::SpeedLimit => Ok(None),
    }
}

fn source<'a>(policy: Policy, params: Option<&'a PolicyParams<f32>>, stochastic: bool) -> PolicySource<'a> {
    match (policy, params) {
        (Policy::FullThrottle, _) => PolicySource::FullThrottle,
        (Policy::SpeedLimit, _) => PolicySource::SpeedLimit,
        (_, Some(p)) => PolicySource::Learned { policy: p, stochastic },
        (_, None) => unreachable!("learned policies are loaded first"),
    }
}

fn execute(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Train { common, steps } => {
            let cfg = config_with(&common, steps)?;
            let out = train(&cfg, Some(&common.out))?;
            println!(
                "trained {} updates, {} episodes -> {}",
                out.updates.len(),
                out.episodes.len(),
                common.out.display()
            );
        }
        Command::Evaluate {
            common,
            checkpoint,
            policy,
            shield,
            stochastic,
        } => {
            let mut cfg = load_config(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.eval.seeds = vec![s];
            }
            let params = load_policy(&cfg, policy, checkpoint.as_deref())?;
            let sc = Scenario::new(cfg)?;
            let src = source(policy, params.as_ref(), stochastic);
            let report = evaluate(&sc, src, shield.into(), &sc.cfg.eval.delays, &sc.cfg.eval.seeds);
            report.write(&common.out)?;
            println!(
                "{} episodes: {} collisions, ADAS rate {:.3}, cut {}, yield {}",
                report.episodes, report.collisions, report.adas_activation_rate, report.cut, report.yield_
            );
        }
        Command::Ablate { common, steps } => {
            let cfg = config_with(&common, steps)?;
            let r = ablate(&cfg, &common.out)?;
            println!(
                "yield-forcing delays {:?}: ADAS rate full {:.3}, ablated {:.3}",
                r.yield_delays, r.full.adas_activation_rate, r.ablated.adas_activation_rate
            );
        }
        Command::Run {
            common,
            checkpoint,
            policy,
            shield,
            delay,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            if !(delay >= 0.0 && delay.is_finite()) {
                return Err(HarnessError::Input("--delay must be a non-negative number".into()));
            }
            let params = load_policy(&cfg, policy, checkpoint.as_deref())?;
            let seed = common.seed.unwrap_or(cfg.train.seed);
            let sc = Scenario::new(cfg)?;
            let tr = run_cell(&sc, source(policy, params.as_ref(), false), shield.into(), seed, delay);
            write_file(&common.out.join("trace.csv"), tr.to_csv().as_bytes())?;
            let mut summary = serde_json::to_string_pretty(&tr.summary).expect("summary serializes");
            summary.push('\n');
            write_file(&common.out.join("summary.json"), summary.as_bytes())?;
            let s = &tr.summary;
            println!(
                "{} ({}) after {} ticks, min distance {:.2} m, {} ADAS ticks",
                s.outcome.as_str(),
                s.regime.as_str(),
                s.ticks,
                s.min_distance,
                s.adas_activations
            );
        }
        Command::Export { trace, episodes, out } => {
            let written = match (trace, episodes) {
                (Some(t), _) => export_trace(&t, &out)?,
                (None, Some(e)) => export_training(&e, &out)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            for p in written {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage mistakes are validation errors; --help and --version are not
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {:#}", anyhow::Error::new(e).context("safecross failed"));
            ExitCode::from(code as u8)
        }
    }
}
