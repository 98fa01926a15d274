//! Argument parsing and subcommand dispatch. Exit codes: 0 success, 1 a
//! failed check or runtime error, 2 a usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use coopgame::oracle::{run_suite, SuiteConfig};
use envs::EnvKind;

use crate::eval::{evaluate_success_rate, median, turns_to_capture, Policy};
use crate::trace::{credit_trace, export_credit_trace, record_trajectory};
use crate::{load_checkpoint, pcc_credit_distance, run_training, HarnessError, Result, TrainConfig, OUT_DIR_VAR};

#[derive(Debug, Parser)]
#[command(name = "sqddpg", about = "Train and analyse Shapley Q-value credit assignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one learner and write metrics.csv plus checkpoint bundles.
    Train(TrainArgs),
    /// Collision-free episode rate of a traffic checkpoint.
    EvalSuccess {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        /// Defaults to 20, 40 or 60 by difficulty.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Correlation between predator credit and inverse distance to the prey.
    EvalPcc {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Credits of a checkpoint along a trajectory of an expert checkpoint.
    Trace {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Checkpoint that drives the trajectory; defaults to `--checkpoint`.
        #[arg(long)]
        expert: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the exact cooperative-game property suite.
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        games: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Median turns-to-capture of a prey checkpoint against random play.
    EvalCapture {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Flat key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    difficulty: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    sample_size: Option<String>,
    #[arg(long)]
    hidden_units: Option<String>,
    #[arg(long)]
    episodes: Option<String>,
    #[arg(long)]
    episode_length: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    behaviour_update_freq: Option<String>,
    #[arg(long)]
    target_update_freq: Option<String>,
    #[arg(long)]
    actor_lr: Option<String>,
    #[arg(long)]
    critic_lr: Option<String>,
    #[arg(long)]
    target_tau: Option<String>,
    #[arg(long)]
    entropy_coef: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    checkpoint_every: Option<String>,
    /// Any other `key=value` setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
    /// Output directory; otherwise $SQDDPG_OUT_DIR, otherwise runs/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainArgs {
    fn pairs(&self) -> Result<Vec<(String, String)>> {
        let flags = [
            ("environment", &self.env),
            ("difficulty", &self.difficulty),
            ("algorithm", &self.algo),
            ("sample_size", &self.sample_size),
            ("hidden_units", &self.hidden_units),
            ("episodes", &self.episodes),
            ("episode_length", &self.episode_length),
            ("gamma", &self.gamma),
            ("behaviour_update_freq", &self.behaviour_update_freq),
            ("target_update_freq", &self.target_update_freq),
            ("actor_lr", &self.actor_lr),
            ("critic_lr", &self.critic_lr),
            ("target_tau", &self.target_tau),
            ("entropy_coef", &self.entropy_coef),
            ("batch_size", &self.batch_size),
            ("seed", &self.seed),
            ("checkpoint_every", &self.checkpoint_every),
        ];
        let mut out: Vec<(String, String)> = flags
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for kv in &self.extra {
            out.extend(crate::config::parse_pairs(kv)?);
        }
        Ok(out)
    }

    fn config(&self) -> Result<TrainConfig> {
        let pairs = self.pairs()?;
        match &self.config {
            Some(path) => TrainConfig::load(path, &pairs),
            None => TrainConfig::from_pairs(&pairs),
        }
    }
}

fn output_dir(flag: Option<&Path>, default: &str) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| Path::new("runs").join(default))
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

/// `Ok(false)` means the command ran but its check failed.
fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<bool> {
    match cmd {
        Command::Train(args) => {
            let cfg = args.config()?;
            let name = format!("{}-{}-seed{}", cfg.environment, cfg.algorithm, cfg.seed);
            let dir = output_dir(args.out.as_deref(), &name);
            let outcome = run_training(&cfg, Some(&dir))?;
            let tail = &outcome.records[outcome.records.len().saturating_sub(100)..];
            let mean = tail.iter().map(|r| r.mean_reward).sum::<f64>() / tail.len().max(1) as f64;
            writeln!(out, "trained {name} ({} episodes, config {})", cfg.episodes, cfg.hash())?;
            writeln!(out, "mean reward over the last {} episodes: {mean:.4}", tail.len())?;
            writeln!(out, "metrics: {}", dir.join("metrics.csv").display())?;
            Ok(true)
        }
        Command::EvalSuccess {
            checkpoint,
            episodes,
            steps,
            seed,
        } => {
            let (learner, kind) = load_checkpoint(&checkpoint)?;
            let EnvKind::Traffic(d) = kind else {
                return Err(HarnessError::Mismatch {
                    found: kind.to_string(),
                    wanted: "traffic".into(),
                });
            };
            let steps = steps.unwrap_or(d.settings().eval_steps);
            let r = evaluate_success_rate(d, Policy::Greedy(learner.as_ref()), episodes, steps, seed)?;
            writeln!(out, "success: {}/{} = {:.4}", r.successes, r.episodes, r.rate())?;
            Ok(true)
        }
        Command::EvalPcc {
            checkpoint,
            samples,
            seed,
        } => {
            let (learner, _) = require_prey(&checkpoint)?;
            let c = pcc_credit_distance(learner.as_ref(), samples, seed)?;
            writeln!(out, "pcc: {:.4} (p = {:.4e}, n = {})", c.coefficient, c.p_value, c.n)?;
            Ok(true)
        }
        Command::EvalCapture {
            checkpoint,
            episodes,
            seed,
        } => {
            let (learner, _) = require_prey(&checkpoint)?;
            let limit = EnvKind::Prey.spec().episode_limit;
            let as_f = |v: Vec<usize>| v.into_iter().map(|x| x as f64).collect::<Vec<_>>();
            let trained = as_f(turns_to_capture(Policy::Greedy(learner.as_ref()), episodes, limit, seed)?);
            let random = as_f(turns_to_capture(Policy::Uniform, episodes, limit, seed)?);
            let (t, r) = (median(&trained).unwrap_or(0.0), median(&random).unwrap_or(0.0));
            writeln!(out, "median turns to capture: trained {t}, random {r}")?;
            Ok(true)
        }
        Command::Trace {
            checkpoint,
            expert,
            steps,
            seed,
            out: dir,
        } => {
            let (learner, _) = require_prey(&checkpoint)?;
            let (driver, _) = require_prey(expert.as_deref().unwrap_or(&checkpoint))?;
            let tr = record_trajectory(Policy::Greedy(driver.as_ref()), steps, seed)?;
            let trace = credit_trace(learner.as_ref(), &tr, seed)?;
            let dir = output_dir(dir.as_deref(), &format!("trace-{}", learner.algorithm()));
            export_credit_trace(&trace, &tr, &dir)?;
            writeln!(out, "{} steps; top credit on the nearest predator in {:.1}% of them", tr.len(), 100.0 * trace.nearest_agreement(&tr))?;
            writeln!(out, "wrote {}", dir.join("credit_trace.csv").display())?;
            Ok(true)
        }
        Command::OracleCheck { games, seed } => {
            let report = run_suite(&SuiteConfig { games, seed })?;
            write!(out, "{}", report.render())?;
            Ok(report.all_passed())
        }
    }
}

fn require_prey(dir: &Path) -> Result<(Box<dyn marl::Learner>, EnvKind)> {
    let (learner, kind) = load_checkpoint(dir)?;
    if kind != EnvKind::Prey {
        return Err(HarnessError::Mismatch {
            found: kind.to_string(),
            wanted: "prey".into(),
        });
    }
    Ok((learner, kind))
}
