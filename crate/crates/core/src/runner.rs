//! Scenario orchestration: configuration, train/evaluate pipelines,
//! deterministic seeding, and artifact emission.
//!
//! Four scenarios cover the experimental grid:
//!
//! * `a` — no control; the zero-action baseline.
//! * `b` — agent trained on the voltage term only.
//! * `c` — voltage plus action-magnitude terms.
//! * `d` — all three terms, including fairness.
//!
//! Each run trains on the first `train_fraction` of the series (scenario
//! `a` skips training), evaluates deterministically on the remainder, and
//! writes `summary.json`, `summary.txt`, `steps.csv`, `fig4.csv`,
//! `fig5.csv`, plus `training_log.csv` and `agent.ckpt` when training ran.
//!
//! One master seed fans out through fixed streams (`seeding`): profile
//! synthesis, network init, exploration noise, replay sampling. Reruns with
//! the same config are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::checkpoint;
use crate::ddpg::{
    evaluate, train, AgentBundle, AgentConfig, EvalTrace, Policy, TrainOptions, TrainingLog,
    ZeroPolicy,
};
use crate::env::{Env, RewardWeights, StateVoltage, DEFAULT_FV_SLOPE};
use crate::error::{Error, Result};
use crate::feeder::generate_feeder;
use crate::grid::{load_network, load_timeseries};
use crate::metrics::{summarize, ScenarioSummary, ViolationCounting};
use crate::seeding::{stream_rng, STREAM_EXPLORATION, STREAM_NET_INIT, STREAM_REPLAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    A,
    B,
    C,
    D,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::A => "a",
            Scenario::B => "b",
            Scenario::C => "c",
            Scenario::D => "d",
        }
    }

    /// Weight mask: `a`/`b` keep only the voltage term, `c` adds the action
    /// term, `d` uses all three.
    pub fn mask(self, base: RewardWeights) -> RewardWeights {
        match self {
            Scenario::A | Scenario::B => RewardWeights {
                alpha: base.alpha,
                beta: 0.0,
                omega: 0.0,
            },
            Scenario::C => RewardWeights {
                alpha: base.alpha,
                beta: base.beta,
                omega: 0.0,
            },
            Scenario::D => base,
        }
    }

    pub fn trains(self) -> bool {
        self != Scenario::A
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "a" => Ok(Scenario::A),
            "b" => Ok(Scenario::B),
            "c" => Ok(Scenario::C),
            "d" => Ok(Scenario::D),
            other => Err(Error::Config(format!(
                "unknown scenario `{other}` (expected a, b, c, or d)"
            ))),
        }
    }
}

/// Complete description of one run. Defaults follow the study setup;
/// `customers`/`days` control the synthetic feeder used when no network
/// file is given.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub weights: RewardWeights,
    pub episodes: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub network_path: Option<PathBuf>,
    pub profiles_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub customers: usize,
    pub days: usize,
    pub hidden: Vec<usize>,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub noise_sigma_start: f64,
    pub noise_sigma_end: f64,
    pub fv_slope: f64,
    pub state_voltage: StateVoltage,
    pub violation_counting: ViolationCounting,
    pub parallel_eval: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::A,
            weights: RewardWeights::default(),
            episodes: 50,
            seed: 1,
            train_fraction: 0.30,
            network_path: None,
            profiles_path: None,
            out_dir: PathBuf::from("out"),
            customers: 20,
            days: 365,
            hidden: vec![256, 256],
            lr_actor: 1e-4,
            lr_critic: 1e-4,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 200_000,
            noise_sigma_start: 0.2,
            noise_sigma_end: 0.05,
            fv_slope: DEFAULT_FV_SLOPE,
            state_voltage: StateVoltage::Uncontrolled,
            violation_counting: ViolationCounting::PerStep,
            parallel_eval: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.scenario.trains() && self.episodes == 0 {
            return Err(Error::Config("episodes must be >= 1 for b/c/d".into()));
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(Error::Config("batch and capacity must be positive".into()));
        }
        if self.network_path.is_some() != self.profiles_path.is_some() {
            return Err(Error::Config(
                "network and profiles files must be given together".into(),
            ));
        }
        if self.parallel_eval == 0 {
            return Err(Error::Config("parallel_eval must be >= 1".into()));
        }
        Ok(())
    }
}

/// Parses the flat `key = value` config format. Unknown keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim().to_lowercase();
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("line {}: bad {what}: `{value}`", lineno + 1));

        match key.as_str() {
            "scenario" => cfg.scenario = value.parse()?,
            "alpha" => cfg.weights.alpha = value.parse().map_err(|_| bad("alpha"))?,
            "beta" => cfg.weights.beta = value.parse().map_err(|_| bad("beta"))?,
            "omega" => cfg.weights.omega = value.parse().map_err(|_| bad("omega"))?,
            "episodes" => cfg.episodes = value.parse().map_err(|_| bad("episodes"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
            "train_fraction" => {
                cfg.train_fraction = value.parse().map_err(|_| bad("train_fraction"))?
            }
            "network" => cfg.network_path = Some(PathBuf::from(value)),
            "profiles" => cfg.profiles_path = Some(PathBuf::from(value)),
            "out" => cfg.out_dir = PathBuf::from(value),
            "customers" => cfg.customers = value.parse().map_err(|_| bad("customers"))?,
            "days" => cfg.days = value.parse().map_err(|_| bad("days"))?,
            "hidden" => {
                cfg.hidden = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("hidden"))?
            }
            "lr_actor" => cfg.lr_actor = value.parse().map_err(|_| bad("lr_actor"))?,
            "lr_critic" => cfg.lr_critic = value.parse().map_err(|_| bad("lr_critic"))?,
            "gamma" => cfg.gamma = value.parse().map_err(|_| bad("gamma"))?,
            "tau" => cfg.tau = value.parse().map_err(|_| bad("tau"))?,
            "batch" => cfg.batch_size = value.parse().map_err(|_| bad("batch"))?,
            "capacity" => cfg.buffer_capacity = value.parse().map_err(|_| bad("capacity"))?,
            "noise_start" => {
                cfg.noise_sigma_start = value.parse().map_err(|_| bad("noise_start"))?
            }
            "noise_end" => cfg.noise_sigma_end = value.parse().map_err(|_| bad("noise_end"))?,
            "fv_slope" => cfg.fv_slope = value.parse().map_err(|_| bad("fv_slope"))?,
            "state_voltage" => {
                cfg.state_voltage = match value {
                    "uncontrolled" => StateVoltage::Uncontrolled,
                    "held" => StateVoltage::HeldAction,
                    _ => return Err(bad("state_voltage (uncontrolled|held)")),
                }
            }
            "violation_counting" => {
                cfg.violation_counting = match value {
                    "step" => ViolationCounting::PerStep,
                    "bus_step" => ViolationCounting::PerBusStep,
                    _ => return Err(bad("violation_counting (step|bus_step)")),
                }
            }
            "parallel_eval" => {
                cfg.parallel_eval = value.parse().map_err(|_| bad("parallel_eval"))?
            }
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{other}`",
                    lineno + 1
                )))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Files written by a run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub summary_json: PathBuf,
    pub summary_txt: PathBuf,
    pub steps_csv: PathBuf,
    pub fig4_csv: PathBuf,
    pub fig5_csv: PathBuf,
    pub training_log_csv: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

/// Everything a run produces, in memory plus on disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: ScenarioSummary,
    pub trace: EvalTrace,
    pub training_log: Option<TrainingLog>,
    pub artifacts: RunArtifacts,
}

/// Executes one scenario end to end.
pub fn run_scenario(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let (spec, series, inverters) = match (&config.network_path, &config.profiles_path) {
        (Some(net), Some(prof)) => {
            let (spec, inverters) = load_network(net)?;
            let series = load_timeseries(prof, &spec)?;
            (spec, series, inverters)
        }
        _ => generate_feeder(config.customers, config.days, config.seed)?,
    };

    let weights = config.scenario.mask(config.weights);
    let env = Env::new(
        spec,
        series,
        inverters,
        weights,
        config.fv_slope,
        config.state_voltage,
    )?;

    let n_steps = env.n_steps();
    let train_end = (config.train_fraction * n_steps as f64).floor() as usize;
    if train_end < 2 || train_end + 1 >= n_steps {
        return Err(Error::Config(format!(
            "train fraction {} leaves an unusable split of a {n_steps}-step series",
            config.train_fraction
        )));
    }
    let eval_range = train_end..n_steps - 1;

    std::fs::create_dir_all(&config.out_dir)?;
    let artifacts = RunArtifacts {
        out_dir: config.out_dir.clone(),
        summary_json: config.out_dir.join("summary.json"),
        summary_txt: config.out_dir.join("summary.txt"),
        steps_csv: config.out_dir.join("steps.csv"),
        fig4_csv: config.out_dir.join("fig4.csv"),
        fig5_csv: config.out_dir.join("fig5.csv"),
        training_log_csv: config
            .scenario
            .trains()
            .then(|| config.out_dir.join("training_log.csv")),
        checkpoint: config
            .scenario
            .trains()
            .then(|| config.out_dir.join("agent.ckpt")),
    };

    let (trace, training_log) = if config.scenario.trains() {
        let agent_cfg = AgentConfig {
            hidden: config.hidden.clone(),
            lr_actor: config.lr_actor,
            lr_critic: config.lr_critic,
            gamma: config.gamma,
            tau: config.tau,
            noise_sigma: config.noise_sigma_start,
        };
        let mut agent = AgentBundle::new(
            env.observation_len(),
            env.action_len(),
            &agent_cfg,
            &mut stream_rng(config.seed, STREAM_NET_INIT),
        );
        let opts = TrainOptions {
            episodes: config.episodes,
            batch_size: config.batch_size,
            buffer_capacity: config.buffer_capacity,
            train_steps: 0..train_end,
            sigma_start: config.noise_sigma_start,
            sigma_end: config.noise_sigma_end,
            crash_dump: Some(config.out_dir.join("crash.ckpt")),
        };
        let log = train(
            &mut agent,
            &env,
            &opts,
            &mut stream_rng(config.seed, STREAM_EXPLORATION),
            &mut stream_rng(config.seed, STREAM_REPLAY),
        )?;
        if let Some(path) = &artifacts.checkpoint {
            checkpoint::save_agent(path, &agent)?;
        }
        if let Some(path) = &artifacts.training_log_csv {
            write_training_log(path, &log)?;
        }
        let trace = evaluate_parallel(&agent, &env, eval_range, config.parallel_eval)?;
        (trace, Some(log))
    } else {
        let policy = ZeroPolicy {
            n_actions: env.action_len(),
        };
        let trace = evaluate_parallel(&policy, &env, eval_range, config.parallel_eval)?;
        (trace, None)
    };

    let summary = summarize(
        config.scenario.label(),
        &trace,
        env.spec(),
        env.series(),
        config.violation_counting,
    )?;

    write_steps_csv(&artifacts.steps_csv, &trace, &env)?;
    write_fig4_csv(&artifacts.fig4_csv, &trace, &env)?;
    write_fig5_csv(&artifacts.fig5_csv, &summary)?;
    std::fs::write(
        &artifacts.summary_json,
        serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Numerical(format!("summary serialization: {e}")))?,
    )?;
    std::fs::write(&artifacts.summary_txt, comparison_table(&[&summary])?)?;

    Ok(RunOutput {
        summary,
        trace,
        training_log,
        artifacts,
    })
}

/// Splits the evaluation range into contiguous chunks and evaluates them on
/// worker threads; results are stitched back in order, so the trace is
/// identical to a serial run.
pub fn evaluate_parallel<P: Policy + Sync>(
    policy: &P,
    env: &Env,
    range: std::ops::Range<usize>,
    workers: usize,
) -> Result<EvalTrace> {
    if workers <= 1 || range.len() <= workers {
        return evaluate(policy, env, range);
    }
    let chunk = range.len().div_ceil(workers);
    let ranges: Vec<std::ops::Range<usize>> = (0..workers)
        .map(|w| {
            let start = range.start + w * chunk;
            let end = (start + chunk).min(range.end);
            start..end
        })
        .filter(|r| !r.is_empty())
        .collect();

    let parts: Vec<Result<EvalTrace>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .into_iter()
            .map(|r| scope.spawn(move || evaluate(policy, env, r)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    });

    let mut steps = Vec::with_capacity(range.len());
    for part in parts {
        steps.extend(part?.steps);
    }
    Ok(EvalTrace {
        start: range.start,
        end: range.end,
        steps,
    })
}

/// Renders summaries side by side with the shared column set plus the
/// median per-step Gini. All summaries must cover the same evaluation range.
pub fn compare_scenarios(summaries: &[&ScenarioSummary]) -> Result<String> {
    if summaries.len() < 2 {
        return Err(Error::RangeMismatch(format!(
            "comparison needs at least 2 summaries, got {}",
            summaries.len()
        )));
    }
    let first = summaries[0];
    for s in summaries {
        if (s.eval_start, s.eval_end) != (first.eval_start, first.eval_end) {
            return Err(Error::RangeMismatch(format!(
                "scenario {} covers steps {}..{}, scenario {} covers {}..{}",
                first.scenario, first.eval_start, first.eval_end, s.scenario, s.eval_start, s.eval_end
            )));
        }
    }
    comparison_table(summaries)
}

fn comparison_table(summaries: &[&ScenarioSummary]) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>14} {:>16} {:>14} {:>13} {:>10} {:>10} {:>12}",
        "Scenario",
        "Total PV (MWh)",
        "Curtailed (MWh)",
        "# Under volt.",
        "# Over volt.",
        "Min V (pu)",
        "Max V (pu)",
        "Median Gini"
    );
    for s in summaries {
        let gini = match s.median_gini() {
            Some(g) => format!("{g:.4}"),
            None => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<8} {:>14.4} {:>16.4} {:>14} {:>13} {:>10.4} {:>10.4} {:>12}",
            s.scenario,
            s.total_pv_mwh,
            s.curtailed_mwh,
            s.n_under,
            s.n_over,
            s.v_min_seen,
            s.v_max_seen,
            gini
        );
    }
    Ok(out)
}

fn write_training_log(path: &Path, log: &TrainingLog) -> Result<()> {
    let mut out = String::from("episode,return,critic_loss,mean_q\n");
    for ep in &log.episodes {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            ep.episode, ep.ret, ep.mean_critic_loss, ep.mean_q
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Per-step record: voltage envelope, raw reward terms, the weighted total,
/// per-PV curtailment, and the step Gini (empty when nothing is curtailed).
fn write_steps_csv(path: &Path, trace: &EvalTrace, env: &Env) -> Result<()> {
    let mut out = String::from("t,v_min,v_max,r_v,r_a,r_f,reward_total");
    for pv in &env.spec().pvs {
        let _ = write!(out, ",curtail_w:{}", pv.id);
    }
    out.push_str(",gini\n");
    for step in &trace.steps {
        let v_min = step.v_mag_pu.iter().copied().fold(f64::INFINITY, f64::min);
        let v_max = step
            .v_mag_pu
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            step.t, v_min, v_max, step.reward.r_v, step.reward.r_a, step.reward.r_f, step.reward.total
        );
        for d in &step.dispatches {
            let _ = write!(out, ",{}", d.curtail_w);
        }
        if step.dispatches.iter().any(|d| d.curtail_w > 0.0) {
            let curtailments: Vec<f64> = step.dispatches.iter().map(|d| d.curtail_w).collect();
            let _ = write!(out, ",{}", crate::metrics::gini(&curtailments)?);
        } else {
            out.push(',');
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Scatter-ready voltage envelope: per step, the min and max bus voltage and
/// whether both are inside the safe band.
fn write_fig4_csv(path: &Path, trace: &EvalTrace, env: &Env) -> Result<()> {
    let spec = env.spec();
    let mut out = String::from("t,v_min,v_max,in_range\n");
    for step in &trace.steps {
        let v_min = step.v_mag_pu.iter().copied().fold(f64::INFINITY, f64::min);
        let v_max = step
            .v_mag_pu
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let in_range = v_min >= spec.v_min_pu && v_max <= spec.v_max_pu;
        let _ = writeln!(out, "{},{},{},{}", step.t, v_min, v_max, u8::from(in_range));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Per-step Gini series, only for steps where someone is curtailed.
fn write_fig5_csv(path: &Path, summary: &ScenarioSummary) -> Result<()> {
    let mut out = String::from("t,gini\n");
    for &(t, g) in &summary.gini_series {
        let _ = writeln!(out, "{t},{g}");
    }
    std::fs::write(path, out)?;
    Ok(())
}
