use std::fs;
use std::path::Path;
use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::{mean_std, CompareRow, EpisodeRecord, RunMetrics, WindowRecord};
use crate::baseline::{myopic_plan, SearchGrid};
use crate::ddpg::{Agent, AgentCheckpoint};
use crate::domain::{validate_plan, PlanningDecision};
use crate::error::{Error, Result};
use crate::mdp::{Scenario, SlicingEnv, Transition};
use crate::operation::WindowReport;
use crate::rng::{rng_for, stream};
use crate::traffic::sample_window;

pub const TAWS: &str = "taws";
pub const BASELINE: &str = "baseline";

const CHECKPOINT_FILE_FORMAT: u32 = 1;

/// On-disk training result: the scenario it was trained on and the full
/// agent state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub seed: u64,
    pub scenario: Scenario,
    pub agent: AgentCheckpoint,
}

impl Checkpoint {
    pub fn new(seed: u64, scenario: &Scenario, agent: &Agent) -> Self {
        Checkpoint {
            format: CHECKPOINT_FILE_FORMAT,
            seed,
            scenario: scenario.clone(),
            agent: agent.checkpoint(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        if c.format != CHECKPOINT_FILE_FORMAT {
            return Err(Error::CheckpointMismatch(format!("unknown file format {}", c.format)));
        }
        Ok(c)
    }

    pub fn agent(&self) -> Result<Agent> {
        Agent::from_checkpoint(self.agent.clone())
    }

    /// The policy only transfers to scenarios with the same network and
    /// slice set; arrival rates and densities may differ.
    pub fn check_compatible(&self, scenario: &Scenario) -> Result<()> {
        if self.scenario.topology != scenario.topology {
            return Err(Error::CheckpointMismatch("topology differs".into()));
        }
        if self.scenario.slices.len() != scenario.slices.len() || self.scenario.h_max != scenario.h_max {
            return Err(Error::CheckpointMismatch("slice count or h_max differs".into()));
        }
        let dims = (self.agent.state_dim, self.agent.action_dim);
        let env_dims = (
            crate::mdp::state_dim(&scenario.topology, scenario.slices.len()),
            scenario.shape().action_dim(&scenario.topology),
        );
        if dims != env_dims {
            return Err(Error::CheckpointMismatch(format!("agent dimensions {dims:?}, scenario {env_dims:?}")));
        }
        Ok(())
    }
}

pub struct Training {
    pub metrics: RunMetrics,
    pub agent: Agent,
}

/// One training episode: explore, play the window, store the transition,
/// update the networks, for every window.
pub fn train_episode(env: &mut SlicingEnv, agent: &mut Agent, episode: u64) -> Result<(Vec<WindowRecord>, EpisodeRecord)> {
    let slices = env.scenario().slices.clone();
    let mut state = env.reset(episode)?;
    let mut windows = Vec::with_capacity(env.num_windows());
    let mut losses = Vec::new();
    let noise = agent.noise_scale();
    while !env.is_done() {
        let action = agent.explore(&state)?;
        let out = env.step(&action)?;
        let violations = validate_plan(&out.plan, &env.scenario().topology, slices.len())?;
        assert!(violations.is_empty(), "executed plan is infeasible: {violations:?}");
        agent.observe(Transition {
            state,
            action,
            reward: out.reward,
            next_state: out.next_state.clone(),
        })?;
        if let Some(stats) = agent.learn()? {
            losses.push(stats.critic_loss);
        }
        windows.push(WindowRecord::from_outcome(TAWS, env.seed(), episode, &out, &slices));
        state = out.next_state;
    }
    agent.end_episode();
    let mut rec = EpisodeRecord::aggregate(TAWS, env.seed(), episode, &windows);
    rec.critic_loss = (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64);
    rec.noise = Some(noise);
    Ok((windows, rec))
}

pub fn run_training(cfg: &ExperimentConfig) -> Result<Training> {
    run_training_with(cfg, |_| {})
}

/// Trains a fresh agent for `cfg.episodes` episodes, calling `on_episode`
/// after each one.
pub fn run_training_with(cfg: &ExperimentConfig, mut on_episode: impl FnMut(&EpisodeRecord)) -> Result<Training> {
    cfg.validate()?;
    let start = Instant::now();
    let mut env = SlicingEnv::new(cfg.scenario.clone(), cfg.seed)?;
    let mut agent = Agent::new(env.state_dim(), env.action_dim(), cfg.agent.clone(), cfg.seed)?;
    let mut metrics = RunMetrics::default();
    for e in 0..cfg.episodes as u64 {
        let (windows, rec) = train_episode(&mut env, &mut agent, e)?;
        debug!("episode {e}: cost {:.3}", rec.cost.total);
        on_episode(&rec);
        metrics.windows.extend(windows);
        metrics.episodes.push(rec);
    }
    metrics.elapsed = start.elapsed();
    info!("trained {} episodes in {:.1?}", cfg.episodes, metrics.elapsed);
    Ok(Training { metrics, agent })
}

/// Greedy rollout of `agent` over one episode.
pub fn rollout_policy(env: &mut SlicingEnv, agent: &Agent, episode: u64) -> Result<Vec<WindowRecord>> {
    let slices = env.scenario().slices.clone();
    let mut state = env.reset(episode)?;
    let mut out = Vec::with_capacity(env.num_windows());
    while !env.is_done() {
        let step = env.step(&agent.policy(&state)?)?;
        out.push(WindowRecord::from_outcome(TAWS, env.seed(), episode, &step, &slices));
        state = step.next_state;
    }
    Ok(out)
}

/// The myopic plan for the environment's current window. The planner sees
/// the window's density and the current backlogs, and draws its own
/// traffic sample, independent of the traffic the window is played on.
pub fn baseline_plan(env: &SlicingEnv, grid: &SearchGrid) -> Result<PlanningDecision> {
    let s = env.scenario();
    let mut rng = rng_for(env.seed(), &[stream::BASELINE_SAMPLE, env.episode(), env.window() as u64]);
    let sample = sample_window(env.density(), env.slots_per_window(), &s.topology, &s.slices, &s.traffic, &mut rng);
    let (plan, _) = myopic_plan(grid, &sample, env.queues(), &env.context(), &s.cost)?;
    Ok(plan)
}

/// One episode under the myopic planner; realized costs include switching.
pub fn rollout_baseline(env: &mut SlicingEnv, grid: &SearchGrid, episode: u64) -> Result<Vec<WindowRecord>> {
    let slices = env.scenario().slices.clone();
    env.reset(episode)?;
    let mut out = Vec::with_capacity(env.num_windows());
    while !env.is_done() {
        let plan = baseline_plan(env, grid)?;
        let step = env.step_plan(plan)?;
        out.push(WindowRecord::from_outcome(BASELINE, env.seed(), episode, &step, &slices));
    }
    Ok(out)
}

/// Plays one window of `scenario` under a fixed plan.
pub fn simulate(scenario: &Scenario, plan: PlanningDecision, seed: u64, window: usize) -> Result<(crate::mdp::StepOutcome, WindowReport)> {
    let mut env = SlicingEnv::new(scenario.clone(), seed)?;
    env.reset(0)?;
    if window >= env.num_windows() {
        return Err(Error::Config(format!("window {window} is past the lifecycle of {} windows", env.num_windows())));
    }
    for _ in 0..window {
        let keep = env.prev_plan().clone();
        env.step_plan(keep)?;
    }
    env.step_plan_report(plan)
}

/// Baseline episodes `0..episodes` on the configured seed, played
/// concurrently.
pub fn run_baseline(cfg: &ExperimentConfig, episodes: usize) -> Result<RunMetrics> {
    cfg.validate()?;
    let start = Instant::now();
    let grid = cfg.baseline.grid(&cfg.scenario);
    let env = SlicingEnv::new(cfg.scenario.clone(), cfg.seed)?;
    let runs: Vec<Vec<WindowRecord>> = (0..episodes as u64)
        .into_par_iter()
        .map(|e| rollout_baseline(&mut env.clone(), &grid, e))
        .collect::<Result<_>>()?;
    let mut metrics = RunMetrics::default();
    for (e, w) in runs.into_iter().enumerate() {
        metrics.episodes.push(EpisodeRecord::aggregate(BASELINE, cfg.seed, e as u64, &w));
        metrics.windows.extend(w);
    }
    metrics.elapsed = start.elapsed();
    Ok(metrics)
}

pub struct Evaluation {
    pub rows: Vec<CompareRow>,
    pub episodes: Vec<EpisodeRecord>,
    pub windows: Vec<WindowRecord>,
}

/// Greedy policy against the myopic planner on every evaluation seed and
/// arrival rate. Both planners of a `(rate, seed)` pair see the same
/// traffic.
pub fn evaluate(checkpoint: &Checkpoint, cfg: &ExperimentConfig) -> Result<Evaluation> {
    cfg.validate()?;
    if cfg.eval.seeds.is_empty() {
        return Err(Error::Config("evaluation needs at least one seed".into()));
    }
    let agent = checkpoint.agent()?;
    let rates: Vec<Option<f64>> = if cfg.eval.arrival_rates.is_empty() {
        vec![None]
    } else {
        cfg.eval.arrival_rates.iter().map(|&r| Some(r)).collect()
    };
    let mut eval = Evaluation {
        rows: Vec::new(),
        episodes: Vec::new(),
        windows: Vec::new(),
    };
    for rate in rates {
        let scenario = rate.map_or_else(|| cfg.scenario.clone(), |r| cfg.scenario_at(r));
        checkpoint.check_compatible(&scenario)?;
        let grid = cfg.baseline.grid(&scenario);
        let runs: Vec<(Vec<WindowRecord>, Vec<WindowRecord>)> = cfg
            .eval
            .seeds
            .par_iter()
            .map(|&seed| {
                let mut env = SlicingEnv::new(scenario.clone(), seed)?;
                let taws = rollout_policy(&mut env, &agent, 0)?;
                let base = rollout_baseline(&mut env, &grid, 0)?;
                Ok((taws, base))
            })
            .collect::<Result<_>>()?;
        let mut taws_totals = Vec::new();
        let mut base_totals = Vec::new();
        for (seed, (mut taws, mut base)) in cfg.eval.seeds.iter().zip(runs) {
            for w in taws.iter_mut().chain(base.iter_mut()) {
                w.arrival_rate = rate;
            }
            let t = EpisodeRecord::aggregate(TAWS, *seed, 0, &taws);
            let b = EpisodeRecord::aggregate(BASELINE, *seed, 0, &base);
            taws_totals.push(t.cost.total);
            base_totals.push(b.cost.total);
            eval.episodes.extend([t, b]);
            eval.windows.extend(taws);
            eval.windows.extend(base);
        }
        let (taws_mean, taws_std) = mean_std(&taws_totals)?;
        let (baseline_mean, baseline_std) = mean_std(&base_totals)?;
        eval.rows.push(CompareRow {
            arrival_rate: rate,
            seeds: cfg.eval.seeds.len(),
            taws_mean,
            taws_std,
            baseline_mean,
            baseline_std,
        });
    }
    Ok(eval)
}
