use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use slicenet::domain::PlanningDecision;
use slicenet::harness::{self, metrics::render_compare, Checkpoint, ExperimentConfig};
use slicenet::mdp::SlicingEnv;
use slicenet::Result;

#[derive(Parser)]
#[command(version, about = "Two-timescale network slicing: train, baseline, evaluate, simulate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory; defaults to the config's `output_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the planner; writes episodes.csv, windows.csv and checkpoint.json.
    Train(Common),
    /// Run the myopic planner; writes episodes.csv and windows.csv.
    Baseline(Common),
    /// Compare a checkpoint with the myopic planner; writes compare.csv.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Defaults to `<out>/checkpoint.json`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Play one window under one plan and write per-slot delays.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Plan as JSON; defaults to the myopic plan for the window.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        window: usize,
    },
}

struct Run {
    cfg: ExperimentConfig,
    out: PathBuf,
    seed_given: bool,
}

fn prepare(c: &Common) -> Result<Run> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(e) = c.episodes {
        cfg.episodes = e;
    }
    let out = c
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    Ok(Run {
        cfg,
        out,
        seed_given: c.seed.is_some(),
    })
}

fn train(c: &Common) -> Result<()> {
    let run = prepare(c)?;
    let every = (run.cfg.episodes / 20).max(1) as u64;
    let t = harness::run_training_with(&run.cfg, |e| {
        if e.episode % every == 0 {
            info!("episode {:>5}  cost {:>10.3}  violations {}", e.episode, e.cost.total, e.violations);
        }
    })?;
    harness::write_episodes(&run.out.join("episodes.csv"), &t.metrics.episodes)?;
    harness::write_windows(&run.out.join("windows.csv"), &t.metrics.windows)?;
    Checkpoint::new(run.cfg.seed, &run.cfg.scenario, &t.agent).save(&run.out.join("checkpoint.json"))?;
    println!(
        "trained {} episodes in {:.1?}; outputs in {}",
        run.cfg.episodes,
        t.metrics.elapsed,
        run.out.display()
    );
    Ok(())
}

fn baseline(c: &Common) -> Result<()> {
    let run = prepare(c)?;
    let m = harness::run_baseline(&run.cfg, run.cfg.episodes)?;
    harness::write_episodes(&run.out.join("episodes.csv"), &m.episodes)?;
    harness::write_windows(&run.out.join("windows.csv"), &m.windows)?;
    let (mean, std) = harness::mean_std(&m.totals())?;
    println!(
        "baseline: {} episodes, lifecycle cost {mean:.3} ± {std:.3}, {:.1?}",
        m.episodes.len(),
        m.elapsed
    );
    Ok(())
}

fn eval(c: &Common, checkpoint: Option<&Path>) -> Result<()> {
    let mut run = prepare(c)?;
    if run.seed_given {
        let n = run.cfg.eval.seeds.len().max(1) as u64;
        run.cfg.eval.seeds = (run.cfg.seed..run.cfg.seed + n).collect();
    }
    let path = checkpoint.map_or_else(|| run.out.join("checkpoint.json"), Path::to_path_buf);
    let ck = Checkpoint::load(&path)?;
    let ev = harness::evaluate(&ck, &run.cfg)?;
    harness::write_compare(&run.out.join("compare.csv"), &ev.rows)?;
    harness::write_episodes(&run.out.join("eval_episodes.csv"), &ev.episodes)?;
    harness::write_windows(&run.out.join("eval_windows.csv"), &ev.windows)?;
    render_compare(&mut std::io::stdout(), &ev.rows)?;
    Ok(())
}

fn simulate(c: &Common, plan: Option<&Path>, window: usize) -> Result<()> {
    let run = prepare(c)?;
    let plan: PlanningDecision = match plan {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => {
            let mut env = SlicingEnv::new(run.cfg.scenario.clone(), run.cfg.seed)?;
            env.reset(0)?;
            for _ in 0..window {
                let keep = env.prev_plan().clone();
                env.step_plan(keep)?;
            }
            harness::baseline_plan(&env, &run.cfg.baseline.grid(&run.cfg.scenario))?
        }
    };
    let (out, report) = harness::simulate(&run.cfg.scenario, plan, run.cfg.seed, window)?;
    harness::write_slots(&run.out.join("slots.csv"), &report)?;
    println!("plan {}", serde_json::to_string(&out.plan)?);
    for r in &report.slots {
        let cells: Vec<String> = r
            .slices
            .iter()
            .map(|d| format!("{:>4} tasks {:>9.4} s (offload {:.4}, edge {:.4}, cloud {:.4})", d.tasks, d.total, d.offload, d.edge, d.cloud))
            .collect();
        println!("slot {:>4}  {}", r.slot, cells.join(" | "));
    }
    println!("mean delay {:?}", out.mean_delay);
    println!(
        "cost: deployment {:.3}, provisioning {:.3}, adjustment {:.3}, revenue {:.3}, total {:.3}",
        out.cost.deployment, out.cost.provisioning, out.cost.adjustment, out.cost.sla_revenue, out.cost.total
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Train(c) => train(c),
        Command::Baseline(c) => baseline(c),
        Command::Eval { common, checkpoint } => eval(common, checkpoint.as_deref()),
        Command::Simulate { common, plan, window } => simulate(common, plan.as_deref(), *window),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
