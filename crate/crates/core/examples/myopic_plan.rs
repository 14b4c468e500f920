//! The myopic planner's choice for the first window of the default
//! scenario, and what that plan costs when played.

use slicenet::harness::{baseline_plan, ExperimentConfig};
use slicenet::mdp::SlicingEnv;
use std::time::Instant;

fn main() -> slicenet::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.json");
    let cfg = ExperimentConfig::load(path)?;
    let grid = cfg.baseline.grid(&cfg.scenario);
    let mut env = SlicingEnv::new(cfg.scenario.clone(), cfg.seed)?;
    env.reset(0)?;
    for _ in 0..3 {
        let start = Instant::now();
        let plan = baseline_plan(&env, &grid)?;
        let took = start.elapsed();
        let out = env.step_plan(plan)?;
        println!("window {} (searched in {took:.1?})", out.window);
        println!("  activation {:?}", out.plan.activation);
        println!("  spectrum   {:?}", out.plan.spectrum);
        println!("  edge VMs   {:?}", out.plan.compute);
        println!("  cloud VMs  {:?}", out.plan.cloud);
        println!("  mean delay {:.4?}, cost {:.3}", out.mean_delay, out.cost.total);
    }
    Ok(())
}
