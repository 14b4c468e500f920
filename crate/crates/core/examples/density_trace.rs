//! Drive the environment from a density trace instead of the synthetic
//! pattern. The trace wraps when the lifecycle is longer than it.

use std::io::Write;

use slicenet::domain::PlanningDecision;
use slicenet::mdp::{DensitySpec, Scenario, SlicingEnv};

fn main() -> slicenet::Result<()> {
    let dir = std::env::temp_dir().join("slicenet-trace-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("density.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "window,region,density")?;
    for w in 0..6 {
        for j in 0..16 {
            let rush = if w % 3 == 1 { 1.2 } else { 0.2 };
            writeln!(f, "{w},{j},{:.2}", rush + 0.05 * (j % 4) as f64)?;
        }
    }
    drop(f);

    let mut scenario = Scenario::reference(2.0, 0.0);
    scenario.density = DensitySpec::Trace(path);
    scenario.timescales.windows = 8;
    scenario.timescales.simulated_slots = Some(10);
    // Everything on the macro station, small stations off.
    let plan = PlanningDecision {
        activation: vec![false, false],
        spectrum: vec![vec![5, 0, 0], vec![5, 0, 0]],
        compute: vec![vec![6, 0, 0], vec![4, 0, 0]],
        cloud: vec![2, 2],
    };
    let mut env = SlicingEnv::new(scenario, 1)?;
    env.reset(0)?;
    while !env.is_done() {
        let total = env.density().total();
        let out = env.step_plan(plan.clone())?;
        println!("window {}: vehicles expected {total:>5.2}, mean delay {:.4?}", out.window, out.mean_delay);
    }
    Ok(())
}
