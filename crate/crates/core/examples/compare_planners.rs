//! Train on oscillating demand, then compare the learned planner with the
//! myopic one on shared traffic.
//!
//! `cargo run --release --example compare_planners`

use slicenet::harness::{evaluate, metrics::render_compare, run_training, Checkpoint, ExperimentConfig};

fn main() -> slicenet::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/oscillating.json");
    let cfg = ExperimentConfig::load(path)?;
    let t = run_training(&cfg)?;
    let ck = Checkpoint::new(cfg.seed, &cfg.scenario, &t.agent);
    let ev = evaluate(&ck, &cfg)?;
    render_compare(&mut std::io::stdout(), &ev.rows)?;

    let switching = |planner: &str| -> f64 {
        ev.episodes.iter().filter(|e| e.planner == planner).map(|e| e.cost.adjustment).sum()
    };
    println!("adjustment cost over all seeds: taws {:.1}, baseline {:.1}", switching("taws"), switching("baseline"));
    Ok(())
}
