//! Short training run on the default scenario with a smoothed cost curve.
//!
//! `cargo run --release --example train_agent -- 100`

use slicenet::harness::{moving_average, run_training, ExperimentConfig};

fn main() -> slicenet::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(60);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.json");
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.episodes = episodes;
    let t = run_training(&cfg)?;
    let totals = t.metrics.totals();
    let smooth = moving_average(&totals, 10)?;
    for (e, (raw, avg)) in totals.iter().zip(&smooth).enumerate().step_by((episodes / 15).max(1)) {
        println!("episode {e:>4}  cost {raw:>9.2}  smoothed {avg:>9.2}");
    }
    println!("{} episodes in {:.1?}", episodes, t.metrics.elapsed);
    Ok(())
}
