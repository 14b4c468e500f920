use std::io::Write;
use std::path::Path;
use std::time::Duration;

use crate::cost::CostBreakdown;
use crate::domain::SliceSpec;
use crate::error::{Error, Result};
use crate::mdp::StepOutcome;
use crate::operation::WindowReport;

/// One played window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowRecord {
    pub planner: String,
    /// Traffic seed of the environment.
    pub seed: u64,
    pub episode: u64,
    pub window: usize,
    /// Sweep value when the run is part of an arrival-rate sweep.
    pub arrival_rate: Option<f64>,
    pub cost: CostBreakdown,
    pub mean_delay: Vec<f64>,
    /// Slices whose mean delay exceeded the deadline.
    pub violations: usize,
    pub active_small: usize,
}

impl WindowRecord {
    pub fn from_outcome(planner: &str, seed: u64, episode: u64, out: &StepOutcome, slices: &[SliceSpec]) -> Self {
        WindowRecord {
            planner: planner.to_string(),
            seed,
            episode,
            window: out.window,
            arrival_rate: None,
            cost: out.cost,
            mean_delay: out.mean_delay.clone(),
            violations: sla_violations(&out.mean_delay, slices),
            active_small: out.plan.active_small_count(),
        }
    }
}

pub fn sla_violations(mean_delay: &[f64], slices: &[SliceSpec]) -> usize {
    mean_delay
        .iter()
        .zip(slices)
        .filter(|(d, s)| !(**d <= s.deadline))
        .count()
}

/// Sum of one episode's windows.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub planner: String,
    pub seed: u64,
    pub episode: u64,
    pub cost: CostBreakdown,
    pub violations: usize,
    /// Mean critic loss over the episode's updates, if any happened.
    pub critic_loss: Option<f64>,
    pub noise: Option<f64>,
}

impl EpisodeRecord {
    /// Windows are summed in order, component by component.
    pub fn aggregate(planner: &str, seed: u64, episode: u64, windows: &[WindowRecord]) -> Self {
        let (mut d, mut p, mut s, mut q) = (0.0, 0.0, 0.0, 0.0);
        let mut total = 0.0;
        for w in windows {
            d += w.cost.deployment;
            p += w.cost.provisioning;
            s += w.cost.adjustment;
            q += w.cost.sla_revenue;
            total += w.cost.total;
        }
        EpisodeRecord {
            planner: planner.to_string(),
            seed,
            episode,
            cost: CostBreakdown {
                deployment: d,
                provisioning: p,
                adjustment: s,
                sla_revenue: q,
                total,
            },
            violations: windows.iter().map(|w| w.violations).sum(),
            critic_loss: None,
            noise: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetrics {
    pub episodes: Vec<EpisodeRecord>,
    pub windows: Vec<WindowRecord>,
    /// Not written to any CSV, so outputs stay byte-identical across runs.
    pub elapsed: Duration,
}

impl RunMetrics {
    pub fn totals(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.cost.total).collect()
    }
}

/// Centered mean over `window` points, truncated at both ends.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if window == 0 {
        return Err(Error::Config("moving average window must be positive".into()));
    }
    let before = (window - 1) / 2;
    let after = window - 1 - before;
    Ok((0..series.len())
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after).min(series.len() - 1);
            series[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect())
}

/// Mean and sample standard deviation; zero spread for one value.
pub fn mean_std(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// One arrival rate of the planner comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub arrival_rate: Option<f64>,
    pub seeds: usize,
    pub taws_mean: f64,
    pub taws_std: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
}

impl CompareRow {
    /// Cost saved by the learned planner relative to the baseline's
    /// magnitude, in percent.
    pub fn gap_percent(&self) -> f64 {
        100.0 * (self.baseline_mean - self.taws_mean) / self.baseline_mean.abs()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_path(path)?)
}

pub fn write_episodes(path: &Path, rows: &[EpisodeRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "planner", "seed", "episode", "phi_d", "phi_p", "phi_s", "phi_q", "total", "violations", "critic_loss", "noise",
    ])?;
    for r in rows {
        w.write_record([
            r.planner.clone(),
            r.seed.to_string(),
            r.episode.to_string(),
            r.cost.deployment.to_string(),
            r.cost.provisioning.to_string(),
            r.cost.adjustment.to_string(),
            r.cost.sla_revenue.to_string(),
            r.cost.total.to_string(),
            r.violations.to_string(),
            opt(r.critic_loss),
            opt(r.noise),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Leading columns `window,phi_d,phi_p,phi_s,phi_q,total`, then the run
/// identifiers and per-slice mean delays.
pub fn write_windows(path: &Path, rows: &[WindowRecord]) -> Result<()> {
    let slices = rows.first().map_or(0, |r| r.mean_delay.len());
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = ["window", "phi_d", "phi_p", "phi_s", "phi_q", "total", "planner", "seed", "episode", "arrival_rate"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..slices).map(|k| format!("delay_{k}")));
    header.extend(["violations".to_string(), "active_small".to_string()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.window.to_string(),
            r.cost.deployment.to_string(),
            r.cost.provisioning.to_string(),
            r.cost.adjustment.to_string(),
            r.cost.sla_revenue.to_string(),
            r.cost.total.to_string(),
            r.planner.clone(),
            r.seed.to_string(),
            r.episode.to_string(),
            opt(r.arrival_rate),
        ];
        rec.extend(r.mean_delay.iter().map(|d| d.to_string()));
        rec.push(r.violations.to_string());
        rec.push(r.active_small.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_compare(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "arrival_rate", "seeds", "taws_mean", "taws_std", "baseline_mean", "baseline_std", "gap_percent",
    ])?;
    for r in rows {
        w.write_record([
            opt(r.arrival_rate),
            r.seeds.to_string(),
            r.taws_mean.to_string(),
            r.taws_std.to_string(),
            r.baseline_mean.to_string(),
            r.baseline_std.to_string(),
            r.gap_percent().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-slot, per-slice delay components of one simulated window.
pub fn write_slots(path: &Path, report: &WindowReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["slot", "slice", "vehicles", "tasks", "offload", "edge", "cloud", "total"])?;
    for r in &report.slots {
        for (k, d) in r.slices.iter().enumerate() {
            w.write_record([
                r.slot.to_string(),
                k.to_string(),
                d.vehicles.to_string(),
                d.tasks.to_string(),
                d.offload.to_string(),
                d.edge.to_string(),
                d.cloud.to_string(),
                d.total.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Plain-text rendering of the comparison for terminals.
pub fn render_compare(out: &mut impl Write, rows: &[CompareRow]) -> std::io::Result<()> {
    writeln!(out, "{:>8} {:>5} {:>22} {:>22} {:>8}", "rate", "seeds", "taws", "baseline", "gap %")?;
    for r in rows {
        writeln!(
            out,
            "{:>8} {:>5} {:>11.3} ± {:<8.3} {:>11.3} ± {:<8.3} {:>8.2}",
            r.arrival_rate.map_or("-".to_string(), |x| x.to_string()),
            r.seeds,
            r.taws_mean,
            r.taws_std,
            r.baseline_mean,
            r.baseline_std,
            r.gap_percent()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_series_is_unchanged() {
        assert_eq!(moving_average(&[2.5; 7], 5).unwrap(), vec![2.5; 7]);
    }

    #[test]
    fn spike_is_spread_over_five_points() {
        let out = moving_average(&[0.0, 0.0, 5.0, 0.0, 0.0], 5).unwrap();
        assert_eq!(out[2], 1.0);
        // Edges average over the points that exist.
        assert!((out[0] - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(out[1], 1.25);
    }

    #[test]
    fn empty_series_is_an_error() {
        assert!(matches!(moving_average(&[], 5), Err(Error::EmptySeries)));
    }

    fn naive(xs: &[f64]) -> Vec<f64> {
        let n = xs.len() as i64;
        (0..n)
            .map(|i| {
                let idx: Vec<i64> = (i - 2..=i + 2).filter(|j| *j >= 0 && *j < n).collect();
                idx.iter().map(|&j| xs[j as usize]).sum::<f64>() / idx.len() as f64
            })
            .collect()
    }

    proptest! {
        #[test]
        fn matches_index_filter_implementation(xs in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let a = moving_average(&xs, 5).unwrap();
            let b = naive(&xs);
            prop_assert_eq!(a.len(), xs.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn episode_total_is_sum_of_windows() {
        let w = |t: f64| WindowRecord {
            planner: "x".into(),
            seed: 0,
            episode: 0,
            window: 0,
            arrival_rate: None,
            cost: CostBreakdown::new(1.0, t, 0.5, 2.0),
            mean_delay: vec![0.0],
            violations: 1,
            active_small: 0,
        };
        let rows = [w(1.0), w(2.0), w(3.5)];
        let e = EpisodeRecord::aggregate("x", 0, 0, &rows);
        assert_eq!(e.cost.total, rows.iter().map(|r| r.cost.total).sum::<f64>());
        assert_eq!(e.cost.provisioning, 6.5);
        assert_eq!(e.violations, 3);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]).unwrap(), (4.0, 0.0));
    }
}
