//! Small-timescale operation: per-slot spectrum allocation and task
//! dispatching in closed form, the resulting service delay, and backlog
//! evolution across the slots of one planning window.
//!
//! Both decisions separate per (slice, station): spectrum only affects the
//! offloading term of the slot delay, dispatching only the processing term.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::domain::{OperationDecision, PlanningDecision, QueueState, SliceSpec, Topology};
use crate::error::{Error, Result};
use crate::traffic::SlotObservation;

/// Radio constants in the units they are usually quoted in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Bandwidth of one subcarrier, Hz.
    pub subcarrier_bandwidth: f64,
    /// dBm/Hz.
    pub noise_density: f64,
    /// dBm/Hz.
    pub interference_density: f64,
    /// Vehicle transmit power, dBm.
    pub tx_power: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            subcarrier_bandwidth: 20e6,
            noise_density: -174.0,
            interference_density: -164.0,
            tx_power: 27.0,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl RadioParams {
    pub fn link_budget(&self) -> Result<LinkBudget> {
        if !(self.subcarrier_bandwidth > 0.0) {
            return Err(Error::Config("subcarrier bandwidth must be positive".into()));
        }
        Ok(LinkBudget {
            bandwidth: self.subcarrier_bandwidth,
            tx_power: dbm_to_watts(self.tx_power),
            noise_plus_interference: dbm_to_watts(self.noise_density)
                + dbm_to_watts(self.interference_density),
        })
    }
}

/// Radio constants converted once to linear units (W, W/Hz).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget {
    pub bandwidth: f64,
    pub tx_power: f64,
    pub noise_plus_interference: f64,
}

/// `beta * log2(1 + P g / (beta N_o + beta I))`, bits/s on one subcarrier.
pub fn subcarrier_rate(gain: f64, link: &LinkBudget) -> f64 {
    let snr = link.tx_power * gain / (link.bandwidth * link.noise_plus_interference);
    link.bandwidth * snr.ln_1p() / std::f64::consts::LN_2
}

/// Optimal spectrum split at one station: `y_n ∝ sqrt(1 / R_n)`.
pub fn allocate_spectrum(rates: &[f64]) -> Result<Vec<f64>> {
    if rates.is_empty() {
        return Err(Error::Domain("spectrum allocation needs at least one vehicle".into()));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::Domain(format!("rate must be positive and finite, got {r}")));
    }
    let weights: Vec<f64> = rates.iter().map(|r| (1.0 / r).sqrt()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// `xi / (y b R)` seconds.
pub fn offloading_delay(task_size: f64, fraction: f64, subcarriers: u32, rate: f64) -> Result<f64> {
    if task_size == 0.0 {
        return Ok(0.0);
    }
    if subcarriers == 0 {
        return Err(Error::Domain("no spectrum reserved".into()));
    }
    Ok(task_size / (fraction * subcarriers as f64 * rate))
}

/// `(Q + (A - x + 1) xi / 2) eta / (c F_e)` seconds.
///
/// With no edge VMs the delay is infinite; it is an error only when tasks
/// are actually kept at the edge.
pub fn edge_delay(
    backlog: f64,
    tasks: u32,
    dispatched: u32,
    task_size: f64,
    intensity: f64,
    vms: u32,
    edge_hz: f64,
) -> Result<f64> {
    if dispatched > tasks {
        return Err(Error::Infeasible(format!("dispatched {dispatched} of {tasks} tasks")));
    }
    let kept = tasks - dispatched;
    if vms == 0 {
        if kept > 0 {
            return Err(Error::Domain("no edge compute reserved".into()));
        }
        return Ok(f64::INFINITY);
    }
    Ok((backlog + (kept as f64 + 1.0) * task_size / 2.0) * intensity / (vms as f64 * edge_hz))
}

/// `d_r + xi eta / (h F_c)` seconds.
pub fn cloud_delay(task_size: f64, intensity: f64, cloud_vms: u32, cloud_hz: f64, rtt: f64) -> f64 {
    rtt + task_size * intensity / (cloud_vms as f64 * cloud_hz)
}

/// One station's dispatching subproblem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispatchInput {
    pub tasks: u32,
    pub backlog: f64,
    pub task_size: f64,
    pub intensity: f64,
    pub edge_vms: u32,
    pub edge_hz: f64,
    pub cloud_vms: u32,
    pub cloud_hz: f64,
    pub rtt: f64,
}

impl DispatchInput {
    pub fn edge_delay(&self, dispatched: u32) -> f64 {
        match edge_delay(
            self.backlog,
            self.tasks,
            dispatched,
            self.task_size,
            self.intensity,
            self.edge_vms,
            self.edge_hz,
        ) {
            Ok(d) => d,
            Err(_) => f64::INFINITY,
        }
    }

    pub fn cloud_delay(&self) -> f64 {
        cloud_delay(self.task_size, self.intensity, self.cloud_vms, self.cloud_hz, self.rtt)
    }

    /// Total processing delay of the slot's tasks when `dispatched` go to the
    /// cloud. Terms with no tasks contribute nothing.
    pub fn objective(&self, dispatched: u32) -> f64 {
        let kept = self.tasks - dispatched;
        let edge = if kept > 0 {
            self.edge_delay(dispatched) * kept as f64
        } else {
            0.0
        };
        let cloud = if dispatched > 0 {
            self.cloud_delay() * dispatched as f64
        } else {
            0.0
        };
        edge + cloud
    }

    /// Stationary point of the processing-delay quadratic, unclamped.
    pub fn continuous_minimizer(&self) -> f64 {
        let a = self.tasks as f64;
        let xi = self.task_size;
        let nu1 = self.intensity / (self.edge_vms as f64 * self.edge_hz);
        let nu2 = self.cloud_delay();
        let nu3 = self.backlog + (a + 1.0) * xi / 2.0;
        (nu1 * nu3 + xi * nu1 * a / 2.0 - nu2) / (nu1 * xi)
    }
}

/// Integer number of tasks to send to the cloud.
///
/// The continuous minimiser is clamped to `[0, A]` and the better of its
/// floor and ceiling is taken, ties to the smaller count. Without edge VMs
/// every task goes to the cloud.
pub fn dispatch_tasks(p: &DispatchInput) -> u32 {
    if p.tasks == 0 {
        return 0;
    }
    if p.edge_vms == 0 {
        debug!("no edge VMs reserved: dispatching all {} tasks to the cloud", p.tasks);
        return p.tasks;
    }
    let x = p.continuous_minimizer();
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, p.tasks as f64) };
    let (lo, hi) = (x.floor() as u32, x.ceil() as u32);
    if hi != lo && p.objective(hi) < p.objective(lo) {
        hi
    } else {
        lo
    }
}

/// Edge and cloud processing speeds, and the slot length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComputeParams {
    /// Cycles/s of one edge VM.
    pub edge_vm_hz: f64,
    /// Cycles/s of one cloud VM.
    pub cloud_vm_hz: f64,
    /// Seconds.
    pub slot_duration: f64,
}

impl Default for ComputeParams {
    fn default() -> Self {
        ComputeParams {
            edge_vm_hz: 10e9,
            cloud_vm_hz: 100e9,
            slot_duration: 1.0,
        }
    }
}

/// Everything the per-slot solvers need besides the slot and the plan.
#[derive(Clone, Copy, Debug)]
pub struct OperationContext<'a> {
    pub topo: &'a Topology,
    pub slices: &'a [SliceSpec],
    pub link: LinkBudget,
    pub compute: ComputeParams,
}

/// Where each vehicle of one slice is served in a slot.
///
/// A vehicle is served by its associated station if that station hosts the
/// slice with at least one subcarrier; otherwise by the macro station
/// nearest to it.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceRouting {
    pub serving: Vec<usize>,
    /// Vehicle indices per serving station.
    pub members: Vec<Vec<usize>>,
    /// Tasks per serving station.
    pub tasks: Vec<u32>,
}

pub fn serving_station(plan: &PlanningDecision, topo: &Topology, slice: usize, station: usize) -> usize {
    if topo.station(station).is_macro()
        || (plan.is_active(topo, station) && plan.spectrum[slice][station] > 0)
    {
        station
    } else {
        topo.nearest_macro(station)
    }
}

pub fn route_slice(obs: &SlotObservation, plan: &PlanningDecision, topo: &Topology, slice: usize) -> SliceRouting {
    let m = topo.num_stations();
    let mut members = vec![Vec::new(); m];
    let mut tasks = vec![0u32; m];
    let serving: Vec<usize> = obs
        .vehicles
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let s = serving_station(plan, topo, slice, v.associated_bs);
            members[s].push(n);
            tasks[s] += obs.arrivals.per_vehicle[slice][n];
            s
        })
        .collect();
    SliceRouting {
        serving,
        members,
        tasks,
    }
}

fn dispatch_input(
    ctx: &OperationContext<'_>,
    plan: &PlanningDecision,
    queues: &QueueState,
    obs: &SlotObservation,
    k: usize,
    m: usize,
    tasks: u32,
) -> DispatchInput {
    let s = &ctx.slices[k];
    DispatchInput {
        tasks,
        backlog: queues.backlog[k][m],
        task_size: s.task_size,
        intensity: s.compute_intensity,
        edge_vms: if plan.is_active(ctx.topo, m) { plan.compute[k][m] } else { 0 },
        edge_hz: ctx.compute.edge_vm_hz,
        cloud_vms: plan.cloud[k],
        cloud_hz: ctx.compute.cloud_vm_hz,
        rtt: obs.backbone_rtt,
    }
}

/// Closed-form operation decision for every (slice, station) of the slot.
pub fn decide_slot(
    obs: &SlotObservation,
    plan: &PlanningDecision,
    queues: &QueueState,
    ctx: &OperationContext<'_>,
) -> Result<OperationDecision> {
    let (ks, m) = (ctx.slices.len(), ctx.topo.num_stations());
    let mut fractions = vec![vec![0.0; obs.num_vehicles()]; ks];
    let mut dispatch = vec![vec![0u32; m]; ks];
    for k in 0..ks {
        let routing = route_slice(obs, plan, ctx.topo, k);
        for j in 0..m {
            let members = &routing.members[j];
            if !members.is_empty() {
                let rates: Vec<f64> = members
                    .iter()
                    .map(|&n| subcarrier_rate(obs.vehicles[n].gains[j], &ctx.link))
                    .collect();
                for (&n, y) in members.iter().zip(allocate_spectrum(&rates)?) {
                    fractions[k][n] = y;
                }
            }
            dispatch[k][j] = dispatch_tasks(&dispatch_input(ctx, plan, queues, obs, k, j, routing.tasks[j]));
        }
    }
    Ok(OperationDecision {
        spectrum_fractions: fractions,
        dispatch,
    })
}

/// One slice's delay in one slot, seconds.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SliceDelay {
    /// Offloading term plus processing term.
    pub total: f64,
    pub offload: f64,
    /// Edge share of the processing term.
    pub edge: f64,
    /// Cloud share of the processing term.
    pub cloud: f64,
    pub vehicles: usize,
    pub tasks: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayReport {
    pub slot: usize,
    pub slices: Vec<SliceDelay>,
}

fn check_decision(
    obs: &SlotObservation,
    plan: &PlanningDecision,
    decision: &OperationDecision,
    ctx: &OperationContext<'_>,
) -> Result<Vec<SliceRouting>> {
    let (ks, m, n) = (ctx.slices.len(), ctx.topo.num_stations(), obs.num_vehicles());
    if decision.spectrum_fractions.len() != ks || decision.dispatch.len() != ks {
        return Err(Error::dim("operation decision slices", ks, decision.dispatch.len()));
    }
    let mut routings = Vec::with_capacity(ks);
    for k in 0..ks {
        let y = &decision.spectrum_fractions[k];
        let x = &decision.dispatch[k];
        if y.len() != n {
            return Err(Error::dim("spectrum fractions", n, y.len()));
        }
        if x.len() != m {
            return Err(Error::dim("dispatch counts", m, x.len()));
        }
        let routing = route_slice(obs, plan, ctx.topo, k);
        for j in 0..m {
            if x[j] > routing.tasks[j] {
                return Err(Error::Infeasible(format!(
                    "slice {k}, station {j}: dispatch {} exceeds {} tasks",
                    x[j], routing.tasks[j]
                )));
            }
            let members = &routing.members[j];
            if members.is_empty() {
                continue;
            }
            if members.iter().any(|&v| !(y[v] >= 0.0 && y[v].is_finite())) {
                return Err(Error::Infeasible(format!("slice {k}, station {j}: bad spectrum fraction")));
            }
            let sum: f64 = members.iter().map(|&v| y[v]).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Infeasible(format!(
                    "slice {k}, station {j}: spectrum fractions sum to {sum}"
                )));
            }
        }
        routings.push(routing);
    }
    Ok(routings)
}

/// Average per-task service delay of every slice in one slot.
///
/// The offloading term averages over all vehicles in the slot, the
/// processing term over all tasks; an empty denominator makes its term zero.
/// A vehicle served where its slice holds no subcarriers has infinite
/// offloading delay.
pub fn slot_delay(
    obs: &SlotObservation,
    plan: &PlanningDecision,
    decision: &OperationDecision,
    queues: &QueueState,
    ctx: &OperationContext<'_>,
) -> Result<DelayReport> {
    let routings = check_decision(obs, plan, decision, ctx)?;
    let m = ctx.topo.num_stations();
    let mut slices = Vec::with_capacity(ctx.slices.len());
    for (k, routing) in routings.iter().enumerate() {
        let spec = &ctx.slices[k];
        let mut offload_sum = 0.0;
        let mut edge_sum = 0.0;
        let mut cloud_sum = 0.0;
        let mut processing_sum = 0.0;
        for j in 0..m {
            let b = if plan.is_active(ctx.topo, j) { plan.spectrum[k][j] } else { 0 };
            for &n in &routing.members[j] {
                let rate = subcarrier_rate(obs.vehicles[n].gains[j], &ctx.link);
                let y = decision.spectrum_fractions[k][n];
                offload_sum += offloading_delay(spec.task_size, y, b, rate).unwrap_or(f64::INFINITY);
            }
            let input = dispatch_input(ctx, plan, queues, obs, k, j, routing.tasks[j]);
            let x = decision.dispatch[k][j];
            let kept = routing.tasks[j] - x;
            let e = if kept > 0 { input.edge_delay(x) * kept as f64 } else { 0.0 };
            let c = if x > 0 { input.cloud_delay() * x as f64 } else { 0.0 };
            edge_sum += e;
            cloud_sum += c;
            processing_sum += e + c;
        }
        let vehicles = obs.num_vehicles();
        let tasks = obs.total_tasks(k);
        let offload = if vehicles > 0 { offload_sum / vehicles as f64 } else { 0.0 };
        let (processing, edge, cloud) = if tasks > 0 {
            let t = tasks as f64;
            (processing_sum / t, edge_sum / t, cloud_sum / t)
        } else {
            (0.0, 0.0, 0.0)
        };
        slices.push(SliceDelay {
            total: offload + processing,
            offload,
            edge,
            cloud,
            vehicles,
            tasks,
        });
    }
    Ok(DelayReport {
        slot: obs.slot,
        slices,
    })
}

/// `max(0, Q + arrivals - service)`.
pub fn queue_step(backlog: f64, arrival_bits: f64, service_bits: f64) -> f64 {
    (backlog + arrival_bits - service_bits).max(0.0)
}

/// Backlog after the slot: kept tasks join the queue, each edge VM drains
/// `F_e T_o / eta` bits.
pub fn update_queue(
    queues: &QueueState,
    obs: &SlotObservation,
    decision: &OperationDecision,
    plan: &PlanningDecision,
    ctx: &OperationContext<'_>,
) -> Result<QueueState> {
    let m = ctx.topo.num_stations();
    let mut next = queues.clone();
    for (k, spec) in ctx.slices.iter().enumerate() {
        let routing = route_slice(obs, plan, ctx.topo, k);
        for j in 0..m {
            let x = decision.dispatch[k][j];
            let kept = routing
                .tasks[j]
                .checked_sub(x)
                .ok_or_else(|| Error::Infeasible(format!("slice {k}, station {j}: dispatch exceeds tasks")))?;
            let vms = if plan.is_active(ctx.topo, j) { plan.compute[k][j] } else { 0 };
            let service = vms as f64 * ctx.compute.edge_vm_hz * ctx.compute.slot_duration / spec.compute_intensity;
            next.backlog[k][j] = queue_step(queues.backlog[k][j], kept as f64 * spec.task_size, service);
        }
    }
    Ok(next)
}

/// Moves the backlog of small stations the plan switches off onto their
/// nearest macro station.
pub fn settle_queues(queues: &QueueState, plan: &PlanningDecision, topo: &Topology) -> QueueState {
    let mut out = queues.clone();
    for row in out.backlog.iter_mut() {
        for &s in topo.small_ids() {
            if !plan.is_active(topo, s) && row[s] != 0.0 {
                let target = topo.nearest_macro(s);
                row[target] += row[s];
                row[s] = 0.0;
            }
        }
    }
    out
}

/// Outcome of running the operation stage over one planning window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    /// Per-slice mean of the slot delays over slots where the slice had
    /// tasks; zero when it had none.
    pub mean_delay: Vec<f64>,
    pub queues: QueueState,
    pub slots: Vec<DelayReport>,
}

pub fn run_window(
    plan: &PlanningDecision,
    slots: &[SlotObservation],
    queues_in: &QueueState,
    ctx: &OperationContext<'_>,
) -> Result<WindowReport> {
    if slots.is_empty() {
        return Err(Error::Config("a planning window needs at least one slot".into()));
    }
    let ks = ctx.slices.len();
    let mut queues = settle_queues(queues_in, plan, ctx.topo);
    let mut reports = Vec::with_capacity(slots.len());
    for obs in slots {
        let decision = decide_slot(obs, plan, &queues, ctx)?;
        reports.push(slot_delay(obs, plan, &decision, &queues, ctx)?);
        queues = update_queue(&queues, obs, &decision, plan, ctx)?;
    }
    let mean_delay = (0..ks)
        .map(|k| {
            let busy: Vec<f64> = reports
                .iter()
                .filter(|r| r.slices[k].tasks > 0)
                .map(|r| r.slices[k].total)
                .collect();
            if busy.is_empty() {
                0.0
            } else {
                busy.iter().sum::<f64>() / busy.len() as f64
            }
        })
        .collect();
    Ok(WindowReport {
        mean_delay,
        queues,
        slots: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Point, Topology};
    use crate::traffic::{Arrivals, Vehicle};
    use proptest::prelude::*;

    fn link() -> LinkBudget {
        RadioParams::default().link_budget().unwrap()
    }

    fn input(tasks: u32, backlog: f64) -> DispatchInput {
        DispatchInput {
            tasks,
            backlog,
            task_size: 0.6e6,
            intensity: 1000.0,
            edge_vms: 2,
            edge_hz: 10e9,
            cloud_vms: 2,
            cloud_hz: 100e9,
            rtt: 0.15,
        }
    }

    fn brute_force(p: &DispatchInput) -> u32 {
        let mut best = 0;
        for x in 1..=p.tasks {
            if p.objective(x) < p.objective(best) {
                best = x;
            }
        }
        best
    }

    #[test]
    fn unit_snr_gives_bandwidth_rate() {
        let l = link();
        let gain = l.bandwidth * l.noise_plus_interference / l.tx_power;
        let r = subcarrier_rate(gain, &l);
        assert!((r - 20e6).abs() / 20e6 < 1e-12);
        assert!(subcarrier_rate(1e-30, &l) < 1e-3);
    }

    #[test]
    fn reference_rate_at_one_kilometre() {
        // Independent evaluation of the rate expression in dB arithmetic.
        let l = link();
        let g = 10f64.powf(-12.81);
        let p_w = 10f64.powf((27.0 - 30.0) / 10.0);
        let n_w = 10f64.powf((-174.0 - 30.0) / 10.0) + 10f64.powf((-164.0 - 30.0) / 10.0);
        let expected = 20e6 * (1.0 + p_w * g / (20e6 * n_w)).log2();
        let r = subcarrier_rate(g, &l);
        assert!((r - expected).abs() / expected < 1e-12);
        // Frozen golden value.
        assert!((r - 2_450_255.424_284).abs() < 1e-3, "rate {r}");
    }

    #[test]
    fn spectrum_split_examples() {
        assert_eq!(allocate_spectrum(&[5.0, 5.0]).unwrap(), vec![0.5, 0.5]);
        let y = allocate_spectrum(&[4.0, 1.0]).unwrap();
        assert!((y[0] - 1.0 / 3.0).abs() < 1e-15 && (y[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(allocate_spectrum(&[7.0]).unwrap(), vec![1.0]);
        assert!(allocate_spectrum(&[1.0, 0.0]).is_err());
        assert!(allocate_spectrum(&[-1.0]).is_err());
        assert!(allocate_spectrum(&[]).is_err());
    }

    #[test]
    fn spectrum_split_beats_simplex_grid_for_two_vehicles() {
        let rates = [4.0, 1.0];
        let objective = |y: &[f64]| rates.iter().zip(y).map(|(r, y)| 1.0 / (y * r)).sum::<f64>();
        let best = objective(&allocate_spectrum(&rates).unwrap());
        for i in 1..1000 {
            let y0 = i as f64 / 1000.0;
            assert!(best <= objective(&[y0, 1.0 - y0]) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn offloading_delay_examples() {
        assert!((offloading_delay(2e6, 1.0, 1, 20e6).unwrap() - 0.1).abs() < 1e-15);
        let d1 = offloading_delay(2e6, 0.5, 2, 7e6).unwrap();
        let d2 = offloading_delay(2e6, 0.5, 4, 7e6).unwrap();
        assert!((d1 / d2 - 2.0).abs() < 1e-12);
        assert_eq!(offloading_delay(0.0, 0.5, 2, 7e6).unwrap(), 0.0);
        assert!(matches!(offloading_delay(1.0, 1.0, 0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn edge_delay_examples() {
        let d = edge_delay(0.0, 1, 0, 2e6, 200.0, 1, 10e9).unwrap();
        // (0 + (1 + 1) * 1e6) * 200 / 1e10
        assert!((d - 0.04).abs() < 1e-15);
        let at_full = edge_delay(0.0, 3, 3, 2e6, 200.0, 1, 10e9).unwrap();
        assert!((at_full - 1e6 * 200.0 / 1e10).abs() < 1e-15);
        let one = edge_delay(5e5, 4, 1, 2e6, 200.0, 1, 10e9).unwrap();
        let two = edge_delay(5e5, 4, 1, 2e6, 200.0, 2, 10e9).unwrap();
        assert!((one / two - 2.0).abs() < 1e-12);
        assert!(matches!(edge_delay(0.0, 2, 1, 1.0, 1.0, 0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(edge_delay(0.0, 2, 3, 1.0, 1.0, 1, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn cloud_delay_examples() {
        let d = cloud_delay(2e6, 200.0, 1, 100e9, 0.15);
        assert!((d - 0.154).abs() < 1e-15);
        assert!((cloud_delay(2e6, 200.0, u32::MAX, 100e9, 0.15) - 0.15).abs() < 1e-9);
        assert_eq!(cloud_delay(0.0, 200.0, 1, 100e9, 0.0), 0.0);
    }

    #[test]
    fn dispatch_extremes() {
        let mut p = input(6, 0.0);
        p.rtt = 1e6;
        assert_eq!(dispatch_tasks(&p), 0);
        let mut p = input(6, 0.0);
        p.edge_hz = 1.0;
        assert_eq!(dispatch_tasks(&p), 6);
        p.edge_vms = 0;
        assert_eq!(dispatch_tasks(&p), 6);
        assert_eq!(dispatch_tasks(&input(0, 1e6)), 0);
    }

    #[test]
    fn dispatch_reference_instance_matches_enumeration() {
        let p = input(5, 1e6);
        let x = dispatch_tasks(&p);
        assert_eq!(x, brute_force(&p));
        // Enumeration oracle, frozen: psi = [0.700, 0.653, 0.636, 0.649, 0.692, 0.765].
        assert_eq!(x, 2);
        assert!((p.objective(2) - 0.636).abs() < 1e-12);
    }

    #[test]
    fn printed_closed_form_counts_edge_tasks() {
        // The sign-flipped stationary point equals A minus the optimum.
        let p = input(17, 2.3e6);
        let nu1 = p.intensity / (p.edge_vms as f64 * p.edge_hz);
        let nu2 = p.cloud_delay();
        let nu3 = p.backlog + (p.tasks as f64 + 1.0) * p.task_size / 2.0;
        let printed = (2.0 * nu2 + p.task_size * nu1 * p.tasks as f64 - 2.0 * nu1 * nu3)
            / (2.0 * nu1 * p.task_size);
        assert!((printed - (p.tasks as f64 - p.continuous_minimizer())).abs() < 1e-9);
    }

    #[test]
    fn queue_examples() {
        assert_eq!(queue_step(0.0, 0.0, 5.0), 0.0);
        assert_eq!(queue_step(0.0, 1e6, 1e7), 0.0);
        assert_eq!(queue_step(1e6, 5e5, 2e5), 1.3e6);
    }

    fn tiny_slot() -> (Topology, Vec<SliceSpec>, SlotObservation) {
        let topo = Topology::reference();
        let slices = SliceSpec::reference_pair(1.0);
        let v = Vehicle {
            id: 0,
            position: Point::new(500.0, 600.0),
            associated_bs: 0,
            gains: vec![1e-11, 1e-13, 1e-13],
        };
        let arrivals = Arrivals {
            per_vehicle: vec![vec![1], vec![0]],
            per_station: vec![vec![1, 0, 0], vec![0, 0, 0]],
        };
        (topo, slices, SlotObservation::new(0, vec![v], arrivals, 0.15, 3))
    }

    #[test]
    fn empty_slot_has_zero_delay() {
        let topo = Topology::reference();
        let slices = SliceSpec::reference_pair(1.0);
        let obs = SlotObservation::new(
            0,
            vec![],
            Arrivals {
                per_vehicle: vec![vec![], vec![]],
                per_station: vec![vec![0; 3], vec![0; 3]],
            },
            0.15,
            3,
        );
        let ctx = OperationContext {
            topo: &topo,
            slices: &slices,
            link: link(),
            compute: ComputeParams::default(),
        };
        let plan = PlanningDecision::initial(&topo, 2);
        let q = QueueState::zeros(2, 3);
        let d = decide_slot(&obs, &plan, &q, &ctx).unwrap();
        let r = slot_delay(&obs, &plan, &d, &q, &ctx).unwrap();
        assert!(r.slices.iter().all(|s| s.total == 0.0));
    }

    #[test]
    fn single_vehicle_single_task_at_the_edge() {
        let (topo, slices, obs) = tiny_slot();
        let ctx = OperationContext {
            topo: &topo,
            slices: &slices,
            link: link(),
            compute: ComputeParams::default(),
        };
        let mut plan = PlanningDecision::initial(&topo, 2);
        plan.spectrum[0][0] = 2;
        plan.spectrum[1][0] = 2;
        plan.compute[0][0] = 4;
        let q = QueueState::zeros(2, 3);
        let d = decide_slot(&obs, &plan, &q, &ctx).unwrap();
        assert_eq!(d.dispatch[0][0], 0);
        let r = slot_delay(&obs, &plan, &d, &q, &ctx).unwrap();
        let rate = subcarrier_rate(1e-11, &ctx.link);
        let off = offloading_delay(0.6e6, 1.0, 2, rate).unwrap();
        let edge = edge_delay(0.0, 1, 0, 0.6e6, 1000.0, 4, 10e9).unwrap();
        assert!((r.slices[0].total - (off + edge)).abs() < 1e-15);
        // Slice 1 has a vehicle but no task: only the offloading term.
        assert_eq!(r.slices[1].tasks, 0);
        assert!(r.slices[1].total > 0.0);
    }

    #[test]
    fn missing_spectrum_makes_delay_infinite() {
        let (topo, slices, obs) = tiny_slot();
        let ctx = OperationContext {
            topo: &topo,
            slices: &slices,
            link: link(),
            compute: ComputeParams::default(),
        };
        let plan = PlanningDecision::initial(&topo, 2);
        let q = QueueState::zeros(2, 3);
        let d = decide_slot(&obs, &plan, &q, &ctx).unwrap();
        // No edge VMs either: the task goes to the cloud.
        assert_eq!(d.dispatch[0][0], 1);
        let r = slot_delay(&obs, &plan, &d, &q, &ctx).unwrap();
        assert!(r.slices[0].total.is_infinite());
        assert!(!r.slices[0].edge.is_nan());
    }

    #[test]
    fn infeasible_decisions_are_rejected() {
        let (topo, slices, obs) = tiny_slot();
        let ctx = OperationContext {
            topo: &topo,
            slices: &slices,
            link: link(),
            compute: ComputeParams::default(),
        };
        let plan = PlanningDecision::initial(&topo, 2);
        let q = QueueState::zeros(2, 3);
        let mut d = decide_slot(&obs, &plan, &q, &ctx).unwrap();
        d.dispatch[0][0] = 2;
        assert!(matches!(slot_delay(&obs, &plan, &d, &q, &ctx), Err(Error::Infeasible(_))));
        let mut d = decide_slot(&obs, &plan, &q, &ctx).unwrap();
        d.spectrum_fractions[0][0] = 0.7;
        assert!(matches!(slot_delay(&obs, &plan, &d, &q, &ctx), Err(Error::Infeasible(_))));
    }

    #[test]
    fn switched_off_small_station_hands_backlog_to_macro() {
        let topo = Topology::reference();
        let mut q = QueueState::zeros(1, 3);
        q.backlog[0] = vec![1.0, 2.0, 4.0];
        let mut plan = PlanningDecision::initial(&topo, 1);
        plan.activation = vec![false, true];
        let s = settle_queues(&q, &plan, &topo);
        assert_eq!(s.backlog[0], vec![3.0, 0.0, 4.0]);
        assert_eq!(s.total(), q.total());
    }

    #[test]
    fn run_window_requires_a_slot() {
        let topo = Topology::reference();
        let slices = SliceSpec::reference_pair(1.0);
        let ctx = OperationContext {
            topo: &topo,
            slices: &slices,
            link: link(),
            compute: ComputeParams::default(),
        };
        let plan = PlanningDecision::initial(&topo, 2);
        assert!(run_window(&plan, &[], &QueueState::zeros(2, 3), &ctx).is_err());
    }

    proptest! {
        #[test]
        fn closed_form_dispatch_matches_enumeration(
            tasks in 0u32..=20,
            backlog in 0.0f64..5e6,
            task_size in 1e5f64..3e6,
            intensity in 100.0f64..2000.0,
            edge_vms in 1u32..=10,
            cloud_vms in 1u32..=5,
            rtt in 0.0f64..0.3,
        ) {
            let p = DispatchInput { tasks, backlog, task_size, intensity, edge_vms, edge_hz: 10e9, cloud_vms, cloud_hz: 100e9, rtt };
            prop_assert_eq!(dispatch_tasks(&p), brute_force(&p));
        }

        #[test]
        fn objective_is_discretely_convex(
            tasks in 2u32..=20,
            backlog in 0.0f64..5e6,
            task_size in 1e5f64..3e6,
            edge_vms in 1u32..=10,
        ) {
            let p = DispatchInput { tasks, backlog, task_size, intensity: 500.0, edge_vms, edge_hz: 10e9, cloud_vms: 1, cloud_hz: 100e9, rtt: 0.15 };
            // Second difference is nu1 * xi > 0 on the interior.
            let nu1 = p.intensity / (edge_vms as f64 * p.edge_hz);
            for x in 0..tasks - 1 {
                let d1 = p.objective(x + 1) - p.objective(x);
                let d2 = p.objective(x + 2) - p.objective(x + 1);
                prop_assert!(d2 >= d1 - 1e-9 * p.objective(x).abs().max(1.0));
                if x + 2 < tasks {
                    prop_assert!(((d2 - d1) - nu1 * task_size).abs() <= 1e-6 * (nu1 * task_size).max(1e-12) + 1e-9);
                }
            }
        }

        #[test]
        fn spectrum_fractions_sum_to_one(rates in proptest::collection::vec(1e3f64..1e9, 1..12)) {
            let y = allocate_spectrum(&rates).unwrap();
            let s: f64 = y.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(y.iter().all(|&v| v > 0.0));
        }

        #[test]
        fn queue_never_negative(q in 0.0f64..1e8, a in 0.0f64..1e8, s in 0.0f64..1e8) {
            let next = queue_step(q, a, s);
            prop_assert!(next >= 0.0);
            if q + a - s >= 0.0 {
                prop_assert_eq!(next, q + a - s);
            }
        }
    }
}
