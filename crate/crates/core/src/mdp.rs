//! One planning window as one decision step: state encoding, action
//! decoding and the window cost as negative reward.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cost::{window_cost, CostBreakdown, CostParams};
use crate::domain::{project_plan, validate_plan, PlanShape, PlanningDecision, QueueState, SliceSpec, Topology};
use crate::error::{Error, Result};
use crate::operation::{run_window, ComputeParams, LinkBudget, OperationContext, RadioParams, WindowReport};
use crate::rng::{rng_for, stream};
use crate::traffic::{gen_density, load_trace, sample_window, DensityMap, DensityPattern, SlotObservation, TrafficModel};

pub type MdpState = Vec<f64>;
/// Raw actor output, one entry in `[-1, 1]` per plan coordinate.
pub type MdpAction = Vec<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: MdpState,
    pub action: MdpAction,
    pub reward: f64,
    pub next_state: MdpState,
}

/// Where window densities come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySpec {
    Pattern(DensityPattern),
    /// CSV with header `window,region,density`; windows past the end wrap.
    Trace(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DensitySource {
    Synthetic(DensityPattern),
    Trace(Vec<DensityMap>),
}

impl DensitySource {
    pub fn load(spec: &DensitySpec, regions: usize) -> Result<Self> {
        match spec {
            DensitySpec::Pattern(p) => {
                p.validate()?;
                if p.num_regions() != regions {
                    return Err(Error::dim("density pattern regions", regions, p.num_regions()));
                }
                Ok(DensitySource::Synthetic(p.clone()))
            }
            DensitySpec::Trace(path) => {
                let maps = load_trace(path, regions)?;
                if maps.is_empty() {
                    return Err(Error::Config(format!("trace {} has no windows", path.display())));
                }
                Ok(DensitySource::Trace(maps))
            }
        }
    }

    pub fn density(&self, seed: u64, episode: u64, window: usize) -> Result<DensityMap> {
        match self {
            DensitySource::Synthetic(p) => {
                let mut rng = rng_for(seed, &[stream::DENSITY, episode, window as u64]);
                gen_density(window, p, &mut rng)
            }
            DensitySource::Trace(maps) => {
                let mut m = maps[window % maps.len()].clone();
                m.window = window;
                Ok(m)
            }
        }
    }

    /// Upper end of the density normalization range.
    pub fn max_density(&self) -> f64 {
        let peak = match self {
            DensitySource::Synthetic(p) => p.peak() + 3.0 * p.noise_std,
            DensitySource::Trace(maps) => maps
                .iter()
                .flat_map(|m| m.density.iter().copied())
                .fold(0.0, f64::max),
        };
        peak.max(1e-9)
    }
}

/// Slot and window lengths, and how many slots of each window are simulated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timescales {
    /// Seconds.
    pub slot_duration: f64,
    /// Seconds.
    pub window_duration: f64,
    /// Windows per slice lifecycle.
    pub windows: usize,
    /// Slots simulated per window; `None` simulates all of them.
    #[serde(default)]
    pub simulated_slots: Option<usize>,
}

impl Default for Timescales {
    fn default() -> Self {
        Timescales {
            slot_duration: 1.0,
            window_duration: 600.0,
            windows: 24,
            simulated_slots: Some(60),
        }
    }
}

impl Timescales {
    pub fn slots_per_window(&self) -> Result<usize> {
        let ratio = self.window_duration / self.slot_duration;
        if !(self.slot_duration > 0.0) || !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "window duration {} s is not a positive multiple of the slot duration {} s",
                self.window_duration, self.slot_duration
            )));
        }
        if self.windows == 0 {
            return Err(Error::Config("need at least one planning window".into()));
        }
        let full = ratio.round() as usize;
        match self.simulated_slots {
            None => Ok(full),
            Some(0) => Err(Error::Config("simulated_slots must be positive".into())),
            Some(t) if t > full => Err(Error::Config(format!(
                "simulated_slots {t} exceeds the {full} slots of a window"
            ))),
            Some(t) => Ok(t),
        }
    }
}

/// Static description of the network and its economics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub topology: Topology,
    pub slices: Vec<SliceSpec>,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub compute: ComputeParams,
    #[serde(default)]
    pub traffic: TrafficModel,
    #[serde(default)]
    pub cost: CostParams,
    #[serde(default)]
    pub timescales: Timescales,
    /// Largest number of cloud VMs a slice may hold.
    pub h_max: u32,
    pub density: DensitySpec,
    /// Plan in force before the first window; defaults to
    /// [`PlanningDecision::initial`].
    #[serde(default)]
    pub initial_plan: Option<PlanningDecision>,
}

impl Scenario {
    /// Reference network with two slices at `arrival_rate` tasks/s and a
    /// constant density of `density` vehicles per region.
    pub fn reference(arrival_rate: f64, density: f64) -> Self {
        let topology = Topology::reference();
        let regions = topology.num_regions();
        Scenario {
            topology,
            slices: SliceSpec::reference_pair(arrival_rate),
            radio: RadioParams::default(),
            compute: ComputeParams::default(),
            traffic: TrafficModel::default(),
            cost: CostParams::default(),
            timescales: Timescales::default(),
            h_max: 10,
            density: DensitySpec::Pattern(DensityPattern::constant(regions, density)),
            initial_plan: None,
        }
    }

    pub fn shape(&self) -> PlanShape {
        PlanShape {
            num_slices: self.slices.len(),
            h_max: self.h_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slices.is_empty() {
            return Err(Error::Config("at least one slice is required".into()));
        }
        for s in &self.slices {
            s.validate()?;
        }
        if self.h_max == 0 {
            return Err(Error::Config("h_max must be at least 1".into()));
        }
        self.cost.validate()?;
        self.timescales.slots_per_window()?;
        self.radio.link_budget()?;
        if let Some(p) = &self.initial_plan {
            let v = validate_plan(p, &self.topology, self.slices.len())?;
            if !v.is_empty() {
                return Err(Error::Config(format!("initial plan is infeasible: {}", v[0])));
            }
        }
        Ok(())
    }

    pub fn initial_plan(&self) -> PlanningDecision {
        self.initial_plan
            .clone()
            .unwrap_or_else(|| PlanningDecision::initial(&self.topology, self.slices.len()))
    }
}

/// Min-max ranges of the state blocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub max_density: f64,
    pub h_max: u32,
}

/// `2KM + M + K + J`.
pub fn state_dim(topo: &Topology, num_slices: usize) -> usize {
    let (k, m) = (num_slices, topo.num_stations());
    2 * k * m + m + k + topo.num_regions()
}

/// `[density; activation per station, macros fixed at 1; spectrum; compute;
/// cloud]`, each entry scaled into `[0, 1]`.
pub fn encode_state(density: &DensityMap, prev: &PlanningDecision, topo: &Topology, bounds: &NormBounds) -> MdpState {
    let unit = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let m = topo.num_stations();
    let mut s = Vec::with_capacity(state_dim(topo, prev.num_slices()));
    s.extend(density.density.iter().map(|&d| unit(d / bounds.max_density)));
    s.extend((0..m).map(|j| if prev.is_active(topo, j) { 1.0 } else { 0.0 }));
    for row in &prev.spectrum {
        s.extend(row.iter().enumerate().map(|(j, &b)| unit(b as f64 / topo.station(j).subcarriers as f64)));
    }
    for row in &prev.compute {
        s.extend(row.iter().enumerate().map(|(j, &c)| unit(c as f64 / topo.station(j).vms as f64)));
    }
    let span = (bounds.h_max.max(2) - 1) as f64;
    s.extend(prev.cloud.iter().map(|&h| unit((h as f64 - 1.0) / span)));
    s
}

/// Affine map from the action box onto resource units, in the layout
/// [`project_plan`] expects.
pub fn action_to_raw(action: &[f64], topo: &Topology, shape: PlanShape) -> Result<Vec<f64>> {
    let dim = shape.action_dim(topo);
    if action.len() != dim {
        return Err(Error::dim("action", dim, action.len()));
    }
    let (ks, m, ms) = (shape.num_slices, topo.num_stations(), topo.num_small());
    let frac = |a: f64| (a.clamp(-1.0, 1.0) + 1.0) / 2.0;
    let mut raw = Vec::with_capacity(dim);
    raw.extend(action[..ms].iter().map(|&a| frac(a)));
    for (block, cap) in [(0, true), (1, false)] {
        let offset = ms + block * ks * m;
        for i in 0..ks * m {
            let st = topo.station(i % m);
            let c = if cap { st.subcarriers } else { st.vms };
            raw.push(frac(action[offset + i]) * c as f64);
        }
    }
    let span = (shape.h_max.max(1) - 1) as f64;
    raw.extend(action[ms + 2 * ks * m..].iter().map(|&a| 1.0 + frac(a) * span));
    Ok(raw)
}

/// Action that decodes back to `plan`.
pub fn plan_to_action(plan: &PlanningDecision, topo: &Topology, shape: PlanShape) -> MdpAction {
    let m = topo.num_stations();
    let to_box = |v: f64, cap: f64| if cap > 0.0 { 2.0 * v / cap - 1.0 } else { -1.0 };
    let mut a: Vec<f64> = plan.activation.iter().map(|&o| if o { 1.0 } else { -1.0 }).collect();
    for row in &plan.spectrum {
        a.extend((0..m).map(|j| to_box(row[j] as f64, topo.station(j).subcarriers as f64)));
    }
    for row in &plan.compute {
        a.extend((0..m).map(|j| to_box(row[j] as f64, topo.station(j).vms as f64)));
    }
    let span = (shape.h_max.max(1) - 1) as f64;
    a.extend(plan.cloud.iter().map(|&h| if span > 0.0 { to_box(h as f64 - 1.0, span) } else { 0.0 }));
    a
}

pub fn decode_action(action: &[f64], topo: &Topology, shape: PlanShape) -> Result<PlanningDecision> {
    project_plan(&action_to_raw(action, topo, shape)?, topo, shape)
}

/// Result of one window.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    /// Zero-based index of the window just played.
    pub window: usize,
    pub plan: PlanningDecision,
    pub reward: f64,
    pub cost: CostBreakdown,
    pub mean_delay: Vec<f64>,
    pub next_state: MdpState,
    pub done: bool,
}

/// The slice lifecycle as an episodic environment of `W` windows.
///
/// Traffic of window `w` in episode `e` depends only on `(seed, e, w)`, so
/// two planners stepped with the same seed and episode see identical
/// vehicles and arrivals.
#[derive(Clone, Debug)]
pub struct SlicingEnv {
    scenario: Scenario,
    source: DensitySource,
    link: LinkBudget,
    bounds: NormBounds,
    slots: usize,
    seed: u64,
    episode: u64,
    window: usize,
    density: DensityMap,
    queues: QueueState,
    prev_plan: PlanningDecision,
}

impl SlicingEnv {
    pub fn new(scenario: Scenario, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let source = DensitySource::load(&scenario.density, scenario.topology.num_regions())?;
        Self::with_source(scenario, source, seed)
    }

    pub fn with_source(scenario: Scenario, source: DensitySource, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let link = scenario.radio.link_budget()?;
        let slots = scenario.timescales.slots_per_window()?;
        let bounds = NormBounds {
            max_density: source.max_density(),
            h_max: scenario.h_max,
        };
        let density = source.density(seed, 0, 0)?;
        let queues = QueueState::zeros(scenario.slices.len(), scenario.topology.num_stations());
        let prev_plan = scenario.initial_plan();
        Ok(SlicingEnv {
            scenario,
            source,
            link,
            bounds,
            slots,
            seed,
            episode: 0,
            window: 0,
            density,
            queues,
            prev_plan,
        })
    }

    /// Starts `episode` from the initial plan with empty queues.
    pub fn reset(&mut self, episode: u64) -> Result<MdpState> {
        self.episode = episode;
        self.window = 0;
        self.queues = QueueState::zeros(self.scenario.slices.len(), self.scenario.topology.num_stations());
        self.prev_plan = self.scenario.initial_plan();
        self.density = self.source.density(self.seed, episode, 0)?;
        Ok(self.state())
    }

    pub fn state(&self) -> MdpState {
        encode_state(&self.density, &self.prev_plan, &self.scenario.topology, &self.bounds)
    }

    pub fn state_dim(&self) -> usize {
        state_dim(&self.scenario.topology, self.scenario.slices.len())
    }

    pub fn action_dim(&self) -> usize {
        self.scenario.shape().action_dim(&self.scenario.topology)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn num_windows(&self) -> usize {
        self.scenario.timescales.windows
    }

    pub fn slots_per_window(&self) -> usize {
        self.slots
    }

    pub fn density(&self) -> &DensityMap {
        &self.density
    }

    pub fn queues(&self) -> &QueueState {
        &self.queues
    }

    pub fn prev_plan(&self) -> &PlanningDecision {
        &self.prev_plan
    }

    pub fn bounds(&self) -> NormBounds {
        self.bounds
    }

    pub fn link(&self) -> LinkBudget {
        self.link
    }

    pub fn context(&self) -> OperationContext<'_> {
        OperationContext {
            topo: &self.scenario.topology,
            slices: &self.scenario.slices,
            link: self.link,
            compute: self.scenario.compute,
        }
    }

    pub fn is_done(&self) -> bool {
        self.window >= self.num_windows()
    }

    /// The slots the current window will be played on.
    pub fn current_slots(&self) -> Vec<SlotObservation> {
        let mut rng = rng_for(self.seed, &[stream::TRAFFIC, self.episode, self.window as u64]);
        sample_window(
            &self.density,
            self.slots,
            &self.scenario.topology,
            &self.scenario.slices,
            &self.scenario.traffic,
            &mut rng,
        )
    }

    pub fn decode(&self, action: &[f64]) -> Result<PlanningDecision> {
        decode_action(action, &self.scenario.topology, self.scenario.shape())
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        let plan = self.decode(action)?;
        self.step_plan(plan)
    }

    /// Plays the current window under `plan`; the plan must be feasible.
    pub fn step_plan(&mut self, plan: PlanningDecision) -> Result<StepOutcome> {
        self.step_plan_report(plan).map(|(o, _)| o)
    }

    /// As [`SlicingEnv::step_plan`], also returning the per-slot delays.
    pub fn step_plan_report(&mut self, plan: PlanningDecision) -> Result<(StepOutcome, WindowReport)> {
        if self.is_done() {
            return Err(Error::Config("episode is over; call reset".into()));
        }
        let topo = &self.scenario.topology;
        let violations = validate_plan(&plan, topo, self.scenario.slices.len())?;
        if let Some(v) = violations.first() {
            return Err(Error::Infeasible(format!("plan violates {v}")));
        }
        let slots = self.current_slots();
        let report = run_window(&plan, &slots, &self.queues, &self.context())?;
        let cost = window_cost(
            &plan,
            &self.prev_plan,
            &report.mean_delay,
            &self.scenario.slices,
            &self.scenario.topology,
            &self.scenario.cost,
        );
        let played = self.window;
        self.queues = report.queues.clone();
        self.prev_plan = plan.clone();
        self.window += 1;
        self.density = self.source.density(self.seed, self.episode, self.window)?;
        let outcome = StepOutcome {
            window: played,
            plan,
            reward: -cost.total,
            cost,
            mean_delay: report.mean_delay.clone(),
            next_state: self.state(),
            done: self.is_done(),
        };
        Ok((outcome, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{adjustment_cost, deployment_cost, provisioning_cost, total_revenue};
    use crate::traffic::DensityMap;
    use proptest::prelude::*;

    fn scenario(rate: f64, density: f64) -> Scenario {
        let mut s = Scenario::reference(rate, density);
        s.timescales.simulated_slots = Some(5);
        s.timescales.windows = 3;
        s
    }

    #[test]
    fn reference_state_has_33_entries() {
        let topo = Topology::reference();
        assert_eq!(state_dim(&topo, 2), 2 * 2 * 3 + 3 + 2 + 16);
        let env = SlicingEnv::new(scenario(1.0, 2.0), 1).unwrap();
        assert_eq!(env.state().len(), 33);
        assert_eq!(env.action_dim(), 2 + 2 * 2 * 3 + 2);
    }

    #[test]
    fn empty_state_marks_only_macro_stations() {
        let topo = Topology::reference();
        let bounds = NormBounds {
            max_density: 5.0,
            h_max: 10,
        };
        let d = DensityMap::uniform(0, 16, 0.0);
        let s = encode_state(&d, &PlanningDecision::initial(&topo, 2), &topo, &bounds);
        let mut expected = vec![0.0; 33];
        expected[16] = 1.0;
        assert_eq!(s, expected);
    }

    #[test]
    fn encoding_is_injective_on_a_tiny_grid() {
        use crate::domain::{BaseStation, Point, RegionGrid, StationKind};
        let st = |id, kind, x| BaseStation {
            id,
            kind,
            position: Point::new(x, 50.0),
            coverage_radius: 200.0,
            subcarriers: 2,
            vms: 2,
        };
        let topo = Topology::new(
            vec![st(0, StationKind::Macro, 50.0), st(1, StationKind::Small, 80.0)],
            100.0,
            RegionGrid { rows: 1, cols: 1 },
        )
        .unwrap();
        let bounds = NormBounds {
            max_density: 1.0,
            h_max: 2,
        };
        let d = DensityMap::uniform(0, 1, 0.5);
        let mut seen = std::collections::HashMap::new();
        for o in [false, true] {
            for b0 in 0..=2 {
                for b1 in 0..=2 {
                    for c0 in 0..=2 {
                        for c1 in 0..=2 {
                            for h in 1..=2 {
                                let plan = PlanningDecision {
                                    activation: vec![o],
                                    spectrum: vec![vec![b0, b1]],
                                    compute: vec![vec![c0, c1]],
                                    cloud: vec![h],
                                };
                                let key: Vec<u64> = encode_state(&d, &plan, &topo, &bounds)
                                    .iter()
                                    .map(|v| v.to_bits())
                                    .collect();
                                if let Some(other) = seen.insert(key, plan.clone()) {
                                    panic!("{plan:?} and {other:?} encode alike");
                                }
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(seen.len(), 2 * 3usize.pow(4) * 2);
    }

    #[test]
    fn plan_round_trips_through_the_action_box() {
        let topo = Topology::reference();
        let shape = PlanShape {
            num_slices: 2,
            h_max: 10,
        };
        let plan = PlanningDecision {
            activation: vec![true, false],
            spectrum: vec![vec![3, 7, 0], vec![7, 3, 0]],
            compute: vec![vec![10, 0, 0], vec![0, 5, 0]],
            cloud: vec![1, 10],
        };
        let a = plan_to_action(&plan, &topo, shape);
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(decode_action(&a, &topo, shape).unwrap(), plan);
    }

    #[test]
    fn reset_is_reproducible_and_empties_queues() {
        let mut env = SlicingEnv::new(scenario(2.0, 3.0), 9).unwrap();
        let s0 = env.reset(4).unwrap();
        let a = vec![0.3; env.action_dim()];
        env.step(&a).unwrap();
        assert!(env.queues().total() >= 0.0);
        let s1 = env.reset(4).unwrap();
        assert_eq!(s0, s1);
        assert_eq!(env.queues().total(), 0.0);
        assert_eq!(env.window(), 0);
        let init = PlanningDecision::initial(&env.scenario().topology, 2);
        assert_eq!(env.prev_plan(), &init);
        let block = &s1[16..];
        let expected = encode_state(env.density(), &init, &env.scenario().topology, &env.bounds());
        assert_eq!(block, &expected[16..]);
    }

    #[test]
    fn zero_traffic_reward_is_minus_static_cost() {
        let mut env = SlicingEnv::new(scenario(1.0, 0.0), 3).unwrap();
        env.reset(0).unwrap();
        let init = env.prev_plan().clone();
        let a = plan_to_action(&init, &env.scenario().topology, env.scenario().shape());
        let out = env.step(&a).unwrap();
        let p = &env.scenario().cost;
        assert_eq!(out.cost.adjustment, 0.0);
        assert_eq!(out.mean_delay, vec![0.0, 0.0]);
        let expected = -(out.cost.deployment + out.cost.provisioning - out.cost.sla_revenue);
        assert_eq!(out.reward, expected);
        assert_eq!(out.cost.sla_revenue, 2.0 * p.revenue);
    }

    #[test]
    fn repeating_an_action_costs_no_adjustment() {
        let mut env = SlicingEnv::new(scenario(1.0, 2.0), 3).unwrap();
        env.reset(0).unwrap();
        let a: Vec<f64> = (0..env.action_dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        env.step(&a).unwrap();
        let second = env.step(&a).unwrap();
        assert_eq!(second.cost.adjustment, 0.0);
    }

    #[test]
    fn hand_unrolled_two_windows_match_step() {
        let sc = scenario(2.0, 2.0);
        let mut env = SlicingEnv::new(sc.clone(), 11).unwrap();
        env.reset(2).unwrap();
        let topo = &sc.topology;
        let actions = [vec![0.5; env.action_dim()], vec![-0.2; env.action_dim()]];

        let link = sc.radio.link_budget().unwrap();
        let ctx = OperationContext {
            topo,
            slices: &sc.slices,
            link,
            compute: sc.compute,
        };
        let mut queues = QueueState::zeros(2, 3);
        let mut prev = PlanningDecision::initial(topo, 2);
        for (w, a) in actions.iter().enumerate() {
            let plan = decode_action(a, topo, sc.shape()).unwrap();
            let density = gen_density(w, match &sc.density {
                DensitySpec::Pattern(p) => p,
                _ => unreachable!(),
            }, &mut rng_for(11, &[stream::DENSITY, 2, w as u64]))
            .unwrap();
            let slots = sample_window(
                &density,
                5,
                topo,
                &sc.slices,
                &sc.traffic,
                &mut rng_for(11, &[stream::TRAFFIC, 2, w as u64]),
            );
            let report = run_window(&plan, &slots, &queues, &ctx).unwrap();
            let phi_d = deployment_cost(&plan, &sc.cost);
            let phi_p = provisioning_cost(&plan, topo, &sc.cost);
            let phi_s = adjustment_cost(&plan, &prev, topo, &sc.cost);
            let phi_q = total_revenue(&report.mean_delay, &sc.slices, &sc.cost);
            let expected = -(phi_d + phi_p + phi_s - phi_q);

            let out = env.step(a).unwrap();
            assert_eq!(out.reward, expected, "window {w}");
            assert_eq!(out.mean_delay, report.mean_delay);
            queues = report.queues;
            prev = plan;
        }
    }

    #[test]
    fn episode_ends_after_w_windows() {
        let mut env = SlicingEnv::new(scenario(1.0, 1.0), 5).unwrap();
        env.reset(0).unwrap();
        let a = vec![0.0; env.action_dim()];
        assert!(!env.step(&a).unwrap().done);
        assert!(!env.step(&a).unwrap().done);
        assert!(env.step(&a).unwrap().done);
        assert!(env.step(&a).is_err());
    }

    #[test]
    fn timescales_must_divide() {
        let t = Timescales {
            slot_duration: 1.0,
            window_duration: 600.5,
            windows: 24,
            simulated_slots: None,
        };
        assert!(t.slots_per_window().is_err());
        assert_eq!(Timescales::default().slots_per_window().unwrap(), 60);
        let full = Timescales {
            simulated_slots: None,
            ..Timescales::default()
        };
        assert_eq!(full.slots_per_window().unwrap(), 600);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn states_stay_in_the_unit_box(acts in proptest::collection::vec(-3.0f64..3.0, 16)) {
            let mut env = SlicingEnv::new(scenario(2.0, 2.0), 1).unwrap();
            let s = env.reset(0).unwrap();
            prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
            let out = env.step(&acts).unwrap();
            prop_assert_eq!(out.next_state.len(), 33);
            prop_assert!(out.next_state.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(out.reward.is_finite());
        }

        #[test]
        fn steps_are_deterministic(acts in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let run = || {
                let mut env = SlicingEnv::new(scenario(2.0, 2.0), 8).unwrap();
                env.reset(1).unwrap();
                (env.step(&acts).unwrap().reward, env.step(&acts).unwrap().reward)
            };
            prop_assert_eq!(run(), run());
        }
    }
}
