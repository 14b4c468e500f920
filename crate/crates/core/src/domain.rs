//! Shared vocabulary: physical topology, slices, and the decisions made at
//! both timescales.
//!
//! A planning decision covers one window: which small stations host slices,
//! how many subcarriers and edge VMs each slice reserves per station, and how
//! many cloud VMs each slice reserves. Operation decisions cover one slot:
//! spectrum fractions per vehicle and the number of tasks each station hands
//! to the cloud.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationKind {
    Macro,
    Small,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub kind: StationKind,
    pub position: Point,
    /// Meters.
    pub coverage_radius: f64,
    pub subcarriers: u32,
    pub vms: u32,
}

impl BaseStation {
    pub fn is_macro(&self) -> bool {
        self.kind == StationKind::Macro
    }

    pub fn covers(&self, p: &Point) -> bool {
        self.position.distance(p) <= self.coverage_radius
    }
}

/// Rows x columns partition of the square service area into equal regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub rows: usize,
    pub cols: usize,
}

impl RegionGrid {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Axis-aligned rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TopologySpec", into = "TopologySpec")]
pub struct Topology {
    stations: Vec<BaseStation>,
    area_side: f64,
    grid: RegionGrid,
    small: Vec<usize>,
    nearest_macro: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TopologySpec {
    stations: Vec<BaseStation>,
    area_side: f64,
    grid: RegionGrid,
}

impl TryFrom<TopologySpec> for Topology {
    type Error = Error;

    fn try_from(spec: TopologySpec) -> Result<Self> {
        Topology::new(spec.stations, spec.area_side, spec.grid)
    }
}

impl From<Topology> for TopologySpec {
    fn from(t: Topology) -> Self {
        TopologySpec {
            stations: t.stations,
            area_side: t.area_side,
            grid: t.grid,
        }
    }
}

impl Topology {
    /// Station ids must equal their position in `stations`.
    pub fn new(stations: Vec<BaseStation>, area_side: f64, grid: RegionGrid) -> Result<Self> {
        if !(area_side > 0.0) {
            return Err(Error::Config(format!("area side must be positive, got {area_side}")));
        }
        if grid.is_empty() {
            return Err(Error::Config("region grid must have at least one region".into()));
        }
        for (i, s) in stations.iter().enumerate() {
            if s.id != i {
                return Err(Error::Config(format!("station at index {i} has id {}", s.id)));
            }
            if !(s.coverage_radius > 0.0) {
                return Err(Error::Config(format!("station {i}: coverage radius must be positive")));
            }
            if s.subcarriers < 1 || s.vms < 1 {
                return Err(Error::Config(format!("station {i}: capacities must be at least 1")));
            }
        }
        let macros: Vec<&BaseStation> = stations.iter().filter(|s| s.is_macro()).collect();
        if macros.is_empty() {
            return Err(Error::Config("topology needs at least one macro station".into()));
        }

        // Coverage by the macro tier, checked on the corners and a dense lattice.
        let steps = 100;
        for i in 0..=steps {
            for j in 0..=steps {
                let p = Point::new(
                    area_side * i as f64 / steps as f64,
                    area_side * j as f64 / steps as f64,
                );
                if !macros.iter().any(|m| m.covers(&p)) {
                    return Err(Error::Config(format!(
                        "point ({:.1}, {:.1}) is outside macro coverage",
                        p.x, p.y
                    )));
                }
            }
        }

        let small = stations.iter().filter(|s| !s.is_macro()).map(|s| s.id).collect();
        let nearest_macro = stations
            .iter()
            .map(|s| {
                if s.is_macro() {
                    return s.id;
                }
                nearest(macros.iter().copied(), &s.position)
            })
            .collect();

        Ok(Topology {
            stations,
            area_side,
            grid,
            small,
            nearest_macro,
        })
    }

    /// One macro station in the centre of a 1 km square, two small stations
    /// with 300 m coverage, 4 x 4 regions, 10 subcarriers and 10 VMs each.
    pub fn reference() -> Self {
        let station = |id, kind, x, y, r| BaseStation {
            id,
            kind,
            position: Point::new(x, y),
            coverage_radius: r,
            subcarriers: 10,
            vms: 10,
        };
        Topology::new(
            vec![
                station(0, StationKind::Macro, 500.0, 500.0, 750.0),
                station(1, StationKind::Small, 250.0, 250.0, 300.0),
                station(2, StationKind::Small, 750.0, 750.0, 300.0),
            ],
            1000.0,
            RegionGrid { rows: 4, cols: 4 },
        )
        .expect("reference topology is valid")
    }

    pub fn stations(&self) -> &[BaseStation] {
        &self.stations
    }

    pub fn station(&self, id: usize) -> &BaseStation {
        &self.stations[id]
    }

    pub fn num_stations(&self) -> usize {
        self.stations.len()
    }

    /// Ids of the small stations, in activation-vector order.
    pub fn small_ids(&self) -> &[usize] {
        &self.small
    }

    pub fn num_small(&self) -> usize {
        self.small.len()
    }

    /// Position of station `id` in the activation vector, if it is small.
    pub fn small_index(&self, id: usize) -> Option<usize> {
        self.small.iter().position(|&s| s == id)
    }

    pub fn nearest_macro(&self, id: usize) -> usize {
        self.nearest_macro[id]
    }

    pub fn area_side(&self) -> f64 {
        self.area_side
    }

    pub fn grid(&self) -> RegionGrid {
        self.grid
    }

    pub fn num_regions(&self) -> usize {
        self.grid.len()
    }

    /// Region `j` counts row-major from the origin corner.
    pub fn region_rect(&self, j: usize) -> Rect {
        let w = self.area_side / self.grid.cols as f64;
        let h = self.area_side / self.grid.rows as f64;
        let (r, c) = (j / self.grid.cols, j % self.grid.cols);
        Rect {
            x0: c as f64 * w,
            y0: r as f64 * h,
            x1: (c + 1) as f64 * w,
            y1: (r + 1) as f64 * h,
        }
    }

    pub fn region_of(&self, p: &Point) -> usize {
        let w = self.area_side / self.grid.cols as f64;
        let h = self.area_side / self.grid.rows as f64;
        let c = ((p.x / w).floor().max(0.0) as usize).min(self.grid.cols - 1);
        let r = ((p.y / h).floor().max(0.0) as usize).min(self.grid.rows - 1);
        r * self.grid.cols + c
    }

    /// Nearest station whose coverage contains `p`; ties go to the lowest id.
    pub fn associate(&self, p: &Point) -> usize {
        nearest(self.stations.iter().filter(|s| s.covers(p)), p)
    }
}

fn nearest<'a>(candidates: impl Iterator<Item = &'a BaseStation>, p: &Point) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for s in candidates {
        let d = s.position.distance(p);
        match best {
            Some((bd, _)) if d >= bd => {}
            _ => best = Some((d, s.id)),
        }
    }
    best.expect("at least one candidate station").1
}

/// Per-service constants of one slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub id: usize,
    /// Bits per task.
    pub task_size: f64,
    /// CPU cycles per bit.
    pub compute_intensity: f64,
    /// Seconds.
    pub deadline: f64,
    /// Seconds; below this the slice earns full revenue.
    pub soft_deadline: f64,
    /// Mean tasks per vehicle per slot.
    pub arrival_rate: f64,
}

impl SliceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.task_size > 0.0) || !(self.compute_intensity > 0.0) {
            return Err(Error::Config(format!(
                "slice {}: task size and compute intensity must be positive",
                self.id
            )));
        }
        if !(self.soft_deadline > 0.0 && self.soft_deadline < self.deadline) {
            return Err(Error::Config(format!(
                "slice {}: need 0 < soft deadline < deadline",
                self.id
            )));
        }
        if !(self.arrival_rate >= 0.0) {
            return Err(Error::Config(format!("slice {}: negative arrival rate", self.id)));
        }
        Ok(())
    }

    /// Object detection (0.6 Mbit, 1000 cycles/bit, 100 ms) and infotainment
    /// (2 Mbit, 200 cycles/bit, 200 ms), soft deadlines at half the deadline.
    pub fn reference_pair(arrival_rate: f64) -> Vec<SliceSpec> {
        vec![
            SliceSpec {
                id: 0,
                task_size: 0.6e6,
                compute_intensity: 1000.0,
                deadline: 0.100,
                soft_deadline: 0.050,
                arrival_rate,
            },
            SliceSpec {
                id: 1,
                task_size: 2.0e6,
                compute_intensity: 200.0,
                deadline: 0.200,
                soft_deadline: 0.100,
                arrival_rate,
            },
        ]
    }
}

/// Dimensions needed to interpret a flat planning vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanShape {
    pub num_slices: usize,
    /// Upper end of the cloud-VM range used by the projection.
    pub h_max: u32,
}

impl PlanShape {
    /// `M_s + 2KM + K`.
    pub fn action_dim(&self, topo: &Topology) -> usize {
        let (k, m) = (self.num_slices, topo.num_stations());
        topo.num_small() + 2 * k * m + k
    }
}

/// One window's deployment and provisioning decision.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanningDecision {
    /// One flag per small station, in [`Topology::small_ids`] order.
    pub activation: Vec<bool>,
    /// Subcarriers, indexed `[slice][station]`.
    pub spectrum: Vec<Vec<u32>>,
    /// Edge VMs, indexed `[slice][station]`.
    pub compute: Vec<Vec<u32>>,
    /// Cloud VMs per slice.
    pub cloud: Vec<u32>,
}

impl PlanningDecision {
    /// All small stations off, no edge resources, one cloud VM per slice.
    pub fn initial(topo: &Topology, num_slices: usize) -> Self {
        let m = topo.num_stations();
        PlanningDecision {
            activation: vec![false; topo.num_small()],
            spectrum: vec![vec![0; m]; num_slices],
            compute: vec![vec![0; m]; num_slices],
            cloud: vec![1; num_slices],
        }
    }

    pub fn num_slices(&self) -> usize {
        self.cloud.len()
    }

    /// Macro stations are always active.
    pub fn is_active(&self, topo: &Topology, station: usize) -> bool {
        match topo.small_index(station) {
            Some(i) => self.activation[i],
            None => true,
        }
    }

    pub fn active_small_count(&self) -> usize {
        self.activation.iter().filter(|&&o| o).count()
    }

    /// Lexicographic ordering key: activation, then per slice its spectrum
    /// row, compute row and cloud count.
    pub fn order_key(&self) -> Vec<u32> {
        let mut key: Vec<u32> = self.activation.iter().map(|&o| o as u32).collect();
        for k in 0..self.num_slices() {
            key.extend_from_slice(&self.spectrum[k]);
            key.extend_from_slice(&self.compute[k]);
            key.push(self.cloud[k]);
        }
        key
    }

    /// Flat layout `[o; B row-major; C row-major; h]`, the inverse of
    /// [`project_plan`] on feasible integer plans.
    pub fn to_raw(&self) -> Vec<f64> {
        let mut raw: Vec<f64> = self.activation.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect();
        raw.extend(self.spectrum.iter().flatten().map(|&v| v as f64));
        raw.extend(self.compute.iter().flatten().map(|&v| v as f64));
        raw.extend(self.cloud.iter().map(|&v| v as f64));
        raw
    }

    fn check_shape(&self, topo: &Topology, num_slices: usize) -> Result<()> {
        let m = topo.num_stations();
        if self.activation.len() != topo.num_small() {
            return Err(Error::dim("activation", topo.num_small(), self.activation.len()));
        }
        if self.cloud.len() != num_slices {
            return Err(Error::dim("cloud", num_slices, self.cloud.len()));
        }
        for (what, rows) in [("spectrum", &self.spectrum), ("compute", &self.compute)] {
            if rows.len() != num_slices {
                return Err(Error::dim(what, num_slices, rows.len()));
            }
            if let Some(r) = rows.iter().find(|r| r.len() != m) {
                return Err(Error::dim(what, m, r.len()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    SpectrumCapacity { station: usize },
    ComputeCapacity { station: usize },
    ResourceOnInactive { slice: usize, station: usize },
    CloudBelowOne { slice: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SpectrumCapacity { station } => write!(f, "spectrum capacity at {station}"),
            Violation::ComputeCapacity { station } => write!(f, "compute capacity at {station}"),
            Violation::ResourceOnInactive { slice, station } => {
                write!(f, "resource on inactive BS {station} (slice {slice})")
            }
            Violation::CloudBelowOne { slice } => write!(f, "cloud VMs below one for slice {slice}"),
        }
    }
}

/// Checks every planning invariant. Shape problems are errors; an empty
/// list means the plan is feasible.
pub fn validate_plan(
    plan: &PlanningDecision,
    topo: &Topology,
    num_slices: usize,
) -> Result<Vec<Violation>> {
    plan.check_shape(topo, num_slices)?;
    let mut violations = Vec::new();
    for s in topo.stations() {
        let m = s.id;
        if plan.is_active(topo, m) {
            let b: u64 = plan.spectrum.iter().map(|r| r[m] as u64).sum();
            let c: u64 = plan.compute.iter().map(|r| r[m] as u64).sum();
            if b > s.subcarriers as u64 {
                violations.push(Violation::SpectrumCapacity { station: m });
            }
            if c > s.vms as u64 {
                violations.push(Violation::ComputeCapacity { station: m });
            }
        } else {
            for k in 0..num_slices {
                if plan.spectrum[k][m] > 0 || plan.compute[k][m] > 0 {
                    violations.push(Violation::ResourceOnInactive { slice: k, station: m });
                }
            }
        }
    }
    for (k, &h) in plan.cloud.iter().enumerate() {
        if h < 1 {
            violations.push(Violation::CloudBelowOne { slice: k });
        }
    }
    Ok(violations)
}

/// Maps a real vector in resource units onto the nearest feasible integer
/// plan.
///
/// Layout is `[o; B row-major; C row-major; h]` (see
/// [`PlanningDecision::to_raw`]). Activation entries at or above 0.5 switch a
/// small station on. Spectrum and compute entries are clamped to the station
/// capacity and rounded; a station whose rounded total exceeds capacity has
/// its requests scaled down proportionally and re-rounded with
/// largest-remainder, ties to the lower slice. Cloud counts are rounded into
/// `[1, h_max]`. Non-finite entries count as zero (NaN) or saturate (inf).
pub fn project_plan(raw: &[f64], topo: &Topology, shape: PlanShape) -> Result<PlanningDecision> {
    let expected = shape.action_dim(topo);
    if raw.len() != expected {
        return Err(Error::dim("raw plan vector", expected, raw.len()));
    }
    let (ks, m) = (shape.num_slices, topo.num_stations());
    let ms = topo.num_small();
    let activation: Vec<bool> = raw[..ms].iter().map(|&v| v >= 0.5).collect();

    let b_raw = &raw[ms..ms + ks * m];
    let c_raw = &raw[ms + ks * m..ms + 2 * ks * m];
    let h_raw = &raw[ms + 2 * ks * m..];

    let mut plan = PlanningDecision {
        activation,
        spectrum: vec![vec![0; m]; ks],
        compute: vec![vec![0; m]; ks],
        cloud: vec![1; ks],
    };

    for s in topo.stations() {
        let j = s.id;
        if !plan.is_active(topo, j) {
            continue;
        }
        for (src, cap, dst) in [
            (b_raw, s.subcarriers, &mut plan.spectrum),
            (c_raw, s.vms, &mut plan.compute),
        ] {
            let requests: Vec<f64> = (0..ks).map(|k| sanitize(src[k * m + j], cap as f64)).collect();
            for (k, v) in fit_to_capacity(&requests, cap).into_iter().enumerate() {
                dst[k][j] = v;
            }
        }
    }

    let h_max = shape.h_max.max(1);
    for (k, &v) in h_raw.iter().enumerate() {
        plan.cloud[k] = sanitize(v, h_max as f64).round().clamp(1.0, h_max as f64) as u32;
    }
    Ok(plan)
}

fn sanitize(v: f64, hi: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, hi)
    }
}

/// Rounds per-slice requests at one station so that they sum to at most
/// `cap`. Requests are already clamped to `[0, cap]`.
pub(crate) fn fit_to_capacity(requests: &[f64], cap: u32) -> Vec<u32> {
    let rounded: Vec<u32> = requests.iter().map(|v| v.round() as u32).collect();
    if rounded.iter().map(|&v| v as u64).sum::<u64>() <= cap as u64 {
        return rounded;
    }
    let total: f64 = requests.iter().sum();
    let scale = (cap as f64 / total).min(1.0);
    let target: Vec<f64> = requests.iter().map(|v| v * scale).collect();
    let units = ((target.iter().sum::<f64>() + 1e-9).floor() as u64).min(cap as u64);

    let mut out: Vec<u32> = target.iter().map(|v| v.floor() as u32).collect();
    let assigned: u64 = out.iter().map(|&v| v as u64).sum();
    let mut order: Vec<usize> = (0..target.len()).collect();
    // Stable sort keeps the lower index first among equal remainders.
    order.sort_by(|&a, &b| {
        let (ra, rb) = (target[a] - target[a].floor(), target[b] - target[b].floor());
        rb.total_cmp(&ra)
    });
    // A unit only moves toward the target when the remainder is at least one half.
    for &i in order
        .iter()
        .take(units.saturating_sub(assigned) as usize)
        .filter(|&&i| target[i] - target[i].floor() >= 0.5)
    {
        out[i] += 1;
    }
    out
}

/// Per-slot operation decision for every slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperationDecision {
    /// Fraction of the serving station's reserved subcarriers, indexed
    /// `[slice][vehicle]` in slot vehicle order.
    pub spectrum_fractions: Vec<Vec<f64>>,
    /// Tasks sent to the cloud, indexed `[slice][station]`.
    pub dispatch: Vec<Vec<u32>>,
}

/// Task backlog in bits, indexed `[slice][station]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueState {
    pub backlog: Vec<Vec<f64>>,
}

impl QueueState {
    pub fn zeros(num_slices: usize, num_stations: usize) -> Self {
        QueueState {
            backlog: vec![vec![0.0; num_stations]; num_slices],
        }
    }

    pub fn total(&self) -> f64 {
        self.backlog.iter().flatten().sum()
    }
}
