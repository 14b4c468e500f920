//! Myopic benchmark planner: the plan minimizing one window's cost
//! (deployment + provisioning - SLA revenue, no switching cost) over a
//! search grid, evaluated on a fixed traffic sample.
//!
//! The search is exact on the grid without simulating every plan. For a
//! fixed activation pattern, a slice's window-average delay splits into a
//! sum over serving stations of `offload_j / b_j + processing_j(c_j, h)`,
//! where both terms depend only on which small stations fall back to their
//! macro. Each slice's candidates are therefore scored from per-station
//! tables, and slices are coupled only through station capacities, which a
//! prefix-minimum table over the last slice resolves.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::cost::{sla_revenue, window_cost, CostParams};
use crate::domain::{validate_plan, PlanningDecision, QueueState, Topology};
use crate::error::{Error, Result};
use crate::operation::{dispatch_tasks, run_window, subcarrier_rate, DispatchInput, OperationContext};
use crate::traffic::SlotObservation;

/// Candidate values per plan coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchGrid {
    /// Allowed activation flags per small station.
    pub activation: Vec<Vec<bool>>,
    /// Allowed subcarrier counts, `[slice][station]`.
    pub spectrum: Vec<Vec<Vec<u32>>>,
    /// Allowed edge VM counts, `[slice][station]`.
    pub compute: Vec<Vec<Vec<u32>>>,
    /// Allowed cloud VM counts per slice.
    pub cloud: Vec<Vec<u32>>,
}

fn steps(cap: u32, step: u32) -> Vec<u32> {
    let mut v: Vec<u32> = (0..=cap).step_by(step.max(1) as usize).collect();
    if v.last() != Some(&cap) {
        v.push(cap);
    }
    v
}

impl SearchGrid {
    /// `{0, step, 2 step, ..., cap}` for edge resources and
    /// `{1, step, 2 step, ..., h_max}` for cloud VMs.
    pub fn quantized(topo: &Topology, num_slices: usize, step: u32, h_max: u32) -> Self {
        let m = topo.num_stations();
        let b: Vec<Vec<u32>> = (0..m).map(|j| steps(topo.station(j).subcarriers, step)).collect();
        let c: Vec<Vec<u32>> = (0..m).map(|j| steps(topo.station(j).vms, step)).collect();
        let mut h = steps(h_max.max(1), step);
        h[0] = 1;
        h.dedup();
        SearchGrid {
            activation: vec![vec![false, true]; topo.num_small()],
            spectrum: vec![b; num_slices],
            compute: vec![c; num_slices],
            cloud: vec![h; num_slices],
        }
    }

    /// Every integer point.
    pub fn full(topo: &Topology, num_slices: usize, h_max: u32) -> Self {
        Self::quantized(topo, num_slices, 1, h_max)
    }

    /// The grid containing exactly `plan`.
    pub fn single(plan: &PlanningDecision) -> Self {
        let one = |rows: &Vec<Vec<u32>>| -> Vec<Vec<Vec<u32>>> {
            rows.iter().map(|r| r.iter().map(|&v| vec![v]).collect()).collect()
        };
        SearchGrid {
            activation: plan.activation.iter().map(|&o| vec![o]).collect(),
            spectrum: one(&plan.spectrum),
            compute: one(&plan.compute),
            cloud: plan.cloud.iter().map(|&h| vec![h]).collect(),
        }
    }

    pub fn num_slices(&self) -> usize {
        self.cloud.len()
    }

    fn normalized(&self) -> Self {
        let norm = |v: &Vec<u32>| {
            let mut v = v.clone();
            v.sort_unstable();
            v.dedup();
            v
        };
        let mut acts: Vec<Vec<bool>> = self.activation.clone();
        for a in &mut acts {
            a.sort_unstable();
            a.dedup();
        }
        SearchGrid {
            activation: acts,
            spectrum: self.spectrum.iter().map(|r| r.iter().map(norm).collect()).collect(),
            compute: self.compute.iter().map(|r| r.iter().map(norm).collect()).collect(),
            cloud: self.cloud.iter().map(norm).collect(),
        }
    }

    fn check_shape(&self, topo: &Topology) -> Result<()> {
        let (ks, m) = (self.num_slices(), topo.num_stations());
        if self.activation.len() != topo.num_small() {
            return Err(Error::dim("grid activation", topo.num_small(), self.activation.len()));
        }
        for rows in [&self.spectrum, &self.compute] {
            if rows.len() != ks {
                return Err(Error::dim("grid slices", ks, rows.len()));
            }
            if let Some(r) = rows.iter().find(|r| r.len() != m) {
                return Err(Error::dim("grid stations", m, r.len()));
            }
        }
        Ok(())
    }

    /// All feasible grid points, in no particular order. Exponential; meant
    /// for small grids.
    pub fn enumerate(&self, topo: &Topology) -> Result<Vec<PlanningDecision>> {
        self.check_shape(topo)?;
        let (ks, m) = (self.num_slices(), topo.num_stations());
        let mut lists: Vec<Vec<u32>> = self
            .activation
            .iter()
            .map(|a| a.iter().map(|&o| o as u32).collect())
            .collect();
        for k in 0..ks {
            lists.extend(self.spectrum[k].iter().cloned());
        }
        for k in 0..ks {
            lists.extend(self.compute[k].iter().cloned());
        }
        lists.extend(self.cloud.iter().cloned());
        let lens: Vec<usize> = lists.iter().map(|l| l.len()).collect();
        let ms = topo.num_small();
        let mut out = Vec::new();
        for_each_product(&lens, |idx| {
            let v: Vec<u32> = idx.iter().enumerate().map(|(i, &x)| lists[i][x]).collect();
            let plan = PlanningDecision {
                activation: v[..ms].iter().map(|&o| o == 1).collect(),
                spectrum: (0..ks).map(|k| v[ms + k * m..ms + (k + 1) * m].to_vec()).collect(),
                compute: (0..ks)
                    .map(|k| v[ms + ks * m + k * m..ms + ks * m + (k + 1) * m].to_vec())
                    .collect(),
                cloud: v[ms + 2 * ks * m..].to_vec(),
            };
            if validate_plan(&plan, topo, ks).map(|v| v.is_empty()).unwrap_or(false) {
                out.push(plan);
            }
        });
        Ok(out)
    }
}

/// Calls `f` with every index vector below `lens`, last coordinate fastest.
fn for_each_product(lens: &[usize], mut f: impl FnMut(&[usize])) {
    if lens.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; lens.len()];
    loop {
        f(&idx);
        let mut d = lens.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < lens[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Cost the myopic planner minimizes: the window cost without switching.
pub fn myopic_cost(
    plan: &PlanningDecision,
    slots: &[SlotObservation],
    queues: &QueueState,
    ctx: &OperationContext<'_>,
    cost: &CostParams,
) -> Result<f64> {
    let report = run_window(plan, slots, queues, ctx)?;
    Ok(window_cost(plan, plan, &report.mean_delay, ctx.slices, ctx.topo, cost).myopic_total())
}

fn better(a: (f64, &[u32]), b: (f64, &[u32])) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.1 < b.1,
    }
}

/// Reference planner: simulates every grid point. Ties go to the smallest
/// [`PlanningDecision::order_key`].
pub fn brute_force_plan(
    grid: &SearchGrid,
    slots: &[SlotObservation],
    queues: &QueueState,
    ctx: &OperationContext<'_>,
    cost: &CostParams,
) -> Result<(PlanningDecision, f64)> {
    let mut best: Option<(PlanningDecision, f64, Vec<u32>)> = None;
    for plan in grid.enumerate(ctx.topo)? {
        let c = myopic_cost(&plan, slots, queues, ctx, cost)?;
        let key = plan.order_key();
        if best.as_ref().is_none_or(|(_, bc, bk)| better((c, &key), (*bc, bk))) {
            best = Some((plan, c, key));
        }
    }
    best.map(|(p, c, _)| (p, c)).ok_or(Error::EmptyGrid)
}

/// Per-slot view of one slice used to build the tables.
struct SliceSlots {
    /// Slots with at least one task: (vehicle count, total tasks, rtt,
    /// per-vehicle (associated station, own weight, fallback weight, tasks)).
    busy: Vec<BusySlot>,
    /// Every slot's routed tasks are needed for queue evolution, including
    /// slots with no tasks, so all slots are kept.
    all: Vec<BusySlot>,
}

struct BusySlot {
    vehicles: usize,
    tasks: u64,
    rtt: f64,
    /// `(associated station, sqrt(1/R) there, sqrt(1/R) at its macro, tasks)`.
    members: Vec<(usize, f64, f64, u32)>,
}

fn slice_slots(slots: &[SlotObservation], k: usize, ctx: &OperationContext<'_>) -> SliceSlots {
    let topo = ctx.topo;
    let all: Vec<BusySlot> = slots
        .iter()
        .map(|obs| BusySlot {
            vehicles: obs.num_vehicles(),
            tasks: obs.total_tasks(k),
            rtt: obs.backbone_rtt,
            members: obs
                .vehicles
                .iter()
                .enumerate()
                .map(|(n, v)| {
                    let a = v.associated_bs;
                    let fb = topo.nearest_macro(a);
                    let w = |j: usize| (1.0 / subcarrier_rate(v.gains[j], &ctx.link)).sqrt();
                    (a, w(a), w(fb), obs.arrivals.per_vehicle[k][n])
                })
                .collect(),
        })
        .collect();
    let busy = all
        .iter()
        .filter(|s| s.tasks > 0)
        .map(|s| BusySlot {
            vehicles: s.vehicles,
            tasks: s.tasks,
            rtt: s.rtt,
            members: s.members.clone(),
        })
        .collect();
    SliceSlots { busy, all }
}

/// Lazily built per-station delay tables of one slice.
struct SliceTables<'a> {
    k: usize,
    data: SliceSlots,
    ctx: &'a OperationContext<'a>,
    queues: &'a QueueState,
    /// `(station, fallback mask)` -> (offload coefficient, has members).
    offload: HashMap<(usize, u64), (f64, bool)>,
    /// `(station, fallback mask, inactive mask, c, h)` -> processing term.
    processing: HashMap<(usize, u64, u64, u32, u32), f64>,
}

fn small_bit(topo: &Topology, s: usize) -> u64 {
    1u64 << topo.small_index(s).expect("small station")
}

impl<'a> SliceTables<'a> {
    /// Whether a vehicle associated with `a` is served at `j` when the
    /// small stations in `fallback` route to their macro.
    fn served_at(&self, a: usize, j: usize, fallback: u64) -> Option<bool> {
        let topo = self.ctx.topo;
        if topo.station(a).is_macro() {
            return (a == j).then_some(true);
        }
        if fallback & small_bit(topo, a) != 0 {
            (topo.nearest_macro(a) == j).then_some(false)
        } else {
            (a == j).then_some(true)
        }
    }

    fn offload(&mut self, j: usize, fallback: u64) -> (f64, bool) {
        let key = (j, if self.ctx.topo.station(j).is_macro() { fallback } else { 0 });
        if let Some(&v) = self.offload.get(&key) {
            return v;
        }
        let xi = self.ctx.slices[self.k].task_size;
        let mut total = 0.0;
        let mut has = false;
        for s in &self.data.busy {
            let mut w = 0.0;
            let mut any = false;
            for &(a, own, fb, _) in &s.members {
                if let Some(at_own) = self.served_at(a, j, key.1) {
                    w += if at_own { own } else { fb };
                    any = true;
                }
            }
            if any {
                has = true;
                total += xi * w * w / s.vehicles as f64;
            }
        }
        let nb = self.data.busy.len().max(1) as f64;
        let v = (total / nb, has);
        self.offload.insert(key, v);
        v
    }

    fn processing(&mut self, j: usize, fallback: u64, inactive: u64, c: u32, h: u32) -> f64 {
        let topo = self.ctx.topo;
        let is_macro = topo.station(j).is_macro();
        let key = (
            j,
            if is_macro { fallback } else { 0 },
            if is_macro { inactive } else { 0 },
            c,
            h,
        );
        if let Some(&v) = self.processing.get(&key) {
            return v;
        }
        let spec = &self.ctx.slices[self.k];
        let mut backlog = self.queues.backlog[self.k][j];
        if is_macro {
            for &s in topo.small_ids() {
                if inactive & small_bit(topo, s) != 0 && topo.nearest_macro(s) == j {
                    backlog += self.queues.backlog[self.k][s];
                }
            }
        }
        let service = c as f64 * self.ctx.compute.edge_vm_hz * self.ctx.compute.slot_duration / spec.compute_intensity;
        let nb = self.data.busy.len();
        let mut total = 0.0;
        for s in &self.data.all {
            let tasks: u32 = s
                .members
                .iter()
                .filter(|&&(a, _, _, _)| self.served_at(a, j, key.1).is_some())
                .map(|&(_, _, _, t)| t)
                .sum();
            let input = DispatchInput {
                tasks,
                backlog,
                task_size: spec.task_size,
                intensity: spec.compute_intensity,
                edge_vms: c,
                edge_hz: self.ctx.compute.edge_vm_hz,
                cloud_vms: h,
                cloud_hz: self.ctx.compute.cloud_vm_hz,
                rtt: s.rtt,
            };
            let x = dispatch_tasks(&input);
            if s.tasks > 0 && tasks > 0 {
                total += input.objective(x) / s.tasks as f64;
            }
            backlog = (backlog + (tasks - x) as f64 * spec.task_size - service).max(0.0);
        }
        let v = if nb > 0 { total / nb as f64 } else { 0.0 };
        self.processing.insert(key, v);
        v
    }
}

/// One slice's resources under a fixed activation pattern.
struct Choices {
    /// Per choice: `[b row; c row; h]`.
    vals: Vec<u32>,
    cost: Vec<f64>,
    width: usize,
}

impl Choices {
    fn row(&self, i: usize) -> &[u32] {
        &self.vals[i * self.width..(i + 1) * self.width]
    }
}

/// Candidate lists of one slice under an activation pattern, or `None`
/// when some coordinate has no admissible value.
fn slice_lists(grid: &SearchGrid, k: usize, topo: &Topology, active: &[bool]) -> Option<(Vec<Vec<u32>>, Vec<Vec<u32>>)> {
    let m = topo.num_stations();
    let mut bl = Vec::with_capacity(m);
    let mut cl = Vec::with_capacity(m);
    for j in 0..m {
        let st = topo.station(j);
        let (b, c): (Vec<u32>, Vec<u32>) = if active[j] {
            (
                grid.spectrum[k][j].iter().copied().filter(|&v| v <= st.subcarriers).collect(),
                grid.compute[k][j].iter().copied().filter(|&v| v <= st.vms).collect(),
            )
        } else {
            (
                grid.spectrum[k][j].iter().copied().filter(|&v| v == 0).collect(),
                grid.compute[k][j].iter().copied().filter(|&v| v == 0).collect(),
            )
        };
        if b.is_empty() || c.is_empty() {
            return None;
        }
        bl.push(b);
        cl.push(c);
    }
    Some((bl, cl))
}

fn enumerate_slice(
    tables: &mut SliceTables<'_>,
    grid: &SearchGrid,
    cost: &CostParams,
    active: &[bool],
    lists: &(Vec<Vec<u32>>, Vec<Vec<u32>>),
) -> Choices {
    let topo = tables.ctx.topo;
    let k = tables.k;
    let m = topo.num_stations();
    let spec = tables.ctx.slices[k].clone();
    let (bl, cl) = lists;
    let mut inactive = 0u64;
    for &s in topo.small_ids() {
        if !active[s] {
            inactive |= small_bit(topo, s);
        }
    }
    let width = 2 * m + 1;
    let mut out = Choices {
        vals: Vec::new(),
        cost: Vec::new(),
        width,
    };
    let h_list: Vec<u32> = grid.cloud[k].iter().copied().filter(|&h| h >= 1).collect();
    let b_lens: Vec<usize> = bl.iter().map(|l| l.len()).collect();
    for &h in &h_list {
        for_each_product(&b_lens, |bi| {
            let b: Vec<u32> = (0..m).map(|j| bl[j][bi[j]]).collect();
            let mut fallback = inactive;
            for &s in topo.small_ids() {
                if active[s] && b[s] == 0 {
                    fallback |= small_bit(topo, s);
                }
            }
            let served: Vec<bool> = (0..m)
                .map(|j| topo.station(j).is_macro() || fallback & small_bit(topo, j) == 0)
                .collect();
            let mut offload = 0.0;
            for j in 0..m {
                if served[j] {
                    let (coef, has) = tables.offload(j, fallback);
                    offload += if b[j] > 0 {
                        coef / b[j] as f64
                    } else if has {
                        f64::INFINITY
                    } else {
                        0.0
                    };
                }
            }
            // Unserved active stations keep their smallest compute value.
            let c_lists: Vec<Vec<(u32, f64)>> = (0..m)
                .map(|j| {
                    if served[j] {
                        cl[j].iter().map(|&c| (c, tables.processing(j, fallback, inactive, c, h))).collect()
                    } else {
                        vec![(cl[j][0], 0.0)]
                    }
                })
                .collect();
            let c_lens: Vec<usize> = c_lists.iter().map(|l| l.len()).collect();
            let b_units: u32 = b.iter().sum();
            for_each_product(&c_lens, |ci| {
                let mut delay = offload;
                let mut units = b_units + h;
                for j in 0..m {
                    let (c, p) = c_lists[j][ci[j]];
                    delay += p;
                    units += c;
                }
                let value = cost.resource * units as f64 - sla_revenue(delay, &spec, cost);
                out.vals.extend_from_slice(&b);
                out.vals.extend((0..m).map(|j| c_lists[j][ci[j]].0));
                out.vals.push(h);
                out.cost.push(value);
            });
        });
    }
    out
}

/// Minimum over the last slice's choices within per-coordinate capacity
/// limits, indexed by position in each coordinate's value list.
struct PrefixTable {
    lists: Vec<Vec<u32>>,
    strides: Vec<usize>,
    best: Vec<Option<usize>>,
}

impl PrefixTable {
    fn build(choices: &Choices, bl: &[Vec<u32>], cl: &[Vec<u32>]) -> Self {
        let lists: Vec<Vec<u32>> = bl.iter().chain(cl).cloned().collect();
        let mut strides = vec![1usize; lists.len()];
        for d in (0..lists.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * lists[d + 1].len();
        }
        let size = strides[0] * lists[0].len();
        let mut best: Vec<Option<usize>> = vec![None; size];
        let dims = lists.len();
        let pick = |a: Option<usize>, b: Option<usize>| match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => {
                if better((choices.cost[y], choices.row(y)), (choices.cost[x], choices.row(x))) {
                    Some(y)
                } else {
                    Some(x)
                }
            }
        };
        for i in 0..choices.cost.len() {
            let row = choices.row(i);
            let mut at = 0;
            for d in 0..dims {
                let pos = lists[d].binary_search(&row[d]).expect("value from list");
                at += pos * strides[d];
            }
            best[at] = pick(best[at], Some(i));
        }
        for d in 0..dims {
            let (stride, len) = (strides[d], lists[d].len());
            for at in 0..size {
                if (at / stride) % len > 0 {
                    best[at] = pick(best[at], best[at - stride]);
                }
            }
        }
        PrefixTable { lists, strides, best }
    }

    fn query(&self, limits: &[u32]) -> Option<usize> {
        let mut at = 0;
        for (d, &lim) in limits.iter().enumerate() {
            let n = self.lists[d].partition_point(|&v| v <= lim);
            if n == 0 {
                return None;
            }
            at += (n - 1) * self.strides[d];
        }
        self.best[at]
    }
}

/// The grid plan with the lowest myopic cost on `slots` starting from
/// `queues`; ties go to the smallest [`PlanningDecision::order_key`].
/// Returns the plan and its myopic cost as computed by the search.
pub fn myopic_plan(
    grid: &SearchGrid,
    slots: &[SlotObservation],
    queues: &QueueState,
    ctx: &OperationContext<'_>,
    cost: &CostParams,
) -> Result<(PlanningDecision, f64)> {
    let topo = ctx.topo;
    grid.check_shape(topo)?;
    let grid = grid.normalized();
    let ks = grid.num_slices();
    if ks != ctx.slices.len() {
        return Err(Error::dim("grid slices", ctx.slices.len(), ks));
    }
    if topo.num_small() > 63 {
        return Err(Error::Config("structured search supports at most 63 small stations".into()));
    }
    let m = topo.num_stations();
    let mut tables: Vec<SliceTables<'_>> = (0..ks)
        .map(|k| SliceTables {
            k,
            data: slice_slots(slots, k, ctx),
            ctx,
            queues,
            offload: HashMap::new(),
            processing: HashMap::new(),
        })
        .collect();

    let act_lens: Vec<usize> = grid.activation.iter().map(|a| a.len()).collect();
    let mut patterns = Vec::new();
    for_each_product(&act_lens, |i| {
        patterns.push(i.iter().enumerate().map(|(s, &x)| grid.activation[s][x]).collect::<Vec<bool>>())
    });

    let mut best: Option<(f64, Vec<u32>)> = None;
    for o in patterns {
        let mut active = vec![true; m];
        for (i, &s) in topo.small_ids().iter().enumerate() {
            active[s] = o[i];
        }
        let lists: Option<Vec<_>> = (0..ks).map(|k| slice_lists(&grid, k, topo, &active)).collect();
        let Some(lists) = lists else { continue };
        let choices: Vec<Choices> = (0..ks)
            .map(|k| enumerate_slice(&mut tables[k], &grid, cost, &active, &lists[k]))
            .collect();
        let last = ks - 1;
        let table = PrefixTable::build(&choices[last], &lists[last].0, &lists[last].1);
        let deploy = cost.deployment * o.iter().filter(|&&x| x).count() as f64;
        let caps: Vec<u32> = (0..m)
            .map(|j| topo.station(j).subcarriers)
            .chain((0..m).map(|j| topo.station(j).vms))
            .collect();
        let o_key: Vec<u32> = o.iter().map(|&x| x as u32).collect();

        // Depth-first over all but the last slice.
        let mut stack: Vec<usize> = Vec::with_capacity(last);
        search(&choices, &table, &caps, 0.0, &mut stack, &mut |chosen, total| {
            let total = deploy + total;
            let mut key = o_key.clone();
            for (k, &i) in chosen.iter().enumerate() {
                key.extend_from_slice(choices[k].row(i));
            }
            if best.as_ref().is_none_or(|(bc, bk)| better((total, &key), (*bc, bk))) {
                best = Some((total, key));
            }
        });
    }

    let (value, key) = best.ok_or(Error::EmptyGrid)?;
    let ms = topo.num_small();
    let w = 2 * m + 1;
    let plan = PlanningDecision {
        activation: key[..ms].iter().map(|&v| v == 1).collect(),
        spectrum: (0..ks).map(|k| key[ms + k * w..ms + k * w + m].to_vec()).collect(),
        compute: (0..ks).map(|k| key[ms + k * w + m..ms + k * w + 2 * m].to_vec()).collect(),
        cloud: (0..ks).map(|k| key[ms + k * w + 2 * m]).collect(),
    };
    Ok((plan, value))
}

fn search(
    choices: &[Choices],
    table: &PrefixTable,
    remaining: &[u32],
    acc: f64,
    stack: &mut Vec<usize>,
    found: &mut dyn FnMut(&[usize], f64),
) {
    let k = stack.len();
    if k + 1 == choices.len() {
        if let Some(i) = table.query(remaining) {
            stack.push(i);
            found(stack, acc + choices[k].cost[i]);
            stack.pop();
        }
        return;
    }
    let dims = remaining.len();
    let mut left = vec![0u32; dims];
    'next: for i in 0..choices[k].cost.len() {
        let row = choices[k].row(i);
        for d in 0..dims {
            match remaining[d].checked_sub(row[d]) {
                Some(v) => left[d] = v,
                None => continue 'next,
            }
        }
        stack.push(i);
        search(choices, table, &left, acc + choices[k].cost[i], stack, found);
        stack.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BaseStation, Point, RegionGrid, SliceSpec, StationKind};
    use crate::operation::RadioParams;
    use crate::rng::rng_for;
    use rand::Rng;
    use crate::traffic::{sample_window, DensityMap, TrafficModel};

    fn tiny_topology(cap: u32) -> Topology {
        let st = |id, kind, x, r| BaseStation {
            id,
            kind,
            position: Point::new(x, 100.0),
            coverage_radius: r,
            subcarriers: cap,
            vms: cap,
        };
        Topology::new(
            vec![st(0, StationKind::Macro, 100.0, 400.0), st(1, StationKind::Small, 150.0, 60.0)],
            200.0,
            RegionGrid { rows: 1, cols: 2 },
        )
        .unwrap()
    }

    struct Case {
        topo: Topology,
        slices: Vec<SliceSpec>,
        slots: Vec<SlotObservation>,
        queues: QueueState,
    }

    fn case(topo: Topology, slices: Vec<SliceSpec>, density: f64, seed: u64, backlog: f64) -> Case {
        let d = DensityMap::uniform(0, topo.num_regions(), density);
        let slots = sample_window(&d, 6, &topo, &slices, &TrafficModel::default(), &mut rng_for(seed, &[]));
        let mut queues = QueueState::zeros(slices.len(), topo.num_stations());
        for row in &mut queues.backlog {
            for (j, q) in row.iter_mut().enumerate() {
                *q = backlog * (j + 1) as f64;
            }
        }
        Case {
            topo,
            slices,
            slots,
            queues,
        }
    }

    fn ctx<'a>(c: &'a Case) -> OperationContext<'a> {
        OperationContext {
            topo: &c.topo,
            slices: &c.slices,
            link: RadioParams::default().link_budget().unwrap(),
            compute: Default::default(),
        }
    }

    fn cheap_compute(slices: &mut [SliceSpec]) {
        // Heavier tasks so that edge and cloud trade off within tiny capacities.
        for s in slices {
            s.compute_intensity *= 20.0;
        }
    }

    #[test]
    fn zero_traffic_picks_the_minimal_plan() {
        let c = case(Topology::reference(), SliceSpec::reference_pair(1.0), 0.0, 1, 0.0);
        let grid = SearchGrid::quantized(&c.topo, 2, 2, 10);
        let (plan, value) = myopic_plan(&grid, &c.slots, &c.queues, &ctx(&c), &CostParams::default()).unwrap();
        assert_eq!(plan, PlanningDecision::initial(&c.topo, 2));
        let p = CostParams::default();
        assert!((value - (2.0 * p.resource - 2.0 * p.revenue)).abs() < 1e-12);
    }

    #[test]
    fn single_point_grid_returns_its_plan() {
        let c = case(Topology::reference(), SliceSpec::reference_pair(2.0), 2.0, 2, 0.0);
        let plan = PlanningDecision {
            activation: vec![true, false],
            spectrum: vec![vec![4, 3, 0], vec![6, 5, 0]],
            compute: vec![vec![3, 1, 0], vec![2, 6, 0]],
            cloud: vec![2, 5],
        };
        let cx = ctx(&c);
        let p = CostParams::default();
        let (got, value) = myopic_plan(&SearchGrid::single(&plan), &c.slots, &c.queues, &cx, &p).unwrap();
        assert_eq!(got, plan);
        let direct = myopic_cost(&plan, &c.slots, &c.queues, &cx, &p).unwrap();
        assert!((value - direct).abs() < 1e-9 * direct.abs().max(1.0), "{value} vs {direct}");
    }

    #[test]
    fn infeasible_grid_is_an_error() {
        let c = case(Topology::reference(), SliceSpec::reference_pair(1.0), 1.0, 3, 0.0);
        let mut grid = SearchGrid::quantized(&c.topo, 2, 2, 10);
        grid.cloud[0] = vec![0];
        assert!(matches!(
            myopic_plan(&grid, &c.slots, &c.queues, &ctx(&c), &CostParams::default()),
            Err(Error::EmptyGrid)
        ));
    }

    fn assert_matches_brute_force(c: &Case, grid: &SearchGrid, cost: &CostParams) {
        let cx = ctx(c);
        let (plan, value) = myopic_plan(grid, &c.slots, &c.queues, &cx, cost).unwrap();
        let (bf_plan, bf_value) = brute_force_plan(grid, &c.slots, &c.queues, &cx, cost).unwrap();
        let realized = myopic_cost(&plan, &c.slots, &c.queues, &cx, cost).unwrap();
        let tol = 1e-9 * bf_value.abs().max(1.0);
        assert!((realized - bf_value).abs() <= tol, "search {plan:?} at {realized}, enumeration {bf_plan:?} at {bf_value}");
        assert!((value - realized).abs() <= tol, "table value {value} vs simulated {realized}");
    }

    #[test]
    fn one_slice_tiny_instance_matches_enumeration() {
        for seed in 0..6 {
            let mut slices = vec![SliceSpec::reference_pair(3.0)[0].clone()];
            cheap_compute(&mut slices);
            let c = case(tiny_topology(2), slices, 2.0, seed, 1e5 * seed as f64);
            let grid = SearchGrid::full(&c.topo, 1, 2);
            assert_matches_brute_force(&c, &grid, &CostParams::default());
        }
    }

    #[test]
    fn two_slice_tiny_instance_matches_enumeration() {
        for seed in 0..3 {
            let mut slices = SliceSpec::reference_pair(3.0);
            cheap_compute(&mut slices);
            let c = case(tiny_topology(2), slices, 3.0, 10 + seed, 2e5 * seed as f64);
            let grid = SearchGrid::full(&c.topo, 2, 2);
            let cost = CostParams {
                deployment: 0.3,
                ..CostParams::default()
            };
            assert_matches_brute_force(&c, &grid, &cost);
        }
    }

    #[test]
    fn returned_plan_is_feasible_and_unbeaten_on_reference_grid() {
        let c = case(Topology::reference(), SliceSpec::reference_pair(2.0), 3.0, 21, 0.0);
        let cx = ctx(&c);
        let cost = CostParams::default();
        let grid = SearchGrid::quantized(&c.topo, 2, 2, 10);
        let (plan, _) = myopic_plan(&grid, &c.slots, &c.queues, &cx, &cost).unwrap();
        assert!(validate_plan(&plan, &c.topo, 2).unwrap().is_empty());
        let best = myopic_cost(&plan, &c.slots, &c.queues, &cx, &cost).unwrap();
        let unbeaten = |p: &PlanningDecision| {
            if validate_plan(p, &c.topo, 2).unwrap().is_empty() {
                let v = myopic_cost(p, &c.slots, &c.queues, &cx, &cost).unwrap();
                assert!(v >= best - 1e-9 * best.abs().max(1.0), "{p:?} at {v} beats {best}");
            }
        };
        // Every single-coordinate move within the grid.
        for k in 0..2 {
            for j in 0..c.topo.num_stations() {
                for &v in &grid.spectrum[k][j] {
                    let mut p = plan.clone();
                    p.spectrum[k][j] = v;
                    unbeaten(&p);
                }
                for &v in &grid.compute[k][j] {
                    let mut p = plan.clone();
                    p.compute[k][j] = v;
                    unbeaten(&p);
                }
            }
            for &h in &grid.cloud[k] {
                let mut p = plan.clone();
                p.cloud[k] = h;
                unbeaten(&p);
            }
        }
        // Random grid points.
        let mut rng = rng_for(99, &[]);
        let pick = |l: &Vec<u32>, rng: &mut crate::rng::SimRng| l[rng.random_range(0..l.len())];
        for _ in 0..3000 {
            let activation: Vec<bool> = (0..c.topo.num_small()).map(|_| rng.random_bool(0.5)).collect();
            let mut p = PlanningDecision {
                activation,
                spectrum: grid.spectrum.iter().map(|r| r.iter().map(|l| pick(l, &mut rng)).collect()).collect(),
                compute: grid.compute.iter().map(|r| r.iter().map(|l| pick(l, &mut rng)).collect()).collect(),
                cloud: grid.cloud.iter().map(|l| pick(l, &mut rng)).collect(),
            };
            for (i, &s) in c.topo.small_ids().iter().enumerate() {
                if !p.activation[i] {
                    for k in 0..2 {
                        p.spectrum[k][s] = 0;
                        p.compute[k][s] = 0;
                    }
                }
            }
            unbeaten(&p);
        }
    }
}
