//! Slicing cost of one planning window: deployment, provisioning,
//! adjustment between consecutive plans, minus SLA revenue.

use serde::{Deserialize, Serialize};

use crate::domain::{PlanningDecision, SliceSpec, Topology};
use crate::error::{Error, Result};

/// Shape of the revenue curve between the soft deadline and the deadline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlaRamp {
    /// `q_b (D - θ') / (θ - θ')`: zero at the soft deadline, `q_b` at the deadline.
    #[default]
    AsPrinted,
    /// `q_b (θ - D) / (θ - θ')`: `q_b` at the soft deadline, zero at the deadline.
    Decreasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Per active small station per window.
    pub deployment: f64,
    /// Per subcarrier, edge VM or cloud VM per window.
    pub resource: f64,
    /// Per unit of resource increase on a continuously deployed slice.
    pub adjustment: f64,
    /// Revenue per slice meeting its soft deadline.
    pub revenue: f64,
    /// Penalty per slice missing its deadline.
    pub penalty: f64,
    #[serde(default)]
    pub sla_ramp: SlaRamp,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            deployment: 1.0,
            resource: 0.1,
            adjustment: 0.5,
            revenue: 5.0,
            penalty: 10.0,
            sla_ramp: SlaRamp::AsPrinted,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.deployment, self.resource, self.adjustment, self.revenue, self.penalty];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("cost parameters must be positive and finite".into()));
        }
        if self.penalty <= self.revenue {
            return Err(Error::Config("SLA penalty must exceed SLA revenue".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub deployment: f64,
    pub provisioning: f64,
    pub adjustment: f64,
    pub sla_revenue: f64,
    /// `((deployment + provisioning) + adjustment) - sla_revenue`.
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(deployment: f64, provisioning: f64, adjustment: f64, sla_revenue: f64) -> Self {
        CostBreakdown {
            deployment,
            provisioning,
            adjustment,
            sla_revenue,
            total: deployment + provisioning + adjustment - sla_revenue,
        }
    }

    /// The cost a planner that ignores switching would see.
    pub fn myopic_total(&self) -> f64 {
        self.deployment + self.provisioning - self.sla_revenue
    }
}

pub fn deployment_cost(plan: &PlanningDecision, params: &CostParams) -> f64 {
    params.deployment * plan.active_small_count() as f64
}

/// Resource units held by the plan: cloud VMs plus edge resources on active
/// stations.
pub fn provisioned_units(plan: &PlanningDecision, topo: &Topology) -> u64 {
    let mut units = 0u64;
    for k in 0..plan.num_slices() {
        units += plan.cloud[k] as u64;
        for m in 0..topo.num_stations() {
            if plan.is_active(topo, m) {
                units += plan.spectrum[k][m] as u64 + plan.compute[k][m] as u64;
            }
        }
    }
    units
}

pub fn provisioning_cost(plan: &PlanningDecision, topo: &Topology, params: &CostParams) -> f64 {
    params.resource * provisioned_units(plan, topo) as f64
}

/// Resource increases over the previous plan, counted only where the slice
/// stays deployed: per station when it is active in both windows (macro
/// stations always are), and always for cloud VMs.
pub fn adjusted_units(plan: &PlanningDecision, prev: &PlanningDecision, topo: &Topology) -> u64 {
    let inc = |now: u32, before: u32| now.saturating_sub(before) as u64;
    let mut units = 0u64;
    for k in 0..plan.num_slices() {
        units += inc(plan.cloud[k], prev.cloud[k]);
        for m in 0..topo.num_stations() {
            if plan.is_active(topo, m) && prev.is_active(topo, m) {
                units += inc(plan.spectrum[k][m], prev.spectrum[k][m]);
                units += inc(plan.compute[k][m], prev.compute[k][m]);
            }
        }
    }
    units
}

pub fn adjustment_cost(
    plan: &PlanningDecision,
    prev: &PlanningDecision,
    topo: &Topology,
    params: &CostParams,
) -> f64 {
    params.adjustment * adjusted_units(plan, prev, topo) as f64
}

/// Piecewise SLA revenue for a window-average delay. Non-finite delays
/// count as violations.
pub fn sla_revenue(delay: f64, slice: &SliceSpec, params: &CostParams) -> f64 {
    let (soft, hard) = (slice.soft_deadline, slice.deadline);
    if !(delay <= hard) {
        return -params.penalty;
    }
    if delay < soft {
        return params.revenue;
    }
    match params.sla_ramp {
        SlaRamp::AsPrinted => params.revenue * (delay - soft) / (hard - soft),
        SlaRamp::Decreasing => params.revenue * (hard - delay) / (hard - soft),
    }
}

/// Sum of per-slice revenues, in slice order.
pub fn total_revenue(mean_delays: &[f64], slices: &[SliceSpec], params: &CostParams) -> f64 {
    slices
        .iter()
        .zip(mean_delays)
        .map(|(s, &d)| sla_revenue(d, s, params))
        .sum()
}

pub fn window_cost(
    plan: &PlanningDecision,
    prev: &PlanningDecision,
    mean_delays: &[f64],
    slices: &[SliceSpec],
    topo: &Topology,
    params: &CostParams,
) -> CostBreakdown {
    CostBreakdown::new(
        deployment_cost(plan, params),
        provisioning_cost(plan, topo, params),
        adjustment_cost(plan, prev, topo, params),
        total_revenue(mean_delays, slices, params),
    )
}

/// Cost over the whole slice lifecycle.
pub fn lifecycle_cost(windows: &[CostBreakdown]) -> f64 {
    windows.iter().map(|w| w.total).sum()
}
