//! The SLA revenue curve under both ramp readings, and the cost breakdown of
//! a window that scales a slice up after a quiet window.

use slicenet::cost::{sla_revenue, window_cost, CostParams, SlaRamp};
use slicenet::domain::{PlanningDecision, SliceSpec, Topology};

fn main() {
    let slices = SliceSpec::reference_pair(1.0);
    let s = &slices[0];
    println!("slice 0: soft deadline {} s, deadline {} s", s.soft_deadline, s.deadline);
    println!("{:>8} {:>11} {:>11}", "delay", "as_printed", "decreasing");
    for i in 0..=12 {
        let d = 0.01 * i as f64;
        let rev = |ramp| sla_revenue(d, s, &CostParams { sla_ramp: ramp, ..CostParams::default() });
        println!("{d:>8.3} {:>11.3} {:>11.3}", rev(SlaRamp::AsPrinted), rev(SlaRamp::Decreasing));
    }

    let topo = Topology::reference();
    let quiet = PlanningDecision::initial(&topo, 2);
    let busy = PlanningDecision {
        activation: vec![true, true],
        spectrum: vec![vec![4, 3, 3], vec![4, 3, 3]],
        compute: vec![vec![5, 5, 5], vec![3, 3, 3]],
        cloud: vec![3, 2],
    };
    let params = CostParams::default();
    for (name, prev, plan) in [("scale up", &quiet, &busy), ("hold", &busy, &busy), ("scale down", &busy, &quiet)] {
        let c = window_cost(plan, prev, &[0.04, 0.12], &slices, &topo, &params);
        println!(
            "{name:>10}: deployment {:.2} provisioning {:.2} adjustment {:.2} revenue {:.2} total {:.2}",
            c.deployment, c.provisioning, c.adjustment, c.sla_revenue, c.total
        );
    }
}
