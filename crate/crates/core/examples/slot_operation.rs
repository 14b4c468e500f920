//! One operation slot on the reference network: who is served where, how
//! each station splits its spectrum, how many tasks go to the cloud, and
//! the resulting per-slice delay.

use slicenet::domain::{PlanningDecision, QueueState, SliceSpec, Topology};
use slicenet::operation::{decide_slot, route_slice, slot_delay, ComputeParams, OperationContext, RadioParams};
use slicenet::rng::rng_for;
use slicenet::traffic::{sample_slot, DensityMap, TrafficModel};

fn main() -> slicenet::Result<()> {
    let topo = Topology::reference();
    let slices = SliceSpec::reference_pair(2.0);
    let ctx = OperationContext {
        topo: &topo,
        slices: &slices,
        link: RadioParams::default().link_budget()?,
        compute: ComputeParams::default(),
    };

    // Station 1 on, station 2 off.
    let plan = PlanningDecision {
        activation: vec![true, false],
        spectrum: vec![vec![3, 4, 0], vec![3, 4, 0]],
        compute: vec![vec![4, 5, 0], vec![2, 3, 0]],
        cloud: vec![2, 2],
    };
    let mut rng = rng_for(3, &[]);
    let density = DensityMap::uniform(0, topo.num_regions(), 0.8);
    let obs = sample_slot(0, &density, &topo, &slices, &TrafficModel::default(), &mut rng);
    let queues = QueueState::zeros(slices.len(), topo.num_stations());

    let decision = decide_slot(&obs, &plan, &queues, &ctx)?;
    let report = slot_delay(&obs, &plan, &decision, &queues, &ctx)?;
    println!("{} vehicles in the slot", obs.num_vehicles());
    for (k, s) in report.slices.iter().enumerate() {
        let routing = route_slice(&obs, &plan, &topo, k);
        println!("slice {k}: tasks per serving station {:?}, to cloud {:?}", routing.tasks, decision.dispatch[k]);
        for (j, members) in routing.members.iter().enumerate().filter(|(_, m)| !m.is_empty()) {
            let y: Vec<String> = members.iter().map(|&n| format!("{:.3}", decision.spectrum_fractions[k][n])).collect();
            println!("  station {j} spectrum shares [{}]", y.join(", "));
        }
        println!(
            "  delay {:.4} s = offload {:.4} + edge {:.4} + cloud {:.4}",
            s.total, s.offload, s.edge, s.cloud
        );
    }
    Ok(())
}
