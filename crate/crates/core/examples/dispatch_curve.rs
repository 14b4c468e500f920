//! Processing delay of one station as a function of how many tasks are
//! sent to the cloud, next to the closed-form choice.

use slicenet::operation::{dispatch_tasks, DispatchInput};

fn main() {
    for backlog in [0.0, 2e6, 8e6] {
        let p = DispatchInput {
            tasks: 12,
            backlog,
            task_size: 0.6e6,
            intensity: 1000.0,
            edge_vms: 3,
            edge_hz: 10e9,
            cloud_vms: 2,
            cloud_hz: 100e9,
            rtt: 0.15,
        };
        let x = dispatch_tasks(&p);
        println!("backlog {:.0} bits: send {x} of {} to the cloud", backlog, p.tasks);
        for d in 0..=p.tasks {
            let mark = if d == x { " <" } else { "" };
            println!("  x = {d:>2}  total delay {:>8.4} s{mark}", p.objective(d));
        }
    }
}
