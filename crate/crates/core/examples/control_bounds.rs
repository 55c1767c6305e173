//! Static control bounds from the initial errors against the recorded
//! accelerations. With vehicle 3 shifted, vehicles 5 and 6 start with zero
//! error, yet errors reach them through their predecessors and their
//! velocity-branch bound is exceeded.
//!
//!     cargo run --release --example control_bounds

use platoon::analysis::check_control_bounds;
use platoon::controller::control_bound;
use platoon::sim::{run, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, s) in [
        ("unperturbed", Scenario::speed_drop_unperturbed()),
        ("vehicle 3 shifted", Scenario::speed_drop_vehicle3_shifted()),
    ] {
        let tr = run(&s)?;
        let b = control_bound(&tr.samples[0].state, 1, &s.profile, &s.controller)?;
        println!(
            "{name}: leader bounds {:.4} / {:.4} m/s^2",
            b.velocity_branch, b.spacing_branch
        );
        let checks = check_control_bounds(&tr, &s.profile, &s.controller)?;
        for c in checks
            .iter()
            .filter(|c| !c.pass() || c.vehicle.is_some_and(|v| v <= 4))
        {
            println!(
                "  vehicle {:3} {}: max |u| {:.4} vs bound {:.4} at t {:.1} -> {}",
                c.vehicle.unwrap(),
                c.id,
                c.lhs,
                c.rhs,
                c.t.unwrap(),
                if c.pass() { "ok" } else { "exceeded" }
            );
        }
    }
    Ok(())
}
