//! Equilibrium flow and density along the speed drop: flow stays at 1/T
//! while density doubles as the speed halves.
//!
//!     cargo run --release --example macroscopic

use platoon::analysis::macroscopic;
use platoon::profile::{SpeedDropProfile, VelocityProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SpeedDropProfile::new(20.0, 0.5, 0.0, 500.0)?;
    for t in [1.0, 1.5] {
        println!("T = {t} s");
        for l in [-100.0, 0.0, 125.0, 250.0, 375.0, 500.0, 600.0] {
            let m = macroscopic(&p, t, l)?;
            println!(
                "  l {l:6.1} m: v_d {:5.2} m/s  q {:.4} veh/s  k {:.5} veh/m",
                p.eval(l),
                m.q,
                m.k
            );
        }
    }
    Ok(())
}
