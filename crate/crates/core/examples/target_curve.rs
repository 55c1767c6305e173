//! The target curve: follower positions by fixed-point iteration, the
//! contraction of its steps, and the distance from a perturbed state.
//!
//!     cargo run --release --example target_curve

use platoon::platoon::{distance_to_target, solve_follower, target_point};
use platoon::profile::{SpeedDropProfile, VelocityProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SpeedDropProfile::new(20.0, 0.5, 0.0, 500.0)?;
    let t = 1.0;

    let q = target_point(450.0, 6, &p, t)?;
    println!("target point with leader at 450 m:");
    for (i, (x, y)) in q.x.iter().zip(&q.y).enumerate() {
        println!("  vehicle {}: x {x:10.4} m  v {y:.4} m/s", i + 1);
    }

    // inside the ramp each step shrinks by T M = 0.02
    let solve = solve_follower(300.0, &p, t)?;
    println!("follower of 300 m: {} iterations", solve.steps.len());
    for w in solve.steps.windows(2) {
        println!(
            "  step {:.3e} -> {:.3e} (ratio {:.4})",
            w[0],
            w[1],
            w[1] / w[0]
        );
    }

    let mut state = q.into_state(0.0);
    state.x[2] += 1.0;
    state.y[4] -= 0.5;
    let d = distance_to_target(&state, &p, t)?;
    println!(
        "perturbed state: distance {:.6} to the curve point with leader at {:.6} m",
        d.distance, d.leader_param
    );
    println!("contraction factor T M = {}", t * p.lipschitz_constant());
    Ok(())
}
