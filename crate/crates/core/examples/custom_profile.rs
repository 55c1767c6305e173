//! Beyond the reference setup: a piecewise-linear profile with two drops and
//! a recovery, faster error dynamics through the feedback hook, and the
//! hypothesis check rejecting a profile that is too steep for the headway.
//!
//!     cargo run --release --example custom_profile

use platoon::analysis::{analyze, AnalysisOptions};
use platoon::controller::{ControllerParams, ErrorDynamics, TiePolicy};
use platoon::profile::{PiecewiseLinearProfile, SpeedDropProfile, VelocityProfile};
use platoon::sim::{run, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = PiecewiseLinearProfile::new(
        vec![0.0, 400.0, 800.0, 1200.0, 1600.0],
        vec![25.0, 15.0, 15.0, 8.0, 18.0],
    )?;
    let c = profile.validate(1.2)?;
    println!(
        "M = {:.4}, inf = {}, sup = {}, T M = {:.3}",
        c.lipschitz,
        c.infimum,
        c.supremum,
        c.contraction()
    );

    let mut s = Scenario::new(20, 1.2, SpeedDropProfile::new(25.0, 0.5, 0.0, 400.0)?)?;
    s.profile = profile.into();
    s.x1_start = -300.0;
    s.duration = 300.0;
    for (label, dynamics) in [
        ("g(e) = -e", ErrorDynamics::Exponential),
        (
            "g(e) = -2e",
            ErrorDynamics::custom(|e| -2.0 * e, |e| -2.0 * e),
        ),
    ] {
        s.controller = ControllerParams::new(1.2)?
            .with_error_dynamics(dynamics)?
            .with_tie_policy(TiePolicy::Velocity);
        let tr = run(&s)?;
        let r = analyze(&s, &tr, AnalysisOptions::default())?;
        let (lo, hi) = r.headway_band.unwrap();
        println!(
            "{label}: headway band [{lo:.4}, {hi:.4}], collisions {}, end velocity error {:.2e}",
            r.collisions, r.end_velocity_error
        );
    }

    let steep = SpeedDropProfile::new(20.0, 0.5, 0.0, 8.0)?;
    match steep.validate(1.0) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("20 -> 10 m/s over 8 m with T = 1: {e}"),
    }
    Ok(())
}
