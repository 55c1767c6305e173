//! The two reference runs: a 100-vehicle platoon through a 20 -> 10 m/s drop,
//! unperturbed and with vehicle 3 shifted 10 m forward.
//!
//! Writes the full artifact set (trajectory, report, plot CSVs) under
//! `$PLATOON_OUT` (default `platoon-out/`).
//!
//!     cargo run --release --example speed_drop

use platoon::analysis::headway_band;
use platoon::cli::{execute, output_base};
use platoon::sim::{run, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = output_base(None).join("examples");
    for (name, scenario) in [
        ("unperturbed", Scenario::speed_drop_unperturbed()),
        ("vehicle3_shifted", Scenario::speed_drop_vehicle3_shifted()),
    ] {
        let out = execute(&scenario, &base.join(name), None)?;
        let r = &out.report;
        println!("{name}");
        match r.headway_band {
            Some((lo, hi)) => println!("  headway band after drop entry: [{lo:.4}, {hi:.4}] s"),
            None => println!("  no vehicle reached the drop"),
        }
        println!("  collisions: {}", r.collisions);
        println!(
            "  worst end-of-run velocity error: {:.4} m/s",
            r.end_velocity_error
        );
        println!(
            "  checks: {}",
            if r.all_pass() {
                "all pass"
            } else {
                "violations, see report"
            }
        );
        for c in r.failed_checks() {
            let v = c.vehicle.map_or("-".to_string(), |v| v.to_string());
            println!("    {} vehicle {v}: {:.4} > {:.4}", c.id, c.lhs, c.rhs);
        }
        println!("  artifacts: {}", out.artifacts.dir.display());
    }

    // the last vehicle's headway settles back to T
    let tr = run(&Scenario::speed_drop_vehicle3_shifted())?;
    let last = tr.last();
    println!(
        "vehicle 100 at t = {}: headway {:.5} s",
        last.t(),
        last.headways[99].unwrap()
    );
    let (lo, hi) = headway_band(&tr, 0.0).unwrap();
    println!("perturbed band [{lo:.4}, {hi:.4}]");
    Ok(())
}
