//! Error decay of a follower behind a steady leader (T = 1, constant v_d).
//!
//! A pure velocity error with zero spacing error stays on the velocity
//! branch and decays as e^{-t}. A pure spacing error drives the state onto
//! the switching surface |eps1| = |eps2|, where it slides and decays at about
//! half that rate.
//!
//!     cargo run --release --example error_decay

use platoon::analysis::{fit_decay_rate, DecayFit, FitWindow};
use platoon::profile::SpeedDropProfile;
use platoon::sim::{decay_series, run, Perturbation, Scenario};

fn follower(dx: f64, dv: f64) -> Scenario {
    // drop placed far ahead: the whole run sees v_d = 20
    let flat = SpeedDropProfile::new(20.0, 0.5, 1e7, 1e3).unwrap();
    let mut s = Scenario::new(2, 1.0, flat).unwrap();
    s.x1_start = 0.0;
    s.duration = 15.0;
    s.dt = 1e-3;
    s.record_interval = 0.05;
    s.perturbations.push(Perturbation { vehicle: 2, dx, dv });
    s
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (label, s, t_min) in [
        (
            "velocity error 2 m/s, spacing on target",
            follower(-2.0, 2.0),
            0.0,
        ),
        ("spacing error 2 m", follower(2.0, 0.0), 2.0),
    ] {
        let tr = run(&s)?;
        let series = decay_series(&tr, 2)?;
        let fit = fit_decay_rate(
            &series,
            FitWindow {
                t_min,
                t_max: 15.0,
                ..FitWindow::default()
            },
        );
        println!("{label}");
        for &(t, d) in series.iter().step_by(40).take(6) {
            println!(
                "  t {t:5.1}  delta {d:.6e}  e^-t bound {:.6e}",
                series[0].1 * (-t).exp()
            );
        }
        match fit {
            DecayFit::Rate {
                rate,
                residual,
                points,
                ..
            } => {
                println!(
                    "  fitted rate {rate:.4} 1/s over {points} samples (residual {residual:.2e})"
                )
            }
            DecayFit::Converged => println!("  already at the noise floor"),
        }
    }
    Ok(())
}
