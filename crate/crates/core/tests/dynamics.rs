//! Closed-loop decay behaviour in a constant-speed region with `T = 1`.

mod common;

use common::flat;
use platoon::analysis::{fit_decay_rate, DecayFit, FitWindow};
use platoon::controller::{Branch, ControllerParams, ErrorDynamics};
use platoon::sim::{decay_series, run, Integrator, Perturbation, Scenario};

fn pair(dx: f64, dv: f64) -> Scenario {
    let mut s = Scenario::new(2, 1.0, flat(20.0)).unwrap();
    s.x1_start = 0.0;
    s.duration = 20.0;
    s.dt = 1e-3;
    s.record_interval = 0.05;
    s.perturbations.push(Perturbation { vehicle: 2, dx, dv });
    s
}

fn rate(s: &Scenario, vehicle: usize, t_min: f64) -> f64 {
    let tr = run(s).unwrap();
    let series = decay_series(&tr, vehicle).unwrap();
    match fit_decay_rate(
        &series,
        FitWindow {
            t_min,
            t_max: 15.0,
            ..FitWindow::default()
        },
    ) {
        DecayFit::Rate { rate, .. } => rate,
        DecayFit::Converged => panic!("no decay to fit"),
    }
}

#[test]
fn velocity_error_on_spacing_target_decays_exactly() {
    // dx = -T dv keeps eps2 = 0 while eps1 = dv
    for d in [0.1, -0.7, 2.5, 5.0] {
        let s = pair(-d, d);
        let tr = run(&s).unwrap();
        for smp in &tr.samples {
            let dec = smp.decisions[1];
            assert_eq!(dec.branch, Branch::Velocity);
            let want = d.abs() * (-smp.t()).exp();
            assert!(
                (dec.eps.delta() - want).abs() <= 1e-10 * d.abs(),
                "t {}",
                smp.t()
            );
            assert!(dec.eps.eps2.abs() <= 1e-10);
        }
    }
}

#[test]
fn pure_spacing_error_slides_at_half_rate() {
    // eps1 = 0, eps2 = -0.5: branch 2 drives eps1 up to |eps2|, after which
    // the state slides on |eps1| = |eps2| and delta decays like e^{-t/2}
    let s = pair(0.5, 0.0);
    let r = rate(&s, 2, 2.0);
    assert!((r + 0.5).abs() < 0.02, "sliding rate {r}");
    let tr = run(&s).unwrap();
    let switches = tr
        .samples
        .windows(2)
        .filter(|w| w[0].decisions[1].branch != w[1].decisions[1].branch)
        .count();
    assert!(switches >= 2, "expected repeated switching, saw {switches}");
}

#[test]
fn follower_errors_are_excited_by_predecessor() {
    let mut s = Scenario::new(3, 1.0, flat(20.0)).unwrap();
    s.x1_start = 0.0;
    s.duration = 10.0;
    // a velocity offset leaves vehicle 3's errors at zero initially
    s.perturbations.push(Perturbation {
        vehicle: 2,
        dx: 0.0,
        dv: 0.5,
    });
    let tr = run(&s).unwrap();
    let third = decay_series(&tr, 3).unwrap();
    assert_eq!(third[0].1, 0.0);
    let peak = third.iter().map(|p| p.1).fold(0.0, f64::max);
    assert!(peak > 0.05, "vehicle 3 peak error {peak}");
}

#[test]
fn rk45_reproduces_exact_decay() {
    let mut s = pair(-1.0, 1.0);
    s.integrator = Integrator::Rk45 {
        rtol: 1e-10,
        atol: 1e-12,
    };
    let tr = run(&s).unwrap();
    for smp in &tr.samples {
        let want = (-smp.t()).exp();
        assert!((smp.decisions[1].eps.delta() - want).abs() <= 1e-8);
    }
}

#[test]
fn faster_error_dynamics_hook() {
    // leader alone: eps1' = g(eps1) exactly
    let mut s = pair(0.0, 0.0);
    s.n = 1;
    s.perturbations = vec![Perturbation {
        vehicle: 1,
        dx: 0.0,
        dv: 1.0,
    }];
    let g = ErrorDynamics::custom(|e| -3.0 * e, |e| -3.0 * e);
    s.controller = ControllerParams::new(1.0)
        .unwrap()
        .with_error_dynamics(g)
        .unwrap();
    let r = rate(&s, 1, 0.5);
    assert!((r + 3.0).abs() < 0.01, "rate {r}");
}
