//! Acceptance suite: one verdict line per criterion.
//!
//! Runs without the libtest harness so the verdict lines are always shown.
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 3 7`.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use platoon::analysis::{
    fit_decay_rate, headway_band, macroscopic, noncollision_threshold, DecayFit, FitWindow,
};
use platoon::controller::Branch;
use platoon::platoon::{distance_to_target, target_point, PlatoonState};
use platoon::profile::{SpeedDropProfile, VelocityProfile};
use platoon::sim::{decay_series, run, run_from, Perturbation, Scenario, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SLACK: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
    /// Failure that reproduces a documented counterexample.
    expected_failure: bool,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            expected_failure: false,
        }
    }
}

fn paper_profile() -> SpeedDropProfile {
    SpeedDropProfile::new(20.0, 0.5, 0.0, 500.0).unwrap()
}

fn end_velocity_error(tr: &Trajectory, p: &SpeedDropProfile) -> f64 {
    let s = &tr.last().state;
    (0..s.x.len())
        .map(|k| (s.y[k] - p.eval(s.x[k])).abs())
        .fold(0.0, f64::max)
}

fn criterion1() -> Verdict {
    let s = Scenario::speed_drop_unperturbed();
    let started = Instant::now();
    let tr = run(&s).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let (lo, hi) = headway_band(&tr, 0.0).expect("vehicles reach the drop");
    let end = end_velocity_error(&tr, &paper_profile());
    let pass = lo >= 0.97 && hi <= 1.05 && end <= 0.1 && elapsed < 60.0;
    Verdict::new(
        pass,
        format!("headway band [{lo:.5}, {hi:.5}] within [0.97, 1.05], end velocity error {end:.4} <= 0.1, runtime {elapsed:.2} s"),
    )
}

/// Largest `|v - v_d(x)|` along one vehicle's recorded trace, with the
/// position where it occurs.
fn trace_deviation(tr: &Trajectory, p: &SpeedDropProfile, vehicle: usize) -> (f64, f64) {
    let k = vehicle - 1;
    tr.samples
        .iter()
        .map(|smp| {
            (
                (smp.state.y[k] - p.eval(smp.state.x[k])).abs(),
                smp.state.x[k],
            )
        })
        .fold((0.0, f64::NAN), |a, b| if b.0 > a.0 { b } else { a })
}

fn criterion2() -> Verdict {
    let p = paper_profile();
    let tr = run(&Scenario::speed_drop_vehicle3_shifted()).unwrap();
    let h = tr.last().headways[99].unwrap();
    let s = &tr.last().state;
    let end = (s.y[99] - p.eval(s.x[99])).abs();
    let (trace, at) = trace_deviation(&tr, &p, 100);
    let pass = tr.collisions.is_empty() && (h - 1.0).abs() <= 1e-2 && trace <= 0.1;
    let (unperturbed, _) =
        trace_deviation(&run(&Scenario::speed_drop_unperturbed()).unwrap(), &p, 100);
    let detail = format!(
        "collisions {}, vehicle 100 final headway {h:.5}, final |v - v_d| {end:.2e}, \
         max |v - v_d| along its trace {trace:.4} at x {at:.1} m (unperturbed platoon: {unperturbed:.4})",
        tr.collisions.len()
    );
    // Entering the drop, each vehicle's predecessor decelerates one headway
    // before the follower's own v_d changes, so the target curve is not
    // invariant at the profile kink. The transient is the same with and
    // without the perturbation and does not depend on the step size.
    let documented = tr.collisions.is_empty()
        && (h - 1.0).abs() <= 1e-2
        && end <= 0.1
        && trace > 0.1
        && at.abs() < 5.0
        && (trace - unperturbed).abs() < 1e-3;
    Verdict {
        pass,
        detail,
        expected_failure: !pass && documented,
    }
}

/// Two vehicles in a constant-speed region with `T = 1`; the follower starts
/// with velocity error `d` and zero spacing error.
fn criterion3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rate: f64 = -1.0;
    let mut rates = Vec::new();
    let mut envelope_ok = true;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..10 {
        let d0 = rng.gen_range(0.1..5.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut s = Scenario::new(2, 1.0, flat(20.0)).unwrap();
        s.x1_start = 0.0;
        s.duration = 15.0;
        s.dt = 1e-3;
        s.record_interval = 0.05;
        s.perturbations.push(Perturbation {
            vehicle: 2,
            dx: -d0,
            dv: d0,
        });
        let tr = run(&s).unwrap();
        let series = decay_series(&tr, 2).unwrap();
        let delta0 = series[0].1;
        assert!((delta0 - d0.abs()).abs() < 1e-12);
        for &(t, d) in &series {
            let bound = delta0 * (-t).exp() * (1.0 + 1e-3);
            worst_ratio = worst_ratio.max(d / (delta0 * (-t).exp()));
            envelope_ok &= d <= bound;
        }
        let rate = match fit_decay_rate(
            &series,
            FitWindow {
                t_min: 0.0,
                t_max: 15.0,
                noise_floor: 1e-10,
            },
        ) {
            DecayFit::Rate { rate, .. } => rate,
            DecayFit::Converged => f64::NAN,
        };
        // NaN also lands here
        if !((rate + 1.0).abs() <= (worst_rate + 1.0).abs()) {
            worst_rate = rate;
        }
        rates.push(rate);
    }
    let rates_ok = rates.iter().all(|r| (-1.02..=-0.98).contains(r));
    Verdict::new(
        rates_ok && envelope_ok,
        format!(
            "10 runs, fitted rates in [-1.02, -0.98]: {rates_ok} (worst {worst_rate:.6}); envelope ratio max {worst_ratio:.6} <= 1.001"
        ),
    )
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

fn criterion4() -> Verdict {
    let p = paper_profile();
    let t = 1.0;
    let threshold = noncollision_threshold(&p, t);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut collisions = 0;
    let mut max_dist: f64 = 0.0;
    let mut min_spacing = f64::INFINITY;
    for k in 0..200 {
        let n = [2, 5, 10][k % 3];
        let x1 = rng.gen_range(-400.0..800.0);
        let anchor = target_point(x1, n, &p, t).unwrap();
        let dir = random_unit(&mut rng, 2 * n);
        let r = threshold * rng.gen_range(0.5..1.0);
        let x: Vec<f64> = (0..n).map(|i| anchor.x[i] + r * dir[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| anchor.y[i] + r * dir[n + i]).collect();
        let start = PlatoonState::new(0.0, x, y).unwrap();
        let dist = distance_to_target(&start, &p, t).unwrap().distance;
        assert!(
            dist <= threshold,
            "sampled state outside the threshold ball"
        );
        max_dist = max_dist.max(dist);
        let mut s = Scenario::new(n, t, p).unwrap();
        s.duration = 60.0;
        let tr = run_from(&s, start).unwrap();
        collisions += tr.collisions.len();
        for smp in &tr.samples {
            for gap in smp.state.spacings() {
                min_spacing = min_spacing.min(gap);
            }
        }
    }
    Verdict::new(
        collisions == 0,
        format!(
            "threshold {threshold:.4} m, 200 runs, max start distance {max_dist:.4}, collisions {collisions}, min spacing {min_spacing:.3} m"
        ),
    )
}

/// Distance to the target curve using only bisection-built curve points:
/// scan leader positions within `radius` of `x1`, then refine by golden section.
fn oracle_distance(s: &PlatoonState, p: &SpeedDropProfile, t: f64, radius: f64) -> f64 {
    let n = s.x.len();
    let dist = |l: f64| {
        let (x, y) = oracle_target(l, n, p, t);
        s.euclidean_distance(&x, &y)
    };
    let cells = 200;
    let h = radius / cells as f64;
    let (mut best_l, mut best) = (s.x[0], dist(s.x[0]));
    for k in -cells..=cells {
        let l = s.x[0] + k as f64 * h;
        let d = dist(l);
        if d < best {
            best = d;
            best_l = l;
        }
    }
    let (mut a, mut b) = (best_l - h, best_l + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if dist(c) < dist(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(dist(0.5 * (a + b)))
}

fn criterion5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut l2_violations, mut l3_violations) = (0, 0);
    let (mut l2_worst, mut l3_worst) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..1000 {
        let (p, t) = random_profile(&mut rng);
        let n = rng.gen_range(2..=10);
        let e_max = rng.gen_range(0.01..=5.0);
        let e1: Vec<f64> = (0..n).map(|_| rng.gen_range(-e_max..=e_max)).collect();
        let e2: Vec<f64> = (0..n).map(|_| rng.gen_range(-e_max..=e_max)).collect();
        let s = state_from_errors(random_leader(&mut rng, &p, n, t), &e1, &e2, &p, t);
        let m = p.lipschitz_constant();
        let e = oracle_max_error(&s, &p, t);
        let (ax, ay) = oracle_target(s.x[0], n, &p, t);
        for i in 1..=n {
            let c: f64 = (2..=i)
                .map(|k| (1.0 - t * m).powi(-((i - k + 1) as i32)))
                .sum();
            if i > 1 {
                let margin = c * (1.0 + t) * e - (s.x[i - 1] - ax[i - 1]).abs();
                l2_worst = l2_worst.min(margin);
                l2_violations += usize::from(margin < -SLACK);
            }
            let margin = (c * m * (1.0 + t) + 1.0) * e - (s.y[i - 1] - ay[i - 1]).abs();
            l2_worst = l2_worst.min(margin);
            l2_violations += usize::from(margin < -SLACK);
        }
    }
    for _ in 0..1000 {
        let (p, t) = random_profile(&mut rng);
        let n = rng.gen_range(2..=10);
        let e_max = rng.gen_range(0.01..=5.0);
        let e1: Vec<f64> = (0..n).map(|_| rng.gen_range(-e_max..=e_max)).collect();
        let e2: Vec<f64> = (0..n).map(|_| rng.gen_range(-e_max..=e_max)).collect();
        let s = state_from_errors(random_leader(&mut rng, &p, n, t), &e1, &e2, &p, t);
        let e = oracle_max_error(&s, &p, t);
        let lib = distance_to_target(&s, &p, t).unwrap().distance;
        // the nearest curve point has its leader within `lib` of x1
        let dist = oracle_distance(&s, &p, t, lib).min(lib);
        let factor = (2.0 + t).max(1.0 + p.lipschitz_constant());
        let margin = factor * dist - e;
        l3_worst = l3_worst.min(margin);
        l3_violations += usize::from(margin < -SLACK);
    }
    Verdict::new(
        l2_violations == 0 && l3_violations == 0,
        format!(
            "1000 states each; lemma 2 violations {l2_violations} (min margin {l2_worst:.3e}), lemma 3 violations {l3_violations} (min margin {l3_worst:.3e})"
        ),
    )
}

fn criterion6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (p, t) = random_profile(&mut rng);
        let n = rng.gen_range(2..=50);
        let x1 = random_leader(&mut rng, &p, n, t);
        let got = target_point(x1, n, &p, t).unwrap();
        let (ox, _) = oracle_target(x1, n, &p, t);
        for k in 0..n {
            worst = worst.max((got.x[k] - ox[k]).abs());
        }
    }
    Verdict::new(
        worst <= 1e-9,
        format!("100 cases, max |fixed point - bisection| {worst:.3e} m"),
    )
}

struct BoundSummary {
    leader_bound: f64,
    violations: usize,
    violating_vehicles: Vec<usize>,
    worst_excess: f64,
    worst: Option<(usize, Branch, f64, f64, f64)>,
    max_rule_violations: usize,
}

/// Static bounds from the initial errors, recomputed from the definitions.
fn control_bound_summary(s: &Scenario) -> BoundSummary {
    let p = paper_profile();
    let tr = run(s).unwrap();
    let t = s.headway();
    let sup_v = p.supremum();
    let sup_dv = p.lipschitz_constant();
    let delta: Vec<f64> = oracle_errors(&tr.samples[0].state, &p, t)
        .into_iter()
        .map(|(a, b)| a.abs().max(b.abs()))
        .collect();
    let bound = |k: usize, b: Branch| {
        let prev = if k == 0 { 0.0 } else { delta[k - 1] };
        match b {
            Branch::Velocity => (sup_v + delta[k]) * sup_dv + delta[k],
            Branch::Spacing => (2.0 * sup_v + 2.0 * delta[k] + prev) / t,
        }
    };
    let mut out = BoundSummary {
        leader_bound: bound(0, Branch::Velocity),
        violations: 0,
        violating_vehicles: Vec::new(),
        worst_excess: 0.0,
        worst: None,
        max_rule_violations: 0,
    };
    for smp in &tr.samples {
        for (k, d) in smp.decisions.iter().enumerate() {
            let b = bound(k, d.branch);
            let excess = d.u.abs() - b;
            if excess > SLACK {
                out.violations += 1;
                if !out.violating_vehicles.contains(&(k + 1)) {
                    out.violating_vehicles.push(k + 1);
                }
                if excess > out.worst_excess {
                    out.worst_excess = excess;
                    out.worst = Some((k + 1, d.branch, smp.t(), d.u.abs(), b));
                }
            }
            let either = bound(k, Branch::Velocity).max(bound(k, Branch::Spacing));
            out.max_rule_violations += usize::from(d.u.abs() > either + SLACK);
        }
    }
    out
}

fn criterion7() -> Verdict {
    let s1 = control_bound_summary(&Scenario::speed_drop_unperturbed());
    let s2 = control_bound_summary(&Scenario::speed_drop_vehicle3_shifted());
    let leader_ok = (s1.leader_bound - 0.4).abs() < 1e-12;
    let pass = leader_ok && s1.violations == 0 && s2.violations == 0;
    let worst = s2.worst.map_or("none".to_string(), |(i, b, t, u, bound)| {
        format!(
            "vehicle {i} branch {} t {t:.1}: |u| {u:.4} > {bound:.4}",
            b.number()
        )
    });
    let detail = format!(
        "leader bound {:.4}; scenario 1 violations {}; scenario 2 violations {} at vehicles {:?}, worst {worst}; \
         scenario 2 against max(bound1, bound2): {} violations",
        s1.leader_bound, s1.violations, s2.violations, s2.violating_vehicles, s2.max_rule_violations
    );
    // The per-vehicle bound assumes delta_i(t) <= delta_i(0). Vehicle 3's
    // shift leaves vehicles 5 and beyond with delta = 0, yet errors reach
    // them through their predecessors, so branch 1 exceeds its bound there.
    let documented = leader_ok
        && s1.violations == 0
        && s2.max_rule_violations == 0
        && s2.violations > 0
        && s2.violating_vehicles.iter().all(|&i| i >= 5)
        && matches!(s2.worst, Some((_, Branch::Velocity, ..)));
    Verdict {
        pass,
        detail,
        expected_failure: !pass && documented,
    }
}

/// Leader alone inside a long ramp: smooth, switch-free dynamics.
fn criterion8() -> Verdict {
    let p = SpeedDropProfile::new(20.0, 0.5, 0.0, 5000.0).unwrap();
    let end = |dt: f64| {
        let mut s = Scenario::new(1, 1.0, p).unwrap();
        s.x1_start = 1000.0;
        // short enough that the transient has not yet decayed
        s.duration = 4.0;
        s.record_interval = 4.0;
        s.dt = dt;
        s.perturbations.push(Perturbation {
            vehicle: 1,
            dx: 0.0,
            dv: 3.0,
        });
        let tr = run(&s).unwrap();
        assert!(tr
            .samples
            .iter()
            .all(|smp| smp.state.x[0] > 0.0 && smp.state.x[0] < 5000.0));
        let st = tr.last().state.clone();
        (st.x[0], st.y[0])
    };
    let reference = end(1e-3);
    let err = |dt: f64| {
        let (x, y) = end(dt);
        ((x - reference.0).powi(2) + (y - reference.1).powi(2)).sqrt()
    };
    let (e1, e2, e3) = (err(0.4), err(0.2), err(0.1));
    let (r1, r2) = (e1 / e2, e2 / e3);
    Verdict::new(
        r1 >= 12.0 && r2 >= 12.0,
        format!("end-state error {e1:.3e} / {e2:.3e} / {e3:.3e} at dt 0.4 / 0.2 / 0.1; ratios {r1:.2}, {r2:.2} >= 12"),
    )
}

fn criterion9() -> Verdict {
    let p = paper_profile();
    let before = macroscopic(&p, 1.0, -100.0).unwrap();
    let after = macroscopic(&p, 1.0, 600.0).unwrap();
    let pass = before.q == 1.0
        && after.q == 1.0
        && (before.k - 1.0 / 20.0).abs() < 1e-15
        && (after.k - 1.0 / 10.0).abs() < 1e-15;
    Verdict::new(
        pass,
        format!(
            "q = {} / {} veh/s, k = {} (before drop) / {} (after drop) veh/m",
            before.q, after.q, before.k, after.k
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Verdict); 9] = [
        (1, "scenario 1 headway band and end velocity", criterion1),
        (2, "scenario 2 perturbation recovery", criterion2),
        (3, "exponential error decay", criterion3),
        (4, "non-collision campaign", criterion4),
        (5, "lemma 2 and lemma 3 campaigns", criterion5),
        (6, "target curve against bisection", criterion6),
        (7, "bounded control", criterion7),
        (8, "integrator order", criterion8),
        (9, "macroscopic flow and density", criterion9),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let (mut passed, mut failed, mut unexpected) = (0, 0, 0);
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let v = check();
        let tag = match (v.pass, v.expected_failure) {
            (true, _) => "PASS",
            (false, true) => "FAIL (reproduces documented counterexample)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {id} [{name}]: {tag}: {} ({:.1} s)",
            v.detail,
            started.elapsed().as_secs_f64()
        );
        if v.pass {
            passed += 1;
        } else {
            failed += 1;
            unexpected += usize::from(!v.expected_failure);
        }
    }
    println!("acceptance: {passed} passed, {failed} failed, {unexpected} unexpected");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
