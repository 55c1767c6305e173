//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the library's own solvers; only profile evaluation and
//! plain data types are reused.

#![allow(dead_code)]

use platoon::platoon::PlatoonState;
use platoon::profile::{SpeedDropProfile, VelocityProfile};
use rand::Rng;

/// Root of `x + T v_d(x) = rhs` by bisection. The left side is strictly
/// increasing when `M T < 1`.
pub fn bisect_position<P: VelocityProfile>(rhs: f64, profile: &P, t: f64) -> f64 {
    let mut lo = rhs - t * profile.supremum() - 1.0;
    let mut hi = rhs - t * profile.infimum() + 1.0;
    let f = |x: f64| x + t * profile.eval(x) - rhs;
    assert!(
        f(lo) < 0.0 && f(hi) > 0.0,
        "bracket does not straddle the root"
    );
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Target-curve point with leader at `x1`, follower by follower.
pub fn oracle_target<P: VelocityProfile>(
    x1: f64,
    n: usize,
    profile: &P,
    t: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![x1];
    for i in 1..n {
        let prev = x[i - 1];
        x.push(bisect_position(prev, profile, t));
    }
    let y = x.iter().map(|&p| profile.eval(p)).collect();
    (x, y)
}

/// State with prescribed errors: vehicle `i` has velocity error `e1[i]` and,
/// for followers, spacing error `e2[i]` (`e2[0]` is ignored).
pub fn state_from_errors<P: VelocityProfile>(
    x1: f64,
    e1: &[f64],
    e2: &[f64],
    profile: &P,
    t: f64,
) -> PlatoonState {
    let n = e1.len();
    let mut x = vec![x1];
    let mut y = vec![profile.eval(x1) + e1[0]];
    for i in 1..n {
        // x_i + T v_d(x_i) = x_{i-1} - T e1 - e2
        let xi = bisect_position(x[i - 1] - t * e1[i] - e2[i], profile, t);
        x.push(xi);
        y.push(profile.eval(xi) + e1[i]);
    }
    PlatoonState { t: 0.0, x, y }
}

/// `(eps1, eps2)` per vehicle straight from the definitions.
pub fn oracle_errors<P: VelocityProfile>(s: &PlatoonState, profile: &P, t: f64) -> Vec<(f64, f64)> {
    (0..s.x.len())
        .map(|k| {
            let e1 = s.y[k] - profile.eval(s.x[k]);
            let e2 = if k == 0 {
                0.0
            } else {
                s.x[k - 1] - s.x[k] - t * s.y[k]
            };
            (e1, e2)
        })
        .collect()
}

/// Max of every `|eps|` over the platoon, by enumeration.
pub fn oracle_max_error<P: VelocityProfile>(s: &PlatoonState, profile: &P, t: f64) -> f64 {
    let mut m = 0.0f64;
    for (e1, e2) in oracle_errors(s, profile, t) {
        for v in [e1.abs(), e2.abs()] {
            if v > m {
                m = v;
            }
        }
    }
    m
}

/// Speed-drop profile and headway with `M T` drawn from `[0.05, 0.95]`.
pub fn random_profile<R: Rng>(rng: &mut R) -> (SpeedDropProfile, f64) {
    let v0 = rng.gen_range(5.0..40.0);
    let rho = rng.gen_range(0.1..0.9);
    let start = rng.gen_range(-500.0..500.0);
    let t = rng.gen_range(0.3..2.5);
    let mt = rng.gen_range(0.05..0.95);
    let length = v0 * rho * t / mt;
    (
        SpeedDropProfile::new(v0, rho, start, length).expect("valid profile"),
        t,
    )
}

/// Leader position that puts the first vehicles before, inside or after the drop.
pub fn random_leader<R: Rng>(rng: &mut R, p: &SpeedDropProfile, n: usize, t: f64) -> f64 {
    let reach = n as f64 * t * p.v0();
    rng.gen_range(p.drop_start() - 0.5 * reach..p.drop_end() + reach)
}

/// Constant-speed profile expressed as a speed drop far behind the origin.
pub fn flat(speed: f64) -> SpeedDropProfile {
    SpeedDropProfile::new(speed, 0.5, 1e7, 1e3).expect("valid profile")
}
