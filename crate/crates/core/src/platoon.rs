//! Platoon states, the per-vehicle error terms, and the target curve.
//!
//! Vehicles are numbered from 1 (the leader) to `n`, so vehicle `i` follows
//! vehicle `i - 1`. The target curve is the one-parameter family of states in
//! which every vehicle drives at `v_d` of its own position and every spacing
//! equals `T` times the follower's speed; it is parameterized here by the
//! leader position.

use crate::error::{PlatoonError, Result};
use crate::profile::VelocityProfile;

/// Positions and velocities of `n` vehicles at time `t`. Index 0 is the leader.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonState {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PlatoonState {
    pub fn new(t: f64, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(PlatoonError::InvalidParameter(format!(
                "state needs n >= 1 matching positions/velocities, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if let Some(k) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(PlatoonError::NumericBlowUp {
                t,
                vehicle: k % x.len() + 1,
            });
        }
        Ok(Self { t, x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn check_index(&self, vehicle: usize) -> Result<usize> {
        if vehicle == 0 || vehicle > self.len() {
            Err(PlatoonError::IndexOutOfRange {
                index: vehicle,
                n: self.len(),
            })
        } else {
            Ok(vehicle - 1)
        }
    }

    /// `x_{i-1} - x_i` for `i = 2..=n`.
    pub fn spacings(&self) -> Vec<f64> {
        self.x.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// Time headway `(x_{i-1} - x_i) / y_i` of follower `vehicle`.
    ///
    /// `Ok(None)` for the leader and for non-positive follower speed.
    pub fn headway(&self, vehicle: usize) -> Result<Option<f64>> {
        let k = self.check_index(vehicle)?;
        if k == 0 || self.y[k] <= 0.0 {
            return Ok(None);
        }
        Ok(Some((self.x[k - 1] - self.x[k]) / self.y[k]))
    }

    /// Euclidean distance in the `2n`-dimensional state space (mixed units).
    pub fn euclidean_distance(&self, other_x: &[f64], other_y: &[f64]) -> f64 {
        self.x
            .iter()
            .zip(other_x)
            .chain(self.y.iter().zip(other_y))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Speed error `eps1 = y_i - v_d(x_i)` and spacing error
/// `eps2 = x_{i-1} - x_i - T y_i` for one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorPair {
    pub eps1: f64,
    pub eps2: f64,
}

impl ErrorPair {
    /// `max(|eps1|, |eps2|)`; the two terms are compared in raw numbers.
    pub fn delta(&self) -> f64 {
        self.eps1.abs().max(self.eps2.abs())
    }

    /// `max(|eps1|, w |eps2|)` for a spacing weight `w`.
    pub fn weighted_delta(&self, spacing_weight: f64) -> f64 {
        self.eps1.abs().max(spacing_weight * self.eps2.abs())
    }
}

/// Error terms of `vehicle` (1-based). The leader has no predecessor, so its
/// spacing error is 0.
pub fn errors<P: VelocityProfile>(
    state: &PlatoonState,
    vehicle: usize,
    profile: &P,
    headway: f64,
) -> Result<ErrorPair> {
    let k = state.check_index(vehicle)?;
    Ok(errors_at(state, k, profile, headway))
}

/// Same as [`errors`] with a 0-based index, no range check.
pub(crate) fn errors_at<P: VelocityProfile>(
    state: &PlatoonState,
    k: usize,
    profile: &P,
    headway: f64,
) -> ErrorPair {
    let eps1 = state.y[k] - profile.eval(state.x[k]);
    let eps2 = if k == 0 {
        0.0
    } else {
        state.x[k - 1] - state.x[k] - headway * state.y[k]
    };
    ErrorPair { eps1, eps2 }
}

/// Error pairs of every vehicle, leader first.
pub fn all_errors<P: VelocityProfile>(
    state: &PlatoonState,
    profile: &P,
    headway: f64,
) -> Vec<ErrorPair> {
    (0..state.len())
        .map(|k| errors_at(state, k, profile, headway))
        .collect()
}

/// The max-error function `E`: the largest of the `2n - 1` error magnitudes.
/// Its zero level set is the target curve.
pub fn max_error<P: VelocityProfile>(state: &PlatoonState, profile: &P, headway: f64) -> f64 {
    all_errors(state, profile, headway)
        .iter()
        .map(ErrorPair::delta)
        .fold(0.0, f64::max)
}

/// A point of the target curve, parameterized by its leader position.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetCurvePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TargetCurvePoint {
    pub fn leader_position(&self) -> f64 {
        self.x[0]
    }

    pub fn into_state(self, t: f64) -> PlatoonState {
        PlatoonState {
            t,
            x: self.x,
            y: self.y,
        }
    }
}

/// Default iteration cap for the follower fixed-point solve.
pub const FIXED_POINT_MAX_ITER: usize = 200;
/// Absolute step tolerance (m) for the follower fixed-point solve.
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// Result of solving `x = x_prev - T v_d(x)` for one follower.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerSolve {
    pub position: f64,
    /// `|x_{k+1} - x_k|` for every iterate.
    pub steps: Vec<f64>,
}

/// Solves `x = predecessor - T v_d(x)` by fixed-point iteration starting at
/// `predecessor - T v_d(predecessor)`.
///
/// The map is a contraction with factor `T M < 1`. The iteration cap is 200
/// unless the a-priori contraction estimate needs more steps to reach the
/// tolerance, in which case it is raised to that estimate.
pub fn solve_follower<P: VelocityProfile>(
    predecessor: f64,
    profile: &P,
    headway: f64,
) -> Result<FollowerSolve> {
    let q = profile.lipschitz_constant() * headway;
    if q >= 1.0 {
        return Err(PlatoonError::Hypothesis(
            crate::error::Hypothesis::LipschitzBound {
                lipschitz: profile.lipschitz_constant(),
                headway,
            },
        ));
    }
    let map = |x: f64| predecessor - headway * profile.eval(x);
    let mut x = map(predecessor);
    let mut steps = Vec::new();
    let mut cap = FIXED_POINT_MAX_ITER;
    for iter in 0.. {
        let next = map(x);
        let step = (next - x).abs();
        steps.push(step);
        x = next;
        let floor = 4.0 * f64::EPSILON * x.abs().max(predecessor.abs());
        if step < FIXED_POINT_TOL || step <= floor {
            return Ok(FollowerSolve { position: x, steps });
        }
        if iter == 0 && q > 0.0 {
            let needed = ((FIXED_POINT_TOL / step).ln() / q.ln()).ceil() + 4.0;
            if needed.is_finite() && needed > cap as f64 {
                cap = (needed as usize).min(1_000_000);
            }
        }
        if iter + 1 >= cap {
            return Err(PlatoonError::NonConvergence {
                what: "target-curve fixed-point iteration",
                iterations: cap,
                last_step: step,
            });
        }
    }
    unreachable!()
}

/// The unique target-curve point with leader at `leader_position`.
pub fn target_point<P: VelocityProfile>(
    leader_position: f64,
    n: usize,
    profile: &P,
    headway: f64,
) -> Result<TargetCurvePoint> {
    if n == 0 {
        return Err(PlatoonError::InvalidParameter(
            "platoon needs at least one vehicle".into(),
        ));
    }
    let mut x = Vec::with_capacity(n);
    x.push(leader_position);
    for k in 1..n {
        let solved = solve_follower(x[k - 1], profile, headway)?;
        x.push(solved.position);
    }
    let y = x.iter().map(|&xi| profile.eval(xi)).collect();
    Ok(TargetCurvePoint { x, y })
}

/// Closest target-curve point to a state, with its Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistance {
    pub distance: f64,
    /// Leader position of the minimizing target-curve point.
    pub leader_param: f64,
    pub nearest: TargetCurvePoint,
}

const GOLDEN_TOL: f64 = 1e-9;
/// Grid cells per side of the scan window; wider windows get a coarser grid.
const MAX_GRID_CELLS: usize = 20_000;

/// Euclidean distance from `state` to the target curve.
///
/// Scans leader positions on a grid of step `T inf v_d / 4` (finer when the
/// window is small, coarser past 20 000 cells per side), then refines the
/// best grid cell by golden-section search to `1e-9` m. The window is
/// `x_1 +- min(n T sup v_d + 2E, d_0)`, where `d_0`
/// is the distance to the curve point anchored at the state's own leader
/// position: any closer point has its leader within `d_0` of `x_1`.
pub fn distance_to_target<P: VelocityProfile>(
    state: &PlatoonState,
    profile: &P,
    headway: f64,
) -> Result<TargetDistance> {
    let n = state.len();
    let x1 = state.x[0];
    let dist_at = |s: f64| -> Result<(f64, TargetCurvePoint)> {
        let p = target_point(s, n, profile, headway)?;
        Ok((state.euclidean_distance(&p.x, &p.y), p))
    };

    let (d0, p0) = dist_at(x1)?;
    let mut best = TargetDistance {
        distance: d0,
        leader_param: x1,
        nearest: p0,
    };
    if d0 == 0.0 {
        return Ok(best);
    }

    let e = max_error(state, profile, headway);
    let nominal = n as f64 * headway * profile.supremum() + 2.0 * e;
    let half_width = nominal.min(d0);
    let coarse = headway * profile.infimum() / 4.0;
    let h = coarse
        .min(half_width / 32.0)
        .max(half_width / MAX_GRID_CELLS as f64)
        .max(f64::EPSILON * x1.abs().max(1.0));
    let cells = (half_width / h).ceil() as i64;

    for k in -cells..=cells {
        if k == 0 {
            continue;
        }
        let s = x1 + k as f64 * h;
        let (d, p) = dist_at(s)?;
        if d < best.distance {
            best = TargetDistance {
                distance: d,
                leader_param: s,
                nearest: p,
            };
        }
    }

    let (mut a, mut b) = (best.leader_param - h, best.leader_param + h);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = dist_at(c)?.0;
    let mut fd = dist_at(d)?.0;
    let mut iterations = 0;
    while (b - a).abs() > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = dist_at(c)?.0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = dist_at(d)?.0;
        }
        iterations += 1;
        if iterations > 500 {
            return Err(PlatoonError::NonConvergence {
                what: "golden-section distance refinement",
                iterations,
                last_step: b - a,
            });
        }
        // bracket can no longer shrink in floating point
        if c >= d {
            break;
        }
    }
    let s = 0.5 * (a + b);
    let (d, p) = dist_at(s)?;
    if d < best.distance {
        best = TargetDistance {
            distance: d,
            leader_param: s,
            nearest: p,
        };
    }
    Ok(best)
}
