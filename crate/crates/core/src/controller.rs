//! The switched state feedback.
//!
//! Each vehicle compares its speed error against its spacing error and drives
//! the larger one to zero: branch 1 imposes `d/dt eps1 = g1(eps1)`, branch 2
//! imposes `d/dt eps2 = g2(eps2)`. The default error dynamics are
//! `g(e) = -e`, which gives
//!
//! ```text
//! branch 1: u = y v_d'(x) - y + v_d(x)
//! branch 2: u = (x_prev - x - T y + y_prev - y) / T
//! ```

use std::fmt;
use std::sync::Arc;

use crate::error::{PlatoonError, Result};
use crate::platoon::{errors_at, ErrorPair, PlatoonState};
use crate::profile::VelocityProfile;

/// Which feedback branch is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Speed tracking, `|eps1| >= |eps2|`.
    Velocity,
    /// Spacing tracking, `|eps1| < |eps2|`.
    Spacing,
}

impl Branch {
    /// 1 or 2, as written in trajectory files.
    pub fn number(self) -> u8 {
        match self {
            Branch::Velocity => 1,
            Branch::Spacing => 2,
        }
    }
}

/// Branch chosen when `|eps1| == |eps2|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    #[default]
    Velocity,
    Spacing,
}

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Error dynamics imposed on the active error term.
#[derive(Clone, Default)]
pub enum ErrorDynamics {
    /// `g(e) = -e` for both branches.
    #[default]
    Exponential,
    /// User-supplied `g1` (speed error) and `g2` (spacing error). Each must
    /// make `e' = g(e)` globally asymptotically stable at the origin.
    Custom {
        velocity: ScalarMap,
        spacing: ScalarMap,
    },
}

impl fmt::Debug for ErrorDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorDynamics::Exponential => f.write_str("Exponential"),
            ErrorDynamics::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl PartialEq for ErrorDynamics {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ErrorDynamics::Exponential, ErrorDynamics::Exponential) => true,
            (
                ErrorDynamics::Custom {
                    velocity: a,
                    spacing: b,
                },
                ErrorDynamics::Custom {
                    velocity: c,
                    spacing: d,
                },
            ) => Arc::ptr_eq(a, c) && Arc::ptr_eq(b, d),
            _ => false,
        }
    }
}

impl ErrorDynamics {
    pub fn custom(
        velocity: impl Fn(f64) -> f64 + Send + Sync + 'static,
        spacing: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ErrorDynamics::Custom {
            velocity: Arc::new(velocity),
            spacing: Arc::new(spacing),
        }
    }

    #[inline]
    pub fn velocity(&self, e: f64) -> f64 {
        match self {
            ErrorDynamics::Exponential => -e,
            ErrorDynamics::Custom { velocity, .. } => velocity(e),
        }
    }

    #[inline]
    pub fn spacing(&self, e: f64) -> f64 {
        match self {
            ErrorDynamics::Exponential => -e,
            ErrorDynamics::Custom { spacing, .. } => spacing(e),
        }
    }

    /// Sampled check that `g(0) = 0` and `sign g(e) = -sign e`.
    pub fn validate(&self) -> Result<()> {
        let samples = (-60..=60)
            .filter(|k| *k != 0)
            .map(|k: i32| f64::from(k.signum()) * 10f64.powf(f64::from(k.abs()) / 10.0 - 3.0));
        for (name, g) in [("g1", 0), ("g2", 1)] {
            let eval = |e: f64| {
                if g == 0 {
                    self.velocity(e)
                } else {
                    self.spacing(e)
                }
            };
            if eval(0.0) != 0.0 {
                return Err(PlatoonError::InvalidParameter(format!(
                    "{name}(0) must be 0"
                )));
            }
            for e in samples.clone() {
                let v = eval(e);
                if !(v.is_finite() && v.signum() == -e.signum() && v != 0.0) {
                    return Err(PlatoonError::InvalidParameter(format!(
                        "{name}({e}) = {v} does not oppose the sign of its argument"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    /// Time headway `T` (s).
    pub headway: f64,
    pub tie_policy: TiePolicy,
    pub error_dynamics: ErrorDynamics,
    /// Weight on `|eps2|` in the branch comparison. 1 compares raw numbers.
    pub spacing_weight: f64,
}

impl ControllerParams {
    pub fn new(headway: f64) -> Result<Self> {
        if !(headway > 0.0 && headway.is_finite()) {
            return Err(PlatoonError::InvalidParameter(format!(
                "time headway must be positive, got {headway}"
            )));
        }
        Ok(Self {
            headway,
            tie_policy: TiePolicy::default(),
            error_dynamics: ErrorDynamics::default(),
            spacing_weight: 1.0,
        })
    }

    pub fn with_error_dynamics(mut self, dynamics: ErrorDynamics) -> Result<Self> {
        dynamics.validate()?;
        self.error_dynamics = dynamics;
        Ok(self)
    }

    pub fn with_tie_policy(mut self, tie: TiePolicy) -> Self {
        self.tie_policy = tie;
        self
    }

    fn select_branch(&self, eps: ErrorPair, leader: bool) -> Branch {
        if leader {
            return Branch::Velocity;
        }
        let a = eps.eps1.abs();
        let b = self.spacing_weight * eps.eps2.abs();
        if a > b {
            Branch::Velocity
        } else if a < b {
            Branch::Spacing
        } else {
            match self.tie_policy {
                TiePolicy::Velocity => Branch::Velocity,
                TiePolicy::Spacing => Branch::Spacing,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlDecision {
    /// Commanded acceleration (m/s^2).
    pub u: f64,
    pub branch: Branch,
    pub eps: ErrorPair,
}

/// Feedback for `vehicle` (1-based). The leader always uses branch 1.
pub fn control<P: VelocityProfile>(
    state: &PlatoonState,
    vehicle: usize,
    profile: &P,
    params: &ControllerParams,
) -> Result<ControlDecision> {
    if vehicle == 0 || vehicle > state.len() {
        return Err(PlatoonError::IndexOutOfRange {
            index: vehicle,
            n: state.len(),
        });
    }
    Ok(control_at(state, vehicle - 1, profile, params))
}

pub(crate) fn control_at<P: VelocityProfile>(
    state: &PlatoonState,
    k: usize,
    profile: &P,
    params: &ControllerParams,
) -> ControlDecision {
    let eps = errors_at(state, k, profile, params.headway);
    let branch = params.select_branch(eps, k == 0);
    let y = state.y[k];
    let u = match branch {
        Branch::Velocity => {
            y * profile.derivative(state.x[k]) + params.error_dynamics.velocity(eps.eps1)
        }
        Branch::Spacing => {
            ((state.y[k - 1] - y) - params.error_dynamics.spacing(eps.eps2)) / params.headway
        }
    };
    ControlDecision { u, branch, eps }
}

/// Right-hand side of the closed loop: `(dx/dt, dy/dt) = (y, u)`.
pub fn closed_loop_rhs<P: VelocityProfile>(
    state: &PlatoonState,
    profile: &P,
    params: &ControllerParams,
) -> (Vec<f64>, Vec<f64>) {
    let accel = (0..state.len())
        .map(|k| control_at(state, k, profile, params).u)
        .collect();
    (state.y.clone(), accel)
}

/// Static acceleration bounds valid along the closed-loop trajectory
/// started at `state0`, one per branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlBound {
    /// `(sup|v_d| + delta_i(t0)) sup|v_d'| + delta_i(t0)`.
    pub velocity_branch: f64,
    /// `(2 sup|v_d| + 2 delta_i(t0) + delta_{i-1}(t0)) / T`.
    pub spacing_branch: f64,
}

impl ControlBound {
    pub fn for_branch(&self, b: Branch) -> f64 {
        match b {
            Branch::Velocity => self.velocity_branch,
            Branch::Spacing => self.spacing_branch,
        }
    }

    pub fn max(&self) -> f64 {
        self.velocity_branch.max(self.spacing_branch)
    }
}

/// Control bounds for `vehicle` from its initial errors and the profile
/// suprema. The leader's predecessor error is taken as 0.
pub fn control_bound<P: VelocityProfile>(
    state0: &PlatoonState,
    vehicle: usize,
    profile: &P,
    params: &ControllerParams,
) -> Result<ControlBound> {
    if vehicle == 0 || vehicle > state0.len() {
        return Err(PlatoonError::IndexOutOfRange {
            index: vehicle,
            n: state0.len(),
        });
    }
    let k = vehicle - 1;
    let t = params.headway;
    let sup_v = profile.supremum().abs().max(profile.infimum().abs());
    let sup_dv = profile.lipschitz_constant();
    let delta = errors_at(state0, k, profile, t).delta();
    let delta_prev = if k == 0 {
        0.0
    } else {
        errors_at(state0, k - 1, profile, t).delta()
    };
    Ok(ControlBound {
        velocity_branch: (sup_v + delta) * sup_dv + delta,
        spacing_branch: (2.0 * sup_v + 2.0 * delta + delta_prev) / t,
    })
}
