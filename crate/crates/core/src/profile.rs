//! Desired velocity profiles `v_d(x)` indexed by road position.
//!
//! Both profile types are piecewise linear, defined on the whole real line by
//! constant extrapolation, and immutable once constructed.

use crate::error::{Hypothesis, PlatoonError};

/// Common interface for position-indexed speed targets.
pub trait VelocityProfile {
    /// `v_d(x)` in m/s.
    fn eval(&self, x: f64) -> f64;

    /// Right-hand derivative of `v_d` at `x` (1/s).
    fn derivative(&self, x: f64) -> f64;

    /// Global Lipschitz constant `M` (maximum absolute segment slope).
    fn lipschitz_constant(&self) -> f64;

    /// `inf { v_d(x) : x in R }`.
    fn infimum(&self) -> f64;

    /// `sup { v_d(x) : x in R }`.
    fn supremum(&self) -> f64;

    /// Positions where `v_d` has a kink.
    fn breakpoints(&self) -> Vec<f64>;

    /// Checks the stability hypotheses `M * T < 1` and `inf v_d > 0`.
    fn validate(&self, headway: f64) -> Result<ProfileConstants, PlatoonError> {
        if !(headway > 0.0 && headway.is_finite()) {
            return Err(PlatoonError::InvalidParameter(format!(
                "time headway must be positive and finite, got {headway}"
            )));
        }
        let lipschitz = self.lipschitz_constant();
        let infimum = self.infimum();
        if lipschitz * headway >= 1.0 {
            return Err(PlatoonError::Hypothesis(Hypothesis::LipschitzBound {
                lipschitz,
                headway,
            }));
        }
        if infimum <= 0.0 {
            return Err(PlatoonError::Hypothesis(Hypothesis::PositiveInfimum {
                infimum,
            }));
        }
        Ok(ProfileConstants {
            lipschitz,
            infimum,
            supremum: self.supremum(),
            headway,
        })
    }
}

/// Constants reported by [`VelocityProfile::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConstants {
    pub lipschitz: f64,
    pub infimum: f64,
    pub supremum: f64,
    pub headway: f64,
}

impl ProfileConstants {
    /// Contraction factor `T * M` of the target-curve fixed-point map.
    pub fn contraction(&self) -> f64 {
        self.headway * self.lipschitz
    }
}

/// Gradual linear speed drop from `v0` to `(1 - rho) * v0` over
/// `[drop_start, drop_start + drop_length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedDropProfile {
    v0: f64,
    rho: f64,
    drop_start: f64,
    drop_length: f64,
}

impl SpeedDropProfile {
    pub fn new(v0: f64, rho: f64, drop_start: f64, drop_length: f64) -> Result<Self, PlatoonError> {
        if !(v0 > 0.0 && v0.is_finite()) {
            return Err(PlatoonError::InvalidParameter(format!(
                "v0 must be positive, got {v0}"
            )));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(PlatoonError::InvalidParameter(format!(
                "rho must lie in [0, 1), got {rho}"
            )));
        }
        if !drop_start.is_finite() {
            return Err(PlatoonError::InvalidParameter(
                "drop_start must be finite".into(),
            ));
        }
        if !(drop_length > 0.0 && drop_length.is_finite()) {
            return Err(PlatoonError::InvalidParameter(format!(
                "drop_length must be positive, got {drop_length}"
            )));
        }
        Ok(Self {
            v0,
            rho,
            drop_start,
            drop_length,
        })
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn drop_start(&self) -> f64 {
        self.drop_start
    }

    pub fn drop_length(&self) -> f64 {
        self.drop_length
    }

    pub fn drop_end(&self) -> f64 {
        self.drop_start + self.drop_length
    }

    /// Speed after the drop, `(1 - rho) * v0`.
    pub fn final_speed(&self) -> f64 {
        (1.0 - self.rho) * self.v0
    }

    fn slope(&self) -> f64 {
        -self.rho * self.v0 / self.drop_length
    }
}

impl VelocityProfile for SpeedDropProfile {
    fn eval(&self, x: f64) -> f64 {
        if x <= self.drop_start {
            self.v0
        } else if x >= self.drop_end() {
            self.final_speed()
        } else {
            let frac = (x - self.drop_start) / self.drop_length;
            self.v0 * (1.0 - self.rho * frac)
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        if x >= self.drop_start && x < self.drop_end() {
            self.slope()
        } else {
            0.0
        }
    }

    fn lipschitz_constant(&self) -> f64 {
        self.rho * self.v0 / self.drop_length
    }

    fn infimum(&self) -> f64 {
        self.final_speed()
    }

    fn supremum(&self) -> f64 {
        self.v0
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.drop_start, self.drop_end()]
    }
}

/// General piecewise-linear profile through `(breakpoints[k], values[k])`,
/// held constant outside the breakpoint range.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearProfile {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, PlatoonError> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(PlatoonError::InvalidParameter(format!(
                "need matching non-empty breakpoints/values, got {} and {}",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(PlatoonError::InvalidParameter(
                "breakpoints must be finite".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PlatoonError::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(PlatoonError::InvalidParameter(
                "profile values must be positive".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index `k` of the segment `[b_k, b_{k+1})` containing `x`, if any.
    fn segment(&self, x: f64) -> Option<usize> {
        let last = self.breakpoints.len() - 1;
        if x < self.breakpoints[0] || x >= self.breakpoints[last] {
            return None;
        }
        // partition_point gives the first breakpoint > x
        Some(self.breakpoints.partition_point(|b| *b <= x) - 1)
    }

    fn segment_slope(&self, k: usize) -> f64 {
        (self.values[k + 1] - self.values[k]) / (self.breakpoints[k + 1] - self.breakpoints[k])
    }
}

impl VelocityProfile for PiecewiseLinearProfile {
    fn eval(&self, x: f64) -> f64 {
        let last = self.breakpoints.len() - 1;
        if x <= self.breakpoints[0] {
            return self.values[0];
        }
        if x >= self.breakpoints[last] {
            return self.values[last];
        }
        let k = self.segment(x).expect("x is inside the breakpoint range");
        let frac = (x - self.breakpoints[k]) / (self.breakpoints[k + 1] - self.breakpoints[k]);
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }

    fn derivative(&self, x: f64) -> f64 {
        self.segment(x).map_or(0.0, |k| self.segment_slope(k))
    }

    fn lipschitz_constant(&self) -> f64 {
        (0..self.breakpoints.len() - 1)
            .map(|k| self.segment_slope(k).abs())
            .fold(0.0, f64::max)
    }

    fn infimum(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn supremum(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

impl From<SpeedDropProfile> for PiecewiseLinearProfile {
    fn from(p: SpeedDropProfile) -> Self {
        Self {
            breakpoints: vec![p.drop_start, p.drop_end()],
            values: vec![p.v0, p.final_speed()],
        }
    }
}

/// Either profile kind, so scenarios can carry one without generics.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    SpeedDrop(SpeedDropProfile),
    PiecewiseLinear(PiecewiseLinearProfile),
}

impl From<SpeedDropProfile> for Profile {
    fn from(p: SpeedDropProfile) -> Self {
        Profile::SpeedDrop(p)
    }
}

impl From<PiecewiseLinearProfile> for Profile {
    fn from(p: PiecewiseLinearProfile) -> Self {
        Profile::PiecewiseLinear(p)
    }
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            Profile::SpeedDrop($p) => $e,
            Profile::PiecewiseLinear($p) => $e,
        }
    };
}

impl VelocityProfile for Profile {
    fn eval(&self, x: f64) -> f64 {
        dispatch!(self, p => p.eval(x))
    }
    fn derivative(&self, x: f64) -> f64 {
        dispatch!(self, p => p.derivative(x))
    }
    fn lipschitz_constant(&self) -> f64 {
        dispatch!(self, p => p.lipschitz_constant())
    }
    fn infimum(&self) -> f64 {
        dispatch!(self, p => p.infimum())
    }
    fn supremum(&self) -> f64 {
        dispatch!(self, p => p.supremum())
    }
    fn breakpoints(&self) -> Vec<f64> {
        dispatch!(self, p => p.breakpoints())
    }
}

impl<P: VelocityProfile + ?Sized> VelocityProfile for &P {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn derivative(&self, x: f64) -> f64 {
        (**self).derivative(x)
    }
    fn lipschitz_constant(&self) -> f64 {
        (**self).lipschitz_constant()
    }
    fn infimum(&self) -> f64 {
        (**self).infimum()
    }
    fn supremum(&self) -> f64 {
        (**self).supremum()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}
