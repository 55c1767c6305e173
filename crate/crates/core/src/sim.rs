//! Closed-loop integration of the platoon and trajectory recording.

use crate::controller::{control_at, ControlDecision, ControllerParams};
use crate::error::{PlatoonError, Result};
use crate::platoon::{target_point, PlatoonState};
use crate::profile::{Profile, SpeedDropProfile, VelocityProfile};

/// Offset applied to one vehicle after placing the platoon on the target curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    /// 1-based vehicle index.
    pub vehicle: usize,
    /// Position offset (m).
    pub dx: f64,
    /// Velocity offset (m/s).
    pub dv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Integrator {
    /// Classical fixed-step RK4; the branch is re-selected at every stage.
    #[default]
    Rk4,
    /// Dormand-Prince 5(4) with error control.
    Rk45 { rtol: f64, atol: f64 },
}

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_RECORD_INTERVAL: f64 = 0.1;
pub const DEFAULT_DURATION: f64 = 200.0;
/// Leader start relative to the drop start.
pub const DEFAULT_LEADER_OFFSET: f64 = -500.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n: usize,
    pub controller: ControllerParams,
    pub profile: Profile,
    pub x1_start: f64,
    pub duration: f64,
    pub dt: f64,
    pub record_interval: f64,
    pub perturbations: Vec<Perturbation>,
    pub integrator: Integrator,
    /// Optional `|u|` cap applied by the simulator (not by the controller).
    pub saturation: Option<f64>,
}

impl Scenario {
    /// Defaults around a profile: leader 500 m before the drop start,
    /// 200 s horizon, `dt = 0.01`, records every 0.1 s, RK4, no saturation.
    pub fn new(n: usize, headway: f64, profile: SpeedDropProfile) -> Result<Self> {
        Ok(Self {
            n,
            controller: ControllerParams::new(headway)?,
            x1_start: profile.drop_start() + DEFAULT_LEADER_OFFSET,
            profile: profile.into(),
            duration: DEFAULT_DURATION,
            dt: DEFAULT_DT,
            record_interval: DEFAULT_RECORD_INTERVAL,
            perturbations: Vec::new(),
            integrator: Integrator::Rk4,
            saturation: None,
        })
    }

    /// 100 vehicles, `T = 1 s`, speed drop 20 -> 10 m/s over 500 m, no
    /// initial error.
    pub fn speed_drop_unperturbed() -> Self {
        let profile = SpeedDropProfile::new(20.0, 0.5, 0.0, 500.0).expect("valid profile");
        Self::new(100, 1.0, profile).expect("valid scenario")
    }

    /// As [`Scenario::speed_drop_unperturbed`] with vehicle 3 moved 10 m forward.
    pub fn speed_drop_vehicle3_shifted() -> Self {
        let mut s = Self::speed_drop_unperturbed();
        s.perturbations.push(Perturbation {
            vehicle: 3,
            dx: 10.0,
            dv: 0.0,
        });
        s
    }

    pub fn headway(&self) -> f64 {
        self.controller.headway
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(PlatoonError::InvalidParameter(m));
        if self.n == 0 {
            return invalid("n must be at least 1".into());
        }
        for (name, v) in [
            ("dt", self.dt),
            ("duration", self.duration),
            ("record_interval", self.record_interval),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.x1_start.is_finite() {
            return invalid("x1_start must be finite".into());
        }
        if let Some(p) = self
            .perturbations
            .iter()
            .find(|p| p.vehicle == 0 || p.vehicle > self.n)
        {
            return invalid(format!(
                "perturbation vehicle {} outside 1..={}",
                p.vehicle, self.n
            ));
        }
        if let Some(c) = self.saturation {
            if !(c > 0.0) {
                return invalid(format!("saturation must be positive, got {c}"));
            }
        }
        if let Integrator::Rk45 { rtol, atol } = self.integrator {
            if !(rtol > 0.0 && atol > 0.0) {
                return invalid("rk45 tolerances must be positive".into());
            }
        }
        self.profile.validate(self.headway())?;
        Ok(())
    }

    /// Number of recorded samples, `floor(duration / record_interval) + 1`.
    pub fn record_count(&self) -> usize {
        (self.duration / self.record_interval * (1.0 + 1e-12)).floor() as usize + 1
    }
}

/// Platoon on the target curve with leader at `x1_start`, plus the listed offsets.
pub fn initial_state(scenario: &Scenario) -> Result<PlatoonState> {
    scenario.validate()?;
    let mut state = target_point(
        scenario.x1_start,
        scenario.n,
        &scenario.profile,
        scenario.headway(),
    )?
    .into_state(0.0);
    for p in &scenario.perturbations {
        state.x[p.vehicle - 1] += p.dx;
        state.y[p.vehicle - 1] += p.dv;
    }
    Ok(state)
}

/// One recorded instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: PlatoonState,
    pub decisions: Vec<ControlDecision>,
    pub headways: Vec<Option<f64>>,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

/// Onset of a non-positive spacing between `vehicle - 1` and `vehicle`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub t: f64,
    pub vehicle: usize,
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub collisions: Vec<CollisionEvent>,
    /// Integration steps taken (accepted steps for RK45).
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(Sample::t)
    }

    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has at least the initial sample")
    }

    pub fn n(&self) -> usize {
        self.samples[0].state.len()
    }
}

/// Per-sample `delta_i(t) = max(|eps1|, |eps2|)` of `vehicle` (1-based).
pub fn decay_series(trajectory: &Trajectory, vehicle: usize) -> Result<Vec<(f64, f64)>> {
    let n = trajectory.n();
    if vehicle == 0 || vehicle > n {
        return Err(PlatoonError::IndexOutOfRange { index: vehicle, n });
    }
    Ok(trajectory
        .samples
        .iter()
        .map(|s| (s.t(), s.decisions[vehicle - 1].eps.delta()))
        .collect())
}

/// Closed-loop vector field with an optional acceleration cap.
struct Dynamics<'a> {
    profile: &'a Profile,
    params: &'a ControllerParams,
    saturation: Option<f64>,
    stage: PlatoonState,
}

impl<'a> Dynamics<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        let n = scenario.n;
        Self {
            profile: &scenario.profile,
            params: &scenario.controller,
            saturation: scenario.saturation,
            stage: PlatoonState {
                t: 0.0,
                x: vec![0.0; n],
                y: vec![0.0; n],
            },
        }
    }

    fn decide(&self, state: &PlatoonState, k: usize) -> ControlDecision {
        let mut d = control_at(state, k, self.profile, self.params);
        if let Some(cap) = self.saturation {
            d.u = d.u.clamp(-cap, cap);
        }
        d
    }

    /// Writes `(y, u)` evaluated at `(x, y)` into `(dx, dy)`.
    fn eval(&mut self, x: &[f64], y: &[f64], dx: &mut [f64], dy: &mut [f64]) {
        self.stage.x.copy_from_slice(x);
        self.stage.y.copy_from_slice(y);
        dx.copy_from_slice(y);
        for k in 0..x.len() {
            dy[k] = self.decide(&self.stage, k).u;
        }
    }

    fn sample(&self, state: &PlatoonState) -> Sample {
        let n = state.len();
        let decisions = (0..n).map(|k| self.decide(state, k)).collect();
        let headways = (1..=n)
            .map(|i| state.headway(i).expect("index in range"))
            .collect();
        Sample {
            state: state.clone(),
            decisions,
            headways,
        }
    }
}

/// Scratch storage for one integrator step on a `2n` system.
struct Stages {
    k: Vec<(Vec<f64>, Vec<f64>)>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Stages {
    fn new(n: usize, count: usize) -> Self {
        Self {
            k: (0..count).map(|_| (vec![0.0; n], vec![0.0; n])).collect(),
            x: vec![0.0; n],
            y: vec![0.0; n],
        }
    }
}

/// Stage state `base + h * sum_j a_j k_j`.
fn combine(stages: &mut Stages, base_x: &[f64], base_y: &[f64], h: f64, coeffs: &[f64]) {
    for i in 0..base_x.len() {
        let mut sx = 0.0;
        let mut sy = 0.0;
        for (j, a) in coeffs.iter().enumerate() {
            if *a != 0.0 {
                sx += a * stages.k[j].0[i];
                sy += a * stages.k[j].1[i];
            }
        }
        stages.x[i] = base_x[i] + h * sx;
        stages.y[i] = base_y[i] + h * sy;
    }
}

fn rk4_step(dyn_: &mut Dynamics, st: &mut Stages, x: &mut [f64], y: &mut [f64], h: f64) {
    const A: [&[f64]; 4] = [&[], &[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]];
    for s in 0..4 {
        if s == 0 {
            st.x.copy_from_slice(x);
            st.y.copy_from_slice(y);
        } else {
            combine(st, x, y, h, A[s]);
        }
        let (kx, ky) = &mut st.k[s];
        dyn_.eval(&st.x, &st.y, kx, ky);
    }
    for i in 0..x.len() {
        x[i] += h / 6.0 * (st.k[0].0[i] + 2.0 * st.k[1].0[i] + 2.0 * st.k[2].0[i] + st.k[3].0[i]);
        y[i] += h / 6.0 * (st.k[0].1[i] + 2.0 * st.k[1].1[i] + 2.0 * st.k[2].1[i] + st.k[3].1[i]);
    }
}

// Dormand-Prince 5(4) tableau.
const DP_A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand-Prince trial step; leaves the 5th-order solution in `st.x/st.y`
/// and returns the scaled error norm.
fn dp_trial(
    dyn_: &mut Dynamics,
    st: &mut Stages,
    x: &[f64],
    y: &[f64],
    h: f64,
    rtol: f64,
    atol: f64,
) -> f64 {
    for s in 0..7 {
        if s == 0 {
            st.x.copy_from_slice(x);
            st.y.copy_from_slice(y);
        } else {
            combine(st, x, y, h, DP_A[s]);
        }
        let (kx, ky) = &mut st.k[s];
        dyn_.eval(&st.x, &st.y, kx, ky);
    }
    // stage 7 was evaluated at the 5th-order solution, which is now in st.x/st.y
    let mut err: f64 = 0.0;
    for i in 0..x.len() {
        let (mut ex, mut ey) = (0.0, 0.0);
        for j in 0..7 {
            let w = DP_B5[j] - DP_B4[j];
            ex += w * st.k[j].0[i];
            ey += w * st.k[j].1[i];
        }
        let sx = atol + rtol * x[i].abs().max(st.x[i].abs());
        let sy = atol + rtol * y[i].abs().max(st.y[i].abs());
        err = err.max((h * ex).abs() / sx).max((h * ey).abs() / sy);
    }
    err
}

fn check_finite(x: &[f64], y: &[f64], t: f64) -> Result<()> {
    match x
        .iter()
        .zip(y)
        .position(|(a, b)| !a.is_finite() || !b.is_finite())
    {
        Some(k) => Err(PlatoonError::NumericBlowUp { t, vehicle: k + 1 }),
        None => Ok(()),
    }
}

fn track_collisions(x: &[f64], t: f64, colliding: &mut [bool], events: &mut Vec<CollisionEvent>) {
    for k in 1..x.len() {
        let spacing = x[k - 1] - x[k];
        let hit = spacing <= 0.0;
        if hit && !colliding[k] {
            events.push(CollisionEvent {
                t,
                vehicle: k + 1,
                spacing,
            });
        }
        colliding[k] = hit;
    }
}

/// Integrates the closed loop from `t = 0` to `duration`, recording every
/// `record_interval`. Deterministic for a given scenario.
pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    let start = initial_state(scenario)?;
    run_from(scenario, start)
}

/// As [`run`] but from an explicit initial state (its `t` is ignored).
pub fn run_from(scenario: &Scenario, start: PlatoonState) -> Result<Trajectory> {
    scenario.validate()?;
    let n = scenario.n;
    if start.len() != n {
        return Err(PlatoonError::InvalidParameter(format!(
            "initial state has {} vehicles, scenario has {n}",
            start.len()
        )));
    }
    let mut dynamics = Dynamics::new(scenario);
    let mut x = start.x;
    let mut y = start.y;
    check_finite(&x, &y, 0.0)?;

    let records = scenario.record_count();
    let mut samples = Vec::with_capacity(records);
    let mut collisions = Vec::new();
    let mut colliding = vec![false; n];
    track_collisions(&x, 0.0, &mut colliding, &mut collisions);
    let mut current = PlatoonState {
        t: 0.0,
        x: x.clone(),
        y: y.clone(),
    };
    samples.push(dynamics.sample(&current));

    let ri = scenario.record_interval;
    let mut steps = 0;
    let mut stages = Stages::new(n, 7);
    let mut h_adaptive = scenario.dt.min(ri);

    for r in 1..records {
        let t0 = (r - 1) as f64 * ri;
        let t1 = r as f64 * ri;
        match scenario.integrator {
            Integrator::Rk4 => {
                let m = ((t1 - t0) / scenario.dt - 1e-9).ceil().max(1.0) as usize;
                let h = (t1 - t0) / m as f64;
                for j in 1..=m {
                    rk4_step(&mut dynamics, &mut stages, &mut x, &mut y, h);
                    steps += 1;
                    let t = t0 + j as f64 * h;
                    check_finite(&x, &y, t)?;
                    track_collisions(&x, t, &mut colliding, &mut collisions);
                }
            }
            Integrator::Rk45 { rtol, atol } => {
                let mut t = t0;
                let h_min = 1e-9 * ri;
                while t1 - t > 1e-12 * t1.abs().max(1.0) {
                    let h = h_adaptive.min(t1 - t);
                    let err = dp_trial(&mut dynamics, &mut stages, &x, &y, h, rtol, atol);
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if err <= 1.0 || h <= h_min {
                        x.copy_from_slice(&stages.x);
                        y.copy_from_slice(&stages.y);
                        t += h;
                        steps += 1;
                        check_finite(&x, &y, t)?;
                        track_collisions(&x, t, &mut colliding, &mut collisions);
                        // keep the pre-clipping step size when a record boundary cut it short
                        if h == h_adaptive || err > 1.0 {
                            h_adaptive = (h * factor).min(ri).max(h_min);
                        }
                    } else {
                        h_adaptive = (h * factor).max(h_min);
                    }
                }
            }
        }
        current.t = t1;
        current.x.copy_from_slice(&x);
        current.y.copy_from_slice(&y);
        samples.push(dynamics.sample(&current));
    }

    Ok(Trajectory {
        samples,
        collisions,
        steps,
    })
}
