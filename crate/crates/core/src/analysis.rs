//! Numerical verdicts on the closed-loop guarantees: error decay, the
//! target-curve distance bounds, the non-collision threshold, control bounds,
//! and the equilibrium flow/density.
//!
//! Every checker returns [`BoundCheck`] records carrying both sides of the
//! inequality, so a failure can be reproduced from the report alone.

use std::fmt::Write as _;

use crate::controller::{control_bound, ControllerParams};
use crate::error::{PlatoonError, Result};
use crate::platoon::{all_errors, distance_to_target, max_error, target_point, PlatoonState};
use crate::profile::VelocityProfile;
use crate::sim::{decay_series, Scenario, Trajectory};

/// Slack on every inequality; quantities pass through double-precision integration.
pub const SLACK: f64 = 1e-6;

/// One evaluated inequality `lhs <= rhs (+ slack)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub id: String,
    pub vehicle: Option<usize>,
    pub t: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl BoundCheck {
    pub fn new(id: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            id: id.into(),
            vehicle: None,
            t: None,
            lhs,
            rhs,
            slack: SLACK,
        }
    }

    fn vehicle(mut self, v: usize) -> Self {
        self.vehicle = Some(v);
        self
    }

    fn at(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    /// `rhs - lhs`; negative means the inequality is violated before slack.
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn pass(&self) -> bool {
        self.lhs <= self.rhs + self.slack
    }
}

/// Record with the smallest margin.
pub fn worst(checks: &[BoundCheck]) -> Option<&BoundCheck> {
    checks
        .iter()
        .min_by(|a, b| a.margin().total_cmp(&b.margin()))
}

/// Outcome of a log-linear decay fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayFit {
    /// Slope of `ln delta` against `t`, with the RMS residual of the fit.
    Rate {
        rate: f64,
        intercept: f64,
        residual: f64,
        points: usize,
    },
    /// Fewer than 10 points above the noise floor.
    Converged,
}

impl DecayFit {
    pub fn rate(&self) -> Option<f64> {
        match self {
            DecayFit::Rate { rate, .. } => Some(*rate),
            DecayFit::Converged => None,
        }
    }
}

/// Fit window for [`fit_decay_rate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
    pub noise_floor: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            t_min: f64::NEG_INFINITY,
            t_max: f64::INFINITY,
            noise_floor: 1e-10,
        }
    }
}

/// Least-squares slope of `ln delta` versus `t` over points inside the window
/// and above the noise floor.
pub fn fit_decay_rate(series: &[(f64, f64)], window: FitWindow) -> DecayFit {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, d)| *t >= window.t_min && *t <= window.t_max && *d > window.noise_floor)
        .map(|&(t, d)| (t, d.ln()))
        .collect();
    if pts.len() < 10 {
        return DecayFit::Converged;
    }
    let m = pts.len() as f64;
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let l_mean = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - t_mean).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - t_mean) * (p.1 - l_mean)).sum();
    let rate = sxy / sxx;
    let intercept = l_mean - rate * t_mean;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - rate * p.0).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    DecayFit::Rate {
        rate,
        intercept,
        residual,
        points: pts.len(),
    }
}

/// Checks `delta(t) <= delta(t0) e^{-(t - t0)} (1 + rel) + abs` at every sample.
pub fn check_envelope(series: &[(f64, f64)], rel: f64, abs: f64) -> Vec<BoundCheck> {
    let Some(&(t0, d0)) = series.first() else {
        return Vec::new();
    };
    series
        .iter()
        .map(|&(t, d)| {
            let mut c = BoundCheck::new(
                "lemma1.envelope",
                d,
                d0 * (-(t - t0)).exp() * (1.0 + rel) + abs,
            );
            c.slack = 0.0;
            c.at(t)
        })
        .collect()
}

/// Largest initial distance to the target curve for which all spacings are
/// guaranteed to stay positive: `T inf v_d / (max(2 + T, 1 + M) (1 + T))`.
pub fn noncollision_threshold<P: VelocityProfile>(profile: &P, headway: f64) -> f64 {
    let m = profile.lipschitz_constant();
    headway * profile.infimum() / (lemma3_factor(headway, m) * (1.0 + headway))
}

/// `max(2 + T, 1 + M)`.
pub fn lemma3_factor(headway: f64, lipschitz: f64) -> f64 {
    (2.0 + headway).max(1.0 + lipschitz)
}

/// `C_i = sum_{k=2..i} (1 - T M)^{-(i - k + 1)}`; zero for the leader.
pub fn lemma2_constant(vehicle: usize, headway: f64, lipschitz: f64) -> f64 {
    let base = 1.0 / (1.0 - headway * lipschitz);
    (2..=vehicle)
        .map(|k| base.powi((vehicle - k + 1) as i32))
        .sum()
}

/// Position and velocity deviations from the target-curve point that shares
/// the state's leader position, bounded through the max error `E`.
pub fn check_lemma2<P: VelocityProfile>(
    state: &PlatoonState,
    profile: &P,
    headway: f64,
) -> Result<Vec<BoundCheck>> {
    let m = profile.lipschitz_constant();
    let anchored = target_point(state.x[0], state.len(), profile, headway)?;
    let e = max_error(state, profile, headway);
    let mut out = Vec::with_capacity(2 * state.len());
    for k in 0..state.len() {
        let i = k + 1;
        let c = lemma2_constant(i, headway, m);
        if i > 1 {
            out.push(
                BoundCheck::new(
                    "lemma2.position",
                    (state.x[k] - anchored.x[k]).abs(),
                    c * (1.0 + headway) * e,
                )
                .vehicle(i)
                .at(state.t),
            );
        }
        out.push(
            BoundCheck::new(
                "lemma2.velocity",
                (state.y[k] - anchored.y[k]).abs(),
                (c * m * (1.0 + headway) + 1.0) * e,
            )
            .vehicle(i)
            .at(state.t),
        );
    }
    Ok(out)
}

/// `E(Q) <= max(2 + T, 1 + M) dist(Q, target curve)`.
pub fn check_lemma3<P: VelocityProfile>(
    state: &PlatoonState,
    profile: &P,
    headway: f64,
) -> Result<BoundCheck> {
    let e = max_error(state, profile, headway);
    let dist = distance_to_target(state, profile, headway)?.distance;
    let factor = lemma3_factor(headway, profile.lipschitz_constant());
    Ok(BoundCheck::new("lemma3", e, factor * dist).at(state.t))
}

/// Every recorded `|u_i(t)|` against the static bound of its active branch.
/// Returns the worst record per vehicle.
pub fn check_control_bounds<P: VelocityProfile>(
    trajectory: &Trajectory,
    profile: &P,
    params: &ControllerParams,
) -> Result<Vec<BoundCheck>> {
    let first = &trajectory.samples[0].state;
    let mut out = Vec::with_capacity(trajectory.n());
    for i in 1..=trajectory.n() {
        let bound = control_bound(first, i, profile, params)?;
        let worst = trajectory
            .samples
            .iter()
            .map(|s| {
                let d = s.decisions[i - 1];
                BoundCheck::new(
                    format!("control.branch{}", d.branch.number()),
                    d.u.abs(),
                    bound.for_branch(d.branch),
                )
                .vehicle(i)
                .at(s.t())
            })
            .min_by(|a, b| a.margin().total_cmp(&b.margin()))
            .expect("trajectory is non-empty");
        out.push(worst);
    }
    Ok(out)
}

/// Equilibrium flow and density at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Macroscopic {
    pub location: f64,
    /// Flow (veh/s).
    pub q: f64,
    /// Density (veh/m).
    pub k: f64,
}

/// `q = 1/T`, `k = 1/(T v_d(l))`.
pub fn macroscopic<P: VelocityProfile>(
    profile: &P,
    headway: f64,
    location: f64,
) -> Result<Macroscopic> {
    if !(headway > 0.0) {
        return Err(PlatoonError::InvalidParameter(format!(
            "headway must be positive, got {headway}"
        )));
    }
    Ok(Macroscopic {
        location,
        q: 1.0 / headway,
        k: 1.0 / (headway * profile.eval(location)),
    })
}

/// Min and max follower headway over samples taken after each vehicle has
/// reached `from_position`. `None` if no such sample exists.
pub fn headway_band(trajectory: &Trajectory, from_position: f64) -> Option<(f64, f64)> {
    let mut band: Option<(f64, f64)> = None;
    for s in &trajectory.samples {
        for (k, h) in s.headways.iter().enumerate().skip(1) {
            if let (Some(h), true) = (h, s.state.x[k] >= from_position) {
                band = Some(band.map_or((*h, *h), |(lo, hi)| (lo.min(*h), hi.max(*h))));
            }
        }
    }
    band
}

/// `dist(Q, Q*) <= C E(Q)` constant implied by the per-vehicle bounds, using
/// the target-curve point anchored at the leader.
pub fn distance_constant(n: usize, headway: f64, lipschitz: f64) -> f64 {
    (1..=n)
        .map(|i| {
            let c = lemma2_constant(i, headway, lipschitz);
            let px = c * (1.0 + headway);
            let py = c * lipschitz * (1.0 + headway) + 1.0;
            px * px + py * py
        })
        .sum::<f64>()
        .sqrt()
}

/// Per-vehicle decay-rate fit summary.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleDecay {
    pub vehicle: usize,
    pub fit: DecayFit,
    pub initial_delta: f64,
    pub peak_delta: f64,
}

/// Aggregated verdicts for one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub n: usize,
    pub headway: f64,
    pub lipschitz: f64,
    pub infimum: f64,
    pub threshold: f64,
    pub initial_distance: f64,
    pub initial_max_error: f64,
    pub collisions: usize,
    pub headway_band: Option<(f64, f64)>,
    pub end_velocity_error: f64,
    pub decay: Vec<VehicleDecay>,
    pub macroscopic: Vec<Macroscopic>,
    /// Gating checks: lemma 2/3 on sampled states and control bounds.
    pub checks: Vec<BoundCheck>,
    /// Non-gating checks: the per-vehicle exponential envelope and the
    /// distance-decay surrogate.
    pub diagnostics: Vec<BoundCheck>,
}

/// Options for [`analyze`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Number of trajectory samples checked against the distance bounds.
    pub lemma_samples: usize,
    /// Decay fits skip samples before this time.
    pub fit_start: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            lemma_samples: 21,
            fit_start: 0.5,
        }
    }
}

/// Runs every check on a recorded trajectory.
pub fn analyze(
    scenario: &Scenario,
    trajectory: &Trajectory,
    opts: AnalysisOptions,
) -> Result<AnalysisReport> {
    let profile = &scenario.profile;
    let t = scenario.headway();
    let consts = profile.validate(t)?;
    let first = &trajectory.samples[0].state;
    let last = trajectory.last();

    let initial_distance = distance_to_target(first, profile, t)?.distance;
    let initial_max_error = max_error(first, profile, t);

    let mut checks = Vec::new();
    let count = trajectory.samples.len();
    let picks = opts.lemma_samples.clamp(1, count);
    for j in 0..picks {
        let idx = if picks == 1 {
            0
        } else {
            j * (count - 1) / (picks - 1)
        };
        let state = &trajectory.samples[idx].state;
        checks.extend(check_lemma2(state, profile, t)?);
        checks.push(check_lemma3(state, profile, t)?);
    }
    checks.extend(check_control_bounds(
        trajectory,
        profile,
        &scenario.controller,
    )?);

    let mut diagnostics = Vec::new();
    let mut decay = Vec::with_capacity(scenario.n);
    for i in 1..=scenario.n {
        let series = decay_series(trajectory, i)?;
        let env = check_envelope(&series, 1e-3, 1e-8);
        if let Some(w) = worst(&env) {
            diagnostics.push(w.clone().vehicle(i));
        }
        let fit = fit_decay_rate(
            &series,
            FitWindow {
                t_min: opts.fit_start,
                ..FitWindow::default()
            },
        );
        decay.push(VehicleDecay {
            vehicle: i,
            fit,
            initial_delta: series[0].1,
            peak_delta: series.iter().map(|p| p.1).fold(0.0, f64::max),
        });
    }
    let c = distance_constant(scenario.n, t, consts.lipschitz);
    let e0 = initial_max_error;
    let step = (count / 40).max(1);
    let surrogate: Vec<BoundCheck> = trajectory
        .samples
        .iter()
        .step_by(step)
        .map(|s| {
            let d = distance_to_target(&s.state, profile, t).map(|r| r.distance)?;
            Ok(BoundCheck::new("stability.distance_decay", d, c * e0 * (-s.t()).exp()).at(s.t()))
        })
        .collect::<Result<_>>()?;
    if let Some(w) = worst(&surrogate) {
        diagnostics.push(w.clone());
    }

    let drop_start = profile
        .breakpoints()
        .first()
        .copied()
        .unwrap_or(f64::NEG_INFINITY);
    let end_velocity_error = all_errors(&last.state, profile, t)
        .iter()
        .map(|e| e.eps1.abs())
        .fold(0.0, f64::max);
    let bps = profile.breakpoints();
    let mut locations = vec![bps[0] - 100.0];
    if bps.len() > 1 {
        locations.push(0.5 * (bps[0] + bps[bps.len() - 1]));
    }
    locations.push(bps[bps.len() - 1] + 100.0);
    let macroscopic = locations
        .into_iter()
        .map(|l| macroscopic(profile, t, l))
        .collect::<Result<_>>()?;

    Ok(AnalysisReport {
        n: scenario.n,
        headway: t,
        lipschitz: consts.lipschitz,
        infimum: consts.infimum,
        threshold: noncollision_threshold(profile, t),
        initial_distance,
        initial_max_error,
        collisions: trajectory.collisions.len(),
        headway_band: headway_band(trajectory, drop_start),
        end_velocity_error,
        decay,
        macroscopic,
        checks,
        diagnostics,
    })
}

impl AnalysisReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.pass())
    }

    /// A collision is a violation only when the start was inside the
    /// non-collision threshold.
    pub fn collision_violation(&self) -> bool {
        self.collisions > 0 && self.initial_distance <= self.threshold
    }

    pub fn all_pass(&self) -> bool {
        self.failed_checks().next().is_none() && !self.collision_violation()
    }

    /// `key: value` lines, one fact per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}: {v}");
        };
        kv("n", self.n.to_string());
        kv("headway", self.headway.to_string());
        kv("lipschitz", self.lipschitz.to_string());
        kv("infimum", self.infimum.to_string());
        kv("noncollision_threshold", self.threshold.to_string());
        kv("initial_distance", self.initial_distance.to_string());
        kv("initial_max_error", self.initial_max_error.to_string());
        kv(
            "within_threshold",
            (self.initial_distance <= self.threshold).to_string(),
        );
        kv("collisions", self.collisions.to_string());
        match self.headway_band {
            Some((lo, hi)) => {
                kv("headway_band_min", lo.to_string());
                kv("headway_band_max", hi.to_string());
            }
            None => kv("headway_band", "none".into()),
        }
        kv("end_velocity_error", self.end_velocity_error.to_string());
        for m in &self.macroscopic {
            kv(&format!("macroscopic.q@{}", m.location), m.q.to_string());
            kv(&format!("macroscopic.k@{}", m.location), m.k.to_string());
        }
        for d in &self.decay {
            let rate = match d.fit {
                DecayFit::Rate { rate, residual, .. } => format!("{rate} residual {residual}"),
                DecayFit::Converged => "converged".into(),
            };
            kv(&format!("decay_rate.{}", d.vehicle), rate);
        }
        let emit = |s: &mut String, prefix: &str, checks: &[BoundCheck]| {
            let mut ids: Vec<&str> = checks.iter().map(|c| c.id.as_str()).collect();
            ids.dedup();
            ids.sort_unstable();
            ids.dedup();
            for id in ids {
                let group: Vec<BoundCheck> =
                    checks.iter().filter(|c| c.id == id).cloned().collect();
                let w = worst(&group).expect("non-empty group");
                let failed = group.iter().filter(|c| !c.pass()).count();
                let _ = writeln!(
                    s,
                    "{prefix}{id}: {} worst_margin {} lhs {} rhs {} vehicle {} t {} violations {failed}/{}",
                    if failed == 0 { "pass" } else { "fail" },
                    w.margin(),
                    w.lhs,
                    w.rhs,
                    w.vehicle.map_or("-".into(), |v| v.to_string()),
                    w.t.map_or("-".into(), |t| t.to_string()),
                    group.len(),
                );
            }
        };
        emit(&mut s, "check.", &self.checks);
        emit(&mut s, "diagnostic.", &self.diagnostics);
        let _ = writeln!(
            s,
            "verdict: {}",
            if self.all_pass() { "pass" } else { "fail" }
        );
        s
    }

    /// CSV of every check: `id,vehicle,t,lhs,rhs,margin,pass`.
    pub fn checks_csv(&self) -> String {
        let mut s = String::from("id,vehicle,t,lhs,rhs,margin,pass\n");
        for c in self.checks.iter().chain(&self.diagnostics) {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                c.id,
                c.vehicle.map_or(String::new(), |v| v.to_string()),
                c.t.map_or(String::new(), |t| t.to_string()),
                c.lhs,
                c.rhs,
                c.margin(),
                c.pass()
            );
        }
        s
    }
}
