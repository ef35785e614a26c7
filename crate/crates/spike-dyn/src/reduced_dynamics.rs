//! Two-variable scalar reduction of the training dynamics.
//!
//! After the weight vectors co-align with the initial growth direction, the
//! network is described by the magnitudes `(w1, w2)` of its components along
//! the adapted basis directions:
//!
//! ```text
//! tau dw1/dt = |Sigma_xy| sqrt(w1^2+w2^2) - lambda1 w1 (w1^2+w2^2) + nu w2 (w1^2+w2^2)
//! tau dw2/dt = nu w1 (w1^2+w2^2) - lambda2 w2 (w1^2+w2^2)
//! ```
//!
//! This module integrates the system with fixed-step RK4, evaluates the
//! early-phase sigmoidal solution and its timescale, the later-phase time
//! bound, the non-trivial fixed point, and phase-plane data (vector field
//! and nullclines).

use crate::adapted_basis::AdaptedBasis;
use crate::error::{Error, Result};

const STATE_DIVERGENCE_LIMIT: f64 = 1e6;

/// Coefficients of the reduced system.
#[derive(Debug, Clone, Copy)]
pub struct ReducedParams {
    pub sigma_xy_norm: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub nu: f64,
    /// Time constant; 1 in the dimensionless units used throughout.
    pub tau: f64,
}

impl ReducedParams {
    pub fn new(sigma_xy_norm: f64, lambda1: f64, lambda2: f64, nu: f64, tau: f64) -> Result<Self> {
        if !(sigma_xy_norm > 0.0 && lambda1 > 0.0 && lambda2 > 0.0 && tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need |Sigma_xy|, lambda1, lambda2, tau > 0; got ({sigma_xy_norm}, {lambda1}, {lambda2}, {tau})"
            )));
        }
        if !(nu >= 0.0) {
            return Err(Error::InvalidParameter(format!("nu = {nu}, need nu >= 0")));
        }
        if nu * nu > lambda1 * lambda2 * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "nu^2 = {} exceeds lambda1 lambda2 = {}",
                nu * nu,
                lambda1 * lambda2
            )));
        }
        Ok(Self {
            sigma_xy_norm,
            lambda1,
            lambda2,
            nu,
            tau,
        })
    }

    /// Coefficients read off an adapted basis, with `tau = 1`.
    pub fn from_basis(basis: &AdaptedBasis) -> Result<Self> {
        Self::new(
            basis.sigma_xy_norm(),
            basis.lambda1(),
            basis.lambda2(),
            basis.nu(),
            1.0,
        )
    }

    /// Coefficients from the closed forms in `(sigma2, rho, A)`, `tau = 1`.
    pub fn from_coefficients(sigma2: f64, rho: f64, alignment: f64) -> Result<Self> {
        let (l1, l2, nu) = crate::adapted_basis::effective_coefficients(sigma2, rho, alignment);
        Self::new(
            crate::adapted_basis::correlation_norm(sigma2, rho, alignment),
            l1,
            l2,
            nu,
            1.0,
        )
    }

    /// Early-phase saturation value `sqrt(|Sigma_xy| / lambda1)`.
    pub fn saturation(&self) -> f64 {
        (self.sigma_xy_norm / self.lambda1).sqrt()
    }

    /// Default integration step `1e-3 tau / max(lambda1, lambda2, |Sigma_xy|)`.
    pub fn default_dt(&self) -> f64 {
        1e-3 * self.tau / self.lambda1.max(self.lambda2).max(self.sigma_xy_norm)
    }
}

/// State of the reduced system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub w1: f64,
    pub w2: f64,
}

impl ReducedState {
    pub fn new(w1: f64, w2: f64) -> Self {
        Self { w1, w2 }
    }

    pub fn norm(&self) -> f64 {
        self.w1.hypot(self.w2)
    }
}

/// Right-hand side of the reduced system, `(dw1/dt, dw2/dt)`.
pub fn reduced_rhs(state: ReducedState, p: &ReducedParams) -> (f64, f64) {
    let q = state.w1 * state.w1 + state.w2 * state.w2;
    let dw1 = (p.sigma_xy_norm * q.sqrt() - p.lambda1 * state.w1 * q + p.nu * state.w2 * q) / p.tau;
    let dw2 = (p.nu * state.w1 * q - p.lambda2 * state.w2 * q) / p.tau;
    (dw1, dw2)
}

/// Reduced trajectory on a uniform time grid.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn w1_series(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.w1).collect()
    }

    pub fn w2_series(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.w2).collect()
    }

    /// Writes the trajectory as CSV with header `t,w1,w2`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .times
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| {
                vec![
                    crate::io::fmt_f64(t),
                    crate::io::fmt_f64(s.w1),
                    crate::io::fmt_f64(s.w2),
                ]
            })
            .collect();
        crate::io::write_csv(path, &["t", "w1", "w2"], &rows)
    }

    /// Linear interpolation at time `t` (clamped to the covered range).
    pub fn interpolate(&self, t: f64) -> ReducedState {
        if self.times.is_empty() {
            return ReducedState::new(f64::NAN, f64::NAN);
        }
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        if t <= first {
            return self.states[0];
        }
        if t >= last {
            return *self.states.last().unwrap();
        }
        let idx = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (s0, s1) = (self.states[idx - 1], self.states[idx]);
        let alpha = (t - t0) / (t1 - t0);
        ReducedState::new(
            s0.w1 + alpha * (s1.w1 - s0.w1),
            s0.w2 + alpha * (s1.w2 - s0.w2),
        )
    }
}

/// Integrates the reduced system with fixed-step fourth-order Runge-Kutta
/// from `init` to `t_end`, recording every step (including the initial
/// state). Fails if the state norm exceeds `1e6`.
pub fn integrate_reduced(
    p: &ReducedParams,
    init: ReducedState,
    t_end: f64,
    dt: f64,
) -> Result<ReducedTrajectory> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and t_end > 0; got dt = {dt}, t_end = {t_end}"
        )));
    }
    let steps = (t_end / dt).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut state = init;
    times.push(0.0);
    states.push(state);
    for k in 1..=steps {
        state = rk4_step(state, p, dt);
        if !state.w1.is_finite() || !state.w2.is_finite() || state.norm() > STATE_DIVERGENCE_LIMIT {
            return Err(Error::Divergence(format!(
                "reduced state left the admissible region at t = {}",
                k as f64 * dt
            )));
        }
        times.push(k as f64 * dt);
        states.push(state);
    }
    Ok(ReducedTrajectory { times, states })
}

fn rk4_step(s: ReducedState, p: &ReducedParams, dt: f64) -> ReducedState {
    let k1 = reduced_rhs(s, p);
    let k2 = reduced_rhs(
        ReducedState::new(s.w1 + 0.5 * dt * k1.0, s.w2 + 0.5 * dt * k1.1),
        p,
    );
    let k3 = reduced_rhs(
        ReducedState::new(s.w1 + 0.5 * dt * k2.0, s.w2 + 0.5 * dt * k2.1),
        p,
    );
    let k4 = reduced_rhs(ReducedState::new(s.w1 + dt * k3.0, s.w2 + dt * k3.1), p);
    ReducedState::new(
        s.w1 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        s.w2 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Sigmoidal early-phase magnitude
/// `u(t) = sqrt( (|Sigma_xy|/lambda1) / (1 + ((|Sigma_xy|/lambda1)/u0^2 - 1) e^{-2|Sigma_xy| t / tau}) )`.
pub fn early_phase_magnitude(t: f64, u0: f64, p: &ReducedParams) -> f64 {
    let sat2 = p.sigma_xy_norm / p.lambda1;
    let decay = (-2.0 * p.sigma_xy_norm * t / p.tau).exp();
    (sat2 / (1.0 + (sat2 / (u0 * u0) - 1.0) * decay)).sqrt()
}

/// Characteristic time of the early phase,
/// `(tau / 2|Sigma_xy|) log(|Sigma_xy| / (lambda1 s^2))`.
pub fn early_timescale(p: &ReducedParams, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("s = {s}, need s > 0")));
    }
    let ratio = p.sigma_xy_norm / (p.lambda1 * s * s);
    if ratio <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda1 s^2 = {} >= |Sigma_xy| = {}; initialization already saturated",
            p.lambda1 * s * s,
            p.sigma_xy_norm
        )));
    }
    Ok(p.tau / (2.0 * p.sigma_xy_norm) * ratio.ln())
}

/// Upper bound on the duration of the later phase until `w2` reaches
/// `(1 - e^{-delta}) w2*`:
///
/// ```text
/// tau/lambda2 [ (nu/lambda2) arctan((nu/lambda2)(1-e^{-delta}))
///               + 1/2 log(1 + ((nu/lambda2)(1-e^{-delta}))^2) + delta ]
/// ```
pub fn later_phase_bound(p: &ReducedParams, delta: f64) -> Result<f64> {
    if p.nu == 0.0 {
        return Err(Error::DegenerateInput(
            "nu = 0: no later phase exists".into(),
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta}, need delta > 0"
        )));
    }
    let kappa = p.nu / p.lambda2;
    let g = kappa * (1.0 - (-delta).exp());
    Ok(p.tau / p.lambda2 * (kappa * g.atan() + 0.5 * (1.0 + g * g).ln() + delta))
}

/// Non-trivial fixed point of the reduced system. For `nu > 0` this is
/// `w1* = 1/sqrt(1 + (nu/lambda2)^2)`, `w2* = (nu/lambda2) w1*` (unit norm);
/// for `nu = 0` the early-phase saturation point `(sqrt(|Sigma_xy|/lambda1), 0)`.
pub fn fixed_point(p: &ReducedParams) -> ReducedState {
    if p.nu > 0.0 {
        let kappa = p.nu / p.lambda2;
        let w1 = 1.0 / (1.0 + kappa * kappa).sqrt();
        ReducedState::new(w1, kappa * w1)
    } else {
        ReducedState::new(p.saturation(), 0.0)
    }
}

/// Measured phase times on a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct PhaseTimes {
    /// First recorded time at which `w1` reaches 99% of its saturation value.
    pub t1: f64,
    /// First recorded time at which `w2` reaches `(1 - e^{-delta}) w2*`;
    /// `None` when no later phase exists (`nu = 0`) or the threshold was
    /// never reached on the trajectory.
    pub t2: Option<f64>,
}

/// Detects the two phase times on a sampled `(t, w1, w2)` series. Fails when
/// the early-phase threshold `0.99 sqrt(|Sigma_xy|/lambda1)` is never reached.
pub fn detect_phases_series(
    times: &[f64],
    w1: &[f64],
    w2: &[f64],
    p: &ReducedParams,
    delta: f64,
) -> Result<PhaseTimes> {
    if times.len() != w1.len() || times.len() != w2.len() {
        return Err(Error::DimensionMismatch(
            "phase detection series lengths differ".into(),
        ));
    }
    let w1_threshold = 0.99 * p.saturation();
    let t1 = times
        .iter()
        .zip(w1)
        .find(|(_, &x)| x >= w1_threshold)
        .map(|(&t, _)| t)
        .ok_or_else(|| {
            Error::PhaseNotFound(format!(
                "w1 never reached 0.99 * saturation = {w1_threshold}"
            ))
        })?;
    let t2 = if p.nu > 0.0 {
        let w2_star = fixed_point(p).w2;
        let w2_threshold = (1.0 - (-delta).exp()) * w2_star;
        times
            .iter()
            .zip(w2)
            .find(|(_, &x)| x >= w2_threshold)
            .map(|(&t, _)| t)
    } else {
        None
    };
    Ok(PhaseTimes { t1, t2 })
}

/// Rectangular evaluation grid for the phase plane.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub w1_min: f64,
    pub w1_max: f64,
    pub w2_min: f64,
    pub w2_max: f64,
    pub n1: usize,
    pub n2: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.w1_max > self.w1_min && self.w2_max > self.w2_min) || self.n1 < 2 || self.n2 < 2 {
            return Err(Error::InvalidParameter(
                "grid must have positive extent and at least 2 points per axis".into(),
            ));
        }
        Ok(())
    }

    fn w1_at(&self, i: usize) -> f64 {
        self.w1_min + (self.w1_max - self.w1_min) * i as f64 / (self.n1 - 1) as f64
    }

    fn w2_at(&self, j: usize) -> f64 {
        self.w2_min + (self.w2_max - self.w2_min) * j as f64 / (self.n2 - 1) as f64
    }
}

/// One sampled vector-field point.
#[derive(Debug, Clone, Copy)]
pub struct FieldPoint {
    pub w1: f64,
    pub w2: f64,
    pub dw1: f64,
    pub dw2: f64,
}

/// Which component's nullcline a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullclineId {
    Dw1Zero,
    Dw2Zero,
}

impl NullclineId {
    pub fn label(&self) -> &'static str {
        match self {
            NullclineId::Dw1Zero => "dw1",
            NullclineId::Dw2Zero => "dw2",
        }
    }
}

/// Vector field samples plus nullclines extracted as zero contours.
#[derive(Debug, Clone)]
pub struct PhasePlaneField {
    pub points: Vec<FieldPoint>,
    /// Ordered `(w1, w2, which)` point lists, sorted by polar angle then
    /// radius about the origin.
    pub nullclines: Vec<(f64, f64, NullclineId)>,
}

/// Evaluates the vector field on the grid and extracts both nullclines as
/// linearly interpolated zero crossings of the grid samples. The origin is an
/// isolated exact zero of both components and is included explicitly whenever
/// the grid rectangle contains it.
pub fn phase_plane_field(p: &ReducedParams, grid: &GridSpec) -> Result<PhasePlaneField> {
    grid.validate()?;
    let mut points = Vec::with_capacity(grid.n1 * grid.n2);
    let mut dw1 = vec![0.0; grid.n1 * grid.n2];
    let mut dw2 = vec![0.0; grid.n1 * grid.n2];
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let (w1, w2) = (grid.w1_at(i), grid.w2_at(j));
            let (d1, d2) = reduced_rhs(ReducedState::new(w1, w2), p);
            dw1[i * grid.n2 + j] = d1;
            dw2[i * grid.n2 + j] = d2;
            points.push(FieldPoint {
                w1,
                w2,
                dw1: d1,
                dw2: d2,
            });
        }
    }

    let mut nullclines = Vec::new();
    for (values, id) in [(&dw1, NullclineId::Dw1Zero), (&dw2, NullclineId::Dw2Zero)] {
        let mut pts = zero_crossings(values, grid);
        let contains_origin =
            grid.w1_min <= 0.0 && grid.w1_max >= 0.0 && grid.w2_min <= 0.0 && grid.w2_max >= 0.0;
        if contains_origin {
            pts.push((0.0, 0.0));
        }
        pts.sort_by(|a, b| {
            let key = |p: &(f64, f64)| (f64::atan2(p.1, p.0), p.0.hypot(p.1));
            key(a).partial_cmp(&key(b)).unwrap()
        });
        pts.dedup();
        nullclines.extend(pts.into_iter().map(|(w1, w2)| (w1, w2, id)));
    }
    Ok(PhasePlaneField { points, nullclines })
}

fn zero_crossings(values: &[f64], grid: &GridSpec) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    let at = |i: usize, j: usize| values[i * grid.n2 + j];
    let mut push_edge = |fa: f64, fb: f64, a: (f64, f64), b: (f64, f64)| {
        if fa == 0.0 {
            pts.push(a);
        }
        if fa * fb < 0.0 {
            let alpha = fa / (fa - fb);
            pts.push((a.0 + alpha * (b.0 - a.0), a.1 + alpha * (b.1 - a.1)));
        }
    };
    for i in 0..grid.n1 {
        for j in 0..grid.n2 - 1 {
            push_edge(
                at(i, j),
                at(i, j + 1),
                (grid.w1_at(i), grid.w2_at(j)),
                (grid.w1_at(i), grid.w2_at(j + 1)),
            );
        }
    }
    for j in 0..grid.n2 {
        for i in 0..grid.n1 - 1 {
            push_edge(
                at(i, j),
                at(i + 1, j),
                (grid.w1_at(i), grid.w2_at(j)),
                (grid.w1_at(i + 1), grid.w2_at(j)),
            );
        }
    }
    // grid nodes that are exact zeros appear once per incident edge scan
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}
