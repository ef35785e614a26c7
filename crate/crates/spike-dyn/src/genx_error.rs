//! High-dimensional generalization error of ridgeless interpolation on
//! spiked-covariance data.
//!
//! The effective regularization `kappa(lambda)` solves the self-consistent
//! equation `1 = lambda/kappa + gamma sigma2/(kappa + sigma2)` (the single
//! spike carries vanishing spectral weight as `d -> infinity` and drops out
//! of the equation, but stays in the target decomposition). The ridge risk
//! is evaluated from `kappa` and its exact implicit derivative; the
//! ridgeless limit has the closed form
//!
//! ```text
//! R0 = sigma2 (1 - 1/gamma) [1 - A^2 (1 - gamma^2 (1+rho) / (gamma+rho)^2)]
//! ```
//!
//! which doubles as a permanent cross-check against `ridge_risk` at
//! `lambda -> 0+`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::spiked_data::{Dataset, SpikedModel};

/// Parameters of the high-dimensional risk problem.
#[derive(Debug, Clone, Copy)]
pub struct RiskModel {
    /// Overparameterization ratio `gamma = d/n`.
    pub gamma: f64,
    pub sigma2: f64,
    pub rho: f64,
    /// Spike-target alignment `A`.
    pub alignment: f64,
}

impl RiskModel {
    pub fn new(gamma: f64, sigma2: f64, rho: f64, alignment: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(sigma2 > 0.0) || !(rho >= 0.0) || !(0.0..=1.0).contains(&alignment) {
            return Err(Error::InvalidParameter(format!(
                "invalid risk model (gamma = {gamma}, sigma2 = {sigma2}, rho = {rho}, A = {alignment})"
            )));
        }
        Ok(Self {
            gamma,
            sigma2,
            rho,
            alignment,
        })
    }

    /// Spike eigenvalue `sigma2 (1 + rho)`.
    pub fn spike_eigenvalue(&self) -> f64 {
        self.sigma2 * (1.0 + self.rho)
    }

    /// Signal variance `E[y^2] = sigma2 (1 + rho A^2)`.
    pub fn signal_variance(&self) -> f64 {
        self.sigma2 * (1.0 + self.rho * self.alignment * self.alignment)
    }

    /// The spectral summary at input dimension `d`.
    pub fn spectrum(&self, d: usize) -> SpectrumSummary {
        SpectrumSummary {
            spike_eigenvalue: self.spike_eigenvalue(),
            bulk_eigenvalue: self.sigma2,
            bulk_multiplicity_fraction: (d.saturating_sub(1)) as f64 / d as f64,
        }
    }

    fn require_overparameterized(&self) -> Result<()> {
        if self.gamma <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} <= 1: the ridgeless limit needs gamma > 1",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Spectral summary of the spiked covariance: one spike eigenvalue plus an
/// isotropic bulk whose spectral weight `(d-1)/d` approaches 1, which is why
/// the spike drops out of the self-consistent equation as `d -> infinity`.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumSummary {
    pub spike_eigenvalue: f64,
    pub bulk_eigenvalue: f64,
    pub bulk_multiplicity_fraction: f64,
}

const KAPPA_RESIDUAL_TOL: f64 = 1e-12;

/// Solves `1 = lambda/kappa + gamma sigma2/(kappa + sigma2)` for the unique
/// positive `kappa`. The right-hand side is strictly decreasing in `kappa`,
/// so a bracketing bisection refined by Newton converges unconditionally.
/// At `lambda = 0` a positive solution exists only for `gamma > 1`.
pub fn solve_kappa(lambda: f64, m: &RiskModel) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda}, need lambda >= 0"
        )));
    }
    if lambda == 0.0 {
        m.require_overparameterized().map_err(|_| {
            Error::NoSolution(format!(
                "lambda = 0 with gamma = {} <= 1 admits no positive kappa",
                m.gamma
            ))
        })?;
        return Ok(m.sigma2 * (m.gamma - 1.0));
    }

    let residual = |kappa: f64| 1.0 - lambda / kappa - m.gamma * m.sigma2 / (kappa + m.sigma2);
    let mut lo = (lambda.min(m.sigma2) * 1e-6).max(1e-300);
    let mut hi = lambda + m.gamma * m.sigma2 + m.sigma2;
    debug_assert!(residual(hi) > 0.0);
    // residual(lo) < 0 for small enough lo; shrink if needed
    while residual(lo) > 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mut kappa = 0.5 * (lo + hi);
    // Newton polish; the derivative of the residual in kappa is positive
    for _ in 0..8 {
        let f = residual(kappa);
        let df = lambda / (kappa * kappa) + m.gamma * m.sigma2 / (kappa + m.sigma2).powi(2);
        let next = kappa - f / df;
        if next > 0.0 {
            kappa = next;
        }
        if f.abs() < 0.1 * KAPPA_RESIDUAL_TOL {
            break;
        }
    }
    let final_residual = residual(kappa);
    if final_residual.abs() > KAPPA_RESIDUAL_TOL {
        return Err(Error::NoSolution(format!(
            "kappa solver stalled at residual {final_residual:e}"
        )));
    }
    Ok(kappa)
}

/// Exact implicit derivative `dkappa/dlambda` at the solution of the
/// self-consistent equation.
pub fn kappa_derivative(lambda: f64, kappa: f64, m: &RiskModel) -> f64 {
    (1.0 / kappa) / (lambda / (kappa * kappa) + m.gamma * m.sigma2 / (kappa + m.sigma2).powi(2))
}

/// Ridgeless limits `(kappa0, kappa0') = (sigma2 (gamma - 1), gamma/(gamma - 1))`.
pub fn kappa_ridgeless_limit(m: &RiskModel) -> Result<(f64, f64)> {
    m.require_overparameterized()?;
    Ok((m.sigma2 * (m.gamma - 1.0), m.gamma / (m.gamma - 1.0)))
}

/// Ridge risk at regularization `lambda > 0`:
/// `kappa' kappa^2 [ l_spike/(kappa+l_spike)^2 A^2 + sigma2/(kappa+sigma2)^2 (1-A^2) ]`.
pub fn ridge_risk(lambda: f64, m: &RiskModel) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda}, need lambda > 0"
        )));
    }
    let kappa = solve_kappa(lambda, m)?;
    let dkappa = kappa_derivative(lambda, kappa, m);
    let spike = m.spike_eigenvalue();
    let a2 = m.alignment * m.alignment;
    let bracket =
        spike / (kappa + spike).powi(2) * a2 + m.sigma2 / (kappa + m.sigma2).powi(2) * (1.0 - a2);
    Ok(dkappa * kappa * kappa * bracket)
}

/// Closed-form ridgeless risk for `gamma > 1`:
/// `sigma2 (1 - 1/gamma) [1 - A^2 (1 - gamma^2 (1+rho)/(gamma+rho)^2)]`.
pub fn ridgeless_risk(m: &RiskModel) -> Result<f64> {
    m.require_overparameterized()?;
    let a2 = m.alignment * m.alignment;
    let g = m.gamma;
    let spike_gain = g * g * (1.0 + m.rho) / (g + m.rho).powi(2);
    Ok(m.sigma2 * (1.0 - 1.0 / g) * (1.0 - a2 * (1.0 - spike_gain)))
}

/// Ridgeless risk divided by the signal variance `sigma2 (1 + rho A^2)`.
pub fn normalized_risk(m: &RiskModel) -> Result<f64> {
    Ok(ridgeless_risk(m)? / m.signal_variance())
}

/// Minimum l2-norm interpolator `Xᵀ (X Xᵀ)⁺ y`, computed through the SVD of
/// `X` with singular values below `1e-12 * s_max` treated as zero.
pub fn min_norm_estimator(data: &Dataset) -> DVector<f64> {
    let svd = data.x.clone().svd(true, true);
    let s_max = svd
        .singular_values
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s));
    let cutoff = 1e-12 * s_max;
    let u = svd.u.as_ref().expect("svd computed with u");
    let vt = svd.v_t.as_ref().expect("svd computed with v_t");
    let mut coeffs = u.tr_mul(&data.y);
    for (i, c) in coeffs.iter_mut().enumerate() {
        let s = svd.singular_values[i];
        *c = if s > cutoff { *c / s } else { 0.0 };
    }
    vt.tr_mul(&coeffs).column(0).into_owned()
}

/// Population excess risk `(b - beta)ᵀ Sigma (b - beta)` of an estimator,
/// evaluated exactly through the rank-one structure of the covariance.
pub fn population_risk_of(beta_hat: &DVector<f64>, model: &SpikedModel) -> Result<f64> {
    if beta_hat.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "estimator dim {} vs model dim {}",
            beta_hat.len(),
            model.dim()
        )));
    }
    let e = beta_hat - model.beta();
    let along = model.mu().dot(&e);
    Ok(model.sigma2() * (e.norm_squared() + model.rho() * along * along))
}
