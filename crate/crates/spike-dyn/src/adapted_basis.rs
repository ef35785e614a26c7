//! Orthonormal basis adapted to the data structure and its scalar
//! coefficients.
//!
//! The first basis vector points along the input-output correlation,
//! `v1 = Sigma_xy / |Sigma_xy|`; the second completes the span of
//! `{Sigma_xy, beta}` with its sign chosen so the coupling `nu = -v1ᵀ Sigma v2`
//! is non-negative; the rest complete an orthonormal basis of R^d.
//!
//! Every coefficient is available by two independent routes: quadratic forms
//! against an explicit covariance matrix ([`build_basis`]) and closed forms
//! in `(sigma2, rho, A)` ([`effective_coefficients`] and friends). Each route
//! serves as the other's test oracle.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spiked_data::SpikedModel;

const PARALLEL_TOL: f64 = 1e-10;
const ORTHONORMAL_TOL: f64 = 1e-10;

/// Adapted orthonormal basis with the effective scalar coefficients of the
/// restricted covariance.
#[derive(Debug, Clone)]
pub struct AdaptedBasis {
    v: DMatrix<f64>,
    sigma_xy_norm: f64,
    lambda1: f64,
    lambda2: f64,
    nu: f64,
    overlap1: f64,
    overlap2: f64,
    parallel: bool,
}

impl AdaptedBasis {
    /// Basis from the population matrices of a model, with overlaps taken
    /// against the model's exact spike direction.
    pub fn from_model(model: &SpikedModel) -> Result<Self> {
        let sigma = model.population_covariance();
        let sigma_xy = model.input_output_correlation();
        build_with_spike(&sigma, &sigma_xy, model.beta(), Some(model.mu()))
    }

    /// Basis from externally supplied (e.g. empirical) moments, with overlaps
    /// taken against the model's exact spike direction rather than an
    /// eigenvector recovered from the noisy covariance.
    pub fn from_moments(
        sigma: &DMatrix<f64>,
        sigma_xy: &DVector<f64>,
        model: &SpikedModel,
    ) -> Result<Self> {
        build_with_spike(sigma, sigma_xy, model.beta(), Some(model.mu()))
    }

    /// Basis matrix with columns `v1..vd`.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn v1(&self) -> DVector<f64> {
        self.v.column(0).into_owned()
    }

    pub fn v2(&self) -> DVector<f64> {
        self.v.column(1).into_owned()
    }

    /// Norm of the input-output correlation `|Sigma_xy|`.
    pub fn sigma_xy_norm(&self) -> f64 {
        self.sigma_xy_norm
    }

    /// Data variance along `v1`: `lambda1 = v1ᵀ Sigma v1`.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Data variance along `v2`: `lambda2 = v2ᵀ Sigma v2`.
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Coupling `nu = -v1ᵀ Sigma v2 >= 0`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Spike overlap `muᵀ v1`.
    pub fn overlap1(&self) -> f64 {
        self.overlap1
    }

    /// Spike overlap `muᵀ v2`.
    pub fn overlap2(&self) -> f64 {
        self.overlap2
    }

    /// True when `Sigma_xy` and `beta` are parallel and `v2` is an arbitrary
    /// (deterministically chosen) completion vector.
    pub fn parallel(&self) -> bool {
        self.parallel
    }

    pub fn to_json(&self) -> Result<String> {
        let record = BasisRecord::from(self);
        Ok(serde_json::to_string_pretty(&record)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: BasisRecord = serde_json::from_str(text)?;
        record.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct BasisRecord {
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
    sigma_xy_norm: f64,
    lambda1: f64,
    lambda2: f64,
    nu: f64,
    overlap1: f64,
    overlap2: f64,
    parallel: bool,
}

impl From<&AdaptedBasis> for BasisRecord {
    fn from(b: &AdaptedBasis) -> Self {
        let d = b.dim();
        let v = (0..d)
            .map(|i| (0..d).map(|j| b.v[(i, j)]).collect())
            .collect();
        BasisRecord {
            v,
            sigma_xy_norm: b.sigma_xy_norm,
            lambda1: b.lambda1,
            lambda2: b.lambda2,
            nu: b.nu,
            overlap1: b.overlap1,
            overlap2: b.overlap2,
            parallel: b.parallel,
        }
    }
}

impl TryFrom<BasisRecord> for AdaptedBasis {
    type Error = Error;

    fn try_from(r: BasisRecord) -> Result<Self> {
        let d = r.v.len();
        if d == 0 || r.v.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch(
                "basis matrix is not square".into(),
            ));
        }
        let v = DMatrix::from_fn(d, d, |i, j| r.v[i][j]);
        Ok(AdaptedBasis {
            v,
            sigma_xy_norm: r.sigma_xy_norm,
            lambda1: r.lambda1,
            lambda2: r.lambda2,
            nu: r.nu,
            overlap1: r.overlap1,
            overlap2: r.overlap2,
            parallel: r.parallel,
        })
    }
}

/// Builds the adapted basis from an explicit covariance, correlation vector,
/// and target. Coefficients come from matrix quadratic forms; the spike
/// direction for the overlaps is recovered as the leading eigenvector of
/// `Sigma` (sign fixed so `muᵀ beta >= 0`), falling back to `v1` when the
/// spectrum is isotropic and no spike is identifiable.
pub fn build_basis(
    sigma: &DMatrix<f64>,
    sigma_xy: &DVector<f64>,
    beta: &DVector<f64>,
) -> Result<AdaptedBasis> {
    build_with_spike(sigma, sigma_xy, beta, None)
}

fn build_with_spike(
    sigma: &DMatrix<f64>,
    sigma_xy: &DVector<f64>,
    beta: &DVector<f64>,
    mu: Option<&DVector<f64>>,
) -> Result<AdaptedBasis> {
    let d = sigma.nrows();
    if sigma.ncols() != d || sigma_xy.len() != d || beta.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "Sigma {}x{}, Sigma_xy {}, beta {}",
            sigma.nrows(),
            sigma.ncols(),
            sigma_xy.len(),
            beta.len()
        )));
    }
    let norm = sigma_xy.norm();
    if norm <= 1e-300 {
        return Err(Error::DegenerateInput(
            "input-output correlation has zero norm".into(),
        ));
    }

    let v1 = sigma_xy / norm;

    // v2: unit vector in span{Sigma_xy, beta} orthogonal to v1, when the span
    // is two-dimensional; otherwise the first completion vector.
    let mut residual = beta.clone();
    residual.axpy(-v1.dot(beta), &v1, 1.0);
    let parallel = residual.norm() < PARALLEL_TOL * beta.norm();

    let mut columns: Vec<DVector<f64>> = vec![v1.clone()];
    let mut v2 = if parallel {
        first_completion(&columns, d)
    } else {
        residual.normalize()
    };
    // sign convention: nu = -v1ᵀ Sigma v2 >= 0
    if v1.dot(&(sigma * &v2)) > 0.0 {
        v2 = -v2;
    }
    columns.push(v2.clone());
    complete_basis(&mut columns, d);

    let v = DMatrix::from_columns(&columns);
    let gram_defect = (v.tr_mul(&v) - DMatrix::identity(d, d)).amax();
    if gram_defect > ORTHONORMAL_TOL {
        return Err(Error::DegenerateInput(format!(
            "basis completion lost orthonormality (defect {gram_defect:.3e})"
        )));
    }

    let sigma_v1 = sigma * &v1;
    let sigma_v2 = sigma * &v2;
    let lambda1 = v1.dot(&sigma_v1);
    let lambda2 = v2.dot(&sigma_v2);
    let nu = -v1.dot(&sigma_v2);
    if lambda1 * lambda2 - nu * nu < -1e-9 * lambda1.max(lambda2).powi(2) {
        return Err(Error::InvalidParameter(format!(
            "restricted covariance not PSD: lambda1 lambda2 - nu^2 = {}",
            lambda1 * lambda2 - nu * nu
        )));
    }

    let spike = match mu {
        Some(m) => m.clone(),
        None => recover_spike(sigma, beta, &v1, &v2),
    };
    let overlap1 = spike.dot(&v1);
    let overlap2 = spike.dot(&v2);

    Ok(AdaptedBasis {
        v,
        sigma_xy_norm: norm,
        lambda1,
        lambda2,
        nu: nu.max(0.0),
        overlap1,
        overlap2,
        parallel,
    })
}

/// Leading eigenvector of Sigma, sign fixed so `muᵀ beta >= 0` (falling back
/// to `muᵀ v2 <= 0` when beta is orthogonal to it). Returns `v1` when the
/// spectrum carries no identifiable spike.
fn recover_spike(
    sigma: &DMatrix<f64>,
    beta: &DVector<f64>,
    v1: &DVector<f64>,
    v2: &DVector<f64>,
) -> DVector<f64> {
    let eig = sigma.clone().symmetric_eigen();
    let mut top = 0;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        if e > hi {
            hi = e;
            top = i;
        }
        lo = lo.min(e);
    }
    if hi - lo <= 1e-10 * hi.abs().max(1.0) {
        return v1.clone();
    }
    let mut spike = eig.eigenvectors.column(top).into_owned();
    let along_beta = spike.dot(beta);
    if along_beta < 0.0 || (along_beta.abs() <= 1e-12 && spike.dot(v2) > 0.0) {
        spike = -spike;
    }
    spike
}

/// First standard basis vector with a non-negligible component orthogonal to
/// the columns collected so far, orthonormalized against them.
fn first_completion(columns: &[DVector<f64>], d: usize) -> DVector<f64> {
    for j in 0..d {
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        if let Some(u) = orthogonalize(&e, columns) {
            return u;
        }
    }
    unreachable!("fewer than d orthonormal columns always leave a completion direction");
}

/// Completes `columns` to an orthonormal basis of R^d by modified
/// Gram-Schmidt over the standard basis, with one re-orthogonalization pass.
/// Deterministic given the input columns.
fn complete_basis(columns: &mut Vec<DVector<f64>>, d: usize) {
    let mut j = 0;
    while columns.len() < d && j < d {
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        if let Some(u) = orthogonalize(&e, columns) {
            columns.push(u);
        }
        j += 1;
    }
    debug_assert_eq!(columns.len(), d);
}

fn orthogonalize(x: &DVector<f64>, columns: &[DVector<f64>]) -> Option<DVector<f64>> {
    let mut u = x.clone();
    for _ in 0..2 {
        for c in columns {
            let proj = c.dot(&u);
            u.axpy(-proj, c, 1.0);
        }
    }
    let n = u.norm();
    if n < 1e-8 {
        None
    } else {
        Some(u / n)
    }
}

/// Closed form for `|Sigma_xy| = sigma2 sqrt(1 + ((1+rho)^2 - 1) A^2)`.
pub fn correlation_norm(sigma2: f64, rho: f64, alignment: f64) -> f64 {
    let a2 = alignment * alignment;
    sigma2 * (1.0 + (((1.0 + rho) * (1.0 + rho)) - 1.0) * a2).sqrt()
}

/// Closed forms for the spike-basis overlaps `(muᵀ v1, muᵀ v2)`:
/// `muᵀ v1 = (1+rho) A / sqrt(1 + ((1+rho)^2 - 1) A^2)` and
/// `muᵀ v2 = -sqrt(1 - (muᵀ v1)^2)`.
pub fn spike_basis_overlaps(rho: f64, alignment: f64) -> (f64, f64) {
    let a2 = alignment * alignment;
    let denom = (1.0 + (((1.0 + rho) * (1.0 + rho)) - 1.0) * a2).sqrt();
    let m1 = (1.0 + rho) * alignment / denom;
    let m2 = -(1.0 - m1 * m1).max(0.0).sqrt();
    (m1, m2)
}

/// Closed forms for `(lambda1, lambda2, nu)`:
///
/// ```text
/// lambda1 = sigma2 [1 + rho (1+rho)^2 A^2 / D]
/// lambda2 = sigma2 [1 + rho (1 - (1+rho)^2 A^2 / D)]
/// nu      = sigma2 rho (1+rho) A sqrt(1-A^2) / D
/// ```
///
/// with `D = 1 + ((1+rho)^2 - 1) A^2`.
pub fn effective_coefficients(sigma2: f64, rho: f64, alignment: f64) -> (f64, f64, f64) {
    let a2 = alignment * alignment;
    let one_rho = 1.0 + rho;
    let d = 1.0 + (one_rho * one_rho - 1.0) * a2;
    let frac = one_rho * one_rho * a2 / d;
    let lambda1 = sigma2 * (1.0 + rho * frac);
    let lambda2 = sigma2 * (1.0 + rho * (1.0 - frac));
    let nu = sigma2 * rho * one_rho * alignment * (1.0 - a2).max(0.0).sqrt() / d;
    (lambda1, lambda2, nu)
}
