//! Population model with a rank-one covariance spike, finite-sample draws,
//! and empirical second moments.
//!
//! The population is a centered Gaussian with covariance
//! `sigma2 * (I + rho * mu muᵀ)`: one eigenvalue `sigma2 * (1 + rho)` along
//! the spike direction `mu` and `d - 1` eigenvalues `sigma2` on the
//! orthogonal complement. Labels are noiseless linear responses
//! `y = betaᵀ x` for a unit target `beta` with alignment `A = muᵀ beta`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::seeded_rng;

const UNIT_NORM_TOL: f64 = 1e-12;

/// Population description: dimension, bulk variance, spike magnitude and
/// direction, target vector, and their alignment.
#[derive(Debug, Clone)]
pub struct SpikedModel {
    d: usize,
    sigma2: f64,
    rho: f64,
    mu: DVector<f64>,
    beta: DVector<f64>,
    alignment: f64,
}

impl SpikedModel {
    /// Builds a model with `mu = e1` and `beta = A e1 + sqrt(1 - A^2) e2`.
    ///
    /// With `rotate_seed`, both vectors are multiplied by the same seeded
    /// random orthogonal matrix (QR of a seeded Gaussian matrix, signs fixed
    /// so the diagonal of R is positive), which preserves the alignment.
    /// The rotation matrix consumes `d * d` standard normal draws in
    /// column-major order.
    pub fn new(
        d: usize,
        sigma2: f64,
        rho: f64,
        alignment: f64,
        rotate_seed: Option<u64>,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("d = {d}, need d >= 2")));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma2 = {sigma2}, need sigma2 > 0"
            )));
        }
        if !(rho >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rho = {rho}, need rho >= 0"
            )));
        }
        if !(0.0..=1.0).contains(&alignment) {
            return Err(Error::InvalidParameter(format!(
                "alignment = {alignment}, need 0 <= A <= 1"
            )));
        }

        let mut mu = DVector::zeros(d);
        mu[0] = 1.0;
        let mut beta = DVector::zeros(d);
        beta[0] = alignment;
        beta[1] = (1.0 - alignment * alignment).max(0.0).sqrt();

        if let Some(seed) = rotate_seed {
            let q = random_orthogonal(d, seed);
            mu = &q * mu;
            beta = &q * beta;
        }

        let model = Self {
            d,
            sigma2,
            rho,
            mu,
            beta,
            alignment,
        };
        model.check_invariants()?;
        Ok(model)
    }

    fn check_invariants(&self) -> Result<()> {
        let mu_norm = self.mu.norm();
        let beta_norm = self.beta.norm();
        if (mu_norm - 1.0).abs() > UNIT_NORM_TOL || (beta_norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "direction norms drifted: |mu| = {mu_norm}, |beta| = {beta_norm}"
            )));
        }
        let a = self.mu.dot(&self.beta);
        if (a - self.alignment).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "muᵀbeta = {a} disagrees with requested alignment {}",
                self.alignment
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    /// Spike-target alignment `A = muᵀ beta`.
    pub fn alignment(&self) -> f64 {
        self.alignment
    }

    /// Population covariance `sigma2 (I + rho mu muᵀ)`.
    pub fn population_covariance(&self) -> DMatrix<f64> {
        let mut cov = DMatrix::identity(self.d, self.d);
        cov.ger(self.rho, &self.mu, &self.mu, 1.0);
        cov *= self.sigma2;
        cov
    }

    /// Input-output correlation `Sigma beta = sigma2 (beta + rho A mu)`.
    pub fn input_output_correlation(&self) -> DVector<f64> {
        let mut v = self.beta.clone();
        v.axpy(self.rho * self.alignment, &self.mu, 1.0);
        v * self.sigma2
    }

    /// Signal second moment `E[y^2] = betaᵀ Sigma beta = sigma2 (1 + rho A^2)`.
    pub fn label_second_moment(&self) -> f64 {
        self.sigma2 * (1.0 + self.rho * self.alignment * self.alignment)
    }

    /// Draws `n` samples `x = Sigma^{1/2} z` with labels `y = betaᵀ x`.
    ///
    /// The square root is applied in its closed rank-one form
    /// `sigma (I + (sqrt(1 + rho) - 1) mu muᵀ)`, so each sample costs O(d).
    /// Sample `i` consumes the `d` standard normal draws numbered
    /// `i*d .. (i+1)*d` from the seeded generator, in index order.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidParameter("n = 0, need n >= 1".into()));
        }
        let mut rng = seeded_rng(seed);
        let sigma = self.sigma2.sqrt();
        let spike_gain = (1.0 + self.rho).sqrt() - 1.0;

        let mut x = DMatrix::zeros(n, self.d);
        let mut y = DVector::zeros(n);
        let mut z = DVector::zeros(self.d);
        for i in 0..n {
            for k in 0..self.d {
                z[k] = rng.sample::<f64, _>(StandardNormal);
            }
            let along_spike = self.mu.dot(&z);
            let mut row = z.clone();
            row.axpy(spike_gain * along_spike, &self.mu, 1.0);
            row *= sigma;
            y[i] = self.beta.dot(&row);
            x.row_mut(i).copy_from(&row.transpose());
        }
        Ok(Dataset { x, y })
    }
}

/// Seeded Haar-like orthogonal matrix: QR of a Gaussian matrix with the
/// signs fixed so the diagonal of R is positive.
fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeded_rng(seed);
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// A finite sample: design matrix `x` (rows are samples) and labels `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Empirical label second moment `(1/n) sum y_i^2`.
    pub fn label_second_moment(&self) -> f64 {
        self.y.norm_squared() / self.n() as f64
    }

    /// Empirical moments `(Sigma_hat, Sigma_xy_hat) = (XᵀX/n, Xᵀy/n)`.
    pub fn empirical_moments(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.n() as f64;
        let cov = self.x.tr_mul(&self.x) / n;
        let xy = self.x.tr_mul(&self.y) / n;
        (cov, xy.column(0).into_owned())
    }

    /// Writes the sample as CSV with header `x_1,...,x_d,y`, one sample per
    /// line, 17 significant digits per value.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut record: Vec<String> = (0..self.dim())
                .map(|j| crate::io::fmt_f64(self.x[(i, j)]))
                .collect();
            record.push(crate::io::fmt_f64(self.y[i]));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a sample from the CSV format written by [`Dataset::write_csv`].
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols = header.len();
        if cols < 2 || header.get(cols - 1) != Some("y") {
            return Err(Error::Csv(csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "expected header x_1,...,x_d,y",
            ))));
        }
        let d = cols - 1;
        let mut rows: Vec<f64> = Vec::new();
        let mut labels: Vec<f64> = Vec::new();
        for record in r.records() {
            let record = record?;
            for j in 0..d {
                rows.push(parse_field(record.get(j))?);
            }
            labels.push(parse_field(record.get(d))?);
        }
        let n = labels.len();
        if n == 0 {
            return Err(Error::DegenerateInput("empty dataset".into()));
        }
        Ok(Dataset {
            x: DMatrix::from_row_slice(n, d, &rows),
            y: DVector::from_vec(labels),
        })
    }
}

fn parse_field(field: Option<&str>) -> Result<f64> {
    field
        .and_then(|f| f.trim().parse::<f64>().ok())
        .ok_or_else(|| {
            Error::Csv(csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "non-numeric field in dataset CSV",
            )))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn canonical_embedding_perfect_alignment() {
        let m = SpikedModel::new(3, 1.0, 0.0, 1.0, None).unwrap();
        assert_eq!(m.mu(), m.beta());
        assert_relative_eq!(m.mu()[0], 1.0);
    }

    #[test]
    fn canonical_embedding_orthogonal() {
        let m = SpikedModel::new(3, 1.0, 5.0, 0.0, None).unwrap();
        assert_relative_eq!(m.mu().dot(m.beta()), 0.0);
    }

    #[test]
    fn rotation_preserves_alignment_and_norms() {
        let m = SpikedModel::new(30, 1.0, 20.0, 0.3, Some(7)).unwrap();
        assert!((m.mu().dot(m.beta()) - 0.3).abs() < 1e-12);
        assert!((m.mu().norm() - 1.0).abs() < 1e-12);
        assert!((m.beta().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpikedModel::new(1, 1.0, 0.0, 0.5, None).is_err());
        assert!(SpikedModel::new(3, 0.0, 0.0, 0.5, None).is_err());
        assert!(SpikedModel::new(3, 1.0, -1.0, 0.5, None).is_err());
        assert!(SpikedModel::new(3, 1.0, 1.0, 1.5, None).is_err());
        assert!(SpikedModel::new(3, 1.0, 1.0, -0.1, None).is_err());
    }

    #[test]
    fn covariance_isotropic_when_rho_zero() {
        let m = SpikedModel::new(4, 2.0, 0.0, 0.5, None).unwrap();
        let cov = m.population_covariance();
        assert_relative_eq!(cov, DMatrix::identity(4, 4) * 2.0, epsilon = 1e-14);
    }

    #[test]
    fn covariance_axis_aligned_spike() {
        let m = SpikedModel::new(2, 1.0, 3.0, 1.0, None).unwrap();
        let cov = m.population_covariance();
        assert_relative_eq!(cov[(0, 0)], 4.0, epsilon = 1e-14);
        assert_relative_eq!(cov[(1, 1)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(cov[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn covariance_spectrum_is_spike_plus_bulk() {
        // sigma2=2, rho=20, generic mu: largest eigenvalue 42, others 2.
        let m = SpikedModel::new(6, 2.0, 20.0, 0.4, Some(3)).unwrap();
        let cov = m.population_covariance();
        let mut eigs: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(eigs[5], 42.0, epsilon = 1e-10);
        for &e in &eigs[..5] {
            assert_relative_eq!(e, 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn correlation_norm_matches_closed_form() {
        let m = SpikedModel::new(30, 1.0, 20.0, 0.3, Some(11)).unwrap();
        let sigma_xy = m.input_output_correlation();
        // norm of Sigma beta: sigma2 sqrt(1 + ((1+rho)^2 - 1) A^2)
        assert_relative_eq!(sigma_xy.norm(), 40.6f64.sqrt(), epsilon = 1e-12);
        // cross-check against the explicit matrix product
        let explicit = m.population_covariance() * m.beta();
        assert_relative_eq!(sigma_xy, explicit, epsilon = 1e-12);
    }

    #[test]
    fn correlation_isotropic_reduces_to_beta() {
        let m = SpikedModel::new(5, 3.0, 0.0, 0.7, None).unwrap();
        let v = m.input_output_correlation();
        assert_relative_eq!(v, m.beta() * 3.0, epsilon = 1e-14);
        assert_relative_eq!(v.norm(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn single_sample_label_is_exact() {
        let m = SpikedModel::new(8, 1.0, 4.0, 0.6, Some(2)).unwrap();
        let data = m.sample(1, 9).unwrap();
        let x0 = data.x.row(0).transpose();
        assert_eq!(data.y[0], m.beta().dot(&x0));
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let m = SpikedModel::new(5, 1.0, 2.0, 0.4, None).unwrap();
        let a = m.sample(32, 123).unwrap();
        let b = m.sample(32, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_moments_track_population_spike() {
        // muᵀ Sigma_hat mu within 5% of sigma2 (1 + rho) at n = 1e5.
        let m = SpikedModel::new(30, 1.0, 20.0, 0.3, None).unwrap();
        let data = m.sample(100_000, 5).unwrap();
        let (cov, xy) = data.empirical_moments();
        let along = (&cov * m.mu()).dot(m.mu());
        assert!((along - 21.0).abs() / 21.0 < 0.05, "muᵀΣ̂mu = {along}");
        // noiseless labels make Sigma_xy_hat = Sigma_hat beta an identity
        let identity = &cov * m.beta();
        assert_relative_eq!(xy, identity, epsilon = 1e-10);
    }

    #[test]
    fn empirical_covariance_error_decreases_with_n() {
        let m = SpikedModel::new(5, 1.0, 0.0, 0.5, None).unwrap();
        let pop = m.population_covariance();
        let mut errors = Vec::new();
        for (i, n) in [1_000usize, 10_000, 100_000].into_iter().enumerate() {
            let data = m.sample(n, 40 + i as u64).unwrap();
            let (cov, _) = data.empirical_moments();
            errors.push((cov - &pop).norm());
        }
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
        // Monte-Carlo check: n = 1e6 isotropic samples agree with sigma2 I
        // entrywise to 0.01
        let data = m.sample(1_000_000, 77).unwrap();
        let (cov, _) = data.empirical_moments();
        assert!((cov - &pop).amax() < 0.01);
    }

    #[test]
    fn single_point_moments() {
        let data = Dataset {
            x: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            y: DVector::from_vec(vec![2.0]),
        };
        let (cov, xy) = data.empirical_moments();
        assert_eq!(cov, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(xy, DVector::from_vec(vec![2.0, 0.0]));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = SpikedModel::new(4, 1.5, 3.0, 0.2, Some(1)).unwrap();
        let data = m.sample(10, 6).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(data, back);
    }
}
