//! Two-layer linear network `f(x) = aᵀ W x`, full-batch gradient descent,
//! and trajectory diagnostics.
//!
//! A gradient-descent step with learning rate `eta` is the forward-Euler
//! discretization of the gradient flow with time constant `tau = 1/(2 eta)`;
//! trajectories are reported on the dimensionless time axis
//! `t = 2 eta * step`, in which the flow has `tau = 1`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adapted_basis::AdaptedBasis;
use crate::error::{Error, Result};
use crate::reduced_dynamics::{self, PhaseTimes, ReducedParams};
use crate::rng::seeded_rng;
use crate::spiked_data::{Dataset, SpikedModel};

const WEIGHT_DIVERGENCE_LIMIT: f64 = 1e6;

/// Two-layer linear network weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet {
    /// First layer, `m x d`.
    pub w: DMatrix<f64>,
    /// Second layer, length `m`.
    pub a: DVector<f64>,
}

impl TwoLayerNet {
    pub fn width(&self) -> usize {
        self.w.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    /// End-to-end linear map `Wᵀ a`, the effective regression vector.
    pub fn effective_vector(&self) -> DVector<f64> {
        self.w.tr_mul(&self.a).column(0).into_owned()
    }

    fn max_weight(&self) -> f64 {
        self.w.amax().max(self.a.amax())
    }
}

/// Initializes `W_ij ~ N(0, s^2/d)` and `a_i ~ N(0, s^2/m)`, deterministic
/// given the seed. Draw order: the rows of `W` in order, each row's
/// entries in column order, followed by the entries of `a`.
pub fn init_network(m: usize, d: usize, s: f64, seed: u64) -> Result<TwoLayerNet> {
    if m < d || d < 2 {
        return Err(Error::DimensionMismatch(format!(
            "need m >= d >= 2, got m = {m}, d = {d}"
        )));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("s = {s}, need s > 0")));
    }
    let mut rng = seeded_rng(seed);
    let w_std = s / (d as f64).sqrt();
    let a_std = s / (m as f64).sqrt();
    let mut w = DMatrix::zeros(m, d);
    for i in 0..m {
        for j in 0..d {
            w[(i, j)] = w_std * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let a = DVector::from_fn(m, |_, _| a_std * rng.sample::<f64, _>(StandardNormal));
    Ok(TwoLayerNet { w, a })
}

/// Second moments driving the updates: a covariance, a correlation vector,
/// and the label second moment (needed to evaluate the loss).
#[derive(Debug, Clone)]
pub struct Moments {
    pub sigma: DMatrix<f64>,
    pub sigma_xy: DVector<f64>,
    pub y_second_moment: f64,
}

impl Moments {
    /// Population moments of a model.
    pub fn population(model: &SpikedModel) -> Self {
        Moments {
            sigma: model.population_covariance(),
            sigma_xy: model.input_output_correlation(),
            y_second_moment: model.label_second_moment(),
        }
    }

    /// Empirical moments of a dataset.
    pub fn empirical(data: &Dataset) -> Self {
        let (sigma, sigma_xy) = data.empirical_moments();
        Moments {
            sigma,
            sigma_xy,
            y_second_moment: data.label_second_moment(),
        }
    }

    /// Largest eigenvalue of the covariance, used by the stability guard.
    pub fn lambda_max(&self) -> f64 {
        self.sigma
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::NEG_INFINITY, |acc, &e| acc.max(e))
    }
}

/// Which second moments drive a training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentSource {
    Empirical,
    Population,
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Learning rate; the flow time constant is `tau = 1/(2 eta)`.
    pub eta: f64,
    pub max_steps: usize,
    /// Initialization scale.
    pub s: f64,
    pub seed: u64,
    pub record_every: usize,
    pub moments: MomentSource,
    /// Early-stop threshold on the loss; `None` selects the default
    /// `1e-12 * (label second moment)`.
    pub stop_loss: Option<f64>,
}

impl TrainConfig {
    pub fn new(eta: f64, max_steps: usize, s: f64, seed: u64) -> Self {
        TrainConfig {
            eta,
            max_steps,
            s,
            seed,
            record_every: 1,
            moments: MomentSource::Empirical,
            stop_loss: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !(self.s > 0.0) || self.max_steps == 0 || self.record_every == 0 {
            return Err(Error::InvalidParameter(format!(
                "need eta > 0, s > 0, max_steps >= 1, record_every >= 1 (got eta = {}, s = {}, max_steps = {}, record_every = {})",
                self.eta, self.s, self.max_steps, self.record_every
            )));
        }
        Ok(())
    }

    /// Stability guard `eta < 1/(2 lambda_max(Sigma))`, checked before the
    /// first step of a run.
    pub fn check_stability(&self, moments: &Moments) -> Result<()> {
        let lambda_max = moments.lambda_max();
        if self.eta * 2.0 * lambda_max >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "eta = {} violates the stability guard eta < 1/(2 lambda_max) = {}",
                self.eta,
                1.0 / (2.0 * lambda_max)
            )));
        }
        Ok(())
    }
}

/// Mean squared error on a dataset, `(1/n) sum (aᵀ W x_i - y_i)^2`.
pub fn loss(net: &TwoLayerNet, data: &Dataset) -> Result<f64> {
    if net.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "network input dim {} vs data dim {}",
            net.input_dim(),
            data.dim()
        )));
    }
    let c = net.effective_vector();
    let predictions = &data.x * &c;
    let residual = predictions - &data.y;
    Ok(residual.norm_squared() / data.n() as f64)
}

/// The same loss expressed through second moments:
/// `cᵀ Sigma c - 2 cᵀ Sigma_xy + E[y^2]` with `c = Wᵀ a`.
pub fn loss_from_moments(net: &TwoLayerNet, moments: &Moments) -> f64 {
    let c = net.effective_vector();
    let sc = &moments.sigma * &c;
    c.dot(&sc) - 2.0 * c.dot(&moments.sigma_xy) + moments.y_second_moment
}

/// One simultaneous forward-Euler step of both layers:
///
/// ```text
/// W <- W + 2 eta a (Sigma_xyᵀ - aᵀ W Sigma)
/// aᵀ <- aᵀ + 2 eta (Sigma_xyᵀ - aᵀ W Sigma) Wᵀ
/// ```
///
/// with both right-hand sides evaluated at the pre-step weights.
pub fn gradient_step(
    net: &TwoLayerNet,
    sigma: &DMatrix<f64>,
    sigma_xy: &DVector<f64>,
    eta: f64,
) -> Result<TwoLayerNet> {
    let mut next = net.clone();
    step_in_place(&mut next, sigma, sigma_xy, eta)?;
    Ok(next)
}

fn step_in_place(
    net: &mut TwoLayerNet,
    sigma: &DMatrix<f64>,
    sigma_xy: &DVector<f64>,
    eta: f64,
) -> Result<()> {
    let c = net.effective_vector();
    let residual = sigma_xy - sigma * c;
    let a_update = &net.w * &residual;
    net.w.ger(2.0 * eta, &net.a, &residual, 1.0);
    net.a.axpy(2.0 * eta, &a_update, 1.0);
    if !net.a.iter().all(|v| v.is_finite())
        || !net.w.iter().all(|v| v.is_finite())
        || net.max_weight() > WEIGHT_DIVERGENCE_LIMIT
    {
        return Err(Error::Divergence(format!(
            "weight magnitude exceeded {WEIGHT_DIVERGENCE_LIMIT:e}"
        )));
    }
    Ok(())
}

/// Frobenius norm of the drift of the conserved matrix:
/// `|(a aᵀ - W Wᵀ) - (a0 a0ᵀ - W0 W0ᵀ)|_F`.
pub fn conservation_residual(net: &TwoLayerNet, net0: &TwoLayerNet) -> Result<f64> {
    if net.width() != net0.width() || net.input_dim() != net0.input_dim() {
        return Err(Error::DimensionMismatch(
            "conservation residual needs identical shapes".into(),
        ));
    }
    let current = conserved_matrix(net);
    let initial = conserved_matrix(net0);
    Ok((current - initial).norm())
}

fn conserved_matrix(net: &TwoLayerNet) -> DMatrix<f64> {
    let mut m = &net.a * net.a.transpose();
    m.gemm(-1.0, &net.w, &net.w.transpose(), 1.0);
    m
}

/// Energy of the weight components orthogonal to the frozen growth
/// direction: `1/2 (|P a|^2 + |P W v1|^2 + |P W v2|^2)` with
/// `P = I - r1 r1ᵀ`.
pub fn deviation_energy(
    net: &TwoLayerNet,
    basis: &AdaptedBasis,
    r_hat1: &DVector<f64>,
) -> Result<f64> {
    if (r_hat1.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(
            "r_hat1 must be a unit vector".into(),
        ));
    }
    let perp_sq = |v: &DVector<f64>| {
        let along = r_hat1.dot(v);
        v.norm_squared() - along * along
    };
    let w1 = &net.w * &basis.v1();
    let w2 = &net.w * &basis.v2();
    Ok(0.5 * (perp_sq(&net.a) + perp_sq(&w1) + perp_sq(&w2)))
}

/// Initial growth magnitude `u(0) = |(W(0) v1 + a(0)) / 2|`, the natural
/// starting value for the reduced dynamics.
pub fn initial_growth_magnitude(net: &TwoLayerNet, basis: &AdaptedBasis) -> f64 {
    let w1 = &net.w * &basis.v1();
    ((w1 + &net.a) / 2.0).norm()
}

/// Recorded training trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub steps: Vec<u64>,
    /// Dimensionless times `t = 2 eta * step`.
    pub times: Vec<f64>,
    pub loss: Vec<f64>,
    /// `r1ᵀ W v1` over time.
    pub w1_proj: Vec<f64>,
    /// `r1ᵀ W v2` over time.
    pub w2_proj: Vec<f64>,
    /// `r1ᵀ a` over time.
    pub a_proj: Vec<f64>,
    pub conservation_residual: Vec<f64>,
    pub deviation_energy: Vec<f64>,
    /// Frozen unit growth direction `(W(0) v1 + a(0)) / 2`, normalized.
    pub r_hat1: DVector<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub const CSV_HEADER: [&'static str; 8] = [
        "step",
        "t_tilde",
        "loss",
        "w1_proj",
        "w2_proj",
        "a_proj",
        "conservation_residual",
        "deviation_energy",
    ];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.len()).map(|i| self.csv_rows_at(i)).collect()
    }

    pub fn csv_rows_at(&self, i: usize) -> Vec<String> {
        vec![
            self.steps[i].to_string(),
            crate::io::fmt_f64(self.times[i]),
            crate::io::fmt_f64(self.loss[i]),
            crate::io::fmt_f64(self.w1_proj[i]),
            crate::io::fmt_f64(self.w2_proj[i]),
            crate::io::fmt_f64(self.a_proj[i]),
            crate::io::fmt_f64(self.conservation_residual[i]),
            crate::io::fmt_f64(self.deviation_energy[i]),
        ]
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_csv(path, &Self::CSV_HEADER, &self.csv_rows())
    }
}

/// Outcome of a training run: the final weights plus the recorded
/// trajectory.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: TwoLayerNet,
    pub trajectory: TrajectoryRecord,
}

/// Runs full-batch gradient descent from `net` for up to `cfg.max_steps`
/// steps (early-stopping once the loss falls below the stop threshold),
/// recording diagnostics every `cfg.record_every` steps plus the initial
/// and final states.
pub fn train(
    net: &TwoLayerNet,
    moments: &Moments,
    basis: &AdaptedBasis,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    cfg.check_stability(moments)?;
    if net.input_dim() != basis.dim() || moments.sigma.nrows() != net.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "network dim {}, basis dim {}, moments dim {}",
            net.input_dim(),
            basis.dim(),
            moments.sigma.nrows()
        )));
    }

    let stop_loss = cfg.stop_loss.unwrap_or(1e-12 * moments.y_second_moment);
    let v1 = basis.v1();
    let v2 = basis.v2();
    let r1 = ((&net.w * &v1) + &net.a) / 2.0;
    let r_hat1 = if r1.norm() > 0.0 {
        r1.normalize()
    } else {
        return Err(Error::DegenerateInput(
            "initial growth direction has zero norm".into(),
        ));
    };

    let net0 = net.clone();
    let initial_conserved = conserved_matrix(&net0);
    let mut current = net.clone();

    let mut record = TrajectoryRecord {
        steps: Vec::new(),
        times: Vec::new(),
        loss: Vec::new(),
        w1_proj: Vec::new(),
        w2_proj: Vec::new(),
        a_proj: Vec::new(),
        conservation_residual: Vec::new(),
        deviation_energy: Vec::new(),
        r_hat1: r_hat1.clone(),
    };

    let mut push = |net: &TwoLayerNet, step: usize| {
        let w1 = &net.w * &v1;
        let w2 = &net.w * &v2;
        let residual = (conserved_matrix(net) - &initial_conserved).norm();
        let perp_sq = |v: &DVector<f64>| {
            let along = r_hat1.dot(v);
            v.norm_squared() - along * along
        };
        let energy = 0.5 * (perp_sq(&net.a) + perp_sq(&w1) + perp_sq(&w2));
        record.steps.push(step as u64);
        record.times.push(2.0 * cfg.eta * step as f64);
        record.loss.push(loss_from_moments(net, moments));
        record.w1_proj.push(r_hat1.dot(&w1));
        record.w2_proj.push(r_hat1.dot(&w2));
        record.a_proj.push(r_hat1.dot(&net.a));
        record.conservation_residual.push(residual);
        record.deviation_energy.push(energy);
    };

    push(&current, 0);
    for step in 1..=cfg.max_steps {
        step_in_place(&mut current, &moments.sigma, &moments.sigma_xy, cfg.eta)?;
        let due = step % cfg.record_every == 0;
        let stop = loss_from_moments(&current, moments) <= stop_loss;
        if due || stop || step == cfg.max_steps {
            push(&current, step);
            if stop {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        net: current,
        trajectory: record,
    })
}

/// Phase detection on a recorded trajectory, using the coefficients of the
/// basis the run was recorded against. `t1` is the first recorded time at
/// which `r1ᵀ W v1` reaches 99% of `sqrt(|Sigma_xy|/lambda1)`; `t2` the
/// first time `r1ᵀ W v2` reaches `(1 - e^{-delta}) w2*`.
pub fn detect_phases(
    traj: &TrajectoryRecord,
    basis: &AdaptedBasis,
    delta: f64,
) -> Result<PhaseTimes> {
    let p = ReducedParams::from_basis(basis)?;
    reduced_dynamics::detect_phases_series(&traj.times, &traj.w1_proj, &traj.w2_proj, &p, delta)
}
