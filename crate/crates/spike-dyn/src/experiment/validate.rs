//! Cross-cutting invariant suite behind `spike-dyn validate`: every check
//! exercises an identity or scaling law through two independent routes and
//! reports pass/fail without throwing.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::manifest::{ManifestBuilder, RunManifest};
use crate::adapted_basis::{self, AdaptedBasis};
use crate::error::Result;
use crate::genx_error::{self, RiskModel};
use crate::linear_net::{self, MomentSource, Moments, TrainConfig};
use crate::reduced_dynamics::{self, ReducedParams, ReducedState};
use crate::rng::seeded_rng;
use crate::spiked_data::SpikedModel;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub all_passed: bool,
    pub checks: Vec<CheckResult>,
}

/// Options for the validation run. `corrupt_check` zeroes the tolerance of
/// the named check, a fault-injection hook used to confirm the suite can
/// fail.
#[derive(Debug, Default, Clone)]
pub struct ValidationOptions {
    pub corrupt_check: Option<String>,
}

struct Suite {
    opts: ValidationOptions,
    checks: Vec<CheckResult>,
}

impl Suite {
    fn tolerance(&self, name: &str, tol: f64) -> f64 {
        match &self.opts.corrupt_check {
            Some(target) if target == name => 0.0,
            _ => tol,
        }
    }

    /// For window/inequality checks the corrupted tolerance is an empty
    /// acceptance window.
    fn window(&self, name: &str, center: f64, half_width: f64) -> (f64, f64) {
        match &self.opts.corrupt_check {
            Some(target) if target == name => (center, center - 1.0),
            _ => (center - half_width, center + half_width),
        }
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

/// Runs every invariant check once and collects the results; failures are
/// reported, not thrown.
pub fn run_validation(opts: ValidationOptions) -> ValidationReport {
    let mut suite = Suite {
        opts,
        checks: Vec::new(),
    };
    basis_oracle_equivalence(&mut suite);
    rotation_invariance(&mut suite);
    ode_residual(&mut suite);
    rk4_order(&mut suite);
    early_phase_consistency(&mut suite);
    fixed_point_consistency(&mut suite);
    timescale_bound(&mut suite);
    kappa_residual(&mut suite);
    ridge_ridgeless_consistency(&mut suite);
    min_norm_ridge_duality(&mut suite);
    conservation_eta_scaling(&mut suite);
    deviation_energy_scaling(&mut suite);
    let all_passed = suite.checks.iter().all(|c| c.passed);
    ValidationReport {
        all_passed,
        checks: suite.checks,
    }
}

/// Runs the suite and writes `validation.json` into the run directory.
pub fn run_and_write(
    cfg: &super::config::ExperimentConfig,
    dir: &Path,
    opts: ValidationOptions,
) -> Result<(RunManifest, ValidationReport)> {
    let mut mb = ManifestBuilder::new("validate", cfg, dir);
    let report = run_validation(opts);
    let path = mb.path("validation.json");
    crate::io::write_json(&path, &report)?;
    crate::io::verify_json(&path)?;
    mb.record_artifact("validation.json");
    if !report.all_passed {
        mb.warn("one or more validation checks failed");
    }
    let manifest = mb.finish()?;
    Ok((manifest, report))
}

fn basis_oracle_equivalence(suite: &mut Suite) {
    use rand::Rng;
    let tol = suite.tolerance("basis_oracle_equivalence", 1e-10);
    let mut rng = seeded_rng(2024);
    let mut worst = 0.0f64;
    let mut failure = None;
    for _ in 0..200 {
        let sigma2 = 0.5 + 3.5 * rng.random::<f64>();
        let rho = 50.0 * rng.random::<f64>();
        let a = rng.random::<f64>();
        let scale = sigma2 * (1.0 + rho);
        let model = match SpikedModel::new(7, sigma2, rho, a, None) {
            Ok(m) => m,
            Err(e) => {
                failure = Some(format!("model construction failed: {e}"));
                break;
            }
        };
        let basis = match AdaptedBasis::from_model(&model) {
            Ok(b) => b,
            Err(e) => {
                failure = Some(format!("basis construction failed: {e}"));
                break;
            }
        };
        let (l1, l2, nu) = adapted_basis::effective_coefficients(sigma2, rho, a);
        let norm = adapted_basis::correlation_norm(sigma2, rho, a);
        let (m1, m2) = adapted_basis::spike_basis_overlaps(rho, a);
        for (got, want) in [
            (basis.sigma_xy_norm(), norm),
            (basis.lambda1(), l1),
            (basis.lambda2(), l2),
            (basis.nu(), nu),
            (basis.overlap1() * scale, m1 * scale),
            (basis.overlap2() * scale, m2 * scale),
        ] {
            worst = worst.max((got - want).abs() / scale);
        }
    }
    let passed = failure.is_none() && worst <= tol;
    let detail = failure.unwrap_or(format!(
        "worst scaled deviation {worst:.3e} (tolerance {tol:.3e}) over 200 triples"
    ));
    suite.push("basis_oracle_equivalence", passed, detail);
}

fn rotation_invariance(suite: &mut Suite) {
    let tol = suite.tolerance("rotation_invariance", 1e-10);
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let plain = SpikedModel::new(9, 1.0, 20.0, 0.3, None).unwrap();
        let rotated = SpikedModel::new(9, 1.0, 20.0, 0.3, Some(seed)).unwrap();
        let bp = AdaptedBasis::from_model(&plain).unwrap();
        let br = AdaptedBasis::from_model(&rotated).unwrap();
        for (x, y) in [
            (bp.sigma_xy_norm(), br.sigma_xy_norm()),
            (bp.lambda1(), br.lambda1()),
            (bp.lambda2(), br.lambda2()),
            (bp.nu(), br.nu()),
            (bp.overlap1(), br.overlap1()),
            (bp.overlap2(), br.overlap2()),
        ] {
            worst = worst.max((x - y).abs());
        }
    }
    suite.push(
        "rotation_invariance",
        worst <= tol,
        format!("worst deviation {worst:.3e} over 20 rotations (tolerance {tol:.3e})"),
    );
}

fn ode_residual(suite: &mut Suite) {
    let p = ReducedParams::from_coefficients(1.0, 20.0, 0.3).unwrap();
    let dt = 1e-4;
    let scale = p.sigma_xy_norm.max(p.lambda1);
    let tol = suite.tolerance("ode_residual", 50.0 * dt * dt * scale * scale);
    let traj =
        reduced_dynamics::integrate_reduced(&p, ReducedState::new(1e-3, 1e-6), 3.0, dt).unwrap();
    let mut worst = 0.0f64;
    for i in (1..traj.len() - 1).step_by(31) {
        let fd1 = (traj.states[i + 1].w1 - traj.states[i - 1].w1) / (2.0 * dt);
        let fd2 = (traj.states[i + 1].w2 - traj.states[i - 1].w2) / (2.0 * dt);
        let (d1, d2) = reduced_dynamics::reduced_rhs(traj.states[i], &p);
        worst = worst.max((fd1 - d1).abs()).max((fd2 - d2).abs());
    }
    suite.push(
        "ode_residual",
        worst <= tol,
        format!("worst central-difference residual {worst:.3e} (tolerance {tol:.3e})"),
    );
}

fn rk4_order(suite: &mut Suite) {
    let p = ReducedParams::from_coefficients(1.0, 20.0, 0.3).unwrap();
    let init = ReducedState::new(1e-3, 1e-6);
    let reference = reduced_dynamics::integrate_reduced(&p, init, 2.0, 1e-5).unwrap();
    let truth = *reference.states.last().unwrap();
    let endpoint = |dt: f64| {
        let t = reduced_dynamics::integrate_reduced(&p, init, 2.0, dt).unwrap();
        let s = *t.states.last().unwrap();
        (s.w1 - truth.w1).hypot(s.w2 - truth.w2)
    };
    let ratio = endpoint(4e-3) / endpoint(2e-3);
    let (lo, hi) = suite.window("rk4_order", 16.0, 12.0);
    let passed = ratio >= lo && ratio <= hi;
    suite.push(
        "rk4_order",
        passed,
        format!("halving dt reduced the endpoint error by {ratio:.2}x (expected ~16x)"),
    );
}

fn early_phase_consistency(suite: &mut Suite) {
    // with nu = 0 the reduced system is exactly the early-phase equation
    let tol = suite.tolerance("early_phase_consistency", 1e-6);
    let p = ReducedParams::new(2.0, 3.0, 1.0, 0.0, 1.0).unwrap();
    let u0 = 1e-4;
    let traj =
        reduced_dynamics::integrate_reduced(&p, ReducedState::new(u0, 0.0), 8.0, 1e-4).unwrap();
    let mut worst = 0.0f64;
    for (i, &t) in traj.times.iter().enumerate().step_by(200) {
        let expected = reduced_dynamics::early_phase_magnitude(t, u0, &p);
        worst = worst.max((traj.states[i].w1 - expected).abs());
    }
    suite.push(
        "early_phase_consistency",
        worst <= tol,
        format!("worst |w1 - u(t)| = {worst:.3e} (tolerance {tol:.3e})"),
    );
}

fn fixed_point_consistency(suite: &mut Suite) {
    let tol = suite.tolerance("fixed_point_consistency", 1e-10);
    let mut worst = 0.0f64;
    for rho in [5.0, 20.0, 50.0] {
        for a in [0.1, 0.5, 0.9] {
            let p = ReducedParams::from_coefficients(1.0, rho, a).unwrap();
            let star = reduced_dynamics::fixed_point(&p);
            let (d1, d2) = reduced_dynamics::reduced_rhs(star, &p);
            worst = worst.max(d1.abs()).max(d2.abs());
        }
    }
    suite.push(
        "fixed_point_consistency",
        worst <= tol,
        format!("worst |rhs| at the fixed point {worst:.3e} (tolerance {tol:.3e})"),
    );
}

fn timescale_bound(suite: &mut Suite) {
    let bound_scale = suite.tolerance("timescale_bound", 1.0);
    let mut detail = String::new();
    let mut passed = true;
    for rho in [5.0, 20.0] {
        for a in [0.3, 0.7] {
            let p = ReducedParams::from_coefficients(1.0, rho, a).unwrap();
            let traj = reduced_dynamics::integrate_reduced(
                &p,
                ReducedState::new(1e-5, 1e-8),
                30.0,
                p.default_dt(),
            )
            .unwrap();
            let phases = reduced_dynamics::detect_phases_series(
                &traj.times,
                &traj.w1_series(),
                &traj.w2_series(),
                &p,
                3.0,
            )
            .unwrap();
            let bound = bound_scale * reduced_dynamics::later_phase_bound(&p, 3.0).unwrap();
            match phases.t2 {
                Some(t2) if t2 - phases.t1 <= bound => {}
                Some(t2) => {
                    passed = false;
                    detail = format!(
                        "rho={rho}, A={a}: t2-t1 = {} exceeds bound {bound}",
                        t2 - phases.t1
                    );
                }
                None => {
                    passed = false;
                    detail = format!("rho={rho}, A={a}: later phase not reached");
                }
            }
        }
    }
    if passed {
        detail = "measured t2-t1 within the analytic bound on a 2x2 sweep, delta = 3".into();
    }
    suite.push("timescale_bound", passed, detail);
}

fn kappa_residual(suite: &mut Suite) {
    let tol = suite.tolerance("kappa_residual", 1e-12);
    let mut worst = 0.0f64;
    for gamma in [1.2, 2.0, 5.0] {
        for lambda in [1e-8, 1e-2, 1.0, 50.0] {
            let m = RiskModel::new(gamma, 1.0, 0.0, 0.0).unwrap();
            let k = genx_error::solve_kappa(lambda, &m).unwrap();
            worst = worst.max((1.0 - lambda / k - gamma / (k + 1.0)).abs());
        }
    }
    suite.push(
        "kappa_residual",
        worst <= tol,
        format!("worst self-consistency residual {worst:.3e} (tolerance {tol:.3e})"),
    );
}

fn ridge_ridgeless_consistency(suite: &mut Suite) {
    let tol = suite.tolerance("ridge_ridgeless_consistency", 1e-4);
    let mut worst = 0.0f64;
    for gamma in [1.5, 2.0, 3.0, 5.0] {
        for rho in [0.0, 5.0, 20.0] {
            for a in [0.0, 0.3, 0.5, 1.0] {
                let m = RiskModel::new(gamma, 1.0, rho, a).unwrap();
                let limit = genx_error::ridge_risk(1e-8, &m).unwrap();
                let closed = genx_error::ridgeless_risk(&m).unwrap();
                worst = worst.max((limit - closed).abs());
            }
        }
    }
    suite.push(
        "ridge_ridgeless_consistency",
        worst <= tol,
        format!("worst |ridge(1e-8) - ridgeless| = {worst:.3e} (tolerance {tol:.3e})"),
    );
}

fn min_norm_ridge_duality(suite: &mut Suite) {
    let tol = suite.tolerance("min_norm_ridge_duality", 1e-6);
    let model = SpikedModel::new(40, 1.0, 10.0, 0.4, None).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..3u64 {
        let data = model.sample(12, seed).unwrap();
        let b0 = genx_error::min_norm_estimator(&data);
        // ridge path through the dual form, well-conditioned for d > n
        let n = data.n() as f64;
        let lambda = 1e-10;
        let gram = &data.x * data.x.transpose()
            + nalgebra::DMatrix::identity(data.n(), data.n()) * (lambda * n);
        let dual = gram.cholesky().unwrap().solve(&data.y);
        let ridge = data.x.tr_mul(&dual).column(0).into_owned();
        worst = worst.max((&b0 - &ridge).norm() / b0.norm());
    }
    suite.push(
        "min_norm_ridge_duality",
        worst <= tol,
        format!("worst relative gap to the ridge path {worst:.3e} (tolerance {tol:.3e})"),
    );
}

fn conservation_eta_scaling(suite: &mut Suite) {
    let (lo, hi) = suite.window("conservation_eta_scaling", 2.0, 0.4);
    let model = SpikedModel::new(8, 1.0, 5.0, 0.5, None).unwrap();
    let moments = Moments::population(&model);
    let basis = AdaptedBasis::from_model(&model).unwrap();
    let net0 = linear_net::init_network(12, 8, 1e-4, 19).unwrap();
    let residual_at = |eta: f64| {
        let steps = (4.0 / (2.0 * eta)).round() as usize;
        let mut cfg = TrainConfig::new(eta, steps, 1e-4, 19);
        cfg.record_every = steps;
        cfg.moments = MomentSource::Population;
        cfg.stop_loss = Some(0.0);
        let out = linear_net::train(&net0, &moments, &basis, &cfg).unwrap();
        *out.trajectory.conservation_residual.last().unwrap()
    };
    let ratio = residual_at(4e-3) / residual_at(2e-3);
    let passed = ratio >= lo && ratio <= hi;
    suite.push(
        "conservation_eta_scaling",
        passed,
        format!("halving eta changed the residual by {ratio:.3}x (expected ~2x)"),
    );
}

fn deviation_energy_scaling(suite: &mut Suite) {
    let (lo, hi) = suite.window("deviation_energy_scaling", 4.0, 1.5);
    let model = SpikedModel::new(8, 1.0, 20.0, 0.3, None).unwrap();
    let moments = Moments::population(&model);
    let basis = AdaptedBasis::from_model(&model).unwrap();
    let max_energy = |s: f64| {
        let net = linear_net::init_network(12, 8, s, 7).unwrap();
        let mut cfg = TrainConfig::new(2e-3, 3000, s, 7);
        cfg.record_every = 5;
        cfg.moments = MomentSource::Population;
        let out = linear_net::train(&net, &moments, &basis, &cfg).unwrap();
        out.trajectory
            .deviation_energy
            .iter()
            .fold(0.0f64, |acc, &e| acc.max(e))
    };
    let ratio = max_energy(1e-4) / max_energy(5e-5);
    let passed = ratio >= lo && ratio <= hi;
    suite.push(
        "deviation_energy_scaling",
        passed,
        format!("halving s changed max deviation energy by {ratio:.3}x (expected ~4x)"),
    );
}
