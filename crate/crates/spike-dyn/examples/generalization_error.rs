//! Ridgeless risk theory against minimum-norm interpolation experiments:
//! the effective-regularization solver, the closed-form risk, and a small
//! Monte-Carlo comparison.
//!
//! ```bash
//! cargo run --release --example generalization_error
//! ```

use spike_dyn::genx_error::{self, RiskModel};
use spike_dyn::rng::{split_seed, STREAM_DATA};
use spike_dyn::spiked_data::SpikedModel;

fn main() -> spike_dyn::Result<()> {
    // effective regularization at gamma = 3
    let m = RiskModel::new(3.0, 1.0, 20.0, 0.5)?;
    let (kappa0, dkappa0) = genx_error::kappa_ridgeless_limit(&m)?;
    println!(
        "kappa(1e-8) = {:.9}; ridgeless limit (kappa0, kappa0') = ({kappa0}, {dkappa0})",
        genx_error::solve_kappa(1e-8, &m)?
    );

    // the closed form and the ridge-limit route agree
    let closed = genx_error::ridgeless_risk(&m)?;
    let limit = genx_error::ridge_risk(1e-8, &m)?;
    println!("ridgeless risk: closed form {closed:.6} vs lambda -> 0 limit {limit:.6}");
    println!(
        "normalized by the signal variance {:.1}: {:.6}",
        m.signal_variance(),
        genx_error::normalized_risk(&m)?
    );

    // alignment sweep: an aligned spike helps, an orthogonal one does not
    println!("\n{:>5} {:>12} {:>12}", "A", "risk", "normalized");
    for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let m = RiskModel::new(3.0, 1.0, 20.0, a)?;
        println!(
            "{a:>5.2} {:>12.6} {:>12.6}",
            genx_error::ridgeless_risk(&m)?,
            genx_error::normalized_risk(&m)?
        );
    }

    // desk-scale Monte Carlo: min-norm interpolators vs the theory curve
    let d = 300;
    println!("\nmin-norm interpolation at d = {d}, rho = 20, A = 0.5 (8 trials per point):");
    println!(
        "{:>6} {:>12} {:>12} {:>10}",
        "gamma", "theory", "empirical", "std"
    );
    for gamma in [1.5, 2.0, 3.0, 5.0] {
        let n = (d as f64 / gamma).round() as usize;
        let model = SpikedModel::new(d, 1.0, 20.0, 0.5, None)?;
        let theory =
            genx_error::normalized_risk(&RiskModel::new(d as f64 / n as f64, 1.0, 20.0, 0.5)?)?;
        let mut trials = Vec::new();
        for seed in 0..8u64 {
            let data = model.sample(n, split_seed(seed, STREAM_DATA))?;
            let estimator = genx_error::min_norm_estimator(&data);
            trials.push(
                genx_error::population_risk_of(&estimator, &model)? / model.label_second_moment(),
            );
        }
        let mean = trials.iter().sum::<f64>() / trials.len() as f64;
        let std = (trials.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (trials.len() - 1) as f64)
            .sqrt();
        println!("{gamma:>6.2} {theory:>12.6} {mean:>12.6} {std:>10.2e}");
    }
    Ok(())
}
