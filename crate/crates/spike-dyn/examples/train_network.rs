//! Train the two-layer network at the standard phase-plane settings and
//! watch the two learning phases in the recorded diagnostics.
//!
//! ```bash
//! cargo run --release --example train_network
//! ```

use spike_dyn::adapted_basis::AdaptedBasis;
use spike_dyn::linear_net::{self, MomentSource, Moments, TrainConfig};
use spike_dyn::reduced_dynamics::{self, ReducedParams};
use spike_dyn::spiked_data::SpikedModel;

fn main() -> spike_dyn::Result<()> {
    let model = SpikedModel::new(30, 1.0, 20.0, 0.3, None)?;
    let data = model.sample(10_000, 1)?;
    let moments = Moments::empirical(&data);
    let basis = AdaptedBasis::from_moments(&moments.sigma, &moments.sigma_xy, &model)?;
    let params = ReducedParams::from_basis(&basis)?;

    let net = linear_net::init_network(50, 30, 1e-5, 2)?;
    let mut cfg = TrainConfig::new(5e-4, 24_000, 1e-5, 2);
    cfg.record_every = 20;
    cfg.moments = MomentSource::Empirical;

    let out = linear_net::train(&net, &moments, &basis, &cfg)?;
    let traj = &out.trajectory;
    println!(
        "trained {} steps (t = {:.1}), loss {:.3e} -> {:.3e}",
        traj.steps.last().unwrap(),
        traj.times.last().unwrap(),
        traj.loss[0],
        traj.loss.last().unwrap()
    );

    let phases = linear_net::detect_phases(traj, &basis, 3.0)?;
    println!(
        "early phase saturates at t1 = {:.2} (analytic timescale {:.2})",
        phases.t1,
        reduced_dynamics::early_timescale(&params, cfg.s)?
    );
    if let Some(t2) = phases.t2 {
        println!(
            "later phase reaches (1 - e^-3) w2* at t2 = {t2:.2} \
             (bound on t2 - t1: {:.2})",
            reduced_dynamics::later_phase_bound(&params, 3.0)?
        );
    }

    // a few milestones along the run
    println!(
        "\n{:>8} {:>10} {:>10} {:>10} {:>12}",
        "t", "loss", "w1", "w2", "energy"
    );
    for &t in &[0.0, 1.0, 1.5, 2.0, 3.0, 6.0, 10.0] {
        let i = traj.times.partition_point(|&x| x < t).min(traj.len() - 1);
        println!(
            "{:>8.2} {:>10.3e} {:>10.5} {:>10.5} {:>12.3e}",
            traj.times[i], traj.loss[i], traj.w1_proj[i], traj.w2_proj[i], traj.deviation_energy[i]
        );
    }

    // the end-to-end map recovers the target
    let gap = (out.net.effective_vector() - model.beta()).norm();
    println!("\n|Wᵀa - beta| at the end of training: {gap:.3e}");

    let path = std::env::temp_dir().join("spike_dyn_trajectory.csv");
    traj.write_csv(&path)?;
    println!("trajectory written to {}", path.display());
    Ok(())
}
