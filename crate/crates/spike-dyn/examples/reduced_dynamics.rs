//! Integrate the two-variable reduction of the training dynamics: the
//! sigmoidal early phase, the coupled later phase, the fixed point, and the
//! phase-plane geometry.
//!
//! ```bash
//! cargo run --release --example reduced_dynamics
//! ```

use spike_dyn::reduced_dynamics::{self, GridSpec, NullclineId, ReducedParams, ReducedState};

fn main() -> spike_dyn::Result<()> {
    let p = ReducedParams::from_coefficients(1.0, 20.0, 0.3)?;
    println!(
        "coefficients: |Sigma_xy| = {:.4}, lambda1 = {:.4}, lambda2 = {:.4}, nu = {:.4}",
        p.sigma_xy_norm, p.lambda1, p.lambda2, p.nu
    );

    let star = reduced_dynamics::fixed_point(&p);
    println!(
        "fixed point: (w1*, w2*) = ({:.4}, {:.4}), norm {:.6}",
        star.w1,
        star.w2,
        star.norm()
    );

    let u0 = 1e-5;
    let traj = reduced_dynamics::integrate_reduced(
        &p,
        ReducedState::new(u0, 1e-3 * u0),
        12.0,
        p.default_dt(),
    )?;
    let end = traj.states.last().unwrap();
    println!(
        "RK4 from ({u0:.0e}, {:.0e}) over t = 12: endpoint ({:.6}, {:.6})",
        1e-3 * u0,
        end.w1,
        end.w2
    );

    let phases = reduced_dynamics::detect_phases_series(
        &traj.times,
        &traj.w1_series(),
        &traj.w2_series(),
        &p,
        3.0,
    )?;
    println!(
        "phases: t1 = {:.3}, t2 = {:.3}, bound on t2 - t1 = {:.3}",
        phases.t1,
        phases.t2.unwrap(),
        reduced_dynamics::later_phase_bound(&p, 3.0)?
    );
    println!(
        "early timescale at s = 1e-5: {:.3}; saturation sqrt(|Sigma_xy|/lambda1) = {:.4}",
        reduced_dynamics::early_timescale(&p, 1e-5)?,
        p.saturation()
    );

    // the early-phase solution is exact while w2 is negligible
    let t_probe = 1.0;
    let analytic = reduced_dynamics::early_phase_magnitude(t_probe, u0, &p);
    let numeric = traj.interpolate(t_probe).w1;
    println!("u({t_probe}) analytic {analytic:.6e} vs RK4 {numeric:.6e}");

    let grid = GridSpec {
        w1_min: 0.0,
        w1_max: 0.8,
        w2_min: 0.0,
        w2_max: 1.1,
        n1: 41,
        n2: 41,
    };
    let field = reduced_dynamics::phase_plane_field(&p, &grid)?;
    let count = |id: NullclineId| {
        field
            .nullclines
            .iter()
            .filter(|(_, _, which)| *which == id)
            .count()
    };
    println!(
        "phase plane: {} field samples, nullcline points: dw1 = 0 -> {}, dw2 = 0 -> {}",
        field.points.len(),
        count(NullclineId::Dw1Zero),
        count(NullclineId::Dw2Zero)
    );
    Ok(())
}
