use lognls_core::fluids::{
    evolve_fluid_gaussian, fluid_energies, fluid_residual_1d, rigidity_checks,
    FluidFunctionals, FluidGaussianInit, PressureLaw,
};
use lognls_core::spectral::FftCache;
use lognls_core::{Grid, TauMode, TauScaler};
use num_complex::Complex64;

use super::{fmt, ScenarioIo};
use crate::config::{KeySpec, Params};
use crate::CliError;

pub const SCHEMA: &[KeySpec] = &[
    KeySpec::optional("eps", "0.0", "capillarity"),
    KeySpec::optional("nu", "0.0", "viscosity"),
    KeySpec::optional("beta0", "0.25", "initial variance of the gaussian ansatz"),
    KeySpec::optional("omega0", "0.0", "initial velocity slope"),
    KeySpec::optional("mass", "1.0", "total mass"),
    KeySpec::optional("t_end", "50.0", "integration horizon"),
    KeySpec::optional("tol", "1e-12", "integrator tolerance"),
    KeySpec::optional("samples", "501", "number of CSV samples"),
    KeySpec::optional("grid_n", "512", "physical grid for the residual oracle"),
    KeySpec::optional("grid_length", "40.0", "physical box for the residual oracle"),
    KeySpec::optional("rgrid_n", "256", "rescaled-frame grid"),
    KeySpec::optional("rgrid_length", "24.0", "rescaled-frame box"),
    KeySpec::optional("residual_tol", "1e-8", "PDE residual gate"),
    KeySpec::optional("dissipation_tol", "1e-5", "energy dissipation identity gate"),
    KeySpec::optional("bd_balance_tol", "1e-4", "BD-entropy balance gate"),
];

/// Quadrature energy of the physical state: (1/2) int rho u^2
/// + (eps^2/2) int |d sqrt(rho)|^2 + int rho ln rho.
fn quadrature_energy(
    traj: &lognls_core::fluids::FluidGaussianTrajectory,
    grid: &Grid,
    eps: f64,
    t: f64,
) -> Result<f64, CliError> {
    let rho = traj.density(t, grid)?;
    let omega = traj.omega(t)?;
    let mut cache = FftCache::for_grid(grid);
    let mut hat: Vec<Complex64> = rho
        .values()
        .iter()
        .map(|&v| Complex64::new(v.sqrt(), 0.0))
        .collect();
    cache.forward(grid, &mut hat);
    for (i, z) in hat.iter_mut().enumerate() {
        *z *= Complex64::new(0.0, grid.wavenumber_deriv(i));
    }
    cache.inverse(grid, &mut hat);
    let mut e = 0.0;
    for (i, &r) in rho.values().iter().enumerate() {
        let x = grid.coordinate(i);
        e += 0.5 * r * omega * omega * x * x;
        e += 0.5 * eps * eps * hat[i].re * hat[i].re;
        if r > 0.0 {
            e += r * r.ln();
        }
    }
    Ok(e * grid.cell_volume())
}

pub fn run(params: &Params, io: &mut ScenarioIo) -> Result<(), CliError> {
    let eps = params.get_f64("eps")?;
    let nu = params.get_f64("nu")?;
    let init = FluidGaussianInit {
        mass: params.get_f64("mass")?,
        beta0: params.get_f64("beta0")?,
        omega0: params.get_f64("omega0")?,
        capillarity: eps,
        viscosity: nu,
    };
    let t_end = params.get_f64("t_end")?;
    let tol = params.get_f64("tol")?;
    let traj = evolve_fluid_gaussian(init, t_end, tol)?;
    let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, t_end + 1.0, tol)?;

    let grid = Grid::new(1, params.get_usize("grid_n")?, params.get_f64("grid_length")?)?;
    let rgrid = Grid::new(
        1,
        params.get_usize("rgrid_n")?,
        params.get_f64("rgrid_length")?,
    )?;

    // the physical box holds the spreading gaussian only up to some horizon
    let box_limit = {
        let max_sigma = grid.box_length() / 15.0;
        let mut t = 0.0;
        let step = t_end / 400.0;
        while t + step <= t_end && traj.beta(t + step)?.sqrt() < max_sigma {
            t += step;
        }
        t
    };
    io.note("physical_box_horizon", fmt(box_limit));

    // PDE residual oracle on the physical grid
    let residual_tol = params.get_f64("residual_tol")?;
    let mut max_res = 0.0f64;
    for i in 0..=4 {
        let t = box_limit * i as f64 / 4.0;
        let st = traj.state(t, &grid)?;
        let omega = traj.omega(t)?;
        let u: Vec<f64> = (0..grid.size())
            .map(|j| omega * grid.coordinate(j))
            .collect();
        let du = vec![omega; grid.size()];
        let (drho, dmom) = traj.time_derivatives(t, &grid)?;
        let (r1, r2) = fluid_residual_1d(
            &grid,
            st.rho.values(),
            &u,
            &du,
            &drho,
            &dmom,
            eps,
            nu,
            PressureLaw::Isothermal,
        )?;
        max_res = max_res.max(r1).max(r2);
    }
    io.check(
        "pde_residual",
        max_res < residual_tol,
        format!("max residual {max_res:.3e} (tolerance {residual_tol:.1e})"),
    );

    // energy dissipation identity dE/dt = -nu int rho |D u|^2
    let t_mid = 0.5 * box_limit;
    let fd = 1e-4;
    let de = (quadrature_energy(&traj, &grid, eps, t_mid + fd)?
        - quadrature_energy(&traj, &grid, eps, t_mid - fd)?)
        / (2.0 * fd);
    let expect = traj.dissipation_closed_form(t_mid)?;
    let dissipation_tol = params.get_f64("dissipation_tol")?;
    io.check(
        "energy_dissipation",
        (de - expect).abs() < dissipation_tol,
        format!(
            "dE/dt = {de:.8e} vs -nu int rho |Du|^2 = {expect:.8e} (tolerance {dissipation_tol:.1e})"
        ),
    );

    // rescaled-frame samples and the CSV
    let samples = params.get_usize("samples")?.max(3);
    let mut rows = Vec::with_capacity(samples);
    let mut series: Vec<(f64, FluidFunctionals)> = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = t_end * i as f64 / (samples - 1) as f64;
        let st = traj.rescaled_state(&scaler, t, &rgrid)?;
        let f = fluid_energies(&st, &scaler, t)?;
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt(t),
            fmt(traj.beta(t)?),
            fmt(traj.omega(t)?),
            fmt(f.pseudo_energy),
            fmt(f.dissipation),
            fmt(f.bd_entropy),
            fmt(f.bd_dissipation),
            fmt(f.first_moment[0]),
            fmt(f.second_moment)
        ));
        series.push((t, f));
    }
    io.write_csv(
        "fluids.csv",
        "t,beta,omega,E,D,EBD,DBD,moment1,moment2",
        &rows,
    )?;

    // pseudo-energy balance: dE/dt = -D - nu (tau'/tau^3) int R div U
    let dt_s = t_end / (samples - 1) as f64;
    let mut max_balance = 0.0f64;
    for k in 1..series.len() - 1 {
        let (t, f) = &series[k];
        let de = (series[k + 1].1.pseudo_energy - series[k - 1].1.pseudo_energy) / (2.0 * dt_s);
        let tau = scaler.tau(*t)?;
        let rhs = -f.dissipation - nu * scaler.tau_dot(*t)? / tau.powi(3) * f.r_div_u;
        max_balance = max_balance.max((de - rhs).abs());
    }
    io.check(
        "pseudo_energy_balance",
        max_balance < 1e-5,
        format!("max |dE/dt + D + nu (tau'/tau^3) int R div U| = {max_balance:.3e}"),
    );

    // BD-entropy balance, time integrals by the trapezoid rule on the samples
    let bd_tol = params.get_f64("bd_balance_tol")?;
    let mut int_dbd = 0.0;
    let mut int_mass_term = 0.0;
    let mut int_divu_term = 0.0;
    let mut max_bd_residual = 0.0f64;
    for k in 1..series.len() {
        let (t0, f0) = &series[k - 1];
        let (t1, f1) = &series[k];
        let h = t1 - t0;
        int_dbd += 0.5 * h * (f0.bd_dissipation + f1.bd_dissipation);
        let g = |t: &f64, f: &FluidFunctionals| -> Result<(f64, f64), CliError> {
            let tau = scaler.tau(*t)?;
            Ok((
                nu * 2.0 * 1.0 / (tau * tau) * f.mass,
                nu * scaler.tau_dot(*t)? / tau.powi(3) * f.r_div_u,
            ))
        };
        let (m0, d0) = g(t0, f0)?;
        let (m1, d1) = g(t1, f1)?;
        int_mass_term += 0.5 * h * (m0 + m1);
        int_divu_term += 0.5 * h * (d0 + d1);
        let lhs = f1.bd_entropy + int_dbd;
        let rhs = series[0].1.bd_entropy + int_mass_term + int_divu_term;
        max_bd_residual = max_bd_residual.max((lhs - rhs).abs());
    }
    io.check(
        "bd_entropy_balance",
        max_bd_residual < bd_tol,
        format!("max balance residual {max_bd_residual:.3e} (tolerance {bd_tol:.1e})"),
    );

    // rigidity: hypotheses reported, second-moment trend checked past the
    // transient of the width oscillator
    let window: Vec<(f64, FluidFunctionals)> = series
        .iter()
        .filter(|(t, _)| *t >= (5.0f64).min(0.5 * t_end))
        .cloned()
        .collect();
    let rep = rigidity_checks(&window)?;
    io.note("dissipation_integral", fmt(rep.dissipation_integral));
    io.note("sup_pseudo_energy", fmt(rep.sup_pseudo_energy));
    io.note("energy_bound_sup", fmt(rep.energy_bound_sup));
    io.note("max_abs_first_moment", fmt(rep.max_abs_first_moment));
    io.note(
        "second_moment_gap",
        format!(
            "{} -> {}",
            fmt(rep.second_moment_gap_start),
            fmt(rep.second_moment_gap_end)
        ),
    );
    io.check(
        "rigidity_trend",
        rep.second_moment_gap_monotone
            && rep.second_moment_gap_end <= rep.second_moment_gap_start,
        format!(
            "normalized second moment gap {:.4e} -> {:.4e}, monotone = {}",
            rep.second_moment_gap_start,
            rep.second_moment_gap_end,
            rep.second_moment_gap_monotone
        ),
    );
    Ok(())
}
