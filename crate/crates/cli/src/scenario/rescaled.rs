use num_complex::Complex64;

use lognls_core::diagnostics::{self, DiagnosticsRecord};
use lognls_core::grid::gamma_l2_norm;
use lognls_core::solver::{evolve, EvolveOptions, NlsKind, NlsProblem};
use lognls_core::transforms::to_rescaled_frame;
use lognls_core::{Field, Grid, TauMode, TauScaler};

use super::{fmt, ScenarioIo};
use crate::config::{ConfigError, KeySpec, Params};
use crate::CliError;

pub const SCHEMA: &[KeySpec] = &[
    KeySpec::optional("lambda", "1.0", "coupling (> 0)"),
    KeySpec::optional("eps", "1e-10", "regularization of the logarithm"),
    KeySpec::required("grid_n", "points per axis (power of two)"),
    KeySpec::required("grid_length", "box side length of the rescaled frame"),
    KeySpec::required("dt", "time step after t_switch"),
    KeySpec::optional("dt_early", "5e-4", "time step before t_switch"),
    KeySpec::optional("t_switch", "10.0", "where the step schedule switches"),
    KeySpec::required("t_end", "final time"),
    KeySpec::optional("record_every", "200", "diagnostics cadence in steps"),
    KeySpec::optional("tau_tol", "1e-12", "tau integrator tolerance"),
    KeySpec::optional("datum", "gamma_bump", "gamma_bump | gaussian"),
    KeySpec::optional("bump_amp", "0.3", "gamma_bump: bump amplitude"),
    KeySpec::optional("bump_center", "1.0", "gamma_bump: bump center"),
    KeySpec::optional("bump_width", "4.0", "gamma_bump: exponent scale"),
    KeySpec::optional("alpha0", "1.0", "gaussian datum: Re a(0)"),
    KeySpec::optional("beta0", "0.0", "gaussian datum: Im a(0)"),
    KeySpec::optional("com_tol", "1e-6", "center-of-mass closed-form gate, per (1+t)"),
    KeySpec::optional("pe_slack", "5e-8", "allowed pseudo-energy increase per sample"),
];

pub fn run(params: &Params, io: &mut ScenarioIo) -> Result<(), CliError> {
    let lambda = params.get_f64("lambda")?;
    if !(lambda > 0.0) {
        return Err(ConfigError::general("rescaled runs need lambda > 0").into());
    }
    let dim = 1usize;
    let grid = Grid::new(dim, params.get_usize("grid_n")?, params.get_f64("grid_length")?)?;
    let t_end = params.get_f64("t_end")?;
    let t_switch = params.get_f64("t_switch")?.min(t_end);
    let dt_early = params.get_f64("dt_early")?;
    let dt = params.get_f64("dt")?;
    let scaler = TauScaler::solve(
        TauMode::Logarithmic { lambda },
        t_end * 1.001 + 1.0,
        params.get_f64("tau_tol")?,
    )?;

    let u0 = match params.get_str("datum")?.as_str() {
        "gamma_bump" => {
            let amp = params.get_f64("bump_amp")?;
            let c = params.get_f64("bump_center")?;
            let w = params.get_f64("bump_width")?;
            Field::from_fn(grid, |x| {
                Complex64::new(
                    (-0.5 * x[0] * x[0]).exp() + amp * (-w * (x[0] - c) * (x[0] - c)).exp(),
                    0.0,
                )
            })
        }
        "gaussian" => super::evolve::gaussian_datum(
            grid,
            params.get_f64("alpha0")?,
            params.get_f64("beta0")?,
            Complex64::new(1.0, 0.0),
        ),
        other => {
            return Err(ConfigError::general(format!("unknown datum `{other}`")).into())
        }
    };
    let mass_ref = u0.l2_norm();
    let v0 = to_rescaled_frame(&u0, &scaler, 0.0, mass_ref, &grid)?;

    let mk_problem = |step: f64| {
        NlsProblem::new(
            NlsKind::RescaledLog {
                lambda,
                reg_eps: params.get_f64("eps").unwrap(),
                scaler: scaler.clone(),
            },
            grid,
            step,
        )
    };
    let record_every = params.get_usize("record_every")?;
    let phase1 = evolve(
        &mk_problem(dt_early)?,
        &v0,
        &EvolveOptions {
            t0: 0.0,
            t_end: t_switch,
            record_every,
            snapshot_every: None,
            boundary_monitor: true,
            fuse_kinetic: true,
        },
    )?;
    let mut records = phase1.records;
    let mut breach = phase1.boundary_breach;
    if t_end > t_switch {
        let phase2 = evolve(
            &mk_problem(dt)?,
            &phase1.final_field,
            &EvolveOptions {
                t0: t_switch,
                t_end,
                record_every,
                snapshot_every: None,
                boundary_monitor: true,
                fuse_kinetic: true,
            },
        )?;
        records.extend(phase2.records.into_iter().skip(1));
        breach |= phase2.boundary_breach;
    }

    let rows: Vec<String> = records.iter().map(|r| r.csv_row()).collect();
    io.write_csv("diagnostics.csv", &DiagnosticsRecord::csv_header(dim), &rows)?;

    // ||v|| = ||gamma|| for all time
    let gamma_sq = gamma_l2_norm(dim).powi(2);
    let mass_dev = records
        .iter()
        .map(|r| (r.mass - gamma_sq).abs() / gamma_sq)
        .fold(0.0f64, f64::max);
    io.check(
        "norm_conservation",
        mass_dev < 1e-10,
        format!("max relative deviation of ||v||^2 from ||gamma||^2: {mass_dev:.3e}"),
    );

    let com = diagnostics::center_of_mass_check(&records, &scaler)?;
    let com_tol = params.get_f64("com_tol")?;
    io.check(
        "center_of_mass",
        com.max_banded_dev < com_tol,
        format!(
            "max |tau I2 + I1(0) t - I2(0)| / (1+t) = {:.3e} (tolerance {com_tol:.1e})",
            com.max_banded_dev
        ),
    );

    let pe_slack = params.get_f64("pe_slack")?;
    let mut max_increase = 0.0f64;
    for w in records.windows(2) {
        max_increase = max_increase.max(w[1].pseudo_energy - w[0].pseudo_energy);
    }
    io.check(
        "pseudo_energy_monotone",
        max_increase <= pe_slack,
        format!("max per-sample increase {max_increase:.3e} (slack {pe_slack:.1e})"),
    );

    // moment theorem trend: |V - target| over the [10, t_end] window
    let target = 0.5 * dim as f64 * gamma_sq;
    let in_window: Vec<&DiagnosticsRecord> =
        records.iter().filter(|r| r.t >= 10.0.min(t_end)).collect();
    if in_window.len() >= 2 {
        let gap_start = (in_window.first().unwrap().variance - target).abs();
        let gap_end = (in_window.last().unwrap().variance - target).abs();
        io.note("variance_gap_start", fmt(gap_start));
        io.note("variance_gap_end", fmt(gap_end));
        io.check(
            "variance_trend",
            gap_end * 2.0 <= gap_start,
            format!("gap {gap_start:.4e} -> {gap_end:.4e} (factor >= 2 expected)"),
        );
    }

    // FeAPDE-style band: W1 * sqrt(ln t) bounded on the window
    let w1_band = in_window
        .iter()
        .filter(|r| r.t > std::f64::consts::E)
        .map(|r| r.w1_to_gamma * r.t.ln().sqrt())
        .fold(0.0f64, f64::max);
    io.note("w1_sqrt_lnt_band", fmt(w1_band));

    io.check(
        "boundary",
        !breach,
        if breach {
            "truncation breach in the rescaled frame".to_string()
        } else {
            "boundary mass stayed below 1e-8 of the total".to_string()
        },
    );
    Ok(())
}
