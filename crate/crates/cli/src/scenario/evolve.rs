use num_complex::Complex64;

use lognls_core::diagnostics::DiagnosticsRecord;
use lognls_core::snapshot;
use lognls_core::solitons::{multi_gausson, GaussonSpec};
use lognls_core::solver::{evolve, EvolveOptions, NlsKind, NlsProblem};
use lognls_core::transforms::apply_galilean;
use lognls_core::{Field, Grid};

use super::{fmt, ScenarioIo};
use crate::config::{ConfigError, KeySpec, Params};
use crate::CliError;

pub const SCHEMA: &[KeySpec] = &[
    KeySpec::optional("equation", "log", "log | power"),
    KeySpec::required("lambda", "coupling"),
    KeySpec::optional("sigma", "1.0", "power-law exponent (power equation)"),
    KeySpec::optional("eps", "1e-10", "regularization of the logarithm"),
    KeySpec::optional("dim", "1", "spatial dimension (1..3)"),
    KeySpec::required("grid_n", "points per axis (power of two)"),
    KeySpec::required("grid_length", "box side length"),
    KeySpec::required("dt", "time step"),
    KeySpec::required("t_end", "final time"),
    KeySpec::optional("record_every", "100", "diagnostics cadence in steps"),
    KeySpec::optional("snapshot_every", "0", "snapshot cadence in records, 0 = none"),
    KeySpec::optional("datum", "gaussian", "gaussian | gausson | gausson_pair"),
    KeySpec::optional("alpha0", "1.0", "gaussian datum: Re a(0)"),
    KeySpec::optional("beta0", "0.0", "gaussian datum: Im a(0)"),
    KeySpec::optional("b0_re", "1.0", "gaussian datum amplitude, real part"),
    KeySpec::optional("b0_im", "0.0", "gaussian datum amplitude, imaginary part"),
    KeySpec::optional("omega", "0.0", "gausson frequency"),
    KeySpec::optional("separation", "8.0", "gausson_pair: centers at +-separation/2"),
    KeySpec::optional("velocity", "0.0", "boost (must be 2 pi m / L)"),
    KeySpec::optional("mass_drift_tol", "1e-12", "per-step relative mass drift gate"),
    KeySpec::optional("energy_drift_tol", "1e-6", "energy drift gate over the run"),
];

pub(super) fn gaussian_datum(grid: Grid, alpha0: f64, beta0: f64, b0: Complex64) -> Field {
    let a = Complex64::new(alpha0, beta0);
    Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        b0 * (-a * (0.5 * r2)).exp()
    })
}

pub fn run(params: &Params, io: &mut ScenarioIo) -> Result<(), CliError> {
    let dim = params.get_usize("dim")?;
    let grid = Grid::new(dim, params.get_usize("grid_n")?, params.get_f64("grid_length")?)?;
    let lambda = params.get_f64("lambda")?;
    let dt = params.get_f64("dt")?;
    let t_end = params.get_f64("t_end")?;

    let kind = match params.get_str("equation")?.as_str() {
        "log" => NlsKind::Logarithmic {
            lambda,
            reg_eps: params.get_f64("eps")?,
        },
        "power" => NlsKind::Power {
            lambda,
            sigma: params.get_f64("sigma")?,
        },
        other => {
            return Err(ConfigError::general(format!(
                "equation must be log or power, got `{other}`"
            ))
            .into())
        }
    };
    let problem = NlsProblem::new(kind, grid, dt)?;

    let mut f0 = match params.get_str("datum")?.as_str() {
        "gaussian" => gaussian_datum(
            grid,
            params.get_f64("alpha0")?,
            params.get_f64("beta0")?,
            Complex64::new(params.get_f64("b0_re")?, params.get_f64("b0_im")?),
        ),
        "gausson" => multi_gausson(
            &[GaussonSpec::standing(params.get_f64("omega")?, lambda, dim)],
            0.0,
            &grid,
        )?,
        "gausson_pair" => {
            let half = 0.5 * params.get_f64("separation")?;
            let mk = |c: f64| {
                let mut center = vec![0.0; dim];
                center[0] = c;
                GaussonSpec {
                    omega: params.get_f64("omega").unwrap_or(0.0),
                    lambda,
                    velocity: vec![0.0; dim],
                    center,
                }
            };
            multi_gausson(&[mk(-half), mk(half)], 0.0, &grid)?
        }
        other => {
            return Err(ConfigError::general(format!("unknown datum `{other}`")).into())
        }
    };
    let v0 = params.get_f64("velocity")?;
    if v0 != 0.0 {
        let mut velocity = vec![0.0; dim];
        velocity[0] = v0;
        f0 = apply_galilean(&f0, &velocity)?;
    }

    let snapshot_every = params.get_usize("snapshot_every")?;
    let out = evolve(
        &problem,
        &f0,
        &EvolveOptions {
            t0: 0.0,
            t_end,
            record_every: params.get_usize("record_every")?,
            snapshot_every: (snapshot_every > 0).then_some(snapshot_every),
            boundary_monitor: true,
            fuse_kinetic: true,
        },
    )?;

    let rows: Vec<String> = out.records.iter().map(|r| r.csv_row()).collect();
    io.write_csv("diagnostics.csv", &DiagnosticsRecord::csv_header(dim), &rows)?;
    for (idx, (t, field)) in out.snapshots.iter().enumerate() {
        snapshot::write_snapshot(
            &io.dir,
            &format!("state_{idx:06}"),
            field,
            *t,
            &[("lambda".into(), fmt(lambda))],
        )?;
    }

    let m0 = out.records[0].mass;
    let steps_per_record = params.get_usize("record_every")?.max(1) as f64;
    let mut per_step_drift = 0.0f64;
    for w in out.records.windows(2) {
        per_step_drift =
            per_step_drift.max((w[1].mass - w[0].mass).abs() / m0 / steps_per_record);
    }
    let mass_tol = params.get_f64("mass_drift_tol")?;
    io.check(
        "mass_conservation",
        per_step_drift < mass_tol,
        format!("per-step relative drift {per_step_drift:.3e} (tolerance {mass_tol:.1e})"),
    );

    let e0 = out.records[0].energy;
    let energy_drift = out
        .records
        .iter()
        .map(|r| (r.energy - e0).abs())
        .fold(0.0f64, f64::max);
    let energy_tol = params.get_f64("energy_drift_tol")?;
    io.check(
        "energy_conservation",
        energy_drift < energy_tol,
        format!("drift {energy_drift:.3e} (tolerance {energy_tol:.1e})"),
    );

    io.check(
        "boundary",
        !out.boundary_breach,
        if out.boundary_breach {
            "truncation breach: boundary mass exceeded 1e-8 of the total".to_string()
        } else {
            "boundary mass stayed below 1e-8 of the total".to_string()
        },
    );
    io.note("records", out.records.len().to_string());
    io.note("final_mass", fmt(out.records.last().unwrap().mass));
    Ok(())
}
