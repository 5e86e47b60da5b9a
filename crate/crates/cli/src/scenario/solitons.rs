use num_complex::Complex64;

use lognls_core::solitons::{gausson, modulated_distance, multi_gausson, GaussonSpec};
use lognls_core::solver::{evolve, EvolveOptions, NlsKind, NlsProblem};
use lognls_core::{Field, Grid};

use super::{fmt, ScenarioIo};
use crate::config::{ConfigError, KeySpec, Params};
use crate::CliError;

pub const SCHEMA: &[KeySpec] = &[
    KeySpec::optional(
        "experiment",
        "superposition",
        "superposition | stationarity | orbital",
    ),
    KeySpec::optional("lambda", "-1.0", "coupling (< 0)"),
    KeySpec::optional("omega", "0.0", "gausson frequency"),
    KeySpec::optional("separations", "4, 8, 12", "superposition: half-distances R"),
    KeySpec::required("grid_n", "points per axis (power of two)"),
    KeySpec::required("grid_length", "box side length"),
    KeySpec::required("dt", "time step"),
    KeySpec::required("t_end", "final time"),
    KeySpec::optional("record_every", "100", "sample cadence in steps"),
    KeySpec::optional("eps", "1e-12", "regularization of the logarithm"),
    KeySpec::optional("perturbation", "0.01", "orbital: bump amplitude"),
    KeySpec::optional("stationarity_tol", "1e-6", "stationarity: distance gate"),
    KeySpec::optional("orbital_factor", "5.0", "orbital: allowed growth of the distance"),
];

fn doubled_half_box(spec_r: f64, lambda: f64) -> f64 {
    // keep the gausson tails below the boundary monitor
    spec_r + (28.0 / lambda.abs()).sqrt()
}

pub fn run(params: &Params, io: &mut ScenarioIo) -> Result<(), CliError> {
    let lambda = params.get_f64("lambda")?;
    if !(lambda < 0.0) {
        return Err(ConfigError::general("soliton experiments need lambda < 0").into());
    }
    let grid = Grid::new(1, params.get_usize("grid_n")?, params.get_f64("grid_length")?)?;
    let dt = params.get_f64("dt")?;
    let t_end = params.get_f64("t_end")?;
    let record_every = params.get_usize("record_every")?;
    let eps = params.get_f64("eps")?;
    let omega = params.get_f64("omega")?;
    let problem = NlsProblem::new(
        NlsKind::Logarithmic {
            lambda,
            reg_eps: eps,
        },
        grid,
        dt,
    )?;
    let opts = EvolveOptions {
        t0: 0.0,
        t_end,
        record_every,
        snapshot_every: Some(1),
        boundary_monitor: true,
        fuse_kinetic: true,
    };

    match params.get_str("experiment")?.as_str() {
        "superposition" => {
            let rs = params.get_f64_list("separations")?;
            let mut rows = Vec::new();
            let mut sups = Vec::new();
            for &r in &rs {
                if 2.0 * doubled_half_box(r, lambda) > grid.box_length() {
                    return Err(ConfigError::general(format!(
                        "box too small for separation R = {r}: need length >= {}",
                        2.0 * doubled_half_box(r, lambda)
                    ))
                    .into());
                }
                let specs = [
                    GaussonSpec {
                        omega,
                        lambda,
                        velocity: vec![0.0],
                        center: vec![-r],
                    },
                    GaussonSpec {
                        omega,
                        lambda,
                        velocity: vec![0.0],
                        center: vec![r],
                    },
                ];
                let f0 = multi_gausson(&specs, 0.0, &grid)?;
                let out = evolve(&problem, &f0, &opts)?;
                let mut sup = 0.0f64;
                for (t, field) in &out.snapshots {
                    let reference = multi_gausson(&specs, *t, &grid)?;
                    let dev = field.l2_distance(&reference)?;
                    sup = sup.max(dev);
                    rows.push(format!("{},{},{}", fmt(r), fmt(*t), fmt(dev)));
                }
                io.note(&format!("sup_deviation_R_{r}"), fmt(sup));
                sups.push(sup);
            }
            io.write_csv("superposition.csv", "R,t,l2_deviation", &rows)?;
            let monotone = sups.windows(2).all(|w| w[1] < w[0]);
            io.check(
                "superposition_monotone",
                monotone,
                format!(
                    "sup deviations {:?} must strictly decrease with R",
                    sups.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>()
                ),
            );
        }
        "stationarity" => {
            let spec = GaussonSpec::standing(omega, lambda, 1);
            let f0 = gausson(&spec, 0.0, &grid)?;
            let out = evolve(&problem, &f0, &opts)?;
            let mut rows = Vec::new();
            let mut last = 0.0;
            for (t, field) in &out.snapshots {
                let fit = modulated_distance(field, &spec)?;
                rows.push(format!(
                    "{},{},{},{}",
                    fmt(*t),
                    fmt(fit.distance),
                    fmt(fit.theta),
                    fmt(fit.shift[0])
                ));
                last = fit.distance;
            }
            io.write_csv("stationarity.csv", "t,distance,theta,shift", &rows)?;
            let tol = params.get_f64("stationarity_tol")?;
            io.check(
                "gausson_stationarity",
                last < tol,
                format!("modulated distance at t_end: {last:.3e} (tolerance {tol:.1e})"),
            );
        }
        "orbital" => {
            let spec = GaussonSpec::standing(omega, lambda, 1);
            let phi = gausson(&spec, 0.0, &grid)?;
            let amp = params.get_f64("perturbation")?;
            let f0 = Field::new(
                grid,
                phi.values()
                    .iter()
                    .enumerate()
                    .map(|(i, z)| {
                        let x = grid.coordinate(grid.axis_index(i, 0));
                        z + amp * Complex64::new((-2.0 * (x - 0.5) * (x - 0.5)).exp(), 0.0)
                    })
                    .collect(),
            )?;
            let out = evolve(&problem, &f0, &opts)?;
            let mut rows = Vec::new();
            let mut initial = None;
            let mut sup = 0.0f64;
            for (t, field) in &out.snapshots {
                let fit = modulated_distance(field, &spec)?;
                rows.push(format!(
                    "{},{},{},{}",
                    fmt(*t),
                    fmt(fit.distance),
                    fmt(fit.theta),
                    fmt(fit.shift[0])
                ));
                initial.get_or_insert(fit.distance);
                sup = sup.max(fit.distance);
            }
            io.write_csv("orbital.csv", "t,distance,theta,shift", &rows)?;
            let initial = initial.unwrap_or(f64::NAN);
            let factor = params.get_f64("orbital_factor")?;
            io.note("initial_distance", fmt(initial));
            io.note("sup_distance", fmt(sup));
            io.check(
                "orbital_stability",
                sup <= factor * initial,
                format!(
                    "sup distance {sup:.3e} vs {factor} x initial {initial:.3e}"
                ),
            );
        }
        other => {
            return Err(
                ConfigError::general(format!("unknown experiment `{other}`")).into()
            )
        }
    }
    Ok(())
}
