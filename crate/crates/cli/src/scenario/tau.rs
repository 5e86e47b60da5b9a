use lognls_core::{TauMode, TauScaler};

use super::{fmt, ScenarioIo};
use crate::config::{ConfigError, KeySpec, Params};
use crate::CliError;

pub const SCHEMA: &[KeySpec] = &[
    KeySpec::optional("mode", "log", "log | polytropic"),
    KeySpec::optional("lambda", "1.0", "coupling of the logarithmic mode (> 0)"),
    KeySpec::optional("alpha", "2.0", "exponent of the polytropic mode (> 0)"),
    KeySpec::optional("t_end", "1e4", "integration horizon"),
    KeySpec::optional("tol", "1e-12", "integrator tolerance"),
    KeySpec::optional("samples", "512", "number of CSV samples"),
];

pub fn run(params: &Params, io: &mut ScenarioIo) -> Result<(), CliError> {
    let t_end = params.get_f64("t_end")?;
    let tol = params.get_f64("tol")?;
    let samples = params.get_usize("samples")?.max(2);
    let mode = match params.get_str("mode")?.as_str() {
        "log" => TauMode::Logarithmic {
            lambda: params.get_f64("lambda")?,
        },
        "polytropic" => TauMode::Polytropic {
            alpha: params.get_f64("alpha")?,
        },
        other => {
            return Err(ConfigError::general(format!(
                "mode must be log or polytropic, got `{other}`"
            ))
            .into())
        }
    };
    let scaler = TauScaler::solve(mode, t_end, tol)?;

    let mut rows = Vec::with_capacity(samples);
    let mut max_residual = 0.0f64;
    for i in 0..samples {
        // quadratic clustering toward t = 0 where the dynamics is fastest
        let frac = i as f64 / (samples - 1) as f64;
        let t = t_end * frac * frac;
        let tau = scaler.tau(t)?;
        let taudot = scaler.tau_dot(t)?;
        let res = scaler.first_integral_residual(t)?;
        max_residual = max_residual.max(res.abs());
        rows.push(format!(
            "{},{},{},{}",
            fmt(t),
            fmt(tau),
            fmt(taudot),
            fmt(res)
        ));
    }
    io.write_csv("tau.csv", "t,tau,taudot,first_integral_residual", &rows)?;

    io.check(
        "first_integral",
        max_residual < 1e-9,
        format!("max |residual| = {max_residual:.3e} (tolerance 1e-9)"),
    );
    match mode {
        TauMode::Logarithmic { lambda } => {
            let tau_end = scaler.tau(t_end)?;
            if t_end > std::f64::consts::E {
                let ratio = tau_end / (2.0 * t_end * (lambda * t_end.ln()).sqrt());
                io.note("asymptote_ratio", fmt(ratio));
            }
            io.note("tau_end", fmt(tau_end));
            io.note("slow_time_end", fmt(scaler.slow_time(t_end)?));
        }
        TauMode::Polytropic { .. } => {
            let td = scaler.tau_dot(t_end)?;
            io.note("taudot_end", fmt(td));
            if t_end >= 1e3 {
                io.check(
                    "taudot_limit",
                    td > 0.99,
                    format!("taudot({t_end}) = {td:.6} (> 0.99 expected)"),
                );
            }
        }
    }
    Ok(())
}
