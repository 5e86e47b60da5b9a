use num_complex::Complex64;

use lognls_core::gaussian::{
    amplitude, breather_period, evolve_width, potential_min, BreatherPeriod, WidthParams,
};

use super::{fmt, ScenarioIo};
use crate::config::{KeySpec, Params};
use crate::CliError;

pub const SCHEMA: &[KeySpec] = &[
    KeySpec::required("lambda", "coupling"),
    KeySpec::optional("alpha0", "1.0", "initial width parameter Re a(0) (> 0)"),
    KeySpec::optional("beta0", "0.0", "initial chirp Im a(0)"),
    KeySpec::optional("b0_re", "1.0", "initial amplitude, real part"),
    KeySpec::optional("b0_im", "0.0", "initial amplitude, imaginary part"),
    KeySpec::optional("t_end", "10.0", "integration horizon"),
    KeySpec::optional("tol", "1e-12", "integrator tolerance"),
    KeySpec::optional("samples", "512", "number of CSV samples"),
];

pub fn run(params: &Params, io: &mut ScenarioIo) -> Result<(), CliError> {
    let p = WidthParams {
        alpha0: params.get_f64("alpha0")?,
        beta0: params.get_f64("beta0")?,
        lambda: params.get_f64("lambda")?,
    };
    let t_end = params.get_f64("t_end")?;
    let tol = params.get_f64("tol")?;
    let samples = params.get_usize("samples")?.max(2);
    let b0 = Complex64::new(params.get_f64("b0_re")?, params.get_f64("b0_im")?);

    let traj = evolve_width(p, t_end, tol)?;
    let mut rows = Vec::with_capacity(samples);
    let mut max_residual = 0.0f64;
    let mut max_decay_dev = 0.0f64;
    for i in 0..samples {
        let t = t_end * i as f64 / (samples - 1) as f64;
        let r = traj.r(t)?;
        let rd = traj.r_dot(t)?;
        let res = traj.energy_residual(t)?;
        let b = amplitude(&traj, b0, t)?;
        max_residual = max_residual.max(res.abs());
        max_decay_dev = max_decay_dev.max((b.norm() * r.sqrt() - b0.norm()).abs());
        rows.push(format!(
            "{},{},{},{},{},{},{}",
            fmt(t),
            fmt(r),
            fmt(rd),
            fmt(res),
            fmt(b.re),
            fmt(b.im),
            fmt(b.norm())
        ));
    }
    io.write_csv(
        "gaussian.csv",
        "t,r,rdot,energy_residual,b_re,b_im,b_abs",
        &rows,
    )?;

    io.check(
        "energy_relation",
        max_residual < 1e-8,
        format!("max |rdot^2 - closed form| = {max_residual:.3e} (tolerance 1e-8)"),
    );
    io.check(
        "amplitude_decay",
        max_decay_dev < 1e-8,
        format!("max | |b| sqrt(r) - |b0| | = {max_decay_dev:.3e} (tolerance 1e-8)"),
    );

    if p.lambda < 0.0 {
        let (r_min, u_min) = potential_min(p)?;
        io.note("potential_r_min", fmt(r_min));
        io.note("potential_u_min", fmt(u_min));
        match breather_period(p)? {
            BreatherPeriod::Stationary => {
                io.note("breather", "stationary".into());
                let mut max_dev = 0.0f64;
                for i in 0..64 {
                    let t = t_end * i as f64 / 63.0;
                    max_dev = max_dev.max((traj.r(t)? - 1.0).abs());
                }
                io.check(
                    "stationary_width",
                    max_dev < 1e-9,
                    format!("max |r - 1| = {max_dev:.3e} (tolerance 1e-9)"),
                );
            }
            BreatherPeriod::Periodic(t_quad) => {
                io.note("breather_period_quadrature", fmt(t_quad));
                if let Some(t_ode) = traj.period_from_crossings() {
                    let rel = (t_quad - t_ode).abs() / t_quad;
                    io.note("breather_period_ode", fmt(t_ode));
                    io.check(
                        "breather_period",
                        rel < 1e-6,
                        format!("relative deviation {rel:.3e} (tolerance 1e-6)"),
                    );
                } else {
                    io.note(
                        "breather_period_ode",
                        "not observed (raise t_end to cover two minima)".into(),
                    );
                }
            }
        }
    } else if p.lambda > 0.0 && t_end > std::f64::consts::E {
        let ratio =
            traj.r(t_end)? / (2.0 * t_end * (p.lambda * p.alpha0 * t_end.ln()).sqrt());
        io.note("dispersive_rate_ratio", fmt(ratio));
    }
    Ok(())
}
