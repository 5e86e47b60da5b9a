//! Symmetry transforms of the wave equation (Galilean boosts, the amplitude
//! scaling) and the exact change of variables between the physical and the
//! rescaled frame, gauge phase included.

use num_complex::Complex64;

use crate::error::CoreError;
use crate::grid::{gamma_l2_norm, Field, Grid};
use crate::spectral;
use crate::tau::{TauMode, TauScaler};
use crate::Result;

/// Boost initial data: multiply by exp(i v . x). Each velocity component must
/// be an admissible wavenumber 2 pi m / L so the factor stays periodic.
pub fn apply_galilean(f: &Field, velocity: &[f64]) -> Result<Field> {
    let grid = f.grid();
    if velocity.len() != grid.dim() {
        return Err(CoreError::InvalidField("velocity dimension mismatch".into()));
    }
    if !grid.admissible_velocity(velocity) {
        let bad = velocity
            .iter()
            .copied()
            .find(|&c| !grid.admissible_velocity(&[c]))
            .unwrap_or(velocity[0]);
        return Err(CoreError::InadmissibleVelocity {
            value: bad,
            len: grid.box_length(),
        });
    }
    let values = f
        .values()
        .iter()
        .enumerate()
        .map(|(flat, z)| {
            let p = grid.point(flat);
            let phase: f64 = (0..grid.dim()).map(|a| velocity[a] * p[a]).sum();
            z * Complex64::from_polar(1.0, phase)
        })
        .collect();
    Field::new(grid, values)
}

/// Full Galilean image of a time-t field: u(t, x - v t) exp(i v.x - i |v|^2 t / 2).
/// The spatial shift is applied spectrally, so v t need not be a lattice vector.
pub fn galilean_at_time(f: &Field, velocity: &[f64], t: f64) -> Result<Field> {
    let grid = f.grid();
    if !grid.admissible_velocity(velocity) {
        return Err(CoreError::InadmissibleVelocity {
            value: velocity[0],
            len: grid.box_length(),
        });
    }
    let delta: Vec<f64> = velocity.iter().map(|v| v * t).collect();
    let shifted = spectral::shift(f, &delta);
    let vsq: f64 = velocity.iter().map(|v| v * v).sum();
    let values = shifted
        .values()
        .iter()
        .enumerate()
        .map(|(flat, z)| {
            let p = grid.point(flat);
            let phase: f64 =
                (0..grid.dim()).map(|a| velocity[a] * p[a]).sum::<f64>() - 0.5 * vsq * t;
            z * Complex64::from_polar(1.0, phase)
        })
        .collect();
    Field::new(grid, values)
}

/// Amplitude scaling symmetry u_k(t, x) = k u(t, x) exp(-i t lambda ln|k|^2).
pub fn apply_scaling(f: &Field, k: Complex64, t: f64, lambda: f64) -> Result<Field> {
    if k.norm_sqr() == 0.0 {
        return Err(CoreError::ParameterOutOfRange("scaling k must be nonzero".into()));
    }
    let phase = Complex64::from_polar(1.0, -t * lambda * k.norm_sqr().ln());
    Ok(f.scaled(k * phase))
}

fn log_scaler_lambda(scaler: &TauScaler) -> Result<f64> {
    match scaler.mode() {
        TauMode::Logarithmic { lambda } => Ok(lambda),
        TauMode::Polytropic { .. } => Err(CoreError::ParameterOutOfRange(
            "frame rescaling is defined for the logarithmic scaler".into(),
        )),
    }
}

/// Gauge phase theta(t) = lambda d int_0^t ln tau - 2 lambda t ln(mass_ref / ||gamma||).
fn gauge_phase(scaler: &TauScaler, t: f64, mass_ref: f64, dim: usize) -> Result<f64> {
    let lambda = log_scaler_lambda(scaler)?;
    Ok(lambda * dim as f64 * scaler.log_tau_integral(t)?
        - 2.0 * lambda * t * (mass_ref / gamma_l2_norm(dim)).ln())
}

/// Map a physical-frame field u(t, .) to the rescaled unknown v(t, .) on the
/// target grid:
///   v(y) = tau^{d/2} (||gamma|| / mass_ref) u(tau y) exp(-i (tau'/tau) |tau y|^2 / 2) e^{-i theta(t)}.
/// `mass_ref` is the L2 norm of the initial physical datum.
pub fn to_rescaled_frame(
    u: &Field,
    scaler: &TauScaler,
    t: f64,
    mass_ref: f64,
    target: &Grid,
) -> Result<Field> {
    log_scaler_lambda(scaler)?;
    if !(mass_ref > 0.0) {
        return Err(CoreError::ParameterOutOfRange("mass_ref must be positive".into()));
    }
    let grid = u.grid();
    let dim = grid.dim();
    let tau = scaler.tau(t)?;
    let tau_dot = scaler.tau_dot(t)?;
    let chirp = 0.5 * tau_dot / tau;
    let mut w = Vec::with_capacity(grid.size());
    for (flat, z) in u.values().iter().enumerate() {
        let r2 = grid.radius_sq(flat);
        w.push(z * Complex64::from_polar(1.0, -chirp * r2));
    }
    let w = Field::new(grid, w)?;
    let resampled = spectral::resample_scaled(&w, target, tau)?;
    let theta = gauge_phase(scaler, t, mass_ref, dim)?;
    let amp = tau.powf(dim as f64 / 2.0) * gamma_l2_norm(dim) / mass_ref;
    let factor = Complex64::from_polar(amp, -theta);
    Ok(resampled.scaled(factor))
}

/// Inverse of [`to_rescaled_frame`]: reconstruct the physical field on the
/// target grid from the rescaled unknown.
pub fn from_rescaled_frame(
    v: &Field,
    scaler: &TauScaler,
    t: f64,
    mass_ref: f64,
    target: &Grid,
) -> Result<Field> {
    log_scaler_lambda(scaler)?;
    let dim = v.grid().dim();
    let tau = scaler.tau(t)?;
    let tau_dot = scaler.tau_dot(t)?;
    let theta = gauge_phase(scaler, t, mass_ref, dim)?;
    let amp = mass_ref / (gamma_l2_norm(dim) * tau.powf(dim as f64 / 2.0));
    let pre = v.scaled(Complex64::from_polar(amp, theta));
    let resampled = spectral::resample_scaled(&pre, target, 1.0 / tau)?;
    let grid = resampled.grid();
    let chirp = 0.5 * tau_dot / tau;
    let values = resampled
        .values()
        .iter()
        .enumerate()
        .map(|(flat, z)| z * Complex64::from_polar(1.0, chirp * grid.radius_sq(flat)))
        .collect();
    Field::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{evolve, EvolveOptions, NlsKind, NlsProblem};

    fn gamma_field(grid: Grid) -> Field {
        Field::from_fn(grid, |x| {
            Complex64::new((-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
        })
    }

    #[test]
    fn zero_velocity_is_identity() {
        let grid = Grid::new(1, 128, 16.0).unwrap();
        let f = gamma_field(grid);
        let b = apply_galilean(&f, &[0.0]).unwrap();
        assert!(f.l2_distance(&b).unwrap() < 1e-15);
    }

    #[test]
    fn boost_shifts_momentum() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let f = gamma_field(grid);
        let v0 = grid.wavenumber(6);
        let b = apply_galilean(&f, &[v0]).unwrap();
        let m0 = spectral::moments(&f);
        let m1 = spectral::moments(&b);
        assert!((m1.momentum[0] - (m0.momentum[0] + v0 * m0.mass)).abs() < 1e-10);
    }

    #[test]
    fn inadmissible_velocity_rejected() {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        let f = gamma_field(grid);
        assert!(matches!(
            apply_galilean(&f, &[0.123]),
            Err(CoreError::InadmissibleVelocity { .. })
        ));
    }

    #[test]
    fn scaling_cases() {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        let f = gamma_field(grid);
        // |k| = 1: modulus unchanged
        let k = Complex64::from_polar(1.0, 0.9);
        let g = apply_scaling(&f, k, 2.0, -1.0).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        // k = 2 at t = 0: plain doubling
        let h = apply_scaling(&f, Complex64::new(2.0, 0.0), 0.0, -1.0).unwrap();
        assert!((h.l2_norm() - 2.0 * f.l2_norm()).abs() < 1e-12);
        assert!(apply_scaling(&f, Complex64::new(0.0, 0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn solver_commutes_with_galilean_boost() {
        // evolve(boost(u0)) equals galilean map of evolve(u0) at time t
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let lambda = -1.0;
        let dt = 1e-3;
        let t_end = 1.0;
        let problem = NlsProblem::new(
            NlsKind::Logarithmic {
                lambda,
                reg_eps: 1e-12,
            },
            grid,
            dt,
        )
        .unwrap();
        let u0 = Field::from_fn(grid, |x| {
            Complex64::new(0.5f64.exp() * (-x[0] * x[0]).exp(), 0.0)
        });
        let v0 = grid.wavenumber(4);

        let base = evolve(&problem, &u0, &EvolveOptions::to_time(t_end)).unwrap();
        let boosted0 = apply_galilean(&u0, &[v0]).unwrap();
        let boosted_run = evolve(&problem, &boosted0, &EvolveOptions::to_time(t_end)).unwrap();
        let transformed = galilean_at_time(&base.final_field, &[v0], t_end).unwrap();
        let err = boosted_run
            .final_field
            .l2_distance(&transformed)
            .unwrap();
        assert!(err < 1e-5, "galilean commutation error {err}");
    }

    #[test]
    fn solver_commutes_with_scaling() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let lambda = -1.0;
        let problem = NlsProblem::new(
            NlsKind::Logarithmic {
                lambda,
                reg_eps: 1e-12,
            },
            grid,
            1e-3,
        )
        .unwrap();
        let u0 = Field::from_fn(grid, |x| {
            Complex64::new(0.5f64.exp() * (-x[0] * x[0]).exp(), 0.0)
        });
        let k = Complex64::new(2.0, 0.0);
        let t_end = 1.0;

        let base = evolve(&problem, &u0, &EvolveOptions::to_time(t_end)).unwrap();
        let scaled_run = evolve(
            &problem,
            &u0.scaled(k),
            &EvolveOptions::to_time(t_end),
        )
        .unwrap();
        let transformed = apply_scaling(&base.final_field, k, t_end, lambda).unwrap();
        let err = scaled_run.final_field.l2_distance(&transformed).unwrap();
        assert!(err < 1e-5, "scaling commutation error {err}");
    }

    #[test]
    fn rescale_at_t0_is_normalization() {
        let grid = Grid::new(1, 256, 16.0).unwrap();
        let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 1.0, 1e-12).unwrap();
        let u0 = Field::from_fn(grid, |x| {
            Complex64::new((-0.4 * x[0] * x[0]).exp() + 0.2 * (-(x[0] - 1.0).powi(2)).exp(), 0.0)
        });
        let mass_ref = u0.l2_norm();
        let v0 = to_rescaled_frame(&u0, &scaler, 0.0, mass_ref, &grid).unwrap();
        let expect = u0.scaled(Complex64::new(gamma_l2_norm(1) / mass_ref, 0.0));
        assert!(v0.l2_distance(&expect).unwrap() < 1e-10);
        assert!((v0.l2_norm() - gamma_l2_norm(1)).abs() < 1e-10);
    }

    #[test]
    fn rescale_round_trip() {
        let grid = Grid::new(1, 512, 32.0).unwrap();
        let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 5.0, 1e-12).unwrap();
        let u = Field::from_fn(grid, |x| {
            Complex64::from_polar((-0.3 * x[0] * x[0]).exp(), 0.2 * x[0])
        });
        let t = 2.0;
        let mass_ref = u.l2_norm();
        // the rescaled frame lives on the box contracted by exactly tau(t)
        let vgrid = Grid::new(1, 512, 32.0 / scaler.tau(t).unwrap()).unwrap();
        let v = to_rescaled_frame(&u, &scaler, t, mass_ref, &vgrid).unwrap();
        let back = from_rescaled_frame(&v, &scaler, t, mass_ref, &grid).unwrap();
        let err = back.l2_distance(&u).unwrap();
        assert!(err < 1e-10, "round trip error {err}");
    }

    #[test]
    fn rescaled_norm_is_gamma_norm_along_run() {
        // ||v(t)|| = ||gamma|| for all t when v is evolved in the rescaled frame
        let grid = Grid::new(1, 256, 16.0).unwrap();
        let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 5.0, 1e-12).unwrap();
        let u0 = Field::from_fn(grid, |x| {
            Complex64::new((-0.5 * x[0] * x[0]).exp() + 0.3 * (-4.0 * (x[0] - 1.0).powi(2)).exp(), 0.0)
        });
        let mass_ref = u0.l2_norm();
        let v0 = to_rescaled_frame(&u0, &scaler, 0.0, mass_ref, &grid).unwrap();
        let problem = NlsProblem::new(
            NlsKind::RescaledLog {
                lambda: 1.0,
                reg_eps: 1e-10,
                scaler: scaler.clone(),
            },
            grid,
            1e-3,
        )
        .unwrap();
        let out = evolve(&problem, &v0, &EvolveOptions::to_time(5.0)).unwrap();
        for rec in &out.records {
            let norm = rec.mass.sqrt();
            assert!(
                (norm - gamma_l2_norm(1)).abs() < 1e-10,
                "t={}: ||v|| = {norm}",
                rec.t
            );
        }
    }
}
