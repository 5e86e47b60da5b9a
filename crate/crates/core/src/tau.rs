//! The dispersion scale tau(t): tau'' = 2*lambda/tau in the isothermal
//! (logarithmic) regime and tau'' = alpha/(2 tau^{1+alpha}) in the polytropic
//! one, always with tau(0) = 1, tau'(0) = 0. The trajectory carries the
//! cumulative integral of ln tau so gauge phases can be reconstructed exactly.

use crate::error::CoreError;
use crate::ode::{integrate, OdeOptions, OdeSolution};
use crate::quad;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauMode {
    /// tau'' = 2 lambda / tau, lambda > 0; first integral tau'^2 = 4 lambda ln tau.
    Logarithmic { lambda: f64 },
    /// tau'' = alpha / (2 tau^{1+alpha}), alpha > 0; first integral
    /// tau'^2 = 1 - tau^{-alpha}.
    Polytropic { alpha: f64 },
}

/// Solved dispersion scale on [0, t_end]. State components are
/// (tau, tau', integral of ln tau).
#[derive(Debug, Clone)]
pub struct TauScaler {
    mode: TauMode,
    sol: OdeSolution,
}

impl TauScaler {
    pub fn solve(mode: TauMode, t_end: f64, tol: f64) -> Result<Self> {
        match mode {
            TauMode::Logarithmic { lambda } if !(lambda > 0.0) => {
                return Err(CoreError::ParameterOutOfRange(format!(
                    "logarithmic tau needs lambda > 0, got {lambda}"
                )));
            }
            TauMode::Polytropic { alpha } if !(alpha > 0.0) => {
                return Err(CoreError::ParameterOutOfRange(format!(
                    "polytropic tau needs alpha > 0, got {alpha}"
                )));
            }
            _ => {}
        }
        // cap the step so the fourth-order dense interpolant stays well below
        // the first-integral residual budget between accepted points
        let mut opts = OdeOptions::with_tol(tol);
        opts.h_max = 0.25;
        let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
            let tau = y[0];
            dy[0] = y[1];
            dy[1] = match mode {
                TauMode::Logarithmic { lambda } => 2.0 * lambda / tau,
                TauMode::Polytropic { alpha } => 0.5 * alpha / tau.powf(1.0 + alpha),
            };
            dy[2] = tau.ln();
        };
        let sol = integrate(rhs, 0.0, &[1.0, 0.0, 0.0], t_end, &opts, |t, y| {
            if y[0] < 0.5 {
                Err(CoreError::OdeFailure(format!(
                    "tau dropped below 1 at t={t} (tau={}, should be nondecreasing)",
                    y[0]
                )))
            } else {
                Ok(())
            }
        })?;
        Ok(TauScaler { mode, sol })
    }

    pub fn mode(&self) -> TauMode {
        self.mode
    }

    pub fn t_end(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn tau(&self, t: f64) -> Result<f64> {
        self.sol.eval_component(0, t)
    }

    pub fn tau_dot(&self, t: f64) -> Result<f64> {
        self.sol.eval_component(1, t)
    }

    /// Cumulative integral of ln tau from 0 to t (enters the gauge phase).
    pub fn log_tau_integral(&self, t: f64) -> Result<f64> {
        self.sol.eval_component(2, t)
    }

    /// Slow time s(t) = (1/2) ln tau'(t) of the logarithmic mode. Diverges to
    /// -inf at t = 0 where tau' vanishes.
    pub fn slow_time(&self, t: f64) -> Result<f64> {
        match self.mode {
            TauMode::Logarithmic { .. } => Ok(0.5 * self.tau_dot(t)?.ln()),
            TauMode::Polytropic { .. } => Err(CoreError::ParameterOutOfRange(
                "slow time is defined for the logarithmic mode".into(),
            )),
        }
    }

    /// Residual of the mode's first integral at time t.
    pub fn first_integral_residual(&self, t: f64) -> Result<f64> {
        let tau = self.tau(t)?;
        let td = self.tau_dot(t)?;
        Ok(match self.mode {
            TauMode::Logarithmic { lambda } => td * td - 4.0 * lambda * tau.ln(),
            TauMode::Polytropic { alpha } => td * td - (1.0 - tau.powf(-alpha)),
        })
    }

    /// Exact kinetic phase increment: integral of 1/(2 tau^2) over [t0, t1],
    /// by Gauss-Legendre on the dense trajectory.
    pub fn kinetic_phase(&self, t0: f64, t1: f64) -> Result<f64> {
        if t1 == t0 {
            return Ok(0.0);
        }
        // ensure both ends are inside the trajectory up front
        self.tau(t0)?;
        self.tau(t1)?;
        let mut err = None;
        let v = quad::integrate(
            |s| match self.sol.eval_component(0, s) {
                Ok(tau) => 1.0 / (2.0 * tau * tau),
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            t0,
            t1,
            7,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// Accepted integrator step times (useful for CSV sampling).
    pub fn step_times(&self) -> Vec<f64> {
        self.sol.step_times()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_mode_first_integral_short() {
        let sc = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 100.0, 1e-12).unwrap();
        for &t in &[0.0, 0.5, 1.0, 10.0, 50.0, 100.0] {
            let r = sc.first_integral_residual(t).unwrap();
            assert!(r.abs() < 1e-9, "t={t}: residual {r}");
        }
        assert!(sc.tau(0.0).unwrap() == 1.0);
        assert!(sc.tau_dot(0.0).unwrap() == 0.0);
        // nondecreasing
        let mut prev = 0.0;
        for &t in &[1.0, 2.0, 5.0, 20.0, 80.0] {
            let v = sc.tau(t).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn polytropic_first_integral_and_limit() {
        let sc = TauScaler::solve(TauMode::Polytropic { alpha: 2.0 }, 1000.0, 1e-12).unwrap();
        for &t in &[0.1, 1.0, 10.0, 500.0, 1000.0] {
            let r = sc.first_integral_residual(t).unwrap();
            assert!(r.abs() < 1e-9, "t={t}: residual {r}");
        }
        // tau' -> 1, tau ~ t
        let td = sc.tau_dot(1000.0).unwrap();
        assert!(td > 0.99 && td <= 1.0 + 1e-9, "tau_dot(1000) = {td}");
    }

    #[test]
    fn kinetic_phase_matches_closed_form_at_origin() {
        // near t = 0, tau ~ 1 + lambda t^2, so the increment is ~ dt/2
        let sc = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 1.0, 1e-12).unwrap();
        let dt = 1e-4;
        let v = sc.kinetic_phase(0.0, dt).unwrap();
        assert!((v - dt / 2.0).abs() < 1e-10);
        // additivity
        let a = sc.kinetic_phase(0.1, 0.2).unwrap();
        let b = sc.kinetic_phase(0.2, 0.35).unwrap();
        let c = sc.kinetic_phase(0.1, 0.35).unwrap();
        assert!((a + b - c).abs() < 1e-14);
    }

    #[test]
    fn slow_time_only_logarithmic() {
        let sc = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 10.0, 1e-10).unwrap();
        let s = sc.slow_time(10.0).unwrap();
        let td = sc.tau_dot(10.0).unwrap();
        assert!((s - 0.5 * td.ln()).abs() < 1e-14);
        let sp = TauScaler::solve(TauMode::Polytropic { alpha: 1.0 }, 10.0, 1e-10).unwrap();
        assert!(sp.slow_time(5.0).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(TauScaler::solve(TauMode::Logarithmic { lambda: -1.0 }, 1.0, 1e-10).is_err());
        assert!(TauScaler::solve(TauMode::Polytropic { alpha: 0.0 }, 1.0, 1e-10).is_err());
    }
}
