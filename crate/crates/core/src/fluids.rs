//! Madelung correspondence, exact Gaussian-ansatz dynamics of the isothermal
//! system with capillarity and quantum viscosity, the rescaled (R, U) frame
//! with its pseudo-energy / BD-entropy bookkeeping, and the PDE residual
//! oracle everything is validated against.

use num_complex::Complex64;

use crate::error::CoreError;
use crate::grid::{Density, Field, Grid};
use crate::ode::{integrate, OdeOptions, OdeSolution};
use crate::spectral::{self, FftCache};
use crate::tau::TauScaler;
use crate::Result;

/// Density/momentum pair with the model parameters it is meant to be fed to.
/// In the rescaled frame the same struct carries (R, R*U).
#[derive(Debug, Clone)]
pub struct FluidState {
    pub rho: Density,
    /// momentum J = rho * u, one component per axis
    pub momentum: Vec<Vec<f64>>,
    pub capillarity: f64,
    pub viscosity: f64,
    pub pressure_exponent: f64,
}

impl FluidState {
    pub fn new(
        rho: Density,
        momentum: Vec<Vec<f64>>,
        capillarity: f64,
        viscosity: f64,
        pressure_exponent: f64,
    ) -> Result<Self> {
        let dim = rho.grid().dim();
        if momentum.len() != dim || momentum.iter().any(|m| m.len() != rho.values().len()) {
            return Err(CoreError::InvalidField(
                "momentum component count mismatch".into(),
            ));
        }
        // vacuum compatibility: no momentum where there is no mass (up to the
        // rounding level of the momentum field itself)
        for comp in &momentum {
            let scale = comp.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (j, &r) in rho.values().iter().enumerate() {
                if r == 0.0 && comp[j].abs() > 1e-12 * scale {
                    return Err(CoreError::InvalidField(
                        "momentum does not vanish on the vacuum set".into(),
                    ));
                }
            }
        }
        Ok(FluidState {
            rho,
            momentum,
            capillarity,
            viscosity,
            pressure_exponent,
        })
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid()
    }
}

/// Madelung transform of a wavefunction: rho = |u|^2, J = Im(conj(u) grad u),
/// with the quantum capillarity eps = 1 it corresponds to.
pub fn madelung(u: &Field) -> FluidState {
    let rho = u.density();
    let grads = spectral::gradient(u);
    let momentum = grads
        .iter()
        .map(|g| {
            u.values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| (a.conj() * b).im)
                .collect()
        })
        .collect();
    FluidState {
        rho,
        momentum,
        capillarity: 1.0,
        viscosity: 0.0,
        pressure_exponent: 1.0,
    }
}

/// The power-nonlinearity constants matching a polytropic exponent gamma > 1:
/// lambda = gamma/(gamma - 1), sigma = (gamma - 1)/2.
pub fn correspondence_constants(gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 1.0) {
        return Err(CoreError::ParameterOutOfRange(format!(
            "correspondence needs gamma > 1, got {gamma} (gamma = 1 is the logarithmic limit)"
        )));
    }
    Ok((gamma / (gamma - 1.0), (gamma - 1.0) / 2.0))
}

/// Gaussian-ansatz data for the 1d isothermal system: rho is the Gaussian of
/// variance beta and mass m, u = omega x.
#[derive(Debug, Clone, Copy)]
pub struct FluidGaussianInit {
    pub mass: f64,
    pub beta0: f64,
    pub omega0: f64,
    pub capillarity: f64,
    pub viscosity: f64,
}

/// Trajectory of (beta, omega) under
/// beta' = 2 omega beta,
/// omega' = -omega^2 + 1/beta + eps^2/(4 beta^2) - nu omega / beta.
#[derive(Debug, Clone)]
pub struct FluidGaussianTrajectory {
    pub init: FluidGaussianInit,
    sol: OdeSolution,
}

pub fn evolve_fluid_gaussian(
    init: FluidGaussianInit,
    t_end: f64,
    tol: f64,
) -> Result<FluidGaussianTrajectory> {
    if !(init.beta0 > 0.0 && init.mass > 0.0) {
        return Err(CoreError::ParameterOutOfRange(
            "fluid gaussian needs beta0 > 0 and mass > 0".into(),
        ));
    }
    let eps2 = init.capillarity * init.capillarity;
    let nu = init.viscosity;
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (beta, omega) = (y[0], y[1]);
        dy[0] = 2.0 * omega * beta;
        dy[1] = -omega * omega + 1.0 / beta + 0.25 * eps2 / (beta * beta) - nu * omega / beta;
    };
    let mut opts = OdeOptions::with_tol(tol);
    opts.h_max = 0.25;
    let sol = integrate(
        rhs,
        0.0,
        &[init.beta0, init.omega0],
        t_end,
        &opts,
        |t, y| {
            if y[0] < 1e-12 {
                Err(CoreError::VarianceCollapse { t, beta: y[0] })
            } else {
                Ok(())
            }
        },
    )?;
    Ok(FluidGaussianTrajectory { init, sol })
}

impl FluidGaussianTrajectory {
    pub fn t_end(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn beta(&self, t: f64) -> Result<f64> {
        self.sol.eval_component(0, t)
    }

    pub fn omega(&self, t: f64) -> Result<f64> {
        self.sol.eval_component(1, t)
    }

    fn rho_at(&self, beta: f64, x: f64) -> f64 {
        self.init.mass / (2.0 * std::f64::consts::PI * beta).sqrt()
            * (-x * x / (2.0 * beta)).exp()
    }

    pub fn density(&self, t: f64, grid: &Grid) -> Result<Density> {
        let beta = self.beta(t)?;
        Density::from_fn(*grid, |x| self.rho_at(beta, x[0]))
    }

    /// Full (rho, J) sample at time t.
    pub fn state(&self, t: f64, grid: &Grid) -> Result<FluidState> {
        if grid.dim() != 1 {
            return Err(CoreError::DimensionUnsupported {
                dim: grid.dim(),
                what: "gaussian fluid ansatz",
            });
        }
        let omega = self.omega(t)?;
        let rho = self.density(t, grid)?;
        let momentum = vec![(0..grid.size())
            .map(|i| {
                let x = grid.coordinate(i);
                rho.values()[i] * omega * x
            })
            .collect()];
        FluidState::new(
            rho,
            momentum,
            self.init.capillarity,
            self.init.viscosity,
            1.0,
        )
    }

    /// Analytic time derivatives of (rho, J) through the ansatz ODE, for the
    /// residual oracle.
    pub fn time_derivatives(&self, t: f64, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
        let beta = self.beta(t)?;
        let omega = self.omega(t)?;
        let eps2 = self.init.capillarity * self.init.capillarity;
        let beta_dot = 2.0 * omega * beta;
        let omega_dot = -omega * omega + 1.0 / beta + 0.25 * eps2 / (beta * beta)
            - self.init.viscosity * omega / beta;
        let mut drho = Vec::with_capacity(grid.size());
        let mut dmom = Vec::with_capacity(grid.size());
        for i in 0..grid.size() {
            let x = grid.coordinate(i);
            let rho = self.rho_at(beta, x);
            let rho_t = rho * (-0.5 * beta_dot / beta + 0.5 * x * x * beta_dot / (beta * beta));
            drho.push(rho_t);
            dmom.push(x * (omega_dot * rho + omega * rho_t));
        }
        Ok((drho, dmom))
    }

    /// Closed-form energy (1/2) int rho u^2 + (eps^2/2) int |d sqrt(rho)|^2
    /// + int rho ln rho of the ansatz.
    pub fn energy_closed_form(&self, t: f64) -> Result<f64> {
        let beta = self.beta(t)?;
        let omega = self.omega(t)?;
        let m = self.init.mass;
        let eps2 = self.init.capillarity * self.init.capillarity;
        Ok(0.5 * omega * omega * m * beta
            + eps2 * m / (8.0 * beta)
            + m * (m / (2.0 * std::f64::consts::PI * beta).sqrt()).ln()
            - 0.5 * m)
    }

    /// Energy dissipation rate -nu int rho |D u|^2 = -nu m omega^2.
    pub fn dissipation_closed_form(&self, t: f64) -> Result<f64> {
        let omega = self.omega(t)?;
        Ok(-self.init.viscosity * self.init.mass * omega * omega)
    }

    /// The ansatz mapped to the (R, U) frame in closed form: R stays Gaussian
    /// with variance beta/tau^2 and mass ||Gamma||_1, U is affine with slope
    /// tau^2 omega - tau' tau.
    pub fn rescaled_state(
        &self,
        scaler: &TauScaler,
        t: f64,
        grid: &Grid,
    ) -> Result<FluidState> {
        if grid.dim() != 1 {
            return Err(CoreError::DimensionUnsupported {
                dim: grid.dim(),
                what: "gaussian fluid ansatz",
            });
        }
        let tau = scaler.tau(t)?;
        let tau_dot = scaler.tau_dot(t)?;
        let beta_r = self.beta(t)? / (tau * tau);
        let omega_r = tau * tau * self.omega(t)? - tau_dot * tau;
        let norm = gamma_l1_norm(1) / (2.0 * std::f64::consts::PI * beta_r).sqrt();
        let r = Density::from_fn(*grid, |y| norm * (-y[0] * y[0] / (2.0 * beta_r)).exp())?;
        let momentum = vec![(0..grid.size())
            .map(|i| {
                let y = grid.coordinate(i);
                r.values()[i] * omega_r * y
            })
            .collect()];
        FluidState::new(
            r,
            momentum,
            self.init.capillarity,
            self.init.viscosity,
            1.0,
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PressureLaw {
    /// P(rho) = rho
    Isothermal,
    /// P(rho) = rho^gamma
    Polytropic(f64),
}

impl PressureLaw {
    fn eval(&self, rho: f64) -> f64 {
        match self {
            PressureLaw::Isothermal => rho,
            PressureLaw::Polytropic(g) => rho.powf(*g),
        }
    }
}

/// Pointwise residual of the 1d system
///   d_t rho + (rho u)_x = 0
///   d_t (rho u) + (rho u^2)_x + P(rho)_x
///     = (eps^2/2) rho (sqrt(rho)_xx / sqrt(rho))_x + nu (rho u_x)_x
/// with the capillary term in its divergence form
/// rho (sqrt(rho)_xx/sqrt(rho))_x = (1/2) rho_xxx - 2 ((sqrt(rho)_x)^2)_x.
/// The caller supplies the time derivatives (analytic for ansatz states) and
/// the velocity derivative (exact for affine velocities). Returns the max-abs
/// of the two residual fields.
#[allow(clippy::too_many_arguments)]
pub fn fluid_residual_1d(
    grid: &Grid,
    rho: &[f64],
    u: &[f64],
    du_dx: &[f64],
    drho_dt: &[f64],
    dmom_dt: &[f64],
    capillarity: f64,
    viscosity: f64,
    pressure: PressureLaw,
) -> Result<(f64, f64)> {
    if grid.dim() != 1 {
        return Err(CoreError::DimensionUnsupported {
            dim: grid.dim(),
            what: "fluid_residual_1d",
        });
    }
    let n = grid.size();
    let mut cache = FftCache::for_grid(grid);
    let deriv = |vals: &[f64], cache: &mut FftCache| -> Vec<f64> {
        let mut hat: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        cache.forward(grid, &mut hat);
        for (i, z) in hat.iter_mut().enumerate() {
            *z *= Complex64::new(0.0, grid.wavenumber_deriv(i));
        }
        cache.inverse(grid, &mut hat);
        hat.iter().map(|z| z.re).collect()
    };

    let mom: Vec<f64> = rho.iter().zip(u).map(|(r, v)| r * v).collect();
    let flux: Vec<f64> = mom.iter().zip(u).map(|(m, v)| m * v).collect();
    let pres: Vec<f64> = rho.iter().map(|&r| pressure.eval(r)).collect();
    let sqrt_rho: Vec<f64> = rho.iter().map(|&r| r.max(0.0).sqrt()).collect();

    let d_mom = deriv(&mom, &mut cache);
    let d_flux = deriv(&flux, &mut cache);
    let d_pres = deriv(&pres, &mut cache);
    let d_sqrt = deriv(&sqrt_rho, &mut cache);
    let d_rho = deriv(rho, &mut cache);
    let dd_rho = deriv(&d_rho, &mut cache);
    let ddd_rho = deriv(&dd_rho, &mut cache);
    let grad_sq: Vec<f64> = d_sqrt.iter().map(|v| v * v).collect();
    let d_grad_sq = deriv(&grad_sq, &mut cache);
    let visc_flux: Vec<f64> = rho.iter().zip(du_dx).map(|(r, d)| r * d).collect();
    let d_visc = deriv(&visc_flux, &mut cache);

    let eps2 = capillarity * capillarity;
    let mut res_mass = 0.0f64;
    let mut res_mom = 0.0f64;
    for i in 0..n {
        res_mass = res_mass.max((drho_dt[i] + d_mom[i]).abs());
        let capillary = 0.5 * eps2 * (0.5 * ddd_rho[i] - 2.0 * d_grad_sq[i]);
        let r = dmom_dt[i] + d_flux[i] + d_pres[i] - capillary - viscosity * d_visc[i];
        res_mom = res_mom.max(r.abs());
    }
    Ok((res_mass, res_mom))
}

/// L1 norm of Gamma(y) = exp(-|y|^2) on R^d.
pub fn gamma_l1_norm(dim: usize) -> f64 {
    std::f64::consts::PI.powf(dim as f64 / 2.0)
}

/// Map a physical fluid state to the (R, U) frame on the target grid:
///   R(y) = tau^d (||Gamma||_1 / mass_ref) rho(tau y),
///   U(y) = tau u(tau y) - tau' tau y   (stored as R*U).
pub fn rescale_fluid(
    state: &FluidState,
    scaler: &TauScaler,
    t: f64,
    mass_ref: f64,
    target: &Grid,
) -> Result<FluidState> {
    let grid = state.grid();
    let dim = grid.dim();
    let tau = scaler.tau(t)?;
    let tau_dot = scaler.tau_dot(t)?;
    let scale = tau.powf(dim as f64) * gamma_l1_norm(dim) / mass_ref;

    let pack = |vals: &[f64]| -> Field {
        Field::new(
            grid,
            vals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
        .expect("finite fluid samples")
    };
    let rho_res = spectral::resample_scaled(&pack(state.rho.values()), target, tau)?;
    let r_vals: Vec<f64> = rho_res.values().iter().map(|z| z.re.max(0.0)).collect();
    let mut momentum = Vec::with_capacity(dim);
    for (axis, comp) in state.momentum.iter().enumerate() {
        let j_res = spectral::resample_scaled(&pack(comp), target, tau)?;
        momentum.push(
            (0..target.size())
                .map(|flat| {
                    if r_vals[flat] == 0.0 {
                        return 0.0;
                    }
                    let y = target.coordinate(target.axis_index(flat, axis));
                    scale * (tau * j_res.values()[flat].re
                        - tau_dot * tau * y * rho_res.values()[flat].re)
                })
                .collect(),
        );
    }
    let r = Density::new(*target, r_vals.iter().map(|v| v * scale).collect())?;
    FluidState::new(
        r,
        momentum,
        state.capillarity,
        state.viscosity,
        state.pressure_exponent,
    )
}

/// Inverse of [`rescale_fluid`]: reconstruct (rho, J) on the target grid.
pub fn from_rescaled_fluid(
    state: &FluidState,
    scaler: &TauScaler,
    t: f64,
    mass_ref: f64,
    target: &Grid,
) -> Result<FluidState> {
    let grid = state.grid();
    let dim = grid.dim();
    let tau = scaler.tau(t)?;
    let tau_dot = scaler.tau_dot(t)?;
    let scale = mass_ref / (gamma_l1_norm(dim) * tau.powf(dim as f64));

    let pack = |vals: &[f64]| -> Field {
        Field::new(
            grid,
            vals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
        .expect("finite fluid samples")
    };
    let r_res = spectral::resample_scaled(&pack(state.rho.values()), target, 1.0 / tau)?;
    let rho_vals: Vec<f64> = r_res
        .values()
        .iter()
        .map(|z| (z.re * scale).max(0.0))
        .collect();
    let mut momentum = Vec::with_capacity(dim);
    for (axis, comp) in state.momentum.iter().enumerate() {
        let j_res = spectral::resample_scaled(&pack(comp), target, 1.0 / tau)?;
        momentum.push(
            (0..target.size())
                .map(|flat| {
                    if rho_vals[flat] == 0.0 {
                        return 0.0;
                    }
                    let x = target.coordinate(target.axis_index(flat, axis));
                    scale / tau * j_res.values()[flat].re
                        + tau_dot / tau * x * rho_vals[flat]
                })
                .collect(),
        );
    }
    let rho = Density::new(*target, rho_vals)?;
    FluidState::new(
        rho,
        momentum,
        state.capillarity,
        state.viscosity,
        state.pressure_exponent,
    )
}

/// The pseudo-energy / BD-entropy functionals of a state in the (R, U) frame.
#[derive(Debug, Clone)]
pub struct FluidFunctionals {
    pub pseudo_energy: f64,
    pub dissipation: f64,
    pub bd_entropy: f64,
    pub bd_dissipation: f64,
    /// int R div U (enters the balance right-hand sides)
    pub r_div_u: f64,
    /// int R |D U|^2 (symmetric part)
    pub r_sym_sq: f64,
    /// int R |A U|^2 (antisymmetric part)
    pub r_antisym_sq: f64,
    pub mass: f64,
    pub first_moment: Vec<f64>,
    pub second_moment: f64,
}

/// Evaluate all functionals of an (R, R*U) state at time t. Log-derivative
/// integrands are taken in divided form, only where R exceeds the vacuum
/// floor 1e-14 * max(R), and always carry their R weight.
pub fn fluid_energies(state: &FluidState, scaler: &TauScaler, t: f64) -> Result<FluidFunctionals> {
    let grid = state.grid();
    let dim = grid.dim();
    let size = grid.size();
    let vol = grid.cell_volume();
    let tau = scaler.tau(t)?;
    let tau_dot = scaler.tau_dot(t)?;
    let eps2 = state.capillarity * state.capillarity;
    let nu = state.viscosity;

    let r = state.rho.values();
    let floor = 1e-14 * r.iter().cloned().fold(0.0f64, f64::max);

    let mut cache = FftCache::for_grid(&grid);
    let deriv = |vals: &[f64], axis: usize, cache: &mut FftCache| -> Vec<f64> {
        let mut hat: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        cache.forward(&grid, &mut hat);
        for (flat, z) in hat.iter_mut().enumerate() {
            *z *= Complex64::new(0.0, grid.wavenumber_deriv(grid.axis_index(flat, axis)));
        }
        cache.inverse(&grid, &mut hat);
        hat.iter().map(|z| z.re).collect()
    };

    let sqrt_r: Vec<f64> = r.iter().map(|&v| v.max(0.0).sqrt()).collect();
    let d_r: Vec<Vec<f64>> = (0..dim).map(|a| deriv(r, a, &mut cache)).collect();
    let d_sqrt: Vec<Vec<f64>> = (0..dim).map(|a| deriv(&sqrt_r, a, &mut cache)).collect();
    let d_j: Vec<Vec<Vec<f64>>> = (0..dim)
        .map(|a| {
            (0..dim)
                .map(|b| deriv(&state.momentum[b], a, &mut cache))
                .collect()
        })
        .collect();
    let dd_r: Vec<Vec<Vec<f64>>> = (0..dim)
        .map(|a| (0..dim).map(|b| deriv(&d_r[b], a, &mut cache)).collect())
        .collect();

    let mut r_u_sq = 0.0;
    let mut grad_sqrt_sq = 0.0;
    let mut conf_ent = 0.0;
    let mut r_du_sq = 0.0;
    let mut r_au_sq = 0.0;
    let mut r_hess_sq = 0.0;
    let mut bd_vel_sq = 0.0;
    let mut r_div_u = 0.0;
    let mut mass = 0.0;
    let mut first = vec![0.0; dim];
    let mut second = 0.0;

    for flat in 0..size {
        let rv = r[flat];
        mass += rv;
        let y2 = grid.radius_sq(flat);
        second += y2 * rv;
        for (a, f) in first.iter_mut().enumerate() {
            *f += grid.coordinate(grid.axis_index(flat, a)) * rv;
        }
        conf_ent += y2 * rv + if rv > 0.0 { rv * rv.ln() } else { 0.0 };
        for a in 0..dim {
            let g = d_sqrt[a][flat];
            grad_sqrt_sq += g * g;
        }
        if rv <= floor {
            continue;
        }
        let inv_r = 1.0 / rv;
        let mut u = [0.0f64; 3];
        for a in 0..dim {
            u[a] = state.momentum[a][flat] * inv_r;
            r_u_sq += state.momentum[a][flat] * u[a];
            let bd = state.momentum[a][flat] + nu * d_r[a][flat];
            bd_vel_sq += bd * bd * inv_r;
        }
        // velocity Jacobian W[a][b] = d_a u_b = (d_a J_b - u_b d_a R) / R
        let mut w = [[0.0f64; 3]; 3];
        for a in 0..dim {
            for b in 0..dim {
                w[a][b] = (d_j[a][b][flat] - u[b] * d_r[a][flat]) * inv_r;
            }
            r_div_u += w[a][a] * rv;
        }
        for a in 0..dim {
            for b in 0..dim {
                let sym = 0.5 * (w[a][b] + w[b][a]);
                let asym = 0.5 * (w[a][b] - w[b][a]);
                r_du_sq += rv * sym * sym;
                r_au_sq += rv * asym * asym;
                let hess = dd_r[a][b][flat] * inv_r - d_r[a][flat] * d_r[b][flat] * inv_r * inv_r;
                r_hess_sq += rv * hess * hess;
            }
        }
    }
    r_u_sq *= vol;
    grad_sqrt_sq *= vol;
    conf_ent *= vol;
    r_du_sq *= vol;
    r_au_sq *= vol;
    r_hess_sq *= vol;
    bd_vel_sq *= vol;
    r_div_u *= vol;
    mass *= vol;
    second *= vol;
    for f in first.iter_mut() {
        *f *= vol;
    }

    let tau2 = tau * tau;
    let pseudo_energy = 0.5 * r_u_sq / tau2 + 0.5 * eps2 * grad_sqrt_sq / tau2 + conf_ent;
    let dissipation = tau_dot / (tau2 * tau) * (r_u_sq + eps2 * grad_sqrt_sq)
        + nu / (tau2 * tau2) * r_du_sq;
    let bd_entropy = 0.5 * (bd_vel_sq + eps2 * grad_sqrt_sq) / tau2 + conf_ent;
    let bd_dissipation = tau_dot / (tau2 * tau) * (r_u_sq + eps2 * grad_sqrt_sq)
        + nu / (tau2 * tau2) * r_au_sq
        + nu * eps2 / (tau2 * tau2) * r_hess_sq
        + 4.0 * nu / tau2 * grad_sqrt_sq;

    Ok(FluidFunctionals {
        pseudo_energy,
        dissipation,
        bd_entropy,
        bd_dissipation,
        r_div_u,
        r_sym_sq: r_du_sq,
        r_antisym_sq: r_au_sq,
        mass,
        first_moment: first,
        second_moment: second,
    })
}

/// Outcome of the long-time rigidity audit on a sampled (R, U) run.
#[derive(Debug, Clone)]
pub struct RigidityReport {
    /// trapezoid integral of the dissipation over the run
    pub dissipation_integral: f64,
    pub sup_pseudo_energy: f64,
    /// |second moment of mass-normalized R minus d/2| at both ends
    pub second_moment_gap_start: f64,
    pub second_moment_gap_end: f64,
    pub second_moment_gap_monotone: bool,
    pub max_abs_first_moment: f64,
    /// sup over samples of pseudo_energy(t) + int_0^t D
    pub energy_bound_sup: f64,
}

/// Check the rigidity hypotheses and conclusions on a sampled trajectory of
/// (t, functionals) in the (R, U) frame.
pub fn rigidity_checks(samples: &[(f64, FluidFunctionals)]) -> Result<RigidityReport> {
    if samples.len() < 3 {
        return Err(CoreError::ParameterOutOfRange(
            "rigidity check needs at least three samples".into(),
        ));
    }
    let dim = samples[0].1.first_moment.len() as f64;
    let target = 0.5 * dim;
    let mut dissip_int = 0.0;
    let mut sup_e = f64::NEG_INFINITY;
    let mut bound_sup = f64::NEG_INFINITY;
    let mut max_first = 0.0f64;
    let mut gaps = Vec::with_capacity(samples.len());
    for (i, (t, f)) in samples.iter().enumerate() {
        if i > 0 {
            let (tp, fp) = &samples[i - 1];
            dissip_int += 0.5 * (f.dissipation + fp.dissipation) * (t - tp);
        }
        sup_e = sup_e.max(f.pseudo_energy);
        bound_sup = bound_sup.max(f.pseudo_energy + dissip_int);
        for c in &f.first_moment {
            max_first = max_first.max(c.abs());
        }
        gaps.push((f.second_moment / f.mass - target).abs());
    }
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(RigidityReport {
        dissipation_integral: dissip_int,
        sup_pseudo_energy: sup_e,
        second_moment_gap_start: gaps[0],
        second_moment_gap_end: *gaps.last().unwrap(),
        second_moment_gap_monotone: monotone,
        max_abs_first_moment: max_first,
        energy_bound_sup: bound_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tau::TauMode;

    #[test]
    fn madelung_of_real_field_has_no_momentum() {
        let grid = Grid::new(1, 128, 16.0).unwrap();
        let u = Field::from_fn(grid, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0));
        let st = madelung(&u);
        assert!(st.momentum[0].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn madelung_of_boosted_gaussian() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let v0 = grid.wavenumber(5);
        let u = Field::from_fn(grid, |x| {
            Complex64::from_polar((-0.5 * x[0] * x[0]).exp(), v0 * x[0])
        });
        let st = madelung(&u);
        // J = v0 * Gamma
        for (i, j) in st.momentum[0].iter().enumerate() {
            let x = grid.coordinate(i);
            let expect = v0 * (-x * x).exp();
            assert!((j - expect).abs() < 1e-10, "J({x}) = {j} vs {expect}");
        }
    }

    #[test]
    fn correspondence_at_gamma_two() {
        let (lambda, sigma) = correspondence_constants(2.0).unwrap();
        assert_eq!(lambda, 2.0);
        assert_eq!(sigma, 0.5);
        assert!(correspondence_constants(1.0).is_err());
    }

    #[test]
    fn ansatz_satisfies_pde_residual() {
        // the derived (beta, omega) system must make the PDE residual vanish
        let grid = Grid::new(1, 512, 40.0).unwrap();
        for (eps, nu) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)] {
            let traj = evolve_fluid_gaussian(
                FluidGaussianInit {
                    mass: 1.0,
                    beta0: 0.5,
                    omega0: 0.0,
                    capillarity: eps,
                    viscosity: nu,
                },
                2.0,
                1e-12,
            )
            .unwrap();
            for &t in &[0.0, 0.7, 1.4, 2.0] {
                let st = traj.state(t, &grid).unwrap();
                let omega = traj.omega(t).unwrap();
                let u: Vec<f64> = (0..grid.size())
                    .map(|i| omega * grid.coordinate(i))
                    .collect();
                let du = vec![omega; grid.size()];
                let (drho, dmom) = traj.time_derivatives(t, &grid).unwrap();
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
                )
                .unwrap();
                assert!(
                    r1 < 1e-8 && r2 < 1e-8,
                    "eps={eps} nu={nu} t={t}: residuals {r1}, {r2}"
                );
            }
        }
    }

    #[test]
    fn wrong_ansatz_fails_residual() {
        // sanity of the oracle: perturbing omega_dot must show up
        let grid = Grid::new(1, 512, 40.0).unwrap();
        let traj = evolve_fluid_gaussian(
            FluidGaussianInit {
                mass: 1.0,
                beta0: 0.5,
                omega0: 0.3,
                capillarity: 0.0,
                viscosity: 0.0,
            },
            1.0,
            1e-12,
        )
        .unwrap();
        let t = 0.5;
        let st = traj.state(t, &grid).unwrap();
        let omega = traj.omega(t).unwrap();
        let u: Vec<f64> = (0..grid.size())
            .map(|i| omega * grid.coordinate(i))
            .collect();
        let du = vec![omega; grid.size()];
        let (drho, mut dmom) = traj.time_derivatives(t, &grid).unwrap();
        for (i, v) in dmom.iter_mut().enumerate() {
            // corrupt the momentum time-derivative
            *v += 0.01 * grid.coordinate(i) * st.rho.values()[i];
        }
        let (_, r2) = fluid_residual_1d(
            &grid,
            st.rho.values(),
            &u,
            &du,
            &drho,
            &dmom,
            0.0,
            0.0,
            PressureLaw::Isothermal,
        )
        .unwrap();
        assert!(r2 > 1e-4, "oracle failed to detect corruption: {r2}");
    }

    #[test]
    fn energy_dissipation_identity() {
        // dE/dt = -nu m omega^2, checked with centered differences of the
        // quadrature energy
        let grid = Grid::new(1, 512, 40.0).unwrap();
        let traj = evolve_fluid_gaussian(
            FluidGaussianInit {
                mass: 1.0,
                beta0: 0.5,
                omega0: 0.0,
                capillarity: 0.3,
                viscosity: 0.4,
            },
            2.0,
            1e-12,
        )
        .unwrap();
        let vol = grid.cell_volume();
        let quad_energy = |t: f64| -> f64 {
            let st = traj.state(t, &grid).unwrap();
            let omega = traj.omega(t).unwrap();
            let mut e = 0.0;
            let mut cache = FftCache::for_grid(&grid);
            let sqrt_rho: Vec<f64> = st.rho.values().iter().map(|v| v.sqrt()).collect();
            let mut hat: Vec<Complex64> =
                sqrt_rho.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            cache.forward(&grid, &mut hat);
            for (i, z) in hat.iter_mut().enumerate() {
                *z *= Complex64::new(0.0, grid.wavenumber_deriv(i));
            }
            cache.inverse(&grid, &mut hat);
            for (i, &r) in st.rho.values().iter().enumerate() {
                let x = grid.coordinate(i);
                e += 0.5 * r * omega * omega * x * x;
                e += 0.5 * 0.09 * hat[i].re * hat[i].re;
                if r > 0.0 {
                    e += r * r.ln();
                }
            }
            e * vol
        };
        let t = 1.0;
        let dt = 1e-4;
        let de = (quad_energy(t + dt) - quad_energy(t - dt)) / (2.0 * dt);
        let expect = traj.dissipation_closed_form(t).unwrap();
        assert!(
            (de - expect).abs() < 1e-5,
            "dE/dt {de} vs -nu m omega^2 {expect}"
        );
        // the closed-form energy agrees with the quadrature one
        let e_cf = traj.energy_closed_form(t).unwrap();
        assert!((quad_energy(t) - e_cf).abs() < 1e-10, "{} vs {e_cf}", quad_energy(t));
        // and is nonincreasing under viscosity
        assert!(traj.energy_closed_form(2.0).unwrap() <= traj.energy_closed_form(0.0).unwrap());
    }

    #[test]
    fn width_growth_is_capillarity_independent() {
        // sqrt(beta) ratios of eps > 0 and eps = 0 runs drift toward 1
        let mk = |eps: f64| {
            evolve_fluid_gaussian(
                FluidGaussianInit {
                    mass: 1.0,
                    beta0: 0.5,
                    omega0: 0.0,
                    capillarity: eps,
                    viscosity: 0.0,
                },
                300.0,
                1e-10,
            )
            .unwrap()
        };
        let a = mk(0.0);
        let b = mk(1.0);
        let ratio = |t: f64| (b.beta(t).unwrap() / a.beta(t).unwrap()).sqrt();
        assert!((ratio(300.0) - 1.0).abs() < (ratio(10.0) - 1.0).abs());
        assert!((ratio(300.0) - 1.0).abs() < 0.05, "ratio {}", ratio(300.0));
    }

    #[test]
    fn rescale_fluid_t0_and_round_trip() {
        let grid = Grid::new(1, 512, 40.0).unwrap();
        let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 5.0, 1e-12).unwrap();
        let traj = evolve_fluid_gaussian(
            FluidGaussianInit {
                mass: 1.0,
                beta0: 0.5,
                omega0: 0.2,
                capillarity: 0.0,
                viscosity: 0.0,
            },
            3.0,
            1e-12,
        )
        .unwrap();
        let st0 = traj.state(0.0, &grid).unwrap();
        let mass_ref = st0.rho.mass();
        // t = 0: R = rho ||Gamma||_1 / mass, U = u
        let r0 = rescale_fluid(&st0, &scaler, 0.0, mass_ref, &grid).unwrap();
        let expect_scale = gamma_l1_norm(1) / mass_ref;
        for (a, b) in r0.rho.values().iter().zip(st0.rho.values()) {
            assert!((a - b * expect_scale).abs() < 1e-10);
        }
        for (a, (b, r)) in r0.momentum[0]
            .iter()
            .zip(st0.momentum[0].iter().zip(st0.rho.values()))
        {
            // U = u means R*U = (scale rho) * (J/rho) = scale * J
            let expect = b * expect_scale;
            assert!((a - expect).abs() < 1e-10 * (1.0 + r.abs()));
        }
        // round trip at t > 0, onto the exactly contracted box
        let t = 2.0;
        let st = traj.state(t, &grid).unwrap();
        let rgrid = Grid::new(1, 512, 40.0 / scaler.tau(t).unwrap()).unwrap();
        let fwd = rescale_fluid(&st, &scaler, t, mass_ref, &rgrid).unwrap();
        let back = from_rescaled_fluid(&fwd, &scaler, t, mass_ref, &grid).unwrap();
        let rho_err = st
            .rho
            .values()
            .iter()
            .zip(back.rho.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let mom_err = st.momentum[0]
            .iter()
            .zip(&back.momentum[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(rho_err < 1e-10 && mom_err < 1e-10, "round trip {rho_err}, {mom_err}");
    }

    #[test]
    fn rescaled_gaussian_variance_is_beta_over_tau_sq() {
        // the resampled change of variables must agree with the closed-form
        // image of the ansatz: Gaussian of variance beta/tau^2, mass ||Gamma||_1
        let grid = Grid::new(1, 512, 40.0).unwrap();
        let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 5.0, 1e-12).unwrap();
        let traj = evolve_fluid_gaussian(
            FluidGaussianInit {
                mass: 2.0,
                beta0: 0.4,
                omega0: 0.0,
                capillarity: 0.0,
                viscosity: 0.0,
            },
            3.0,
            1e-12,
        )
        .unwrap();
        let t = 1.5;
        let tau = scaler.tau(t).unwrap();
        let beta = traj.beta(t).unwrap();
        let st = traj.state(t, &grid).unwrap();
        let rgrid = Grid::new(1, 512, 40.0 / tau).unwrap();
        let r = rescale_fluid(&st, &scaler, t, 2.0, &rgrid).unwrap();
        let closed = traj.rescaled_state(&scaler, t, &rgrid).unwrap();
        let max_rho_dev = r
            .rho
            .values()
            .iter()
            .zip(closed.rho.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let max_mom_dev = r.momentum[0]
            .iter()
            .zip(&closed.momentum[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_rho_dev < 1e-9, "rho dev {max_rho_dev}");
        assert!(max_mom_dev < 1e-8, "momentum dev {max_mom_dev}");
        // variance of the normalized R
        let vol = rgrid.cell_volume();
        let mass: f64 = r.rho.values().iter().sum::<f64>() * vol;
        let var: f64 = r
            .rho
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| rgrid.coordinate(i).powi(2) * v)
            .sum::<f64>()
            * vol
            / mass;
        assert!(
            (var - beta / (tau * tau)).abs() < 1e-8,
            "variance {var} vs {}",
            beta / (tau * tau)
        );
    }

    #[test]
    fn gamma_state_has_zero_pseudo_energy() {
        let grid = Grid::new(1, 256, 16.0).unwrap();
        let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 1.0, 1e-10).unwrap();
        let r = Density::gamma_sq(grid);
        let st = FluidState::new(
            r,
            vec![vec![0.0; grid.size()]],
            0.0,
            0.0,
            1.0,
        )
        .unwrap();
        let f = fluid_energies(&st, &scaler, 0.0).unwrap();
        // ln Gamma = -|y|^2 cancels the confinement term exactly
        assert!(f.pseudo_energy.abs() < 1e-12, "pseudo energy {}", f.pseudo_energy);
        assert!(f.dissipation.abs() < 1e-15);
    }

    #[test]
    fn gamma_state_capillary_energy_closed_form() {
        // R = Gamma, U = 0, eps = 1, tau = 1, d = 1:
        // E = (1/2) int |d sqrt(Gamma)|^2 = (1/2)(sqrt(pi)/2)
        let grid = Grid::new(1, 256, 16.0).unwrap();
        let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 1.0, 1e-10).unwrap();
        let st = FluidState::new(
            Density::gamma_sq(grid),
            vec![vec![0.0; grid.size()]],
            1.0,
            0.0,
            1.0,
        )
        .unwrap();
        let f = fluid_energies(&st, &scaler, 0.0).unwrap();
        let expect = 0.5 * std::f64::consts::PI.sqrt() / 2.0;
        assert!(
            (f.pseudo_energy - expect).abs() < 1e-10,
            "capillary energy {} vs {expect}",
            f.pseudo_energy
        );
    }

    #[test]
    fn affine_velocity_has_no_antisymmetric_dissipation() {
        // U = omega y: A U = 0, so the nu |A U|^2 term of D_BD vanishes while
        // the symmetric part carries d * omega^2 * mass
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 1.0, 1e-10).unwrap();
        let omega = 0.37;
        let r = Density::gamma_sq(grid);
        let momentum: Vec<Vec<f64>> = (0..2)
            .map(|axis| {
                (0..grid.size())
                    .map(|flat| {
                        omega * grid.coordinate(grid.axis_index(flat, axis)) * r.values()[flat]
                    })
                    .collect()
            })
            .collect();
        let st = FluidState::new(r, momentum, 0.0, 0.8, 1.0).unwrap();
        let f = fluid_energies(&st, &scaler, 0.5).unwrap();
        assert!(f.r_antisym_sq < 1e-10, "AU term {}", f.r_antisym_sq);
        let expect_sym = 2.0 * omega * omega * f.mass;
        assert!(
            (f.r_sym_sq - expect_sym).abs() < 1e-8 * expect_sym,
            "DU term {} vs {expect_sym}",
            f.r_sym_sq
        );
        // a rotational velocity field does produce the antisymmetric term:
        // U = omega (-y2, y1)
        let r2 = Density::gamma_sq(grid);
        let rot_momentum: Vec<Vec<f64>> = vec![
            (0..grid.size())
                .map(|flat| {
                    -omega * grid.coordinate(grid.axis_index(flat, 1)) * r2.values()[flat]
                })
                .collect(),
            (0..grid.size())
                .map(|flat| {
                    omega * grid.coordinate(grid.axis_index(flat, 0)) * r2.values()[flat]
                })
                .collect(),
        ];
        let rot = FluidState::new(r2, rot_momentum, 0.0, 0.8, 1.0).unwrap();
        let g = fluid_energies(&rot, &scaler, 0.5).unwrap();
        assert!(g.r_antisym_sq > 0.1 * omega * omega * g.mass);
        assert!(g.r_sym_sq < 1e-10, "rigid rotation has no symmetric strain");
    }

    #[test]
    fn rigidity_trend_on_dispersive_run() {
        // in the (R, U) frame the ansatz stays order-one for all t, so the
        // closed-form image can be sampled on a fixed box
        let grid = Grid::new(1, 256, 24.0).unwrap();
        let scaler =
            TauScaler::solve(TauMode::Logarithmic { lambda: 1.0 }, 200.0, 1e-10).unwrap();
        let traj = evolve_fluid_gaussian(
            FluidGaussianInit {
                mass: 1.0,
                beta0: 0.25,
                omega0: 0.0,
                capillarity: 0.0,
                viscosity: 0.0,
            },
            200.0,
            1e-10,
        )
        .unwrap();
        // sample past the short transient of the width oscillator; from there
        // the gap |int y^2 R / int R - 1/2| decays like 1/ln t
        let mut samples = Vec::new();
        let mut t = 5.0;
        while t <= 200.0 {
            let r = traj.rescaled_state(&scaler, t, &grid).unwrap();
            samples.push((t, fluid_energies(&r, &scaler, t).unwrap()));
            t *= 1.6;
        }
        let rep = rigidity_checks(&samples).unwrap();
        assert!(rep.second_moment_gap_monotone, "gap trend not monotone");
        assert!(rep.second_moment_gap_end < rep.second_moment_gap_start);
        assert!(rep.max_abs_first_moment < 1e-10, "centered data stay centered");
        assert!(rep.sup_pseudo_energy.is_finite() && rep.dissipation_integral.is_finite());
    }
}
