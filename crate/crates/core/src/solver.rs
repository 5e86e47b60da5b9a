//! Split-step time integration of the power, logarithmic (via the
//! eps-regularized nonlinearity) and rescaled logarithmic equations. The
//! kinetic half-steps are exact in Fourier space; the nonlinear step is an
//! exact pointwise phase rotation, so the modulus is untouched by it and the
//! mass is conserved to rounding.

use num_complex::Complex64;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::CoreError;
use crate::grid::{Field, Grid};
use crate::spectral::FftCache;
use crate::tau::{TauMode, TauScaler};
use crate::Result;

#[derive(Debug, Clone)]
pub enum NlsKind {
    /// i u_t + (1/2) Lap u = lambda |u|^{2 sigma} u
    Power { lambda: f64, sigma: f64 },
    /// i u_t + (1/2) Lap u = lambda ln(eps + |u|^2) u
    Logarithmic { lambda: f64, reg_eps: f64 },
    /// i v_t + (1/(2 tau^2)) Lap v = lambda v (ln(eps + |v|^2) + |y|^2)
    RescaledLog {
        lambda: f64,
        reg_eps: f64,
        scaler: TauScaler,
    },
}

impl NlsKind {
    pub fn lambda(&self) -> f64 {
        match self {
            NlsKind::Power { lambda, .. }
            | NlsKind::Logarithmic { lambda, .. }
            | NlsKind::RescaledLog { lambda, .. } => *lambda,
        }
    }

    pub fn scaler(&self) -> Option<&TauScaler> {
        match self {
            NlsKind::RescaledLog { scaler, .. } => Some(scaler),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NlsProblem {
    pub kind: NlsKind,
    pub grid: Grid,
    pub dt: f64,
    pub adaptive: bool,
}

impl NlsProblem {
    pub fn new(kind: NlsKind, grid: Grid, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(CoreError::ParameterOutOfRange(format!(
                "dt must be positive, got {dt}"
            )));
        }
        match &kind {
            NlsKind::Power { sigma, lambda } => {
                let d = grid.dim() as f64;
                let sub_crit = if d > 2.0 { 2.0 / (d - 2.0) } else { f64::INFINITY };
                // lambda = 0 is the linear flow; sigma is then inert
                if *lambda != 0.0 && !(*sigma > 0.0 && *sigma < sub_crit) {
                    return Err(CoreError::ParameterOutOfRange(format!(
                        "power nonlinearity needs 0 < sigma < {sub_crit}, got {sigma}"
                    )));
                }
            }
            NlsKind::Logarithmic { reg_eps, .. } => {
                if !(*reg_eps > 0.0) {
                    return Err(CoreError::ParameterOutOfRange(
                        "logarithmic kind needs reg_eps > 0".into(),
                    ));
                }
            }
            NlsKind::RescaledLog {
                reg_eps,
                scaler,
                lambda,
            } => {
                if !(*reg_eps > 0.0) {
                    return Err(CoreError::ParameterOutOfRange(
                        "rescaled kind needs reg_eps > 0".into(),
                    ));
                }
                match scaler.mode() {
                    TauMode::Logarithmic { lambda: l } if l == *lambda => {}
                    other => {
                        return Err(CoreError::ParameterOutOfRange(format!(
                            "rescaled kind needs a logarithmic tau scaler with matching lambda, got {other:?}"
                        )))
                    }
                }
            }
        }
        Ok(NlsProblem {
            kind,
            grid,
            dt,
            adaptive: false,
        })
    }
}

/// Owns the transform workspace for one integration; single-threaded by
/// construction, distinct solvers run independently.
pub struct NlsSolver {
    kind: NlsKind,
    grid: Grid,
    fft: FftCache,
    ksq: Vec<f64>,
    ysq: Vec<f64>,
    kin_mult: Vec<Complex64>,
    kin_mult_phase: f64,
}

impl NlsSolver {
    pub fn new(problem: &NlsProblem) -> Self {
        let grid = problem.grid;
        let ksq = (0..grid.size()).map(|i| grid.k_sq(i)).collect();
        let ysq = (0..grid.size()).map(|i| grid.radius_sq(i)).collect();
        NlsSolver {
            kind: problem.kind.clone(),
            fft: FftCache::for_grid(&grid),
            grid,
            ksq,
            ysq,
            kin_mult: vec![Complex64::new(0.0, 0.0); grid.size()],
            kin_mult_phase: f64::NAN,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> &NlsKind {
        &self.kind
    }

    /// Kinetic phase K = int c(s) ds over [t0, t1], with c = 1/2 for the
    /// physical-frame kinds and c = 1/(2 tau^2) for the rescaled one.
    fn kinetic_phase(&self, t0: f64, t1: f64) -> Result<f64> {
        match &self.kind {
            NlsKind::RescaledLog { scaler, .. } => scaler.kinetic_phase(t0, t1),
            _ => Ok(0.5 * (t1 - t0)),
        }
    }

    fn apply_kinetic(&mut self, values: &mut [Complex64], phase: f64) {
        if phase != self.kin_mult_phase {
            for (m, &ksq) in self.kin_mult.iter_mut().zip(&self.ksq) {
                *m = Complex64::from_polar(1.0, -ksq * phase);
            }
            self.kin_mult_phase = phase;
        }
        self.fft.forward(&self.grid, values);
        for (v, m) in values.iter_mut().zip(&self.kin_mult) {
            *v *= m;
        }
        self.fft.inverse(&self.grid, values);
    }

    fn apply_nonlinear(&mut self, values: &mut [Complex64], dt: f64) {
        match &self.kind {
            NlsKind::Power { lambda, sigma } => {
                if *lambda == 0.0 {
                    return;
                }
                for v in values.iter_mut() {
                    let rho = v.norm_sqr();
                    *v *= Complex64::from_polar(1.0, -dt * lambda * rho.powf(*sigma));
                }
            }
            NlsKind::Logarithmic { lambda, reg_eps } => {
                for v in values.iter_mut() {
                    let rho = v.norm_sqr();
                    *v *= Complex64::from_polar(1.0, -dt * lambda * (reg_eps + rho).ln());
                }
            }
            NlsKind::RescaledLog {
                lambda, reg_eps, ..
            } => {
                for (v, &ysq) in values.iter_mut().zip(&self.ysq) {
                    let rho = v.norm_sqr();
                    *v *= Complex64::from_polar(
                        1.0,
                        -dt * lambda * ((reg_eps + rho).ln() + ysq),
                    );
                }
            }
        }
    }

    /// One Strang step: half kinetic, exact nonlinear phase over dt, half
    /// kinetic. Returns a new field; the input is untouched.
    pub fn step_strang(&mut self, f: &Field, t: f64, dt: f64) -> Result<Field> {
        let mut values = f.values().to_vec();
        self.step_inplace(&mut values, t, dt)?;
        Field::new(self.grid, values)
            .map_err(|_| CoreError::NanDetected { t: t + dt })
    }

    /// In-place variant of `step_strang`; caller owns the buffer.
    pub fn step_inplace(&mut self, values: &mut [Complex64], t: f64, dt: f64) -> Result<()> {
        let ka = self.kinetic_phase(t, t + 0.5 * dt)?;
        let kb = self.kinetic_phase(t + 0.5 * dt, t + dt)?;
        self.apply_kinetic(values, ka);
        self.apply_nonlinear(values, dt);
        self.apply_kinetic(values, kb);
        if !values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(CoreError::NanDetected { t: t + dt });
        }
        Ok(())
    }

    /// March `steps` Strang steps from time t, fusing the adjacent kinetic
    /// half-steps between nonlinear applications (exact composition of the
    /// kinetic flow). Equivalent to calling step_inplace `steps` times.
    pub fn march_fused(
        &mut self,
        values: &mut [Complex64],
        t: f64,
        dt: f64,
        steps: usize,
    ) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        let ka = self.kinetic_phase(t, t + 0.5 * dt)?;
        self.apply_kinetic(values, ka);
        self.apply_nonlinear(values, dt);
        for j in 1..steps {
            let mid_prev = t + (j as f64 - 0.5) * dt;
            let k_full = self.kinetic_phase(mid_prev, mid_prev + dt)?;
            self.apply_kinetic(values, k_full);
            self.apply_nonlinear(values, dt);
        }
        let t_last_mid = t + (steps as f64 - 0.5) * dt;
        let kb = self.kinetic_phase(t_last_mid, t_last_mid + 0.5 * dt)?;
        self.apply_kinetic(values, kb);
        if !values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(CoreError::NanDetected {
                t: t + steps as f64 * dt,
            });
        }
        Ok(())
    }

    /// Mass fraction within `cells` grid cells of the box boundary.
    pub fn boundary_mass_fraction(&self, values: &[Complex64], cells: usize) -> f64 {
        let n = self.grid.points_per_axis();
        let mut total = 0.0;
        let mut edge = 0.0;
        for (flat, z) in values.iter().enumerate() {
            let rho = z.norm_sqr();
            total += rho;
            let near = (0..self.grid.dim()).any(|a| {
                let i = self.grid.axis_index(flat, a);
                i < cells || i >= n - cells
            });
            if near {
                edge += rho;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            edge / total
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub t0: f64,
    pub t_end: f64,
    /// diagnostics cadence, in steps
    pub record_every: usize,
    /// snapshot cadence, in records; None disables snapshots
    pub snapshot_every: Option<usize>,
    pub boundary_monitor: bool,
    /// fuse adjacent kinetic half-steps between records
    pub fuse_kinetic: bool,
}

impl EvolveOptions {
    pub fn to_time(t_end: f64) -> Self {
        EvolveOptions {
            t0: 0.0,
            t_end,
            record_every: 100,
            snapshot_every: None,
            boundary_monitor: true,
            fuse_kinetic: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, Field)>,
    pub final_field: Field,
    pub boundary_breach: bool,
}

/// Threshold of the boundary-mass monitor: fraction of total mass allowed
/// within three cells of the box edge.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;

/// Repeated Strang stepping with diagnostics sampling. A breach of the
/// boundary-mass monitor is flagged, not fatal; non-finite values abort.
pub fn evolve(problem: &NlsProblem, f0: &Field, opts: &EvolveOptions) -> Result<EvolveOutput> {
    if f0.grid() != problem.grid {
        return Err(CoreError::InvalidField(
            "initial datum lives on a different grid".into(),
        ));
    }
    let mut solver = NlsSolver::new(problem);
    let dt = problem.dt;
    let total_steps = ((opts.t_end - opts.t0) / dt).round() as usize;
    let chunk = opts.record_every.max(1);
    let lambda = problem.kind.lambda();
    let scaler = problem.kind.scaler();

    let mut values = f0.values().to_vec();
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut breach = false;

    let observe = |vals: &[Complex64],
                   t: f64,
                   solver: &NlsSolver,
                   records: &mut Vec<DiagnosticsRecord>,
                   snapshots: &mut Vec<(f64, Field)>,
                   breach: &mut bool|
     -> Result<()> {
        let field = Field::new(problem.grid, vals.to_vec())
            .map_err(|_| CoreError::NanDetected { t })?;
        records.push(diagnostics::collect(&field, lambda, scaler, t)?);
        if opts.boundary_monitor
            && solver.boundary_mass_fraction(vals, 3) > BOUNDARY_MASS_LIMIT
        {
            *breach = true;
        }
        if let Some(every) = opts.snapshot_every {
            if (records.len() - 1) % every == 0 {
                snapshots.push((t, field));
            }
        }
        Ok(())
    };

    observe(
        &values,
        opts.t0,
        &solver,
        &mut records,
        &mut snapshots,
        &mut breach,
    )?;

    let mut done = 0usize;
    while done < total_steps {
        let m = chunk.min(total_steps - done);
        let t = opts.t0 + done as f64 * dt;
        if opts.fuse_kinetic {
            solver.march_fused(&mut values, t, dt, m)?;
        } else {
            for j in 0..m {
                solver.step_inplace(&mut values, t + j as f64 * dt, dt)?;
            }
        }
        done += m;
        observe(
            &values,
            opts.t0 + done as f64 * dt,
            &solver,
            &mut records,
            &mut snapshots,
            &mut breach,
        )?;
    }

    let final_field =
        Field::new(problem.grid, values).map_err(|_| CoreError::NanDetected { t: opts.t_end })?;
    Ok(EvolveOutput {
        records,
        snapshots,
        final_field,
        boundary_breach: breach,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{GaussianSolution, WidthParams};

    fn gaussian_field(grid: Grid) -> Field {
        Field::from_fn(grid, |x| {
            Complex64::new((-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
        })
    }

    #[test]
    fn linear_step_reproduces_free_propagator() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let problem = NlsProblem::new(
            NlsKind::Power {
                lambda: 0.0,
                sigma: 1.0,
            },
            grid,
            0.5,
        )
        .unwrap();
        let mut solver = NlsSolver::new(&problem);
        let mut f = gaussian_field(grid);
        // one exact linear step of size 1.0 (two applications of dt = 0.5)
        f = solver.step_strang(&f, 0.0, 0.5).unwrap();
        f = solver.step_strang(&f, 0.5, 0.5).unwrap();
        let t = 1.0;
        let denom = Complex64::new(1.0, t);
        let expect = Field::from_fn(grid, |x| {
            denom.powf(-0.5) * (-(0.5 * x[0] * x[0]) / denom).exp()
        });
        assert!(f.l2_distance(&expect).unwrap() < 1e-10);
    }

    #[test]
    fn mass_is_conserved_per_step() {
        let grid = Grid::new(1, 128, 20.0).unwrap();
        let problem = NlsProblem::new(
            NlsKind::Logarithmic {
                lambda: -1.0,
                reg_eps: 1e-12,
            },
            grid,
            1e-2,
        )
        .unwrap();
        let mut solver = NlsSolver::new(&problem);
        let mut f = gaussian_field(grid);
        let m0 = f.l2_norm();
        for j in 0..200 {
            f = solver.step_strang(&f, j as f64 * 1e-2, 1e-2).unwrap();
            let m = f.l2_norm();
            assert!((m - m0).abs() < 1e-13 * m0, "step {j}: {m} vs {m0}");
        }
    }

    #[test]
    fn nonlinear_substep_preserves_modulus_exactly() {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        let problem = NlsProblem::new(
            NlsKind::Logarithmic {
                lambda: 2.0,
                reg_eps: 1e-10,
            },
            grid,
            1e-3,
        )
        .unwrap();
        let mut solver = NlsSolver::new(&problem);
        let f = gaussian_field(grid);
        let mut vals = f.values().to_vec();
        solver.apply_nonlinear(&mut vals, 0.37);
        for (a, b) in vals.iter().zip(f.values()) {
            // phase rotation only: moduli agree to the last ulp of sin/cos
            assert!((a.norm_sqr() - b.norm_sqr()).abs() <= 4.0 * f64::EPSILON * b.norm_sqr());
        }
    }

    #[test]
    fn fused_march_equals_plain_steps() {
        let grid = Grid::new(1, 128, 20.0).unwrap();
        let problem = NlsProblem::new(
            NlsKind::Logarithmic {
                lambda: 1.0,
                reg_eps: 1e-10,
            },
            grid,
            1e-3,
        )
        .unwrap();
        let f0 = gaussian_field(grid);

        let mut s1 = NlsSolver::new(&problem);
        let mut a = f0.values().to_vec();
        s1.march_fused(&mut a, 0.0, 1e-3, 50).unwrap();

        let mut s2 = NlsSolver::new(&problem);
        let mut b = f0.values().to_vec();
        for j in 0..50 {
            s2.step_inplace(&mut b, j as f64 * 1e-3, 1e-3).unwrap();
        }
        let max_dev = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        assert!(max_dev < 1e-13, "fused vs plain: {max_dev}");
    }

    #[test]
    fn gausson_is_discretely_stationary() {
        // lambda = -1, omega = 0 standing profile sqrt(e) e^{-x^2}
        let grid = Grid::new(1, 256, 24.0).unwrap();
        let problem = NlsProblem::new(
            NlsKind::Logarithmic {
                lambda: -1.0,
                reg_eps: 1e-12,
            },
            grid,
            1e-3,
        )
        .unwrap();
        let f0 = Field::from_fn(grid, |x| {
            Complex64::new(0.5f64.exp() * (-x[0] * x[0]).exp(), 0.0)
        });
        let out = evolve(
            &problem,
            &f0,
            &EvolveOptions {
                t0: 0.0,
                t_end: 1.0,
                record_every: 200,
                snapshot_every: None,
                boundary_monitor: true,
                fuse_kinetic: true,
            },
        )
        .unwrap();
        assert!(!out.boundary_breach);
        let dist = out.final_field.l2_distance(&f0).unwrap();
        assert!(dist < 1e-6, "gausson drift {dist}");
    }

    #[test]
    fn evolve_matches_gaussian_oracle_dispersive() {
        // lambda = +1 Gaussian against the closed width/amplitude trajectory
        let grid = Grid::new(1, 512, 40.0).unwrap();
        let lambda = 1.0;
        let problem = NlsProblem::new(
            NlsKind::Logarithmic {
                lambda,
                reg_eps: 1e-12,
            },
            grid,
            1e-3,
        )
        .unwrap();
        let params = WidthParams {
            alpha0: 1.0,
            beta0: 0.0,
            lambda,
        };
        let exact = GaussianSolution::isotropic(Complex64::new(1.0, 0.0), params, 1, 2.0, 1e-12)
            .unwrap();
        let f0 = exact.field(0.0, &grid).unwrap();
        let out = evolve(&problem, &f0, &EvolveOptions::to_time(1.0)).unwrap();
        let want = exact.field(1.0, &grid).unwrap();
        let err = out.final_field.l2_distance(&want).unwrap();
        assert!(err < 1e-4, "solver vs gaussian oracle: {err}");
    }

    #[test]
    fn zero_datum_stays_zero() {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        let problem = NlsProblem::new(
            NlsKind::Logarithmic {
                lambda: 1.0,
                reg_eps: 1e-10,
            },
            grid,
            1e-2,
        )
        .unwrap();
        let f0 = Field::zeros(grid);
        let out = evolve(&problem, &f0, &EvolveOptions::to_time(0.5)).unwrap();
        assert!(out.final_field.l2_norm() == 0.0);
    }

    #[test]
    fn tensor_datum_evolves_as_product() {
        // 2d logarithmic run vs product of 1d runs
        let n = 64;
        let len = 16.0;
        let g2 = Grid::new(2, n, len).unwrap();
        let g1 = Grid::new(1, n, len).unwrap();
        let lambda = -1.0;
        let dt = 1e-3;
        let t_end = 0.5;

        let u01 = Field::from_fn(g1, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0));
        let u02 = Field::from_fn(g1, |x| {
            Complex64::new((-0.8 * (x[0] - 0.5) * (x[0] - 0.5)).exp(), 0.0)
        });

        let mk = |grid| {
            NlsProblem::new(
                NlsKind::Logarithmic {
                    lambda,
                    reg_eps: 1e-12,
                },
                grid,
                dt,
            )
            .unwrap()
        };
        let r1 = evolve(&mk(g1), &u01, &EvolveOptions::to_time(t_end)).unwrap();
        let r2 = evolve(&mk(g1), &u02, &EvolveOptions::to_time(t_end)).unwrap();

        let prod0 = Field::new(
            g2,
            (0..g2.size())
                .map(|flat| {
                    u01.values()[g2.axis_index(flat, 0)] * u02.values()[g2.axis_index(flat, 1)]
                })
                .collect(),
        )
        .unwrap();
        let r2d = evolve(&mk(g2), &prod0, &EvolveOptions::to_time(t_end)).unwrap();

        let prod_t = Field::new(
            g2,
            (0..g2.size())
                .map(|flat| {
                    r1.final_field.values()[g2.axis_index(flat, 0)]
                        * r2.final_field.values()[g2.axis_index(flat, 1)]
                })
                .collect(),
        )
        .unwrap();
        let err = r2d.final_field.l2_distance(&prod_t).unwrap();
        assert!(err < 1e-6, "tensorization error {err}");
    }

    #[test]
    fn boundary_breach_is_flagged() {
        // a wide gaussian on a too-small box
        let grid = Grid::new(1, 64, 6.0).unwrap();
        let problem = NlsProblem::new(
            NlsKind::Power {
                lambda: 0.0,
                sigma: 1.0,
            },
            grid,
            1e-2,
        )
        .unwrap();
        let f0 = gaussian_field(grid);
        let out = evolve(&problem, &f0, &EvolveOptions::to_time(0.1)).unwrap();
        assert!(out.boundary_breach);
    }

    #[test]
    fn rescaled_kind_requires_matching_scaler() {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        let scaler = TauScaler::solve(TauMode::Logarithmic { lambda: 2.0 }, 1.0, 1e-10).unwrap();
        let bad = NlsProblem::new(
            NlsKind::RescaledLog {
                lambda: 1.0,
                reg_eps: 1e-10,
                scaler,
            },
            grid,
            1e-3,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn supercritical_power_rejected() {
        let grid = Grid::new(3, 8, 8.0).unwrap();
        let bad = NlsProblem::new(
            NlsKind::Power {
                lambda: 1.0,
                sigma: 2.5,
            },
            grid,
            1e-3,
        );
        assert!(bad.is_err());
    }
}
