//! Exact Gaussian dynamics: the width equation r'' = a0^2/r^3 + 2*lambda*a0/r,
//! the amplitude formula it drives, the effective potential with its breather
//! period quadrature, and synthesis of the resulting fields on a grid
//! (tensorized per axis in d > 1).

use num_complex::Complex64;

use crate::error::CoreError;
use crate::grid::{Field, Grid};
use crate::ode::{integrate, OdeOptions, OdeSolution};
use crate::quad;
use crate::Result;

/// Parameters of one axis of the Gaussian ansatz b(t) exp(-a(t) x^2 / 2) with
/// a(0) = alpha0 + i*beta0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthParams {
    pub alpha0: f64,
    pub beta0: f64,
    pub lambda: f64,
}

impl WidthParams {
    fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(CoreError::ParameterOutOfRange(format!(
                "alpha0 must be positive, got {}",
                self.alpha0
            )));
        }
        Ok(())
    }
}

/// Width trajectory r(t) with r(0) = 1, r'(0) = -beta0. The integrated state
/// also carries Re A(t) = alpha0 * int dt/r^2 and int_0^t Im A(s) ds
/// (with Im A(s) = -ln r(s)), which the amplitude formula needs.
#[derive(Debug, Clone)]
pub struct WidthTrajectory {
    params: WidthParams,
    sol: OdeSolution,
}

const R_FLOOR: f64 = 1e-8;

/// Integrate the width equation up to t_end with the given tolerance.
pub fn evolve_width(params: WidthParams, t_end: f64, tol: f64) -> Result<WidthTrajectory> {
    params.validate()?;
    let WidthParams { alpha0, lambda, .. } = params;
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let r = y[0];
        dy[0] = y[1];
        dy[1] = alpha0 * alpha0 / (r * r * r) + 2.0 * lambda * alpha0 / r;
        dy[2] = alpha0 / (r * r);
        dy[3] = -r.ln();
    };
    let mut opts = OdeOptions::with_tol(tol);
    opts.h_max = 0.25;
    let sol = integrate(
        rhs,
        0.0,
        &[1.0, -params.beta0, 0.0, 0.0],
        t_end,
        &opts,
        |t, y| {
            if y[0] < R_FLOOR {
                Err(CoreError::WidthCollapse {
                    t,
                    r: y[0],
                    floor: R_FLOOR,
                })
            } else {
                Ok(())
            }
        },
    )?;
    Ok(WidthTrajectory { params, sol })
}

impl WidthTrajectory {
    pub fn params(&self) -> WidthParams {
        self.params
    }

    pub fn t_end(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn r(&self, t: f64) -> Result<f64> {
        self.sol.eval_component(0, t)
    }

    pub fn r_dot(&self, t: f64) -> Result<f64> {
        self.sol.eval_component(1, t)
    }

    /// a(t) = alpha0 / r^2 - i r'/r.
    pub fn width_param(&self, t: f64) -> Result<Complex64> {
        let r = self.r(t)?;
        let rd = self.r_dot(t)?;
        Ok(Complex64::new(
            self.params.alpha0 / (r * r),
            -rd / r,
        ))
    }

    /// A(t) = int_0^t a(s) ds; the imaginary part is -ln r(t) exactly.
    pub fn accumulated(&self, t: f64) -> Result<Complex64> {
        let re = self.sol.eval_component(2, t)?;
        let r = self.r(t)?;
        Ok(Complex64::new(re, -r.ln()))
    }

    /// int_0^t Im A(s) ds = -int_0^t ln r(s) ds.
    pub fn im_a_integral(&self, t: f64) -> Result<f64> {
        self.sol.eval_component(3, t)
    }

    /// Residual of r'^2 = beta0^2 + alpha0^2 - alpha0^2/r^2 + 4 lambda alpha0 ln r.
    pub fn energy_residual(&self, t: f64) -> Result<f64> {
        let WidthParams {
            alpha0,
            beta0,
            lambda,
        } = self.params;
        let r = self.r(t)?;
        let rd = self.r_dot(t)?;
        Ok(rd * rd
            - (beta0 * beta0 + alpha0 * alpha0 - alpha0 * alpha0 / (r * r)
                + 4.0 * lambda * alpha0 * r.ln()))
    }

    /// Sign changes of r'(t), refined by bisection on the dense output. The
    /// flag marks crossings where r' goes negative-to-positive (minima of r).
    pub fn rdot_zero_crossings(&self) -> Vec<(f64, bool)> {
        let times = self.sol.step_times();
        let mut out = Vec::new();
        for w in times.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let fa = self.r_dot(a).unwrap_or(f64::NAN);
            let fb = self.r_dot(b).unwrap_or(f64::NAN);
            if !fa.is_finite() || !fb.is_finite() || fa == 0.0 || fa.signum() == fb.signum() {
                continue;
            }
            let rising = fa < 0.0;
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                let fm = self.r_dot(m).unwrap_or(f64::NAN);
                if (fm < 0.0) == rising {
                    a = m;
                } else {
                    b = m;
                }
                if b - a < 1e-14 * (1.0 + b.abs()) {
                    break;
                }
            }
            out.push((0.5 * (a + b), rising));
        }
        out
    }

    /// Oscillation period measured from spacings between minima of r. Returns
    /// None when fewer than two minima were observed.
    pub fn period_from_crossings(&self) -> Option<f64> {
        let minima: Vec<f64> = self
            .rdot_zero_crossings()
            .into_iter()
            .filter(|(_, rising)| *rising)
            .map(|(t, _)| t)
            .collect();
        if minima.len() < 2 {
            return None;
        }
        let spans = minima.len() - 1;
        Some((minima[spans] - minima[0]) / spans as f64)
    }
}

/// Amplitude b(t) = b0 exp(-i lambda t ln|b0|^2 - (i/2) A(t) - i lambda int_0^t Im A(s) ds),
/// the solution of i b' = (a/2) b + lambda b ln|b|^2 along the width trajectory.
pub fn amplitude(traj: &WidthTrajectory, b0: Complex64, t: f64) -> Result<Complex64> {
    if b0.norm_sqr() == 0.0 {
        return Err(CoreError::ParameterOutOfRange("b0 must be nonzero".into()));
    }
    let lambda = traj.params.lambda;
    let a_cum = traj.accumulated(t)?;
    let exponent = Complex64::new(0.0, -lambda * t * b0.norm_sqr().ln())
        - Complex64::new(0.0, 0.5) * a_cum
        - Complex64::new(0.0, lambda * traj.im_a_integral(t)?);
    Ok(b0 * exponent.exp())
}

/// Effective potential U(r) of the width motion (lambda < 0 regime):
/// U(r) = -beta0^2/2 - (alpha0^2/2)(1 - 1/r^2) - 2 lambda alpha0 ln r.
pub fn potential(p: WidthParams, r: f64) -> f64 {
    -0.5 * p.beta0 * p.beta0
        - 0.5 * p.alpha0 * p.alpha0 * (1.0 - 1.0 / (r * r))
        - 2.0 * p.lambda * p.alpha0 * r.ln()
}

/// Location and value of the potential minimum: r_min = sqrt(alpha0 / (2|lambda|)),
/// U_min = -beta0^2/2 + (alpha0^2/2)(x - 1 - x ln x) at x = 2|lambda|/alpha0.
pub fn potential_min(p: WidthParams) -> Result<(f64, f64)> {
    p.validate()?;
    if !(p.lambda < 0.0) {
        return Err(CoreError::ParameterOutOfRange(format!(
            "potential well needs lambda < 0, got {}",
            p.lambda
        )));
    }
    let x = 2.0 * p.lambda.abs() / p.alpha0;
    let r_min = (p.alpha0 / (2.0 * p.lambda.abs())).sqrt();
    let u_min = -0.5 * p.beta0 * p.beta0 + 0.5 * p.alpha0 * p.alpha0 * (x - 1.0 - x * x.ln());
    Ok((r_min, u_min))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BreatherPeriod {
    /// Degenerate minimum: r(t) = 1 for all t, no oscillation.
    Stationary,
    Periodic(f64),
}

/// Kinetic function g(r) = r'^2 = beta0^2 + alpha0^2(1 - 1/r^2) + 4 lambda alpha0 ln r.
fn kinetic(p: WidthParams, r: f64) -> f64 {
    p.beta0 * p.beta0 + p.alpha0 * p.alpha0 * (1.0 - 1.0 / (r * r))
        + 4.0 * p.lambda * p.alpha0 * r.ln()
}

fn bisect_root(p: WidthParams, mut lo: f64, mut hi: f64) -> f64 {
    // kinetic(lo) and kinetic(hi) have opposite signs on entry
    let positive_at_lo = kinetic(p, lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (kinetic(p, mid) > 0.0) == positive_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Oscillation period of the width for lambda < 0, by the turning-point
/// quadrature T = 2 int_{r*}^{r^*} dr / sqrt(g(r)) with the endpoint
/// singularity flattened by r = r* + (r^* - r*) sin^2(theta).
pub fn breather_period(p: WidthParams) -> Result<BreatherPeriod> {
    p.validate()?;
    if !(p.lambda < 0.0) {
        return Err(CoreError::ParameterOutOfRange(format!(
            "breathers need lambda < 0, got {}",
            p.lambda
        )));
    }
    let (r_eq, _) = potential_min(p)?;
    let g_peak = kinetic(p, r_eq);
    let scale = p.alpha0 * p.alpha0 + p.beta0 * p.beta0;
    if g_peak <= 1e-13 * scale {
        return Ok(BreatherPeriod::Stationary);
    }

    // turning points bracket the potential minimum
    let mut lo = r_eq;
    loop {
        lo *= 0.7;
        if kinetic(p, lo) < 0.0 {
            break;
        }
        if lo < 1e-12 {
            return Err(CoreError::Degenerate(
                "no inner turning point found".into(),
            ));
        }
    }
    let r_star = bisect_root(p, lo, r_eq);
    let mut hi = r_eq;
    loop {
        hi *= 1.5;
        if kinetic(p, hi) < 0.0 {
            break;
        }
        if hi > 1e12 {
            return Err(CoreError::Degenerate(
                "no outer turning point found".into(),
            ));
        }
    }
    let r_upper = bisect_root(p, r_eq, hi);

    let delta = r_upper - r_star;
    let half = quad::integrate(
        |theta| {
            let s = theta.sin();
            let c = theta.cos();
            let r = r_star + delta * s * s;
            let g = kinetic(p, r).max(0.0);
            if g == 0.0 {
                // only exactly at the endpoints, where the weight vanishes
                0.0
            } else {
                2.0 * delta * s * c / g.sqrt()
            }
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        240,
    );
    Ok(BreatherPeriod::Periodic(2.0 * half))
}

/// One axis of a Gaussian solution: its amplitude factor and width trajectory.
#[derive(Debug, Clone)]
pub struct GaussianAxis {
    pub b0: Complex64,
    pub traj: WidthTrajectory,
}

/// Product-form Gaussian solution; each axis solves the one-dimensional
/// problem with the shared coupling lambda.
#[derive(Debug, Clone)]
pub struct GaussianSolution {
    axes: Vec<GaussianAxis>,
}

impl GaussianSolution {
    /// Isotropic solution: the same width dynamics replicated on `dim` axes.
    pub fn isotropic(
        b0: Complex64,
        params: WidthParams,
        dim: usize,
        t_end: f64,
        tol: f64,
    ) -> Result<Self> {
        let traj = evolve_width(params, t_end, tol)?;
        // per-axis amplitude: the d-th root keeps the stated b0 as the product
        let axis_b0 = Complex64::from_polar(
            b0.norm().powf(1.0 / dim as f64),
            b0.arg() / dim as f64,
        );
        Ok(GaussianSolution {
            axes: (0..dim)
                .map(|_| GaussianAxis {
                    b0: axis_b0,
                    traj: traj.clone(),
                })
                .collect(),
        })
    }

    /// Anisotropic solution from per-axis (b0, width) data; all axes must
    /// share the same lambda.
    pub fn anisotropic(axes: Vec<(Complex64, WidthParams)>, t_end: f64, tol: f64) -> Result<Self> {
        if axes.is_empty() {
            return Err(CoreError::ParameterOutOfRange("no axes given".into()));
        }
        let lambda = axes[0].1.lambda;
        if axes.iter().any(|(_, p)| p.lambda != lambda) {
            return Err(CoreError::ParameterOutOfRange(
                "all axes must share lambda".into(),
            ));
        }
        let mut out = Vec::with_capacity(axes.len());
        for (b0, p) in axes {
            out.push(GaussianAxis {
                b0,
                traj: evolve_width(p, t_end, tol)?,
            });
        }
        Ok(GaussianSolution { axes: out })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[GaussianAxis] {
        &self.axes
    }

    pub fn t_end(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| a.traj.t_end())
            .fold(f64::INFINITY, f64::min)
    }

    /// Product of the per-axis amplitudes at time t.
    pub fn amplitude(&self, t: f64) -> Result<Complex64> {
        let mut b = Complex64::new(1.0, 0.0);
        for ax in &self.axes {
            b *= amplitude(&ax.traj, ax.b0, t)?;
        }
        Ok(b)
    }

    /// Sample the exact solution on a grid at time t.
    pub fn field(&self, t: f64, grid: &Grid) -> Result<Field> {
        if grid.dim() != self.dim() {
            return Err(CoreError::DimensionUnsupported {
                dim: grid.dim(),
                what: "gaussian_field with mismatched solution dimension",
            });
        }
        let n = grid.points_per_axis();
        // per-axis sample tables b_a(t) * exp(-a_a(t) x^2 / 2)
        let mut tables: Vec<Vec<Complex64>> = Vec::with_capacity(self.dim());
        for ax in &self.axes {
            let a = ax.traj.width_param(t)?;
            let b = amplitude(&ax.traj, ax.b0, t)?;
            tables.push(
                (0..n)
                    .map(|i| {
                        let x = grid.coordinate(i);
                        b * (-a * (0.5 * x * x)).exp()
                    })
                    .collect(),
            );
        }
        let values = (0..grid.size())
            .map(|flat| {
                let mut z = Complex64::new(1.0, 0.0);
                for (axis, table) in tables.iter().enumerate() {
                    z *= table[grid.axis_index(flat, axis)];
                }
                z
            })
            .collect();
        Field::new(*grid, values)
    }

    /// Closed-form squared L2 norm, |B(t)|^2 prod_a sqrt(pi / alpha_a(t)).
    pub fn l2_norm_sq(&self, t: f64) -> Result<f64> {
        let mut acc = self.amplitude(t)?.norm_sqr();
        for ax in &self.axes {
            let alpha = ax.traj.width_param(t)?.re;
            acc *= (std::f64::consts::PI / alpha).sqrt();
        }
        Ok(acc)
    }

    /// Closed-form squared homogeneous H1 norm (sum over axes of
    /// |a_a|^2 * second moment of the axis Gaussian).
    pub fn grad_l2_norm_sq(&self, t: f64) -> Result<f64> {
        let b_sq = self.amplitude(t)?.norm_sqr();
        let mut masses = Vec::with_capacity(self.dim());
        let mut params = Vec::with_capacity(self.dim());
        for ax in &self.axes {
            let a = ax.traj.width_param(t)?;
            masses.push((std::f64::consts::PI / a.re).sqrt());
            params.push(a);
        }
        let mut acc = 0.0;
        for (i, a) in params.iter().enumerate() {
            // |a|^2 int x^2 e^{-alpha x^2} = |a|^2 (1/(2 alpha)) sqrt(pi/alpha)
            let mut term = a.norm_sqr() * masses[i] / (2.0 * a.re);
            for (j, m) in masses.iter().enumerate() {
                if j != i {
                    term *= m;
                }
            }
            acc += term;
        }
        Ok(b_sq * acc)
    }
}
