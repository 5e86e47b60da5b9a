//! Gausson factories, the modulated (orbital) distance, multi-soliton
//! superposition data, and the pointwise nonlinearity estimates run as audits.

use num_complex::Complex64;

use crate::diagnostics::InequalityCheck;
use crate::error::CoreError;
use crate::grid::{Field, Grid};
use crate::spectral;
use crate::Result;

/// A moving Gausson e^{i omega t} e^{d/2 - omega/(2 lambda)} e^{lambda |x - c - vt|^2}
/// boosted by the Galilean phase; lambda < 0.
#[derive(Debug, Clone)]
pub struct GaussonSpec {
    pub omega: f64,
    pub lambda: f64,
    pub velocity: Vec<f64>,
    pub center: Vec<f64>,
}

impl GaussonSpec {
    pub fn standing(omega: f64, lambda: f64, dim: usize) -> Self {
        GaussonSpec {
            omega,
            lambda,
            velocity: vec![0.0; dim],
            center: vec![0.0; dim],
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.lambda < 0.0) {
            return Err(CoreError::ParameterOutOfRange(format!(
                "gausson needs lambda < 0, got {}",
                self.lambda
            )));
        }
        if self.velocity.len() != dim || self.center.len() != dim {
            return Err(CoreError::ParameterOutOfRange(
                "gausson velocity/center dimension mismatch".into(),
            ));
        }
        Ok(())
    }

    /// Peak amplitude e^{d/2 - omega/(2 lambda)} of the profile.
    pub fn profile_amplitude(&self, dim: usize) -> f64 {
        (dim as f64 / 2.0 - self.omega / (2.0 * self.lambda)).exp()
    }

    /// Closed-form mass A^2 (pi / (2|lambda|))^{d/2}.
    pub fn mass(&self, dim: usize) -> f64 {
        let a = self.profile_amplitude(dim);
        a * a * (std::f64::consts::PI / (2.0 * self.lambda.abs())).powf(dim as f64 / 2.0)
    }

    /// The unique frequency whose Gausson carries the prescribed mass.
    pub fn omega_for_mass(mass: f64, lambda: f64, dim: usize) -> Result<f64> {
        if !(lambda < 0.0) || !(mass > 0.0) {
            return Err(CoreError::ParameterOutOfRange(
                "omega_for_mass needs lambda < 0 and mass > 0".into(),
            ));
        }
        let d = dim as f64;
        Ok(lambda
            * (d + 0.5 * d * (std::f64::consts::PI / (2.0 * lambda.abs())).ln() - mass.ln()))
    }
}

/// Sample the exact Gausson solution at time t.
pub fn gausson(spec: &GaussonSpec, t: f64, grid: &Grid) -> Result<Field> {
    let dim = grid.dim();
    spec.validate(dim)?;
    if spec.velocity.iter().any(|&v| v != 0.0) && !grid.admissible_velocity(&spec.velocity) {
        return Err(CoreError::InadmissibleVelocity {
            value: spec.velocity[0],
            len: grid.box_length(),
        });
    }
    let amp = spec.profile_amplitude(dim);
    let vsq: f64 = spec.velocity.iter().map(|v| v * v).sum();
    let rot = spec.omega * t - 0.5 * vsq * t;
    let values = (0..grid.size())
        .map(|flat| {
            let p = grid.point(flat);
            let mut r2 = 0.0;
            let mut vdotx = 0.0;
            for a in 0..dim {
                let d = p[a] - spec.center[a] - spec.velocity[a] * t;
                r2 += d * d;
                vdotx += spec.velocity[a] * p[a];
            }
            Complex64::from_polar(amp * (spec.lambda * r2).exp(), rot + vdotx)
        })
        .collect();
    Field::new(*grid, values)
}

/// Sum of Gausson fields at time t; with t = 0 this is the superposition
/// experiment's initial datum, at t > 0 the frozen reference of individually
/// exact solutions.
pub fn multi_gausson(specs: &[GaussonSpec], t: f64, grid: &Grid) -> Result<Field> {
    if specs.is_empty() {
        return Err(CoreError::ParameterOutOfRange("no gaussons given".into()));
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.size()];
    for spec in specs {
        let g = gausson(spec, t, grid)?;
        for (a, b) in acc.iter_mut().zip(g.values()) {
            *a += b;
        }
    }
    Field::new(*grid, acc)
}

/// Outcome of the orbital fit min over (theta, y) of
/// ||u - e^{i theta} phi_omega(. - y)||_{H1}.
#[derive(Debug, Clone)]
pub struct ModulatedFit {
    pub distance: f64,
    pub theta: f64,
    pub shift: Vec<f64>,
    pub converged: bool,
}

struct OrbitObjective<'a> {
    u: &'a Field,
    grads: Vec<Field>,
    u_h1_sq: f64,
    amp: f64,
    lambda: f64,
}

impl<'a> OrbitObjective<'a> {
    fn new(u: &'a Field, spec: &GaussonSpec) -> Self {
        let grads = spectral::gradient(u);
        let vol = u.grid().cell_volume();
        let mut h1 = u.values().iter().map(|z| z.norm_sqr()).sum::<f64>();
        for g in &grads {
            h1 += g.values().iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        OrbitObjective {
            u,
            grads,
            u_h1_sq: h1 * vol,
            amp: spec.profile_amplitude(u.grid().dim()),
            lambda: spec.lambda,
        }
    }

    /// Returns (squared distance at the optimal phase, that phase) for a shift y.
    fn eval(&self, y: &[f64]) -> (f64, f64) {
        let grid = self.u.grid();
        let dim = grid.dim();
        let vol = grid.cell_volume();
        let mut pairing = Complex64::new(0.0, 0.0);
        let mut phi_h1_sq = 0.0;
        for (flat, z) in self.u.values().iter().enumerate() {
            let p = grid.point(flat);
            let mut r2 = 0.0;
            for a in 0..dim {
                let d = p[a] - y[a];
                r2 += d * d;
            }
            let phi = self.amp * (self.lambda * r2).exp();
            pairing += z.conj() * phi;
            phi_h1_sq += phi * phi;
            for a in 0..dim {
                let dphi = 2.0 * self.lambda * (p[a] - y[a]) * phi;
                pairing += self.grads[a].values()[flat].conj() * dphi;
                phi_h1_sq += dphi * dphi;
            }
        }
        pairing *= vol;
        phi_h1_sq *= vol;
        let d_sq = self.u_h1_sq + phi_h1_sq - 2.0 * pairing.norm();
        // pairing = <phi, u> in the integral-of-a-conj(b) convention, so the
        // distance-minimizing rotation is its negated argument
        (d_sq, -pairing.arg())
    }

    /// Cancellation-free squared distance at explicit (theta, y), by direct
    /// quadrature of |u - e^{i theta} phi_y|^2 + |grad(u - e^{i theta} phi_y)|^2.
    fn eval_direct(&self, theta: f64, y: &[f64]) -> f64 {
        let grid = self.u.grid();
        let dim = grid.dim();
        let rot = Complex64::from_polar(1.0, theta);
        let mut acc = 0.0;
        for (flat, z) in self.u.values().iter().enumerate() {
            let p = grid.point(flat);
            let mut r2 = 0.0;
            for a in 0..dim {
                let d = p[a] - y[a];
                r2 += d * d;
            }
            let phi = self.amp * (self.lambda * r2).exp();
            acc += (z - rot * phi).norm_sqr();
            for a in 0..dim {
                let dphi = 2.0 * self.lambda * (p[a] - y[a]) * phi;
                acc += (self.grads[a].values()[flat] - rot * dphi).norm_sqr();
            }
        }
        acc * grid.cell_volume()
    }
}

/// Minimize the H1 distance of `u` to the orbit of the standing profile of
/// `spec` over phase and translation. The shift search starts from the
/// density barycenter (coarse scan, then per-axis parabolic refinement); the
/// phase optimum is analytic.
pub fn modulated_distance(u: &Field, spec: &GaussonSpec) -> Result<ModulatedFit> {
    let grid = u.grid();
    spec.validate(grid.dim())?;
    let obj = OrbitObjective::new(u, spec);
    let m = spectral::moments(u);
    if !(m.mass > 0.0) {
        return Err(CoreError::InvalidField("orbital fit of the zero field".into()));
    }
    let mut y: Vec<f64> = m.center.iter().map(|c| c / m.mass).collect();

    // coarse scan, one axis at a time, around the barycenter
    let width = 0.5 / spec.lambda.abs().sqrt();
    let coarse = grid.spacing().max(0.25 * width);
    for _ in 0..2 {
        for a in 0..grid.dim() {
            let mut best = (obj.eval(&y).0, y[a]);
            for j in -10..=10 {
                let mut trial = y.clone();
                trial[a] += j as f64 * coarse;
                let v = obj.eval(&trial).0;
                if v < best.0 {
                    best = (v, trial[a]);
                }
            }
            y[a] = best.1;
        }
    }

    // per-axis parabolic refinement with a shrinking stencil; the pairing
    // objective is cheap but suffers cancellation near the orbit, so a final
    // polish pass works on the direct sum-of-squares distance
    let probe_pairing = |y: &[f64]| obj.eval(y).0;
    let probe_direct = |y: &[f64]| {
        let theta = obj.eval(y).1;
        obj.eval_direct(theta, y)
    };
    let mut converged = false;
    for stage in 0..2 {
        let (probe, delta0, floor): (&dyn Fn(&[f64]) -> f64, f64, f64) = if stage == 0 {
            (&probe_pairing, coarse, 1e-7)
        } else {
            (&probe_direct, 1e-5, 1e-11)
        };
        let mut delta = delta0;
        converged = false;
        for _ in 0..80 {
            let mut moved = 0.0f64;
            for a in 0..grid.dim() {
                let mut ym = y.clone();
                ym[a] -= delta;
                let mut yp = y.clone();
                yp[a] += delta;
                let fm = probe(&ym);
                let f0 = probe(&y);
                let fp = probe(&yp);
                let denom = fm - 2.0 * f0 + fp;
                let step = if denom > 0.0 {
                    (0.5 * (fm - fp) / denom * delta).clamp(-delta, delta)
                } else if fm < fp {
                    -delta
                } else if fp < fm {
                    delta
                } else {
                    0.0
                };
                y[a] += step;
                moved = moved.max(step.abs());
            }
            if moved < 0.25 * delta {
                delta *= 0.35;
            }
            if delta < floor {
                converged = true;
                break;
            }
        }
    }

    let (_, theta) = obj.eval(&y);
    let d_sq = obj.eval_direct(theta, &y);
    Ok(ModulatedFit {
        distance: d_sq.max(0.0).sqrt(),
        theta,
        shift: y,
        converged,
    })
}

fn f_log(z: Complex64) -> Complex64 {
    let r2 = z.norm_sqr();
    if r2 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z * r2.ln()
    }
}

/// Asymmetric Lipschitz-type estimate of F(z) = z ln|z|^2 on the unit disk:
/// |F(z) - F(z')| <= |z - z'| (6 - ln|z|^2), for |z|, |z'| <= 1 and z != 0.
pub fn nonlinearity_estimate_check(z: Complex64, zp: Complex64) -> Result<InequalityCheck> {
    if z.norm() > 1.0 + 1e-12 || zp.norm() > 1.0 + 1e-12 {
        return Err(CoreError::ParameterOutOfRange(
            "estimate requires |z|, |z'| <= 1".into(),
        ));
    }
    if z.norm_sqr() == 0.0 {
        return Err(CoreError::ParameterOutOfRange("z must be nonzero".into()));
    }
    let lhs = (f_log(z) - f_log(zp)).norm();
    let rhs = (z - zp).norm() * (6.0 - z.norm_sqr().ln());
    Ok(InequalityCheck {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-12),
    })
}

/// The uniqueness estimate: |Im[(z2 ln|z2|^2 - z1 ln|z1|^2)(conj z2 - conj z1)]|
/// <= 4 |z2 - z1|^2 on all of C (with 0 ln 0 = 0).
pub fn uniqueness_estimate_check(z1: Complex64, z2: Complex64) -> InequalityCheck {
    let lhs = ((f_log(z2) - f_log(z1)) * (z2.conj() - z1.conj())).im.abs();
    let rhs = 4.0 * (z2 - z1).norm_sqr();
    InequalityCheck {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-12),
    }
}
