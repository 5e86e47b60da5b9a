//! Quantitative functionals of a run: conserved quantities, pseudo-energy and
//! its split, entropy and distance measures, Fokker-Planck reference dynamics,
//! Sobolev-growth fits, and the inequality audits used by the verify suites.

use num_complex::Complex64;

use crate::error::CoreError;
use crate::grid::{Density, Field};
use crate::spectral::{self, FftCache};
use crate::tau::TauScaler;
use crate::Result;

/// x ln x extended by 0 at x = 0.
fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Time-stamped bundle of the run functionals.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub center: Vec<f64>,
    pub variance: f64,
    pub angular: f64,
    /// (1/2) ||grad f||^2
    pub kinetic: f64,
    /// int |f|^2 ln |f|^2
    pub entropy: f64,
    pub pseudo_energy: f64,
    pub pseudo_kinetic: f64,
    pub pseudo_entropy: f64,
    /// (1/2)||grad f||^2 + lambda int |f|^2 ln |f|^2
    pub energy: f64,
    pub hs_half: f64,
    pub hs_one: f64,
    /// L1 distance between |f|^2 and Gamma, both normalized to unit mass
    pub l1_to_gamma: f64,
    /// 1d only; NaN otherwise
    pub w1_to_gamma: f64,
}

/// Evaluate every functional of `f` at time t. The scaler (when given) sets
/// tau in the pseudo-energy split; without one tau = 1, tau' = 0.
pub fn collect(
    f: &Field,
    lambda: f64,
    scaler: Option<&TauScaler>,
    t: f64,
) -> Result<DiagnosticsRecord> {
    let grid = f.grid();
    let m = spectral::moments(f);
    let hs_half = spectral::hs_norm(f, 0.5)?;
    let hs_one = spectral::hs_norm(f, 1.0)?;
    let kinetic = 0.5 * hs_one * hs_one;
    let vol = grid.cell_volume();
    let entropy = vol
        * f.values()
            .iter()
            .map(|z| xlnx(z.norm_sqr()))
            .sum::<f64>();
    let tau = match scaler {
        Some(s) => s.tau(t)?,
        None => 1.0,
    };
    let pseudo_kinetic = kinetic / (tau * tau);
    let pseudo_entropy = entropy + m.variance;
    let pseudo_energy = pseudo_kinetic + lambda * pseudo_entropy;
    let energy = kinetic + lambda * entropy;

    let rho = f.density();
    let (l1_to_gamma, w1_to_gamma) = if m.mass > 0.0 {
        let unit_rho = rho.normalized(1.0);
        let unit_gamma = Density::gamma_sq(grid).normalized(1.0);
        let l1 = unit_rho.l1_distance(&unit_gamma)?;
        let w1 = if grid.dim() == 1 {
            w1_distance_1d(&unit_rho, &unit_gamma)?
        } else {
            f64::NAN
        };
        (l1, w1)
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(DiagnosticsRecord {
        t,
        mass: m.mass,
        momentum: m.momentum,
        center: m.center,
        variance: m.variance,
        angular: m.angular,
        kinetic,
        entropy,
        pseudo_energy,
        pseudo_kinetic,
        pseudo_entropy,
        energy,
        hs_half,
        hs_one,
        l1_to_gamma,
        w1_to_gamma,
    })
}

fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

impl DiagnosticsRecord {
    pub fn csv_header(dim: usize) -> String {
        let mut cols = vec!["t".to_string(), "M".to_string()];
        for a in 1..=dim {
            cols.push(format!("I1_{a}"));
        }
        for a in 1..=dim {
            cols.push(format!("I2_{a}"));
        }
        for c in [
            "V", "A", "Ekin", "Sent", "PseudoE", "E", "Hs05", "Hs1", "L1dist", "W1dist",
        ] {
            cols.push(c.to_string());
        }
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![fmt(self.t), fmt(self.mass)];
        cols.extend(self.momentum.iter().map(|v| fmt(*v)));
        cols.extend(self.center.iter().map(|v| fmt(*v)));
        for v in [
            self.variance,
            self.angular,
            self.kinetic,
            self.entropy,
            self.pseudo_energy,
            self.energy,
            self.hs_half,
            self.hs_one,
            self.l1_to_gamma,
            self.w1_to_gamma,
        ] {
            cols.push(fmt(v));
        }
        cols.join(",")
    }
}

/// Pseudo-energy of the rescaled field: (E, E_kin, E_ent) with
/// E_kin = ||grad v||^2 / (2 tau^2) and E_ent = int |v|^2 ln|v|^2 + int |y|^2 |v|^2.
pub fn pseudo_energy(
    v: &Field,
    scaler: Option<&TauScaler>,
    t: f64,
    lambda: f64,
) -> Result<(f64, f64, f64)> {
    let grid = v.grid();
    let hs_one = spectral::hs_norm(v, 1.0)?;
    let tau = match scaler {
        Some(s) => s.tau(t)?,
        None => 1.0,
    };
    let e_kin = 0.5 * hs_one * hs_one / (tau * tau);
    let vol = grid.cell_volume();
    let mut e_ent = 0.0;
    for (flat, z) in v.values().iter().enumerate() {
        let rho = z.norm_sqr();
        e_ent += xlnx(rho) + grid.radius_sq(flat) * rho;
    }
    e_ent *= vol;
    Ok((e_kin + lambda * e_ent, e_kin, e_ent))
}

/// Result of the center-of-mass closed-form audit
/// tau(t) I2(t) = I2(0) - I1(0) t.
#[derive(Debug, Clone)]
pub struct CenterOfMassReport {
    pub max_abs_dev: f64,
    /// max over samples of |deviation| / (1 + t)
    pub max_banded_dev: f64,
}

pub fn center_of_mass_check(
    records: &[DiagnosticsRecord],
    scaler: &TauScaler,
) -> Result<CenterOfMassReport> {
    if records.is_empty() {
        return Err(CoreError::ParameterOutOfRange("empty record series".into()));
    }
    let dim = records[0].center.len();
    let i1_0 = &records[0].momentum;
    let i2_0 = &records[0].center;
    let mut max_abs = 0.0f64;
    let mut max_banded = 0.0f64;
    for rec in records {
        let tau = scaler.tau(rec.t)?;
        for a in 0..dim {
            let dev = (tau * rec.center[a] - (i2_0[a] - i1_0[a] * rec.t)).abs();
            max_abs = max_abs.max(dev);
            max_banded = max_banded.max(dev / (1.0 + rec.t));
        }
    }
    Ok(CenterOfMassReport {
        max_abs_dev: max_abs,
        max_banded_dev: max_banded,
    })
}

/// Both sides of an inequality audit.
#[derive(Debug, Clone, Copy)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Csiszar-Kullback: ||f - g||_1^2 <= 2 ||f||_1 int f ln(f/g), for equal-mass
/// nonnegative densities.
pub fn ck_bound_check(rho: &Density, g: &Density) -> Result<InequalityCheck> {
    let m_rho = rho.mass();
    let m_g = g.mass();
    if (m_rho - m_g).abs() > 1e-8 * m_rho.abs().max(m_g.abs()) {
        return Err(CoreError::MassMismatch { a: m_rho, b: m_g });
    }
    let lhs = rho.l1_distance(g)?.powi(2);
    let vol = rho.grid().cell_volume();
    let mut kl = 0.0;
    for (&a, &b) in rho.values().iter().zip(g.values()) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            kl = f64::INFINITY;
            break;
        }
        kl += a * (a / b).ln();
    }
    let rhs = 2.0 * m_rho * kl * vol;
    Ok(InequalityCheck {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-9),
    })
}

/// 1d Wasserstein-1 distance via the CDF identity W1 = int |F_rho - F_g|.
/// Both densities are normalized to unit mass internally.
pub fn w1_distance_1d(rho: &Density, g: &Density) -> Result<f64> {
    let grid = rho.grid();
    if grid.dim() != 1 {
        return Err(CoreError::DimensionUnsupported {
            dim: grid.dim(),
            what: "w1_distance_1d",
        });
    }
    if g.grid() != grid {
        return Err(CoreError::InvalidField("grid mismatch".into()));
    }
    let h = grid.spacing();
    let inv_a = 1.0 / rho.mass();
    let inv_b = 1.0 / g.mass();
    let mut cdf_a = 0.0;
    let mut cdf_b = 0.0;
    let mut acc = 0.0;
    for (&a, &b) in rho.values().iter().zip(g.values()) {
        cdf_a += a * h * inv_a;
        cdf_b += b * h * inv_b;
        acc += (cdf_a - cdf_b).abs();
    }
    Ok(acc * h)
}

/// Trajectory of the Fokker-Planck reference flow d_s rho = div(grad + 2y) rho.
#[derive(Debug, Clone)]
pub struct FpTrajectory {
    pub s: Vec<f64>,
    /// L1 distance to the mass-matched Gamma at each sample
    pub l1_to_gamma: Vec<f64>,
    pub mass: Vec<f64>,
    pub negative_overshoot: bool,
    pub final_density: Density,
}

impl FpTrajectory {
    /// Least-squares slope of -ln(distance) over s, restricted to the window
    /// where the distance lies in [1e-8, 1e-2] (clear of the floor).
    pub fn fit_decay_exponent(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .s
            .iter()
            .zip(&self.l1_to_gamma)
            .filter(|(_, &d)| (1e-8..=1e-2).contains(&d))
            .map(|(&s, &d)| (s, d.ln()))
            .collect();
        if pts.len() < 8 {
            return None;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        Some(-slope)
    }
}

/// Semi-implicit spectral integration of d_s rho = Lap rho + div(2 y rho):
/// diffusion implicit through its Fourier symbol, drift explicit.
pub fn fokker_planck_reference(rho0: &Density, s_end: f64, ds: f64) -> Result<FpTrajectory> {
    if !(ds > 0.0 && ds <= 1e-3 + 1e-15) {
        return Err(CoreError::ParameterOutOfRange(format!(
            "fokker-planck step ds = {ds} must lie in (0, 1e-3]"
        )));
    }
    let grid = rho0.grid();
    let dim = grid.dim();
    let size = grid.size();
    let mut cache = FftCache::for_grid(&grid);
    let target = Density::gamma_sq(grid).normalized(rho0.mass());

    let mut rho: Vec<f64> = rho0.values().to_vec();
    let steps = (s_end / ds).round() as usize;
    let mut s_axis = Vec::with_capacity(steps + 1);
    let mut dists = Vec::with_capacity(steps + 1);
    let mut masses = Vec::with_capacity(steps + 1);
    let mut negative_overshoot = false;

    let vol = grid.cell_volume();
    let record = |rho: &[f64], s: f64, s_axis: &mut Vec<f64>, dists: &mut Vec<f64>, masses: &mut Vec<f64>| {
        s_axis.push(s);
        dists.push(
            vol * rho
                .iter()
                .zip(target.values())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>(),
        );
        masses.push(vol * rho.iter().sum::<f64>());
    };
    record(&rho, 0.0, &mut s_axis, &mut dists, &mut masses);

    let mut drift_hat = vec![Complex64::new(0.0, 0.0); size];
    let mut work = vec![Complex64::new(0.0, 0.0); size];
    for step in 1..=steps {
        // spectral divergence of 2 y rho
        for z in drift_hat.iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        for axis in 0..dim {
            for (flat, w) in work.iter_mut().enumerate() {
                let y = grid.coordinate(grid.axis_index(flat, axis));
                *w = Complex64::new(2.0 * y * rho[flat], 0.0);
            }
            cache.forward(&grid, &mut work);
            for (flat, (d, w)) in drift_hat.iter_mut().zip(&work).enumerate() {
                let k = grid.wavenumber_deriv(grid.axis_index(flat, axis));
                *d += Complex64::new(0.0, k) * w;
            }
        }
        // rho_hat^{n+1} = (rho_hat^n + ds * drift_hat) / (1 + ds |k|^2)
        for (flat, w) in work.iter_mut().enumerate() {
            *w = Complex64::new(rho[flat], 0.0);
        }
        cache.forward(&grid, &mut work);
        for (flat, w) in work.iter_mut().enumerate() {
            *w = (*w + ds * drift_hat[flat]) / (1.0 + ds * grid.k_sq(flat));
        }
        cache.inverse(&grid, &mut work);
        for (r, w) in rho.iter_mut().zip(&work) {
            *r = w.re;
            if *r < -1e-10 {
                negative_overshoot = true;
            }
        }
        record(&rho, step as f64 * ds, &mut s_axis, &mut dists, &mut masses);
    }

    let final_density = Density::new(grid, rho.iter().map(|v| v.max(0.0)).collect())?;
    Ok(FpTrajectory {
        s: s_axis,
        l1_to_gamma: dists,
        mass: masses,
        negative_overshoot,
        final_density,
    })
}

/// Band of ||u(t)||_{Hs-dot} / (ln t)^{s/2} over a series of (t, norm)
/// samples. The series must span at least two decades.
pub fn growth_fit(series: &[(f64, f64)], s: f64) -> Result<(f64, f64)> {
    if series.len() < 2 {
        return Err(CoreError::ParameterOutOfRange("series too short".into()));
    }
    let t1 = series.first().unwrap().0;
    let t2 = series.last().unwrap().0;
    if !(t1 > 1.0) || t2 / t1 < 100.0 {
        return Err(CoreError::ParameterOutOfRange(format!(
            "growth fit needs t in (1, ..) spanning a factor >= 100, got [{t1}, {t2}]"
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &(t, norm) in series {
        let ratio = norm / t.ln().powf(0.5 * s);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}

/// Dual Gagliardo-Nirenberg audit: int |u|^{2-eta} against the two-piece
/// Hoelder bound with its explicit constant, evaluated at the optimizing
/// radius R^alpha = || |x|^alpha u || / ||u||.
pub fn gn_dual_check(f: &Field, eta: f64, alpha: f64) -> Result<InequalityCheck> {
    let grid = f.grid();
    let d = grid.dim() as f64;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CoreError::ParameterOutOfRange(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let eta_max = 4.0 * alpha / (d + 2.0 * alpha);
    if !(eta > 0.0 && eta < eta_max) {
        return Err(CoreError::ParameterOutOfRange(format!(
            "eta must lie in (0, {eta_max}), got {eta}"
        )));
    }
    let vol = grid.cell_volume();
    let mut lhs = 0.0;
    let mut l2_sq = 0.0;
    let mut weighted_sq = 0.0;
    for (flat, z) in f.values().iter().enumerate() {
        let a = z.norm();
        lhs += a.powf(2.0 - eta);
        l2_sq += a * a;
        weighted_sq += grid.radius_sq(flat).powf(alpha) * a * a;
    }
    lhs *= vol;
    let l2 = (vol * l2_sq).sqrt();
    let weighted = (vol * weighted_sq).sqrt();
    if l2 == 0.0 {
        return Ok(InequalityCheck {
            lhs,
            rhs: 0.0,
            ok: lhs <= 0.0,
        });
    }
    let r_opt = (weighted / l2).powf(1.0 / alpha);

    let (ball_vol, sphere_area) = match grid.dim() {
        1 => (2.0, 2.0),
        2 => (std::f64::consts::PI, 2.0 * std::f64::consts::PI),
        _ => (
            4.0 * std::f64::consts::PI / 3.0,
            4.0 * std::f64::consts::PI,
        ),
    };
    let beta_pp = 2.0 * alpha * (2.0 - eta) / eta; // beta * p'
    let term1 = (ball_vol * r_opt.powf(d)).powf(eta / 2.0) * l2.powf(2.0 - eta);
    let term2 = (sphere_area * r_opt.powf(d - beta_pp) / (beta_pp - d)).powf(eta / 2.0)
        * weighted.powf(2.0 - eta);
    let rhs = term1 + term2;
    Ok(InequalityCheck {
        lhs,
        rhs,
        ok: lhs <= rhs,
    })
}
