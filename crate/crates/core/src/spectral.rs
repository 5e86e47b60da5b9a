//! Fourier-side machinery on periodic grids: multi-axis FFT with cached plans,
//! spectral derivatives, fractional Sobolev norms, moment integrals, phase
//! shifts, and trigonometric resampling between scaled grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::CoreError;
use crate::grid::{Field, Grid};
use crate::Result;

/// Forward/inverse plans for one axis length, plus the gather/scatter buffers
/// for strided axes. One instance per caller; never shared across threads.
pub struct FftCache {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FftCache {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        FftCache {
            n,
            fwd,
            inv,
            line: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn for_grid(grid: &Grid) -> Self {
        Self::new(grid.points_per_axis())
    }

    fn transform_axis(&mut self, data: &mut [Complex64], grid: &Grid, axis: usize, forward: bool) {
        let n = self.n;
        let stride = grid.stride(axis);
        let plan = if forward { &self.fwd } else { &self.inv };
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                plan.process_with_scratch(chunk, &mut self.scratch);
            }
        } else {
            let block = n * stride;
            let blocks = data.len() / block;
            for b in 0..blocks {
                for off in 0..stride {
                    let base = b * block + off;
                    for j in 0..n {
                        self.line[j] = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut self.line, &mut self.scratch);
                    for j in 0..n {
                        data[base + j * stride] = self.line[j];
                    }
                }
            }
        }
    }

    /// Unnormalized forward DFT along every axis.
    pub fn forward(&mut self, grid: &Grid, data: &mut [Complex64]) {
        debug_assert_eq!(grid.points_per_axis(), self.n);
        debug_assert_eq!(data.len(), grid.size());
        for axis in 0..grid.dim() {
            self.transform_axis(data, grid, axis, true);
        }
    }

    /// Inverse DFT along every axis, normalized by 1/n per axis.
    pub fn inverse(&mut self, grid: &Grid, data: &mut [Complex64]) {
        for axis in 0..grid.dim() {
            self.transform_axis(data, grid, axis, false);
        }
        let scale = 1.0 / grid.size() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}

/// Spectral partial derivative along one axis (Nyquist zeroed).
pub fn partial(f: &Field, axis: usize) -> Field {
    let grid = f.grid();
    let mut cache = FftCache::for_grid(&grid);
    let mut hat = f.values().to_vec();
    cache.forward(&grid, &mut hat);
    for (flat, z) in hat.iter_mut().enumerate() {
        let k = grid.wavenumber_deriv(grid.axis_index(flat, axis));
        *z *= Complex64::new(0.0, k);
    }
    cache.inverse(&grid, &mut hat);
    Field::new(grid, hat).expect("derivative of finite field is finite")
}

/// All spectral partial derivatives, one field per axis.
pub fn gradient(f: &Field) -> Vec<Field> {
    (0..f.grid().dim()).map(|a| partial(f, a)).collect()
}

/// Spectral Laplacian (Nyquist kept, as for all even-order derivatives).
pub fn laplacian(f: &Field) -> Field {
    let grid = f.grid();
    let mut cache = FftCache::for_grid(&grid);
    let mut hat = f.values().to_vec();
    cache.forward(&grid, &mut hat);
    for (flat, z) in hat.iter_mut().enumerate() {
        *z *= -grid.k_sq(flat);
    }
    cache.inverse(&grid, &mut hat);
    Field::new(grid, hat).expect("laplacian of finite field is finite")
}

/// Homogeneous Sobolev norm (sum_k |k|^{2s} |f_hat(k)|^2)^{1/2}, normalized so
/// that s = 0 reproduces the L2 box integral.
pub fn hs_norm(f: &Field, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(CoreError::SobolevOrderOutOfRange(s));
    }
    let grid = f.grid();
    let mut cache = FftCache::for_grid(&grid);
    let mut hat = f.values().to_vec();
    cache.forward(&grid, &mut hat);
    let weight = grid.cell_volume() / grid.size() as f64;
    let mut acc = 0.0;
    for (flat, z) in hat.iter().enumerate() {
        let ksq = grid.k_sq(flat);
        let w = if s == 0.0 {
            1.0
        } else if s == 1.0 {
            ksq
        } else {
            ksq.powf(s)
        };
        acc += w * z.norm_sqr();
    }
    Ok((weight * acc).sqrt())
}

/// Mass, momentum, center, variance and the angular pairing of a field.
#[derive(Debug, Clone)]
pub struct Moments {
    /// integral |f|^2
    pub mass: f64,
    /// Im integral conj(f) grad f, one component per axis
    pub momentum: Vec<f64>,
    /// integral y |f|^2
    pub center: Vec<f64>,
    /// integral |y|^2 |f|^2
    pub variance: f64,
    /// Im integral f y . grad conj(f)
    pub angular: f64,
}

pub fn moments(f: &Field) -> Moments {
    let grid = f.grid();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let grads = gradient(f);
    let mut mass = 0.0;
    let mut momentum = vec![0.0; dim];
    let mut center = vec![0.0; dim];
    let mut variance = 0.0;
    let mut angular = 0.0;
    for (flat, z) in f.values().iter().enumerate() {
        let rho = z.norm_sqr();
        mass += rho;
        let p = grid.point(flat);
        let mut r2 = 0.0;
        for a in 0..dim {
            let g = grads[a].values()[flat];
            momentum[a] += (z.conj() * g).im;
            center[a] += p[a] * rho;
            angular += (z * p[a] * g.conj()).im;
            r2 += p[a] * p[a];
        }
        variance += r2 * rho;
    }
    Moments {
        mass: mass * vol,
        momentum: momentum.iter().map(|v| v * vol).collect(),
        center: center.iter().map(|v| v * vol).collect(),
        variance: variance * vol,
        angular: angular * vol,
    }
}

/// Translate a periodic field by an arbitrary real shift via Fourier phases.
pub fn shift(f: &Field, delta: &[f64]) -> Field {
    let grid = f.grid();
    let mut cache = FftCache::for_grid(&grid);
    let mut hat = f.values().to_vec();
    cache.forward(&grid, &mut hat);
    for (flat, z) in hat.iter_mut().enumerate() {
        let mut phase = 0.0;
        for a in 0..grid.dim() {
            phase -= grid.wavenumber_deriv(grid.axis_index(flat, a)) * delta[a];
        }
        *z *= Complex64::from_polar(1.0, phase);
    }
    cache.inverse(&grid, &mut hat);
    Field::new(grid, hat).expect("shift of finite field is finite")
}

/// Fraction of spectral energy above `frac` of the Nyquist wavenumber on any axis.
pub fn high_mode_energy_fraction(f: &Field, frac: f64) -> f64 {
    let grid = f.grid();
    let mut cache = FftCache::for_grid(&grid);
    let mut hat = f.values().to_vec();
    cache.forward(&grid, &mut hat);
    let k_nyq = std::f64::consts::PI * grid.points_per_axis() as f64 / grid.box_length();
    let cut = frac * k_nyq;
    let mut total = 0.0;
    let mut high = 0.0;
    for (flat, z) in hat.iter().enumerate() {
        let e = z.norm_sqr();
        total += e;
        let is_high = (0..grid.dim())
            .any(|a| grid.wavenumber(grid.axis_index(flat, a)).abs() > cut);
        if is_high {
            high += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        high / total
    }
}

/// Evaluate the trigonometric interpolant of `f` at the points scale * y for
/// every y of `target`. The scaled target box must stay inside the source box
/// (outside it the interpolant would wrap around periodically), and `f` must
/// not carry meaningful energy near its Nyquist band, where the interpolant
/// is unreliable.
pub fn resample_scaled(f: &Field, target: &Grid, scale: f64) -> Result<Field> {
    if target.dim() != f.grid().dim() {
        return Err(CoreError::InvalidField(
            "resample target dimension mismatch".into(),
        ));
    }
    if scale.abs() * target.box_length() > f.grid().box_length() * (1.0 + 1e-9) {
        return Err(CoreError::ParameterOutOfRange(format!(
            "resample target box {} * scale {} exceeds the source box {}",
            target.box_length(),
            scale,
            f.grid().box_length()
        )));
    }
    let frac = high_mode_energy_fraction(f, 0.9);
    if frac > 1e-10 {
        return Err(CoreError::AliasingDetected { fraction: frac });
    }
    let src = f.grid();
    let n_src = src.points_per_axis();
    let n_tgt = target.points_per_axis();
    let mut cache = FftCache::for_grid(&src);
    let mut hat = f.values().to_vec();
    cache.forward(&src, &mut hat);
    let norm = 1.0 / src.size() as f64;
    for z in hat.iter_mut() {
        *z *= norm;
    }

    // Per-axis evaluation matrix E[j][k] = exp(i k_k (scale * y_j + L_src/2))
    // relative to sample 0 of the source grid; the DFT phases are anchored at
    // the first sample.
    let mut eval = vec![Complex64::new(0.0, 0.0); n_tgt * n_src];
    for j in 0..n_tgt {
        let x = scale * target.coordinate(j) + 0.5 * src.box_length();
        for k_idx in 0..n_src {
            // symmetric treatment of the Nyquist mode: split into +-|k|
            let k = src.wavenumber(k_idx);
            let e = Complex64::from_polar(1.0, k * x);
            eval[j * n_src + k_idx] = if k_idx == n_src / 2 {
                Complex64::new((k * x).cos(), 0.0)
            } else {
                e
            };
        }
    }

    // Contract one axis at a time: data has source extent on axes not yet
    // transformed and target extent on transformed ones.
    let dim = src.dim();
    let mut data = hat;
    let mut extents = vec![n_src; dim];
    for axis in 0..dim {
        let stride: usize = extents[axis + 1..].iter().product();
        let block = extents[axis] * stride;
        let blocks = data.len() / block;
        let mut out =
            vec![Complex64::new(0.0, 0.0); blocks * n_tgt * stride];
        for b in 0..blocks {
            for off in 0..stride {
                for j in 0..n_tgt {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k_idx in 0..n_src {
                        acc += eval[j * n_src + k_idx]
                            * data[b * block + k_idx * stride + off];
                    }
                    out[b * (n_tgt * stride) + j * stride + off] = acc;
                }
            }
        }
        data = out;
        extents[axis] = n_tgt;
    }
    Field::new(*target, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Density;
    use rand::Rng;
    use rand::SeedableRng;

    fn gaussian_1d(grid: Grid) -> Field {
        Field::from_fn(grid, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0))
    }

    fn random_band_limited(grid: Grid, seed: u64, band: usize) -> Field {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = grid.points_per_axis();
        let mut hat = vec![Complex64::new(0.0, 0.0); grid.size()];
        for (flat, z) in hat.iter_mut().enumerate() {
            let in_band = (0..grid.dim()).all(|a| {
                let i = grid.axis_index(flat, a);
                i <= band || i >= n - band
            });
            if in_band {
                *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let mut cache = FftCache::for_grid(&grid);
        cache.inverse(&grid, &mut hat);
        Field::new(grid, hat).unwrap()
    }

    #[test]
    fn plane_wave_is_gradient_eigenfunction() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let k = grid.wavenumber(5);
        let f = Field::from_fn(grid, |x| Complex64::from_polar(1.0, k * x[0]));
        let g = &gradient(&f)[0];
        let max_err = f
            .values()
            .iter()
            .zip(g.values())
            .map(|(u, du)| (du - Complex64::new(0.0, k) * u).norm())
            .fold(0.0f64, f64::max)
            / k.abs();
        assert!(max_err < 1e-12, "max err {max_err}");
    }

    #[test]
    fn constant_has_zero_gradient() {
        let grid = Grid::new(2, 16, 8.0).unwrap();
        let f = Field::from_fn(grid, |_| Complex64::new(2.5, -1.0));
        for g in gradient(&f) {
            assert!(g.values().iter().all(|z| z.norm() < 1e-13));
        }
    }

    #[test]
    fn gaussian_derivative_matches_analytic() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let f = gaussian_1d(grid);
        let g = &gradient(&f)[0];
        let max_err = (0..grid.size())
            .map(|i| {
                let x = grid.coordinate(i);
                (g.values()[i] - Complex64::new(-x * (-x * x / 2.0).exp(), 0.0)).norm()
            })
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-10, "max err {max_err}");
    }

    #[test]
    fn hs_norm_of_gaussian() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let f = gaussian_1d(grid);
        let pi = std::f64::consts::PI;
        let h0 = hs_norm(&f, 0.0).unwrap();
        let h1 = hs_norm(&f, 1.0).unwrap();
        assert!((h0 - pi.sqrt().sqrt()).abs() < 1e-12, "s=0 {h0}");
        assert!((h1 - (pi.sqrt() / 2.0).sqrt()).abs() < 1e-12, "s=1 {h1}");
        let hhalf = hs_norm(&f, 0.5).unwrap();
        assert!(hhalf > h1.min(h0) && hhalf < h1.max(h0));
        assert!(hs_norm(&f, 1.5).is_err());
        assert!(hs_norm(&f, -0.1).is_err());
    }

    #[test]
    fn hs_half_matches_fine_grid_reference() {
        // direct spectral sum on a finer grid as the oracle
        let coarse = Grid::new(1, 256, 32.0).unwrap();
        let fine = Grid::new(1, 1024, 32.0).unwrap();
        let a = hs_norm(&gaussian_1d(coarse), 0.5).unwrap();
        let b = hs_norm(&gaussian_1d(fine), 0.5).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn parseval_on_random_band_limited() {
        for dim in 1..=2 {
            let grid = Grid::new(dim, 32, 10.0).unwrap();
            let f = random_band_limited(grid, 7 + dim as u64, 6);
            let direct = f.l2_norm();
            let spectral = hs_norm(&f, 0.0).unwrap();
            assert!(
                (direct - spectral).abs() < 1e-12 * direct,
                "{direct} vs {spectral}"
            );
        }
    }

    #[test]
    fn gradient_twice_is_laplacian() {
        let grid = Grid::new(2, 32, 10.0).unwrap();
        let f = random_band_limited(grid, 3, 6);
        let lap = laplacian(&f);
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.size()];
        for a in 0..grid.dim() {
            let gg = partial(&partial(&f, a), a);
            for (s, v) in acc.iter_mut().zip(gg.values()) {
                *s += v;
            }
        }
        let scale = lap.values().iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let max_err = acc
            .iter()
            .zip(lap.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-12 * scale.max(1.0), "max err {max_err}");
    }

    #[test]
    fn moments_of_reference_gaussian() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let f = gaussian_1d(grid);
        let m = moments(&f);
        let pi = std::f64::consts::PI;
        assert!((m.mass - pi.sqrt()).abs() < 1e-12);
        assert!(m.momentum[0].abs() < 1e-12);
        assert!(m.center[0].abs() < 1e-12);
        assert!(m.angular.abs() < 1e-12);
        assert!((m.variance - pi.sqrt() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn moments_of_shifted_and_boosted_gaussian() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let shifted = Field::from_fn(grid, |x| {
            Complex64::new((-(x[0] - 1.0) * (x[0] - 1.0) / 2.0).exp(), 0.0)
        });
        let m = moments(&shifted);
        assert!((m.center[0] - m.mass).abs() < 1e-10, "I2 = M * shift");

        let v0 = grid.wavenumber(4);
        let boosted = Field::from_fn(grid, |x| {
            Complex64::from_polar((-x[0] * x[0] / 2.0).exp(), v0 * x[0])
        });
        let mb = moments(&boosted);
        assert!(
            (mb.momentum[0] - v0 * mb.mass).abs() < 1e-10,
            "I1 = v0 * M: {} vs {}",
            mb.momentum[0],
            v0 * mb.mass
        );
    }

    #[test]
    fn moments_scale_quadratically() {
        let grid = Grid::new(1, 64, 20.0).unwrap();
        let f = random_band_limited(grid, 11, 8);
        let g = f.scaled(Complex64::new(2.0, 0.0));
        let mf = moments(&f);
        let mg = moments(&g);
        assert!((mg.mass - 4.0 * mf.mass).abs() < 1e-12 * mg.mass.abs().max(1.0));
        assert!((mg.variance - 4.0 * mf.variance).abs() < 1e-10);
        assert!((mg.momentum[0] - 4.0 * mf.momentum[0]).abs() < 1e-10);
        assert!((mg.center[0] - 4.0 * mf.center[0]).abs() < 1e-10);
        assert!((mg.angular - 4.0 * mf.angular).abs() < 1e-10);
    }

    #[test]
    fn spectral_shift_moves_gaussian() {
        let grid = Grid::new(1, 256, 32.0).unwrap();
        let f = gaussian_1d(grid);
        let s = shift(&f, &[0.7]);
        let expect = Field::from_fn(grid, |x| {
            Complex64::new((-(x[0] - 0.7) * (x[0] - 0.7) / 2.0).exp(), 0.0)
        });
        assert!(s.l2_distance(&expect).unwrap() < 1e-11);
    }

    #[test]
    fn resample_identity_at_unit_scale() {
        let grid = Grid::new(1, 128, 16.0).unwrap();
        let f = gaussian_1d(grid);
        let r = resample_scaled(&f, &grid, 1.0).unwrap();
        assert!(f.l2_distance(&r).unwrap() < 1e-12);
    }

    #[test]
    fn resample_scaled_gaussian_matches_analytic() {
        let src = Grid::new(1, 256, 32.0).unwrap();
        let tgt = Grid::new(1, 128, 16.0).unwrap();
        let f = gaussian_1d(src);
        // evaluate f(2 y): a Gaussian of half the width on the target grid
        let r = resample_scaled(&f, &tgt, 2.0).unwrap();
        let expect = Field::from_fn(tgt, |y| Complex64::new((-2.0 * y[0] * y[0]).exp(), 0.0));
        assert!(r.l2_distance(&expect).unwrap() < 1e-11);
    }

    #[test]
    fn resample_flags_aliasing() {
        let grid = Grid::new(1, 32, 8.0).unwrap();
        let n = grid.points_per_axis();
        // put all the energy right at the Nyquist band
        let mut hat = vec![Complex64::new(0.0, 0.0); n];
        hat[n / 2 - 1] = Complex64::new(1.0, 0.0);
        let mut cache = FftCache::for_grid(&grid);
        cache.inverse(&grid, &mut hat);
        let f = Field::new(grid, hat).unwrap();
        match resample_scaled(&f, &grid, 0.5) {
            Err(CoreError::AliasingDetected { .. }) => {}
            other => panic!("expected aliasing flag, got {other:?}"),
        }
    }

    #[test]
    fn gamma_sq_is_square_of_gamma() {
        let grid = Grid::new(1, 128, 16.0).unwrap();
        let d = Density::gamma_sq(grid);
        let f = gaussian_1d(grid);
        for (a, b) in d.values().iter().zip(f.values()) {
            assert!((a - b.norm_sqr()).abs() < 1e-15);
        }
    }
}
