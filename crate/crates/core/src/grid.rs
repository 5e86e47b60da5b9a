//! Uniform periodic grids on the centered box [-L/2, L/2)^d and the complex /
//! nonnegative-real states sampled on them.

use num_complex::Complex64;

use crate::error::CoreError;
use crate::Result;

/// Uniform periodic grid, same point count and box length on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    len: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(CoreError::InvalidGrid(format!("dim {dim} not in 1..=3")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(CoreError::InvalidGrid(format!(
                "points_per_axis {points_per_axis} must be a power of two >= 8"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(CoreError::InvalidGrid(format!(
                "box_length {box_length} must be positive"
            )));
        }
        Ok(Grid {
            dim,
            n: points_per_axis,
            len: box_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.len
    }

    /// Total number of sample points, n^dim.
    pub fn size(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.len / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of sample index i on any axis: -L/2 + i*h.
    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.len + i as f64 * self.spacing()
    }

    /// Stride of an axis in the flat row-major layout (axis 0 slowest).
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.n
    }

    /// Point coordinates for a flat index; only the first `dim` entries are used.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coordinate(self.axis_index(flat, a));
        }
        x
    }

    /// |x|^2 at a flat index.
    pub fn radius_sq(&self, flat: usize) -> f64 {
        let p = self.point(flat);
        p[..self.dim].iter().map(|v| v * v).sum()
    }

    /// Signed wavenumber for DFT index i: k in (2*pi/L) * {-n/2, ..., n/2 - 1}.
    pub fn wavenumber(&self, i: usize) -> f64 {
        let m = if i < self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        };
        2.0 * std::f64::consts::PI / self.len * m
    }

    /// Wavenumber used in odd-order derivatives: Nyquist mode zeroed.
    pub fn wavenumber_deriv(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    /// |k|^2 at a flat spectral index (Nyquist kept, as for even derivatives).
    pub fn k_sq(&self, flat: usize) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.dim {
            let k = self.wavenumber(self.axis_index(flat, a));
            acc += k * k;
        }
        acc
    }

    /// True when v is an admissible plane-wave velocity 2*pi*m/L on each axis.
    pub fn admissible_velocity(&self, v: &[f64]) -> bool {
        let unit = 2.0 * std::f64::consts::PI / self.len;
        v.iter().all(|&c| {
            let m = c / unit;
            (m - m.round()).abs() < 1e-9 * (1.0 + m.abs())
        })
    }
}

/// Complex state sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(CoreError::InvalidField(format!(
                "value count {} != grid size {}",
                values.len(),
                grid.size()
            )));
        }
        if !values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(CoreError::InvalidField("non-finite sample".into()));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            values: vec![Complex64::new(0.0, 0.0); grid.size()],
            grid,
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.size())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..grid.dim()])
            })
            .collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn check_finite(&self, t: f64) -> Result<()> {
        if self
            .values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            Ok(())
        } else {
            Err(CoreError::NanDetected { t })
        }
    }

    /// L2 norm with the box quadrature weight, sqrt(h^d * sum |f|^2).
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        if self.grid != other.grid {
            return Err(CoreError::InvalidField("grid mismatch".into()));
        }
        let acc: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((self.grid.cell_volume() * acc).sqrt())
    }

    pub fn scaled(&self, k: Complex64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|z| k * z).collect(),
        }
    }

    pub fn density(&self) -> Density {
        Density {
            grid: self.grid,
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

/// Nonnegative real state sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    grid: Grid,
    values: Vec<f64>,
}

impl Density {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(CoreError::InvalidField(format!(
                "value count {} != grid size {}",
                values.len(),
                grid.size()
            )));
        }
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(CoreError::InvalidField(
                "density sample negative or non-finite".into(),
            ));
        }
        Ok(Density { grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values: Vec<f64> = (0..grid.size())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..grid.dim()])
            })
            .collect();
        Density::new(grid, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total mass, h^d * sum.
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// Rescale so the mass becomes exactly `target`.
    pub fn normalized(&self, target: f64) -> Density {
        let m = self.mass();
        let s = target / m;
        Density {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn l1_distance(&self, other: &Density) -> Result<f64> {
        if self.grid != other.grid {
            return Err(CoreError::InvalidField("grid mismatch".into()));
        }
        Ok(self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// The reference profile Gamma(y) = exp(-|y|^2) sampled on the grid.
    pub fn gamma_sq(grid: Grid) -> Density {
        Density {
            grid,
            values: (0..grid.size())
                .map(|i| (-grid.radius_sq(i)).exp())
                .collect(),
        }
    }
}

/// L2 norm of the reference Gaussian gamma(y) = exp(-|y|^2/2) on R^d: pi^{d/4}.
pub fn gamma_l2_norm(dim: usize) -> f64 {
    std::f64::consts::PI.powf(dim as f64 / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 256, 16.0).is_ok());
        assert!(Grid::new(0, 256, 16.0).is_err());
        assert!(Grid::new(4, 256, 16.0).is_err());
        assert!(Grid::new(1, 100, 16.0).is_err()); // not a power of two
        assert!(Grid::new(1, 4, 16.0).is_err()); // below 8
        assert!(Grid::new(1, 256, -1.0).is_err());
    }

    #[test]
    fn coordinates_and_strides() {
        let g = Grid::new(2, 8, 4.0).unwrap();
        assert_eq!(g.size(), 64);
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.coordinate(0), -2.0);
        assert_eq!(g.coordinate(4), 0.0);
        // flat = i0 * 8 + i1
        let flat = 3 * 8 + 5;
        assert_eq!(g.axis_index(flat, 0), 3);
        assert_eq!(g.axis_index(flat, 1), 5);
        let p = g.point(flat);
        assert_eq!(p[0], g.coordinate(3));
        assert_eq!(p[1], g.coordinate(5));
    }

    #[test]
    fn wavenumber_convention() {
        let g = Grid::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        // unit spacing in k
        assert_eq!(g.wavenumber(0), 0.0);
        assert!((g.wavenumber(1) - 1.0).abs() < 1e-15);
        assert!((g.wavenumber(7) + 1.0).abs() < 1e-15);
        assert!((g.wavenumber(4) + 4.0).abs() < 1e-15); // Nyquist at -n/2
        assert_eq!(g.wavenumber_deriv(4), 0.0); // zeroed for odd derivatives
    }

    #[test]
    fn field_invariants() {
        let g = Grid::new(1, 8, 4.0).unwrap();
        assert!(Field::new(g, vec![Complex64::new(0.0, 0.0); 7]).is_err());
        assert!(Field::new(g, vec![Complex64::new(f64::NAN, 0.0); 8]).is_err());
        let f = Field::from_fn(g, |_| Complex64::new(1.0, 0.0));
        // integral of 1 over the box = L
        assert!((f.l2_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn density_invariants() {
        let g = Grid::new(1, 8, 4.0).unwrap();
        assert!(Density::new(g, vec![-1.0; 8]).is_err());
        let d = Density::new(g, vec![2.0; 8]).unwrap();
        assert!((d.mass() - 8.0).abs() < 1e-14);
        assert!((d.normalized(1.0).mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_mass_matches_closed_form() {
        // integral of exp(-y^2) = sqrt(pi); box truncation below 1e-12 at L=16
        let g = Grid::new(1, 256, 16.0).unwrap();
        let gamma = Density::gamma_sq(g);
        assert!((gamma.mass() - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
