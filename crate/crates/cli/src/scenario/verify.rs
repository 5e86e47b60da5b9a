use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lognls_core::diagnostics::gn_dual_check;
use lognls_core::solitons::{nonlinearity_estimate_check, uniqueness_estimate_check};
use lognls_core::spectral::{self, FftCache};
use lognls_core::{Field, Grid};

use super::ScenarioIo;
use crate::config::{KeySpec, Params};
use crate::CliError;

pub const SCHEMA: &[KeySpec] = &[
    KeySpec::optional("pairs", "1000000", "random complex pairs per inequality audit"),
    KeySpec::optional("fields", "1000", "random band-limited fields for the GN audit"),
    KeySpec::optional("grid_n", "256", "grid for the field audits"),
    KeySpec::optional("grid_length", "24.0", "box for the field audits"),
];

fn random_band_limited(grid: Grid, rng: &mut ChaCha8Rng, band: usize) -> Field {
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
    Field::new(grid, hat).expect("random field is finite")
}

pub fn run(params: &Params, io: &mut ScenarioIo) -> Result<(), CliError> {
    let pairs = params.get_usize("pairs")?;
    let n_fields = params.get_usize("fields")?;
    let grid = Grid::new(1, params.get_usize("grid_n")?, params.get_f64("grid_length")?)?;

    // suite 1: the uniqueness estimate on all of C (|z| <= 10)
    let mut rng = ChaCha8Rng::seed_from_u64(io.seed);
    rng.set_stream(1);
    let mut violations = 0usize;
    for _ in 0..pairs {
        let z1 = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let z2 = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        if !uniqueness_estimate_check(z1, z2).ok {
            violations += 1;
        }
    }
    io.note("uniqueness_pairs", pairs.to_string());
    io.check(
        "uniqueness_estimate",
        violations == 0,
        format!("{violations} violations in {pairs} pairs"),
    );

    // suite 2: the asymmetric lipschitz estimate on the unit disk
    let mut rng = ChaCha8Rng::seed_from_u64(io.seed);
    rng.set_stream(2);
    let mut draw_disk = |rng: &mut ChaCha8Rng| loop {
        let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if z.norm_sqr() <= 1.0 {
            return z;
        }
    };
    let mut violations = 0usize;
    let mut checked = 0usize;
    while checked < pairs {
        let z = draw_disk(&mut rng);
        let zp = draw_disk(&mut rng);
        if z.norm_sqr() == 0.0 {
            continue;
        }
        checked += 1;
        if !nonlinearity_estimate_check(z, zp)?.ok {
            violations += 1;
        }
    }
    io.note("nonlinearity_pairs", checked.to_string());
    io.check(
        "nonlinearity_estimate",
        violations == 0,
        format!("{violations} violations in {checked} pairs"),
    );

    // suite 3: the dual Gagliardo-Nirenberg bound on random band-limited data
    let mut rng = ChaCha8Rng::seed_from_u64(io.seed);
    rng.set_stream(3);
    let mut violations = 0usize;
    let d = grid.dim() as f64;
    for _ in 0..n_fields {
        let f = random_band_limited(grid, &mut rng, grid.points_per_axis() / 8);
        let alpha = rng.gen_range(0.3..1.0);
        let eta = rng.gen_range(0.05..0.95) * 4.0 * alpha / (d + 2.0 * alpha);
        if !gn_dual_check(&f, eta, alpha)?.ok {
            violations += 1;
        }
    }
    io.note("gn_fields", n_fields.to_string());
    io.check(
        "gn_dual",
        violations == 0,
        format!("{violations} violations in {n_fields} fields"),
    );

    // suite 4: Parseval on random band-limited data
    let mut rng = ChaCha8Rng::seed_from_u64(io.seed);
    rng.set_stream(4);
    let mut worst = 0.0f64;
    for _ in 0..64 {
        let f = random_band_limited(grid, &mut rng, grid.points_per_axis() / 4);
        let direct = f.l2_norm();
        let plancherel = spectral::hs_norm(&f, 0.0)?;
        worst = worst.max((direct - plancherel).abs() / direct);
    }
    io.check(
        "parseval",
        worst < 1e-12,
        format!("max relative deviation {worst:.3e} over 64 fields"),
    );
    Ok(())
}
