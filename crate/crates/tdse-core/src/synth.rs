//! Deterministic synthetic data, slices and sources.
//!
//! Random objects draw a fixed number of coefficients from a seeded
//! `ChaCha8` stream and only then evaluate a smooth closed form on the
//! lattice, so the same seed describes the same continuum function on every
//! grid refinement.

use crate::grid::{DataFunction, DataGrid, Grid, SpacetimeField, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Standard normal via Box-Muller on the seeded stream.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1.0e-12..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(normal(rng), normal(rng))
}

/// `exp(1 - 1/(1 - r^2))` for `r^2 < 1`, zero beyond: a unit bump.
fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Physicists' Hermite polynomial `H_m`.
pub fn hermite(m: usize, x: f64) -> f64 {
    let mut h0 = 1.0;
    if m == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for j in 1..m {
        let h2 = 2.0 * x * h1 - 2.0 * j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Gaussian spatial slice `exp(-|z - c|^2 / (2 sigma^2))`.
pub fn gaussian_slice(grid: &Grid, sigma: f64, center: &[f64]) -> Vec<C64> {
    assert_eq!(center.len(), grid.n);
    (0..grid.spatial_size())
        .map(|flat| {
            let z = grid.z_point(flat);
            let r2: f64 =
                z.iter().zip(center.iter()).map(|(a, c)| (a - c) * (a - c)).sum();
            C64::new((-0.5 * r2 / (sigma * sigma)).exp(), 0.0)
        })
        .collect()
}

/// Gaussian frequency data `exp(-|zeta - c|^2 / (2 sigma^2))`.
pub fn gaussian_data(grid: DataGrid, sigma: f64, center: &[f64]) -> DataFunction {
    assert_eq!(center.len(), grid.n);
    DataFunction::from_fn(grid, |zeta| {
        let r2: f64 =
            zeta.iter().zip(center.iter()).map(|(a, c)| (a - c) * (a - c)).sum();
        C64::new((-0.5 * r2 / (sigma * sigma)).exp(), 0.0)
    })
}

/// Hermite data: `H_m(zeta_1/sigma) exp(-|zeta|^2/(2 sigma^2))`.
pub fn hermite_data(grid: DataGrid, index: usize, sigma: f64) -> DataFunction {
    DataFunction::from_fn(grid, |zeta| {
        let r2: f64 = zeta.iter().map(|a| a * a).sum();
        C64::new(
            hermite(index, zeta[0] / sigma) * (-0.5 * r2 / (sigma * sigma)).exp(),
            0.0,
        )
    })
}

/// Seeded band-limited data: a compact bump over the inner half of the
/// window times a random low-order complex polynomial.  Supported in
/// `|zeta| <= zeta_max / 2`.
pub fn random_data(grid: DataGrid, seed: u64) -> DataFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fixed draw count: 6 coefficients regardless of grid size.
    let coefs: Vec<C64> = (0..6).map(|d| complex_normal(&mut rng) * 0.5_f64.powi(d)).collect();
    let half = 0.5 * grid.zeta_max();
    DataFunction::from_fn(grid, |zeta| {
        let r2: f64 = zeta.iter().map(|a| (a / half) * (a / half)).sum();
        let env = bump(r2);
        if env == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let x = zeta[0] / half;
        let y = if zeta.len() > 1 { zeta[1] / half } else { 0.0 };
        let poly = coefs[0]
            + coefs[1] * x
            + coefs[2] * y
            + coefs[3] * (x * x)
            + coefs[4] * (x * y)
            + coefs[5] * (y * y);
        env * poly
    })
}

/// Seeded smooth random data: a width-jittered, shifted, modulated Gaussian
/// with a random global phase.  Unlike [`random_data`] the wavefront-set
/// content stays mild (position-bandwidth below ~0.2 plus the Gaussian
/// envelope scale), so asymptotic readout of these data converges on slabs
/// of moderate length.
pub fn smooth_random_data(grid: DataGrid, seed: u64) -> DataFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d5a7_11fa_ce01);
    let sigma = 1.0 + 0.2 * rng.gen::<f64>();
    let center: Vec<f64> = (0..grid.n).map(|_| 0.5 * (rng.gen::<f64>() - 0.5)).collect();
    let modulation: Vec<f64> =
        (0..grid.n).map(|_| 0.3 * (rng.gen::<f64>() - 0.5)).collect();
    let phase: f64 = rng.gen::<f64>() * 2.0 * PI;
    DataFunction::from_fn(grid, |zeta| {
        let r2: f64 = zeta
            .iter()
            .zip(center.iter())
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let osc: f64 =
            zeta.iter().zip(modulation.iter()).map(|(a, c)| a * c).sum::<f64>() + phase;
        C64::new(0.0, osc).exp() * (-0.5 * r2 / (sigma * sigma)).exp()
    })
}

/// Seeded smooth spacetime source: compact bump in `(z, t)` around
/// `(0, center_t)` with half-widths `(sigma_z, sigma_t)`, times a random
/// complex polynomial of total degree three.
pub fn random_source_field(
    grid: &Grid,
    seed: u64,
    sigma_z: f64,
    sigma_t: f64,
    center_t: f64,
) -> SpacetimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_50a2_c3d4_e5f6);
    // Degree <= 3 in (x1, x2, s): fixed 20 draws independent of n.
    let mut coefs = Vec::with_capacity(20);
    for a in 0..=3usize {
        for b in 0..=(3 - a) {
            for c in 0..=(3 - a - b) {
                let damp = 0.5_f64.powi((a + b + c) as i32);
                coefs.push(((a, b, c), complex_normal(&mut rng) * damp));
            }
        }
    }
    let mut field = SpacetimeField::zeros(*grid);
    for k in 0..grid.num_slices() {
        let t = grid.time_at(k);
        let s = (t - center_t) / sigma_t;
        if s * s >= 1.0 {
            continue;
        }
        for flat in 0..grid.spatial_size() {
            let z = grid.z_point(flat);
            let x1 = z[0] / sigma_z;
            let x2 = if z.len() > 1 { z[1] / sigma_z } else { 0.0 };
            let r2 = x1 * x1 + x2 * x2 + s * s;
            let env = bump(r2);
            if env == 0.0 {
                continue;
            }
            let mut poly = C64::new(0.0, 0.0);
            for ((a, b, c), coef) in &coefs {
                poly += coef
                    * x1.powi(*a as i32)
                    * x2.powi(*b as i32)
                    * s.powi(*c as i32);
            }
            field.values[(k, flat)] = env * poly;
        }
    }
    field
}
