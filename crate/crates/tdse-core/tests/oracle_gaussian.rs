//! Independent oracle for the dispersive Gaussian.
//!
//! The closed form
//!
//! ```text
//! u(z, t) = (2 pi (1 + 2 i t))^{-1/2} exp(-z^2 / (2 (1 + 2 i t)))
//! ```
//!
//! solves `D_t u + Delta u = 0` with `u(z, 0) = (2 pi)^{-1/2} e^{-z^2/2}`,
//! whose transform under `F phi = int e^{-i z zeta} phi dz` is
//! `e^{-zeta^2/2}`.  This file pins the formula three independent ways
//! before any of the crate's own machinery is trusted:
//!
//! 1. against literal values computed with a separate complex-arithmetic
//!    implementation and frozen here,
//! 2. against direct FFT synthesis of `e^{-i t zeta^2} e^{-zeta^2/2}` using
//!    rustfft alone (no crate code),
//! 3. and only then against the crate's propagator.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

fn closed_form(z: f64, t: f64) -> Complex64 {
    let c = Complex64::new(1.0, 2.0 * t);
    (-(z * z) / (2.0 * c)).exp() / (Complex64::new(2.0 * PI, 0.0) * c).sqrt()
}

#[test]
fn frozen_point_values() {
    let table = [
        (0.0, 0.0, 0.3989422804014327, 0.0),
        (1.0, 0.0, 0.24197072451914337, 0.0),
        (0.0, 0.5, 0.30993306621396977, -0.12837847945370473),
        (1.5, -2.0, 0.16950218176491227, 0.07130559202377755),
        (3.0, 1.25, 0.0753227848708087, 0.10680830958866118),
    ];
    for (z, t, re, im) in table {
        let got = closed_form(z, t);
        let diff = (got - Complex64::new(re, im)).norm();
        assert!(diff < 1.0e-15, "closed form at ({z}, {t}) off by {diff}");
    }
}

#[test]
fn direct_fft_synthesis_matches_closed_form() {
    // Synthesize u(., t) = (2 pi)^{-1} int e^{i z zeta} e^{-i t zeta^2}
    // e^{-zeta^2/2} d zeta on a lattice z_j = -L + j dz with the plain
    // rustfft inverse transform: with dzeta = pi / L the continuum phase
    // e^{i z_j zeta_m} equals (-1)^m e^{2 pi i j m / N}.
    let n = 512usize;
    let l = 30.0;
    let dz = 2.0 * l / n as f64;
    let dzeta = PI / l;
    let mut planner = FftPlanner::new();
    let inv = planner.plan_fft_inverse(n);
    for t in [-2.0, -0.5, 0.0, 0.7, 2.0] {
        let mut buf: Vec<Complex64> = (0..n)
            .map(|m| {
                let signed = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
                let zeta = signed as f64 * dzeta;
                let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(0.0, -t * zeta * zeta).exp()
                    * ((-(zeta * zeta) / 2.0).exp() * parity)
            })
            .collect();
        inv.process(&mut buf);
        let scale = dzeta / (2.0 * PI);
        let mut sup = 0.0_f64;
        for (j, v) in buf.iter().enumerate() {
            let z = -l + j as f64 * dz;
            sup = sup.max((v * scale - closed_form(z, t)).norm());
        }
        assert!(sup < 1.0e-12, "direct synthesis off by {sup} at t = {t}");
    }
}

#[test]
fn propagator_reproduces_closed_form() {
    use tdse_core::evolution::evolve;
    use tdse_core::grid::Grid;
    use tdse_core::potential::PotentialSpec;

    let grid = Grid::new(1, 512, 30.0, -1.0, 1.0, 80).expect("grid");
    let init: Vec<Complex64> = (0..grid.spatial_size())
        .map(|j| closed_form(grid.z_coord(j), grid.t0))
        .collect();
    let u = evolve(&init, &grid, &PotentialSpec::zero());
    let mut sup = 0.0_f64;
    for k in 0..grid.num_slices() {
        let t = grid.time_at(k);
        for j in 0..grid.spatial_size() {
            sup = sup.max((u.values[(k, j)] - closed_form(grid.z_coord(j), t)).norm());
        }
    }
    assert!(sup < 1.0e-10, "propagator deviates from the closed form by {sup}");
}
