//! Potential perturbations `V(z, t)`.
//!
//! Smooth bumps, compactly supported or Gaussian, possibly with an imaginary
//! part.  Compact support in time is what makes retarded and advanced
//! solves, and the scattering identities built on them, exact statements on
//! a finite slab.

use crate::grid::{Grid, C64};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    /// `exp(1 - 1/(1 - r^2))` inside the unit ellipsoid
    /// `r^2 = |z - z_c|^2/sigma_z^2 + (t - t_c)^2/sigma_t^2`, zero outside.
    CompactBump,
    /// `exp(-|z - z_c|^2/(2 sigma_z^2) - (t - t_c)^2/(2 sigma_t^2))`.
    GaussianBump,
}

/// Specification of `V(z,t) = (amplitude + i imag_amplitude) * profile`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub amplitude: f64,
    /// Spatial center; length must match the grid dimension when sampled.
    pub center_z: Vec<f64>,
    pub center_t: f64,
    pub width_z: f64,
    pub width_t: f64,
    /// Coefficient of the imaginary part; zero keeps the evolution unitary.
    pub imag_amplitude: f64,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec {
            kind: PotentialKind::Zero,
            amplitude: 0.0,
            center_z: vec![0.0],
            center_t: 0.0,
            width_z: 1.0,
            width_t: 1.0,
            imag_amplitude: 0.0,
        }
    }

    pub fn compact_bump(amplitude: f64, center_z: Vec<f64>, center_t: f64, width_z: f64, width_t: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::CompactBump,
            amplitude,
            center_z,
            center_t,
            width_z,
            width_t,
            imag_amplitude: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
            || (self.amplitude == 0.0 && self.imag_amplitude == 0.0)
    }

    pub fn is_real(&self) -> bool {
        self.imag_amplitude == 0.0
    }

    /// Temporal support `[t_c - sigma_t, t_c + sigma_t]` when compact.
    pub fn time_support(&self) -> Option<(f64, f64)> {
        match self.kind {
            PotentialKind::Zero => Some((0.0, 0.0)),
            PotentialKind::CompactBump => {
                Some((self.center_t - self.width_t, self.center_t + self.width_t))
            }
            PotentialKind::GaussianBump => None,
        }
    }

    fn profile(&self, z: &[f64], t: f64) -> f64 {
        let mut r2 = 0.0;
        for (zi, ci) in z.iter().zip(self.center_z.iter()) {
            let d = (zi - ci) / self.width_z;
            r2 += d * d;
        }
        let dt = (t - self.center_t) / self.width_t;
        r2 += dt * dt;
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::CompactBump => {
                if r2 < 1.0 {
                    (1.0 - 1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
            PotentialKind::GaussianBump => (-0.5 * r2).exp(),
        }
    }

    pub fn eval(&self, z: &[f64], t: f64) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        assert_eq!(z.len(), self.center_z.len(), "potential center dimension mismatch");
        let p = self.profile(z, t);
        C64::new(self.amplitude * p, self.imag_amplitude * p)
    }

    /// Sample on the spatial lattice of `grid` at time `t`; `None` for the
    /// zero potential so callers can skip the multiplication entirely.
    pub fn sample_slice(&self, grid: &Grid, t: f64) -> Option<Vec<C64>> {
        if self.is_zero() {
            return None;
        }
        assert_eq!(grid.n, self.center_z.len(), "potential dimension mismatch");
        let mut out = Vec::with_capacity(grid.spatial_size());
        for flat in 0..grid.spatial_size() {
            let z = grid.z_point(flat);
            out.push(self.eval(&z, t));
        }
        Some(out)
    }
}
