//! Discretization: periodic spatial box, time slab, spectral transforms,
//! spacetime fields and asymptotic data grids.
//!
//! Space is the box `[-L, L)^n` with `N` points per axis, so the discrete
//! frequencies are `zeta_k = k pi / L` for signed `k` in `[-N/2, N/2)`.  The
//! continuum convention is `F u(zeta) = int e^{-i z zeta} u dz` with inverse
//! `(2pi)^{-n} int e^{i z zeta} ... dzeta`; on the lattice `dz dzeta = 2pi/N`
//! per axis, which makes the discrete Parseval identity
//! `sum |u|^2 dz^n = (2pi)^{-n} sum |F u|^2 dzeta^n` exact.
//!
//! Asymptotic data lives on its own uniform frequency window.  When the data
//! spacing equals `pi/L` the window embeds exactly into the field frequency
//! lattice and synthesis needs no interpolation.

use ndarray::{Array2, ArrayView1, ArrayViewMut1};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Spacetime discretization parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Spatial dimension (1 or 2).
    pub n: usize,
    /// Points per spatial axis; a power of two, at least 16.
    pub points_per_axis: usize,
    /// Half-width `L` of the periodic box `[-L, L)`.
    pub half_width: f64,
    pub t0: f64,
    pub t1: f64,
    /// Number of time steps; slices number `steps + 1`.
    pub steps: usize,
}

impl Grid {
    pub fn new(
        n: usize,
        points_per_axis: usize,
        half_width: f64,
        t0: f64,
        t1: f64,
        steps: usize,
    ) -> Result<Self, GridError> {
        if !(n == 1 || n == 2) {
            return Err(GridError::InvalidGrid(format!("n must be 1 or 2, got {n}")));
        }
        if points_per_axis < 16 || !points_per_axis.is_power_of_two() {
            return Err(GridError::InvalidGrid(format!(
                "points_per_axis must be a power of two >= 16, got {points_per_axis}"
            )));
        }
        if !(half_width > 0.0) {
            return Err(GridError::InvalidGrid("half_width must be positive".into()));
        }
        if !(t1 > t0) {
            return Err(GridError::InvalidGrid("need t1 > t0".into()));
        }
        if steps < 1 {
            return Err(GridError::InvalidGrid("steps must be >= 1".into()));
        }
        Ok(Grid { n, points_per_axis, half_width, t0, t1, steps })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn dz(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Frequency spacing `pi / L`.
    pub fn dzeta(&self) -> f64 {
        PI / self.half_width
    }

    pub fn num_slices(&self) -> usize {
        self.steps + 1
    }

    pub fn spatial_size(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt()
    }

    /// Slice index whose time is nearest to `t` (must land within half a
    /// step).
    pub fn slice_index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let k = x.round();
        if (x - k).abs() <= 0.5 && k >= 0.0 && (k as usize) <= self.steps {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn z_coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dz()
    }

    /// Signed mode index for FFT bin `k`: `k` itself below `N/2`, else
    /// `k - N`.
    pub fn signed_mode(&self, k: usize) -> i64 {
        let np = self.points_per_axis as i64;
        let k = k as i64;
        if 2 * k < np {
            k
        } else {
            k - np
        }
    }

    pub fn zeta_at(&self, k: usize) -> f64 {
        self.signed_mode(k) as f64 * self.dzeta()
    }

    /// Decompose a flat spatial index into per-axis indices (axis 0 major).
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.n];
        for a in (0..self.n).rev() {
            idx[a] = flat % self.points_per_axis;
            flat /= self.points_per_axis;
        }
        idx
    }

    /// Spatial point for a flat index.
    pub fn z_point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).into_iter().map(|j| self.z_coord(j)).collect()
    }

    /// `|zeta|^2` for a flat spatial index interpreted in frequency space.
    pub fn zeta_sq(&self, flat: usize) -> f64 {
        self.unflatten(flat)
            .into_iter()
            .map(|k| {
                let z = self.zeta_at(k);
                z * z
            })
            .sum()
    }

    /// One refinement level: double the points per axis and the time steps.
    pub fn refined(&self) -> Grid {
        Grid {
            n: self.n,
            points_per_axis: self.points_per_axis * 2,
            half_width: self.half_width,
            t0: self.t0,
            t1: self.t1,
            steps: self.steps * 2,
        }
    }

    /// Trapezoid weight of slice `k` for time quadrature.
    pub fn t_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.steps {
            0.5
        } else {
            1.0
        }
    }
}

/// Cached FFT plans for one grid size; all transforms are sequential and
/// deterministic.
pub struct SpectralEngine {
    n: usize,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl SpectralEngine {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        SpectralEngine {
            n: grid.n,
            len: grid.points_per_axis,
            fwd: planner.plan_fft_forward(grid.points_per_axis),
            inv: planner.plan_fft_inverse(grid.points_per_axis),
        }
    }

    /// Unnormalized forward DFT along every spatial axis in place.
    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, true);
    }

    /// Inverse DFT along every spatial axis, normalized so that
    /// `inverse(forward(x)) == x`.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, false);
        let scale = 1.0 / (self.len as f64).powi(self.n as i32);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [C64], forward: bool) {
        let plan = if forward { &self.fwd } else { &self.inv };
        match self.n {
            1 => {
                assert_eq!(data.len(), self.len);
                plan.process(data);
            }
            2 => {
                assert_eq!(data.len(), self.len * self.len);
                // Rows (contiguous), then columns through a scratch buffer.
                for row in data.chunks_exact_mut(self.len) {
                    plan.process(row);
                }
                let mut col = vec![C64::new(0.0, 0.0); self.len];
                for c in 0..self.len {
                    for r in 0..self.len {
                        col[r] = data[r * self.len + c];
                    }
                    plan.process(&mut col);
                    for r in 0..self.len {
                        data[r * self.len + c] = col[r];
                    }
                }
            }
            _ => unreachable!("grid dimension is 1 or 2"),
        }
    }
}

/// Discrete field on the full time slab: row `k` is the spatial slice at
/// `t0 + k dt`, flattened row-major over axes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacetimeField {
    pub grid: Grid,
    pub values: Array2<C64>,
}

impl SpacetimeField {
    pub fn zeros(grid: Grid) -> Self {
        let values = Array2::from_elem((grid.num_slices(), grid.spatial_size()), C64::new(0.0, 0.0));
        SpacetimeField { grid, values }
    }

    pub fn slice(&self, k: usize) -> ArrayView1<'_, C64> {
        self.values.row(k)
    }

    pub fn slice_mut(&mut self, k: usize) -> ArrayViewMut1<'_, C64> {
        self.values.row_mut(k)
    }

    /// `L^2(dz)` norm of slice `k`.
    pub fn l2_slice(&self, k: usize) -> f64 {
        let dz_n = self.grid.dz().powi(self.grid.n as i32);
        (self.values.row(k).iter().map(|v| v.norm_sqr()).sum::<f64>() * dz_n).sqrt()
    }

    /// Spacetime `L^2(dz dt)` norm with trapezoid weights in time.
    pub fn spacetime_l2(&self) -> f64 {
        self.spacetime_inner(self).re.max(0.0).sqrt()
    }

    /// Spacetime inner product `int u conj(v) dz dt`, trapezoid in time.
    pub fn spacetime_inner(&self, other: &SpacetimeField) -> C64 {
        assert_eq!(self.grid, other.grid, "field grids differ");
        let dz_n = self.grid.dz().powi(self.grid.n as i32);
        let dt = self.grid.dt();
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.grid.num_slices() {
            let w = self.grid.t_weight(k);
            let mut row = C64::new(0.0, 0.0);
            for (a, b) in self.values.row(k).iter().zip(other.values.row(k).iter()) {
                row += a * b.conj();
            }
            acc += w * row;
        }
        acc * dz_n * dt
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise difference; grids must match.
    pub fn sub(&self, other: &SpacetimeField) -> SpacetimeField {
        assert_eq!(self.grid, other.grid, "field grids differ");
        SpacetimeField { grid: self.grid, values: &self.values - &other.values }
    }

    pub fn scale(&mut self, c: C64) {
        self.values.mapv_inplace(|v| v * c);
    }

    /// Restrict to slice indices `k0 ..= k1` as a standalone field.
    pub fn restrict_time(&self, k0: usize, k1: usize) -> SpacetimeField {
        assert!(k0 < k1 && k1 <= self.grid.steps, "bad time restriction");
        let grid = Grid {
            t0: self.grid.time_at(k0),
            t1: self.grid.time_at(k1),
            steps: k1 - k0,
            ..self.grid
        };
        let values = self.values.slice(ndarray::s![k0..=k1, ..]).to_owned();
        SpacetimeField { grid, values }
    }
}

/// Uniform frequency window `[-modes, modes) * dzeta` per axis carrying
/// asymptotic data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataGrid {
    pub n: usize,
    pub dzeta: f64,
    /// Half the number of points per axis: signed indices run over
    /// `[-modes, modes)`.
    pub modes: i64,
}

impl DataGrid {
    pub fn new(n: usize, dzeta: f64, modes: i64) -> Self {
        assert!(n == 1 || n == 2);
        assert!(dzeta > 0.0 && modes >= 1);
        DataGrid { n, dzeta, modes }
    }

    /// Window matched to a field grid: spacing `pi/L`, extent limited so
    /// that the stationary-phase point `2 t zeta` of every mode stays well
    /// inside the box for every time in the slab.
    pub fn default_for(grid: &Grid) -> DataGrid {
        let t_abs = grid.t0.abs().max(grid.t1.abs()).max(1.0);
        let dzeta = grid.dzeta();
        let zeta_allowed = 0.95 * grid.half_width / (2.0 * t_abs);
        let m = ((zeta_allowed / dzeta).floor() as i64)
            .clamp(2, (grid.points_per_axis / 4) as i64);
        DataGrid::new(grid.n, dzeta, m)
    }

    pub fn len_per_axis(&self) -> usize {
        2 * self.modes as usize
    }

    pub fn total_points(&self) -> usize {
        self.len_per_axis().pow(self.n as u32)
    }

    pub fn zeta_max(&self) -> f64 {
        self.modes as f64 * self.dzeta
    }

    /// Coordinate of per-axis index `i` in `0 .. 2 modes`.
    pub fn coord(&self, i: usize) -> f64 {
        (i as i64 - self.modes) as f64 * self.dzeta
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let len = self.len_per_axis();
        let mut idx = vec![0usize; self.n];
        for a in (0..self.n).rev() {
            idx[a] = flat % len;
            flat /= len;
        }
        idx
    }

    /// Frequency point for a flat index.
    pub fn zeta_point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).into_iter().map(|i| self.coord(i)).collect()
    }

    /// Whether this window sits exactly on the frequency lattice of `grid`.
    pub fn embeds_in(&self, grid: &Grid) -> bool {
        self.n == grid.n
            && (self.dzeta - grid.dzeta()).abs() <= 1.0e-12 * grid.dzeta()
            && self.modes <= (grid.points_per_axis / 2) as i64
    }
}

/// Data samples over a [`DataGrid`], flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DataFunction {
    pub grid: DataGrid,
    pub values: Vec<C64>,
}

impl DataFunction {
    pub fn zeros(grid: DataGrid) -> Self {
        DataFunction { grid, values: vec![C64::new(0.0, 0.0); grid.total_points()] }
    }

    /// Build from a pointwise closure on frequency points.
    pub fn from_fn(grid: DataGrid, mut f: impl FnMut(&[f64]) -> C64) -> Self {
        let mut values = Vec::with_capacity(grid.total_points());
        for flat in 0..grid.total_points() {
            let zeta = grid.zeta_point(flat);
            values.push(f(&zeta));
        }
        DataFunction { grid, values }
    }

    /// `L^2(dzeta)` norm on the window.
    pub fn l2_norm(&self) -> f64 {
        let meas = self.grid.dzeta.powi(self.grid.n as i32);
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * meas).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &DataFunction) -> DataFunction {
        assert_eq!(self.grid, other.grid, "data grids differ");
        DataFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&mut self, c: C64) {
        for v in self.values.iter_mut() {
            *v *= c;
        }
    }

    /// Inner product `sum f conj(g) dzeta^n`.
    pub fn inner(&self, other: &DataFunction) -> C64 {
        assert_eq!(self.grid, other.grid, "data grids differ");
        let meas = self.grid.dzeta.powi(self.grid.n as i32);
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            acc += a * b.conj();
        }
        acc * meas
    }
}
