//! Module generators, weighted norms, and microlocal diagnostics.
//!
//! The generators fall into two families that intertwine through the free
//! Poisson operator: spacetime operators (rotations, Galilean boosts
//! `2 t D_j - z_j`, translations `D_j`) and data-side counterparts
//! (rotations, `D_xi`, multiplication by `xi`).  [`commutation_residual`]
//! measures the intertwining discretely.
//!
//! Norms:
//! * [`data_norm_wk`]: `W^k` norm of a datum, the root sum of squares of all
//!   generator words of length at most `k` applied to it.
//! * [`parabolic_norm`]: anisotropic Sobolev norm of a spacetime field,
//!   weight `(1 + |zeta|^4 + tau^2)^{s/4}` in frequency and `<(z,t)>^l` in
//!   space, with a fixed 10 percent Tukey taper in time making the slab
//!   periodic before the time transform.
//! * [`module_norm`]: root sum of squares of parabolic norms over module
//!   words of length at most `kappa + k`, alphabet extended by the exact
//!   multiplier `E_1 = (1 + |zeta|^4 + tau^2)^{1/4}`.
//!
//! [`threshold_scan`] integrates `<(z,t)>^{2l} |u|^2` over growing slabs and
//! fits the growth exponent; crossing `l = -1/2` is where the exponent
//! leaves zero.  [`microlocal_split`] separates outgoing from incoming
//! content by windowed frequency sign filters; the two parts reconstruct
//! the field exactly by construction.

use crate::grid::{DataFunction, Grid, SpacetimeField, SpectralEngine, C64};
use crate::scattering::{free_poisson, lsq_slope, ScatteringError};
use crate::phase_space::RadialSign;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegularityError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no data counterpart for this generator: {0}")]
    NoCounterpart(String),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

/// Generator labels.  Index arguments refer to spatial axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorId {
    /// `z_i D_j - z_j D_i` on fields.
    Rotation(usize, usize),
    /// `t D_i - z_i / 2` on fields.
    GalileanHalf(usize),
    /// `2 t D_i - z_i` on fields.
    Galilean2(usize),
    /// `D_i` on fields.
    Translation(usize),
    Identity,
    /// `xi_i D_{xi_j} - xi_j D_{xi_i}` on data.
    DataRotation(usize, usize),
    /// `D_{xi_i}` on data.
    DataDeriv(usize),
    /// Multiplication by `xi_i` on data.
    DataMult(usize),
}

/// Operand for [`apply_generator`]: outputs always match the input kind.
#[derive(Clone, Debug)]
pub enum Operand {
    Field(SpacetimeField),
    Data(DataFunction),
}

/// Norm order parameters; `kappa + k <= 3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOrder {
    pub s: f64,
    pub l: f64,
    pub kappa: usize,
    pub k: usize,
}

impl NormOrder {
    pub fn new(s: f64, l: f64, kappa: usize, k: usize) -> Self {
        assert!(kappa + k <= 3, "module word length kappa + k must be <= 3");
        NormOrder { s, l, kappa, k }
    }
}

/// Fraction of the slab tapered at each end before time transforms.
pub const TAPER_FRACTION: f64 = 0.1;

/// Apply a generator to a field or data operand.
pub fn apply_generator(g: GeneratorId, x: &Operand) -> Result<Operand, RegularityError> {
    match (g, x) {
        (GeneratorId::Identity, _) => Ok(x.clone()),
        (GeneratorId::Rotation(i, j), Operand::Field(u)) => {
            check_axes(u.grid.n, &[i, j], "Rotation")?;
            if i == j {
                return Err(RegularityError::DimensionMismatch(
                    "rotation needs two distinct axes".into(),
                ));
            }
            let di = field_derivative(u, i);
            let dj = field_derivative(u, j);
            let mut out = SpacetimeField::zeros(u.grid);
            for k in 0..u.grid.num_slices() {
                for flat in 0..u.grid.spatial_size() {
                    let z = u.grid.z_point(flat);
                    out.values[(k, flat)] =
                        z[i] * dj.values[(k, flat)] - z[j] * di.values[(k, flat)];
                }
            }
            Ok(Operand::Field(out))
        }
        (GeneratorId::GalileanHalf(i), Operand::Field(u)) => {
            check_axes(u.grid.n, &[i], "GalileanHalf")?;
            Ok(Operand::Field(galilean(u, i, 0.5)))
        }
        (GeneratorId::Galilean2(i), Operand::Field(u)) => {
            check_axes(u.grid.n, &[i], "Galilean2")?;
            Ok(Operand::Field(galilean(u, i, 1.0)))
        }
        (GeneratorId::Translation(i), Operand::Field(u)) => {
            check_axes(u.grid.n, &[i], "Translation")?;
            Ok(Operand::Field(field_derivative(u, i)))
        }
        (GeneratorId::DataRotation(i, j), Operand::Data(f)) => {
            check_axes(f.grid.n, &[i, j], "DataRotation")?;
            if i == j {
                return Err(RegularityError::DimensionMismatch(
                    "rotation needs two distinct axes".into(),
                ));
            }
            let di = data_derivative(f, i);
            let dj = data_derivative(f, j);
            let mut out = DataFunction::zeros(f.grid);
            for flat in 0..f.grid.total_points() {
                let zeta = f.grid.zeta_point(flat);
                out.values[flat] = zeta[i] * dj.values[flat] - zeta[j] * di.values[flat];
            }
            Ok(Operand::Data(out))
        }
        (GeneratorId::DataDeriv(i), Operand::Data(f)) => {
            check_axes(f.grid.n, &[i], "DataDeriv")?;
            Ok(Operand::Data(data_derivative(f, i)))
        }
        (GeneratorId::DataMult(i), Operand::Data(f)) => {
            check_axes(f.grid.n, &[i], "DataMult")?;
            let mut out = f.clone();
            for flat in 0..f.grid.total_points() {
                out.values[flat] *= f.grid.zeta_point(flat)[i];
            }
            Ok(Operand::Data(out))
        }
        (g, Operand::Field(_)) => Err(RegularityError::DimensionMismatch(format!(
            "{g:?} does not act on spacetime fields"
        ))),
        (g, Operand::Data(_)) => Err(RegularityError::DimensionMismatch(format!(
            "{g:?} does not act on data"
        ))),
    }
}

fn check_axes(n: usize, axes: &[usize], name: &str) -> Result<(), RegularityError> {
    for &a in axes {
        if a >= n {
            return Err(RegularityError::DimensionMismatch(format!(
                "{name} axis {a} out of range for dimension {n}"
            )));
        }
    }
    Ok(())
}

/// Spectral `D_i = -i d/d z_i` slice by slice.
fn field_derivative(u: &SpacetimeField, axis: usize) -> SpacetimeField {
    let grid = u.grid;
    let engine = SpectralEngine::new(&grid);
    let mult: Vec<f64> = (0..grid.spatial_size())
        .map(|flat| {
            let idx = grid.unflatten(flat);
            grid.zeta_at(idx[axis])
        })
        .collect();
    let mut out = SpacetimeField::zeros(grid);
    let mut buf = vec![C64::new(0.0, 0.0); grid.spatial_size()];
    for k in 0..grid.num_slices() {
        buf.copy_from_slice(u.values.row(k).as_slice().expect("contiguous"));
        engine.forward(&mut buf);
        for (b, m) in buf.iter_mut().zip(mult.iter()) {
            *b *= *m;
        }
        engine.inverse(&mut buf);
        for (j, v) in buf.iter().enumerate() {
            out.values[(k, j)] = *v;
        }
    }
    out
}

/// `c (2 t D_i) - c z_i` with `c = 1` the full boost and `c = 1/2` the half
/// one.
fn galilean(u: &SpacetimeField, axis: usize, c: f64) -> SpacetimeField {
    let grid = u.grid;
    let d = field_derivative(u, axis);
    let mut out = SpacetimeField::zeros(grid);
    for k in 0..grid.num_slices() {
        let t = grid.time_at(k);
        for flat in 0..grid.spatial_size() {
            let z = grid.z_point(flat);
            out.values[(k, flat)] = c
                * (2.0 * t * d.values[(k, flat)] - z[axis] * u.values[(k, flat)]);
        }
    }
    out
}

/// Spectral `D_{xi_i}` on the periodic data window.
fn data_derivative(f: &DataFunction, axis: usize) -> DataFunction {
    let len = f.grid.len_per_axis();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    // Dual lattice of the window of extent 2 zeta_max: x_r = r pi / zeta_max.
    let dual = PI / f.grid.zeta_max();
    let mut out = f.clone();
    let n = f.grid.n;
    let stride: usize = len.pow((n - 1 - axis) as u32);
    let outer = f.grid.total_points() / len;
    let mut line = vec![C64::new(0.0, 0.0); len];
    for w in 0..outer {
        // Start of this 1-D line through `axis`.
        let block = w / stride;
        let offset = w % stride;
        let base = block * stride * len + offset;
        for (r, v) in line.iter_mut().enumerate() {
            *v = out.values[base + r * stride];
        }
        fwd.process(&mut line);
        for (r, v) in line.iter_mut().enumerate() {
            let sr = if 2 * r < len { r as i64 } else { r as i64 - len as i64 };
            *v *= sr as f64 * dual;
        }
        inv.process(&mut line);
        let scale = 1.0 / len as f64;
        for (r, v) in line.iter().enumerate() {
            out.values[base + r * stride] = v * scale;
        }
    }
    out
}

/// `W^k` norm of a datum: root sum of squares of all words of length at
/// most `k` in the data generators.
pub fn data_norm_wk(f: &DataFunction, k: usize) -> Result<f64, RegularityError> {
    assert!(k <= 3, "W^k implemented for k <= 3");
    let alphabet = data_alphabet(f.grid.n);
    let mut total = 0.0_f64;
    let mut frontier = vec![f.clone()];
    total += sq(f.l2_norm());
    for _ in 0..k {
        let mut next = Vec::new();
        for g in &alphabet {
            for h in &frontier {
                let Operand::Data(out) = apply_generator(*g, &Operand::Data(h.clone()))? else {
                    unreachable!()
                };
                total += sq(out.l2_norm());
                next.push(out);
            }
        }
        frontier = next;
    }
    Ok(total.sqrt())
}

fn sq(x: f64) -> f64 {
    x * x
}

fn data_alphabet(n: usize) -> Vec<GeneratorId> {
    let mut a = Vec::new();
    if n >= 2 {
        a.push(GeneratorId::DataRotation(0, 1));
    }
    for i in 0..n {
        a.push(GeneratorId::DataDeriv(i));
    }
    for i in 0..n {
        a.push(GeneratorId::DataMult(i));
    }
    a
}

/// Tukey taper weights over the time slices.
fn taper_weights(slices: usize) -> Vec<f64> {
    let m = (slices - 1) as f64;
    (0..slices)
        .map(|k| {
            let x = k as f64 / m;
            if x < TAPER_FRACTION {
                0.5 * (1.0 - (PI * x / TAPER_FRACTION).cos())
            } else if x > 1.0 - TAPER_FRACTION {
                0.5 * (1.0 - (PI * (1.0 - x) / TAPER_FRACTION).cos())
            } else {
                1.0
            }
        })
        .collect()
}

/// Apply the spacetime Fourier multiplier
/// `(1 + |zeta|^4 + tau^2)^{power}` to a field, treating the slab as
/// periodic in time.
fn parabolic_multiplier(u: &SpacetimeField, power: f64) -> SpacetimeField {
    let grid = u.grid;
    let slices = grid.num_slices();
    let engine = SpectralEngine::new(&grid);
    let mut planner = FftPlanner::new();
    let tf = planner.plan_fft_forward(slices);
    let ti = planner.plan_fft_inverse(slices);
    let dtau = 2.0 * PI / (slices as f64 * grid.dt());

    let mut out = u.clone();
    // Spatial transform slice by slice.
    let mut buf = vec![C64::new(0.0, 0.0); grid.spatial_size()];
    for k in 0..slices {
        buf.copy_from_slice(out.values.row(k).as_slice().expect("contiguous"));
        engine.forward(&mut buf);
        for (j, v) in buf.iter().enumerate() {
            out.values[(k, j)] = *v;
        }
    }
    // Time transform down each column, multiplier, inverse.
    let mut col = vec![C64::new(0.0, 0.0); slices];
    for j in 0..grid.spatial_size() {
        for k in 0..slices {
            col[k] = out.values[(k, j)];
        }
        tf.process(&mut col);
        let zsq = grid.zeta_sq(j);
        for (r, v) in col.iter_mut().enumerate() {
            let sr = if 2 * r < slices { r as i64 } else { r as i64 - slices as i64 };
            let tau = sr as f64 * dtau;
            let w = (1.0 + zsq * zsq + tau * tau).powf(power);
            *v *= w;
        }
        ti.process(&mut col);
        let scale = 1.0 / slices as f64;
        for k in 0..slices {
            out.values[(k, j)] = col[k] * scale;
        }
    }
    // Inverse spatial transform.
    for k in 0..slices {
        buf.copy_from_slice(out.values.row(k).as_slice().expect("contiguous"));
        engine.inverse(&mut buf);
        for (j, v) in buf.iter().enumerate() {
            out.values[(k, j)] = *v;
        }
    }
    out
}

/// Weighted parabolic norm `|| <(z,t)>^l F^{-1} w_s F (taper u) ||_L2` with
/// `w_s = (1 + |zeta|^4 + tau^2)^{s/4}`.
pub fn parabolic_norm(u: &SpacetimeField, s: f64, l: f64) -> f64 {
    let grid = u.grid;
    let mut tapered = u.clone();
    let w = taper_weights(grid.num_slices());
    for k in 0..grid.num_slices() {
        let wk = w[k];
        for j in 0..grid.spatial_size() {
            tapered.values[(k, j)] *= wk;
        }
    }
    let smoothed =
        if s == 0.0 { tapered } else { parabolic_multiplier(&tapered, s / 4.0) };
    // Spatial weight and L2.
    let dz_n = grid.dz().powi(grid.n as i32);
    let dt = grid.dt();
    let mut acc = 0.0;
    for k in 0..grid.num_slices() {
        let t = grid.time_at(k);
        let tw = grid.t_weight(k);
        let mut row = 0.0;
        for flat in 0..grid.spatial_size() {
            let z = grid.z_point(flat);
            let r2: f64 = z.iter().map(|v| v * v).sum::<f64>() + t * t;
            let weight = (1.0 + r2).powf(l);
            row += weight * smoothed.values[(k, flat)].norm_sqr();
        }
        acc += tw * row;
    }
    (acc * dz_n * dt).sqrt()
}

/// Module regularity norm: root sum of squares of [`parabolic_norm`] over
/// all words of length at most `kappa + k` in the module alphabet
/// (rotations for n >= 2, Galilean half-boosts, translations, and the
/// multiplier `E_1 = (1 + |zeta|^4 + tau^2)^{1/4}`).
///
/// `sign` selects the module adapted to the outgoing or incoming set: the
/// incoming one flips the sign of the position term in the boosts.
pub fn module_norm(
    u: &SpacetimeField,
    order: &NormOrder,
    sign: RadialSign,
) -> Result<f64, RegularityError> {
    assert!(order.kappa + order.k <= 3, "module word length kappa + k must be <= 3");
    let n = u.grid.n;
    let flip = match sign {
        RadialSign::Plus => 1.0,
        RadialSign::Minus => -1.0,
    };
    // Word alphabet as closures over the field.
    enum Letter {
        Gen(GeneratorId),
        E1,
    }
    let mut alphabet: Vec<Letter> = Vec::new();
    if n >= 2 {
        alphabet.push(Letter::Gen(GeneratorId::Rotation(0, 1)));
    }
    for i in 0..n {
        alphabet.push(Letter::Gen(GeneratorId::GalileanHalf(i)));
    }
    for i in 0..n {
        alphabet.push(Letter::Gen(GeneratorId::Translation(i)));
    }
    alphabet.push(Letter::E1);

    let apply_letter = |letter: &Letter, f: &SpacetimeField| -> Result<SpacetimeField, RegularityError> {
        match letter {
            Letter::Gen(GeneratorId::GalileanHalf(i)) => {
                // Half boost with the sign of z flipped for the incoming
                // module.
                let d = field_derivative(f, *i);
                let grid = f.grid;
                let mut out = SpacetimeField::zeros(grid);
                for k in 0..grid.num_slices() {
                    let t = grid.time_at(k);
                    for flat in 0..grid.spatial_size() {
                        let z = grid.z_point(flat);
                        out.values[(k, flat)] = t * d.values[(k, flat)]
                            - flip * 0.5 * z[*i] * f.values[(k, flat)];
                    }
                }
                Ok(out)
            }
            Letter::Gen(g) => {
                let Operand::Field(out) = apply_generator(*g, &Operand::Field(f.clone()))? else {
                    unreachable!()
                };
                Ok(out)
            }
            Letter::E1 => Ok(parabolic_multiplier(f, 0.25)),
        }
    };

    let max_len = order.kappa + order.k;
    let mut total = sq(parabolic_norm(u, order.s, order.l));
    let mut frontier = vec![u.clone()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for letter in &alphabet {
            for h in &frontier {
                let out = apply_letter(letter, h)?;
                total += sq(parabolic_norm(&out, order.s, order.l));
                next.push(out);
            }
        }
        frontier = next;
    }
    Ok(total.sqrt())
}

/// Threshold scan report.
#[derive(Clone, Debug)]
pub struct ThresholdScan {
    /// Fitted log-log slope of `I(T)`.
    pub slope: f64,
    /// `(T, I(T))` samples.
    pub samples: Vec<(f64, f64)>,
    /// Set when the field vanishes on the scan range and no slope exists.
    pub degenerate: bool,
}

/// Integrate `I(T) = int_{1 <= t <= T} <(z,t)>^{2l} |u|^2 dz dt` for each
/// `T` and fit the growth exponent `I ~ T^slope`.
pub fn threshold_scan(u: &SpacetimeField, l: f64, t_list: &[f64]) -> ThresholdScan {
    let grid = u.grid;
    let dz_n = grid.dz().powi(grid.n as i32);
    let dt = grid.dt();
    let slices = grid.num_slices();
    let k_start = (0..slices)
        .find(|&k| grid.time_at(k) >= 1.0 - 1.0e-9)
        .unwrap_or(slices);
    // Weighted mass of each slice, then prefix sums so every requested T
    // costs O(1).
    let mut row = vec![0.0_f64; slices];
    for (k, r) in row.iter_mut().enumerate().skip(k_start) {
        let t = grid.time_at(k);
        let mut acc = 0.0;
        for flat in 0..grid.spatial_size() {
            let z = grid.z_point(flat);
            let r2: f64 = z.iter().map(|v| v * v).sum::<f64>() + t * t;
            acc += (1.0 + r2).powf(l) * u.values[(k, flat)].norm_sqr();
        }
        *r = acc;
    }
    let mut prefix = vec![0.0_f64; slices + 1];
    for k in 0..slices {
        prefix[k + 1] = prefix[k] + row[k];
    }
    let mut samples = Vec::with_capacity(t_list.len());
    for &t_end in t_list {
        let Some(k_end) = grid.slice_index_of(t_end) else {
            continue;
        };
        if k_end <= k_start {
            continue;
        }
        // Trapezoid over [k_start, k_end].
        let acc =
            prefix[k_end + 1] - prefix[k_start] - 0.5 * (row[k_start] + row[k_end]);
        samples.push((grid.time_at(k_end), acc * dz_n * dt));
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, v)| *v > 1.0e-300)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return ThresholdScan { slope: f64::NAN, samples, degenerate: true };
    }
    ThresholdScan { slope: lsq_slope(&pts), samples, degenerate: false }
}

/// Number of spatial blocks per axis in the microlocal split.
pub const SPLIT_BLOCKS: usize = 8;
/// Regularization scale for the frequency sign near `zeta = 0`.
const SPLIT_FREQ_SOFTENING: f64 = 0.05;
/// Half-width of the smooth step in the alignment variable.
const SPLIT_STEP_WIDTH: f64 = 0.3;

fn smooth_step(x: f64) -> f64 {
    if x <= -SPLIT_STEP_WIDTH {
        0.0
    } else if x >= SPLIT_STEP_WIDTH {
        1.0
    } else {
        0.5 * (1.0 + (0.5 * PI * x / SPLIT_STEP_WIDTH).sin())
    }
}

/// Split a field into approximately outgoing and incoming parts.
///
/// Spatial Hann windows on `SPLIT_BLOCKS` blocks per axis (an exact
/// partition of unity) localize position; within each block the frequency
/// content aligned with the block direction (`z . zeta > 0`) goes to the
/// plus part.  The complement is computed in physical space, so
/// `u = u_plus + u_minus` holds to rounding.
pub fn microlocal_split(u: &SpacetimeField) -> (SpacetimeField, SpacetimeField) {
    let grid = u.grid;
    let engine = SpectralEngine::new(&grid);
    let np = grid.points_per_axis;
    let l = grid.half_width;
    let spacing = 2.0 * l / SPLIT_BLOCKS as f64;
    let width = 2.0 * spacing;

    // Per-axis window tables: window[b][j].
    let centers: Vec<f64> =
        (0..SPLIT_BLOCKS).map(|b| -l + (b as f64 + 0.5) * spacing).collect();
    let window_1d: Vec<Vec<f64>> = centers
        .iter()
        .map(|c| {
            (0..np)
                .map(|j| {
                    let z = grid.z_coord(j);
                    // Circular distance on the periodic box.
                    let mut d = z - c;
                    while d > l {
                        d -= 2.0 * l;
                    }
                    while d < -l {
                        d += 2.0 * l;
                    }
                    if d.abs() < 0.5 * width {
                        let cphase = (PI * d / width).cos();
                        cphase * cphase
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let blocks: Vec<Vec<usize>> = match grid.n {
        1 => (0..SPLIT_BLOCKS).map(|b| vec![b]).collect(),
        2 => {
            let mut v = Vec::new();
            for bx in 0..SPLIT_BLOCKS {
                for by in 0..SPLIT_BLOCKS {
                    v.push(vec![bx, by]);
                }
            }
            v
        }
        _ => unreachable!(),
    };

    // Frequency filters chi_b per block.
    let mut chi: Vec<Vec<f64>> = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let dir: Vec<f64> = block.iter().map(|&b| centers[b]).collect();
        let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dirn: Vec<f64> = dir.iter().map(|v| v / dn).collect();
        let filt: Vec<f64> = (0..grid.spatial_size())
            .map(|flat| {
                let idx = grid.unflatten(flat);
                let zeta: Vec<f64> = idx.iter().map(|&k| grid.zeta_at(k)).collect();
                let znorm2: f64 = zeta.iter().map(|v| v * v).sum();
                let align: f64 =
                    dirn.iter().zip(zeta.iter()).map(|(a, b)| a * b).sum();
                let x = align
                    / (znorm2 + SPLIT_FREQ_SOFTENING * SPLIT_FREQ_SOFTENING).sqrt();
                smooth_step(x)
            })
            .collect();
        chi.push(filt);
    }

    let mut plus = SpacetimeField::zeros(grid);
    let mut minus = SpacetimeField::zeros(grid);
    let mut windowed = vec![C64::new(0.0, 0.0); grid.spatial_size()];
    let mut filtered = vec![C64::new(0.0, 0.0); grid.spatial_size()];
    for k in 0..grid.num_slices() {
        let row = u.values.row(k);
        for (bi, block) in blocks.iter().enumerate() {
            for flat in 0..grid.spatial_size() {
                let idx = grid.unflatten(flat);
                let mut w = 1.0;
                for (a, &b) in block.iter().enumerate() {
                    w *= window_1d[b][idx[a]];
                }
                windowed[flat] = row[flat] * w;
            }
            filtered.copy_from_slice(&windowed);
            engine.forward(&mut filtered);
            for (v, c) in filtered.iter_mut().zip(chi[bi].iter()) {
                *v *= *c;
            }
            engine.inverse(&mut filtered);
            for flat in 0..grid.spatial_size() {
                plus.values[(k, flat)] += filtered[flat];
                minus.values[(k, flat)] += windowed[flat] - filtered[flat];
            }
        }
    }
    (plus, minus)
}

/// Discrete intertwining residual of a spacetime generator with its data
/// counterpart through the free Poisson operator, relative to the right
/// side.
pub fn commutation_residual(
    g: GeneratorId,
    f: &DataFunction,
    grid: &Grid,
) -> Result<f64, RegularityError> {
    let (counterpart, factor): (GeneratorId, f64) = match g {
        GeneratorId::Rotation(i, j) => (GeneratorId::DataRotation(i, j), 1.0),
        GeneratorId::Galilean2(i) => (GeneratorId::DataDeriv(i), 1.0),
        GeneratorId::GalileanHalf(i) => (GeneratorId::DataDeriv(i), 0.5),
        GeneratorId::Translation(i) => (GeneratorId::DataMult(i), 1.0),
        GeneratorId::Identity => (GeneratorId::Identity, 1.0),
        other => {
            return Err(RegularityError::NoCounterpart(format!(
                "{other:?} is already a data generator"
            )));
        }
    };
    let u = free_poisson(f, grid)?;
    let Operand::Field(lhs) = apply_generator(g, &Operand::Field(u))? else {
        unreachable!()
    };
    let Operand::Data(df) = apply_generator(counterpart, &Operand::Data(f.clone()))? else {
        unreachable!()
    };
    let mut rhs = free_poisson(&df, grid)?;
    rhs.scale(C64::new(factor, 0.0));
    let denom = rhs.spacetime_l2().max(1.0e-300);
    Ok(lhs.sub(&rhs).spacetime_l2() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DataGrid;
    use crate::synth;
    use approx::assert_relative_eq;

    #[test]
    fn taper_endpoints_vanish_and_middle_is_flat() {
        let w = taper_weights(101);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[100], 0.0);
        assert_eq!(w[50], 1.0);
        assert!(w[5] > 0.0 && w[5] < 1.0);
    }

    #[test]
    fn wk_norm_of_unit_gaussian_matches_closed_form() {
        // f = e^{-zeta^2/2} on a wide window: ||f||^2 = sqrt(pi),
        // ||D f||^2 = ||zeta f||^2 = sqrt(pi)/2, so
        // W^1 = sqrt(2 sqrt(pi)) = 1.8827925275534296.
        let dg = DataGrid::new(1, 16.0 / 256.0, 128); // window [-8, 8)
        let f = synth::gaussian_data(dg, 1.0, &[0.0]);
        let w0 = data_norm_wk(&f, 0).unwrap();
        let w1 = data_norm_wk(&f, 1).unwrap();
        assert_relative_eq!(w0, std::f64::consts::PI.powf(0.25), max_relative = 1e-10);
        assert_relative_eq!(w1, 1.8827925275534296, max_relative = 1e-10);
    }

    #[test]
    fn wk_norms_are_monotone_in_k() {
        let dg = DataGrid::new(1, 0.1, 30);
        let f = synth::random_data(dg, 7);
        let w0 = data_norm_wk(&f, 0).unwrap();
        let w1 = data_norm_wk(&f, 1).unwrap();
        let w2 = data_norm_wk(&f, 2).unwrap();
        assert!(w0 <= w1 && w1 <= w2);
    }

    #[test]
    fn parabolic_norm_at_zero_orders_is_tapered_l2() {
        let grid = Grid::new(1, 64, 10.0, -2.0, 2.0, 40).unwrap();
        let f = synth::random_source_field(&grid, 21, 3.0, 1.0, 0.0);
        let norm = parabolic_norm(&f, 0.0, 0.0);
        // Compare against the direct tapered L2.
        let w = taper_weights(grid.num_slices());
        let mut acc = 0.0;
        for k in 0..grid.num_slices() {
            let tw = grid.t_weight(k);
            let mut row = 0.0;
            for j in 0..grid.spatial_size() {
                row += (w[k] * f.values[(k, j)]).norm_sqr();
            }
            acc += tw * row;
        }
        let direct = (acc * grid.dz() * grid.dt()).sqrt();
        assert_relative_eq!(norm, direct, max_relative = 1e-12);
    }

    #[test]
    fn commutation_translation_residual_is_tiny() {
        let grid = Grid::new(1, 256, 30.0, -3.0, 3.0, 60).unwrap();
        let dg = DataGrid::new(1, grid.dzeta(), 8);
        let f = synth::gaussian_data(dg, 0.25, &[0.0]);
        let r = commutation_residual(GeneratorId::Translation(0), &f, &grid).unwrap();
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn microlocal_split_reconstructs_exactly() {
        let grid = Grid::new(1, 128, 20.0, -1.0, 1.0, 4).unwrap();
        let f = synth::random_source_field(&grid, 15, 5.0, 0.9, 0.0);
        let (p, m) = microlocal_split(&f);
        let mut recon = p.clone();
        recon.values += &m.values;
        let err = recon.sub(&f).max_abs();
        assert!(err < 1e-12 * f.max_abs().max(1.0), "reconstruction error {err}");
    }

    #[test]
    fn generator_dimension_checks() {
        let grid = Grid::new(1, 16, 5.0, 0.0, 1.0, 4).unwrap();
        let u = SpacetimeField::zeros(grid);
        assert!(matches!(
            apply_generator(GeneratorId::Translation(1), &Operand::Field(u.clone())),
            Err(RegularityError::DimensionMismatch(_))
        ));
        assert!(matches!(
            apply_generator(GeneratorId::DataDeriv(0), &Operand::Field(u)),
            Err(RegularityError::DimensionMismatch(_))
        ));
    }
}
