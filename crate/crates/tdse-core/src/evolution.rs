//! Split-step evolution and the two causal inverses of `P`.
//!
//! The Schrodinger group `U(t + dt, t) = exp(-i dt (Delta + V))` (with
//! `Delta` the positive Laplacian, Fourier multiplier `|zeta|^2`) is
//! realized by Strang splitting: a half potential phase sampled at the step
//! midpoint, the exact free multiplier `exp(-i dt |zeta|^2)`, and the other
//! half phase.  Second order in `dt`, exactly unitary for real `V`, and
//! valid for negative `dt`, which is how backward marching works.
//!
//! `P = D_t + Delta + V` itself acts through a fourth-order finite
//! difference for `D_t = -i d/dt` (one-sided within [`ONE_SIDED_TIME_ROWS`]
//! rows of the slab ends) and the spectral `|zeta|^2` multiplier.
//!
//! The retarded inverse marches forward from zero below the source support,
//! accumulating `u_{k+1} = U u_k + i dt U_{1/2} v_mid`; the advanced inverse
//! marches backward with the mirrored update.  Sources must vanish near
//! both slab ends so that each inverse has room to be exactly zero on its
//! quiet side.

use crate::grid::{Grid, SpacetimeField, SpectralEngine, C64};
use crate::potential::PotentialSpec;
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolutionError {
    /// The source is not compactly supported strictly inside the time slab.
    #[error("source support violation: {0}")]
    SupportViolation(String),
}

/// Rows at each slab end where `apply_p` falls back to one-sided time
/// stencils (same fourth order, different error constant).
pub const ONE_SIDED_TIME_ROWS: usize = 2;

/// Relative magnitude below which a source slice counts as empty.
pub const SUPPORT_THRESHOLD: f64 = 1.0e-14;

/// Split-step propagator with cached FFT plans and kinetic phases.
pub struct Propagator {
    pub grid: Grid,
    engine: SpectralEngine,
    kinetic: RefCell<HashMap<u64, Arc<Vec<C64>>>>,
}

impl Propagator {
    pub fn new(grid: Grid) -> Self {
        Propagator { grid, engine: SpectralEngine::new(&grid), kinetic: RefCell::new(HashMap::new()) }
    }

    pub fn engine(&self) -> &SpectralEngine {
        &self.engine
    }

    fn kinetic_phase(&self, dt: f64) -> Arc<Vec<C64>> {
        let key = dt.to_bits();
        if let Some(v) = self.kinetic.borrow().get(&key) {
            return v.clone();
        }
        let phase: Vec<C64> = (0..self.grid.spatial_size())
            .map(|flat| (C64::new(0.0, -dt * self.grid.zeta_sq(flat))).exp())
            .collect();
        let arc = Arc::new(phase);
        self.kinetic.borrow_mut().insert(key, arc.clone());
        arc
    }

    /// One Strang step `U(t + dt, t)` in place.
    pub fn step_in_place(&self, slice: &mut [C64], t: f64, dt: f64, v: &PotentialSpec) {
        let half = v.sample_slice(&self.grid, t + 0.5 * dt).map(|pot| {
            pot.into_iter()
                .map(|val| (C64::new(0.0, -0.5 * dt) * val).exp())
                .collect::<Vec<C64>>()
        });
        if let Some(p) = &half {
            for (u, f) in slice.iter_mut().zip(p.iter()) {
                *u *= f;
            }
        }
        let kin = self.kinetic_phase(dt);
        self.engine.forward(slice);
        for (u, f) in slice.iter_mut().zip(kin.iter()) {
            *u *= f;
        }
        self.engine.inverse(slice);
        if let Some(p) = &half {
            for (u, f) in slice.iter_mut().zip(p.iter()) {
                *u *= f;
            }
        }
    }
}

/// One split step `U(t + dt, t)` applied to a single slice.
pub fn step_evolve(slice: &[C64], grid: &Grid, t: f64, dt: f64, v: &PotentialSpec) -> Vec<C64> {
    assert_eq!(slice.len(), grid.spatial_size(), "slice length mismatch");
    let prop = Propagator::new(*grid);
    let mut out = slice.to_vec();
    prop.step_in_place(&mut out, t, dt, v);
    out
}

/// March the initial slice at `t0` across the whole slab.
pub fn evolve(initial: &[C64], grid: &Grid, v: &PotentialSpec) -> SpacetimeField {
    assert_eq!(initial.len(), grid.spatial_size(), "initial slice length mismatch");
    let prop = Propagator::new(*grid);
    let mut field = SpacetimeField::zeros(*grid);
    let mut cur = initial.to_vec();
    let dt = grid.dt();
    for (j, val) in cur.iter().enumerate() {
        field.values[(0, j)] = *val;
    }
    for k in 0..grid.steps {
        prop.step_in_place(&mut cur, grid.time_at(k), dt, v);
        for (j, val) in cur.iter().enumerate() {
            field.values[(k + 1, j)] = *val;
        }
    }
    field
}

/// Apply `P = D_t + Delta + V` to a discrete field.
///
/// Fourth-order time stencils; within [`ONE_SIDED_TIME_ROWS`] of either end
/// the stencil is one-sided.  Needs at least five slices.
pub fn apply_p(u: &SpacetimeField, v: &PotentialSpec) -> SpacetimeField {
    let grid = u.grid;
    assert!(grid.steps >= 4, "apply_p needs at least five time slices");
    let engine = SpectralEngine::new(&grid);
    let m = grid.steps;
    let dt = grid.dt();
    let mut out = SpacetimeField::zeros(grid);

    // D_t u by finite differences down each spatial column.
    let inv12 = 1.0 / (12.0 * dt);
    for j in 0..grid.spatial_size() {
        let col: Vec<C64> = (0..=m).map(|k| u.values[(k, j)]).collect();
        for k in 0..=m {
            let ddt = if k >= 2 && k + 2 <= m {
                (-col[k + 2] + 8.0 * col[k + 1] - 8.0 * col[k - 1] + col[k - 2]) * inv12
            } else if k == 0 {
                (-25.0 * col[0] + 48.0 * col[1] - 36.0 * col[2] + 16.0 * col[3] - 3.0 * col[4])
                    * inv12
            } else if k == 1 {
                (-3.0 * col[0] - 10.0 * col[1] + 18.0 * col[2] - 6.0 * col[3] + col[4]) * inv12
            } else if k == m - 1 {
                (3.0 * col[m] + 10.0 * col[m - 1] - 18.0 * col[m - 2] + 6.0 * col[m - 3]
                    - col[m - 4])
                    * inv12
            } else {
                (25.0 * col[m] - 48.0 * col[m - 1] + 36.0 * col[m - 2] - 16.0 * col[m - 3]
                    + 3.0 * col[m - 4])
                    * inv12
            };
            // D_t = -i d/dt.
            out.values[(k, j)] = C64::new(0.0, -1.0) * ddt;
        }
    }

    // Spectral Laplacian and potential slice by slice.
    let mult: Vec<f64> = (0..grid.spatial_size()).map(|f| grid.zeta_sq(f)).collect();
    let mut buf = vec![C64::new(0.0, 0.0); grid.spatial_size()];
    for k in 0..=m {
        buf.copy_from_slice(u.values.row(k).as_slice().expect("contiguous row"));
        engine.forward(&mut buf);
        for (b, f) in buf.iter_mut().zip(mult.iter()) {
            *b *= *f;
        }
        engine.inverse(&mut buf);
        let pot = v.sample_slice(&grid, grid.time_at(k));
        for j in 0..grid.spatial_size() {
            let mut val = out.values[(k, j)] + buf[j];
            if let Some(p) = &pot {
                val += p[j] * u.values[(k, j)];
            }
            out.values[(k, j)] = val;
        }
    }
    out
}

/// Indices of the first and last slices where `v` is nonnegligible.
fn support_rows(v: &SpacetimeField) -> Option<(usize, usize)> {
    let max = v.max_abs();
    if max == 0.0 {
        return None;
    }
    let thr = SUPPORT_THRESHOLD * max;
    let mut first = None;
    let mut last = 0;
    for k in 0..v.grid.num_slices() {
        if v.values.row(k).iter().any(|x| x.norm() > thr) {
            if first.is_none() {
                first = Some(k);
            }
            last = k;
        }
    }
    first.map(|f| (f, last))
}

/// Retarded inverse: the unique solution of `P u = v` vanishing for times
/// below the source support.
pub fn solve_retarded(v: &SpacetimeField, pot: &PotentialSpec) -> Result<SpacetimeField, EvolutionError> {
    solve_causal(v, pot, true)
}

/// Advanced inverse: the unique solution of `P u = v` vanishing for times
/// above the source support.
pub fn solve_advanced(v: &SpacetimeField, pot: &PotentialSpec) -> Result<SpacetimeField, EvolutionError> {
    solve_causal(v, pot, false)
}

fn solve_causal(
    v: &SpacetimeField,
    pot: &PotentialSpec,
    retarded: bool,
) -> Result<SpacetimeField, EvolutionError> {
    let grid = v.grid;
    let m = grid.steps;
    let dt = grid.dt();
    let mut out = SpacetimeField::zeros(grid);
    let Some((first, last)) = support_rows(v) else {
        return Ok(out); // zero source, zero solution
    };
    if first == 0 || last == m {
        return Err(EvolutionError::SupportViolation(format!(
            "source active on slab boundary rows {first}..{last} of 0..{m}; \
             it must vanish near both ends"
        )));
    }

    let prop = Propagator::new(grid);
    let mut cur = vec![C64::new(0.0, 0.0); grid.spatial_size()];
    let mut mid = vec![C64::new(0.0, 0.0); grid.spatial_size()];

    if retarded {
        // March upward from the quiet region below the support.
        for k in (first - 1)..m {
            let t_k = grid.time_at(k);
            prop.step_in_place(&mut cur, t_k, dt, pot);
            if k <= last {
                // Midpoint source term, propagated over the half step.
                for j in 0..grid.spatial_size() {
                    mid[j] = 0.5 * (v.values[(k, j)] + v.values[(k + 1, j)]);
                }
                prop.step_in_place(&mut mid, t_k + 0.5 * dt, 0.5 * dt, pot);
                for (c, s) in cur.iter_mut().zip(mid.iter()) {
                    *c += C64::new(0.0, dt) * s;
                }
            }
            for (j, val) in cur.iter().enumerate() {
                out.values[(k + 1, j)] = *val;
            }
        }
    } else {
        // March downward from the quiet region above the support.
        for k in (0..=last).rev() {
            let t_k1 = grid.time_at(k + 1);
            prop.step_in_place(&mut cur, t_k1, -dt, pot);
            if k + 1 >= first {
                for j in 0..grid.spatial_size() {
                    mid[j] = 0.5 * (v.values[(k, j)] + v.values[(k + 1, j)]);
                }
                prop.step_in_place(&mut mid, t_k1 - 0.5 * dt, -0.5 * dt, pot);
                for (c, s) in cur.iter_mut().zip(mid.iter()) {
                    *c -= C64::new(0.0, dt) * s;
                }
            }
            for (j, val) in cur.iter().enumerate() {
                out.values[(k, j)] = *val;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn test_grid() -> Grid {
        Grid::new(1, 128, 20.0, -4.0, 4.0, 160).unwrap()
    }

    #[test]
    fn free_step_is_exact_on_a_plane_wave() {
        // e^{i z zeta0} evolves to e^{-i t zeta0^2} e^{i z zeta0} exactly.
        let grid = test_grid();
        let zeta0 = grid.dzeta() * 5.0;
        let slice: Vec<C64> = (0..grid.spatial_size())
            .map(|j| C64::new(0.0, grid.z_coord(j) * zeta0).exp())
            .collect();
        let dt = 0.37;
        let out = step_evolve(&slice, &grid, 0.0, dt, &PotentialSpec::zero());
        let phase = C64::new(0.0, -dt * zeta0 * zeta0).exp();
        for (o, s) in out.iter().zip(slice.iter()) {
            assert!((o - phase * s).norm() < 1e-12);
        }
    }

    #[test]
    fn strang_step_is_unitary_for_real_potential() {
        let grid = test_grid();
        let v = PotentialSpec::compact_bump(3.0, vec![0.5], 0.0, 2.0, 2.0);
        let slice = synth::gaussian_slice(&grid, 0.8, &[0.3]);
        let n0: f64 = slice.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let out = step_evolve(&slice, &grid, -0.1, 0.05, &v);
        let n1: f64 = out.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((n1 / n0 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn backward_step_inverts_forward_step() {
        let grid = test_grid();
        let v = PotentialSpec::compact_bump(2.0, vec![0.0], 0.0, 3.0, 2.0);
        let slice = synth::gaussian_slice(&grid, 1.0, &[0.0]);
        let t = 0.3;
        let dt = 0.05;
        let fwd = step_evolve(&slice, &grid, t, dt, &v);
        let back = step_evolve(&fwd, &grid, t + dt, -dt, &v);
        for (a, b) in back.iter().zip(slice.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn retarded_solution_vanishes_before_the_source() {
        let grid = test_grid();
        let v_field = synth::random_source_field(&grid, 11, 3.0, 1.0, 0.0);
        let u = solve_retarded(&v_field, &PotentialSpec::zero()).unwrap();
        let (first, _) = super::support_rows(&v_field).unwrap();
        let peak = u.max_abs();
        assert!(peak > 0.0);
        for k in 0..first.saturating_sub(1) {
            let row_max = u.values.row(k).iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(row_max <= 1e-14 * peak, "leak at row {k}");
        }
    }

    #[test]
    fn advanced_solution_vanishes_after_the_source() {
        let grid = test_grid();
        let v_field = synth::random_source_field(&grid, 12, 3.0, 1.0, 0.0);
        let u = solve_advanced(&v_field, &PotentialSpec::zero()).unwrap();
        let (_, last) = super::support_rows(&v_field).unwrap();
        let peak = u.max_abs();
        for k in (last + 2)..=grid.steps {
            let row_max = u.values.row(k).iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(row_max <= 1e-14 * peak, "leak at row {k}");
        }
    }

    #[test]
    fn retarded_residual_is_small_and_second_order() {
        let base = Grid::new(1, 128, 20.0, -4.0, 4.0, 200).unwrap();
        let mut residuals = Vec::new();
        for refine in [1usize, 2, 4] {
            let grid = Grid { steps: base.steps * refine, ..base };
            let v_field = synth::random_source_field(&grid, 5, 4.0, 1.2, 0.0);
            let u = solve_retarded(&v_field, &PotentialSpec::zero()).unwrap();
            let pu = apply_p(&u, &PotentialSpec::zero());
            let res = pu.sub(&v_field).spacetime_l2() / v_field.spacetime_l2();
            residuals.push(res);
        }
        // Measured residuals on this configuration: ~[2.6e-3, 4.4e-4, 1.0e-4].
        // The coarsest level is still pre-asymptotic, so assert smallness on the
        // finest level and at-least-second-order decay across the refinements.
        assert!(residuals[2] < 2e-4, "residual too large: {residuals:?}");
        let slope = (residuals[0] / residuals[2]).log2() / 2.0;
        assert!(slope > 1.6, "slope {slope}, residuals {residuals:?}");
        assert!(slope < 3.0, "slope {slope}, residuals {residuals:?}");
    }

    #[test]
    fn boundary_touching_source_is_rejected() {
        let grid = Grid::new(1, 32, 10.0, -1.0, 1.0, 20).unwrap();
        let mut v_field = SpacetimeField::zeros(grid);
        v_field.values[(0, 3)] = C64::new(1.0, 0.0);
        assert!(matches!(
            solve_retarded(&v_field, &PotentialSpec::zero()),
            Err(EvolutionError::SupportViolation(_))
        ));
    }
}
