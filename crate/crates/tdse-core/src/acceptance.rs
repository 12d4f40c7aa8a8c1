//! The acceptance suite: thirteen deterministic pass/fail criteria
//! exercising every layer of the crate at desk scale.
//!
//! Each criterion is a self-contained function — no state is shared or
//! cached between criteria, so the determinism criterion can recompute all
//! of them from scratch and compare reported metrics byte for byte.  All
//! randomness is drawn from fixed-seed ChaCha8 streams and every
//! computation is single-threaded, so reruns reproduce metrics exactly.
//!
//! The default slab is `n = 1`, 1024 points on `[-60, 60)`, time window
//! `[-30, 30]` with 1200 steps.  Criteria that need a different regime
//! construct their own grids locally: short slabs for the closed form and
//! the commutation identities, a long slab for the threshold law, and the
//! long wide slab of [`asymptotic_slab`] wherever a criterion reads
//! asymptotic data off a field — on the default slab the tail times are
//! simply not asymptotic yet and the limit fit floors near 2·10⁻²
//! (disclosed as a metric of the extraction criterion).

use crate::evolution::{apply_p, evolve, solve_advanced, solve_retarded};
use crate::flow::{trace_bicharacteristic, Direction, EndpointClass, TraceOpts};
use crate::grid::{DataFunction, DataGrid, Grid, C64};
use crate::phase_space::{PhasePoint, RadialSign};
use crate::potential::PotentialSpec;
use crate::regularity::{commutation_residual, data_norm_wk, threshold_scan, GeneratorId};
use crate::scattering::{
    asymptotic_slab, default_tail_times, extract_data, free_poisson, lsq_slope,
    pairing_check, scattering_matrix, slice_datum, PairingData,
};
use crate::synth;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Result of one criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub index: usize,
    pub name: String,
    pub passed: bool,
    /// Reported measurements; keys are stable and values deterministic.
    pub metrics: BTreeMap<String, f64>,
    pub notes: String,
}

/// Full suite result.
#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceReport {
    pub outcomes: Vec<CriterionOutcome>,
    pub all_passed: bool,
}

pub const CRITERION_NAMES: [&str; 13] = [
    "flow-classification",
    "fiber-conservation",
    "free-gaussian-closed-form",
    "unitarity",
    "causal-propagator-residual",
    "asymptotic-extraction",
    "poisson-consistency",
    "scattering-sanity",
    "pairing-identity",
    "generator-commutation",
    "threshold-law",
    "data-norm-stability",
    "determinism",
];

pub fn criterion_name(index: usize) -> &'static str {
    CRITERION_NAMES[index - 1]
}

/// Run one criterion by its 1-based index.
pub fn run_criterion(index: usize) -> CriterionOutcome {
    match index {
        1 => flow_classification(),
        2 => fiber_conservation(),
        3 => free_gaussian_closed_form(),
        4 => unitarity(),
        5 => causal_propagator_residual(),
        6 => asymptotic_extraction(),
        7 => poisson_consistency(),
        8 => scattering_sanity(),
        9 => pairing_identity(),
        10 => generator_commutation(),
        11 => threshold_law(),
        12 => data_norm_stability(),
        13 => determinism(None),
        _ => panic!("criterion index must be 1..=13"),
    }
}

/// Run the full suite.  The determinism criterion reuses the first pass as
/// its baseline and recomputes criteria 1-12 once more from scratch.
pub fn run_all() -> AcceptanceReport {
    let mut outcomes: Vec<CriterionOutcome> = (1..=12).map(run_criterion).collect();
    let det = determinism(Some(&outcomes));
    outcomes.push(det);
    let all_passed = outcomes.iter().all(|o| o.passed);
    AcceptanceReport { outcomes, all_passed }
}

fn default_grid() -> Grid {
    Grid::new(1, 1024, 60.0, -30.0, 30.0, 1200).expect("valid default grid")
}

fn outcome(
    index: usize,
    body: impl FnOnce() -> Result<(BTreeMap<String, f64>, bool, String), String>,
) -> CriterionOutcome {
    match body() {
        Ok((metrics, passed, notes)) => CriterionOutcome {
            index,
            name: criterion_name(index).to_string(),
            passed,
            metrics,
            notes,
        },
        Err(e) => CriterionOutcome {
            index,
            name: criterion_name(index).to_string(),
            passed: false,
            metrics: BTreeMap::new(),
            notes: format!("criterion aborted: {e}"),
        },
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_characteristic_seed(rng: &mut ChaCha8Rng) -> PhasePoint {
    let r = 0.3 + 1.7 * rng.gen::<f64>();
    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let zeta = vec![sign * r];
    let z = vec![rng.gen_range(-3.0..3.0)];
    let t = rng.gen_range(-2.0..2.0);
    let tau = -(r * r);
    PhasePoint::new(z, t, zeta, tau)
}

/// 1. Forward traces land on the outgoing radial set, backward traces on
/// the incoming one, for 200 random characteristic seeds.
fn flow_classification() -> CriterionOutcome {
    outcome(1, || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let opts = TraceOpts { rho_stop: 1.0e-8, ..TraceOpts::default() };
        let mut max_fwd = 0.0_f64;
        let mut max_bwd = 0.0_f64;
        let mut max_p = 0.0_f64;
        let mut misclassified = 0u32;
        for _ in 0..200 {
            let seed = random_characteristic_seed(&mut rng);
            let fwd = trace_bicharacteristic(&seed, Direction::Forward, &opts).map_err(s)?;
            if fwd.endpoint_class != EndpointClass::PlusRadial {
                misclassified += 1;
            }
            max_fwd = max_fwd.max(fwd.final_radial_distance);
            max_p = max_p.max(fwd.max_char_violation);
            let bwd = trace_bicharacteristic(&seed, Direction::Backward, &opts).map_err(s)?;
            if bwd.endpoint_class != EndpointClass::MinusRadial {
                misclassified += 1;
            }
            max_bwd = max_bwd.max(bwd.final_radial_distance);
            max_p = max_p.max(bwd.max_char_violation);
        }
        let passed =
            misclassified == 0 && max_fwd < 1.0e-4 && max_bwd < 1.0e-4 && max_p < 1.0e-8;
        let mut m = BTreeMap::new();
        m.insert("max_final_distance_forward".into(), max_fwd);
        m.insert("max_final_distance_backward".into(), max_bwd);
        m.insert("max_char_violation".into(), max_p);
        m.insert("misclassified".into(), misclassified as f64);
        Ok((
            m,
            passed,
            "200 random characteristic seeds traced to both time infinities".into(),
        ))
    })
}

/// 2. The fiber variables are conserved exactly along every trace.
fn fiber_conservation() -> CriterionOutcome {
    outcome(2, || {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let opts = TraceOpts::default();
        let mut max_drift = 0.0_f64;
        let count = 50;
        for _ in 0..count {
            let seed = random_characteristic_seed(&mut rng);
            for direction in [Direction::Forward, Direction::Backward] {
                let traj = trace_bicharacteristic(&seed, direction, &opts).map_err(s)?;
                let first = traj.seed().clone();
                for (_, p) in &traj.samples {
                    for (a, b) in p.zeta.iter().zip(first.zeta.iter()) {
                        max_drift = max_drift.max((a - b).abs());
                    }
                    max_drift = max_drift.max((p.tau - first.tau).abs());
                }
            }
        }
        let passed = max_drift < 1.0e-10;
        let mut m = BTreeMap::new();
        m.insert("max_fiber_drift".into(), max_drift);
        m.insert("trajectories".into(), (2 * count) as f64);
        Ok((m, passed, "momentum variables frozen along the flat-case flow".into()))
    })
}

fn gaussian_closed_form(z: f64, t: f64) -> C64 {
    let c = C64::new(1.0, 2.0 * t);
    let pref = (C64::new(2.0 * PI, 0.0) * c).sqrt();
    (-(z * z) / (2.0 * c)).exp() / pref
}

/// 3. The split-step propagator reproduces the dispersive Gaussian closed
/// form to near machine precision and converges at second order once a
/// potential is switched on.
fn free_gaussian_closed_form() -> CriterionOutcome {
    outcome(3, || {
        // Closed form on a short slab containing t = 0.
        let grid = Grid::new(1, 1024, 60.0, -2.0, 2.0, 320).map_err(s)?;
        let init: Vec<C64> =
            (0..grid.spatial_size()).map(|j| gaussian_closed_form(grid.z_coord(j), grid.t0)).collect();
        let u = evolve(&init, &grid, &PotentialSpec::zero());
        let mut sup = 0.0_f64;
        for k in 0..grid.num_slices() {
            let t = grid.time_at(k);
            for j in 0..grid.spatial_size() {
                sup = sup.max((u.values[(k, j)] - gaussian_closed_form(grid.z_coord(j), t)).norm());
            }
        }
        // Second-order slope against a fine reference with a potential on.
        let pot = PotentialSpec::compact_bump(5.0, vec![0.0], 0.5, 2.0, 0.6);
        let run = |steps: usize| -> Result<Vec<C64>, String> {
            let g = Grid::new(1, 256, 20.0, 0.0, 1.0, steps).map_err(s)?;
            let start = synth::gaussian_slice(&g, 1.0, &[0.0]);
            let field = evolve(&start, &g, &pot);
            Ok(field.values.row(g.num_slices() - 1).to_vec())
        };
        let reference = run(3200)?;
        let mut pts = Vec::new();
        for steps in [100usize, 200, 400] {
            let finals = run(steps)?;
            let err = finals
                .iter()
                .zip(reference.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0_f64, f64::max);
            pts.push(((1.0 / steps as f64).ln(), err.ln()));
        }
        let slope = lsq_slope(&pts);
        let passed = sup < 1.0e-8 && (slope - 2.0).abs() <= 0.1;
        let mut m = BTreeMap::new();
        m.insert("closed_form_sup_error".into(), sup);
        m.insert("strang_slope".into(), slope);
        Ok((
            m,
            passed,
            "closed-form dispersive Gaussian matched; second-order step refinement".into(),
        ))
    })
}

/// 4. The split step preserves the L2 norm for a real potential.
fn unitarity() -> CriterionOutcome {
    outcome(4, || {
        let grid = default_grid();
        let pot = PotentialSpec::compact_bump(5.0, vec![0.0], 0.0, 3.0, 4.0);
        let init = synth::gaussian_slice(&grid, 1.0, &[0.0]);
        let u = evolve(&init, &grid, &pot);
        let norms: Vec<f64> = (0..grid.num_slices()).map(|k| u.l2_slice(k)).collect();
        let mut step_drift = 0.0_f64;
        for w in norms.windows(2) {
            step_drift = step_drift.max((w[1] - w[0]).abs() / w[0]);
        }
        let window_drift = (norms[norms.len() - 1] - norms[0]).abs() / norms[0];
        let passed = step_drift < 1.0e-12 && window_drift < 1.0e-10;
        let mut m = BTreeMap::new();
        m.insert("max_step_drift".into(), step_drift);
        m.insert("window_drift".into(), window_drift);
        Ok((m, passed, "amplitude-5 real bump over the full default window".into()))
    })
}

/// 5. The causal solves invert the operator, stay quiet before the source
/// turns on, and refine at second order in the step.
fn causal_propagator_residual() -> CriterionOutcome {
    outcome(5, || {
        let grid = default_grid();
        let pot = PotentialSpec::zero();
        let mut max_res = 0.0_f64;
        let mut max_leak = 0.0_f64;
        // The residual is verified with the finite-difference reading of
        // D_t, whose per-mode error grows like dt^4 zeta^10 until it
        // saturates near dt zeta^2 ~ 1 and then contributes zeta^2 times
        // the mode's own mass.  The sources are therefore kept wide enough
        // (sigma_z = 16) that their subexponential bump tails die before
        // the stencil stops resolving the kinetic oscillation; the solver
        // itself propagates every lattice mode with the exact phase.
        for i in 0..5u64 {
            let v = synth::random_source_field(&grid, 500 + i, 16.0, 4.0, 0.0);
            let fwd = solve_retarded(&v, &pot).map_err(s)?;
            let bwd = solve_advanced(&v, &pot).map_err(s)?;
            let res_f = apply_p(&fwd, &pot).sub(&v).spacetime_l2() / v.spacetime_l2();
            let res_b = apply_p(&bwd, &pot).sub(&v).spacetime_l2() / v.spacetime_l2();
            max_res = max_res.max(res_f).max(res_b);
            // Quiet sides: rows strictly before the first active source row
            // for the forward solve, strictly after the last one (with one
            // row of stepping slack) for the backward solve.
            let vmax = v.max_abs();
            let first_active = (0..grid.num_slices())
                .find(|&k| v.l2_slice(k) > 1.0e-14 * vmax)
                .unwrap_or(0);
            let last_active = (0..grid.num_slices())
                .rev()
                .find(|&k| v.l2_slice(k) > 1.0e-14 * vmax)
                .unwrap_or(grid.num_slices() - 1);
            for k in 0..first_active {
                max_leak = max_leak.max(fwd.l2_slice(k));
            }
            for k in (last_active + 2)..grid.num_slices() {
                max_leak = max_leak.max(bwd.l2_slice(k));
            }
        }
        // Step refinement with a fixed source, on levels fine enough that
        // the quadrature's second-order term dominates its higher-order
        // corrections (the coarser default level is still pre-asymptotic).
        let mut pts = Vec::new();
        for steps in [2400usize, 4800, 9600] {
            let g = Grid::new(1, 1024, 60.0, -30.0, 30.0, steps).map_err(s)?;
            let v = synth::random_source_field(&g, 500, 16.0, 4.0, 0.0);
            let u = solve_retarded(&v, &pot).map_err(s)?;
            let res = apply_p(&u, &pot).sub(&v).spacetime_l2() / v.spacetime_l2();
            pts.push((g.dt().ln(), res.ln()));
        }
        let slope = lsq_slope(&pts);
        let passed = max_res < 1.0e-3 && max_leak < 1.0e-8 && (slope - 2.0).abs() <= 0.2;
        let mut m = BTreeMap::new();
        m.insert("max_residual".into(), max_res);
        m.insert("max_leakage".into(), max_leak);
        m.insert("refinement_slope".into(), slope);
        Ok((m, passed, "five random smooth compact sources; both causal solves".into()))
    })
}

/// 6. Extracting outgoing data from the free solution recovers the datum.
///
/// Runs on the long wide slab: the limit fit drops curvature terms whose
/// intercept leakage scales like `sup|f''''|/(21 T²)`, so the tail must sit
/// deep in the asymptotic regime before 10⁻³ is reachable at all.  The
/// same round trip on the compact default slab is reported alongside as
/// `short_slab_floor` — it bottoms out near 2·10⁻² for every data width,
/// which is a property of the slab, not of the extraction code.
fn asymptotic_extraction() -> CriterionOutcome {
    outcome(6, || {
        let grid = asymptotic_slab();
        let dg = DataGrid::default_for(&grid);
        let f = synth::gaussian_data(dg, 1.0, &[0.1]);
        let u = free_poisson(&f, &grid).map_err(s)?;
        let times = default_tail_times(&grid, RadialSign::Plus).map_err(s)?;
        let rep = extract_data(&u, RadialSign::Plus, &times).map_err(s)?;
        let sup = rep.limit.sub(&f).sup_norm();
        let cg = default_grid();
        let cdg = DataGrid::default_for(&cg);
        let cf = synth::gaussian_data(cdg, 0.25, &[0.1]);
        let cu = free_poisson(&cf, &cg).map_err(s)?;
        let ct = default_tail_times(&cg, RadialSign::Plus).map_err(s)?;
        let crep = extract_data(&cu, RadialSign::Plus, &ct).map_err(s)?;
        let floor = crep.limit.sub(&cf).sup_norm();
        let passed = sup < 1.0e-3 && rep.fitted_rate > 0.0;
        let mut m = BTreeMap::new();
        m.insert("sup_error".into(), sup);
        m.insert("fitted_rate".into(), rep.fitted_rate);
        m.insert("short_slab_floor".into(), floor);
        Ok((
            m,
            passed,
            "free round trip on the long slab; compact-slab fit floor disclosed".into(),
        ))
    })
}

/// 7. Both perturbed Poisson operators reproduce their prescribed datum on
/// the matching side.
fn poisson_consistency() -> CriterionOutcome {
    outcome(7, || {
        let grid = asymptotic_slab();
        let dg = DataGrid::default_for(&grid);
        let pot = PotentialSpec::compact_bump(1.0, vec![0.0], 0.0, 3.0, 2.0);
        let mut worst_minus = 0.0_f64;
        let mut worst_plus = 0.0_f64;
        for i in 0..10u64 {
            let f = synth::smooth_random_data(dg, 700 + i);
            for sign in [RadialSign::Minus, RadialSign::Plus] {
                let u = crate::scattering::perturbed_poisson(&f, sign, &pot, &grid).map_err(s)?;
                let times = default_tail_times(&grid, sign).map_err(s)?;
                let rep = extract_data(&u, sign, &times).map_err(s)?;
                let sup = rep.limit.sub(&f).sup_norm();
                match sign {
                    RadialSign::Minus => worst_minus = worst_minus.max(sup),
                    RadialSign::Plus => worst_plus = worst_plus.max(sup),
                }
            }
        }
        let passed = worst_minus < 1.0e-3 && worst_plus < 1.0e-3;
        let mut m = BTreeMap::new();
        m.insert("max_sup_error_minus".into(), worst_minus);
        m.insert("max_sup_error_plus".into(), worst_plus);
        Ok((
            m,
            passed,
            "ten seeded smooth data, real bump potential, long slab".into(),
        ))
    })
}

/// 8. The scattering matrix is the identity without a potential, is
/// unitary for a real one, and is first order in a weak one.
fn scattering_sanity() -> CriterionOutcome {
    outcome(8, || {
        let grid = asymptotic_slab();
        let dg = DataGrid::default_for(&grid);
        let f = synth::gaussian_data(dg, 1.0, &[0.1]);
        let fnorm = f.l2_norm();
        // Free case.
        let s_free = scattering_matrix(&f, &PotentialSpec::zero(), &grid).map_err(s)?;
        let free_err = s_free.sub(&f).l2_norm() / fnorm;
        // Norm preservation under a real potential.
        let pot = PotentialSpec::compact_bump(0.5, vec![0.0], 0.0, 3.0, 2.0);
        let s_v = scattering_matrix(&f, &pot, &grid).map_err(s)?;
        let unit_defect = (s_v.l2_norm() / fnorm - 1.0).abs();
        // First Born order, measured against the extracted free baseline:
        // extraction is linear in the field, so the slab-level fit bias
        // cancels exactly in the difference and the amplitude scaling of
        // the scattering correction is isolated.
        let mut pts = Vec::new();
        for amp in [0.4, 0.2, 0.1] {
            let p = PotentialSpec::compact_bump(amp, vec![0.0], 0.0, 3.0, 2.0);
            let sf = scattering_matrix(&f, &p, &grid).map_err(s)?;
            let d = sf.sub(&s_free).l2_norm();
            pts.push((amp.ln(), d.ln()));
        }
        let born_slope = lsq_slope(&pts);
        let passed =
            free_err < 1.0e-3 && unit_defect < 1.0e-3 && (born_slope - 1.0).abs() <= 0.1;
        let mut m = BTreeMap::new();
        m.insert("free_identity_rel_error".into(), free_err);
        m.insert("unitarity_defect".into(), unit_defect);
        m.insert("born_slope".into(), born_slope);
        Ok((m, passed, "identity, norm preservation, and weak-potential order".into()))
    })
}

/// Add a narrow data window into a wider one sharing the same spacing.
fn embed_add(wide: &mut DataFunction, narrow: &DataFunction) {
    let off = (wide.grid.modes - narrow.grid.modes) as usize;
    let len = wide.grid.len_per_axis();
    for flat in 0..narrow.grid.total_points() {
        let idx = narrow.grid.unflatten(flat);
        let mut wide_flat = 0usize;
        for i in idx {
            wide_flat = wide_flat * len + (i + off);
        }
        wide.values[wide_flat] += narrow.values[flat];
    }
}

fn pairing_worst(points: usize, steps: usize) -> Result<f64, String> {
    let grid = Grid::new(1, points, 60.0, -30.0, 30.0, steps).map_err(s)?;
    let dg = DataGrid::default_for(&grid);
    // The pairing data live on a window wide enough to hold essentially the
    // whole spectrum of the compact sources, so the boundary side misses no
    // mass; it sits on the shared frequency lattice of both resolutions.
    let wide = DataGrid::new(1, grid.dzeta(), 256);
    let last = grid.num_slices() - 1;
    let mut worst = 0.0_f64;
    for i in 0..5u64 {
        // Three pairs ride on the free operator, two on a real compact
        // bump; source and potential are both gone after |t| = 3, so every
        // causal solution is exactly free at the final slice and its
        // outgoing datum is read off that slice without any fit error.
        let pot = if i < 3 {
            PotentialSpec::zero()
        } else {
            PotentialSpec::compact_bump(0.5, vec![0.4], 0.0, 3.0, 3.0)
        };
        let w1 = synth::random_source_field(&grid, 910 + i, 2.0, 2.0, 0.0);
        let w2 = synth::random_source_field(&grid, 960 + i, 2.0, 2.0, 0.0);
        let mut u1 = solve_retarded(&w1, &pot).map_err(s)?;
        let mut u2 = solve_retarded(&w2, &pot).map_err(s)?;
        let mut f1_plus = slice_datum(&u1, last, wide).map_err(s)?;
        let mut f2_plus = slice_datum(&u2, last, wide).map_err(s)?;
        // A causal solution vanishes identically before its source, so the
        // incoming data start from zero.
        let mut f1_minus = DataFunction::zeros(wide);
        let mut f2_minus = DataFunction::zeros(wide);
        if pot.is_zero() {
            // Superpose an exact free wave; it carries its datum on both
            // sides unchanged.  (With a potential the free wave would no
            // longer solve P u = w, so those pairs stay purely causal.)
            let g1 = synth::smooth_random_data(dg, 900 + i);
            let g2 = synth::smooth_random_data(dg, 950 + i);
            u1.values += &free_poisson(&g1, &grid).map_err(s)?.values;
            u2.values += &free_poisson(&g2, &grid).map_err(s)?.values;
            embed_add(&mut f1_plus, &g1);
            embed_add(&mut f1_minus, &g1);
            embed_add(&mut f2_plus, &g2);
            embed_add(&mut f2_minus, &g2);
        }
        let data = PairingData { f1_plus, f1_minus, f2_plus, f2_minus };
        let (lhs, rhs) = pairing_check(&u1, &u2, Some(&w1), Some(&w2), &pot, &data);
        let disc = (lhs - rhs).norm() / rhs.norm().max(1.0e-300);
        worst = worst.max(disc);
    }
    Ok(worst)
}

/// 9. The boundary pairing balances the interior commutator, and the
/// discrepancy at least halves under one grid refinement.
fn pairing_identity() -> CriterionOutcome {
    outcome(9, || {
        let base = pairing_worst(1024, 1200)?;
        let refined = pairing_worst(2048, 2400)?;
        let ratio = refined / base.max(1.0e-300);
        let passed = base < 1.0e-2 && ratio <= 0.5;
        let mut m = BTreeMap::new();
        m.insert("max_discrepancy_base".into(), base);
        m.insert("max_discrepancy_refined".into(), refined);
        m.insert("refinement_ratio".into(), ratio);
        Ok((
            m,
            passed,
            "five solution pairs, with and without potential, data read off free slices".into(),
        ))
    })
}

/// 10. The spacetime generators intertwine with their data counterparts
/// through the free solution operator.
fn generator_commutation() -> CriterionOutcome {
    outcome(10, || {
        // Translations and half boosts in one dimension on a short slab.
        let grid1 = Grid::new(1, 1024, 60.0, -5.0, 5.0, 200).map_err(s)?;
        let dg1 = DataGrid::new(1, grid1.dzeta(), 14);
        let f1 = synth::gaussian_data(dg1, 0.12, &[0.0]);
        let r_trans =
            commutation_residual(GeneratorId::Translation(0), &f1, &grid1).map_err(s)?;
        let r_gal =
            commutation_residual(GeneratorId::GalileanHalf(0), &f1, &grid1).map_err(s)?;
        // Rotations need two dimensions; an off-center datum keeps the
        // right-hand side away from zero.
        let grid2 = Grid::new(2, 256, 40.0, -2.0, 2.0, 40).map_err(s)?;
        let dg2 = DataGrid::new(2, grid2.dzeta(), 20);
        let f2 = synth::gaussian_data(dg2, 0.2, &[0.15, 0.0]);
        let r_rot =
            commutation_residual(GeneratorId::Rotation(0, 1), &f2, &grid2).map_err(s)?;
        let passed = r_trans < 1.0e-6 && r_gal < 1.0e-6 && r_rot < 1.0e-6;
        let mut m = BTreeMap::new();
        m.insert("residual_translation".into(), r_trans);
        m.insert("residual_galilean_half".into(), r_gal);
        m.insert("residual_rotation".into(), r_rot);
        Ok((m, passed, "relative intertwining residuals of all three relations".into()))
    })
}

/// 11. Weighted slab masses grow at the rate set by the threshold weight.
fn threshold_law() -> CriterionOutcome {
    outcome(11, || {
        let grid = Grid::new(1, 8192, 320.0, 0.0, 162.0, 648).map_err(s)?;
        let dg = DataGrid::new(1, grid.dzeta(), 122);
        let f = synth::gaussian_data(dg, 0.3, &[0.0]);
        let u = free_poisson(&f, &grid).map_err(s)?;
        let t_list: Vec<f64> = (5..=16).map(|i| (i * 10) as f64).collect();
        let mut m = BTreeMap::new();
        let mut max_dev = 0.0_f64;
        for l in [-1.0, -0.75, -0.25, 0.0] {
            let scan = threshold_scan(&u, l, &t_list);
            let expected = (2.0 * l + 1.0).max(0.0);
            let dev = if scan.degenerate {
                f64::INFINITY
            } else {
                (scan.slope - expected).abs()
            };
            max_dev = max_dev.max(dev);
            m.insert(format!("slope_l={l:+.2}"), scan.slope);
        }
        m.insert("max_slope_deviation".into(), max_dev);
        let passed = max_dev <= 0.1;
        Ok((
            m,
            passed,
            "growth exponents of weighted masses on a long slab, four weights".into(),
        ))
    })
}

/// 12. Data-space regularity norms of scattered data stay finite and
/// stable under one grid refinement.
fn data_norm_stability() -> CriterionOutcome {
    outcome(12, || {
        let base = asymptotic_slab();
        let refined = Grid::new(1, 4096, 220.0, -22.5, 22.5, 1800).map_err(s)?;
        let dg = DataGrid::default_for(&base);
        let pot = PotentialSpec::compact_bump(0.5, vec![0.0], 0.0, 3.0, 2.0);
        let mut max_shift = 0.0_f64;
        let mut max_ratio = [0.0_f64; 3];
        let mut finite = true;
        for i in 0..10u64 {
            let f = synth::smooth_random_data(dg, 1200 + i);
            let sb = scattering_matrix(&f, &pot, &base).map_err(s)?;
            let sr = scattering_matrix(&f, &pot, &refined).map_err(s)?;
            for k in 0..=2usize {
                let nf = data_norm_wk(&f, k).map_err(s)?;
                let rb = data_norm_wk(&sb, k).map_err(s)? / nf;
                let rr = data_norm_wk(&sr, k).map_err(s)? / nf;
                if !(rb.is_finite() && rr.is_finite() && rb > 0.0) {
                    finite = false;
                    continue;
                }
                max_ratio[k] = max_ratio[k].max(rb);
                max_shift = max_shift.max((rr / rb - 1.0).abs());
            }
        }
        let passed = finite && max_shift < 0.10;
        let mut m = BTreeMap::new();
        m.insert("max_ratio_shift".into(), max_shift);
        m.insert("max_ratio_k0".into(), max_ratio[0]);
        m.insert("max_ratio_k1".into(), max_ratio[1]);
        m.insert("max_ratio_k2".into(), max_ratio[2]);
        Ok((
            m,
            passed,
            "scattered-to-incoming norm ratios for orders 0..2 on two grids".into(),
        ))
    })
}

/// 13. Rerunning criteria 1-12 reproduces every metric byte for byte.
fn determinism(baseline: Option<&[CriterionOutcome]>) -> CriterionOutcome {
    let first: Vec<CriterionOutcome> = match baseline {
        Some(b) => b.to_vec(),
        None => (1..=12).map(run_criterion).collect(),
    };
    let second: Vec<CriterionOutcome> = (1..=12).map(run_criterion).collect();
    let mut mismatches = 0u32;
    for (a, b) in first.iter().zip(second.iter()) {
        let sa = serde_json::to_string(&a.metrics).expect("metrics serialize");
        let sb = serde_json::to_string(&b.metrics).expect("metrics serialize");
        if sa != sb {
            mismatches += 1;
        }
    }
    let mut m = BTreeMap::new();
    m.insert("criteria_rerun".into(), 12.0);
    m.insert("metric_mismatches".into(), mismatches as f64);
    CriterionOutcome {
        index: 13,
        name: criterion_name(13).to_string(),
        passed: mismatches == 0,
        metrics: m,
        notes: "criteria 1-12 recomputed from scratch; serialized metrics compared".into(),
    }
}
