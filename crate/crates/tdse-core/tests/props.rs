//! Property-based tests: structural identities that must hold for *every*
//! input, not just the fixed seeds of the acceptance suite.  Exact algebraic
//! identities (homogeneity, linearity, swap antisymmetry, the slice/Poisson
//! round trip) are checked near rounding precision; dynamical properties
//! (unitarity, endpoint classification) at loose tolerances on small grids.

use proptest::prelude::*;
use tdse_core::evolution::evolve;
use tdse_core::flow::{trace_bicharacteristic, Direction, TraceOpts};
use tdse_core::grid::{DataGrid, Grid, SpacetimeField, C64};
use tdse_core::phase_space::{
    fiber_weight, radial_distance, rho_base, rho_fib, PhasePoint, RadialSign,
};
use tdse_core::potential::PotentialSpec;
use tdse_core::regularity::data_norm_wk;
use tdse_core::scattering::{free_poisson, pairing_check, slice_datum, PairingData};
use tdse_core::synth::{random_source_field, smooth_random_data};

fn small_grid() -> Grid {
    Grid::new(1, 64, 12.0, -0.8, 0.8, 16).unwrap()
}

fn scaled(u: &SpacetimeField, c: C64) -> SpacetimeField {
    SpacetimeField { grid: u.grid, values: u.values.mapv(|v| c * v) }
}

fn field_diff(a: &SpacetimeField, b: &SpacetimeField) -> f64 {
    a.values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0_f64, f64::max)
}

fn field_max(a: &SpacetimeField) -> f64 {
    a.values.iter().map(|v| v.norm()).fold(0.0_f64, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The fiber weight is parabolically homogeneous of degree one:
    /// scaling `(zeta, tau) -> (l*zeta, l^2*tau)` scales the weight by `l`.
    #[test]
    fn fiber_weight_parabolic_homogeneity(
        zeta in prop::collection::vec(-5.0_f64..5.0, 1..=3),
        tau in -25.0_f64..25.0,
        lambda in 0.1_f64..10.0,
    ) {
        let w = fiber_weight(&zeta, tau);
        prop_assume!(w > 1.0e-6);
        let zs: Vec<f64> = zeta.iter().map(|z| lambda * z).collect();
        let ws = fiber_weight(&zs, lambda * lambda * tau);
        let rel = (ws - lambda * w).abs() / (lambda * w);
        prop_assert!(rel < 1.0e-9, "homogeneity violated: rel = {rel}");
    }

    /// Both weight functions take values in (0, 1] and equal 1 only at the
    /// origin of their arguments.
    #[test]
    fn weights_bounded(
        z in prop::collection::vec(-50.0_f64..50.0, 1..=3),
        t in -50.0_f64..50.0,
        tau in -100.0_f64..100.0,
    ) {
        let rb = rho_base(&z, t);
        let rf = rho_fib(&z, tau);
        prop_assert!(rb > 0.0 && rb <= 1.0, "rho_base out of range: {rb}");
        prop_assert!(rf > 0.0 && rf <= 1.0, "rho_fib out of range: {rf}");
        prop_assert!((rho_base(&vec![0.0; z.len()], 0.0) - 1.0).abs() < 1.0e-15);
    }

    /// Radial distances are finite, non-negative, and respect the
    /// large-argument saturation cap.
    #[test]
    fn radial_distance_bounds(
        z in prop::collection::vec(-5.0_f64..5.0, 1..=2),
        t in -5.0_f64..5.0,
        zeta in prop::collection::vec(-3.0_f64..3.0, 1..=2),
        tau in -9.0_f64..9.0,
    ) {
        prop_assume!(z.len() == zeta.len());
        let fib: f64 = zeta.iter().map(|v| v * v).sum::<f64>() + tau * tau;
        prop_assume!(fib > 1.0e-4);
        let p = PhasePoint::new(z, t, zeta, tau);
        for sign in [RadialSign::Plus, RadialSign::Minus] {
            let d = radial_distance(&p, sign).expect("non-degenerate point");
            prop_assert!(d.is_finite() && (0.0..=1.0e3 + 1.0e-9).contains(&d),
                "distance out of bounds: {d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The time-stepper is linear: marching a complex combination of two
    /// initial slices equals the combination of the marched fields, in the
    /// presence of a potential.
    #[test]
    fn evolution_is_linear(
        s1 in 0_u64..1_000_000,
        s2 in 0_u64..1_000_000,
        re in -2.0_f64..2.0,
        im in -2.0_f64..2.0,
        amp in -1.0_f64..1.0,
    ) {
        let grid = small_grid();
        let dg = DataGrid::default_for(&grid);
        let a = C64::new(re, im);
        let f1 = smooth_random_data(dg, s1);
        let f2 = smooth_random_data(dg, s2.wrapping_add(7_777));
        let u1 = free_poisson(&f1, &grid).unwrap();
        let u2 = free_poisson(&f2, &grid).unwrap();
        let init1: Vec<C64> = u1.values.row(0).to_vec();
        let init2: Vec<C64> = u2.values.row(0).to_vec();
        let combo: Vec<C64> =
            init1.iter().zip(init2.iter()).map(|(x, y)| a * x + y).collect();
        let pot = PotentialSpec::compact_bump(amp, vec![0.2], 0.0, 2.0, 0.5);
        let ev1 = evolve(&init1, &grid, &pot);
        let ev2 = evolve(&init2, &grid, &pot);
        let evc = evolve(&combo, &grid, &pot);
        let expected = {
            let mut e = scaled(&ev1, a);
            e.values += &ev2.values;
            e
        };
        let scale = field_max(&expected).max(1.0e-30);
        prop_assert!(field_diff(&evc, &expected) / scale < 1.0e-12,
            "linearity violated");
    }

    /// Each split step is a composition of unitary maps, so the slice norm
    /// is conserved to rounding for any real potential.
    #[test]
    fn evolution_is_unitary(
        seed in 0_u64..1_000_000,
        amp in -1.5_f64..1.5,
    ) {
        let grid = small_grid();
        let dg = DataGrid::default_for(&grid);
        let f = smooth_random_data(dg, seed);
        let u0 = free_poisson(&f, &grid).unwrap();
        let init: Vec<C64> = u0.values.row(0).to_vec();
        let pot = PotentialSpec::compact_bump(amp, vec![-0.3], 0.0, 3.0, 0.6);
        let u = evolve(&init, &grid, &pot);
        let n0 = u.l2_slice(0);
        prop_assume!(n0 > 1.0e-12);
        for k in 0..grid.num_slices() {
            let rel = (u.l2_slice(k) - n0).abs() / n0;
            prop_assert!(rel < 1.0e-11, "norm drift {rel} at slice {k}");
        }
    }

    /// Sobolev-tower norms are monotone in the order and absolutely
    /// homogeneous in the datum.
    #[test]
    fn data_norms_monotone_and_homogeneous(
        seed in 0_u64..1_000_000,
        re in -3.0_f64..3.0,
        im in -3.0_f64..3.0,
    ) {
        let dg = DataGrid::new(1, 0.35, 8);
        let f = smooth_random_data(dg, seed);
        prop_assume!(f.l2_norm() > 1.0e-8);
        let norms: Vec<f64> =
            (0..=3).map(|k| data_norm_wk(&f, k).unwrap()).collect();
        for k in 1..norms.len() {
            prop_assert!(norms[k] >= norms[k - 1] * (1.0 - 1.0e-12),
                "W^k norms not monotone: {norms:?}");
        }
        let c = C64::new(re, im);
        prop_assume!(c.norm() > 1.0e-3);
        let mut g = f.clone();
        for v in &mut g.values {
            *v *= c;
        }
        for k in 0..=3 {
            let lhs = data_norm_wk(&g, k).unwrap();
            let rhs = c.norm() * norms[k];
            prop_assert!((lhs - rhs).abs() / rhs < 1.0e-10,
                "homogeneity violated at order {k}");
        }
    }

    /// Reading a datum off any slice of a free Poisson field returns the
    /// datum it was built from, exactly (the free flow is diagonal on the
    /// frequency lattice).
    #[test]
    fn slice_readout_inverts_free_poisson(
        seed in 0_u64..1_000_000,
        k in 0_usize..=16,
    ) {
        let grid = small_grid();
        let dg = DataGrid::default_for(&grid);
        let f = smooth_random_data(dg, seed);
        prop_assume!(f.l2_norm() > 1.0e-8);
        let u = free_poisson(&f, &grid).unwrap();
        let g = slice_datum(&u, k, dg).unwrap();
        let err = f
            .values
            .iter()
            .zip(g.values.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0_f64, f64::max);
        let peak = f.values.iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
        prop_assert!(err / peak < 1.0e-11, "round trip error {}", err / peak);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Swapping the two solutions conjugates and negates both sides of the
    /// pairing identity — pure sesquilinear algebra, so it holds for
    /// arbitrary fields and data, not only genuine solutions.
    #[test]
    fn pairing_swap_antisymmetry(
        s1 in 0_u64..1_000_000,
        s2 in 0_u64..1_000_000,
        amp in -1.0_f64..1.0,
    ) {
        let grid = Grid::new(1, 64, 12.0, -1.2, 1.2, 24).unwrap();
        let dg = DataGrid::default_for(&grid);
        let u1 = random_source_field(&grid, s1, 2.0, 0.5, 0.0);
        let u2 = random_source_field(&grid, s2.wrapping_add(31), 2.0, 0.5, 0.0);
        let pot = PotentialSpec::compact_bump(amp, vec![0.1], 0.0, 2.5, 0.7);
        let data = PairingData {
            f1_plus: smooth_random_data(dg, s1 ^ 0xa1),
            f1_minus: smooth_random_data(dg, s1 ^ 0xa2),
            f2_plus: smooth_random_data(dg, s2 ^ 0xb1),
            f2_minus: smooth_random_data(dg, s2 ^ 0xb2),
        };
        let swapped = PairingData {
            f1_plus: data.f2_plus.clone(),
            f1_minus: data.f2_minus.clone(),
            f2_plus: data.f1_plus.clone(),
            f2_minus: data.f1_minus.clone(),
        };
        let (lhs, rhs) = pairing_check(&u1, &u2, None, None, &pot, &data);
        let (lhs_s, rhs_s) = pairing_check(&u2, &u1, None, None, &pot, &swapped);
        let tol_l = 1.0e-12 * lhs.norm().max(1.0);
        let tol_r = 1.0e-12 * rhs.norm().max(1.0);
        prop_assert!((lhs_s + lhs.conj()).norm() < tol_l, "lhs not antisymmetric");
        prop_assert!((rhs_s + rhs.conj()).norm() < tol_r, "rhs not antisymmetric");
    }

    /// Endpoint classification is invariant under the parabolic scaling
    /// `(z, t, zeta, tau) -> (l z, l^2 t, zeta / l, tau / l^2)`, which maps
    /// bicharacteristics to bicharacteristics.
    #[test]
    fn classification_parabolic_invariance(
        z in -2.0_f64..2.0,
        t in -1.0_f64..1.0,
        dir in prop::bool::ANY,
        mag in 0.6_f64..2.0,
        lambda in 0.5_f64..2.0,
        forward in prop::bool::ANY,
    ) {
        let zeta = if dir { mag } else { -mag };
        let tau = -zeta * zeta;
        let seed = PhasePoint::new(vec![z], t, vec![zeta], tau);
        let seed_s = PhasePoint::new(
            vec![lambda * z],
            lambda * lambda * t,
            vec![zeta / lambda],
            tau / (lambda * lambda),
        );
        let opts = TraceOpts { rho_stop: 1.0e-8, ..TraceOpts::default() };
        let direction = if forward { Direction::Forward } else { Direction::Backward };
        let traj = trace_bicharacteristic(&seed, direction, &opts).unwrap();
        let traj_s = trace_bicharacteristic(&seed_s, direction, &opts).unwrap();
        prop_assert_eq!(traj.endpoint_class, traj_s.endpoint_class,
            "classification changed under parabolic scaling");
    }
}
