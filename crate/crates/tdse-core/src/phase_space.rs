//! Parabolic phase-space geometry.
//!
//! Points live in `T^* R^{n+1}` with coordinates `(z, t, zeta, tau)`; the
//! fiber scales parabolically, `(zeta, tau) -> (c zeta, c^2 tau)`, so the
//! natural fiber radius is `R = (|zeta|^4 + tau^2)^{1/4}` rather than the
//! Euclidean one.  Base and fiber are compactified separately through the
//! boundary defining functions `rho_base` and `rho_fib`; polar caps cover the
//! regions `|t| >~ |z|` and an equatorial belt covers `|z| >~ |t|`.
//!
//! The two radial sets of the free symbol `p = tau + |zeta|^2` sit over the
//! base boundary: the outgoing one over `t = +infinity` at
//! `zeta = z/(2t), tau = -|zeta|^2`, and the incoming one at its mirror image
//! over `t = -infinity`.  [`radial_distance`] measures chart distance to
//! either set; it vanishes exactly on the set and is what the flow module
//! uses to classify trajectory endpoints.

use thiserror::Error;

/// Error cases for chart queries.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PhaseSpaceError {
    /// The requested chart degenerates at this point (interior origin, or a
    /// fiber direction orthogonal to the chart axis).
    #[error("compactification chart undefined at this point: {0}")]
    ChartUndefined(String),
}

/// A point of phase space in global coordinates `(z, t, zeta, tau)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub z: Vec<f64>,
    pub t: f64,
    pub zeta: Vec<f64>,
    pub tau: f64,
}

impl PhasePoint {
    /// Build a point; `z` and `zeta` must have the same length and all
    /// entries must be finite.
    pub fn new(z: Vec<f64>, t: f64, zeta: Vec<f64>, tau: f64) -> Self {
        assert_eq!(z.len(), zeta.len(), "z and zeta dimensions differ");
        assert!(
            z.iter().chain(zeta.iter()).all(|v| v.is_finite()) && t.is_finite() && tau.is_finite(),
            "phase point coordinates must be finite"
        );
        PhasePoint { z, t, zeta, tau }
    }

    /// Spatial dimension `n`.
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// The time-and-frequency mirror `(z, -t, -zeta, tau)`.
    ///
    /// It conjugates the forward Hamilton flow to the backward one and swaps
    /// the outgoing and incoming radial sets, which is how the minus-side
    /// queries below are reduced to the plus side.
    pub fn mirrored(&self) -> Self {
        PhasePoint {
            z: self.z.clone(),
            t: -self.t,
            zeta: self.zeta.iter().map(|v| -v).collect(),
            tau: self.tau,
        }
    }
}

/// Spacetime metric selector.  Flat is the only kind implemented; the field
/// exists so symbol and flow signatures stay stable when curved metrics
/// arrive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub dimension: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Flat,
}

impl MetricSpec {
    pub fn flat(dimension: usize) -> Self {
        MetricSpec { kind: MetricKind::Flat, dimension }
    }
}

/// Which radial set a query refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadialSign {
    /// Outgoing set, over `t = +infinity`.
    Plus,
    /// Incoming set, over `t = -infinity`.
    Minus,
}

/// Compactification chart labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    NorthPolar,
    SouthPolar,
    Equatorial,
}

/// A point expressed in boundary-adapted coordinates.
///
/// For polar charts `angular_base` is `w = z/|t|` (signed toward north) and
/// `angular_fib` is `(zeta, tau)` unchanged.  For the equatorial chart,
/// built on the dominant spatial axis, `angular_base` is `(s, v_j)` with
/// `s = t/z_1` and `v_j = z_j/z_1`, and `angular_fib` is `(omega_j, sigma)`
/// with `omega_j = zeta_j/zeta_1` and `sigma = tau/zeta_1^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryChartPoint {
    pub chart: Chart,
    pub rho_base: f64,
    pub rho_fib: f64,
    pub angular_base: Vec<f64>,
    pub angular_fib: Vec<f64>,
}

/// Parabolic fiber radius `R = (|zeta|^4 + tau^2)^{1/4}`.
///
/// Homogeneous of degree one under `(zeta, tau) -> (c zeta, c^2 tau)`.
pub fn fiber_weight(zeta: &[f64], tau: f64) -> f64 {
    let z2: f64 = zeta.iter().map(|v| v * v).sum();
    (z2 * z2 + tau * tau).powf(0.25)
}

/// Base boundary defining function `(1 + |z|^2 + t^2)^{-1/2}`.
pub fn rho_base(z: &[f64], t: f64) -> f64 {
    let r2: f64 = z.iter().map(|v| v * v).sum::<f64>() + t * t;
    (1.0 + r2).sqrt().recip()
}

/// Fiber boundary defining function `(1 + R^4)^{-1/4}` with `R` the
/// parabolic fiber radius.
pub fn rho_fib(zeta: &[f64], tau: f64) -> f64 {
    let z2: f64 = zeta.iter().map(|v| v * v).sum();
    (1.0 + z2 * z2 + tau * tau).powf(-0.25)
}

/// Principal symbol `p = tau + |zeta|^2` of `D_t + Delta` for the flat
/// metric.
pub fn symbol_p(point: &PhasePoint, metric: &MetricSpec) -> f64 {
    assert_eq!(metric.kind, MetricKind::Flat);
    assert_eq!(metric.dimension, point.dim(), "metric dimension mismatch");
    point.tau + point.zeta.iter().map(|v| v * v).sum::<f64>()
}

/// Deterministic chart selector: polar iff `|t| >= |z|/2`.
///
/// The midline of the overlap band, so points handed between charts sit well
/// inside both.
fn polar_region(z_norm: f64, t_abs: f64) -> bool {
    t_abs >= 0.5 * z_norm
}

/// Distances far from a radial set saturate here; only decay to zero is ever
/// meaningful.
const DIST_SATURATION: f64 = 1.0e3;

/// Chart distance from `point` to the outgoing (`Plus`) or incoming
/// (`Minus`) radial set.
///
/// Zero exactly on the set, strictly positive elsewhere, saturating at
/// `1e3` far away.  Interior points still get a value (bounded below by
/// `rho_base`); only the origin-degenerate case errors.
pub fn radial_distance(point: &PhasePoint, sign: RadialSign) -> Result<f64, PhaseSpaceError> {
    match sign {
        RadialSign::Plus => plus_distance(point),
        RadialSign::Minus => plus_distance(&point.mirrored()),
    }
}

fn plus_distance(point: &PhasePoint) -> Result<f64, PhaseSpaceError> {
    let z_norm = norm(&point.z);
    let t = point.t;
    let rho_b = rho_base(&point.z, t);
    let zeta_sq: f64 = point.zeta.iter().map(|v| v * v).sum();

    let d2 = if polar_region(z_norm, t.abs()) {
        if t > 0.0 {
            // North polar cap: the set is `zeta = w/2`, `tau = -|zeta|^2`
            // with `w = z/t`.
            let mut ang = 0.0;
            for (zi, zetai) in point.z.iter().zip(point.zeta.iter()) {
                let dev = zetai - 0.5 * zi / t;
                ang += dev * dev;
            }
            let char_dev = point.tau + zeta_sq;
            rho_b * rho_b + ang + char_dev * char_dev
        } else if t < 0.0 {
            // South cap: the outgoing set does not meet this hemisphere; the
            // gap to it is order one.
            let char_dev = point.tau + zeta_sq;
            2.0 + rho_b * rho_b + char_dev * char_dev
        } else {
            // t == 0 with |z| <= 2|t| forces z == 0: the interior origin.
            return Err(PhaseSpaceError::ChartUndefined(
                "interior origin has no asymptotic chart".into(),
            ));
        }
    } else {
        // Equatorial belt.  On the outgoing set the fiber direction aligns
        // with z-hat, `s = t/|z|` matches half the inverse fiber radius, and
        // `tau/|zeta|^2 = -1`.
        let zeta_norm = zeta_sq.sqrt();
        if zeta_norm == 0.0 {
            // Zero section over the equator: angular gap to the set is 2.
            4.0 + rho_b * rho_b
        } else {
            let align: f64 = point
                .z
                .iter()
                .zip(point.zeta.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / (z_norm * zeta_norm);
            let angular = 2.0 * (1.0 - align);
            let sigma_dev = point.tau / zeta_sq + 1.0;
            let a = zeta_norm * align; // zeta . z-hat
            let s_dev2 = if a > 1.0e-12 {
                let dev = t / z_norm - 0.5 / a;
                dev * dev
            } else {
                // Fiber points on the wrong side; the angular term already
                // dominates, keep this one bounded.
                1.0
            };
            rho_b * rho_b + s_dev2 + angular + sigma_dev * sigma_dev
        }
    };
    Ok(d2.sqrt().min(DIST_SATURATION))
}

/// Express a point in the boundary chart selected by the same deterministic
/// rule as [`radial_distance`]: polar caps for `|t| >= |z|/2`, equatorial
/// belt otherwise.
pub fn to_boundary_chart(point: &PhasePoint) -> Result<BoundaryChartPoint, PhaseSpaceError> {
    let z_norm = norm(&point.z);
    let t = point.t;
    if z_norm < 1.0e-9 && t.abs() < 1.0e-9 {
        return Err(PhaseSpaceError::ChartUndefined(
            "interior origin has no asymptotic chart".into(),
        ));
    }
    let rb = rho_base(&point.z, t);
    let rf = rho_fib(&point.zeta, point.tau);
    if polar_region(z_norm, t.abs()) {
        let chart = if t > 0.0 { Chart::NorthPolar } else { Chart::SouthPolar };
        let ta = t.abs();
        let w: Vec<f64> = point.z.iter().map(|zi| zi / ta).collect();
        let mut fib = point.zeta.clone();
        fib.push(point.tau);
        Ok(BoundaryChartPoint {
            chart,
            rho_base: rb,
            rho_fib: rf,
            angular_base: w,
            angular_fib: fib,
        })
    } else {
        // Dominant-axis equatorial chart, oriented so the axis coordinate is
        // positive.
        let (axis, _) = point
            .z
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("nonempty z");
        let orient = point.z[axis].signum();
        let z1 = point.z[axis] * orient;
        let zeta1 = point.zeta[axis] * orient;
        if zeta1 == 0.0 {
            return Err(PhaseSpaceError::ChartUndefined(
                "fiber orthogonal to the equatorial chart axis".into(),
            ));
        }
        let mut base = Vec::with_capacity(point.dim());
        base.push(t / z1);
        for (j, zj) in point.z.iter().enumerate() {
            if j != axis {
                base.push(zj * orient / z1);
            }
        }
        let mut fib = Vec::with_capacity(point.dim());
        for (j, zetaj) in point.zeta.iter().enumerate() {
            if j != axis {
                fib.push(zetaj * orient / zeta1);
            }
        }
        fib.push(point.tau / (zeta1 * zeta1));
        Ok(BoundaryChartPoint {
            chart: Chart::Equatorial,
            rho_base: rb,
            rho_fib: rf,
            angular_base: base,
            angular_fib: fib,
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fiber_weight_parabolic_homogeneity() {
        let zeta = [0.7, -1.3];
        let tau = 0.9;
        let r = fiber_weight(&zeta, tau);
        for c in [2.0, 5.0, 11.5] {
            let scaled: Vec<f64> = zeta.iter().map(|v| c * v).collect();
            assert_relative_eq!(
                fiber_weight(&scaled, c * c * tau),
                c * r,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn rho_fib_matches_weight_at_large_radius() {
        let zeta = [40.0];
        let tau = -1600.0;
        let rf = rho_fib(&zeta, tau);
        let r = fiber_weight(&zeta, tau);
        assert_relative_eq!(rf * r, 1.0, max_relative = 1e-3);
    }

    #[test]
    fn north_polar_distance_vanishes_on_the_set() {
        // w = z/t = (1), zeta = w/2, tau = -|zeta|^2, far out in time.
        let t = 4.0e6;
        let p = PhasePoint::new(vec![t], t, vec![0.5], -0.25);
        let d = radial_distance(&p, RadialSign::Plus).unwrap();
        assert!(d < 1e-5, "d = {d}");
        // Same base point with tau = 0 misses the characteristic relation by
        // |zeta|^2 = 1/4, and the distance converges to exactly that.
        let p2 = PhasePoint::new(vec![t], t, vec![0.5], 0.0);
        let d2 = radial_distance(&p2, RadialSign::Plus).unwrap();
        assert_relative_eq!(d2, 0.25, max_relative = 1e-6);
    }

    #[test]
    fn minus_distance_is_mirror_of_plus() {
        let p = PhasePoint::new(vec![3.0, -1.0], -7.0, vec![0.2, 0.4], -0.3);
        let d_minus = radial_distance(&p, RadialSign::Minus).unwrap();
        let d_plus_mirror = radial_distance(&p.mirrored(), RadialSign::Plus).unwrap();
        assert_eq!(d_minus, d_plus_mirror);
    }

    #[test]
    fn equatorial_distance_vanishes_on_the_set() {
        // Take zeta fixed, z along zeta-hat with |z| huge, t = |z|/(2|zeta|),
        // tau = -|zeta|^2: the outgoing set seen in the belt.
        let zeta = 1.7_f64;
        let big = 3.0e7;
        let t = big / (2.0 * zeta);
        let p = PhasePoint::new(vec![big], t, vec![zeta], -zeta * zeta);
        // |t|/|z| = 0.29 < 1/2: belt chart in force.
        let d = radial_distance(&p, RadialSign::Plus).unwrap();
        assert!(d < 1e-6, "d = {d}");
        // The incoming set is far away at the same point.
        let dm = radial_distance(&p, RadialSign::Minus).unwrap();
        assert!(dm > 1.0, "dm = {dm}");
    }

    #[test]
    fn radial_sets_are_disjoint() {
        // No point gets simultaneously close to both sets.
        let mut worst: f64 = f64::INFINITY;
        for k in 0..200 {
            let a = k as f64 / 200.0;
            let t = 1.0e6 * (2.0 * a - 1.0);
            let zeta = 0.3 + a;
            let p = PhasePoint::new(
                vec![2.0 * zeta * t],
                t,
                vec![zeta],
                -zeta * zeta,
            );
            if p.t.abs() < 1.0 {
                continue;
            }
            let dp = radial_distance(&p, RadialSign::Plus).unwrap();
            let dm = radial_distance(&p, RadialSign::Minus).unwrap();
            worst = worst.min(dp.max(dm));
        }
        assert!(worst > 0.5, "some point near both sets: {worst}");
    }

    #[test]
    fn chart_selection_is_deterministic() {
        let p = PhasePoint::new(vec![10.0], 5.0, vec![0.5], -0.25);
        // |t| = |z|/2 exactly: polar wins on the closed boundary.
        assert_eq!(to_boundary_chart(&p).unwrap().chart, Chart::NorthPolar);
        let q = PhasePoint::new(vec![10.0], 4.99, vec![0.5], -0.25);
        assert_eq!(to_boundary_chart(&q).unwrap().chart, Chart::Equatorial);
        let r = PhasePoint::new(vec![10.0], -5.1, vec![0.5], -0.25);
        assert_eq!(to_boundary_chart(&r).unwrap().chart, Chart::SouthPolar);
    }

    #[test]
    fn equatorial_chart_coordinates() {
        let p = PhasePoint::new(vec![8.0, 2.0], 3.0, vec![1.0, 0.25], -2.0);
        let c = to_boundary_chart(&p).unwrap();
        assert_eq!(c.chart, Chart::Equatorial);
        // axis = 0: s = t/z1, v = z2/z1; omega = zeta2/zeta1, sigma = tau/zeta1^2.
        assert_relative_eq!(c.angular_base[0], 3.0 / 8.0);
        assert_relative_eq!(c.angular_base[1], 0.25);
        assert_relative_eq!(c.angular_fib[0], 0.25);
        assert_relative_eq!(c.angular_fib[1], -2.0);
    }

    #[test]
    fn origin_is_chart_undefined() {
        let p = PhasePoint::new(vec![0.0], 0.0, vec![0.3], -0.09);
        assert!(matches!(
            radial_distance(&p, RadialSign::Plus),
            Err(PhaseSpaceError::ChartUndefined(_))
        ));
    }
}
