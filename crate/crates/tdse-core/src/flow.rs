//! Hamilton flow of the free symbol and endpoint classification.
//!
//! The Hamilton field of `p = tau + |zeta|^2` is `(2 zeta, 1, 0, 0)` in
//! `(z, t, zeta, tau)`: straight lines in the base with frozen fiber.  To
//! reach spacetime infinity in finite parameter the field is rescaled by
//! `rho_fib / rho_base`; trajectories of the rescaled field converge
//! exponentially to the radial sets, the outgoing one forward and the
//! incoming one backward.
//!
//! Integration runs in three phases: global coordinates while the point is
//! at moderate radius, then the polar-cap or equatorial-belt chart once the
//! base radius passes `1/CHART_SWITCH_RHO`, with a deterministic hand-off
//! whenever `|t|/|z|` crosses `1/2`.  In chart variables the equations close
//! over the base coordinates alone (the fiber rides along unchanged), and
//! the boundary is a smooth attracting fixed point, so an adaptive
//! Runge-Kutta pair integrates straight through to `rho_base < rho_stop`.
//!
//! Backward traces reuse the forward integrator through the involution
//! `(z, t, zeta, tau) -> (z, -t, -zeta, tau)`, which swaps the two radial
//! sets and reverses the flow.

use crate::phase_space::{
    radial_distance, rho_base, rho_fib, symbol_p, MetricSpec, PhasePoint, RadialSign,
};
use thiserror::Error;

/// Errors from tracing.
#[derive(Debug, Error)]
pub enum FlowError {
    /// The seed does not satisfy `|p| <= char_tol`.
    #[error("seed is not characteristic: |p| = {p_abs:.3e} exceeds {char_tol:.3e}")]
    NotCharacteristic { p_abs: f64, char_tol: f64 },
    /// Step budget exhausted before the stopping radius, with the endpoint
    /// still unclassified.
    #[error("no convergence after {steps} steps (rho_base = {rho:.3e})")]
    NoConvergence { steps: usize, rho: f64 },
}

/// Tangent vector at a phase-space point.
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent {
    pub dz: Vec<f64>,
    pub dt: f64,
    pub dzeta: Vec<f64>,
    pub dtau: f64,
}

/// Trace direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Endpoint classification against the two radial sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointClass {
    PlusRadial,
    MinusRadial,
    Undetermined,
}

/// Options for [`trace_bicharacteristic`].
#[derive(Clone, Copy, Debug)]
pub struct TraceOpts {
    /// Stop once `rho_base` falls below this.
    pub rho_stop: f64,
    /// Step budget.
    pub max_steps: usize,
    /// Relative tolerance of the embedded pair.
    pub rtol: f64,
    /// Absolute tolerance of the embedded pair.
    pub atol: f64,
    /// Maximum admissible `|p|` at the seed.
    pub char_tol: f64,
    /// Chart distance below which an endpoint counts as on a radial set.
    pub class_threshold: f64,
}

impl Default for TraceOpts {
    fn default() -> Self {
        TraceOpts {
            rho_stop: 1.0e-6,
            max_steps: 200_000,
            rtol: 1.0e-10,
            atol: 1.0e-12,
            char_tol: 1.0e-10,
            class_threshold: 1.0e-4,
        }
    }
}

/// A traced bicharacteristic.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Samples `(s, point)` with `s` the rescaled flow parameter, strictly
    /// increasing.  Backward traces are parametrized by the reversed field,
    /// so `s` increases toward `t = -infinity`.
    pub samples: Vec<(f64, PhasePoint)>,
    pub endpoint_class: EndpointClass,
    /// Largest `|p|` observed along the trace.
    pub max_char_violation: f64,
    /// Chart distance from the final sample to the nearer radial set.
    pub final_radial_distance: f64,
}

impl Trajectory {
    pub fn seed(&self) -> &PhasePoint {
        &self.samples.first().expect("nonempty trajectory").1
    }

    pub fn final_point(&self) -> &PhasePoint {
        &self.samples.last().expect("nonempty trajectory").1
    }
}

/// Hamilton field of `p = tau + |zeta|^2`: `(2 zeta, 1, 0, 0)`.
pub fn hamilton_field(point: &PhasePoint, metric: &MetricSpec) -> Tangent {
    assert_eq!(metric.dimension, point.dim(), "metric dimension mismatch");
    Tangent {
        dz: point.zeta.iter().map(|v| 2.0 * v).collect(),
        dt: 1.0,
        dzeta: vec![0.0; point.dim()],
        dtau: 0.0,
    }
}

/// Hamilton field rescaled by `rho_fib / rho_base`, the generator actually
/// integrated.
pub fn rescaled_field(point: &PhasePoint, metric: &MetricSpec) -> Tangent {
    let mut v = hamilton_field(point, metric);
    let scale = rho_fib(&point.zeta, point.tau) / rho_base(&point.z, point.t);
    for c in v.dz.iter_mut() {
        *c *= scale;
    }
    v.dt *= scale;
    v
}

/// Classify a trajectory endpoint by recomputing chart distances at its
/// final sample, with the default threshold of [`TraceOpts`].
pub fn classify_endpoint(traj: &Trajectory) -> EndpointClass {
    classify_point(traj.final_point(), TraceOpts::default().class_threshold)
}

/// Classify a single point against both radial sets at a given threshold.
pub fn classify_point(point: &PhasePoint, threshold: f64) -> EndpointClass {
    let dp = radial_distance(point, RadialSign::Plus).unwrap_or(f64::INFINITY);
    let dm = radial_distance(point, RadialSign::Minus).unwrap_or(f64::INFINITY);
    if dp < threshold {
        EndpointClass::PlusRadial
    } else if dm < threshold {
        EndpointClass::MinusRadial
    } else {
        EndpointClass::Undetermined
    }
}

/// Leave global coordinates for a boundary chart below this base radius.
const CHART_SWITCH_RHO: f64 = 0.02;
/// Polar cap hands off to the belt once `|w| = |z|/|t|` exceeds this.
const POLAR_TO_BELT_W: f64 = 2.2;
/// Belt hands off to the cap once `|t|/|z|` exceeds this.
const BELT_TO_POLAR_RATIO: f64 = 0.55;

/// Integrate the rescaled Hamilton flow from `seed` until `rho_base`
/// passes `opts.rho_stop`.
///
/// The seed must be characteristic to within `opts.char_tol`.  The fiber
/// coordinates of the free flow are exactly conserved; base coordinates
/// follow an embedded fourth/fifth order Runge-Kutta pair with tolerances
/// `(rtol, atol)`.
pub fn trace_bicharacteristic(
    seed: &PhasePoint,
    direction: Direction,
    opts: &TraceOpts,
) -> Result<Trajectory, FlowError> {
    let metric = MetricSpec::flat(seed.dim());
    let p_abs = symbol_p(seed, &metric).abs();
    if p_abs > opts.char_tol {
        return Err(FlowError::NotCharacteristic { p_abs, char_tol: opts.char_tol });
    }
    match direction {
        Direction::Forward => trace_forward(seed.clone(), opts),
        Direction::Backward => {
            // Mirror, flow forward, mirror back: bit-exact conjugation.
            let mut traj = trace_forward(seed.mirrored(), opts)?;
            for (_, p) in traj.samples.iter_mut() {
                *p = p.mirrored();
            }
            let final_point = traj.final_point().clone();
            traj.endpoint_class = classify_point(&final_point, opts.class_threshold);
            traj.final_radial_distance = nearest_set_distance(&final_point);
            Ok(traj)
        }
    }
}

fn nearest_set_distance(point: &PhasePoint) -> f64 {
    let dp = radial_distance(point, RadialSign::Plus).unwrap_or(f64::INFINITY);
    let dm = radial_distance(point, RadialSign::Minus).unwrap_or(f64::INFINITY);
    dp.min(dm)
}

/// Integration state: global base coordinates or one of the two chart
/// parametrizations, always with the frozen fiber alongside.
enum Phase {
    /// State `[z.., t]`.
    Global,
    /// North cap, state `[u, w..]` with `u = 1/t`, `w = z/t`.
    Polar,
    /// Belt on a fixed oriented axis, state `[rho, s, v..]` with
    /// `rho = 1/(z . e)`, `s = t rho`, `v_j = z_j rho`.
    Belt { axis: usize, orient: f64 },
}

struct Integrator {
    n: usize,
    zeta: Vec<f64>,
    tau: f64,
    rho_f: f64,
    phase: Phase,
    state: Vec<f64>,
}

impl Integrator {
    fn new(seed: &PhasePoint) -> Self {
        let mut state = seed.z.clone();
        state.push(seed.t);
        Integrator {
            n: seed.dim(),
            zeta: seed.zeta.clone(),
            tau: seed.tau,
            rho_f: rho_fib(&seed.zeta, seed.tau),
            phase: Phase::Global,
            state,
        }
    }

    fn derivative(&self, y: &[f64], dy: &mut [f64]) {
        match self.phase {
            Phase::Global => {
                // lambda = rho_fib / rho_base.
                let (z, t) = (&y[..self.n], y[self.n]);
                let r2: f64 = z.iter().map(|v| v * v).sum::<f64>() + t * t;
                let lambda = self.rho_f * (1.0 + r2).sqrt();
                for i in 0..self.n {
                    dy[i] = 2.0 * self.zeta[i] * lambda;
                }
                dy[self.n] = lambda;
            }
            Phase::Polar => {
                let (u, w) = (y[0], &y[1..]);
                let g = self.rho_f
                    * (u * u + 1.0 + w.iter().map(|v| v * v).sum::<f64>()).sqrt();
                dy[0] = -u * g;
                for i in 0..self.n {
                    dy[1 + i] = g * (2.0 * self.zeta[i] - w[i]);
                }
            }
            Phase::Belt { axis, orient } => {
                let (rho, s, v) = (y[0], y[1], &y[2..]);
                let g = self.rho_f
                    * (rho * rho + 1.0 + s * s + v.iter().map(|x| x * x).sum::<f64>())
                        .sqrt();
                let zeta_a = self.zeta[axis] * orient;
                dy[0] = -2.0 * zeta_a * rho * g;
                dy[1] = g * (1.0 - 2.0 * zeta_a * s);
                let mut j = 0;
                for (i, zi) in self.zeta.iter().enumerate() {
                    if i != axis {
                        dy[2 + j] = g * (2.0 * zi - 2.0 * zeta_a * v[j]);
                        j += 1;
                    }
                }
            }
        }
    }

    fn point(&self) -> PhasePoint {
        let (z, t) = self.base_coords();
        PhasePoint { z, t, zeta: self.zeta.clone(), tau: self.tau }
    }

    fn base_coords(&self) -> (Vec<f64>, f64) {
        match self.phase {
            Phase::Global => (self.state[..self.n].to_vec(), self.state[self.n]),
            Phase::Polar => {
                let u = self.state[0];
                let t = 1.0 / u;
                (self.state[1..].iter().map(|w| w * t).collect(), t)
            }
            Phase::Belt { axis, orient } => {
                let a = 1.0 / self.state[0];
                let t = self.state[1] * a;
                let mut z = vec![0.0; self.n];
                z[axis] = a * orient;
                let mut j = 0;
                for (i, zi) in z.iter_mut().enumerate() {
                    if i != axis {
                        *zi = self.state[2 + j] * a;
                        j += 1;
                    }
                }
                (z, t)
            }
        }
    }

    fn rho_base_now(&self) -> f64 {
        match self.phase {
            Phase::Global => {
                let (z, t) = (&self.state[..self.n], self.state[self.n]);
                rho_base(z, t)
            }
            Phase::Polar => {
                let u = self.state[0];
                let w2: f64 = self.state[1..].iter().map(|v| v * v).sum();
                u / (u * u + 1.0 + w2).sqrt()
            }
            Phase::Belt { .. } => {
                let rho = self.state[0];
                let rest: f64 = self.state[1..].iter().map(|v| v * v).sum();
                rho / (rho * rho + 1.0 + rest).sqrt()
            }
        }
    }

    /// Re-express the current point in whichever phase the hand-off rules
    /// select.  Returns true if the phase changed.
    fn rechart(&mut self) -> bool {
        let (z, t) = self.base_coords();
        let rb = rho_base(&z, t);
        let z_norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = if rb >= CHART_SWITCH_RHO {
            PhaseKind::Global
        } else {
            match self.phase {
                Phase::Global => {
                    if t.abs() >= 0.5 * z_norm {
                        PhaseKind::Polar
                    } else {
                        PhaseKind::Belt
                    }
                }
                Phase::Polar => {
                    let w_norm = z_norm / t.abs();
                    if w_norm > POLAR_TO_BELT_W {
                        PhaseKind::Belt
                    } else {
                        PhaseKind::Polar
                    }
                }
                Phase::Belt { .. } => {
                    if t.abs() / z_norm > BELT_TO_POLAR_RATIO {
                        PhaseKind::Polar
                    } else {
                        PhaseKind::Belt
                    }
                }
            }
        };
        if target == self.kind() {
            return false;
        }
        match target {
            PhaseKind::Global => {
                self.phase = Phase::Global;
                self.state = z.clone();
                self.state.push(t);
            }
            PhaseKind::Polar => {
                // Forward flow only enters the north cap (t > 0 by the time
                // the radius is large).
                debug_assert!(t > 0.0, "polar chart entered with t <= 0");
                self.phase = Phase::Polar;
                self.state = Vec::with_capacity(1 + self.n);
                self.state.push(1.0 / t);
                for zi in &z {
                    self.state.push(zi / t);
                }
            }
            PhaseKind::Belt => {
                let (axis, _) = z
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .expect("nonempty z");
                let orient = z[axis].signum();
                let a = z[axis] * orient;
                self.phase = Phase::Belt { axis, orient };
                self.state = Vec::with_capacity(2 + self.n - 1);
                self.state.push(1.0 / a);
                self.state.push(t / a);
                for (i, zi) in z.iter().enumerate() {
                    if i != axis {
                        self.state.push(zi / a);
                    }
                }
            }
        }
        true
    }

    fn kind(&self) -> PhaseKind {
        match self.phase {
            Phase::Global => PhaseKind::Global,
            Phase::Polar => PhaseKind::Polar,
            Phase::Belt { .. } => PhaseKind::Belt,
        }
    }
}

#[derive(PartialEq, Eq, Clone, Copy)]
enum PhaseKind {
    Global,
    Polar,
    Belt,
}

/// Dormand-Prince 5(4) tableau.  The integrated fields are autonomous, so
/// only the stage weights matter.
const DP_A: [&[f64]; 6] = [
    &[0.2],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn trace_forward(seed: PhasePoint, opts: &TraceOpts) -> Result<Trajectory, FlowError> {
    let metric = MetricSpec::flat(seed.dim());
    let mut integ = Integrator::new(&seed);
    let mut samples: Vec<(f64, PhasePoint)> = Vec::new();
    let mut s = 0.0_f64;
    let mut h = 1.0e-3;
    let mut max_viol = symbol_p(&seed, &metric).abs();
    samples.push((s, seed));

    let dim = integ.state.len();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut ytmp = vec![0.0; dim];
    let mut steps = 0usize;

    while steps < opts.max_steps {
        if integ.rho_base_now() < opts.rho_stop {
            break;
        }
        steps += 1;

        // One embedded step in the current phase.
        integ.derivative(&integ.state, &mut k[0]);
        for stage in 0..6 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, a) in DP_A[stage].iter().enumerate() {
                    acc += a * k[j][i];
                }
                ytmp[i] = integ.state[i] + h * acc;
            }
            let (_, tail) = k.split_at_mut(stage + 1);
            integ.derivative(&ytmp, &mut tail[0]);
        }
        let mut err: f64 = 0.0;
        let mut y5 = vec![0.0; dim];
        for i in 0..dim {
            let mut acc5 = 0.0;
            let mut acc4 = 0.0;
            for j in 0..7 {
                acc5 += DP_B5[j] * k[j][i];
                acc4 += DP_B4[j] * k[j][i];
            }
            y5[i] = integ.state[i] + h * acc5;
            let e = h * (acc5 - acc4);
            let scale = opts.atol + opts.rtol * integ.state[i].abs().max(y5[i].abs());
            err += (e / scale) * (e / scale);
        }
        err = (err / dim as f64).sqrt();

        if err <= 1.0 {
            integ.state = y5;
            s += h;
            let point = integ.point();
            max_viol = max_viol.max(symbol_p(&point, &metric).abs());
            samples.push((s, point));
            if integ.rechart() {
                // State vector may have changed length.
                let d = integ.state.len();
                for kk in k.iter_mut() {
                    kk.resize(d, 0.0);
                }
                ytmp.resize(d, 0.0);
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if !(h > 1.0e-14) {
            return Err(FlowError::NoConvergence { steps, rho: integ.rho_base_now() });
        }
    }

    if integ.rho_base_now() >= opts.rho_stop {
        return Err(FlowError::NoConvergence { steps, rho: integ.rho_base_now() });
    }

    let final_point = integ.point();
    let endpoint_class = classify_point(&final_point, opts.class_threshold);
    let final_radial_distance = nearest_set_distance(&final_point);
    if *samples.last().map(|(sv, _)| sv).unwrap_or(&-1.0) < s {
        samples.push((s, final_point));
    }
    Ok(Trajectory {
        samples,
        endpoint_class,
        max_char_violation: max_viol,
        final_radial_distance,
    })
}
