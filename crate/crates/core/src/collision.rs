//! Collision-model bath: the particle meets oscillator `i` only for a short
//! time `epsilon` at `tau_i = i tau`. Endpoint terms, the fluctuation memory
//! term, the assembled propagator `J_ME`, and the time-local coefficients
//! read off from it.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;
use crate::bath::{coth, BathSpec, Temperature};
use crate::closed_system::{GridKernel, SystemSpec, CAUSTIC_TOLERANCE};
use crate::influence::{default_kernel, DiscretePath, SliceLogs};
use crate::numerics::{triangle_sum, PositionGrid, TimeMesh, I};
use crate::path_sum::{assemble, check_tractable, PathPairExponent, MAX_PATH_PAIRS};
use crate::tensor::{PropagatorTensor, TensorVariant};
use crate::{Error, Result};

/// Default bound on `epsilon / tau`.
pub const DEFAULT_MAX_EPSILON_RATIO: f64 = 0.1;

/// Collision times `tau_i = i tau` for `i = 1..=n`, each lasting `epsilon`,
/// with a frequency per collision.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionSchedule {
    tau: f64,
    epsilon: f64,
    omegas: Vec<f64>,
    max_ratio: f64,
}

impl CollisionSchedule {
    /// `n` collisions with one common frequency; requires `epsilon <= tau / 10`.
    pub fn new(tau: f64, epsilon: f64, n: usize, omega: f64) -> Result<Self> {
        Self::with_ratio_limit(tau, epsilon, alloc::vec![omega; n], DEFAULT_MAX_EPSILON_RATIO)
    }

    /// Per-collision frequencies and a custom bound on `epsilon / tau`.
    pub fn with_ratio_limit(tau: f64, epsilon: f64, omegas: Vec<f64>, max_ratio: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(tau > 0.0 && tau.is_finite()) {
            problems.push(format!("tau must be > 0, got {tau}"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            problems.push(format!("epsilon must be > 0, got {epsilon}"));
        }
        if epsilon > max_ratio * tau {
            problems.push(format!(
                "epsilon <= tau * {max_ratio} is required, got epsilon = {epsilon}, tau = {tau}"
            ));
        }
        if omegas.is_empty() {
            problems.push("schedule needs at least one collision".into());
        }
        for (i, &w) in omegas.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                problems.push(format!("omega for collision {} must be > 0, got {w}", i + 1));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems.join("; ")));
        }
        Ok(Self {
            tau,
            epsilon,
            omegas,
            max_ratio,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn max_ratio(&self) -> f64 {
        self.max_ratio
    }

    pub fn t_total(&self) -> f64 {
        self.len() as f64 * self.tau
    }

    /// `tau_i` for `i = 1..=n`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.tau
    }

    pub fn times(&self) -> Vec<f64> {
        (1..=self.len()).map(|i| self.time(i)).collect()
    }

    /// Frequency of collision `i` (1-based).
    pub fn omega(&self, i: usize) -> f64 {
        self.omegas[i - 1]
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// True when collisions use more than one frequency.
    pub fn is_multi_frequency(&self) -> bool {
        self.omegas.iter().any(|&w| w != self.omegas[0])
    }

    /// Same schedule with another collision duration.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::with_ratio_limit(self.tau, epsilon, self.omegas.clone(), self.max_ratio)
    }

    /// Mesh index of every collision time.
    pub fn mesh_indices(&self, mesh: &TimeMesh) -> Result<Vec<usize>> {
        self.times()
            .into_iter()
            .map(|t| mesh.index_of(t).ok_or(Error::MeshAlignment { time: t }))
            .collect()
    }
}

/// Schedule whose `i`-th collision uses `omegas_per_collision[i - 1]`.
pub fn multi_frequency_schedule(omegas_per_collision: &[f64], schedule: &CollisionSchedule) -> Result<CollisionSchedule> {
    if omegas_per_collision.len() != schedule.len() {
        return Err(Error::shape(
            "multi_frequency_schedule",
            format!("{} frequencies", schedule.len()),
            omegas_per_collision.len(),
        ));
    }
    CollisionSchedule::with_ratio_limit(
        schedule.tau,
        schedule.epsilon,
        omegas_per_collision.to_vec(),
        schedule.max_ratio,
    )
}

/// How a `delta(t' - tau_i)` inside the single-time integral is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaWeight {
    /// One unit-weight term per collision.
    #[default]
    Unit,
    /// One mesh cell `dt` per collision in place of one factor of `epsilon`,
    /// so the coefficients scale as `epsilon dt`.
    MeshCell,
}

impl DeltaWeight {
    pub fn name(self) -> &'static str {
        match self {
            DeltaWeight::Unit => "unit",
            DeltaWeight::MeshCell => "mesh_cell",
        }
    }

    fn factor(self, dt: f64, epsilon: f64) -> f64 {
        match self {
            DeltaWeight::Unit => 1.0,
            DeltaWeight::MeshCell => dt / epsilon,
        }
    }
}

fn sin_checked(omega: f64, t: f64) -> Result<f64> {
    let s = (omega * t).sin();
    if s.abs() < CAUSTIC_TOLERANCE {
        return Err(Error::Caustic {
            sin_abs: s.abs(),
            tolerance: CAUSTIC_TOLERANCE,
        });
    }
    Ok(s)
}

fn coth_at(bath: &BathSpec, omega: f64) -> f64 {
    match bath.temperature() {
        Temperature::Zero => 1.0,
        Temperature::Finite { kt } => coth(bath.hbar() * omega / (2.0 * kt)),
    }
}

/// Boundary term `(m w / 2) cot(w t)(X^2 + X'^2) - (m w / sin(w t)) X X'`.
pub fn quadk_term(x_end: f64, x_start: f64, omega: f64, t_total: f64, m: f64) -> Result<f64> {
    let s = sin_checked(omega, t_total)?;
    let c = (omega * t_total).cos();
    Ok(0.5 * m * omega * c / s * (x_end * x_end + x_start * x_start) - m * omega / s * x_end * x_start)
}

/// Endpoint-linear term of collision `i`:
/// `epsilon c x(tau_i) [(-X / sin(w t) + X' cot(w t)) sin(w tau_i) - X' cos(w tau_i)]`.
#[allow(clippy::too_many_arguments)]
pub fn lin_term(
    x_at_tau: f64,
    tau_i: f64,
    x_end: f64,
    x_start: f64,
    omega: f64,
    t_total: f64,
    epsilon: f64,
    c_i: f64,
) -> Result<f64> {
    let s = sin_checked(omega, t_total)?;
    let cot = (omega * t_total).cos() / s;
    let (st, ct) = (omega * tau_i).sin_cos();
    Ok(epsilon * c_i * x_at_tau * ((-x_end / s + x_start * cot) * st - x_start * ct))
}

fn require_bath_size(bath: &BathSpec, schedule: &CollisionSchedule, context: &'static str) -> Result<()> {
    if bath.len() != schedule.len() {
        return Err(Error::shape(
            context,
            format!("{} oscillators, one per collision", schedule.len()),
            bath.len(),
        ));
    }
    Ok(())
}

/// Classical-endpoint part of the interaction action, summed over collisions.
/// `x_end[i]`, `x_start[i]` are the final and initial positions of the
/// oscillator met at `tau_{i+1}`.
pub fn s_int_collision(
    path_x: &DiscretePath,
    schedule: &CollisionSchedule,
    bath: &BathSpec,
    x_end: &[f64],
    x_start: &[f64],
) -> Result<f64> {
    require_bath_size(bath, schedule, "s_int_collision")?;
    if x_end.len() != schedule.len() || x_start.len() != schedule.len() {
        return Err(Error::shape(
            "s_int_collision",
            format!("{} endpoints", schedule.len()),
            format!("{} and {}", x_end.len(), x_start.len()),
        ));
    }
    let mesh = path_x.mesh();
    let indices = schedule.mesh_indices(mesh)?;
    let t = mesh.t_total();
    let mut total = 0.0;
    for (n, &k) in indices.iter().enumerate() {
        let i = n + 1;
        total += lin_term(
            path_x.values()[k],
            schedule.time(i),
            x_end[n],
            x_start[n],
            schedule.omega(i),
            t,
            schedule.epsilon(),
            bath.couplings()[n],
        )?;
    }
    Ok(total)
}

/// Fluctuation memory term
/// `(c^2 / (m w sin(w t))) int_0^t dt' int_0^t' dt'' x(t') sin(w (t - t')) sin(w t'') x(t'')`
/// on a mesh of at least 16 steps.
pub fn fluct_term(path_x: &DiscretePath, omega: f64, t_total: f64, m: f64, c_i: f64) -> Result<f64> {
    let mesh = path_x.mesh();
    if mesh.n_steps() < 16 {
        return Err(Error::Validation(format!(
            "fluct_term needs at least 16 mesh steps, got {}",
            mesh.n_steps()
        )));
    }
    if (mesh.t_total() - t_total).abs() > 1e-12 * t_total.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "path mesh ends at {} but t_total is {t_total}",
            mesh.t_total()
        )));
    }
    let s = sin_checked(omega, t_total)?;
    let times = mesh.times();
    let x = path_x.values();
    let integral: f64 = triangle_sum(&mesh.trapezoid_weights(), |k, l| {
        x[k] * (omega * (t_total - times[k])).sin() * (omega * times[l]).sin() * x[l]
    });
    Ok(c_i * c_i / (m * omega * s) * integral)
}

/// Which operator the extracted jump terms couple through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorAssignment {
    /// `L_i` proportional to the position operator.
    Position,
}

/// The memory kernel left over after extraction,
/// `sum_i c_i^2 sin(w_i (t - t')) sin(w_i t'') / (m w_i sin(w_i t))` on `x(t') x(t'')`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualKernel {
    pub t_total: f64,
    pub terms: Vec<(f64, f64)>,
}

impl ResidualKernel {
    pub fn value(&self, t1: f64, t2: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(coef, w)| coef * (w * (self.t_total - t1)).sin() * (w * t2).sin())
            .sum()
    }
}

/// Time-local coefficients per collision.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladExtraction {
    pub tau: Vec<f64>,
    pub phi: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Collisions (1-based) whose `gamma_i < 0`.
    pub negative_gamma: Vec<usize>,
    pub operator: OperatorAssignment,
    pub residual: ResidualKernel,
    /// Set when collisions use different frequencies, so the endpoint
    /// pairing between the two branches is not index-aligned.
    pub index_pairing_caveat: bool,
}

impl LindbladExtraction {
    pub fn is_completely_positive(&self) -> bool {
        self.negative_gamma.is_empty()
    }
}

/// `phi_i = (eps^2 c_i^2 / 4 m w)(-2 sin(2 w tau_i) + cot(w t) sin^2(w tau_i))`,
/// `gamma_i = (eps^2 c_i^2 / 4 m w) cos(2 w tau_i) coth(hbar w / 2kT)`.
pub fn extract_lindblad(schedule: &CollisionSchedule, bath: &BathSpec, t_total: f64) -> Result<LindbladExtraction> {
    require_bath_size(bath, schedule, "extract_lindblad")?;
    let eps = schedule.epsilon();
    let m = bath.mass();
    let n = schedule.len();
    let (mut phi, mut gamma, mut negative, mut terms) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::new(), Vec::with_capacity(n));
    for i in 1..=n {
        let w = schedule.omega(i);
        let c = bath.couplings()[i - 1];
        let s = sin_checked(w, t_total)?;
        let cot = (w * t_total).cos() / s;
        let tau = schedule.time(i);
        let pref = eps * eps * c * c / (4.0 * m * w);
        let st = (w * tau).sin();
        phi.push(pref * (-2.0 * (2.0 * w * tau).sin() + cot * st * st));
        let g = pref * (2.0 * w * tau).cos() * coth_at(bath, w);
        if g < 0.0 {
            negative.push(i);
        }
        gamma.push(g);
        terms.push((c * c / (m * w * s), w));
    }
    Ok(LindbladExtraction {
        tau: schedule.times(),
        phi,
        gamma,
        negative_gamma: negative,
        operator: OperatorAssignment::Position,
        residual: ResidualKernel { t_total, terms },
        index_pairing_caveat: schedule.is_multi_frequency(),
    })
}

/// Path-pair exponent of the collision-model propagator.
#[derive(Debug, Clone)]
pub struct CollisionExponent {
    points: Vec<f64>,
    slices: SliceLogs,
    weights: Vec<f64>,
    /// `(mesh index, phi_i w, gamma_i w)`
    collisions: Vec<(usize, f64, f64)>,
    /// `F[k][l] = sum_i c_i^2 sin(w_i (t - t_k)) sin(w_i t_l) / (m w_i sin(w_i t))`
    fluct: Vec<f64>,
    n: usize,
    hbar: f64,
}

impl CollisionExponent {
    pub fn new(
        grid: &PositionGrid,
        mesh: &TimeMesh,
        spec: &SystemSpec,
        bath: &BathSpec,
        schedule: &CollisionSchedule,
        kernel: GridKernel,
        delta: DeltaWeight,
    ) -> Result<Self> {
        let t = mesh.t_total();
        let extraction = extract_lindblad(schedule, bath, t)?;
        let indices = schedule.mesh_indices(mesh)?;
        let wd = delta.factor(mesh.dt(), schedule.epsilon());
        let collisions = indices
            .iter()
            .zip(extraction.phi.iter().zip(&extraction.gamma))
            .map(|(&k, (&p, &g))| (k, p * wd, g * wd))
            .collect();
        let n = mesh.n_points();
        let times = mesh.times();
        let mut fluct = alloc::vec![0.0; n * n];
        for k in 0..n {
            for l in 0..=k {
                fluct[k * n + l] = extraction.residual.value(times[k], times[l]);
            }
        }
        Ok(Self {
            points: grid.points(),
            slices: SliceLogs::new(grid, spec, mesh.dt(), kernel)?,
            weights: mesh.trapezoid_weights(),
            collisions,
            fluct,
            n,
            hbar: spec.hbar,
        })
    }

    /// Collision blocks at the `tau_i`:
    /// `(i/hbar) sum phi_i (2x^2 + 2y^2 + 2xy) - (1/hbar) sum gamma_i 2(x^2 + y^2)`.
    pub fn markov_exponent(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let mut phase = 0.0;
        let mut decay = 0.0;
        for &(k, phi, gamma) in &self.collisions {
            let (a, b) = (x[k], y[k]);
            phase += phi * (2.0 * a * a + 2.0 * b * b + 2.0 * a * b);
            decay += gamma * 2.0 * (a * a + b * b);
        }
        Complex64::new(-decay, phase) / self.hbar
    }

    /// `(i/hbar) int_0^t dt' int_0^t' dt'' F(t', t'') [x(t') x(t') - y(t') y(t'')]`
    pub fn fluct_exponent(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let v: f64 = triangle_sum(&self.weights, |k, l| {
            self.fluct[k * self.n + l] * (x[k] * x[k] - y[k] * y[l])
        });
        I * v / self.hbar
    }

    fn values(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&j| self.points[j]).collect()
    }
}

impl PathPairExponent for CollisionExponent {
    fn exponent(&self, x: &[usize], y: &[usize]) -> Complex64 {
        let (xv, yv) = (self.values(x), self.values(y));
        self.slices.free_part(x, y) + self.markov_exponent(&xv, &yv) + self.fluct_exponent(&xv, &yv)
    }
}

/// Collision-model density propagator `J_ME`, one path slice per mesh step.
pub fn assemble_j_me(
    grid: &PositionGrid,
    mesh: &TimeMesh,
    spec: &SystemSpec,
    bath: &BathSpec,
    schedule: &CollisionSchedule,
) -> Result<PropagatorTensor> {
    assemble_j_me_with(grid, mesh, spec, bath, schedule, default_kernel(spec), DeltaWeight::Unit)
}

pub fn assemble_j_me_with(
    grid: &PositionGrid,
    mesh: &TimeMesh,
    spec: &SystemSpec,
    bath: &BathSpec,
    schedule: &CollisionSchedule,
    kernel: GridKernel,
    delta: DeltaWeight,
) -> Result<PropagatorTensor> {
    check_tractable(grid.len(), mesh.n_steps(), MAX_PATH_PAIRS)?;
    let exponent = CollisionExponent::new(grid, mesh, spec, bath, schedule, kernel, delta)?;
    assemble(grid, mesh.n_steps(), mesh.t_total(), TensorVariant::Collision, &exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::classical_solution;
    use crate::closed_system::j_closed;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    use proptest::prelude::*;

    fn bath(n: usize, c: f64, w: f64, t: Temperature) -> BathSpec {
        BathSpec::uniform(n, 1.0, w, c, t, 1.0).unwrap()
    }

    #[test]
    fn schedule_validation() {
        let s = CollisionSchedule::new(0.5, 0.05, 4, 1.0).unwrap();
        assert_eq!(s.time(4), s.t_total());
        let err = CollisionSchedule::new(0.5, 0.06, 4, 1.0).unwrap_err();
        let Error::Validation(msg) = err else { panic!() };
        assert!(msg.contains("epsilon <= tau * 0.1"));
        assert!(CollisionSchedule::with_ratio_limit(0.5, 0.2, alloc::vec![1.0], 0.5).is_ok());
    }

    #[test]
    fn quadk_examples() {
        let v = quadk_term(0.7, 0.7, 1.0, FRAC_PI_2, 2.0).unwrap();
        assert!((v + 2.0 * 0.49).abs() < 1e-15);
        assert_eq!(quadk_term(0.3, -1.1, 1.4, 0.8, 1.0).unwrap(), quadk_term(-1.1, 0.3, 1.4, 0.8, 1.0).unwrap());
        assert!(matches!(quadk_term(0.3, 0.1, 1.0, PI, 1.0), Err(Error::Caustic { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn quadk_is_the_classical_boundary_term(
            xe in -3.0..3.0f64, xs in -3.0..3.0f64, w in 0.2..3.0f64, t in 0.1..5.0f64, m in 0.2..3.0f64,
        ) {
            prop_assume!((w * t).sin().abs() > 1e-2);
            let p = classical_solution(xs, xe, w, t).unwrap();
            let oracle = 0.5 * m * (p.at(t) * p.velocity(t) - p.at(0.0) * p.velocity(0.0));
            let v = quadk_term(xe, xs, w, t, m).unwrap();
            let scale = 1.0 + m * w * (xe * xe + xs * xs) / (w * t).sin().abs();
            prop_assert!((v - oracle).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn lin_term_examples() {
        assert_eq!(lin_term(0.0, 0.3, 1.0, 2.0, 1.0, 1.0, 0.01, 0.5).unwrap(), 0.0);
        let v = lin_term(0.8, FRAC_PI_2, 1.3, 0.4, 1.0, FRAC_PI_2, 0.01, 0.5).unwrap();
        assert!((v + 0.01 * 0.5 * 0.8 * 1.3).abs() < 1e-15);
    }

    #[test]
    fn s_int_examples() {
        let w = 1.0;
        let schedule = CollisionSchedule::with_ratio_limit(PI, 0.01, alloc::vec![w], 0.1).unwrap();
        let b = bath(1, 0.6, w, Temperature::Zero);
        let mesh = TimeMesh::new(3, 1.5 * PI).unwrap();
        let zero = DiscretePath::constant(mesh, 0.0).unwrap();
        assert_eq!(s_int_collision(&zero, &schedule, &b, &[0.4], &[0.9]).unwrap(), 0.0);
        let mesh = TimeMesh::new(6, 1.5 * PI).unwrap();
        let path = DiscretePath::from_fn(mesh, |t| 0.2 + t).unwrap();
        let v = s_int_collision(&path, &schedule, &b, &[0.4], &[0.9]).unwrap();
        let want = 0.01 * 0.6 * (0.2 + PI) * 0.9;
        assert!((v - want).abs() < 1e-12, "{v} vs {want}");
        let off = TimeMesh::new(7, 1.5 * PI).unwrap();
        let path = DiscretePath::constant(off, 1.0).unwrap();
        assert!(matches!(
            s_int_collision(&path, &schedule, &b, &[0.4], &[0.9]),
            Err(Error::MeshAlignment { .. })
        ));
    }

    #[test]
    fn s_int_matches_windowed_interaction_integral() {
        let (tau, eps, n, w) = (1.0, 0.01, 5, 1.3);
        let schedule = CollisionSchedule::new(tau, eps, n, w).unwrap();
        let b = BathSpec::new(1.0, alloc::vec![w; n], alloc::vec![0.5, -0.2, 0.8, 0.1, 0.3], Temperature::Zero, 1.0).unwrap();
        let t = schedule.t_total();
        let mesh = TimeMesh::new(50, t).unwrap();
        let x = |t: f64| 0.4 + 0.3 * (0.7 * t).sin();
        let path = DiscretePath::from_fn(mesh, x).unwrap();
        let xe = [0.3, -0.5, 1.1, 0.2, -0.9];
        let xs = [0.8, 0.1, -0.4, 0.6, 0.5];
        let v = s_int_collision(&path, &schedule, &b, &xe, &xs).unwrap();
        let mut oracle = 0.0;
        let sub = 400;
        for i in 0..n {
            let cl = classical_solution(xs[i], xe[i], w, t).unwrap();
            let h = eps / sub as f64;
            for k in 0..sub {
                let tp = schedule.time(i + 1) - 0.5 * eps + (k as f64 + 0.5) * h;
                oracle -= b.couplings()[i] * x(tp) * cl.at(tp) * h;
            }
        }
        assert!(((v - oracle) / oracle).abs() < 1e-3, "{v} vs {oracle}");
    }

    #[test]
    fn fluct_examples() {
        let (w, t, m, c) = (1.1, 2.0, 0.8, 0.6);
        let mesh = TimeMesh::new(1000, t).unwrap();
        let zero = DiscretePath::constant(mesh, 0.0).unwrap();
        assert_eq!(fluct_term(&zero, w, t, m, c).unwrap(), 0.0);
        let a = 0.7;
        let path = DiscretePath::constant(mesh, a).unwrap();
        let got = fluct_term(&path, w, t, m, c).unwrap();
        let (s, cs) = (w * t).sin_cos();
        let inner = ((1.0 - cs) / w - 0.5 * t * s) / w;
        let want = a * a * c * c / (m * w * s) * inner;
        assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        let doubled = fluct_term(&path.scaled(2.0), w, t, m, c).unwrap();
        assert!((doubled - 4.0 * got).abs() < 1e-12 * got.abs());
        let short = DiscretePath::constant(TimeMesh::new(8, t).unwrap(), a).unwrap();
        assert!(matches!(fluct_term(&short, w, t, m, c), Err(Error::Validation(_))));
    }

    #[test]
    fn extraction_examples() {
        let w = 1.0;
        let schedule = CollisionSchedule::with_ratio_limit(FRAC_PI_4, 0.01, alloc::vec![w; 2], 0.1).unwrap();
        let cold = bath(2, 0.5, w, Temperature::Zero);
        let e = extract_lindblad(&schedule, &cold, 1.0).unwrap();
        assert!(e.gamma[0].abs() < 1e-18);
        let pref = 0.01f64.powi(2) * 0.25 / 4.0;
        assert!((e.gamma[1] - pref * (2.0 * FRAC_PI_2).cos()).abs() < 1e-18);
        assert_eq!(e.negative_gamma, alloc::vec![2]);
        assert!(!e.is_completely_positive());
        assert!(!e.index_pairing_caveat);
    }

    #[test]
    fn extraction_is_quadratic_in_epsilon_and_coupling() {
        let schedule = CollisionSchedule::new(0.9, 0.03, 4, 1.2).unwrap();
        let b = bath(4, 0.4, 1.2, Temperature::Finite { kt: 0.7 });
        let base = extract_lindblad(&schedule, &b, 3.6).unwrap();
        let eps2 = extract_lindblad(&schedule.with_epsilon(0.06).unwrap(), &b, 3.6).unwrap();
        let c2 = extract_lindblad(&schedule, &b.scaled_couplings(2.0).unwrap(), 3.6).unwrap();
        for i in 0..4 {
            for (x, y) in [(eps2.phi[i], base.phi[i]), (eps2.gamma[i], base.gamma[i]), (c2.phi[i], base.phi[i]), (c2.gamma[i], base.gamma[i])] {
                assert!((x - 4.0 * y).abs() <= 1e-14 * y.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn decay_scales_with_coth_across_temperatures() {
        let schedule = CollisionSchedule::new(0.9, 0.03, 3, 1.2).unwrap();
        let (k1, k2) = (0.8, 5.0);
        let a = extract_lindblad(&schedule, &bath(3, 0.4, 1.2, Temperature::Finite { kt: k1 }), 2.7).unwrap();
        let b = extract_lindblad(&schedule, &bath(3, 0.4, 1.2, Temperature::Finite { kt: k2 }), 2.7).unwrap();
        let want = coth(1.2 / (2.0 * k2)) / coth(1.2 / (2.0 * k1));
        for i in 0..3 {
            assert!((b.gamma[i] / a.gamma[i] - want).abs() < 1e-10);
            assert_eq!(a.phi[i], b.phi[i]);
        }
    }

    #[test]
    fn multi_frequency_examples() {
        let base = CollisionSchedule::new(0.9, 0.03, 4, 1.2).unwrap();
        let b = bath(4, 0.4, 1.2, Temperature::Finite { kt: 0.7 });
        let same = multi_frequency_schedule(&[1.2; 4], &base).unwrap();
        assert_eq!(extract_lindblad(&same, &b, 3.6).unwrap(), extract_lindblad(&base, &b, 3.6).unwrap());
        let mixed = multi_frequency_schedule(&[1.2, 0.7, 1.2, 0.7], &base).unwrap();
        let e = extract_lindblad(&mixed, &b, 3.6).unwrap();
        assert!(e.index_pairing_caveat);
        let only_07 = extract_lindblad(&multi_frequency_schedule(&[0.7; 4], &base).unwrap(), &b, 3.6).unwrap();
        let only_12 = extract_lindblad(&base, &b, 3.6).unwrap();
        for i in 0..4 {
            let want = if i % 2 == 0 { only_12.gamma[i] } else { only_07.gamma[i] };
            assert_eq!(e.gamma[i], want);
        }
        assert!(matches!(multi_frequency_schedule(&[1.0; 3], &base), Err(Error::Shape { .. })));
    }

    #[test]
    fn zero_coupling_reduces_to_closed() {
        let grid = PositionGrid::symmetric(4, 1.5).unwrap();
        let spec = SystemSpec::harmonic(1.0, 1.0, 1.0).unwrap();
        let schedule = CollisionSchedule::new(0.4, 0.02, 3, 1.0).unwrap();
        let mesh = TimeMesh::new(3, 1.2).unwrap();
        let me = assemble_j_me(&grid, &mesh, &spec, &bath(3, 0.0, 1.0, Temperature::Finite { kt: 1.0 }), &schedule).unwrap();
        let closed = j_closed(&grid, &spec, 1.2, 3, GridKernel::Analytic).unwrap();
        let scale = closed.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(me.max_abs_diff(&closed).unwrap() < 1e-12 * scale);
    }

    #[test]
    fn markov_blocks_are_local_to_collision_times() {
        let grid = PositionGrid::symmetric(5, 1.0).unwrap();
        let spec = SystemSpec::harmonic(1.0, 1.0, 1.0).unwrap();
        let schedule = CollisionSchedule::new(0.3, 0.02, 2, 1.0).unwrap();
        let mesh = TimeMesh::new(4, 0.6).unwrap();
        let b = bath(2, 0.8, 1.0, Temperature::Finite { kt: 1.0 });
        let e = CollisionExponent::new(&grid, &mesh, &spec, &b, &schedule, GridKernel::Analytic, DeltaWeight::Unit).unwrap();
        let mut x = alloc::vec![0.5, -0.5, 1.0, 0.5, -1.0];
        let mut y = alloc::vec![1.0, 0.5, -0.5, 0.0, 0.5];
        assert!(e.markov_exponent(&x, &y).norm() > 0.0);
        let fluct = e.fluct_exponent(&x, &y);
        for k in schedule.mesh_indices(&mesh).unwrap() {
            x[k] = 0.0;
            y[k] = 0.0;
        }
        assert_eq!(e.markov_exponent(&x, &y), Complex64::new(0.0, 0.0));
        assert_ne!(e.fluct_exponent(&x, &y), fluct);
        let x2 = alloc::vec![0.5, -0.5, 0.0, 0.5, 0.0];
        let y2 = alloc::vec![1.0, 0.5, 0.0, 0.0, 0.0];
        assert_eq!(e.fluct_exponent(&x, &y), e.fluct_exponent(&x2, &y2));
    }
}
