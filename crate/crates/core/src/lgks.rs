//! Lindblad (LGKS) dynamics, the effective-Hamiltonian form, and the
//! memory-augmented "Lindblad Plus" equation.
//!
//! Right-hand sides are returned as `drho/dt`, i.e. already divided by `i hbar`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;
use crate::bath::BathSpec;
use crate::numerics::{
    anticommutator, commutator, eigh, hermiticity_defect, hermitize, re, require_hermitian,
    require_square, rk4_step_t, trace, ComplexMatrix, TimeMesh, I,
};
use crate::{Error, Result};

/// Hamiltonian, Lindblad operators and `hbar`.
#[derive(Debug, Clone)]
pub struct LindbladOperatorSet {
    h: ComplexMatrix,
    l_ops: Vec<ComplexMatrix>,
    hbar: f64,
}

impl LindbladOperatorSet {
    pub fn new(h: ComplexMatrix, l_ops: Vec<ComplexMatrix>, hbar: f64) -> Result<Self> {
        let n = require_square(&h, "LindbladOperatorSet")?;
        require_hermitian(&h, 1e-10, "LindbladOperatorSet")?;
        for (k, l) in l_ops.iter().enumerate() {
            if l.shape() != (n, n) {
                return Err(Error::shape(
                    "LindbladOperatorSet",
                    format!("{n}x{n} for L[{k}]"),
                    format!("{}x{}", l.nrows(), l.ncols()),
                ));
            }
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Validation(format!("hbar must be > 0, got {hbar}")));
        }
        Ok(Self { h, l_ops, hbar })
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn l_ops(&self) -> &[ComplexMatrix] {
        &self.l_ops
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn check_state(&self, rho: &ComplexMatrix, context: &'static str) -> Result<()> {
        let n = self.dim();
        if rho.shape() != (n, n) {
            return Err(Error::shape(
                context,
                format!("{n}x{n}"),
                format!("{}x{}", rho.nrows(), rho.ncols()),
            ));
        }
        Ok(())
    }
}

/// Unvalidated Lindblad generator.
fn generator(ops: &LindbladOperatorSet, rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = commutator(&ops.h, rho) * (-I / ops.hbar);
    for l in &ops.l_ops {
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += (l * rho * &ld - anticommutator(&ldl, rho) * re(0.5)) * re(1.0 / ops.hbar);
    }
    out
}

/// `(-i/hbar)[H, rho] + (1/hbar) sum_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2)`.
///
/// `rho` must be Hermitian with unit trace to 1e-8.
pub fn lindblad_rhs(ops: &LindbladOperatorSet, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    ops.check_state(rho, "lindblad_rhs")?;
    let scale = rho.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    if hermiticity_defect(rho) > 1e-8 * scale {
        return Err(Error::Validation("lindblad_rhs: rho is not Hermitian".into()));
    }
    let tr = trace(rho);
    if (tr - 1.0).norm() > 1e-8 {
        return Err(Error::Validation(format!("lindblad_rhs: trace of rho is {tr}")));
    }
    Ok(generator(ops, rho))
}

/// `H - (i/2) sum_k L_k^dag L_k`
pub fn h_eff(ops: &LindbladOperatorSet) -> ComplexMatrix {
    let mut out = ops.h.clone();
    for l in &ops.l_ops {
        out -= (l.adjoint() * l) * (I * 0.5);
    }
    out
}

/// The same generator written as `(H_eff rho - rho H_eff^dag + i sum L rho L^dag) / (i hbar)`.
pub fn lindblad_rhs_heff_form(ops: &LindbladOperatorSet, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    ops.check_state(rho, "lindblad_rhs_heff_form")?;
    let heff = h_eff(ops);
    let mut acc = &heff * rho - rho * heff.adjoint();
    for l in &ops.l_ops {
        acc += (l * rho * l.adjoint()) * I;
    }
    Ok(acc * (-I / ops.hbar))
}

/// How `N^delta` relates to `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NDeltaChoice {
    /// `N^delta = N^dag`: the sandwich coefficient is `|A|^2 + |B|^2`.
    #[default]
    Adjoint,
    /// `N^delta` carries the unconjugated coefficients: `A^2 + B^2`.
    Unconjugated,
}

impl NDeltaChoice {
    pub fn name(self) -> &'static str {
        match self {
            NDeltaChoice::Adjoint => "adjoint",
            NDeltaChoice::Unconjugated => "unconjugated",
        }
    }
}

/// Sign convention of the stored kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelOrientation {
    /// Kernels enter `i hbar drho/dt` with a plus sign.
    #[default]
    Generator,
    /// Kernels are the coefficients of the path-integral exponent
    /// `(i/hbar) int int [M(x) - M^dag(y) + N(x) N^delta(y)]`, which enter the
    /// generator with the opposite sign.
    PathExponent,
}

type Coefficient = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Memory kernels `M(t', t'') = m(t' - t'') X X` and
/// `N N^delta = (A X, B X) . (A X, B X)^delta` for a coupling operator `X`.
#[derive(Clone)]
pub struct MemoryKernelSet {
    m: Coefficient,
    a_sq: Coefficient,
    b_sq: Coefficient,
    coupling: Option<ComplexMatrix>,
    n_delta: NDeltaChoice,
    orientation: KernelOrientation,
    zero_lindbladian: bool,
}

impl fmt::Debug for MemoryKernelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MemoryKernelSet")
            .field("m(0)", &(self.m)(0.0))
            .field("n_delta", &self.n_delta)
            .field("orientation", &self.orientation)
            .field("zero_lindbladian", &self.zero_lindbladian)
            .finish_non_exhaustive()
    }
}

impl MemoryKernelSet {
    /// Kernels from coefficient functions of `s = t' - t''`.
    pub fn from_coefficients(
        m: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        a_squared: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        b_squared: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        orientation: KernelOrientation,
    ) -> Self {
        Self {
            m: Arc::new(m),
            a_sq: Arc::new(a_squared),
            b_sq: Arc::new(b_squared),
            coupling: None,
            n_delta: NDeltaChoice::default(),
            orientation,
            zero_lindbladian: false,
        }
    }

    pub fn zero() -> Self {
        let z = |_: f64| Complex64::new(0.0, 0.0);
        Self::from_coefficients(z, z, z, KernelOrientation::Generator)
    }

    pub fn with_coupling(mut self, x: ComplexMatrix) -> Self {
        self.coupling = Some(x);
        self
    }

    pub fn with_n_delta(mut self, choice: NDeltaChoice) -> Self {
        self.n_delta = choice;
        self
    }

    /// Every coefficient multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let (m, a, b) = (self.m.clone(), self.a_sq.clone(), self.b_sq.clone());
        Self {
            m: Arc::new(move |s| m(s) * lambda),
            a_sq: Arc::new(move |s| a(s) * lambda),
            b_sq: Arc::new(move |s| b(s) * lambda),
            ..self.clone()
        }
    }

    pub fn coupling(&self) -> Option<&ComplexMatrix> {
        self.coupling.as_ref()
    }

    pub fn n_delta(&self) -> NDeltaChoice {
        self.n_delta
    }

    pub fn orientation(&self) -> KernelOrientation {
        self.orientation
    }

    /// True when the kernels came with no Markov (Lindblad) part.
    pub fn zero_lindbladian(&self) -> bool {
        self.zero_lindbladian
    }

    pub fn m_coefficient(&self, t1: f64, t2: f64) -> Complex64 {
        (self.m)(t1 - t2)
    }

    pub fn a_squared(&self, t1: f64, t2: f64) -> Complex64 {
        (self.a_sq)(t1 - t2)
    }

    pub fn b_squared(&self, t1: f64, t2: f64) -> Complex64 {
        (self.b_sq)(t1 - t2)
    }

    /// Principal square root of `A^2`.
    pub fn a_coeff(&self, t1: f64, t2: f64) -> Complex64 {
        self.a_squared(t1, t2).sqrt()
    }

    /// Principal square root of `B^2`.
    pub fn b_coeff(&self, t1: f64, t2: f64) -> Complex64 {
        self.b_squared(t1, t2).sqrt()
    }

    /// Coefficient of `X rho X` in `N rho N^delta`.
    pub fn sandwich_coefficient(&self, t1: f64, t2: f64) -> Complex64 {
        let (a2, b2) = (self.a_squared(t1, t2), self.b_squared(t1, t2));
        match self.n_delta {
            NDeltaChoice::Adjoint => re(a2.norm() + b2.norm()),
            NDeltaChoice::Unconjugated => a2 + b2,
        }
    }

    /// `M(t', t'') = m(t' - t'') X^2`.
    pub fn m_operator(&self, t1: f64, t2: f64) -> Result<ComplexMatrix> {
        let x = self.require_coupling()?;
        Ok((x * x) * self.m_coefficient(t1, t2))
    }

    fn require_coupling(&self) -> Result<&ComplexMatrix> {
        self.coupling
            .as_ref()
            .ok_or_else(|| Error::Validation("memory kernels have no coupling operator".into()))
    }

    fn generator_sign(&self) -> f64 {
        match self.orientation {
            KernelOrientation::Generator => 1.0,
            KernelOrientation::PathExponent => -1.0,
        }
    }
}

/// Caldeira-Leggett kernels read off the influence phase:
/// `m(s) = sum_i c_i^2/(2 m w_i)[i coth(hbar w_i/2kT) cos(w_i s) + sin(w_i s)]`,
/// `A^2(s) = sum_i c_i^2/(2 m w_i)[-i coth cos(w_i s) + sin(w_i s)]`,
/// `B^2(s) = sum_i c_i^2/(2 m w_i)[-i coth cos(w_i s) - sin(w_i s)]`.
///
/// The set is oriented as path-exponent coefficients and uses unconjugated
/// `N^delta`, so that together they reproduce the influence functional.
pub fn cl_memory_kernels(bath: &BathSpec, hbar: f64) -> Result<MemoryKernelSet> {
    if bath.is_empty() {
        return Err(Error::Validation("cl_memory_kernels needs a non-empty bath".into()));
    }
    if (hbar - bath.hbar()).abs() > 1e-12 * hbar.abs().max(1.0) {
        return Err(Error::Validation(format!(
            "hbar {hbar} disagrees with the bath's {}",
            bath.hbar()
        )));
    }
    let terms: Vec<(f64, f64, f64)> = (0..bath.len())
        .map(|i| (bath.weight(i), bath.coth_factor(i), bath.omegas()[i]))
        .collect();
    let terms = Arc::new(terms);
    let sum = |sign_cos: f64, sign_sin: f64| {
        let terms = terms.clone();
        move |s: f64| {
            terms.iter().fold(Complex64::new(0.0, 0.0), |acc, &(w8, coth, w)| {
                let (sn, cs) = (w * s).sin_cos();
                acc + Complex64::new(sign_sin * w8 * sn, sign_cos * w8 * coth * cs)
            })
        }
    };
    let mut set = MemoryKernelSet::from_coefficients(
        sum(1.0, 1.0),
        sum(-1.0, 1.0),
        sum(-1.0, -1.0),
        KernelOrientation::PathExponent,
    )
    .with_n_delta(NDeltaChoice::Unconjugated);
    set.zero_lindbladian = true;
    Ok(set)
}

/// Density matrices on a uniform time mesh, keyed by mesh index.
#[derive(Debug, Clone)]
pub struct History {
    dt: f64,
    states: BTreeMap<usize, ComplexMatrix>,
}

impl History {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Validation(format!("history spacing must be > 0, got {dt}")));
        }
        Ok(Self {
            dt,
            states: BTreeMap::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn insert(&mut self, index: usize, rho: ComplexMatrix) {
        self.states.insert(index, rho);
    }

    pub fn get(&self, index: usize) -> Result<&ComplexMatrix> {
        self.states.get(&index).ok_or(Error::MissingHistory { index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if !(k >= 0.0) || (k * self.dt - t).abs() > 1e-9 * self.dt.max(t.abs()) {
            return Err(Error::MeshAlignment { time: t });
        }
        Ok(k as usize)
    }
}

/// `int dtau [M rho(tau) - rho(tau) M^dag + N rho(tau) N^delta]` by the
/// trapezoid rule over `samples`, each `(tau, weight, rho(tau))`, as it enters
/// `i hbar drho/dt`.
fn plus_integral<'a>(
    kernels: &MemoryKernelSet,
    t: f64,
    samples: impl Iterator<Item = (f64, f64, &'a ComplexMatrix)>,
    n: usize,
) -> Result<ComplexMatrix> {
    let x = kernels.require_coupling()?;
    if x.shape() != (n, n) {
        return Err(Error::shape(
            "lindblad_plus_rhs",
            format!("{n}x{n} coupling"),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    let x2 = x * x;
    let mut acc = ComplexMatrix::zeros(n, n);
    for (tau, w, rho) in samples {
        if w == 0.0 {
            continue;
        }
        let mu = kernels.m_coefficient(t, tau);
        let sq = kernels.sandwich_coefficient(t, tau);
        let x2rho = &x2 * rho;
        let rhox2 = rho * &x2;
        let xrhox = x * rho * x;
        acc += (x2rho * mu - rhox2 * mu.conj() + xrhox * sq) * re(w);
    }
    Ok(acc * re(kernels.generator_sign()))
}

/// Lindblad Plus right-hand side at mesh time `t`: the Lindblad generator at
/// `rho(t)` plus `(1/i hbar)` times the trapezoid memory integral over the
/// history `rho(0), ..., rho(t)`.
pub fn lindblad_plus_rhs(
    ops: &LindbladOperatorSet,
    kernels: &MemoryKernelSet,
    history: &History,
    t: f64,
) -> Result<ComplexMatrix> {
    let k = history.index_of(t)?;
    let mut states = Vec::with_capacity(k + 1);
    for j in 0..=k {
        states.push(history.get(j)?);
    }
    let current = states[k];
    ops.check_state(current, "lindblad_plus_rhs")?;
    let mut out = generator(ops, current);
    if k > 0 {
        let dt = history.dt();
        let samples = states.iter().enumerate().map(|(j, rho)| {
            let w = if j == 0 || j == k { 0.5 * dt } else { dt };
            (j as f64 * dt, w, *rho)
        });
        out += plus_integral(kernels, t, samples, ops.dim())? * (-I / ops.hbar);
    }
    Ok(out)
}

/// RK4 integration of the Lindblad Plus equation on `mesh`, returning
/// `rho` at every mesh point. Inside a step the memory integral runs over the
/// stored mesh states plus a trapezoid panel ending at the stage state.
pub fn integrate_lindblad_plus(
    ops: &LindbladOperatorSet,
    kernels: &MemoryKernelSet,
    rho0: &ComplexMatrix,
    mesh: &TimeMesh,
) -> Result<Vec<ComplexMatrix>> {
    ops.check_state(rho0, "integrate_lindblad_plus")?;
    let dt = mesh.dt();
    let n = ops.dim();
    let mut states = Vec::with_capacity(mesh.n_points());
    states.push(rho0.clone());
    for step in 0..mesh.n_steps() {
        let t0 = mesh.time(step);
        let past = &states;
        let next = rk4_step_t(
            &states[step],
            t0,
            |t, rho| {
                let mut out = generator(ops, rho);
                let h = t - t0;
                let last = past.len() - 1;
                let samples = past.iter().enumerate().map(|(j, r)| {
                    let mut w = if j == 0 || j == last { 0.5 * dt } else { dt };
                    if last == 0 {
                        w = 0.0;
                    }
                    if j == last {
                        w += 0.5 * h;
                    }
                    (j as f64 * dt, w, r)
                });
                let tail = core::iter::once((t, 0.5 * h, rho));
                out += plus_integral(kernels, t, samples.chain(tail), n)? * (-I / ops.hbar);
                Ok(out)
            },
            dt,
        )?;
        states.push(next);
    }
    Ok(states)
}

/// RK4 integration of the Lindblad equation for `steps` steps of `dt`.
pub fn integrate_lindblad(
    ops: &LindbladOperatorSet,
    rho0: &ComplexMatrix,
    dt: f64,
    steps: usize,
) -> Result<ComplexMatrix> {
    ops.check_state(rho0, "integrate_lindblad")?;
    let mut rho = rho0.clone();
    for _ in 0..steps {
        rho = rk4_step_t(&rho, 0.0, |_, r| Ok(generator(ops, r)), dt)?;
    }
    Ok(rho)
}

/// Minimum eigenvalue, trace and Hermiticity defect of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub trace: Complex64,
    pub hermiticity_defect: f64,
    pub passed: bool,
}

pub fn check_positivity(rho: &ComplexMatrix, tol: f64) -> Result<PositivityReport> {
    let defect = hermiticity_defect(rho);
    let eig = eigh(&hermitize(rho)?)?;
    let min_eigenvalue = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let tr = trace(rho);
    Ok(PositivityReport {
        min_eigenvalue,
        trace: tr,
        hermiticity_defect: defect,
        passed: min_eigenvalue >= -tol && (tr - 1.0).norm() <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::Temperature;
    use crate::closed_system::von_neumann_rhs;
    use crate::numerics::hs_norm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(a: f64, b: f64) -> Complex64 {
        Complex64::new(a, b)
    }

    fn m2(v: [(f64, f64); 4]) -> ComplexMatrix {
        ComplexMatrix::from_row_iterator(2, 2, v.iter().map(|&(a, b)| c(a, b)))
    }

    fn sigma_minus() -> ComplexMatrix {
        // |g><e| with basis (e, g)
        m2([(0., 0.), (0., 0.), (1., 0.), (0., 0.)])
    }

    fn sz() -> ComplexMatrix {
        m2([(1., 0.), (0., 0.), (0., 0.), (-1., 0.)])
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        hermitize(&a).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let r = &a * a.adjoint();
        let tr = trace(&r);
        r / tr
    }

    #[test]
    fn lindblad_reduces_to_von_neumann() {
        let h = m2([(0.3, 0.), (0.1, -0.4), (0.1, 0.4), (-1.0, 0.)]);
        let ops = LindbladOperatorSet::new(h.clone(), Vec::new(), 1.0).unwrap();
        let rho = m2([(0.6, 0.), (0.2, 0.1), (0.2, -0.1), (0.4, 0.)]);
        assert_eq!(lindblad_rhs(&ops, &rho).unwrap(), von_neumann_rhs(&h, &rho, 1.0).unwrap());
    }

    #[test]
    fn amplitude_damping_rates() {
        let gamma: f64 = 0.3;
        let ops = LindbladOperatorSet::new(
            ComplexMatrix::zeros(2, 2),
            alloc::vec![sigma_minus() * re(gamma.sqrt())],
            1.0,
        )
        .unwrap();
        let excited = m2([(1., 0.), (0., 0.), (0., 0.), (0., 0.)]);
        let r = lindblad_rhs(&ops, &excited).unwrap();
        assert!((r[(0, 0)] - c(-gamma, 0.)).norm() < 1e-15);
        assert!((r[(1, 1)] - c(gamma, 0.)).norm() < 1e-15);
    }

    #[test]
    fn dephasing_fixes_the_mixed_state() {
        let ops = LindbladOperatorSet::new(ComplexMatrix::zeros(2, 2), alloc::vec![sz() * re(0.7)], 1.0).unwrap();
        let mixed = ComplexMatrix::identity(2, 2) * re(0.5);
        assert_eq!(hs_norm(&lindblad_rhs(&ops, &mixed).unwrap()), 0.0);
    }

    #[test]
    fn lindblad_rhs_validates_state() {
        let ops = LindbladOperatorSet::new(sz(), Vec::new(), 1.0).unwrap();
        assert!(matches!(
            lindblad_rhs(&ops, &ComplexMatrix::identity(2, 2)),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            lindblad_rhs(&ops, &ComplexMatrix::identity(3, 3)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn h_eff_examples() {
        let h = m2([(0.3, 0.), (0.1, -0.4), (0.1, 0.4), (-1.0, 0.)]);
        let none = LindbladOperatorSet::new(h.clone(), Vec::new(), 1.0).unwrap();
        assert_eq!(h_eff(&none), h);
        let gamma = 0.8;
        let scalar = LindbladOperatorSet::new(
            ComplexMatrix::zeros(3, 3),
            alloc::vec![ComplexMatrix::identity(3, 3) * re(f64::sqrt(gamma))],
            1.0,
        )
        .unwrap();
        let expected = ComplexMatrix::identity(3, 3) * c(0.0, -gamma / 2.0);
        assert!(hs_norm(&(h_eff(&scalar) - expected)) < 1e-15);
        let damped = LindbladOperatorSet::new(h.clone(), alloc::vec![sigma_minus()], 1.0).unwrap();
        let he = h_eff(&damped);
        let herm = (&he + he.adjoint()) * re(0.5);
        assert!(hs_norm(&(herm - h)) < 1e-15);
    }

    #[test]
    fn lindblad_invariants_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 5, 9, 16] {
            let h = random_hermitian(&mut rng, n);
            let ls: Vec<_> = (0..3)
                .map(|_| ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))))
                .collect();
            let scale = hs_norm(&h) + ls.iter().map(|l| hs_norm(l).powi(2)).sum::<f64>();
            let ops = LindbladOperatorSet::new(h, ls, 1.0).unwrap();
            let rho = random_state(&mut rng, n);
            let r = lindblad_rhs(&ops, &rho).unwrap();
            assert!(trace(&r).norm() < 1e-12 * scale * hs_norm(&rho));
            assert!(hermiticity_defect(&r) < 1e-12 * scale);
            let alt = lindblad_rhs_heff_form(&ops, &rho).unwrap();
            assert!(hs_norm(&(alt - r)) < 1e-12 * scale);
        }
    }

    #[test]
    fn rk4_semigroup_defect_is_fifth_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 3);
        let l = ComplexMatrix::from_fn(3, 3, |_, _| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
        let ops = LindbladOperatorSet::new(h, alloc::vec![l], 1.0).unwrap();
        let rho = random_state(&mut rng, 3);
        let defect = |dt: f64| {
            let two = integrate_lindblad(&ops, &rho, dt, 2).unwrap();
            let one = integrate_lindblad(&ops, &rho, 2.0 * dt, 1).unwrap();
            hs_norm(&(two - one))
        };
        let (d1, d2) = (defect(0.04), defect(0.02));
        assert!((d1 / d2).log2() > 4.5, "{d1:e} {d2:e}");
    }

    #[test]
    fn positivity_examples() {
        let r = check_positivity(&(ComplexMatrix::identity(2, 2) * re(0.5)), 1e-12).unwrap();
        assert!(r.passed && (r.min_eigenvalue - 0.5).abs() < 1e-15);
        let bad = m2([(1.1, 0.), (0., 0.), (0., 0.), (-0.1, 0.)]);
        let r = check_positivity(&bad, 1e-12).unwrap();
        assert!(!r.passed && (r.min_eigenvalue + 0.1).abs() < 1e-14);
    }

    #[test]
    fn amplitude_damping_stays_positive_under_rk4() {
        let gamma = 1.0;
        let dt = 0.01;
        let ops = LindbladOperatorSet::new(ComplexMatrix::zeros(2, 2), alloc::vec![sigma_minus()], 1.0).unwrap();
        let mut rho = m2([(0.7, 0.), (0.3, 0.2), (0.3, -0.2), (0.3, 0.)]);
        for _ in 0..10_000 {
            rho = integrate_lindblad(&ops, &rho, dt, 1).unwrap();
            assert!(check_positivity(&rho, 1e-8).unwrap().passed);
        }
        let t: f64 = 100.0 * gamma;
        assert!((rho[(0, 0)].re - 0.7 * (-t).exp()).abs() < 1e-10);
    }

    #[test]
    fn plus_with_zero_kernels_is_lindblad() {
        let ops = LindbladOperatorSet::new(sz(), alloc::vec![sigma_minus()], 1.0).unwrap();
        let kernels = MemoryKernelSet::zero().with_coupling(sz());
        let mut history = History::new(0.1).unwrap();
        let rho = m2([(0.6, 0.), (0.2, 0.1), (0.2, -0.1), (0.4, 0.)]);
        for k in 0..4 {
            history.insert(k, rho.clone());
        }
        let plus = lindblad_plus_rhs(&ops, &kernels, &history, 0.3).unwrap();
        assert!(hs_norm(&(plus - lindblad_rhs(&ops, &rho).unwrap())) < 1e-15);
        let at_zero = lindblad_plus_rhs(&ops, &kernels, &history, 0.0).unwrap();
        assert_eq!(at_zero, lindblad_rhs(&ops, &rho).unwrap());
    }

    #[test]
    fn plus_reports_history_gaps() {
        let ops = LindbladOperatorSet::new(sz(), Vec::new(), 1.0).unwrap();
        let kernels = MemoryKernelSet::zero().with_coupling(sz());
        let mut history = History::new(0.1).unwrap();
        for k in [0usize, 1, 3] {
            history.insert(k, ComplexMatrix::identity(2, 2) * re(0.5));
        }
        assert_eq!(
            lindblad_plus_rhs(&ops, &kernels, &history, 0.3).unwrap_err(),
            Error::MissingHistory { index: 2 }
        );
        assert!(matches!(
            lindblad_plus_rhs(&ops, &kernels, &history, 0.25),
            Err(Error::MeshAlignment { .. })
        ));
    }

    #[test]
    fn scalar_memory_equation_oscillates() {
        let kappa = 0.8;
        let hbar = 1.0;
        let ops = LindbladOperatorSet::new(ComplexMatrix::zeros(1, 1), Vec::new(), hbar).unwrap();
        let z = |_: f64| c(0.0, 0.0);
        let kernels = MemoryKernelSet::from_coefficients(move |_| c(0.0, -kappa), z, z, KernelOrientation::Generator)
            .with_coupling(ComplexMatrix::identity(1, 1));
        let mesh = TimeMesh::new(100, 1.0).unwrap();
        let out = integrate_lindblad_plus(&ops, &kernels, &ComplexMatrix::identity(1, 1), &mesh).unwrap();
        let exact = (f64::sqrt(2.0 * kappa / hbar) * 1.0).cos();
        let got = out.last().unwrap()[(0, 0)];
        assert!((got.re - exact).abs() < 1e-4 && got.im.abs() < 1e-12, "{got} vs {exact}");
    }

    fn bath() -> BathSpec {
        BathSpec::new(
            1.0,
            alloc::vec![0.7, 1.3, 2.1],
            alloc::vec![0.4, 0.2, -0.3],
            Temperature::Finite { kt: 0.9 },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn cl_kernel_examples() {
        let b = bath();
        let k = cl_memory_kernels(&b, 1.0).unwrap();
        assert!(k.zero_lindbladian());
        assert_eq!(k.orientation(), KernelOrientation::PathExponent);
        let at_zero: f64 = (0..3).map(|i| b.weight(i) * b.coth_factor(i)).sum();
        assert!((k.m_coefficient(0.4, 0.4) - c(0.0, at_zero)).norm() < 1e-15);
        for &s in &[0.0, 0.3, 1.7] {
            let nu = crate::bath::noise_kernel(&b, s);
            let sum = k.a_squared(s, 0.0) + k.b_squared(s, 0.0);
            assert!((sum - c(0.0, -2.0 * nu)).norm() < 1e-14);
            let a = k.a_coeff(s, 0.0);
            assert!((a * a - k.a_squared(s, 0.0)).norm() < 1e-12);
            let bb = k.b_coeff(s, 0.0);
            assert!((bb * bb - k.b_squared(s, 0.0)).norm() < 1e-12);
        }
        let single = BathSpec::new(1.0, alloc::vec![0.1], alloc::vec![1.0], Temperature::Finite { kt: 1.0 }, 1.0).unwrap();
        let ks = cl_memory_kernels(&single, 1.0).unwrap();
        let expected = single.weight(0) * 2.0 / 0.1;
        assert!((ks.m_coefficient(0.0, 0.0).im / expected - 1.0).abs() < 0.01);
        let mismatch = cl_memory_kernels(&b, 2.0);
        assert!(matches!(mismatch, Err(Error::Validation(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn plus_term_is_linear_in_kernel_scale(lambda in -3.0..3.0f64, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 3;
            let zero_ops = LindbladOperatorSet::new(ComplexMatrix::zeros(n, n), Vec::new(), 1.0).unwrap();
            let x = random_hermitian(&mut rng, n);
            let k = cl_memory_kernels(&bath(), 1.0).unwrap().with_coupling(x);
            let mut history = History::new(0.05).unwrap();
            for j in 0..6 {
                history.insert(j, random_state(&mut rng, n));
            }
            let t = 0.25;
            let base = lindblad_plus_rhs(&zero_ops, &k, &history, t).unwrap();
            let scaled = lindblad_plus_rhs(&zero_ops, &k.scaled(lambda), &history, t).unwrap();
            prop_assert!(hs_norm(&(scaled - base.clone() * re(lambda))) < 1e-12 * (1.0 + hs_norm(&base)));
        }
    }
}
