//! Independent reference engines: exact Gaussian dynamics of system plus
//! bath, a brute-force repeated-interaction channel, exhaustive path sums,
//! and a Fock-sum Gibbs density.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;
use crate::bath::{BathSpec, Temperature};
use crate::closed_system::{position_hamiltonian, position_operator, unitary, Potential, SystemSpec};
use crate::collision::CollisionSchedule;
use crate::numerics::{eigh, hermiticity_defect, kron, partial_trace_second, ComplexMatrix, PositionGrid, TimeMesh};
use crate::path_sum::{check_tractable, PathPairExponent};
use crate::tensor::{PropagatorTensor, TensorVariant};
use crate::{Error, Result};

/// Largest thermal population an ancilla may leave above its cutoff.
pub const LEAKAGE_LIMIT: f64 = 1e-6;
/// Largest Fock cutoff for an ancilla.
pub const MAX_ANCILLA_DIM: usize = 16;
/// Largest system dimension in the repeated-interaction channel.
pub const MAX_SYSTEM_DIM: usize = 32;
/// Largest number of path pairs for [`brute_force_path_sum`].
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

/// Means and symmetrized covariances of `(x, X_1..X_N, p, P_1..P_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    hbar: f64,
}

fn omega_matrix(n: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        o[(i, n + i)] = 1.0;
        o[(n + i, i)] = -1.0;
    }
    o
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, hbar: f64) -> Result<Self> {
        let d = mean.len();
        if d == 0 || d % 2 != 0 || cov.nrows() != d || cov.ncols() != d {
            return Err(Error::shape(
                "GaussianState::new",
                "even-length mean and matching square covariance",
                format!("mean {d}, covariance {}x{}", cov.nrows(), cov.ncols()),
            ));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::Validation(format!("covariance not symmetric (defect {asym:e})")));
        }
        let n = d / 2;
        let o = omega_matrix(n);
        let m = ComplexMatrix::from_fn(d, d, |i, j| Complex64::new(cov[(i, j)], 0.5 * hbar * o[(i, j)]));
        let min = eigh(&m)?.values.into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::Validation(format!(
                "covariance violates the uncertainty bound (min eigenvalue {min:e})"
            )));
        }
        Ok(Self { mean, cov, hbar })
    }

    /// System state `(mean, cov)` in `(x, p)` times the thermal state of every
    /// bath oscillator.
    pub fn thermal_product(system_mean: [f64; 2], system_cov: [[f64; 2]; 2], bath: &BathSpec) -> Result<Self> {
        let n = bath.len() + 1;
        let hbar = bath.hbar();
        let mut mean = DVector::zeros(2 * n);
        mean[0] = system_mean[0];
        mean[n] = system_mean[1];
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        cov[(0, 0)] = system_cov[0][0];
        cov[(0, n)] = system_cov[0][1];
        cov[(n, 0)] = system_cov[1][0];
        cov[(n, n)] = system_cov[1][1];
        for i in 0..bath.len() {
            let (m, w) = (bath.mass(), bath.omegas()[i]);
            let k = bath.coth_factor(i);
            cov[(i + 1, i + 1)] = hbar / (2.0 * m * w) * k;
            cov[(n + i + 1, n + i + 1)] = 0.5 * hbar * m * w * k;
        }
        Self::new(mean, cov, hbar)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Number of degrees of freedom, system included.
    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn system_position_variance(&self) -> f64 {
        self.cov[(0, 0)]
    }

    pub fn system_momentum_variance(&self) -> f64 {
        let n = self.modes();
        self.cov[(n, n)]
    }

    /// `<H>` for the quadratic form `H = z^T h z / 2`.
    pub fn energy(&self, h: &DMatrix<f64>) -> f64 {
        0.5 * ((h * &self.cov).trace() + self.mean.dot(&(h * &self.mean)))
    }
}

/// Hessian of the total Hamiltonian with coupling `+x sum c_i X_i`.
pub fn total_hamiltonian_matrix(spec: &SystemSpec, bath: &BathSpec) -> Result<DMatrix<f64>> {
    let k0 = match spec.potential {
        Potential::Free => 0.0,
        Potential::Harmonic { omega } => spec.mass * omega * omega,
        _ => {
            return Err(Error::Unsupported(
                "Gaussian dynamics needs a free or harmonic potential".into(),
            ))
        }
    };
    let n = bath.len() + 1;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h[(0, 0)] = k0;
    h[(n, n)] = 1.0 / spec.mass;
    for i in 0..bath.len() {
        let (m, w, c) = (bath.mass(), bath.omegas()[i], bath.couplings()[i]);
        h[(i + 1, i + 1)] = m * w * w;
        h[(0, i + 1)] = c;
        h[(i + 1, 0)] = c;
        h[(n + i + 1, n + i + 1)] = 1.0 / m;
    }
    Ok(h)
}

/// `exp(t Omega H)`
pub fn symplectic_propagator(spec: &SystemSpec, bath: &BathSpec, t: f64) -> Result<DMatrix<f64>> {
    let h = total_hamiltonian_matrix(spec, bath)?;
    let n = bath.len() + 1;
    crate::numerics::expm_real(&(omega_matrix(n) * h * t))
}

pub fn gaussian_evolve(state: &GaussianState, spec: &SystemSpec, bath: &BathSpec, t: f64) -> Result<GaussianState> {
    if state.modes() != bath.len() + 1 {
        return Err(Error::shape(
            "gaussian_evolve",
            format!("{} modes", bath.len() + 1),
            state.modes(),
        ));
    }
    let s = symplectic_propagator(spec, bath, t)?;
    let cov = &s * &state.cov * s.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianState {
        mean: &s * &state.mean,
        cov,
        hbar: state.hbar,
    })
}

/// `<F(t1) F(t2)>` for `F = sum_i c_i X_i` in the thermal bath state, from
/// the Heisenberg operators `X(t) = X cos(wt) + P sin(wt) / (m w)` and the
/// thermal moments `<X^2>`, `<P^2>`, `<XP> = i hbar / 2`.
pub fn bath_force_correlator(bath: &BathSpec, t1: f64, t2: f64) -> Complex64 {
    let hbar = bath.hbar();
    let m = bath.mass();
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..bath.len() {
        let (w, c) = (bath.omegas()[i], bath.couplings()[i]);
        let k = bath.coth_factor(i);
        let xx = hbar / (2.0 * m * w) * k;
        let pp = 0.5 * hbar * m * w * k;
        let xp = Complex64::new(0.0, 0.5 * hbar);
        let px = Complex64::new(0.0, -0.5 * hbar);
        let (s1, c1) = (w * t1).sin_cos();
        let (s2, c2) = (w * t2).sin_cos();
        let corr = xx * c1 * c2 + pp / (m * m * w * w) * s1 * s2 + (xp * c1 * s2 + px * s1 * c2) / (m * w);
        total += c * c * corr;
    }
    total
}

/// Normalized thermal density `rho(x_j, x_k)` of one oscillator as a Fock
/// sum over Hermite functions.
pub fn gibbs_position_matrix(omega: f64, mass: f64, temperature: Temperature, hbar: f64, x: &[f64]) -> Result<DMatrix<f64>> {
    let r = match temperature {
        Temperature::Zero => f64::INFINITY,
        Temperature::Finite { kt } => hbar * omega / kt,
    };
    let n_max = if r.is_infinite() {
        1
    } else {
        let n = (40.0 / r).ceil() as usize + 1;
        if n > 4000 {
            return Err(Error::Range {
                index: 0,
                detail: format!("Fock sum needs {n} terms at hbar omega / kT = {r}"),
            });
        }
        n
    };
    let scale = (mass * omega / hbar).sqrt();
    let basis: Vec<Vec<f64>> = x
        .iter()
        .map(|&xi| {
            let xi = scale * xi;
            let mut psi = vec![0.0; n_max];
            psi[0] = core::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
            if n_max > 1 {
                psi[1] = 2f64.sqrt() * xi * psi[0];
            }
            for n in 1..n_max - 1 {
                let nf = n as f64;
                psi[n + 1] = (2.0 / (nf + 1.0)).sqrt() * xi * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
            }
            psi.iter().map(|v| v * scale.sqrt()).collect()
        })
        .collect();
    let weights: Vec<f64> = (0..n_max)
        .map(|n| if r.is_infinite() { 1.0 } else { (-(n as f64) * r).exp() * (1.0 - (-r).exp()) })
        .collect();
    Ok(DMatrix::from_fn(x.len(), x.len(), |j, k| {
        (0..n_max).map(|n| weights[n] * basis[j][n] * basis[k][n]).sum()
    }))
}

/// Harmonic ancilla truncated to its lowest `dim` Fock states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedOscillator {
    dim: usize,
    omega: f64,
    mass: f64,
    temperature: Temperature,
    hbar: f64,
}

impl TruncatedOscillator {
    pub fn new(dim: usize, omega: f64, mass: f64, temperature: Temperature, hbar: f64) -> Result<Self> {
        if !(omega > 0.0 && mass > 0.0 && hbar > 0.0) {
            return Err(Error::Validation(format!(
                "ancilla needs omega, mass, hbar > 0, got {omega}, {mass}, {hbar}"
            )));
        }
        if !(2..=MAX_ANCILLA_DIM).contains(&dim) {
            return Err(Error::Validation(format!(
                "ancilla dimension must lie in 2..={MAX_ANCILLA_DIM}, got {dim}"
            )));
        }
        let osc = Self {
            dim,
            omega,
            mass,
            temperature,
            hbar,
        };
        let leakage = osc.leakage();
        if leakage >= LEAKAGE_LIMIT {
            return Err(Error::Leakage {
                dim,
                leakage,
                limit: LEAKAGE_LIMIT,
            });
        }
        Ok(osc)
    }

    /// Smallest cutoff of at least 4 levels whose thermal leakage is below
    /// a tenth of [`LEAKAGE_LIMIT`].
    pub fn auto(omega: f64, mass: f64, temperature: Temperature, hbar: f64) -> Result<Self> {
        let probe = Self {
            dim: MAX_ANCILLA_DIM,
            omega,
            mass,
            temperature,
            hbar,
        };
        let dim = (4..=MAX_ANCILLA_DIM)
            .find(|&d| Self { dim: d, ..probe }.leakage() < 0.1 * LEAKAGE_LIMIT)
            .ok_or(Error::Leakage {
                dim: MAX_ANCILLA_DIM,
                leakage: probe.leakage(),
                limit: 0.1 * LEAKAGE_LIMIT,
            })?;
        Self::new(dim, omega, mass, temperature, hbar)
    }

    /// Same cutoff rule at another frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::auto(omega, self.mass, self.temperature, self.hbar)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn temperature(&self) -> Temperature {
        self.temperature
    }

    /// `hbar omega / kT`, infinite at zero temperature.
    pub fn thermal_ratio(&self) -> f64 {
        match self.temperature {
            Temperature::Zero => f64::INFINITY,
            Temperature::Finite { kt } => self.hbar * self.omega / kt,
        }
    }

    /// Thermal population above the cutoff, `exp(-dim hbar omega / kT)`.
    pub fn leakage(&self) -> f64 {
        (-(self.dim as f64) * self.thermal_ratio()).exp()
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, self.dim, |i, j| {
            if i == j {
                Complex64::new(self.hbar * self.omega * (i as f64 + 0.5), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `sqrt(hbar / 2 m w)(a + a^dagger)`
    pub fn position(&self) -> ComplexMatrix {
        let s = (self.hbar / (2.0 * self.mass * self.omega)).sqrt();
        ComplexMatrix::from_fn(self.dim, self.dim, |i, j| {
            if i + 1 == j {
                Complex64::new(s * (j as f64).sqrt(), 0.0)
            } else if j + 1 == i {
                Complex64::new(s * (i as f64).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Thermal state renormalized on the kept levels.
    pub fn thermal_state(&self) -> ComplexMatrix {
        let r = self.thermal_ratio();
        let p: Vec<f64> = (0..self.dim)
            .map(|n| if r.is_infinite() { if n == 0 { 1.0 } else { 0.0 } } else { (-(n as f64) * r).exp() })
            .collect();
        let z: f64 = p.iter().sum();
        ComplexMatrix::from_fn(self.dim, self.dim, |i, j| {
            if i == j {
                Complex64::new(p[i] / z, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// System Hamiltonian and position operator in a finite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemBasis {
    h: ComplexMatrix,
    x: ComplexMatrix,
    hbar: f64,
}

impl SystemBasis {
    pub fn new(h: ComplexMatrix, x: ComplexMatrix, hbar: f64) -> Result<Self> {
        let d = h.nrows();
        if d == 0 || d > MAX_SYSTEM_DIM || h.ncols() != d || x.shape() != (d, d) {
            return Err(Error::shape(
                "SystemBasis::new",
                format!("two square matrices of equal size <= {MAX_SYSTEM_DIM}"),
                format!("{:?} and {:?}", h.shape(), x.shape()),
            ));
        }
        for (name, m) in [("Hamiltonian", &h), ("position", &x)] {
            let defect = hermiticity_defect(m);
            if defect > 1e-12 {
                return Err(Error::Validation(format!("{name} is not Hermitian (defect {defect:e})")));
            }
        }
        Ok(Self { h, x, hbar })
    }

    /// Position basis of `grid` with the grid Hamiltonian of `spec`.
    pub fn on_grid(grid: &PositionGrid, spec: &SystemSpec) -> Result<Self> {
        Self::new(position_hamiltonian(spec, grid), position_operator(grid), spec.hbar)
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn position(&self) -> &ComplexMatrix {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

/// Output of [`repeated_interaction_sim`].
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedInteractionRun {
    /// `rho_s` before the first collision and after each one.
    pub snapshots: Vec<ComplexMatrix>,
    /// Basis pair whose coherence is tracked.
    pub pair: (usize, usize),
    /// Per collision, `ln|rho_ab|` after the coupled step minus `ln|rho_ab|`
    /// after the same step with the coupling switched off.
    pub coherence_shift: Vec<f64>,
    /// `-hbar * shift / (x_a - x_b)^2` with `x` read off the diagonal of the
    /// position operator.
    pub decay_rate: Vec<f64>,
    pub ancilla_dims: Vec<usize>,
}

/// Stroboscopic channel: before each collision evolve freely for
/// `tau - epsilon`, then apply `exp(-i(H_s + H_A + c x X) epsilon / hbar)` with
/// a fresh thermal ancilla and trace it out.
pub fn repeated_interaction_sim(
    rho_s: &ComplexMatrix,
    system: &SystemBasis,
    ancilla: &TruncatedOscillator,
    c: f64,
    schedule: &CollisionSchedule,
    pair: (usize, usize),
) -> Result<RepeatedInteractionRun> {
    let ds = system.dim();
    if rho_s.shape() != (ds, ds) {
        return Err(Error::shape("repeated_interaction_sim", format!("{ds}x{ds}"), format!("{:?}", rho_s.shape())));
    }
    if pair.0 >= ds || pair.1 >= ds || pair.0 == pair.1 {
        return Err(Error::Range {
            index: pair.0.max(pair.1),
            detail: format!("coherence pair {pair:?} must be two distinct indices below {ds}"),
        });
    }
    let hbar = system.hbar;
    let eps = schedule.epsilon();
    let free_gap = unitary(&system.h, schedule.tau() - eps, hbar)?;
    let free_eps = unitary(&system.h, eps, hbar)?;
    let id_s = ComplexMatrix::identity(ds, ds);
    let dx = system.x[(pair.0, pair.0)].re - system.x[(pair.1, pair.1)].re;

    let mut cache: Vec<(f64, TruncatedOscillator, ComplexMatrix)> = Vec::new();
    let mut rho = rho_s.clone();
    let mut snapshots = vec![rho.clone()];
    let mut shifts = Vec::with_capacity(schedule.len());
    let mut dims = Vec::with_capacity(schedule.len());
    for i in 1..=schedule.len() {
        let w = schedule.omega(i);
        if !cache.iter().any(|(cw, _, _)| *cw == w) {
            let osc = if w == ancilla.omega { *ancilla } else { ancilla.with_omega(w)? };
            let da = osc.dim();
            let id_a = ComplexMatrix::identity(da, da);
            let h = kron(&system.h, &id_a) + kron(&id_s, &osc.hamiltonian()) + kron(&system.x, &osc.position()) * Complex64::new(c, 0.0);
            cache.push((w, osc, unitary(&h, eps, hbar)?));
        }
        let (_, osc, u) = cache.iter().find(|(cw, _, _)| *cw == w).unwrap();
        let da = osc.dim();
        let pre = &free_gap * &rho * free_gap.adjoint();
        let joint = kron(&pre, &osc.thermal_state());
        let joint = u * joint * u.adjoint();
        let top: f64 = (0..ds).map(|s| joint[(s * da + da - 1, s * da + da - 1)].re).sum();
        if top >= LEAKAGE_LIMIT {
            return Err(Error::Leakage {
                dim: da,
                leakage: top,
                limit: LEAKAGE_LIMIT,
            });
        }
        let next = partial_trace_second(&joint, ds, da)?;
        let reference = &free_eps * &pre * free_eps.adjoint();
        let shift = next[pair].norm().ln() - reference[pair].norm().ln();
        shifts.push(shift);
        dims.push(da);
        rho = next;
        snapshots.push(rho.clone());
    }
    let decay_rate = shifts.iter().map(|s| -hbar * s / (dx * dx)).collect();
    Ok(RepeatedInteractionRun {
        snapshots,
        pair,
        coherence_shift: shifts,
        decay_rate,
        ancilla_dims: dims,
    })
}

/// Literal enumeration of every path pair on a grid of at most 4 points and
/// a mesh of at most 3 slices. Entries are visited in `(a, b, c, d)` order,
/// x-paths outside y-paths, first intermediate point outermost.
pub fn brute_force_path_sum<E: PathPairExponent + ?Sized>(
    grid: &PositionGrid,
    mesh: &TimeMesh,
    variant: TensorVariant,
    exponent: &E,
) -> Result<PropagatorTensor> {
    enumerate(grid, mesh, variant, exponent, false)
}

fn enumerate<E: PathPairExponent + ?Sized>(
    grid: &PositionGrid,
    mesh: &TimeMesh,
    variant: TensorVariant,
    exponent: &E,
    reversed: bool,
) -> Result<PropagatorTensor> {
    let (n, steps) = (grid.len(), mesh.n_steps());
    if n > 4 || steps > 3 {
        return Err(Error::Size {
            count: crate::path_sum::path_pair_count(n, steps),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    check_tractable(n, steps, BRUTE_FORCE_LIMIT)?;

    struct Walk<'a, E: ?Sized> {
        n: usize,
        steps: usize,
        reversed: bool,
        exponent: &'a E,
        x: Vec<usize>,
        y: Vec<usize>,
        acc: Complex64,
    }

    impl<E: PathPairExponent + ?Sized> Walk<'_, E> {
        fn pick(&self, k: usize) -> usize {
            if self.reversed {
                self.n - 1 - k
            } else {
                k
            }
        }

        fn x_level(&mut self, level: usize) {
            if level == self.steps {
                self.y_level(1);
                return;
            }
            for k in 0..self.n {
                self.x[level] = self.pick(k);
                self.x_level(level + 1);
            }
        }

        fn y_level(&mut self, level: usize) {
            if level == self.steps {
                self.acc += self.exponent.exponent(&self.x, &self.y).exp();
                return;
            }
            for k in 0..self.n {
                self.y[level] = self.pick(k);
                self.y_level(level + 1);
            }
        }
    }

    let mut walk = Walk {
        n,
        steps,
        reversed,
        exponent,
        x: vec![0; steps + 1],
        y: vec![0; steps + 1],
        acc: Complex64::new(0.0, 0.0),
    };
    let mut entries = Vec::with_capacity(n.pow(4));
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    walk.x[0] = c;
                    walk.x[steps] = a;
                    walk.y[0] = d;
                    walk.y[steps] = b;
                    walk.acc = Complex64::new(0.0, 0.0);
                    walk.x_level(1);
                    entries.push(walk.acc);
                }
            }
        }
    }
    PropagatorTensor::dense(*grid, mesh.t_total(), variant, entries)
}
