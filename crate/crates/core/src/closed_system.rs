//! Closed-system baseline: von Neumann evolution, the harmonic and free
//! propagators, and the grid density-matrix propagator `J = K conj(K)`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use core::fmt;

use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;
use crate::numerics::{
    commutator, eigh, hermitian_function, hermiticity_defect, re, require_hermitian,
    require_square, trace, ComplexMatrix, PositionGrid, I,
};
use crate::tensor::PropagatorTensor;
use crate::{Error, Result};

/// Caustic guard on `|sin(omega t)|`.
pub const CAUSTIC_TOLERANCE: f64 = 1e-9;

/// External potential `V(x)`.
#[derive(Clone)]
pub enum Potential {
    Free,
    /// `V = M omega^2 x^2 / 2`
    Harmonic { omega: f64 },
    /// `V = sum_k coeffs[k] x^k`
    Polynomial(Vec<f64>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Free => f.write_str("Free"),
            Potential::Harmonic { omega } => write!(f, "Harmonic {{ omega: {omega} }}"),
            Potential::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Potential::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Potential {
    pub fn value(&self, x: f64, mass: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => 0.5 * mass * omega * omega * x * x,
            Potential::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            Potential::Custom(v) => v(x),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Potential::Free | Potential::Harmonic { .. })
    }
}

/// The particle: mass `M`, potential `V`, and `hbar`.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub mass: f64,
    pub potential: Potential,
    pub hbar: f64,
}

impl SystemSpec {
    pub fn new(mass: f64, potential: Potential, hbar: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Validation(format!("system mass must be > 0, got {mass}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Validation(format!("hbar must be > 0, got {hbar}")));
        }
        if let Potential::Harmonic { omega } = potential {
            if !(omega > 0.0 && omega.is_finite()) {
                return Err(Error::Validation(format!(
                    "harmonic frequency must be > 0, got {omega}"
                )));
            }
        }
        Ok(Self {
            mass,
            potential,
            hbar,
        })
    }

    pub fn harmonic(mass: f64, omega: f64, hbar: f64) -> Result<Self> {
        Self::new(mass, Potential::Harmonic { omega }, hbar)
    }

    pub fn free(mass: f64, hbar: f64) -> Result<Self> {
        Self::new(mass, Potential::Free, hbar)
    }

    pub fn potential_at(&self, x: f64) -> f64 {
        self.potential.value(x, self.mass)
    }
}

/// Density matrix sampled on a grid, `values[(j, k)] = rho(x_j, y_k)`.
///
/// Values carry units of 1/length; the operator in the orthonormal grid
/// basis is `values * dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensityMatrix {
    grid: PositionGrid,
    values: ComplexMatrix,
}

impl GridDensityMatrix {
    pub fn from_values(grid: PositionGrid, values: ComplexMatrix) -> Result<Self> {
        let n = grid.len();
        if values.shape() != (n, n) {
            return Err(Error::shape(
                "GridDensityMatrix",
                format!("{n}x{n}"),
                format!("{}x{}", values.nrows(), values.ncols()),
            ));
        }
        Ok(Self { grid, values })
    }

    /// `rho(x, y) = psi(x) conj(psi(y))`, normalized so that `dx sum |psi|^2 = 1`.
    pub fn pure(grid: PositionGrid, psi: &[Complex64]) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::shape("GridDensityMatrix::pure", grid.len(), psi.len()));
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx();
        if !(norm2 > 0.0) {
            return Err(Error::Validation("wavefunction has zero norm".into()));
        }
        let s = 1.0 / norm2.sqrt();
        let n = grid.len();
        let values = ComplexMatrix::from_fn(n, n, |j, k| psi[j] * psi[k].conj() * (s * s));
        Ok(Self { grid, values })
    }

    /// From an operator in the orthonormal grid basis.
    pub fn from_operator(grid: PositionGrid, op: &ComplexMatrix) -> Result<Self> {
        Self::from_values(grid, op * re(1.0 / grid.dx()))
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn values(&self) -> &ComplexMatrix {
        &self.values
    }

    pub fn to_operator(&self) -> ComplexMatrix {
        &self.values * re(self.grid.dx())
    }

    /// `dx * sum_j rho(x_j, x_j)`
    pub fn trace(&self) -> Complex64 {
        trace(&self.values) * self.grid.dx()
    }

    /// Largest `|rho(x, y) - conj(rho(y, x))|` relative to the largest entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.values.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if scale == 0.0 {
            0.0
        } else {
            hermiticity_defect(&self.values) / scale
        }
    }

    /// `<x^2> = dx sum_j x_j^2 rho(x_j, x_j)`
    pub fn second_moment(&self) -> f64 {
        let dx = self.grid.dx();
        (0..self.grid.len())
            .map(|j| {
                let x = self.grid.point(j);
                x * x * self.values[(j, j)].re
            })
            .sum::<f64>()
            * dx
    }

    /// Hilbert-Schmidt distance in continuum normalization, `dx * ||rho - sigma||_F`.
    pub fn l2_distance(&self, other: &GridDensityMatrix) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::shape(
                "GridDensityMatrix::l2_distance",
                format!("{:?}", self.grid),
                format!("{:?}", other.grid),
            ));
        }
        let d: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok(d.sqrt() * self.grid.dx())
    }
}

/// Position operator `diag(x_j)` on the grid.
pub fn position_operator(grid: &PositionGrid) -> ComplexMatrix {
    let n = grid.len();
    ComplexMatrix::from_fn(n, n, |j, k| if j == k { re(grid.point(j)) } else { re(0.0) })
}

/// Sinc-DVR kinetic energy `p^2 / 2M` on a uniform grid.
pub fn kinetic_operator(grid: &PositionGrid, mass: f64, hbar: f64) -> ComplexMatrix {
    let n = grid.len();
    let dx = grid.dx();
    let scale = hbar * hbar / (2.0 * mass * dx * dx);
    ComplexMatrix::from_fn(n, n, |j, k| {
        let v = if j == k {
            PI * PI / 3.0
        } else {
            let d = j as f64 - k as f64;
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            2.0 * sign / (d * d)
        };
        re(scale * v)
    })
}

/// Position-basis Hamiltonian: sinc-DVR kinetic term plus `diag(V(x_j))`.
pub fn position_hamiltonian(spec: &SystemSpec, grid: &PositionGrid) -> ComplexMatrix {
    let mut h = kinetic_operator(grid, spec.mass, spec.hbar);
    for j in 0..grid.len() {
        h[(j, j)] += spec.potential_at(grid.point(j));
    }
    h
}

/// `drho/dt = (-i/hbar) [H, rho]`
pub fn von_neumann_rhs(h: &ComplexMatrix, rho: &ComplexMatrix, hbar: f64) -> Result<ComplexMatrix> {
    let n = require_square(h, "von_neumann_rhs")?;
    if rho.shape() != (n, n) {
        return Err(Error::shape(
            "von_neumann_rhs",
            format!("{n}x{n}"),
            format!("{}x{}", rho.nrows(), rho.ncols()),
        ));
    }
    require_hermitian(h, 1e-10, "von_neumann_rhs")?;
    Ok(commutator(h, rho) * (-I / hbar))
}

/// `rho(t) = exp(-iHt/hbar) rho(0) exp(+iHt/hbar)`.
pub fn evolve_closed(
    rho0: &ComplexMatrix,
    h: &ComplexMatrix,
    t: f64,
    hbar: f64,
) -> Result<ComplexMatrix> {
    let n = require_square(h, "evolve_closed")?;
    if rho0.shape() != (n, n) {
        return Err(Error::shape(
            "evolve_closed",
            format!("{n}x{n}"),
            format!("{}x{}", rho0.nrows(), rho0.ncols()),
        ));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("evolve_closed needs t >= 0, got {t}")));
    }
    require_hermitian(h, 1e-10, "evolve_closed")?;
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let u = unitary(h, t, hbar)?;
    Ok(&u * rho0 * u.adjoint())
}

/// `exp(-iHt/hbar)` for Hermitian `H`.
pub fn unitary(h: &ComplexMatrix, t: f64, hbar: f64) -> Result<ComplexMatrix> {
    let eig = eigh(h)?;
    Ok(hermitian_function(&eig, |e| (-I * (e * t / hbar)).exp()))
}

fn check_caustic(sin_wt: f64) -> Result<()> {
    if sin_wt.abs() < CAUSTIC_TOLERANCE {
        Err(Error::Caustic {
            sin_abs: sin_wt.abs(),
            tolerance: CAUSTIC_TOLERANCE,
        })
    } else {
        Ok(())
    }
}

/// Harmonic-oscillator propagator `K(x, x0; t)` for `V = M omega0^2 x^2 / 2`.
///
/// `sqrt(M w / (2 pi i hbar sin wt)) exp{(i M w / 2 hbar sin wt)[(x^2 + x0^2) cos wt - 2 x x0]}`,
/// with the square root continued through earlier caustics (a phase of
/// `-pi/2` per half period).
pub fn propagator_harmonic(
    x: f64,
    x0: f64,
    t: f64,
    spec: &SystemSpec,
    omega0: f64,
) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("propagator needs t > 0, got {t}")));
    }
    let (m, hbar) = (spec.mass, spec.hbar);
    let wt = omega0 * t;
    let (s, c) = wt.sin_cos();
    check_caustic(s)?;
    let crossings = (wt / PI).floor();
    let amplitude = (m * omega0 / (2.0 * PI * hbar * s.abs())).sqrt();
    let prefactor = Complex64::from_polar(amplitude, -FRAC_PI_4 - FRAC_PI_2 * crossings);
    let phase = m * omega0 / (2.0 * hbar * s) * ((x * x + x0 * x0) * c - 2.0 * x * x0);
    Ok(prefactor * Complex64::from_polar(1.0, phase))
}

/// Free-particle propagator `sqrt(M / 2 pi i hbar t) exp{i M (x - x0)^2 / 2 hbar t}`.
pub fn propagator_free(x: f64, x0: f64, t: f64, spec: &SystemSpec) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("propagator needs t > 0, got {t}")));
    }
    let (m, hbar) = (spec.mass, spec.hbar);
    let amplitude = (m / (2.0 * PI * hbar * t)).sqrt();
    let d = x - x0;
    Ok(Complex64::from_polar(amplitude, -FRAC_PI_4) * Complex64::from_polar(1.0, m * d * d / (2.0 * hbar * t)))
}

/// How a single time slice is represented on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridKernel {
    /// Closed-form free or harmonic kernel sampled on the grid.
    ///
    /// A harmonic slice too short for the grid to resolve is sampled as
    /// `K(dt + s) K(s)^dagger` with both legs near a quarter period.
    #[default]
    Analytic,
    /// `exp(-iV dt/2hbar) K_kin(dt) exp(-iV dt/2hbar)`; `K_kin` is the
    /// sampled free kernel when resolved and its band-limited form
    /// `exp(-i T dt / hbar)` otherwise.
    Trotter,
    /// `exp(-i H dt / hbar)` with the position-basis Hamiltonian.
    Discretized,
}

fn sampled(grid: &PositionGrid, kernel: impl Fn(f64, f64) -> Result<Complex64>) -> Result<ComplexMatrix> {
    let xs = grid.points();
    let n = xs.len();
    let dx = grid.dx();
    let mut g = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            g[(j, k)] = kernel(xs[j], xs[k])? * dx;
        }
    }
    Ok(g)
}

/// Highest local frequency of the harmonic kernel phase across the grid.
fn harmonic_bandwidth(grid: &PositionGrid, spec: &SystemSpec, omega: f64, t: f64) -> f64 {
    let (s, c) = (omega * t).sin_cos();
    spec.mass * omega * grid.max_abs() * (1.0 + c.abs()) / (spec.hbar * s.abs())
}

fn free_bandwidth(grid: &PositionGrid, spec: &SystemSpec, t: f64) -> f64 {
    spec.mass * (grid.x_max() - grid.x_min()) / (spec.hbar * t)
}

fn nyquist(grid: &PositionGrid) -> f64 {
    PI / grid.dx()
}

fn harmonic_transfer(grid: &PositionGrid, spec: &SystemSpec, omega: f64, dt: f64) -> Result<ComplexMatrix> {
    check_caustic((omega * dt).sin())?;
    let direct = |t: f64| sampled(grid, |x, x0| propagator_harmonic(x, x0, t, spec, omega));
    if harmonic_bandwidth(grid, spec, omega, dt) <= nyquist(grid) {
        return direct(dt);
    }
    // Choose s so that omega*s and omega*(dt + s) both sit at least a
    // quarter period away from every caustic.
    let phi = (omega * dt) % PI;
    let ws = if phi <= FRAC_PI_2 {
        FRAC_PI_2 - 0.5 * phi
    } else {
        FRAC_PI_2 + 0.5 * (PI - phi)
    };
    let s = ws / omega;
    let forward = direct(dt + s)?;
    let back = direct(s)?;
    Ok(forward * back.adjoint())
}

fn free_transfer(grid: &PositionGrid, spec: &SystemSpec, dt: f64) -> Result<ComplexMatrix> {
    if free_bandwidth(grid, spec, dt) <= nyquist(grid) {
        sampled(grid, |x, x0| propagator_free(x, x0, dt, spec))
    } else {
        unitary(&kinetic_operator(grid, spec.mass, spec.hbar), dt, spec.hbar)
    }
}

/// One-slice transfer matrix `G = dx * K_grid(dt)`: `psi(t + dt) = G psi(t)`
/// for wavefunction samples.
pub fn slice_matrix(
    grid: &PositionGrid,
    spec: &SystemSpec,
    dt: f64,
    kernel: GridKernel,
) -> Result<ComplexMatrix> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("slice length must be > 0, got {dt}")));
    }
    match kernel {
        GridKernel::Analytic => match spec.potential {
            Potential::Free => free_transfer(grid, spec, dt),
            Potential::Harmonic { omega } => harmonic_transfer(grid, spec, omega, dt),
            _ => Err(Error::Unsupported(format!(
                "no closed-form kernel for {:?}; use Trotter slicing",
                spec.potential
            ))),
        },
        GridKernel::Trotter => {
            let kin = free_transfer(grid, spec, dt)?;
            let half: Vec<Complex64> = grid
                .points()
                .iter()
                .map(|&x| Complex64::from_polar(1.0, -spec.potential_at(x) * dt / (2.0 * spec.hbar)))
                .collect();
            let n = grid.len();
            Ok(ComplexMatrix::from_fn(n, n, |j, k| half[j] * kin[(j, k)] * half[k]))
        }
        GridKernel::Discretized => unitary(&position_hamiltonian(spec, grid), dt, spec.hbar),
    }
}

/// Closed-system density propagator `J = K(x, x') conj(K(y, y'))` at time `t`,
/// built from `slices` equal time slices.
pub fn j_closed(
    grid: &PositionGrid,
    spec: &SystemSpec,
    t: f64,
    slices: usize,
    kernel: GridKernel,
) -> Result<PropagatorTensor> {
    if t == 0.0 {
        return Ok(PropagatorTensor::identity(*grid));
    }
    if slices == 0 {
        return Err(Error::Validation("j_closed needs at least one slice".into()));
    }
    let g = slice_matrix(grid, spec, t / slices as f64, kernel)?;
    let mut total = g.clone();
    for _ in 1..slices {
        total = &g * total;
    }
    PropagatorTensor::factorized(*grid, t, total * re(1.0 / grid.dx()))
}
