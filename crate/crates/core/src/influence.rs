//! Feynman-Vernon reduction with the Caldeira-Leggett influence phase,
//! evaluated as an exhaustive path-pair sum on the position grid.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;
use crate::bath::{dissipation_kernel, noise_kernel, thermal_density, BathSpec};
use crate::closed_system::{slice_matrix, GridDensityMatrix, GridKernel, SystemSpec};
use crate::numerics::{triangle_sum, ComplexMatrix, PositionGrid, TimeMesh, I};
use crate::path_sum::{assemble, PathPairExponent};
use crate::tensor::{PropagatorTensor, TensorVariant};
use crate::{Error, Result};

/// Path values `x(t_k)` at every point of a time mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    mesh: TimeMesh,
    values: Vec<f64>,
}

impl DiscretePath {
    pub fn new(mesh: TimeMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_points() {
            return Err(Error::shape("DiscretePath", mesh.n_points(), values.len()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("path value at mesh point {k} is not finite")));
        }
        Ok(Self { mesh, values })
    }

    pub fn from_fn(mesh: TimeMesh, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = mesh.times().into_iter().map(f).collect();
        Self::new(mesh, values)
    }

    pub fn constant(mesh: TimeMesh, value: f64) -> Result<Self> {
        Self::from_fn(mesh, |_| value)
    }

    /// Path through grid points `grid.point(indices[k])`.
    pub fn on_grid(mesh: TimeMesh, grid: &PositionGrid, indices: &[usize]) -> Result<Self> {
        Self::new(mesh, indices.iter().map(|&j| grid.point(j)).collect())
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mesh: self.mesh,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Product of the system state with the bath's thermal state at `t = 0`.
#[derive(Debug, Clone)]
pub struct JointState {
    system: GridDensityMatrix,
    bath: BathSpec,
}

impl JointState {
    pub fn system(&self) -> &GridDensityMatrix {
        &self.system
    }

    pub fn bath(&self) -> &BathSpec {
        &self.bath
    }

    /// Bath factor `rho_b(X, Y)`.
    pub fn bath_marginal(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        thermal_density(&self.bath, x, y)
    }

    /// `rho_s(x_j, y_k) rho_b(X, Y)`
    pub fn value(&self, j: usize, k: usize, x: &[f64], y: &[f64]) -> Result<Complex64> {
        Ok(self.system.values()[(j, k)] * self.bath_marginal(x, y)?)
    }

    /// `tr rho_s * tr rho_b`; the thermal factor is normalized.
    pub fn trace(&self) -> Complex64 {
        self.system.trace()
    }
}

pub fn factorized_initial(rho_s: &GridDensityMatrix, bath: &BathSpec) -> Result<JointState> {
    let tr = rho_s.trace();
    if (tr - 1.0).norm() > 1e-6 {
        return Err(Error::Validation(format!("system state has trace {tr}")));
    }
    Ok(JointState {
        system: rho_s.clone(),
        bath: bath.clone(),
    })
}

/// Kernel tables `nu(t_k - t_l)`, `eta(t_k - t_l)` for `l <= k`.
#[derive(Debug, Clone)]
struct KernelTables {
    weights: Vec<f64>,
    nu: Vec<f64>,
    eta: Vec<f64>,
    n: usize,
}

impl KernelTables {
    fn new(mesh: &TimeMesh, bath: &BathSpec) -> Self {
        let n = mesh.n_points();
        let times = mesh.times();
        let mut nu = alloc::vec![0.0; n * n];
        let mut eta = alloc::vec![0.0; n * n];
        for k in 0..n {
            for l in 0..=k {
                let s = times[k] - times[l];
                nu[k * n + l] = noise_kernel(bath, s);
                eta[k * n + l] = dissipation_kernel(bath, s);
            }
        }
        Self {
            weights: mesh.trapezoid_weights(),
            nu,
            eta,
            n,
        }
    }

    /// `int_0^t dt' int_0^t' dt'' (x - y)(t') [i nu (x - y)(t'') + eta (x + y)(t'')]`
    fn phase(&self, x: impl Fn(usize) -> f64, y: impl Fn(usize) -> f64) -> Complex64 {
        triangle_sum(&self.weights, |k, l| {
            let d1 = x(k) - y(k);
            let d2 = x(l) - y(l);
            let s2 = x(l) + y(l);
            Complex64::new(d1 * self.eta[k * self.n + l] * s2, d1 * self.nu[k * self.n + l] * d2)
        })
    }
}

/// Caldeira-Leggett influence phase `Phi[x, y]`: the double time integral
/// `int_0^t dt' int_0^t' dt'' [x - y](t') {i nu(t' - t'') [x - y](t'') + eta(t' - t'') [x + y](t'')}`
/// by the trapezoid rule; the influence functional is `exp(i Phi / hbar)`.
pub fn influence_phase_cl(path_x: &DiscretePath, path_y: &DiscretePath, bath: &BathSpec) -> Result<Complex64> {
    if path_x.mesh != path_y.mesh {
        return Err(Error::shape(
            "influence_phase_cl",
            format!("{:?}", path_x.mesh),
            format!("{:?}", path_y.mesh),
        ));
    }
    let tables = KernelTables::new(&path_x.mesh, bath);
    Ok(tables.phase(|k| path_x.values[k], |k| path_y.values[k]))
}

/// Log transfer matrix entries shared by the grid path sums.
#[derive(Debug, Clone)]
pub(crate) struct SliceLogs {
    log_g: ComplexMatrix,
    log_dx2: f64,
}

impl SliceLogs {
    pub(crate) fn new(grid: &PositionGrid, spec: &SystemSpec, dt: f64, kernel: GridKernel) -> Result<Self> {
        let g = slice_matrix(grid, spec, dt, kernel)?;
        Ok(Self {
            log_g: g.map(|z| z.ln()),
            log_dx2: 2.0 * grid.dx().ln(),
        })
    }

    /// `sum_k [log G(x_{k+1}, x_k) + conj log G(y_{k+1}, y_k)] - 2 ln dx`
    pub(crate) fn free_part(&self, x: &[usize], y: &[usize]) -> Complex64 {
        let mut e = Complex64::new(-self.log_dx2, 0.0);
        for k in 0..x.len() - 1 {
            e += self.log_g[(x[k + 1], x[k])] + self.log_g[(y[k + 1], y[k])].conj();
        }
        e
    }
}

/// Default slice representation: closed-form kernels for quadratic
/// potentials, Trotter slicing otherwise.
pub fn default_kernel(spec: &SystemSpec) -> GridKernel {
    if spec.potential.is_quadratic() {
        GridKernel::Analytic
    } else {
        GridKernel::Trotter
    }
}

/// Path-pair exponent of the Feynman-Vernon propagator: system slices
/// `log G` on both branches plus `i Phi / hbar`.
#[derive(Debug, Clone)]
pub struct FvExponent {
    points: Vec<f64>,
    slices: SliceLogs,
    tables: KernelTables,
    hbar: f64,
}

impl FvExponent {
    pub fn new(
        grid: &PositionGrid,
        mesh: &TimeMesh,
        spec: &SystemSpec,
        bath: &BathSpec,
        kernel: GridKernel,
    ) -> Result<Self> {
        Ok(Self {
            points: grid.points(),
            slices: SliceLogs::new(grid, spec, mesh.dt(), kernel)?,
            tables: KernelTables::new(mesh, bath),
            hbar: spec.hbar,
        })
    }

    /// `i Phi / hbar` for grid-index paths.
    pub fn influence_exponent(&self, x: &[usize], y: &[usize]) -> Complex64 {
        let p = &self.points;
        I * self.tables.phase(|k| p[x[k]], |k| p[y[k]]) / self.hbar
    }
}

impl PathPairExponent for FvExponent {
    fn exponent(&self, x: &[usize], y: &[usize]) -> Complex64 {
        self.slices.free_part(x, y) + self.influence_exponent(x, y)
    }
}

/// Feynman-Vernon density propagator on `grid` with one path slice per mesh
/// step.
pub fn j_fv_matrix(grid: &PositionGrid, mesh: &TimeMesh, spec: &SystemSpec, bath: &BathSpec) -> Result<PropagatorTensor> {
    j_fv_matrix_with(grid, mesh, spec, bath, default_kernel(spec))
}

pub fn j_fv_matrix_with(
    grid: &PositionGrid,
    mesh: &TimeMesh,
    spec: &SystemSpec,
    bath: &BathSpec,
    kernel: GridKernel,
) -> Result<PropagatorTensor> {
    crate::path_sum::check_tractable(grid.len(), mesh.n_steps(), crate::path_sum::MAX_PATH_PAIRS)?;
    let exponent = FvExponent::new(grid, mesh, spec, bath, kernel)?;
    assemble(grid, mesh.n_steps(), mesh.t_total(), TensorVariant::FeynmanVernon, &exponent)
}

/// `rho(x, y; t) = dx^2 sum J(x, y; x', y') rho0(x', y')`
pub fn rho_propagate_fv(rho0: &GridDensityMatrix, j: &PropagatorTensor) -> Result<GridDensityMatrix> {
    j.apply(rho0)
}
