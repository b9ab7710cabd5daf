//! Four-index density-matrix propagators `J(x, y; x', y'; t)` on a grid.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::closed_system::GridDensityMatrix;
use crate::numerics::{re, ComplexMatrix, PositionGrid};
use crate::{Error, Result};

/// Which construction produced a propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorVariant {
    /// `K(x, x') conj(K(y, y'))` of a closed system.
    Closed,
    /// Feynman-Vernon path sum with the Caldeira-Leggett influence phase.
    FeynmanVernon,
    /// Path sum for the collision-schedule bath.
    Collision,
}

#[derive(Debug, Clone)]
enum Storage {
    /// `J = K(x, x') conj(K(y, y'))` held through `K` alone.
    Factorized(ComplexMatrix),
    /// Row-major over `(a, b, c, d)`.
    Dense(Vec<Complex64>),
}

/// Discrete kernel mapping `rho(x', y'; 0)` to `rho(x, y; t)` via
/// `rho(x_a, y_b) = dx^2 * sum_{c,d} J(a, b; c, d) rho(x'_c, y'_d)`.
#[derive(Debug, Clone)]
pub struct PropagatorTensor {
    grid: PositionGrid,
    t: f64,
    variant: TensorVariant,
    storage: Storage,
}

impl PropagatorTensor {
    /// Closed-system propagator from the kernel matrix `K(x_a, x_c)`.
    pub fn factorized(grid: PositionGrid, t: f64, kernel: ComplexMatrix) -> Result<Self> {
        let n = grid.len();
        if kernel.shape() != (n, n) {
            return Err(Error::shape(
                "PropagatorTensor::factorized",
                format!("{n}x{n}"),
                format!("{}x{}", kernel.nrows(), kernel.ncols()),
            ));
        }
        Ok(Self {
            grid,
            t,
            variant: TensorVariant::Closed,
            storage: Storage::Factorized(kernel),
        })
    }

    pub fn dense(
        grid: PositionGrid,
        t: f64,
        variant: TensorVariant,
        entries: Vec<Complex64>,
    ) -> Result<Self> {
        let n = grid.len();
        if entries.len() != n.pow(4) {
            return Err(Error::shape(
                "PropagatorTensor::dense",
                n.pow(4),
                entries.len(),
            ));
        }
        Ok(Self {
            grid,
            t,
            variant,
            storage: Storage::Dense(entries),
        })
    }

    /// The `t = 0` propagator, `K = delta / dx`.
    pub fn identity(grid: PositionGrid) -> Self {
        let n = grid.len();
        let kernel = ComplexMatrix::identity(n, n) * re(1.0 / grid.dx());
        Self {
            grid,
            t: 0.0,
            variant: TensorVariant::Closed,
            storage: Storage::Factorized(kernel),
        }
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn variant(&self) -> TensorVariant {
        self.variant
    }

    /// The single-particle kernel, when the tensor is stored factorized.
    pub fn kernel(&self) -> Option<&ComplexMatrix> {
        match &self.storage {
            Storage::Factorized(k) => Some(k),
            Storage::Dense(_) => None,
        }
    }

    /// Entry `J(x_a, y_b; x'_c, y'_d)`.
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        match &self.storage {
            Storage::Factorized(k) => k[(a, c)] * k[(b, d)].conj(),
            Storage::Dense(e) => {
                let n = self.grid.len();
                e[((a * n + b) * n + c) * n + d]
            }
        }
    }

    /// All entries in `(a, b, c, d)` row-major order.
    pub fn entries(&self) -> Vec<Complex64> {
        match &self.storage {
            Storage::Dense(e) => e.clone(),
            Storage::Factorized(_) => {
                let n = self.grid.len();
                let mut out = Vec::with_capacity(n.pow(4));
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            for d in 0..n {
                                out.push(self.get(a, b, c, d));
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// Largest entrywise `|J - other|`.
    pub fn max_abs_diff(&self, other: &PropagatorTensor) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::shape(
                "PropagatorTensor::max_abs_diff",
                format!("{:?}", self.grid),
                format!("{:?}", other.grid),
            ));
        }
        Ok(self
            .entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Propagate a density matrix through the tensor.
    pub fn apply(&self, rho0: &GridDensityMatrix) -> Result<GridDensityMatrix> {
        if rho0.grid() != &self.grid {
            return Err(Error::shape(
                "PropagatorTensor::apply",
                format!("{:?}", self.grid),
                format!("{:?}", rho0.grid()),
            ));
        }
        let dx = self.grid.dx();
        let r0 = rho0.values();
        let values = match &self.storage {
            Storage::Factorized(k) => (k * r0 * k.adjoint()) * re(dx * dx),
            Storage::Dense(e) => {
                let n = self.grid.len();
                ComplexMatrix::from_fn(n, n, |a, b| {
                    let base = (a * n + b) * n * n;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..n {
                        for d in 0..n {
                            acc += e[base + c * n + d] * r0[(c, d)];
                        }
                    }
                    acc * (dx * dx)
                })
            }
        };
        GridDensityMatrix::from_values(self.grid, values)
    }
}
