//! Shared numerical substrate: complex matrices, grids, quadrature and RK4.
//!
//! Every function here is a pure function of its inputs.

mod grid;
mod linalg;
mod ode;
mod quadrature;

pub use grid::{PositionGrid, TimeMesh};
pub use linalg::{
    anticommutator, commutator, dagger, eigh, expm_real, hermitian_function, hermiticity_defect,
    hermitize, hs_norm, is_finite, kron, partial_trace_second, require_hermitian, require_square,
    trace, HermitianEigen,
};
pub use ode::{rk4_step, rk4_step_t};
pub use quadrature::{trapezoid_integrate, trapezoid_weights, triangle_sum};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix used for operators and density matrices.
pub type ComplexMatrix = DMatrix<Complex64>;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub(crate) fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
