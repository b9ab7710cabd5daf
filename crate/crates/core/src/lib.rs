//! Numerical laboratory for open quantum systems.
//!
//! The crate connects two descriptions of a particle coupled to a bath of
//! harmonic oscillators:
//!
//! * master equations of LGKS (Lindblad) form, optionally augmented with
//!   two-time memory kernels ([`lgks`]);
//! * Feynman-Vernon influence functionals and discrete path sums for the
//!   density-matrix propagator ([`influence`], [`collision`]).
//!
//! Everything is checked against independent engines in [`oracle`]: exact
//! Gaussian covariance dynamics, a brute-force repeated-interaction channel
//! and exhaustive path enumeration.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, scenario
//! parsing and the command line live in the `lfvlab` companion crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bath;
pub mod closed_system;
pub mod collision;
mod error;
pub mod influence;
pub mod lgks;
pub mod numerics;
pub mod oracle;
pub mod path_sum;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use numerics::{ComplexMatrix, PositionGrid, TimeMesh};
pub use tensor::{PropagatorTensor, TensorVariant};
