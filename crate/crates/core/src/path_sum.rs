//! Exhaustive path-pair sums on a position grid.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::numerics::PositionGrid;
use crate::tensor::{PropagatorTensor, TensorVariant};
use crate::{Error, Result};

/// Largest number of path pairs a tensor assembly will enumerate.
pub const MAX_PATH_PAIRS: f64 = 1e7;

/// Complex exponent `E` of a discrete path pair; the propagator entry is the
/// sum of `exp(E)` over all pairs with the entry's endpoints.
///
/// Paths are grid-index sequences `x[0..=n]` with `x[0]` the initial point
/// and `x[n]` the final point.
pub trait PathPairExponent {
    fn exponent(&self, x: &[usize], y: &[usize]) -> Complex64;
}

impl<F: Fn(&[usize], &[usize]) -> Complex64> PathPairExponent for F {
    fn exponent(&self, x: &[usize], y: &[usize]) -> Complex64 {
        self(x, y)
    }
}

/// Number of path pairs over all tensor entries, `n_grid^(2 (n_steps + 1))`.
pub fn path_pair_count(n_grid: usize, n_steps: usize) -> f64 {
    (n_grid as f64).powi(2 * (n_steps as i32 + 1))
}

pub(crate) fn check_tractable(n_grid: usize, n_steps: usize, limit: f64) -> Result<()> {
    let count = path_pair_count(n_grid, n_steps);
    if count > limit {
        return Err(Error::Size { count, limit });
    }
    Ok(())
}

/// Advance an odometer over `digits` with base `base`, last digit fastest.
/// Returns false after the final configuration.
fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Dense tensor `J(a, b; c, d) = sum exp(E)`. Entries are visited in
/// `(a, b, c, d)` order; within an entry x-paths are the outer loop and
/// y-paths the inner, both lexicographic in their intermediate points, and
/// terms are accumulated sequentially.
pub(crate) fn assemble<E: PathPairExponent + ?Sized>(
    grid: &PositionGrid,
    n_steps: usize,
    t: f64,
    variant: TensorVariant,
    exponent: &E,
) -> Result<PropagatorTensor> {
    if n_steps == 0 {
        return Err(Error::Validation("path sum needs at least one time slice".into()));
    }
    let n = grid.len();
    check_tractable(n, n_steps, MAX_PATH_PAIRS)?;
    let mut entries = Vec::with_capacity(n.pow(4));
    let mut x = vec![0usize; n_steps + 1];
    let mut y = vec![0usize; n_steps + 1];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    x[0] = c;
                    x[n_steps] = a;
                    y[0] = d;
                    y[n_steps] = b;
                    let mut acc = Complex64::new(0.0, 0.0);
                    x[1..n_steps].iter_mut().for_each(|v| *v = 0);
                    loop {
                        y[1..n_steps].iter_mut().for_each(|v| *v = 0);
                        loop {
                            acc += exponent.exponent(&x, &y).exp();
                            if !advance(&mut y[1..n_steps], n) {
                                break;
                            }
                        }
                        if !advance(&mut x[1..n_steps], n) {
                            break;
                        }
                    }
                    entries.push(acc);
                }
            }
        }
    }
    PropagatorTensor::dense(*grid, t, variant, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_exponent_counts_paths() {
        let grid = PositionGrid::symmetric(3, 1.0).unwrap();
        let zero = |_: &[usize], _: &[usize]| Complex64::new(0.0, 0.0);
        let j = assemble(&grid, 3, 1.0, TensorVariant::Closed, &zero).unwrap();
        // two intermediate points per path, three choices each, two paths
        assert!(j.entries().iter().all(|z| *z == Complex64::new(81.0, 0.0)));
    }

    #[test]
    fn size_bound_is_enforced() {
        let grid = PositionGrid::symmetric(10, 1.0).unwrap();
        let zero = |_: &[usize], _: &[usize]| Complex64::new(0.0, 0.0);
        let err = assemble(&grid, 3, 1.0, TensorVariant::Closed, &zero).unwrap_err();
        assert!(matches!(err, Error::Size { .. }));
    }

    #[test]
    fn endpoints_follow_tensor_indices() {
        let grid = PositionGrid::symmetric(2, 1.0).unwrap();
        let tag = |x: &[usize], y: &[usize]| {
            Complex64::new(((x[1] * 2 + y[1]) * 4 + x[0] * 2 + y[0]) as f64, 0.0).ln()
        };
        let j = assemble(&grid, 1, 1.0, TensorVariant::Closed, &tag).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        let want = ((a * 2 + b) * 4 + c * 2 + d) as f64;
                        assert!((j.get(a, b, c, d).re - want).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
