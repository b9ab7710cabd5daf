use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;
use super::ComplexMatrix;
use crate::{Error, Result};

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// `[a, b] = ab - ba`
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// `{a, b} = ab + ba`
pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry of `|m - m†|`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn require_square(m: &ComplexMatrix, context: &'static str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::shape(
            context,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m.nrows())
}

/// Fails unless `m` is square and Hermitian to `tol` relative to `max(1, max|m_ij|)`.
pub fn require_hermitian(m: &ComplexMatrix, tol: f64, context: &'static str) -> Result<()> {
    require_square(m, context)?;
    let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let defect = hermiticity_defect(m);
    if defect > tol * scale {
        return Err(Error::Validation(format!(
            "{context}: matrix is not Hermitian (defect {defect:e})"
        )));
    }
    Ok(())
}

/// `(m + m†) / 2`
pub fn hermitize(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(m, "hermitize")?;
    let mut out = m.clone();
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        }
    }
    Ok(out)
}

/// Eigendecomposition `m = V diag(values) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = require_square(m, "eigh")?;
    if !is_finite(m) {
        return Err(Error::Numerical("eigh: matrix has non-finite entries".into()));
    }
    let max_iter = 1000 * n.max(8);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter).ok_or_else(|| {
        Error::Numerical(format!(
            "eigh: no convergence after {max_iter} sweeps on a {n}x{n} matrix (max |m_ij| = {:e})",
            m.iter().map(|z| z.norm()).fold(0.0f64, f64::max)
        ))
    })?;
    Ok(HermitianEigen {
        values: eig.eigenvalues.iter().copied().collect(),
        vectors: eig.eigenvectors,
    })
}

/// `V diag(f(values)) V†`
pub fn hermitian_function(eig: &HermitianEigen, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
    let v = &eig.vectors;
    let mut scaled = v.clone();
    for (j, &lambda) in eig.values.iter().enumerate() {
        let fj = f(lambda);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= fj);
    }
    scaled * v.adjoint()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Trace over the second factor of a `(d1*d2)`-dimensional operator.
pub fn partial_trace_second(m: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    if m.nrows() != d1 * d2 || m.ncols() != d1 * d2 {
        return Err(Error::shape(
            "partial_trace_second",
            format!("{0}x{0}", d1 * d2),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(ComplexMatrix::from_fn(d1, d1, |i, j| {
        (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
    }))
}

/// Real matrix exponential by scaling and squaring with a [6/6] Padé approximant.
pub fn expm_real(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::shape(
            "expm_real",
            "square matrix",
            format!("{}x{}", n, m.ncols()),
        ));
    }
    let norm = (0..n)
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    if !norm.is_finite() {
        return Err(Error::Numerical("expm_real: non-finite input".into()));
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = m * 2f64.powi(-squarings);

    const Q: usize = 6;
    let mut c = 1.0;
    let ident = DMatrix::<f64>::identity(n, n);
    let mut num = ident.clone();
    let mut den = ident.clone();
    let mut power = ident;
    for k in 1..=Q {
        c *= (Q - k + 1) as f64 / (k * (2 * Q - k + 1)) as f64;
        power = &power * &a;
        num += &power * c;
        if k % 2 == 0 {
            den += &power * c;
        } else {
            den -= &power * c;
        }
    }
    let mut x = den
        .lu()
        .solve(&num)
        .ok_or_else(|| Error::Numerical("expm_real: singular Padé denominator".into()))?;
    for _ in 0..squarings {
        x = &x * &x;
    }
    Ok(x)
}
