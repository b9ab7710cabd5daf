use alloc::vec::Vec;
use core::ops::{AddAssign, Mul};

use num_complex::Complex64;

use crate::{Error, Result};

/// Composite trapezoid weights for strictly increasing sample times.
pub fn trapezoid_weights(times: &[f64]) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(Error::Validation("trapezoid needs at least one sample".into()));
    }
    let mut w = alloc::vec![0.0; times.len()];
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        if !(h > 0.0) {
            return Err(Error::Ordering { index: k });
        }
        w[k - 1] += 0.5 * h;
        w[k] += 0.5 * h;
    }
    Ok(w)
}

/// Composite trapezoid rule over `(time, value)` samples; one sample gives 0.
pub fn trapezoid_integrate(samples: &[(f64, Complex64)]) -> Result<Complex64> {
    let times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let w = trapezoid_weights(&times)?;
    Ok(samples
        .iter()
        .zip(&w)
        .fold(Complex64::new(0.0, 0.0), |acc, ((_, v), w)| acc + v * w))
}

/// Ordered double integral `∫dt' ∫_{t'' ≤ t'} dt'' f(t', t'')` on a mesh.
///
/// Sums the strict lower triangle with product weights plus half the
/// diagonal, which is exact for constant integrands.
pub fn triangle_sum<T, F>(weights: &[f64], mut f: F) -> T
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    F: FnMut(usize, usize) -> T,
{
    let mut acc = T::default();
    for k in 0..weights.len() {
        for l in 0..k {
            acc += f(k, l) * (weights[k] * weights[l]);
        }
        acc += f(k, k) * (0.5 * weights[k] * weights[k]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn trivial_examples() {
        assert_eq!(trapezoid_integrate(&[(0.0, c(0.0)), (1.0, c(0.0))]).unwrap(), c(0.0));
        assert_eq!(trapezoid_integrate(&[(0.0, c(0.0)), (1.0, c(1.0))]).unwrap(), c(0.5));
        assert_eq!(trapezoid_integrate(&[(0.3, c(7.0))]).unwrap(), c(0.0));
    }

    #[test]
    fn parabola_on_101_points() {
        let s: Vec<_> = (0..=100)
            .map(|k| {
                let t = k as f64 / 100.0;
                (t, c(t * t))
            })
            .collect();
        let v = trapezoid_integrate(&s).unwrap();
        assert!((v.re - 1.0 / 3.0).abs() < 2e-4);
    }

    #[test]
    fn non_monotone_times_rejected() {
        let err = trapezoid_integrate(&[(0.0, c(1.0)), (1.0, c(1.0)), (1.0, c(1.0))]).unwrap_err();
        assert_eq!(err, Error::Ordering { index: 2 });
        assert!(trapezoid_integrate(&[]).is_err());
    }

    #[test]
    fn triangle_sum_is_exact_for_constants_and_second_order_otherwise() {
        let n = 200;
        let t = 1.3;
        let dt = t / n as f64;
        let mut w = alloc::vec![dt; n + 1];
        w[0] *= 0.5;
        w[n] *= 0.5;
        let one: f64 = triangle_sum(&w, |_, _| 1.0);
        assert!((one - t * t / 2.0).abs() < 1e-12);
        // ∫0^t dt' ∫0^t' dt'' cos(t' - t'') = 1 - cos t
        let cosk: f64 = triangle_sum(&w, |k, l| ((k as f64 - l as f64) * dt).cos());
        assert!((cosk - (1.0 - t.cos())).abs() < 1e-4);
    }
}
