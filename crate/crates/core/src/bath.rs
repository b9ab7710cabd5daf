//! The harmonic bath: classical endpoint solutions, the fluctuation Green's
//! function, the thermal initial state, and the noise and dissipation kernels.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;


#[allow(unused_imports)]
use num_traits::Float;
use crate::closed_system::CAUSTIC_TOLERANCE;
use crate::{Error, Result};

/// Bath temperature, as `kT` in energy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Zero,
    Finite { kt: f64 },
}

/// `N` independent oscillators of common mass `m`, frequencies `omega_i`,
/// and bilinear couplings `c_i x X_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    mass: f64,
    omegas: Vec<f64>,
    couplings: Vec<f64>,
    temperature: Temperature,
    hbar: f64,
}

impl BathSpec {
    pub fn new(
        mass: f64,
        omegas: Vec<f64>,
        couplings: Vec<f64>,
        temperature: Temperature,
        hbar: f64,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if omegas.is_empty() {
            problems.push("bath needs at least one oscillator".into());
        }
        if omegas.len() != couplings.len() {
            problems.push(format!(
                "{} frequencies but {} couplings",
                omegas.len(),
                couplings.len()
            ));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            problems.push(format!("bath mass must be > 0, got {mass}"));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            problems.push(format!("hbar must be > 0, got {hbar}"));
        }
        for (i, &w) in omegas.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                problems.push(format!("omega[{i}] must be > 0, got {w}"));
            }
        }
        for (i, &c) in couplings.iter().enumerate() {
            if !c.is_finite() {
                problems.push(format!("coupling[{i}] is not finite"));
            }
        }
        if let Temperature::Finite { kt } = temperature {
            if !(kt > 0.0 && kt.is_finite()) {
                problems.push(format!("kT must be > 0, got {kt}"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems.join("; ")));
        }
        Ok(Self {
            mass,
            omegas,
            couplings,
            temperature,
            hbar,
        })
    }

    /// `n` identical oscillators.
    pub fn uniform(
        n: usize,
        mass: f64,
        omega: f64,
        coupling: f64,
        temperature: Temperature,
        hbar: f64,
    ) -> Result<Self> {
        Self::new(mass, alloc::vec![omega; n], alloc::vec![coupling; n], temperature, hbar)
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn temperature(&self) -> Temperature {
        self.temperature
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Same bath at another temperature.
    pub fn with_temperature(&self, temperature: Temperature) -> Result<Self> {
        Self::new(
            self.mass,
            self.omegas.clone(),
            self.couplings.clone(),
            temperature,
            self.hbar,
        )
    }

    /// Same bath with every coupling multiplied by `factor`.
    pub fn scaled_couplings(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.mass,
            self.omegas.clone(),
            self.couplings.iter().map(|c| c * factor).collect(),
            self.temperature,
            self.hbar,
        )
    }

    /// `hbar omega_i / kT`, infinite at zero temperature.
    pub fn thermal_ratio(&self, i: usize) -> f64 {
        match self.temperature {
            Temperature::Zero => f64::INFINITY,
            Temperature::Finite { kt } => self.hbar * self.omegas[i] / kt,
        }
    }

    /// `coth(hbar omega_i / 2kT)`, equal to 1 at zero temperature.
    pub fn coth_factor(&self, i: usize) -> f64 {
        coth(0.5 * self.thermal_ratio(i))
    }

    /// `c_i^2 / (2 m omega_i)`
    pub fn weight(&self, i: usize) -> f64 {
        let c = self.couplings[i];
        c * c / (2.0 * self.mass * self.omegas[i])
    }
}

pub(crate) fn coth(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else if x.abs() < 1e-4 {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

/// Classical bath trajectory `X(t') = A sin(omega t') + B cos(omega t')`
/// through fixed endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPath {
    pub omega: f64,
    pub t_final: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub a: f64,
    pub b: f64,
}

impl ClassicalPath {
    pub fn at(&self, t: f64) -> f64 {
        let (s, c) = (self.omega * t).sin_cos();
        self.a * s + self.b * c
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let (s, c) = (self.omega * t).sin_cos();
        self.omega * (self.a * c - self.b * s)
    }
}

fn caustic_guard(sin_abs: f64) -> Result<()> {
    if sin_abs < CAUSTIC_TOLERANCE {
        Err(Error::Caustic {
            sin_abs,
            tolerance: CAUSTIC_TOLERANCE,
        })
    } else {
        Ok(())
    }
}

pub fn classical_solution(x_start: f64, x_end: f64, omega: f64, t_final: f64) -> Result<ClassicalPath> {
    let (s, c) = (omega * t_final).sin_cos();
    caustic_guard(s.abs())?;
    Ok(ClassicalPath {
        omega,
        t_final,
        x_start,
        x_end,
        a: x_end / s - x_start * c / s,
        b: x_start,
    })
}

/// Green's function of `d^2/dt'^2 + omega^2` with zero endpoints on
/// `[0, t_final]`, in the normalization `m (d^2/dt1^2 + omega^2) G = -delta(t1 - t2)`:
/// `G = sin(omega (t_final - t1)) sin(omega t2) / (m omega sin(omega t_final))` for `t2 <= t1`.
pub fn greens_function(omega: f64, t_final: f64, t1: f64, t2: f64, m: f64) -> Result<f64> {
    for (name, t) in [("t1", t1), ("t2", t2)] {
        if !(0.0..=t_final).contains(&t) {
            return Err(Error::Domain(format!(
                "greens_function: {name} = {t} outside [0, {t_final}]"
            )));
        }
    }
    let sin_t = (omega * t_final).sin();
    caustic_guard(sin_t.abs())?;
    let (late, early) = if t2 <= t1 { (t1, t2) } else { (t2, t1) };
    Ok((omega * (t_final - late)).sin() * (omega * early).sin() / (m * omega * sin_t))
}

/// Per-oscillator log of the normalized thermal density matrix in position.
fn thermal_log_factor(m: f64, w: f64, hbar: f64, r: f64, x: f64, y: f64) -> f64 {
    let log_norm = if r.is_infinite() {
        0.5 * (m * w / (PI * hbar)).ln()
    } else {
        0.5 * (m * w / (PI * hbar)).ln() + (-(-r).exp()).ln_1p() - 0.5 * (-(-2.0 * r).exp()).ln_1p()
    };
    let (coth_r, csch_r) = if r.is_infinite() {
        (1.0, 0.0)
    } else {
        (coth(r), 1.0 / r.sinh())
    };
    log_norm - m * w / (2.0 * hbar) * ((x * x + y * y) * coth_r - 2.0 * x * y * csch_r)
}

fn check_lengths(bath: &BathSpec, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != bath.len() || y.len() != bath.len() {
        return Err(Error::shape(
            "thermal_density",
            format!("{} endpoints per path", bath.len()),
            format!("{} and {}", x.len(), y.len()),
        ));
    }
    Ok(())
}

/// Log of the bath's normalized thermal density matrix `<X|exp(-H/kT)|Y> / Z`.
pub fn thermal_log_density(bath: &BathSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(bath, x, y)?;
    Ok((0..bath.len())
        .map(|i| {
            thermal_log_factor(
                bath.mass,
                bath.omegas[i],
                bath.hbar,
                bath.thermal_ratio(i),
                x[i],
                y[i],
            )
        })
        .sum())
}

/// Normalized thermal density matrix of the bath,
/// `prod_i sqrt(m w / pi hbar) (1 - e^{-r}) / sqrt(1 - e^{-2r})
///  exp{-(m w / 2 hbar sinh r)[(X^2 + Y^2) cosh r - 2XY]}`, `r = hbar w / kT`.
pub fn thermal_density(bath: &BathSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(thermal_log_density(bath, x, y)?.exp())
}

/// The thermal density with the literal prefactor `m w / (2 pi hbar sinh r)`
/// in place of the normalization. Its exponent is identical to
/// [`thermal_density`]; the two differ by a constant factor per oscillator.
pub fn thermal_density_as_printed(bath: &BathSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(bath, x, y)?;
    let mut log = 0.0;
    for i in 0..bath.len() {
        let (m, w, hbar) = (bath.mass, bath.omegas[i], bath.hbar);
        let r = bath.thermal_ratio(i);
        let sinh_r = r.sinh();
        if !sinh_r.is_finite() {
            return Err(Error::Range {
                index: i,
                detail: format!("sinh(hbar omega / kT) overflows at ratio {r}"),
            });
        }
        let (xi, yi) = (x[i], y[i]);
        log += (m * w / (2.0 * PI * hbar * sinh_r)).ln()
            - m * w / (2.0 * hbar * sinh_r) * ((xi * xi + yi * yi) * r.cosh() - 2.0 * xi * yi);
    }
    Ok(log.exp())
}

/// Noise kernel `nu(s) = sum_i c_i^2/(2 m w_i) coth(hbar w_i / 2kT) cos(w_i s)`.
pub fn noise_kernel(bath: &BathSpec, s: f64) -> f64 {
    (0..bath.len())
        .map(|i| bath.weight(i) * bath.coth_factor(i) * (bath.omegas[i] * s).cos())
        .sum()
}

/// Dissipation kernel `eta(s) = sum_i c_i^2/(2 m w_i) sin(w_i s)`.
pub fn dissipation_kernel(bath: &BathSpec, s: f64) -> f64 {
    (0..bath.len())
        .map(|i| bath.weight(i) * (bath.omegas[i] * s).sin())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_system::{position_hamiltonian, SystemSpec};
    use crate::numerics::{eigh, hermitian_function, re, PositionGrid};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn one(omega: f64, kt: f64) -> BathSpec {
        BathSpec::new(1.0, alloc::vec![omega], alloc::vec![0.5], Temperature::Finite { kt }, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        let err = BathSpec::new(1.0, alloc::vec![1.0, 0.0], alloc::vec![1.0], Temperature::Zero, 1.0).unwrap_err();
        let Error::Validation(msg) = err else { panic!() };
        assert!(msg.contains("2 frequencies but 1 couplings") && msg.contains("omega[1]"));
    }

    #[test]
    fn classical_path_examples() {
        let p = classical_solution(0.0, 1.0, 1.0, core::f64::consts::FRAC_PI_2).unwrap();
        let h = 1e-3;
        for k in 1..100 {
            let t = k as f64 * 0.015;
            assert!((p.at(t) - t.sin()).abs() < 1e-12);
            let acc = (p.at(t + h) - 2.0 * p.at(t) + p.at(t - h)) / (h * h);
            assert!((acc + p.at(t)).abs() < 1e-6);
        }
        assert!(matches!(classical_solution(0.0, 1.0, 1.0, PI), Err(Error::Caustic { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn classical_path_meets_endpoints(
            xs in -5.0..5.0f64, xe in -5.0..5.0f64, w in 0.1..3.0f64, t in 0.05..6.0f64,
        ) {
            let s = (w * t).sin().abs();
            prop_assume!(s > 1e-3);
            let p = classical_solution(xs, xe, w, t).unwrap();
            prop_assert_eq!(p.b, xs);
            prop_assert_eq!(p.at(0.0), xs);
            let scale = xe.abs().max(xs.abs() / s).max(1.0);
            prop_assert!((p.at(t) - xe).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn greens_function_boundaries_and_jump() {
        let (w, tf, m) = (1.3, 2.0, 0.7);
        assert_eq!(greens_function(w, tf, 1.2, 0.0, m).unwrap(), 0.0);
        assert!(greens_function(w, tf, tf, 0.5, m).unwrap().abs() < 1e-16);
        assert!(matches!(greens_function(w, tf, 2.5, 0.5, m), Err(Error::Domain(_))));
        let h = 1e-3;
        let g = |t1: f64| greens_function(w, tf, t1, 0.8, m).unwrap();
        for &t1 in &[0.3, 1.5] {
            let r = m * ((g(t1 + h) - 2.0 * g(t1) + g(t1 - h)) / (h * h) + w * w * g(t1));
            assert!(r.abs() < 1e-4);
        }
        let right = (-3.0 * g(0.8) + 4.0 * g(0.8 + h) - g(0.8 + 2.0 * h)) / (2.0 * h);
        let left = (3.0 * g(0.8) - 4.0 * g(0.8 - h) + g(0.8 - 2.0 * h)) / (2.0 * h);
        assert!((m * (right - left) + 1.0).abs() < 1e-3);
    }

    #[test]
    fn greens_function_matches_dense_solve() {
        // m (g[i+1] - 2 cos(wh) g[i] + g[i-1]) = -sin(wh)/w delta_ij is exact
        // for piecewise harmonic solutions with a unit slope jump.
        let (w, tf, m) = (1.1, 2.5, 1.4);
        let n = 200;
        let h = tf / (n + 1) as f64;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = -2.0 * m * (w * h).cos();
            if i > 0 {
                a[(i, i - 1)] = m;
            }
            if i + 1 < n {
                a[(i, i + 1)] = m;
            }
        }
        let lu = a.lu();
        let mut worst = 0.0f64;
        for &j in &[20usize, 99, 170] {
            let mut rhs = DVector::<f64>::zeros(n);
            rhs[j] = -(w * h).sin() / w;
            let sol = lu.solve(&rhs).unwrap();
            let t2 = (j + 1) as f64 * h;
            for i in 0..n {
                let t1 = (i + 1) as f64 * h;
                worst = worst.max((sol[i] - greens_function(w, tf, t1, t2, m).unwrap()).abs());
            }
        }
        assert!(worst < 1e-6, "{worst:e}");
    }

    #[test]
    fn thermal_density_symmetric_and_normalized() {
        let bath = one(1.3, 0.8);
        assert_eq!(
            thermal_density(&bath, &[0.3], &[-0.4]).unwrap(),
            thermal_density(&bath, &[-0.4], &[0.3]).unwrap()
        );
        let width = (bath.coth_factor(0) / (2.0 * 1.3)).sqrt();
        let grid = PositionGrid::symmetric(801, 6.0 * width).unwrap();
        let total: f64 = grid
            .points()
            .iter()
            .map(|&x| thermal_density(&bath, &[x], &[x]).unwrap())
            .sum::<f64>()
            * grid.dx();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn thermal_density_matches_gibbs_state_on_grid() {
        let (w, kt) = (1.0, 0.7);
        let bath = one(w, kt);
        let grid = PositionGrid::symmetric(64, 7.0).unwrap();
        let spec = SystemSpec::harmonic(1.0, w, 1.0).unwrap();
        let eig = eigh(&position_hamiltonian(&spec, &grid)).unwrap();
        let e0 = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        let gibbs = hermitian_function(&eig, |e| re((-(e - e0) / kt).exp()));
        let z: f64 = (0..64).map(|j| gibbs[(j, j)].re).sum();
        let dx = grid.dx();
        let mut worst = 0.0f64;
        for j in 0..64 {
            for k in 0..64 {
                let exact = thermal_density(&bath, &[grid.point(j)], &[grid.point(k)]).unwrap();
                if exact < 1e-3 {
                    continue;
                }
                let num = gibbs[(j, k)].re / (z * dx);
                worst = worst.max((num - exact).abs() / exact);
            }
        }
        assert!(worst < 1e-3, "{worst:e}");
    }

    #[test]
    fn as_printed_form_differs_by_a_constant_factor() {
        let bath = one(1.0, 0.5);
        let ratio = |x: f64, y: f64| {
            thermal_density_as_printed(&bath, &[x], &[y]).unwrap() / thermal_density(&bath, &[x], &[y]).unwrap()
        };
        let r0 = ratio(0.0, 0.0);
        assert!((r0 - 1.0).abs() > 1e-2);
        assert!((ratio(0.7, -0.2) / r0 - 1.0).abs() < 1e-12);
        let cold = one(1.0, 1e-4);
        assert!(matches!(
            thermal_density_as_printed(&cold, &[0.0], &[0.0]),
            Err(Error::Range { index: 0, .. })
        ));
        assert!(thermal_density(&cold, &[0.1], &[0.1]).unwrap() > 0.0);
    }

    #[test]
    fn kernel_examples() {
        let bath = BathSpec::new(
            1.2,
            alloc::vec![0.5, 1.0, 2.5],
            alloc::vec![0.3, -0.2, 0.7],
            Temperature::Finite { kt: 1.5 },
            1.0,
        )
        .unwrap();
        let at_zero: f64 = (0..3).map(|i| bath.weight(i) * bath.coth_factor(i)).sum();
        assert_eq!(noise_kernel(&bath, 0.0), at_zero);
        assert_eq!(noise_kernel(&bath, 0.7), noise_kernel(&bath, -0.7));
        assert_eq!(dissipation_kernel(&bath, 0.0), 0.0);
        assert_eq!(dissipation_kernel(&bath, -0.7), -dissipation_kernel(&bath, 0.7));
        let hot = bath.with_temperature(Temperature::Finite { kt: 9.0 }).unwrap();
        assert_eq!(dissipation_kernel(&bath, 1.3), dissipation_kernel(&hot, 1.3));
        let doubled = bath.scaled_couplings(2.0).unwrap();
        for &s in &[0.0, 0.4, -2.0] {
            assert!((noise_kernel(&doubled, s) - 4.0 * noise_kernel(&bath, s)).abs() < 1e-14);
            assert!((dissipation_kernel(&doubled, s) - 4.0 * dissipation_kernel(&bath, s)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_temperature_and_high_temperature_limits() {
        let cold = BathSpec::uniform(1, 1.0, 2.0, 1.0, Temperature::Zero, 1.0).unwrap();
        assert_eq!(cold.coth_factor(0), 1.0);
        let hot = one(0.1, 1.0);
        let r = hot.thermal_ratio(0) / 2.0;
        assert!(r <= 0.1);
        assert!((hot.coth_factor(0) / (1.0 / r) - 1.0).abs() < 0.01);
    }
}
