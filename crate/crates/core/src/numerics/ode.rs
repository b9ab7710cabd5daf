use super::{is_finite, re, ComplexMatrix};
use crate::{Error, Result};

/// One classical fourth-order Runge-Kutta step of `ds/dt = rhs(s)`.
pub fn rk4_step<F>(state: &ComplexMatrix, mut rhs: F, dt: f64) -> Result<ComplexMatrix>
where
    F: FnMut(&ComplexMatrix) -> ComplexMatrix,
{
    rk4_step_t(state, 0.0, |_, s| Ok(rhs(s)), dt)
}

/// RK4 step of the non-autonomous system `ds/dt = rhs(t, s)` from time `t`.
///
/// Stages are numbered 1 to 4; a non-finite stage derivative rejects the
/// step and names the stage.
pub fn rk4_step_t<F>(state: &ComplexMatrix, t: f64, mut rhs: F, dt: f64) -> Result<ComplexMatrix>
where
    F: FnMut(f64, &ComplexMatrix) -> Result<ComplexMatrix>,
{
    let checked = |k: ComplexMatrix, stage: u8| {
        if is_finite(&k) {
            Ok(k)
        } else {
            Err(Error::RejectedStep { stage })
        }
    };
    let h = dt;
    let k1 = checked(rhs(t, state)?, 1)?;
    let k2 = checked(rhs(t + 0.5 * h, &(state + &k1 * re(0.5 * h)))?, 2)?;
    let k3 = checked(rhs(t + 0.5 * h, &(state + &k2 * re(0.5 * h)))?, 3)?;
    let k4 = checked(rhs(t + h, &(state + &k3 * re(h)))?, 4)?;
    let next = state + (k1 + k2 * re(2.0) + k3 * re(2.0) + k4) * re(h / 6.0);
    checked(next, 4)
}
