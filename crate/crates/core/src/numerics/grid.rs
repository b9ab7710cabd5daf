use alloc::format;
use alloc::vec::Vec;


#[allow(unused_imports)]
use num_traits::Float;
use crate::{Error, Result};

/// Uniform position grid with inclusive endpoints.
///
/// Values outside `[x_min, x_max]` are treated as zero (hard wall).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionGrid {
    n_points: usize,
    x_min: f64,
    x_max: f64,
}

impl PositionGrid {
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::Validation(format!(
                "grid needs at least 2 points, got {n_points}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::Validation(format!(
                "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self {
            n_points,
            x_min,
            x_max,
        })
    }

    /// Grid symmetric about the origin.
    pub fn symmetric(n_points: usize, half_width: f64) -> Result<Self> {
        Self::new(n_points, -half_width, half_width)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        if j + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + j as f64 * self.dx()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Largest |x| on the grid.
    pub fn max_abs(&self) -> f64 {
        self.x_min.abs().max(self.x_max.abs())
    }
}

/// Uniform time mesh `0, dt, ..., t_total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMesh {
    n_steps: usize,
    t_total: f64,
}

impl TimeMesh {
    pub fn new(n_steps: usize, t_total: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Validation("time mesh needs at least one step".into()));
        }
        if !(t_total.is_finite() && t_total > 0.0) {
            return Err(Error::Validation(format!(
                "time mesh needs t_total > 0, got {t_total}"
            )));
        }
        Ok(Self { n_steps, t_total })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn t_total(&self) -> f64 {
        self.t_total
    }

    pub fn dt(&self) -> f64 {
        self.t_total / self.n_steps as f64
    }

    /// Mesh point `k`; each point carries at most one rounding.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_total
        } else {
            self.t_total * k as f64 / self.n_steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    /// Index of the mesh point equal to `t` up to a relative 1e-9.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt()).round();
        if !(0.0..=self.n_steps as f64).contains(&k) {
            return None;
        }
        let k = k as usize;
        let tol = 1e-9 * self.t_total.max(1.0);
        ((self.time(k) - t).abs() <= tol).then_some(k)
    }

    /// Composite trapezoid weights on the mesh.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut w = alloc::vec![dt; self.n_points()];
        w[0] = 0.5 * dt;
        w[self.n_steps] = 0.5 * dt;
        w
    }
}
