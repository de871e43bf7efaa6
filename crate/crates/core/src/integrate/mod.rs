//! Time integration: adaptive reference, Jacobian implicit Euler, and the
//! moving-center lifted implicit Euler.

mod jacobian;
mod lifted;
mod reference;

use serde::{Deserialize, Serialize};

use crate::error::{CarlemanError, Result};

pub use jacobian::solve_jacobian_euler;
pub use lifted::{solve_lifted_euler, LiftedEulerSolver, LiftedSolution};
pub use reference::{adaptive_rk45, solve_reference, DEFAULT_REFERENCE_TOL};

/// Solver provenance carried alongside a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub solver: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
}

/// Time-sampled states.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Keep at most `max_samples` evenly strided samples, always including
    /// the first and last.
    pub fn thinned(&self, max_samples: usize) -> Trajectory {
        let len = self.len();
        if len <= max_samples || max_samples < 2 {
            return self.clone();
        }
        let stride = (len - 1).div_ceil(max_samples - 1);
        let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
        if *idx.last().unwrap() != len - 1 {
            idx.push(len - 1);
        }
        Trajectory {
            times: idx.iter().map(|&k| self.times[k]).collect(),
            states: idx.iter().map(|&k| self.states[k].clone()).collect(),
            meta: self.meta.clone(),
        }
    }
}

/// `n_steps + 1` equally spaced nodes from `t0` to exactly `t1`.
pub fn uniform_grid(t0: f64, t1: f64, n_steps: usize) -> Vec<f64> {
    let dt = (t1 - t0) / n_steps as f64;
    let mut grid: Vec<f64> = (0..=n_steps).map(|k| t0 + k as f64 * dt).collect();
    if let Some(last) = grid.last_mut() {
        *last = t1;
    }
    grid
}

pub(crate) fn check_span(t_span: (f64, f64), n_steps: usize) -> Result<()> {
    if n_steps < 1 {
        return Err(CarlemanError::InvalidConfig("n_steps must be at least 1".into()));
    }
    if !(t_span.1 > t_span.0) || !t_span.0.is_finite() || !t_span.1.is_finite() {
        return Err(CarlemanError::InvalidConfig(format!(
            "time span must satisfy t0 < t1, got ({}, {})",
            t_span.0, t_span.1
        )));
    }
    Ok(())
}

pub(crate) fn check_state(n: usize, x0: &[f64]) -> Result<()> {
    if x0.len() != n {
        return Err(CarlemanError::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    Ok(())
}
