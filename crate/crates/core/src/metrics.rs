//! Error functionals, admissible step sizes, and closure diagnostics.

use serde::{Deserialize, Serialize};

use crate::assembly::LiftedAffineSystem;
use crate::basis::MonomialBasis;
use crate::error::{CarlemanError, Result};
use crate::integrate::Trajectory;
use crate::linalg::{norm_inf, LuFactors};
use crate::operator::PolynomialOperator;
use crate::sparse::CsrMatrix;

/// Time grids are considered equal when nodes agree to this tolerance.
pub const GRID_TOLERANCE: f64 = 1e-12;

/// Error of one approximate trajectory against a reference on the same grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub dt: f64,
    pub n_steps: usize,
    /// `max_k ‖x_k - x_k^ref‖₂`.
    pub max_error: f64,
    /// Frobenius norm over all samples and states.
    pub frob_error: f64,
    pub per_state_max: Vec<f64>,
}

/// Euclidean error per sample, maximized over the grid.
pub fn max_error(approx: &Trajectory, reference: &Trajectory) -> Result<ErrorReport> {
    if approx.len() != reference.len() || approx.len() < 2 {
        return Err(CarlemanError::GridMismatch(format!(
            "{} samples vs {} reference samples",
            approx.len(),
            reference.len()
        )));
    }
    for (k, (a, b)) in approx.times.iter().zip(&reference.times).enumerate() {
        if (a - b).abs() > GRID_TOLERANCE * a.abs().max(1.0) {
            return Err(CarlemanError::GridMismatch(format!(
                "node {k}: t = {a} vs {b}"
            )));
        }
    }
    let n = approx.dim();
    if reference.dim() != n {
        return Err(CarlemanError::DimensionMismatch {
            expected: n,
            found: reference.dim(),
        });
    }

    let mut worst: f64 = 0.0;
    let mut frob_sq = 0.0;
    let mut per_state_max = vec![0.0f64; n];
    for (xa, xr) in approx.states.iter().zip(&reference.states) {
        let mut sq = 0.0;
        for (j, (a, r)) in xa.iter().zip(xr).enumerate() {
            let e = a - r;
            sq += e * e;
            per_state_max[j] = per_state_max[j].max(e.abs());
        }
        frob_sq += sq;
        worst = worst.max(sq.sqrt());
    }

    let n_steps = approx.len() - 1;
    let span = approx.times[n_steps] - approx.times[0];
    Ok(ErrorReport {
        dt: span / n_steps as f64,
        n_steps,
        max_error: worst,
        frob_error: frob_sq.sqrt(),
        per_state_max,
    })
}

/// Largest tested `Δt` with `E(Δt) <= tol`, or `None`.
///
/// Restricted to the tested grid; no interpolation between points.
pub fn dt_max(reports: &[ErrorReport], tol: f64) -> Option<f64> {
    reports
        .iter()
        .filter(|r| r.max_error <= tol)
        .map(|r| r.dt)
        .reduce(f64::max)
}

/// Step-size gain `Δt_max^lift(e) / Δt_max^Jac(e)`.
pub fn gain(lifted: &[ErrorReport], jacobian: &[ErrorReport], tol: f64) -> Option<f64> {
    Some(dt_max(lifted, tol)? / dt_max(jacobian, tol)?)
}

/// Least-squares slope of `log E` against `log Δt`.
///
/// Points with non-positive error are skipped; `None` if fewer than two
/// remain or all `Δt` coincide.
pub fn convergence_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(dt, e)| *dt > 0.0 && *e > 0.0 && e.is_finite())
        .map(|(dt, e)| (dt.ln(), e.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Closure error propagated through one implicit Euler step.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolventStep {
    /// `(I - Δt A)^{-1} Δt r`.
    pub delta: Vec<f64>,
    /// `‖(I - Δt A)^{-1}‖∞`, assembled from unit-vector solves.
    pub amplification: f64,
}

pub fn resolvent_step_error(a_zz: &CsrMatrix, dt: f64, residual: &[f64]) -> Result<ResolventStep> {
    let nz = a_zz.nrows();
    if residual.len() != nz {
        return Err(CarlemanError::DimensionMismatch {
            expected: nz,
            found: residual.len(),
        });
    }
    let lu = LuFactors::factor(a_zz.shifted_identity(dt))?;
    let scaled: Vec<f64> = residual.iter().map(|r| dt * r).collect();
    let delta = lu.solve(&scaled)?;

    let mut row_sums = vec![0.0; nz];
    let mut unit = vec![0.0; nz];
    for j in 0..nz {
        unit[j] = 1.0;
        let col = lu.solve(&unit)?;
        unit[j] = 0.0;
        for (s, c) in row_sums.iter_mut().zip(&col) {
            *s += c.abs();
        }
    }
    Ok(ResolventStep {
        delta,
        amplification: norm_inf(&row_sums),
    })
}

/// Pointwise truncation residual `ż_exact - (A_ZZ z + b_Z)` at `probe`.
///
/// With `d = probe - center`, the exact lifted derivative is
/// `ż_α = Σ_i α_i d^{α-e_i} f_i(probe)`.
pub fn closure_residual(
    op: &PolynomialOperator,
    lifted: &LiftedAffineSystem,
    basis_z: &MonomialBasis,
    probe: &[f64],
) -> Result<Vec<f64>> {
    let n = op.n();
    if probe.len() != n || lifted.center.len() != n {
        return Err(CarlemanError::DimensionMismatch {
            expected: n,
            found: probe.len(),
        });
    }
    if basis_z.n() != n || basis_z.len() != lifted.dim() {
        return Err(CarlemanError::DimensionMismatch {
            expected: lifted.dim(),
            found: basis_z.len(),
        });
    }
    let f = op.eval_rhs(probe)?;
    let d: Vec<f64> = probe.iter().zip(&lifted.center).map(|(p, c)| p - c).collect();
    let z = basis_z.evaluate(&d);
    let model = lifted.apply(&z);

    Ok(basis_z
        .members()
        .iter()
        .zip(model)
        .map(|(alpha, m)| {
            let exact: f64 = (0..n)
                .filter_map(|i| {
                    let reduced = alpha.minus_unit(i)?;
                    Some(f64::from(alpha.powers()[i]) * reduced.eval(&d) * f[i])
                })
                .sum();
            exact - m
        })
        .collect())
}
