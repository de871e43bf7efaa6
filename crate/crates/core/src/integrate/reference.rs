//! Dormand–Prince 5(4) with step-size control, landing exactly on every
//! requested sample time.

use super::{check_state, Trajectory, TrajectoryMeta};
use crate::error::{CarlemanError, Result};
use crate::operator::PolynomialOperator;

/// Default `rtol = atol` for reference solves.
pub const DEFAULT_REFERENCE_TOL: f64 = 1e-10;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrate `ẋ = f(t, x)` adaptively, returning the state at each sample.
///
/// `sample_times` must be non-decreasing and inside `t_span`. The accepted
/// local error satisfies `|err_i| <= atol + rtol·max(|x_i|, |x_i'|)`.
pub fn adaptive_rk45<F>(
    mut f: F,
    x0: &[f64],
    t_span: (f64, f64),
    rtol: f64,
    atol: f64,
    sample_times: &[f64],
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = t_span;
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(CarlemanError::InvalidConfig(
            "rtol and atol must be positive".into(),
        ));
    }
    if !(t1 > t0) {
        return Err(CarlemanError::InvalidConfig(format!(
            "time span must satisfy t0 < t1, got ({t0}, {t1})"
        )));
    }
    let span = t1 - t0;
    let tiny = 1e-14 * span;
    if sample_times.windows(2).any(|w| w[1] < w[0])
        || sample_times
            .iter()
            .any(|&s| s < t0 - tiny || s > t1 + tiny)
    {
        return Err(CarlemanError::InvalidConfig(
            "sample times must be sorted and inside the time span".into(),
        ));
    }

    let n = x0.len();
    let mut x = x0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut out = Vec::with_capacity(sample_times.len());

    f(t, &x, &mut k[0]);
    let mut h = initial_step(&mut f, t, &x, &k[0], span, rtol, atol);

    for &target in sample_times {
        while target - t > tiny {
            let remaining = target - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let step = if landing { remaining } else { h };
            if step < tiny {
                return Err(CarlemanError::StepSizeUnderflow { t, h: step });
            }

            for s in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    stage[i] = x[i] + step * acc;
                }
                f(t + C[s] * step, &stage, &mut k[s]);
                if s == 6 {
                    x_new.copy_from_slice(&stage);
                }
            }

            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                let scale = atol + rtol * x[i].abs().max(x_new[i].abs());
                err = err.max((step * e).abs() / scale);
            }

            // NaN never compares <= 1, so non-finite stages are rejected.
            if err <= 1.0 {
                t = if landing { target } else { t + step };
                x.copy_from_slice(&x_new);
                // First-same-as-last: the final stage is f at the new state.
                let last = k[6].clone();
                k[0].copy_from_slice(&last);
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                if !landing {
                    h = step * factor;
                } else {
                    h = h.max(step * factor).min(span);
                }
            } else {
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
                } else {
                    MIN_FACTOR
                };
                h = step * factor;
                if h < tiny {
                    return Err(CarlemanError::StepSizeUnderflow { t, h });
                }
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Starting step from the size of `x` and `f(x)` plus one explicit Euler
/// probe of the second derivative.
fn initial_step<F>(f: &mut F, t: f64, x: &[f64], fx: &[f64], span: f64, rtol: f64, atol: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let scale: Vec<f64> = x.iter().map(|v| atol + rtol * v.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        let s: f64 = v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum();
        (s / v.len().max(1) as f64).sqrt()
    };
    let d0 = rms(x);
    let d1 = rms(fx);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let probe: Vec<f64> = x.iter().zip(fx).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; x.len()];
    f(t + h0, &probe, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(fx).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// High-accuracy reference for `ẋ = f(x)` sampled at `sample_times`.
pub fn solve_reference(
    op: &PolynomialOperator,
    x0: &[f64],
    t_span: (f64, f64),
    rtol: f64,
    atol: f64,
    sample_times: &[f64],
) -> Result<Trajectory> {
    check_state(op.n(), x0)?;
    let basis = op.basis();
    let coeffs = op.coeffs();
    let mut y = Vec::with_capacity(basis.len());
    let rhs = |_t: f64, x: &[f64], dx: &mut [f64]| {
        basis.evaluate_into(x, &mut y);
        for (i, d) in dx.iter_mut().enumerate() {
            *d = coeffs.row(i).iter().zip(&y).map(|(a, b)| a * b).sum();
        }
    };
    let states = adaptive_rk45(rhs, x0, t_span, rtol, atol, sample_times)?;
    Ok(Trajectory {
        times: sample_times.to_vec(),
        states,
        meta: TrajectoryMeta {
            solver: "reference".into(),
            rtol: Some(rtol),
            atol: Some(atol),
            p: Some(op.degree()),
            ..TrajectoryMeta::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos;
    use crate::integrate::uniform_grid;
    use crate::operator::Term;

    #[test]
    fn exponential_decay() {
        let op = PolynomialOperator::from_terms(1, 1, &[Term::new(0, &[1], -1.0)]).unwrap();
        let traj = solve_reference(&op, &[1.0], (0.0, 1.0), 1e-10, 1e-10, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(traj.states[0], vec![1.0]);
        assert!((traj.states[2][0] - (-1.0f64).exp()).abs() < 1e-8);
        assert!((traj.states[1][0] - (-0.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn driver_channels_decay_exactly() {
        let p = demos::Demo1Params::default();
        let op = demos::build_demo1(&p);
        let grid = uniform_grid(0.0, 10.0, 50);
        let traj = solve_reference(&op, &[0.0, 1.0, 1.0], (0.0, 10.0), 1e-10, 1e-10, &grid).unwrap();
        for (t, x) in grid.iter().zip(&traj.states) {
            assert!((x[1] - (-p.lambda_u * t).exp()).abs() < 1e-8);
            assert!((x[2] - (-p.lambda_v * t).exp()).abs() < 1e-8);
            assert!((x[0] - demos::demo1_x_exact(&p, [0.0, 1.0, 1.0], *t)).abs() < 1e-8);
        }
    }

    #[test]
    fn logistic_closed_form() {
        let op = PolynomialOperator::from_terms(
            1,
            2,
            &[Term::new(0, &[1], 1.0), Term::new(0, &[2], -1.0)],
        )
        .unwrap();
        let traj = solve_reference(&op, &[0.2], (0.0, 5.0), 1e-10, 1e-10, &[5.0]).unwrap();
        let e5 = 5.0f64.exp();
        let exact = 0.2 * e5 / (1.0 + 0.2 * (e5 - 1.0));
        assert!((traj.states[0][0] - exact).abs() < 1e-7);
    }

    #[test]
    fn tolerance_halving_is_consistent() {
        let op = demos::build_demo2();
        let grid = uniform_grid(0.0, 20.0, 200);
        let a = solve_reference(&op, &[0.2, 0.3], (0.0, 20.0), 1e-8, 1e-8, &grid).unwrap();
        let b = solve_reference(&op, &[0.2, 0.3], (0.0, 20.0), 5e-9, 5e-9, &grid).unwrap();
        for (sa, sb) in a.states.iter().zip(&b.states) {
            for (u, v) in sa.iter().zip(sb) {
                assert!((u - v).abs() < 10.0 * 1e-8);
            }
        }
    }

    #[test]
    fn stiff_blowup_underflows() {
        // ẋ = x² from 1 blows up at t = 1.
        let op = PolynomialOperator::from_terms(1, 2, &[Term::new(0, &[2], 1.0)]).unwrap();
        let err = solve_reference(&op, &[1.0], (0.0, 2.0), 1e-10, 1e-10, &[2.0]).unwrap_err();
        assert!(matches!(err, CarlemanError::StepSizeUnderflow { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_samples() {
        let op = demos::build_demo2();
        assert!(solve_reference(&op, &[0.2, 0.3], (0.0, 1.0), 1e-8, 1e-8, &[0.5, 0.2]).is_err());
        assert!(solve_reference(&op, &[0.2, 0.3], (0.0, 1.0), 0.0, 1e-8, &[0.5]).is_err());
    }
}
