use super::{check_span, check_state, uniform_grid, Trajectory, TrajectoryMeta};
use crate::error::Result;
use crate::linalg::{solve_dense, DenseMatrix};
use crate::operator::PolynomialOperator;

/// Linearly implicit Euler on a uniform grid: each step solves
/// `(I - Δt J(x_n)) Δx = Δt f(x_n)`.
pub fn solve_jacobian_euler(
    op: &PolynomialOperator,
    x0: &[f64],
    t_span: (f64, f64),
    n_steps: usize,
) -> Result<Trajectory> {
    check_state(op.n(), x0)?;
    check_span(t_span, n_steps)?;
    let n = op.n();
    let times = uniform_grid(t_span.0, t_span.1, n_steps);
    let dt = (t_span.1 - t_span.0) / n_steps as f64;

    let mut states = Vec::with_capacity(n_steps + 1);
    let mut x = x0.to_vec();
    states.push(x.clone());
    for _ in 0..n_steps {
        let jac = op.jacobian(&x)?;
        let mut m = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] -= dt * jac[(i, j)];
            }
        }
        let rhs: Vec<f64> = op.eval_rhs(&x)?.iter().map(|v| dt * v).collect();
        let dx = solve_dense(&m, &rhs)?;
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        states.push(x.clone());
    }

    Ok(Trajectory {
        times,
        states,
        meta: TrajectoryMeta {
            solver: "jacobian".into(),
            dt: Some(dt),
            n_steps: Some(n_steps),
            p: Some(op.degree()),
            ..TrajectoryMeta::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CarlemanError;
    use crate::operator::Term;

    #[test]
    fn one_decay_step() {
        let op = PolynomialOperator::from_terms(1, 1, &[Term::new(0, &[1], -1.0)]).unwrap();
        let traj = solve_jacobian_euler(&op, &[1.0], (0.0, 0.1), 1).unwrap();
        assert!((traj.states[1][0] - 10.0 / 11.0).abs() < 1e-15);
        assert_eq!(traj.meta.dt, Some(0.1));
    }

    #[test]
    fn linear_matches_implicit_euler() {
        let op = PolynomialOperator::from_terms(
            2,
            1,
            &[
                Term::new(0, &[1, 0], -0.5),
                Term::new(0, &[0, 1], 1.0),
                Term::new(1, &[1, 0], -1.0),
                Term::new(1, &[0, 1], -0.2),
            ],
        )
        .unwrap();
        let dt = 0.05;
        let traj = solve_jacobian_euler(&op, &[1.0, 0.0], (0.0, 1.0), 20).unwrap();
        let m = DenseMatrix::from_rows(&[vec![1.0 + 0.5 * dt, -dt], vec![dt, 1.0 + 0.2 * dt]]).unwrap();
        let mut x = vec![1.0, 0.0];
        for k in 1..=20 {
            x = solve_dense(&m, &x).unwrap();
            for (a, b) in x.iter().zip(&traj.states[k]) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn equilibrium_is_constant() {
        let op = crate::demos::build_demo2();
        let traj = solve_jacobian_euler(&op, &[0.8, 0.4], (0.0, 5.0), 10).unwrap();
        for s in &traj.states {
            assert!((s[0] - 0.8).abs() < 1e-14 && (s[1] - 0.4).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_step_matrix() {
        // ẋ = x with Δt = 1: I - Δt J = 0.
        let op = PolynomialOperator::from_terms(1, 1, &[Term::new(0, &[1], 1.0)]).unwrap();
        assert!(matches!(
            solve_jacobian_euler(&op, &[1.0], (0.0, 1.0), 1),
            Err(CarlemanError::SingularMatrix { .. })
        ));
    }
}
