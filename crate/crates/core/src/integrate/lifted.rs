use super::{check_span, check_state, uniform_grid, Trajectory, TrajectoryMeta};
use crate::assembly::{assemble_lifted, shift_operator, ClosureMode, LiftStructure, LiftedAffineSystem};
use crate::error::Result;
use crate::linalg::LuFactors;
use crate::operator::PolynomialOperator;

/// Moving-center shift-and-lift implicit Euler.
///
/// The lift structure is built once; every step re-shifts about the
/// current state, reassembles `(A_ZZ, b_Z)`, solves
/// `(I - Δt A_ZZ) z = Δt b_Z`, and advances the state by the degree-1
/// block of `z`.
#[derive(Clone, Debug)]
pub struct LiftedEulerSolver<'a> {
    op: &'a PolynomialOperator,
    structure: LiftStructure,
    mode: ClosureMode,
}

#[derive(Clone, Debug)]
pub struct LiftedSolution {
    pub trajectory: Trajectory,
    /// Operator assembled at the last step.
    pub final_system: LiftedAffineSystem,
}

impl<'a> LiftedEulerSolver<'a> {
    pub fn new(op: &'a PolynomialOperator, q: u32, mode: ClosureMode) -> Result<Self> {
        let structure = LiftStructure::build(op.n(), op.degree(), q)?;
        Ok(Self {
            op,
            structure,
            mode,
        })
    }

    pub fn structure(&self) -> &LiftStructure {
        &self.structure
    }

    /// Assemble and solve one step from `x`; returns the state increment.
    pub fn step(&self, x: &[f64], dt: f64) -> Result<(Vec<f64>, LiftedAffineSystem)> {
        let shifted = shift_operator(self.op, x)?;
        let system = assemble_lifted(&shifted, &self.structure, self.mode)?;
        debug_assert_eq!(system.center, x, "lift is centered at the current state");
        let m = system.a_zz.shifted_identity(dt);
        let rhs: Vec<f64> = system.b_z.iter().map(|b| dt * b).collect();
        let z = LuFactors::factor(m)?.solve(&rhs)?;
        let n = self.op.n();
        Ok((z[..n].to_vec(), system))
    }

    pub fn run(&self, x0: &[f64], t_span: (f64, f64), n_steps: usize) -> Result<LiftedSolution> {
        check_state(self.op.n(), x0)?;
        check_span(t_span, n_steps)?;
        let times = uniform_grid(t_span.0, t_span.1, n_steps);
        let dt = (t_span.1 - t_span.0) / n_steps as f64;

        let mut states = Vec::with_capacity(n_steps + 1);
        let mut x = x0.to_vec();
        states.push(x.clone());
        let mut last = None;
        for _ in 0..n_steps {
            let (dx, system) = self.step(&x, dt)?;
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            states.push(x.clone());
            last = Some(system);
        }

        Ok(LiftedSolution {
            trajectory: Trajectory {
                times,
                states,
                meta: TrajectoryMeta {
                    solver: "lifted".into(),
                    dt: Some(dt),
                    n_steps: Some(n_steps),
                    p: Some(self.structure.p()),
                    q: Some(self.structure.q()),
                    ..TrajectoryMeta::default()
                },
            },
            final_system: last.expect("n_steps >= 1"),
        })
    }
}

/// Convenience wrapper returning only the trajectory.
pub fn solve_lifted_euler(
    op: &PolynomialOperator,
    x0: &[f64],
    t_span: (f64, f64),
    n_steps: usize,
    q: u32,
    mode: ClosureMode,
) -> Result<Trajectory> {
    Ok(LiftedEulerSolver::new(op, q, mode)?
        .run(x0, t_span, n_steps)?
        .trajectory)
}
