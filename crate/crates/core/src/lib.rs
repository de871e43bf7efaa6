//! Moving-center shift-and-lift Carleman linearization for polynomial ODEs.
//!
//! A polynomial vector field `ẋ = f(x)` of degree `P` is re-centered at the
//! current state, lifted onto monomials of the deviation up to degree `Q`,
//! and advanced with a linearly implicit Euler step on the lifted affine
//! system. The crate also provides the Jacobian baseline, an adaptive
//! reference integrator, error metrics, and a sweep runner.
//!
//! ```
//! use carleman_core::{demos, solve_lifted_euler, ClosureMode};
//!
//! let op = demos::build_demo2();
//! let traj = solve_lifted_euler(&op, &[0.2, 0.3], (0.0, 1.0), 10, 3, ClosureMode::Drop).unwrap();
//! assert_eq!(traj.len(), 11);
//! ```

pub mod assembly;
pub mod basis;
pub mod demos;
pub mod error;
pub mod integrate;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod operator;
pub mod report;
pub mod sparse;
pub mod sweep;

pub use assembly::{
    assemble_lifted, assemble_naive, shift_operator, AssemblyStats, ClosureMode, LiftStructure,
    LiftedAffineSystem, ShiftedOperator,
};
pub use basis::{count_sym, count_tensor, pack_key, unpack_key, bits_required, ExponentVector, MonomialBasis};
pub use error::{CarlemanError, Result};
pub use integrate::{
    solve_jacobian_euler, solve_lifted_euler, solve_reference, uniform_grid, LiftedEulerSolver,
    Trajectory, TrajectoryMeta,
};
pub use linalg::{solve_dense, DenseMatrix, LuFactors};
pub use metrics::{
    closure_residual, convergence_slope, dt_max, gain, max_error, resolvent_step_error, ErrorReport,
};
pub use operator::{PolynomialOperator, SystemDefinition, Term};
pub use report::SweepReport;
pub use sparse::{CsrMatrix, TripletBuffer};
pub use sweep::{run_sweep, write_sweep, Method, SweepConfig, SweepOverrides, SweepResult, SystemSource};
