//! Built-in benchmark systems.
//!
//! * `demo1`: bilinear driver `ẋ = -λx x + k u v`, `u̇ = -λu u`, `v̇ = -λv v`.
//! * `demo2`: logistic interaction
//!   `ẋ = a x - b x² - c x y`, `ẏ = d y - e y² - f x y`.

use serde::{Deserialize, Serialize};

use crate::error::{CarlemanError, Result};
use crate::operator::{PolynomialOperator, Term};

/// Bilinear-driver rates and coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demo1Params {
    pub lambda_x: f64,
    pub lambda_u: f64,
    pub lambda_v: f64,
    pub k: f64,
}

impl Default for Demo1Params {
    /// Chosen with `λx != λu + λv` so the closed-form `x(t)` is well defined.
    fn default() -> Self {
        Self {
            lambda_x: 1.0,
            lambda_u: 0.5,
            lambda_v: 0.7,
            k: 1.0,
        }
    }
}

pub const DEMO1_X_INIT: [f64; 3] = [0.0, 1.0, 1.0];
pub const DEMO1_T_SPAN: (f64, f64) = (0.0, 10.0);

/// Logistic-interaction coefficients `(a, b, c, d, e, f)`.
pub const DEMO2_COEFFS: [f64; 6] = [1.0, 1.0, 0.5, 0.8, 1.2, 0.4];
pub const DEMO2_X_INIT: [f64; 2] = [0.2, 0.3];
pub const DEMO2_T_SPAN: (f64, f64) = (0.0, 20.0);

pub fn build_demo1(p: &Demo1Params) -> PolynomialOperator {
    let terms = [
        Term::new(0, &[1, 0, 0], -p.lambda_x),
        Term::new(0, &[0, 1, 1], p.k),
        Term::new(1, &[0, 1, 0], -p.lambda_u),
        Term::new(2, &[0, 0, 1], -p.lambda_v),
    ];
    PolynomialOperator::from_terms(3, 2, &terms).expect("demo1 terms are valid")
}

/// Closed-form `x(t)` of the bilinear driver for initial state
/// `(x₀, u₀, v₀)`, by variation of constants.
pub fn demo1_x_exact(p: &Demo1Params, init: [f64; 3], t: f64) -> f64 {
    let [x0, u0, v0] = init;
    let s = p.lambda_u + p.lambda_v;
    let c = p.k * u0 * v0 / (p.lambda_x - s);
    c * ((-s * t).exp() - (-p.lambda_x * t).exp()) + x0 * (-p.lambda_x * t).exp()
}

pub fn build_demo2() -> PolynomialOperator {
    let [a, b, c, d, e, f] = DEMO2_COEFFS;
    let terms = [
        Term::new(0, &[1, 0], a),
        Term::new(0, &[2, 0], -b),
        Term::new(0, &[1, 1], -c),
        Term::new(1, &[0, 1], d),
        Term::new(1, &[0, 2], -e),
        Term::new(1, &[1, 1], -f),
    ];
    PolynomialOperator::from_terms(2, 2, &terms).expect("demo2 terms are valid")
}

/// Interior coexistence equilibrium of the logistic system.
pub fn demo2_equilibrium() -> [f64; 2] {
    let [a, b, c, d, e, f] = DEMO2_COEFFS;
    let det = b * e - c * f;
    [(a * e - c * d) / det, (b * d - a * f) / det]
}

/// A built-in problem: operator plus its default initial state and span.
#[derive(Clone, Debug)]
pub struct DemoProblem {
    pub name: &'static str,
    pub op: PolynomialOperator,
    pub x_init: Vec<f64>,
    pub t_span: (f64, f64),
}

pub fn demo(name: &str) -> Result<DemoProblem> {
    match name {
        "demo1" => Ok(DemoProblem {
            name: "demo1",
            op: build_demo1(&Demo1Params::default()),
            x_init: DEMO1_X_INIT.to_vec(),
            t_span: DEMO1_T_SPAN,
        }),
        "demo2" => Ok(DemoProblem {
            name: "demo2",
            op: build_demo2(),
            x_init: DEMO2_X_INIT.to_vec(),
            t_span: DEMO2_T_SPAN,
        }),
        other => Err(CarlemanError::InvalidConfig(format!(
            "unknown demo `{other}` (expected demo1 or demo2)"
        ))),
    }
}
