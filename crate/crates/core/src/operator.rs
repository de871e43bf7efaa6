//! Polynomial right-hand sides `ẋ = A_XY · y(x)` over a monomial basis.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{ExponentVector, MonomialBasis};
use crate::error::{CarlemanError, Result};
use crate::linalg::DenseMatrix;

/// One monomial term `coeff · x^exponents` in equation `row`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub row: usize,
    pub exponents: ExponentVector,
    pub coeff: f64,
}

impl Term {
    pub fn new(row: usize, exponents: &[u32], coeff: f64) -> Self {
        Self {
            row,
            exponents: ExponentVector::new(exponents.to_vec()),
            coeff,
        }
    }
}

/// On-disk system definition, `{ "n", "P", "terms": [{row, exponents, coeff}] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDefinition {
    pub n: usize,
    #[serde(rename = "P")]
    pub p: u32,
    pub terms: Vec<Term>,
}

impl SystemDefinition {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_operator(&self) -> Result<PolynomialOperator> {
        PolynomialOperator::from_terms(self.n, self.p, &self.terms)
    }
}

/// Dense `n × n_Y` coefficient matrix over the degree-`P` basis.
#[derive(Clone, Debug)]
pub struct PolynomialOperator {
    basis: MonomialBasis,
    coeffs: DenseMatrix,
}

impl PolynomialOperator {
    /// Build from a term list; repeated `(row, exponent)` pairs are summed.
    pub fn from_terms(n: usize, p: u32, terms: &[Term]) -> Result<Self> {
        let basis = MonomialBasis::generate(n, p)?;
        let mut coeffs = DenseMatrix::zeros(n, basis.len());
        for t in terms {
            if t.row >= n {
                return Err(CarlemanError::DimensionMismatch {
                    expected: n,
                    found: t.row + 1,
                });
            }
            if t.exponents.len() != n {
                return Err(CarlemanError::DimensionMismatch {
                    expected: n,
                    found: t.exponents.len(),
                });
            }
            let d = t.exponents.degree();
            if d < 1 || d > p {
                return Err(CarlemanError::DegreeOutOfRange { degree: d, max: p });
            }
            let col = basis
                .column_of(&t.exponents)
                .expect("every monomial of degree 1..=P is a basis member");
            coeffs[(t.row, col)] += t.coeff;
        }
        Ok(Self { basis, coeffs })
    }

    /// Wrap an existing coefficient matrix laid out over `basis`.
    pub fn from_matrix(basis: MonomialBasis, coeffs: DenseMatrix) -> Result<Self> {
        if coeffs.rows() != basis.n() || coeffs.cols() != basis.len() {
            return Err(CarlemanError::DimensionMismatch {
                expected: basis.len(),
                found: coeffs.cols(),
            });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// Polynomial degree bound `P`.
    pub fn degree(&self) -> u32 {
        self.basis.max_degree()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &DenseMatrix {
        &self.coeffs
    }

    /// Nonzero `(row, col, coeff)` entries in row-major order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.coeffs.rows()).flat_map(move |i| {
            self.coeffs
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(move |(j, &v)| (i, j, v))
        })
    }

    pub fn to_definition(&self) -> SystemDefinition {
        let terms = self
            .nonzeros()
            .map(|(row, col, coeff)| Term {
                row,
                exponents: self.basis.member(col).clone(),
                coeff,
            })
            .collect();
        SystemDefinition {
            n: self.n(),
            p: self.degree(),
            terms,
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(CarlemanError::DimensionMismatch {
                expected: self.n(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `f(x) = A_XY · y(x)`.
    pub fn eval_rhs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let y = self.basis.evaluate(x);
        Ok(self.coeffs.mul_vec(&y))
    }

    /// Analytic Jacobian `∂f_i/∂x_j = Σ_β A[i,β] β_j x^{β-e_j}`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DenseMatrix> {
        self.check_len(x)?;
        let n = self.n();
        let mut jac = DenseMatrix::zeros(n, n);
        for (i, col, a) in self.nonzeros() {
            let beta = self.basis.member(col);
            for (j, &bj) in beta.powers().iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let mut term = a * f64::from(bj);
                for (k, (&bk, &xk)) in beta.powers().iter().zip(x).enumerate() {
                    let p = if k == j { bk - 1 } else { bk };
                    if p > 0 {
                        term *= xk.powi(p as i32);
                    }
                }
                jac[(i, j)] += term;
            }
        }
        Ok(jac)
    }
}
