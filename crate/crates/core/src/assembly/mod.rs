//! Shift-and-lift assembly of the truncated affine system `ż = A_ZZ z + b_Z`.
//!
//! The pipeline has two numeric stages around one cached integer structure:
//!
//! 1. [`shift_operator`] re-expands `A_XY` about a center `x₀`, giving
//!    `ẋ = b_Y + A_shift · y(x - x₀)`.
//! 2. [`LiftStructure::build`] enumerates, once per `(n, P, Q)`, every lift
//!    contribution `(α, i, β)` together with its target column, resolved by
//!    packed exponent key. Targets beyond degree `Q` are marked dropped.
//! 3. [`assemble_lifted`] streams the cached tuples against fresh numeric
//!    values, emits triplets, and coalesces duplicate targets while
//!    compressing to CSR.
//!
//! [`assemble_naive`] is an independent term-by-term implementation used as
//! the correctness oracle for the keyed path.

mod lift;
mod naive;
mod shift;
mod structure;

use serde::{Deserialize, Serialize};

use crate::sparse::CsrMatrix;

pub use lift::assemble_lifted;
pub use naive::assemble_naive;
pub use shift::{shift_operator, BinomialTable, ShiftedOperator};
pub use structure::{LiftStructure, LiftTarget, LiftTuple, OffsetTarget, OffsetTuple};

/// What happens to lift contributions whose target degree exceeds `Q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureMode {
    /// Discard them.
    #[default]
    Drop,
    /// Add `α_i · A_shift[i,β] · x₀^γ` to `b_Z` of the source row.
    Fold,
}

impl std::str::FromStr for ClosureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "drop" => Ok(ClosureMode::Drop),
            "fold" => Ok(ClosureMode::Fold),
            other => Err(format!("unknown closure mode `{other}` (expected drop or fold)")),
        }
    }
}

/// Work counters for one assembly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyStats {
    /// Terms generated by the binomial shift expansion.
    pub t_shift: usize,
    /// Lift contributions enumerated, kept and dropped.
    pub t_lift: usize,
    /// Unique nonzero positions written to `A_ZZ` after coalescing.
    pub u_ours: usize,
    /// Lift contributions truncated at degree `Q`.
    pub dropped: usize,
    /// `b_Y`-driven contributions enumerated.
    pub t_offset: usize,
    /// Nonzero triplets emitted before coalescing.
    pub emitted: usize,
}

impl AssemblyStats {
    pub fn kept(&self) -> usize {
        self.t_lift - self.dropped
    }
}

/// Truncated affine lifted dynamics built around `center`.
#[derive(Clone, Debug)]
pub struct LiftedAffineSystem {
    pub a_zz: CsrMatrix,
    pub b_z: Vec<f64>,
    pub center: Vec<f64>,
    pub stats: AssemblyStats,
}

impl LiftedAffineSystem {
    pub fn dim(&self) -> usize {
        self.b_z.len()
    }

    /// `A_ZZ z + b_Z`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.a_zz.mul_vec(z);
        for (o, b) in out.iter_mut().zip(&self.b_z) {
            *o += b;
        }
        out
    }
}
