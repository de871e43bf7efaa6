use crate::basis::{pack_key, ExponentVector, MonomialBasis};
use crate::error::{CarlemanError, Result};

/// Where a lift contribution `α_i A_shift[i,β] x^{α-e_i+β}` lands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftTarget {
    /// Resolved `𝒵` column.
    Column(u32),
    /// Degree above `Q`; the packed key of `γ` is kept for closure folding.
    Dropped { key: u64 },
}

/// One `(α, i, β)` lift contribution with its resolved target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiftTuple {
    /// `𝒵` column of `α` (the output row).
    pub row: u32,
    /// State index `i`.
    pub state: u32,
    /// `𝒴` column of `β`.
    pub beta_col: u32,
    /// `α_i`.
    pub multiplier: u32,
    pub target: LiftTarget,
}

/// Destination of a `b_Y`-driven term `α_i b_Y(i) x^{α-e_i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffsetTarget {
    /// `|α - e_i| = 0`: a constant, added to `b_Z[row]`.
    BzSlot,
    /// `𝒵` column of `α - e_i`.
    Column(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OffsetTuple {
    pub row: u32,
    pub state: u32,
    pub multiplier: u32,
    pub target: OffsetTarget,
}

/// Integer structure of the lift stage for fixed `(n, P, Q)`.
///
/// Holds no coefficients, so one instance serves every center and every
/// operator sharing the dimensions.
#[derive(Clone, Debug)]
pub struct LiftStructure {
    basis_y: MonomialBasis,
    basis_z: MonomialBasis,
    lift: Vec<LiftTuple>,
    offsets: Vec<OffsetTuple>,
    dropped: usize,
}

impl LiftStructure {
    pub fn build(n: usize, p: u32, q: u32) -> Result<Self> {
        if p < 1 || p > q {
            return Err(CarlemanError::InvalidDimension(format!(
                "lift structure needs 1 <= P <= Q, got P = {p}, Q = {q}"
            )));
        }
        let basis_y = MonomialBasis::generate(n, p)?;
        let basis_z = MonomialBasis::generate(n, q)?;
        let bits = basis_z.bits();

        let mut lift = Vec::with_capacity(basis_z.len() * n * basis_y.len());
        let mut offsets = Vec::with_capacity(basis_z.len() * n);
        let mut dropped = 0;
        let mut gamma = vec![0u32; n];

        for (row, alpha) in basis_z.members().iter().enumerate() {
            for i in 0..n {
                let multiplier = alpha.powers()[i];
                if multiplier == 0 {
                    continue;
                }
                let base_degree = alpha.degree() - 1;
                for (beta_col, beta) in basis_y.members().iter().enumerate() {
                    for (g, (&a, &b)) in gamma.iter_mut().zip(alpha.powers().iter().zip(beta.powers())) {
                        *g = a + b;
                    }
                    gamma[i] -= 1;
                    let key = crate::basis::pack_unchecked(&gamma, bits);
                    let target = if base_degree + beta.degree() <= q {
                        let col = basis_z
                            .column_of_key(key)
                            .expect("target of degree <= Q is a member of Z");
                        LiftTarget::Column(col as u32)
                    } else {
                        dropped += 1;
                        LiftTarget::Dropped { key }
                    };
                    lift.push(LiftTuple {
                        row: row as u32,
                        state: i as u32,
                        beta_col: beta_col as u32,
                        multiplier,
                        target,
                    });
                }

                let target = if base_degree == 0 {
                    OffsetTarget::BzSlot
                } else {
                    let reduced = alpha.minus_unit(i).expect("alpha_i >= 1");
                    let key = pack_key(&reduced, bits)?;
                    let col = basis_z
                        .column_of_key(key)
                        .expect("alpha - e_i has degree 1..Q");
                    OffsetTarget::Column(col as u32)
                };
                offsets.push(OffsetTuple {
                    row: row as u32,
                    state: i as u32,
                    multiplier,
                    target,
                });
            }
        }

        Ok(Self {
            basis_y,
            basis_z,
            lift,
            offsets,
            dropped,
        })
    }

    pub fn n(&self) -> usize {
        self.basis_z.n()
    }

    pub fn p(&self) -> u32 {
        self.basis_y.max_degree()
    }

    pub fn q(&self) -> u32 {
        self.basis_z.max_degree()
    }

    pub fn basis_y(&self) -> &MonomialBasis {
        &self.basis_y
    }

    pub fn basis_z(&self) -> &MonomialBasis {
        &self.basis_z
    }

    pub fn lift_tuples(&self) -> &[LiftTuple] {
        &self.lift
    }

    pub fn offset_tuples(&self) -> &[OffsetTuple] {
        &self.offsets
    }

    pub fn dropped_count(&self) -> usize {
        self.dropped
    }

    /// Exponent vector of a dropped target.
    pub fn dropped_exponents(&self, key: u64) -> ExponentVector {
        crate::basis::unpack_key(key, self.n(), self.basis_z.bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(p: &[u32]) -> ExponentVector {
        ExponentVector::new(p.to_vec())
    }

    #[test]
    fn scalar_linear() {
        let s = LiftStructure::build(1, 1, 1).unwrap();
        assert_eq!(
            s.lift_tuples(),
            &[LiftTuple {
                row: 0,
                state: 0,
                beta_col: 0,
                multiplier: 1,
                target: LiftTarget::Column(0),
            }]
        );
        assert_eq!(
            s.offset_tuples(),
            &[OffsetTuple {
                row: 0,
                state: 0,
                multiplier: 1,
                target: OffsetTarget::BzSlot,
            }]
        );
    }

    #[test]
    fn mixed_monomial_targets_collide() {
        let s = LiftStructure::build(2, 1, 2).unwrap();
        let z = s.basis_z();
        let row = z.column_of(&ev(&[1, 1])).unwrap() as u32;
        let col = z.column_of(&ev(&[1, 1])).unwrap() as u32;
        let hits: Vec<_> = s
            .lift_tuples()
            .iter()
            .filter(|t| t.row == row && t.target == LiftTarget::Column(col))
            .map(|t| (t.state, t.beta_col))
            .collect();
        // i = 0 with β = (1,0), and i = 1 with β = (0,1).
        assert_eq!(hits, vec![(0, 0), (1, 1)]);
        assert_eq!(s.dropped_count(), 0);
    }

    #[test]
    fn truncation_marks_dropped() {
        let s = LiftStructure::build(1, 2, 2).unwrap();
        let t = s
            .lift_tuples()
            .iter()
            .find(|t| t.row == 1 && t.beta_col == 1)
            .unwrap();
        match t.target {
            LiftTarget::Dropped { key } => assert_eq!(s.dropped_exponents(key), ev(&[3])),
            other => panic!("expected dropped, got {other:?}"),
        }
        assert_eq!(s.dropped_count(), 1);
        // α = (2): offset target x^1.
        assert_eq!(s.offset_tuples()[1].target, OffsetTarget::Column(0));
        assert_eq!(s.offset_tuples()[1].multiplier, 2);
    }

    #[test]
    fn linear_systems_never_drop() {
        for n in 1..4 {
            for q in 1..5 {
                assert_eq!(LiftStructure::build(n, 1, q).unwrap().dropped_count(), 0);
            }
        }
    }

    #[test]
    fn rejects_p_above_q() {
        assert!(matches!(
            LiftStructure::build(2, 3, 2),
            Err(CarlemanError::InvalidDimension(_))
        ));
    }

    #[test]
    fn counts_partition() {
        let s = LiftStructure::build(3, 2, 4).unwrap();
        let z = s.basis_z();
        let expected: usize = z
            .members()
            .iter()
            .map(|a| a.powers().iter().filter(|&&p| p > 0).count())
            .sum();
        assert_eq!(s.offset_tuples().len(), expected);
        assert_eq!(s.lift_tuples().len(), expected * s.basis_y().len());
        let dropped = s
            .lift_tuples()
            .iter()
            .filter(|t| matches!(t.target, LiftTarget::Dropped { .. }))
            .count();
        assert_eq!(dropped, s.dropped_count());
    }
}
