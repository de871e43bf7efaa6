use super::{
    AssemblyStats, ClosureMode, LiftStructure, LiftTarget, LiftedAffineSystem, OffsetTarget,
    ShiftedOperator,
};
use crate::error::{CarlemanError, Result};
use crate::sparse::TripletBuffer;

/// Key-resolved lift assembly against a cached [`LiftStructure`].
///
/// Triplets are emitted in tuple order and duplicates are summed during CSR
/// compression, so the output is bit-identical across runs.
pub fn assemble_lifted(
    shifted: &ShiftedOperator,
    structure: &LiftStructure,
    mode: ClosureMode,
) -> Result<LiftedAffineSystem> {
    check_agreement(shifted, structure)?;
    let nz = structure.basis_z().len();
    let mut triplets = TripletBuffer::with_capacity(nz, nz, structure.lift_tuples().len());
    let mut b_z = vec![0.0; nz];
    let mut stats = AssemblyStats {
        t_shift: shifted.t_shift,
        t_lift: structure.lift_tuples().len(),
        dropped: structure.dropped_count(),
        t_offset: structure.offset_tuples().len(),
        ..AssemblyStats::default()
    };

    for t in structure.lift_tuples() {
        let coeff = shifted.a_shift[(t.state as usize, t.beta_col as usize)];
        if coeff == 0.0 {
            continue;
        }
        let value = f64::from(t.multiplier) * coeff;
        match t.target {
            LiftTarget::Column(col) => {
                triplets.push(t.row as usize, col as usize, value);
                stats.emitted += 1;
            }
            LiftTarget::Dropped { key } => {
                if mode == ClosureMode::Fold {
                    let gamma = structure.dropped_exponents(key);
                    b_z[t.row as usize] += value * gamma.eval(&shifted.center);
                }
            }
        }
    }

    for o in structure.offset_tuples() {
        let by = shifted.b_y[o.state as usize];
        if by == 0.0 {
            continue;
        }
        let value = f64::from(o.multiplier) * by;
        match o.target {
            OffsetTarget::BzSlot => b_z[o.row as usize] += value,
            OffsetTarget::Column(col) => {
                triplets.push(o.row as usize, col as usize, value);
                stats.emitted += 1;
            }
        }
    }

    let a_zz = triplets.compress();
    stats.u_ours = a_zz.nnz();

    Ok(LiftedAffineSystem {
        a_zz,
        b_z,
        center: shifted.center.clone(),
        stats,
    })
}

fn check_agreement(shifted: &ShiftedOperator, structure: &LiftStructure) -> Result<()> {
    let n = structure.n();
    if shifted.n() != n || shifted.a_shift.rows() != n || shifted.b_y.len() != n {
        return Err(CarlemanError::DimensionMismatch {
            expected: n,
            found: shifted.n(),
        });
    }
    if shifted.a_shift.cols() != structure.basis_y().len() {
        return Err(CarlemanError::DimensionMismatch {
            expected: structure.basis_y().len(),
            found: shifted.a_shift.cols(),
        });
    }
    Ok(())
}
