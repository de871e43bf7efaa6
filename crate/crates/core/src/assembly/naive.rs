use super::{AssemblyStats, ClosureMode, LiftedAffineSystem, ShiftedOperator};
use crate::basis::{ExponentVector, MonomialBasis};
use crate::error::{CarlemanError, Result};
use crate::linalg::DenseMatrix;
use crate::sparse::TripletBuffer;

/// Term-by-term lift with linear search over `𝒵`; no keys, no cache.
///
/// Accumulates into a dense matrix and records which positions received a
/// nonzero contribution, so its sparsity pattern is comparable with
/// [`assemble_lifted`](super::assemble_lifted).
pub fn assemble_naive(
    shifted: &ShiftedOperator,
    p: u32,
    q: u32,
    mode: ClosureMode,
) -> Result<LiftedAffineSystem> {
    if p < 1 || p > q {
        return Err(CarlemanError::InvalidDimension(format!(
            "naive assembly needs 1 <= P <= Q, got P = {p}, Q = {q}"
        )));
    }
    let n = shifted.n();
    let ys: Vec<ExponentVector> = MonomialBasis::generate(n, p)?.members().to_vec();
    let zs: Vec<ExponentVector> = MonomialBasis::generate(n, q)?.members().to_vec();
    if shifted.a_shift.rows() != n || shifted.a_shift.cols() != ys.len() {
        return Err(CarlemanError::DimensionMismatch {
            expected: ys.len(),
            found: shifted.a_shift.cols(),
        });
    }
    let find = |target: &ExponentVector| zs.iter().position(|z| z == target);

    let nz = zs.len();
    let mut dense = DenseMatrix::zeros(nz, nz);
    let mut touched = vec![false; nz * nz];
    let mut b_z = vec![0.0; nz];
    let mut stats = AssemblyStats {
        t_shift: shifted.t_shift,
        ..AssemblyStats::default()
    };

    // Lift terms first, then b_Y-driven terms, matching the keyed path's
    // per-entry summation order.
    for (row, alpha) in zs.iter().enumerate() {
        for i in 0..n {
            let Some(reduced) = alpha.minus_unit(i) else {
                continue;
            };
            let multiplier = f64::from(alpha.powers()[i]);
            for (beta_col, beta) in ys.iter().enumerate() {
                stats.t_lift += 1;
                let gamma = reduced.plus(beta);
                let value = multiplier * shifted.a_shift[(i, beta_col)];
                if gamma.degree() > q {
                    stats.dropped += 1;
                    if value != 0.0 && mode == ClosureMode::Fold {
                        b_z[row] += value * gamma.eval(&shifted.center);
                    }
                    continue;
                }
                if value == 0.0 {
                    continue;
                }
                let col = find(&gamma).expect("degree <= Q target exists");
                dense[(row, col)] += value;
                touched[row * nz + col] = true;
                stats.emitted += 1;
            }
        }
    }
    for (row, alpha) in zs.iter().enumerate() {
        for i in 0..n {
            let Some(reduced) = alpha.minus_unit(i) else {
                continue;
            };
            stats.t_offset += 1;
            let value = f64::from(alpha.powers()[i]) * shifted.b_y[i];
            if value == 0.0 {
                continue;
            }
            if reduced.degree() == 0 {
                b_z[row] += value;
            } else {
                let col = find(&reduced).expect("alpha - e_i is in Z");
                dense[(row, col)] += value;
                touched[row * nz + col] = true;
                stats.emitted += 1;
            }
        }
    }

    let mut out = TripletBuffer::new(nz, nz);
    for row in 0..nz {
        for col in 0..nz {
            if touched[row * nz + col] {
                out.push(row, col, dense[(row, col)]);
            }
        }
    }
    let a_zz = out.compress();
    stats.u_ours = a_zz.nnz();

    Ok(LiftedAffineSystem {
        a_zz,
        b_z,
        center: shifted.center.clone(),
        stats,
    })
}
