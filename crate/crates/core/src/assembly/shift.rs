use crate::error::{CarlemanError, Result};
use crate::linalg::DenseMatrix;
use crate::operator::PolynomialOperator;

/// Pascal triangle `C(a, r)` for `a <= max`, as exact small floats.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    max: usize,
    rows: Vec<Vec<f64>>,
}

impl BinomialTable {
    pub fn new(max: u32) -> Self {
        let max = max as usize;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max + 1);
        for a in 0..=max {
            let mut row = vec![1.0; a + 1];
            for r in 1..a {
                row[r] = rows[a - 1][r - 1] + rows[a - 1][r];
            }
            rows.push(row);
        }
        Self { max, rows }
    }

    #[inline]
    pub fn get(&self, a: u32, r: u32) -> f64 {
        debug_assert!(a as usize <= self.max);
        if r > a {
            0.0
        } else {
            self.rows[a as usize][r as usize]
        }
    }
}

/// `ẋ = b_Y + A_shift · y(x - center)`.
#[derive(Clone, Debug)]
pub struct ShiftedOperator {
    pub a_shift: DenseMatrix,
    pub b_y: Vec<f64>,
    pub center: Vec<f64>,
    /// Binomial terms generated, `r = 0` included.
    pub t_shift: usize,
}

impl ShiftedOperator {
    pub fn n(&self) -> usize {
        self.center.len()
    }
}

/// Expand `(d + x₀)^α` for every nonzero `A_XY[i, α]` by the multinomial
/// binomial identity. `r = 0` terms go to `b_Y`; the rest land on column `r`.
pub fn shift_operator(op: &PolynomialOperator, center: &[f64]) -> Result<ShiftedOperator> {
    let n = op.n();
    if center.len() != n {
        return Err(CarlemanError::DimensionMismatch {
            expected: n,
            found: center.len(),
        });
    }
    let basis = op.basis();
    let p = op.degree();
    let pascal = BinomialTable::new(p);

    // powers[j][k] = center_j^k
    let powers: Vec<Vec<f64>> = center
        .iter()
        .map(|&c| {
            let mut row = Vec::with_capacity(p as usize + 1);
            let mut acc = 1.0;
            for _ in 0..=p {
                row.push(acc);
                acc *= c;
            }
            row
        })
        .collect();

    let mut a_shift = DenseMatrix::zeros(n, basis.len());
    let mut b_y = vec![0.0; n];
    let mut t_shift = 0;
    let mut r = vec![0u32; n];

    for (i, col, a) in op.nonzeros() {
        let alpha = basis.member(col).powers();
        r.iter_mut().for_each(|v| *v = 0);
        // Mixed-radix walk over 0 <= r <= α.
        loop {
            t_shift += 1;
            let mut value = a;
            for j in 0..n {
                value *= pascal.get(alpha[j], r[j]) * powers[j][(alpha[j] - r[j]) as usize];
            }
            if r.iter().all(|&v| v == 0) {
                b_y[i] += value;
            } else {
                let target = basis
                    .column_of_powers(&r)
                    .expect("sub-multi-index of a basis member is a member");
                a_shift[(i, target)] += value;
            }

            let mut j = 0;
            while j < n && r[j] == alpha[j] {
                r[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
            r[j] += 1;
        }
    }

    Ok(ShiftedOperator {
        a_shift,
        b_y,
        center: center.to_vec(),
        t_shift,
    })
}
