//! Triplet accumulation, duplicate coalescing, and compressed-row storage.

use std::io::{self, Write};

use crate::linalg::DenseMatrix;

/// Unordered `(row, col, value)` contributions, duplicates allowed.
#[derive(Clone, Debug, Default)]
pub struct TripletBuffer {
    nrows: usize,
    ncols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl TripletBuffer {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row as u32, col as u32, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum duplicates and build CSR.
    ///
    /// Entries are bucketed by row (stable) and then stably sorted by column,
    /// so duplicates are always summed in push order.
    pub fn compress(self) -> CsrMatrix {
        let Self {
            nrows,
            ncols,
            entries,
        } = self;

        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in &entries {
            counts[r as usize + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut by_row = vec![(0u32, 0.0f64); entries.len()];
        for (r, c, v) in entries {
            let slot = &mut next[r as usize];
            by_row[*slot] = (c, v);
            *slot += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..nrows {
            let row = &mut by_row[counts[i]..counts[i + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.iter();
            if let Some(&(c0, v0)) = iter.next() {
                let (mut cur, mut acc) = (c0, v0);
                for &(c, v) in iter {
                    if c == cur {
                        acc += v;
                    } else {
                        col_idx.push(cur as usize);
                        values.push(acc);
                        cur = c;
                        acc = v;
                    }
                }
                col_idx.push(cur as usize);
                values.push(acc);
            }
            row_ptr.push(values.len());
        }

        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(col, value)` pairs stored in row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Stored value at `(i, j)`, or `None` if not in the pattern.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        let cols = &self.col_idx[span.clone()];
        cols.binary_search(&j).ok().map(|k| self.values[span.start + k])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// `I - scale · self` as a dense matrix (square only).
    pub fn shifted_identity(&self, scale: f64) -> DenseMatrix {
        debug_assert_eq!(self.nrows, self.ncols);
        let mut d = DenseMatrix::identity(self.nrows);
        for (i, j, v) in self.triplets() {
            d[(i, j)] -= scale * v;
        }
        d
    }

    /// MatrixMarket `coordinate real general`, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}
