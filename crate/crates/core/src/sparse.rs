//! Compressed sparse row storage for symmetric matrices.
//!
//! Only the upper triangle is accumulated; the lower triangle is mirrored
//! from it in [`SymmetricBuilder::finish`], so `A == A^T` holds bitwise.

use std::io::{self, Write};

use crate::exec::{map_indexed, Execution};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.matvec_with(Execution::Sequential, x)
    }

    pub fn matvec_with(&self, exec: Execution, x: &[f64]) -> Vec<f64> {
        map_indexed(exec, self.nrows, |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum()
        })
    }

    /// Quadratic form `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.nrows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| self.get(j, i) == v)
        })
    }

    /// Dense row-major copy (small instances only).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.nrows]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        out
    }

    /// Coordinate text format: one `i j value` line per stored entry, 0-based.
    pub fn write_coo<W: Write>(&self, mut out: W) -> io::Result<()> {
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(out, "{i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Accumulates a symmetric matrix whose sparsity is the union of dense blocks.
#[derive(Debug, Clone)]
pub struct SymmetricBuilder {
    matrix: CsrMatrix,
}

impl SymmetricBuilder {
    /// Pattern covering every pair inside each block of global indices.
    pub fn new<'a, I>(nrows: usize, blocks: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nrows];
        for block in blocks {
            for &i in block {
                rows[i].extend_from_slice(block);
            }
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        SymmetricBuilder { matrix: CsrMatrix { nrows, row_ptr, col_idx, values } }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let start = self.matrix.row_ptr[i];
        let (cols, _) = self.matrix.row(i);
        start + cols.binary_search(&j).expect("entry outside the assembled pattern")
    }

    /// Adds a dense symmetric local matrix (row-major, `dofs.len()^2`) at `dofs`.
    ///
    /// Local entries mapping to the same global pair are summed; only pairs
    /// with `i <= j` are stored before mirroring.
    pub fn add_local(&mut self, dofs: &[usize], local: &[f64]) {
        let n = dofs.len();
        debug_assert_eq!(local.len(), n * n);
        for a in 0..n {
            for b in 0..n {
                let (i, j) = (dofs[a], dofs[b]);
                if i <= j {
                    let s = self.slot(i, j);
                    self.matrix.values[s] += local[a * n + b];
                }
            }
        }
    }

    pub fn finish(mut self) -> CsrMatrix {
        for i in 0..self.matrix.nrows {
            let range = self.matrix.row_ptr[i]..self.matrix.row_ptr[i + 1];
            for p in range {
                let j = self.matrix.col_idx[p];
                if j < i {
                    let s = self.slot(j, i);
                    self.matrix.values[p] = self.matrix.values[s];
                }
            }
        }
        self.matrix
    }
}
