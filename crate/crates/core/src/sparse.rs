//! Compressed sparse row matrices with line-block structure.

use crate::error::{invalid, Result};
#[cfg(feature = "parallel")]
use crate::par;

/// Square sparse matrix in CSR layout.
///
/// `lines` partitions the unknowns into contiguous index ranges ("lines") whose
/// internal coupling is tridiagonal. The eigen-solver uses them for a
/// line-relaxation preconditioner; a matrix without such structure simply has
/// one unknown per line.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    lines: Vec<usize>,
}

impl CsrMatrix {
    /// Build from per-row sorted `(column, value)` lists.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        let nnz = rows.iter().map(|r| r.len()).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for r in rows {
            let mut last = None;
            for (c, v) in r {
                if c >= n {
                    return invalid(format!("column {c} out of range for dimension {n}"));
                }
                if last.is_some_and(|l| c <= l) {
                    return invalid("row entries must have strictly increasing columns");
                }
                last = Some(c);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
            lines: (0..=n).collect(),
        })
    }

    /// Declare contiguous line blocks by their start offsets (last entry = n).
    pub fn with_lines(mut self, starts: Vec<usize>) -> Result<Self> {
        if starts.first() != Some(&0) || starts.last() != Some(&self.n) || starts.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("line starts must increase strictly from 0 to n");
        }
        self.lines = starts;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn line_starts(&self) -> &[usize] {
        &self.lines
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        let mut s = 0.0;
        for k in a..b {
            s += self.vals[k] * x[self.cols[k]];
        }
        s
    }

    /// `y = A x` on the calling thread.
    pub fn matvec_seq(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    /// `y = A x` on the rayon pool. Each row is an independent sum, so the
    /// result is bit-identical to [`CsrMatrix::matvec_seq`].
    #[cfg(feature = "parallel")]
    pub fn matvec_par(&self, x: &[f64], y: &mut [f64]) {
        use rayon::prelude::*;
        y.par_chunks_mut(par::CHUNK / 4).enumerate().for_each(|(c, ys)| {
            let base = c * (par::CHUNK / 4);
            for (k, yi) in ys.iter_mut().enumerate() {
                *yi = self.row_dot(base + k, x);
            }
        });
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        #[cfg(feature = "parallel")]
        {
            if self.n > par::CHUNK {
                return self.matvec_par(x, y);
            }
        }
        self.matvec_seq(x, y)
    }

    /// Dense copy, for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Line-block preconditioner for `A - shift I`: exact tridiagonal solves on
/// every line, ignoring coupling between lines.
#[derive(Clone, Debug)]
pub struct LinePreconditioner {
    starts: Vec<usize>,
    /// LDL^T factors per unknown: pivot and the sub-diagonal multiplier.
    pivot: Vec<f64>,
    lower: Vec<f64>,
}

impl LinePreconditioner {
    /// Returns `None` when a pivot is not positive (shift not below the line spectra).
    pub fn new(a: &CsrMatrix, shift: f64) -> Option<Self> {
        let n = a.dim();
        let mut pivot = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let starts = a.line_starts().to_vec();
        for w in starts.windows(2) {
            let (s, e) = (w[0], w[1]);
            for i in s..e {
                let diag = a.get(i, i) - shift;
                if i == s {
                    pivot[i] = diag;
                } else {
                    let off = a.get(i, i - 1);
                    let l = off / pivot[i - 1];
                    lower[i] = l;
                    pivot[i] = diag - l * off;
                }
                if !(pivot[i] > 0.0) {
                    return None;
                }
            }
        }
        Some(LinePreconditioner { starts, pivot, lower })
    }

    fn solve_line(&self, s: usize, r: &[f64], z: &mut [f64]) {
        // forward (unit lower), diagonal, backward (unit upper)
        let e = s + z.len();
        z[0] = r[0];
        for i in s + 1..e {
            z[i - s] = r[i - s] - self.lower[i] * z[i - s - 1];
        }
        for i in s..e {
            z[i - s] /= self.pivot[i];
        }
        for i in (s..e - 1).rev() {
            z[i - s] -= self.lower[i + 1] * z[i - s + 1];
        }
    }

    /// `z = P^{-1} r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let spans: Vec<(usize, usize)> = self.starts.windows(2).map(|w| (w[0], w[1])).collect();
        #[cfg(feature = "parallel")]
        {
            if r.len() > par::CHUNK {
                use rayon::prelude::*;
                let mut pieces: Vec<&mut [f64]> = Vec::with_capacity(spans.len());
                let mut rest = z;
                for &(s, e) in &spans {
                    let (head, tail) = rest.split_at_mut(e - s);
                    pieces.push(head);
                    rest = tail;
                }
                pieces
                    .into_par_iter()
                    .zip(spans.par_iter())
                    .for_each(|(zs, &(s, e))| self.solve_line(s, &r[s..e], zs));
                return;
            }
        }
        for &(s, e) in &spans {
            self.solve_line(s, &r[s..e], &mut z[s..e]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut r = Vec::new();
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                r.push((i, 2.0));
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn matvec_paths_agree() {
        let a = laplace_1d(20_000);
        let x: Vec<f64> = (0..20_000).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y1 = vec![0.0; 20_000];
        let mut y2 = vec![0.0; 20_000];
        a.matvec_seq(&x, &mut y1);
        a.matvec(&x, &mut y2);
        assert_eq!(y1, y2);
        assert_eq!(a.symmetry_defect(), 0.0);
    }

    #[test]
    fn line_preconditioner_is_exact_on_tridiagonal() {
        let n = 50;
        let a = laplace_1d(n).with_lines(vec![0, n]).unwrap();
        let p = LinePreconditioner::new(&a, 0.0).unwrap();
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x, &mut b);
        let mut z = vec![0.0; n];
        p.apply(&b, &mut z);
        for (zi, xi) in z.iter().zip(&x) {
            assert!((zi - xi).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_unsorted_rows() {
        assert!(CsrMatrix::from_rows(vec![vec![(1, 1.0), (0, 1.0)], vec![]]).is_err());
    }
}
