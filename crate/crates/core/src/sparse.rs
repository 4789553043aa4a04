//! Minimal real CSR matrices for the assembled operators.
//!
//! The operator contracts only need: triplet assembly with duplicate
//! summation, matrix-vector products over real and complex vectors, symmetry
//! checks, quadratic forms, and a coordinate-format text dump.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an n-by-n matrix from (row, col, value) triplets, summing
    /// duplicates and dropping exact zeros produced by cancellation is NOT
    /// done: structural zeros are kept so patterns stay symmetric.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut entries: Vec<(usize, f64)> = vec![(0, 0.0); triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in triplets {
            entries[cursor[r]] = (c, v);
            cursor[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..n {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == col {
                    sum += row[k].1;
                    k += 1;
                }
                col_idx.push(col);
                values.push(sum);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn matvec_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.col_idx[k]] * self.values[k];
            }
            y[r] = acc;
        }
    }

    /// y += scale * A x for complex vectors.
    pub fn matvec_complex_add(&self, scale: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for r in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.col_idx[k]] * self.values[k];
            }
            y[r] += scale * acc;
        }
    }

    /// Real quadratic form x^T A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// Hermitian form conj(x)^T A x (real for symmetric real A).
    pub fn hermitian_form(&self, x: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.n {
            let mut row = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += x[self.col_idx[k]] * self.values[k];
            }
            acc += (x[r].conj() * row).re;
        }
        acc
    }

    /// Maximum relative asymmetry max |A_ij - A_ji| / max|A|.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let v = self.values[k];
                let vt = self.get(c, r);
                worst = worst.max((v - vt).abs());
            }
        }
        worst / scale
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Row sums (the lumped-mass weights for mass-type matrices).
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.values[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum())
            .collect()
    }

    /// Column indices that carry at least one structurally nonzero entry.
    /// For a mass matrix weighted by an indicator, this is the discrete
    /// support of the weight.
    pub fn column_support(&self, tol: f64) -> Vec<bool> {
        let mut support = vec![false; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k].abs() > tol {
                    support[self.col_idx[k]] = true;
                }
            }
        }
        support
    }

    /// All stored entries as (row, col, value) triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.push((r, self.col_idx[k], self.values[k]));
            }
        }
        t
    }

    /// a*A + b*B as a new matrix.
    pub fn scaled_sum(a: f64, ma: &CsrMatrix, b: f64, mb: &CsrMatrix) -> CsrMatrix {
        assert_eq!(ma.n, mb.n);
        let mut t = Vec::with_capacity(ma.nnz() + mb.nnz());
        for (r, c, v) in ma.triplets() {
            t.push((r, c, a * v));
        }
        for (r, c, v) in mb.triplets() {
            t.push((r, c, b * v));
        }
        CsrMatrix::from_triplets(ma.n, &t)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] = self.values[k];
            }
        }
        m
    }

    /// Coordinate text dump: one `row col value` line per stored entry.
    pub fn dump_coordinate(&self, out: &mut dyn std::io::Write) -> std::io::Result<()> {
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                writeln!(out, "{} {} {}", r, self.col_idx[k], crate::numfmt::g17(self.values[k]))?;
            }
        }
        Ok(())
    }
}
