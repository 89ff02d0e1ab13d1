//! Dense and compressed-row complex linear algebra used across the crate.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Largest element-wise modulus of `m − m†`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Eigen-decomposition of a Hermitian matrix. Only the lower triangle is read.
pub fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let sym = nalgebra::SymmetricEigen::new(m.clone());
    (sym.eigenvalues, sym.eigenvectors)
}

pub fn eigvalsh(m: &CMatrix) -> DVector<f64> {
    m.clone().symmetric_eigenvalues()
}

/// Whether the Hermitian part of `m` is positive definite, by Cholesky
/// factorisation with real pivots.
pub fn is_positive_definite(m: &CMatrix) -> bool {
    let n = m.nrows();
    // rows of L, stored contiguously
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let (done, rest) = l.split_at_mut(j * n);
        let row_j = &mut rest[..n];
        for i in 0..j {
            let row_i = &done[i * n..i * n + n];
            let dot: C64 = (0..i).map(|k| row_j[k] * row_i[k].conj()).sum();
            row_j[i] = (m[(j, i)] - dot) / row_i[i].re;
        }
        let pivot = m[(j, j)].re - row_j[..j].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !(pivot > 0.0) {
            return false;
        }
        row_j[j] = C64::new(pivot.sqrt(), 0.0);
    }
    true
}

/// `f(H)` for Hermitian `H`, evaluated through the spectral decomposition.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let (vals, vecs) = eigh(h);
    let mut scaled = vecs.clone();
    for (j, lambda) in vals.iter().enumerate() {
        let w = f(*lambda);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= w;
        }
    }
    &scaled * vecs.adjoint()
}

/// `exp(−i H t)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    hermitian_function(h, |lambda| C64::from_polar(1.0, -lambda * t))
}

/// Compressed sparse row complex matrix.
#[derive(Clone, Debug, Default)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from unsorted triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows_of.into_iter().zip(cols).zip(vals) {
            if v != C64::new(0.0, 0.0) {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut triplets = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |acc, v| acc.max(v.norm()))
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Sum of two matrices of equal shape.
    pub fn add(&self, other: &SparseMatrix) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut triplets = self.triplets();
        triplets.extend(other.triplets());
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.push((r, self.cols[k], self.vals[k]));
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (c, r, v.conj()))
            .collect();
        Self::from_triplets(self.ncols, self.nrows, triplets)
    }

    /// `y ← alpha · A · x (+ y when accumulate)` where `x` holds `m` column-major
    /// columns of length `ncols` and `y` holds `m` columns of length `nrows`.
    pub fn mul_cols(&self, alpha: C64, x: &[C64], m: usize, y: &mut [C64], accumulate: bool) {
        debug_assert_eq!(x.len(), self.ncols * m);
        debug_assert_eq!(y.len(), self.nrows * m);
        for j in 0..m {
            let xj = &x[j * self.ncols..(j + 1) * self.ncols];
            let yj = &mut y[j * self.nrows..(j + 1) * self.nrows];
            for r in 0..self.nrows {
                let mut acc = ZERO;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[k] * xj[self.cols[k]];
                }
                if accumulate {
                    yj[r] += alpha * acc;
                } else {
                    yj[r] = alpha * acc;
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        self.mul_cols(ONE, x, 1, &mut y, false);
        y
    }

    /// `A · B` for sparse `A` and sparse `B`.
    pub fn matmul(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut triplets = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.cols[k];
                let a = self.vals[k];
                for kk in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    triplets.push((r, other.cols[kk], a * other.vals[kk]));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_test_agrees_with_spectrum() {
        // H = A A† − shift·1 has smallest eigenvalue known from its spectrum
        let a = CMatrix::from_fn(6, 6, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0));
        let h = &a * a.adjoint();
        let min = eigvalsh(&h).iter().copied().fold(f64::INFINITY, f64::min);
        for shift in [min - 1e-3, min + 1e-3, min - 1.0, min + 1.0] {
            let m = &h - CMatrix::identity(6, 6) * c(shift, 0.0);
            assert_eq!(is_positive_definite(&m), shift < min, "shift {shift}, min {min}");
        }
    }

    #[test]
    fn sparse_matches_dense_product() {
        let a = CMatrix::from_fn(4, 3, |i, j| if (i + j) % 2 == 0 { c(i as f64, j as f64) } else { ZERO });
        let x = CMatrix::from_fn(3, 2, |i, j| c(1.0 + i as f64, -(j as f64)));
        let s = SparseMatrix::from_dense(&a);
        let mut y = vec![ZERO; 8];
        s.mul_cols(ONE, x.as_slice(), 2, &mut y, false);
        let expected = &a * &x;
        for (u, v) in y.iter().zip(expected.as_slice()) {
            assert!((u - v).norm() < 1e-14);
        }
        assert!(max_abs_diff(&s.adjoint().to_dense(), &a.adjoint()) < 1e-15);
        let b = SparseMatrix::from_dense(&x);
        assert!(max_abs_diff(&s.matmul(&b).to_dense(), &expected) < 1e-14);
    }

    #[test]
    fn expm_of_pauli_x() {
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let t = 0.7;
        let u = expm_hermitian(&x, t);
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[re(t.cos()), c(0.0, -t.sin()), c(0.0, -t.sin()), re(t.cos())],
        );
        assert!(max_abs_diff(&u, &expected) < 1e-14);
    }
}
