//! Single-factor matrices.
//!
//! Qubit basis order is (|0⟩, |1⟩) with σ_z = (|1⟩⟨1| − |0⟩⟨0|)/2,
//! σ_+ = |1⟩⟨0| and σ_− = |0⟩⟨1|. σ_x is σ_+ + σ_− and has eigenvalues ±1.

use crate::linalg::{CMatrix, C64, ONE, ZERO};

/// Truncated lowering operator on Fock levels 0..n: entry (k−1, k) = √k.
pub fn annihilation(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    m
}

pub fn creation(n: usize) -> CMatrix {
    annihilation(n).adjoint()
}

pub fn number(n: usize) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| C64::new(k as f64, 0.0)))
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[C64::new(-0.5, 0.0), ZERO, ZERO, C64::new(0.5, 0.0)])
}

pub fn sigma_plus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
}

pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

/// |i⟩⟨j| on a factor of dimension n.
pub fn outer(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    m
}
