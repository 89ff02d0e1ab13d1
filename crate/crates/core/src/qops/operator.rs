use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::qops::space::HilbertSpace;

/// Hermiticity tolerance applied whenever an operator is asserted Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Dense operator on a declared [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::mismatch(format!(
                "matrix is {}x{} but {space} has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Operator { space, matrix })
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Operator {
            space: space.clone(),
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Operator {
            space: space.clone(),
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Kronecker product; the result lives on `self.space ⊗ other.space`.
    pub fn tensor(&self, other: &Operator) -> Operator {
        Operator {
            space: self.space.tensor(&other.space),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * s,
        }
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// `[A, B] = AB − BA`
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.space.ensure_same(&other.space)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.matrix)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < HERMITIAN_TOL
    }

    /// Returns `self` if Hermitian within [`HERMITIAN_TOL`].
    pub fn assert_hermitian(self) -> Result<Self> {
        let err = self.hermiticity_error();
        if err < HERMITIAN_TOL {
            Ok(self)
        } else {
            Err(Error::invalid(format!(
                "operator is not Hermitian: max |M − M†| = {err:e}"
            )))
        }
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.matrix)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(linalg::max_abs_diff(&self.matrix, &other.matrix))
    }

    /// Real eigenvalues of a Hermitian operator, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = linalg::eigvalsh(&self.matrix).iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }
}
