use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};
use crate::qops::operator::Operator;
use crate::qops::space::HilbertSpace;

pub const NORM_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const MIN_EIGENVALUE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: CVector,
}

impl StateVector {
    /// Wraps amplitudes that must already be normalised within [`NORM_TOL`].
    pub fn new(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::mismatch(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm is {norm}, expected 1")));
        }
        Ok(StateVector { space, amplitudes })
    }

    pub fn normalized(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalise a zero vector".into()));
        }
        Self::new(space, amplitudes / C64::new(norm, 0.0))
    }

    /// Product basis state with the given level on each factor.
    pub fn basis(space: &HilbertSpace, levels: &[usize]) -> Result<Self> {
        let idx = space.index_of(levels)?;
        let mut amps = CVector::zeros(space.dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(StateVector {
            space: space.clone(),
            amplitudes: amps,
        })
    }

    /// Tensor product of per-factor local states (each normalised on its own).
    pub fn product(space: &HilbertSpace, locals: &[CVector]) -> Result<Self> {
        if locals.len() != space.len() {
            return Err(Error::invalid(format!(
                "{} local states for {} factors",
                locals.len(),
                space.len()
            )));
        }
        let mut amps = CVector::from_element(1, C64::new(1.0, 0.0));
        for (i, (v, f)) in locals.iter().zip(space.factors()).enumerate() {
            if v.len() != f.dim() {
                return Err(Error::mismatch(format!(
                    "local state {i} has length {} but factor is {f}",
                    v.len()
                )));
            }
            amps = amps.kronecker(v);
        }
        Self::normalized(space.clone(), amps)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: CMatrix,
}

/// Deviations of a candidate density matrix from the physical constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validity {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Validity {
    pub fn of(matrix: &CMatrix) -> Self {
        let trace = matrix.trace();
        let herm = linalg::hermiticity_error(matrix);
        let min_eig = linalg::eigvalsh(matrix).iter().copied().fold(f64::INFINITY, f64::min);
        Validity {
            trace_error: (trace - C64::new(1.0, 0.0)).norm(),
            hermiticity_error: herm,
            min_eigenvalue: min_eig,
        }
    }

    pub fn within(&self, trace_tol: f64, herm_tol: f64, eig_tol: f64) -> bool {
        self.trace_error <= trace_tol && self.hermiticity_error <= herm_tol && self.min_eigenvalue >= -eig_tol
    }
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::mismatch(format!(
                "density matrix is {}x{} but space dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let v = Validity::of(&matrix);
        if !v.within(TRACE_TOL, NORM_TOL, MIN_EIGENVALUE_TOL) {
            return Err(Error::InvalidState(format!(
                "invalid density matrix: |tr − 1| = {:e}, hermiticity {:e}, min eigenvalue {:e}",
                v.trace_error, v.hermiticity_error, v.min_eigenvalue
            )));
        }
        Ok(DensityMatrix { space, matrix })
    }

    /// Skips validation; the integrators validate on their own schedule.
    pub fn from_raw(space: HilbertSpace, matrix: CMatrix) -> Self {
        DensityMatrix { space, matrix }
    }

    pub fn maximally_mixed(space: &HilbertSpace) -> Self {
        let d = space.dim();
        DensityMatrix {
            space: space.clone(),
            matrix: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        }
    }

    /// Tensor product of per-factor density matrices.
    pub fn product(space: &HilbertSpace, locals: &[CMatrix]) -> Result<Self> {
        if locals.len() != space.len() {
            return Err(Error::invalid(format!(
                "{} local states for {} factors",
                locals.len(),
                space.len()
            )));
        }
        let mut m = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (l, f) in locals.iter().zip(space.factors()) {
            if l.nrows() != f.dim() {
                return Err(Error::mismatch(format!("local density matrix does not fit {f}")));
            }
            m = m.kronecker(l);
        }
        Self::new(space.clone(), m)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn validity(&self) -> Validity {
        Validity::of(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Anything expectation values can be taken on.
pub trait QuantumState {
    fn space(&self) -> &HilbertSpace;
    fn expect_matrix(&self, m: &CMatrix) -> C64;
}

impl QuantumState for StateVector {
    fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn expect_matrix(&self, m: &CMatrix) -> C64 {
        self.amplitudes.dotc(&(m * &self.amplitudes))
    }
}

impl QuantumState for DensityMatrix {
    fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn expect_matrix(&self, m: &CMatrix) -> C64 {
        // tr(ρO) = Σ_ij ρ_ij O_ji
        let d = m.nrows();
        let mut acc = ZERO;
        for j in 0..d {
            for i in 0..d {
                acc += self.matrix[(i, j)] * m[(j, i)];
            }
        }
        acc
    }
}

/// ⟨ψ|O|ψ⟩ or tr(ρO). `obs` need not be Hermitian.
pub fn expectation<S: QuantumState>(state: &S, obs: &Operator) -> Result<C64> {
    state.space().ensure_same(obs.space())?;
    Ok(state.expect_matrix(obs.matrix()))
}

/// F = ⟨ψ_T|ρ|ψ_T⟩.
pub fn fidelity(state: &DensityMatrix, target: &StateVector) -> Result<f64> {
    state.space.ensure_same(&target.space)?;
    let v = &target.amplitudes;
    Ok(v.dotc(&(&state.matrix * v)).re)
}

/// Fock-state vector |k⟩ on n levels.
pub fn fock(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = C64::new(1.0, 0.0);
    v
}

/// Coherent-state amplitudes on n levels, renormalised after truncation.
pub fn coherent(n: usize, alpha: C64) -> CVector {
    let mut v = CVector::zeros(n);
    let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..n {
        if k > 0 {
            amp = amp * alpha / C64::new((k as f64).sqrt(), 0.0);
        }
        v[k] = amp;
    }
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Bose–Einstein populations with mean `n_bar`, truncated to n levels and renormalised.
pub fn thermal_populations(n: usize, n_bar: f64) -> Vec<f64> {
    let q = n_bar / (n_bar + 1.0);
    let mut p: Vec<f64> = (0..n).map(|k| q.powi(k as i32) / (n_bar + 1.0)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

/// Ground state |0…0⟩ of a space.
pub fn ground(space: &HilbertSpace) -> StateVector {
    StateVector::basis(space, &vec![0; space.len()]).expect("ground state exists")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{number, pauli, Factor, Pauli};

    #[test]
    fn number_expectations_on_fock_states() {
        let s = HilbertSpace::new(vec![Factor::Boson(4)]).unwrap();
        let n = number(&s, 0).unwrap();
        let vac = StateVector::basis(&s, &[0]).unwrap();
        let one = StateVector::basis(&s, &[1]).unwrap();
        assert_eq!(expectation(&vac, &n).unwrap(), ZERO);
        assert!((expectation(&one, &n).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_z_on_ground_is_minus_half() {
        let s = HilbertSpace::qubits(1).unwrap();
        let z = pauli(&s, 0, Pauli::Z).unwrap();
        let g = StateVector::basis(&s, &[0]).unwrap();
        assert!((expectation(&g, &z).unwrap().re + 0.5).abs() < 1e-15);
        assert!((expectation(&g.to_density(), &z).unwrap().re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn fidelity_limits() {
        let s = HilbertSpace::qubits(4).unwrap();
        let psi = StateVector::basis(&s, &[0, 1, 1, 0]).unwrap();
        let phi = StateVector::basis(&s, &[1, 1, 1, 0]).unwrap();
        assert!((fidelity(&psi.to_density(), &psi).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&phi.to_density(), &psi).unwrap(), 0.0);
        let mixed = DensityMatrix::maximally_mixed(&s);
        assert!((fidelity(&mixed, &psi).unwrap() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn density_validation_rejects_bad_trace() {
        let s = HilbertSpace::qubits(1).unwrap();
        let m = CMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(s, m), Err(Error::InvalidState(_))));
    }

    #[test]
    fn state_vector_requires_unit_norm() {
        let s = HilbertSpace::qubits(1).unwrap();
        let v = CVector::from_element(2, C64::new(1.0, 0.0));
        assert!(StateVector::new(s.clone(), v.clone()).is_err());
        assert!(StateVector::normalized(s, v).is_ok());
    }

    #[test]
    fn coherent_state_mean() {
        let v = coherent(60, C64::new(3.0, 0.0));
        let mean: f64 = v.iter().enumerate().map(|(k, a)| k as f64 * a.norm_sqr()).sum();
        assert!((mean - 9.0).abs() < 1e-10);
    }
}
