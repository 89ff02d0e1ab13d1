//! Tensor-product operator algebra over qubit and truncated-boson factors.

pub mod local;
mod operator;
mod opsum;
mod space;
mod state;

pub use operator::{Operator, HERMITIAN_TOL};
pub use opsum::OpSum;
pub use space::{Factor, HilbertSpace};
pub use state::{
    coherent, expectation, fidelity, fock, ground, thermal_populations, DensityMatrix,
    QuantumState, StateVector, Validity,
};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    Z,
    Plus,
    Minus,
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Collective {
    X,
    Plus,
    Minus,
    Z,
}

impl From<Collective> for Pauli {
    fn from(c: Collective) -> Self {
        match c {
            Collective::X => Pauli::X,
            Collective::Plus => Pauli::Plus,
            Collective::Minus => Pauli::Minus,
            Collective::Z => Pauli::Z,
        }
    }
}

impl OpSum {
    pub fn annihilation(space: &HilbertSpace, factor: usize) -> Result<Self> {
        let n = space.expect_boson(factor)?;
        OpSum::local(space, factor, local::annihilation(n))
    }

    pub fn creation(space: &HilbertSpace, factor: usize) -> Result<Self> {
        let n = space.expect_boson(factor)?;
        OpSum::local(space, factor, local::creation(n))
    }

    pub fn number(space: &HilbertSpace, factor: usize) -> Result<Self> {
        let n = space.expect_boson(factor)?;
        OpSum::local(space, factor, local::number(n))
    }

    pub fn pauli(space: &HilbertSpace, factor: usize, which: Pauli) -> Result<Self> {
        space.expect_qubit(factor)?;
        let m = match which {
            Pauli::Z => local::sigma_z(),
            Pauli::Plus => local::sigma_plus(),
            Pauli::Minus => local::sigma_minus(),
            Pauli::X => local::sigma_x(),
        };
        OpSum::local(space, factor, m)
    }

    pub fn collective(space: &HilbertSpace, qubits: &[usize], which: Collective) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::invalid("collective spin needs at least one qubit"));
        }
        let mut sum = OpSum::zero(space);
        for &q in qubits {
            sum = sum + OpSum::pauli(space, q, which.into())?;
        }
        Ok(sum)
    }
}

pub fn annihilation(space: &HilbertSpace, factor: usize) -> Result<Operator> {
    Ok(OpSum::annihilation(space, factor)?.to_operator())
}

pub fn creation(space: &HilbertSpace, factor: usize) -> Result<Operator> {
    Ok(OpSum::creation(space, factor)?.to_operator())
}

pub fn number(space: &HilbertSpace, factor: usize) -> Result<Operator> {
    Ok(OpSum::number(space, factor)?.to_operator())
}

pub fn pauli(space: &HilbertSpace, factor: usize, which: Pauli) -> Result<Operator> {
    Ok(OpSum::pauli(space, factor, which)?.to_operator())
}

pub fn collective_spin(space: &HilbertSpace, qubits: &[usize], which: Collective) -> Result<Operator> {
    Ok(OpSum::collective(space, qubits, which)?.to_operator())
}
