use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One tensor factor of a composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    /// Two-level system, basis order (|0⟩, |1⟩).
    Qubit,
    /// Truncated oscillator holding Fock states |0⟩ … |n−1⟩.
    Boson(usize),
}

impl Factor {
    pub fn dim(self) -> usize {
        match self {
            Factor::Qubit => 2,
            Factor::Boson(n) => n,
        }
    }

    pub fn is_qubit(self) -> bool {
        matches!(self, Factor::Qubit)
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Qubit => write!(f, "qubit"),
            Factor::Boson(n) => write!(f, "boson({n})"),
        }
    }
}

/// Ordered tensor product of factors. Factor 0 is the most significant
/// index in the flattened basis, matching the Kronecker product order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    factors: Arc<[Factor]>,
}

impl HilbertSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("a Hilbert space needs at least one factor"));
        }
        for (i, f) in factors.iter().enumerate() {
            if let Factor::Boson(n) = f {
                if *n < 2 {
                    return Err(Error::invalid(format!(
                        "factor {i}: boson truncation must be at least 2, got {n}"
                    )));
                }
            }
        }
        Ok(HilbertSpace {
            factors: factors.into(),
        })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![Factor::Qubit; n])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factor(&self, index: usize) -> Result<Factor> {
        self.factors.get(index).copied().ok_or(Error::FactorIndex {
            index,
            len: self.factors.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim()).collect()
    }

    /// Flattened-index stride of each factor.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1].dim();
        }
        strides
    }

    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.factors.len() {
            return Err(Error::invalid(format!(
                "expected {} levels, got {}",
                self.factors.len(),
                levels.len()
            )));
        }
        let mut index = 0;
        for (level, factor) in levels.iter().zip(self.factors.iter()) {
            if *level >= factor.dim() {
                return Err(Error::invalid(format!(
                    "level {level} outside {factor}"
                )));
            }
            index = index * factor.dim() + level;
        }
        Ok(index)
    }

    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.factors.len()];
        for (slot, factor) in levels.iter_mut().zip(self.factors.iter()).rev() {
            *slot = index % factor.dim();
            index /= factor.dim();
        }
        levels
    }

    pub fn tensor(&self, other: &HilbertSpace) -> HilbertSpace {
        let factors: Vec<Factor> = self
            .factors
            .iter()
            .chain(other.factors.iter())
            .copied()
            .collect();
        HilbertSpace {
            factors: factors.into(),
        }
    }

    /// Copy of this space with every boson truncation increased by `extra`.
    pub fn with_extra_levels(&self, extra: usize) -> HilbertSpace {
        let factors: Vec<Factor> = self
            .factors
            .iter()
            .map(|f| match f {
                Factor::Boson(n) => Factor::Boson(n + extra),
                Factor::Qubit => Factor::Qubit,
            })
            .collect();
        HilbertSpace {
            factors: factors.into(),
        }
    }

    pub(crate) fn expect_boson(&self, index: usize) -> Result<usize> {
        match self.factor(index)? {
            Factor::Boson(n) => Ok(n),
            other => Err(Error::FactorType {
                index,
                expected: "boson",
                found: other.to_string(),
            }),
        }
    }

    pub(crate) fn expect_qubit(&self, index: usize) -> Result<()> {
        match self.factor(index)? {
            Factor::Qubit => Ok(()),
            other => Err(Error::FactorType {
                index,
                expected: "qubit",
                found: other.to_string(),
            }),
        }
    }

    pub(crate) fn ensure_same(&self, other: &HilbertSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::mismatch(format!("{self} vs {other}")))
        }
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ⊗ ")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HilbertSpace[{self}]")
    }
}
