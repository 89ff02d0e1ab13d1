use std::fmt;
use std::sync::Arc;

use crate::linalg::{C64, ONE};
use crate::qops::{HilbertSpace, OpSum, Operator};

/// Scalar prefactor of a Hamiltonian term, either fixed or a pure function of time.
#[derive(Clone)]
pub enum Coefficient {
    Const(C64),
    Func(Arc<dyn Fn(f64) -> C64 + Send + Sync>),
}

impl Coefficient {
    pub fn func(f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Coefficient::Func(Arc::new(f))
    }

    pub fn at(&self, t: f64) -> C64 {
        match self {
            Coefficient::Const(c) => *c,
            Coefficient::Func(f) => f(t),
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Coefficient::Const(_))
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Const(c) => write!(f, "Const({c})"),
            Coefficient::Func(_) => write!(f, "Func(..)"),
        }
    }
}

/// H(t) = Σ_k c_k(t) O_k. The sum is Hermitian at every t; the individual
/// terms need not be.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    space: HilbertSpace,
    terms: Vec<(Coefficient, OpSum)>,
}

impl Hamiltonian {
    pub fn new(space: &HilbertSpace) -> Self {
        Hamiltonian {
            space: space.clone(),
            terms: Vec::new(),
        }
    }

    pub fn constant(op: OpSum) -> Self {
        let mut h = Hamiltonian::new(op.space());
        h.push(Coefficient::Const(ONE), op);
        h
    }

    pub fn push(&mut self, coeff: Coefficient, op: OpSum) {
        assert_eq!(op.space(), &self.space, "Hamiltonian term on a different space");
        self.terms.push((coeff, op));
    }

    pub fn with(mut self, coeff: Coefficient, op: OpSum) -> Self {
        self.push(coeff, op);
        self
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn terms(&self) -> &[(Coefficient, OpSum)] {
        &self.terms
    }

    pub fn is_static(&self) -> bool {
        self.terms.iter().all(|(c, _)| c.is_const())
    }

    /// Symbolic H(t).
    pub fn at(&self, t: f64) -> OpSum {
        let mut sum = OpSum::zero(&self.space);
        for (c, op) in &self.terms {
            sum = sum + op.scale(c.at(t));
        }
        sum
    }

    pub fn operator_at(&self, t: f64) -> Operator {
        self.at(t).to_operator()
    }
}
