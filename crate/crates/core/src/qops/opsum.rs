//! Operators kept as sums of tensor products of single-factor matrices.
//!
//! Model builders assemble Hamiltonians and collapse operators in this form so
//! that the dynamics layer can restrict them to symmetry sectors or compress
//! them to sparse storage without ever forming the full dense matrix. A dense
//! [`Operator`] is one call to [`OpSum::to_operator`] away.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, SparseMatrix, C64, ONE, ZERO};
use crate::qops::operator::Operator;
use crate::qops::space::HilbertSpace;

#[derive(Clone, Debug)]
enum Kind {
    /// Factor-local matrices sorted by factor index; absent factors are identity.
    Product(Vec<(usize, CMatrix)>),
    /// Full-space dense matrix.
    Full(CMatrix),
}

#[derive(Clone, Debug)]
struct Term {
    coeff: C64,
    kind: Kind,
}

#[derive(Clone, Debug)]
pub struct OpSum {
    space: HilbertSpace,
    terms: Vec<Term>,
}

impl OpSum {
    pub fn zero(space: &HilbertSpace) -> Self {
        OpSum {
            space: space.clone(),
            terms: Vec::new(),
        }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        OpSum {
            space: space.clone(),
            terms: vec![Term {
                coeff: ONE,
                kind: Kind::Product(Vec::new()),
            }],
        }
    }

    /// `matrix` acting on `factor`, identity elsewhere.
    pub fn local(space: &HilbertSpace, factor: usize, matrix: CMatrix) -> Result<Self> {
        let f = space.factor(factor)?;
        if matrix.nrows() != f.dim() || matrix.ncols() != f.dim() {
            return Err(Error::mismatch(format!(
                "local matrix is {}x{} but factor {factor} is {f}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(OpSum {
            space: space.clone(),
            terms: vec![Term {
                coeff: ONE,
                kind: Kind::Product(vec![(factor, matrix)]),
            }],
        })
    }

    pub fn from_operator(op: &Operator) -> Self {
        OpSum {
            space: op.space().clone(),
            terms: vec![Term {
                coeff: ONE,
                kind: Kind::Full(op.matrix().clone()),
            }],
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == ZERO)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= s;
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff.conj(),
                kind: match &t.kind {
                    Kind::Product(locals) => Kind::Product(
                        locals.iter().map(|(f, m)| (*f, m.adjoint())).collect(),
                    ),
                    Kind::Full(m) => Kind::Full(m.adjoint()),
                },
            })
            .collect();
        OpSum {
            space: self.space.clone(),
            terms,
        }
    }

    /// `self + self†`
    pub fn plus_hc(&self) -> Self {
        self + &self.adjoint()
    }

    pub fn try_add(&self, other: &OpSum) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(OpSum {
            space: self.space.clone(),
            terms,
        })
    }

    pub fn try_mul(&self, other: &OpSum) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    kind: multiply_kinds(&self.space, &a.kind, &b.kind),
                });
            }
        }
        Ok(OpSum {
            space: self.space.clone(),
            terms,
        })
    }

    /// Non-zero entries of column `col`: `(row, value)` pairs with rows
    /// sorted and duplicates merged.
    pub fn column(&self, col: usize, strides: &[usize], out: &mut Vec<(usize, C64)>) {
        out.clear();
        let levels = self.space.levels_of(col);
        let mut scratch: Vec<(usize, C64)> = Vec::new();
        let mut next: Vec<(usize, C64)> = Vec::new();
        for term in &self.terms {
            if term.coeff == ZERO {
                continue;
            }
            match &term.kind {
                Kind::Full(m) => {
                    for r in 0..m.nrows() {
                        let v = m[(r, col)];
                        if v != ZERO {
                            out.push((r, term.coeff * v));
                        }
                    }
                }
                Kind::Product(locals) => {
                    scratch.clear();
                    scratch.push((col, term.coeff));
                    for (f, m) in locals {
                        let level = levels[*f];
                        let stride = strides[*f];
                        next.clear();
                        for &(idx, amp) in &scratch {
                            let base = idx - level * stride;
                            for r in 0..m.nrows() {
                                let v = m[(r, level)];
                                if v != ZERO {
                                    next.push((base + r * stride, amp * v));
                                }
                            }
                        }
                        std::mem::swap(&mut scratch, &mut next);
                        if scratch.is_empty() {
                            break;
                        }
                    }
                    out.extend_from_slice(&scratch);
                }
            }
        }
        out.sort_unstable_by_key(|&(r, _)| r);
        let mut w = 0;
        for k in 0..out.len() {
            if w > 0 && out[w - 1].0 == out[k].0 {
                let v = out[k].1;
                out[w - 1].1 += v;
            } else {
                out[w] = out[k];
                w += 1;
            }
        }
        out.truncate(w);
        out.retain(|&(_, v)| v != ZERO);
    }

    pub fn to_operator(&self) -> Operator {
        let d = self.space.dim();
        let strides = self.space.strides();
        let mut m = CMatrix::zeros(d, d);
        let mut col = Vec::new();
        for j in 0..d {
            self.column(j, &strides, &mut col);
            for &(i, v) in &col {
                m[(i, j)] = v;
            }
        }
        Operator::new(self.space.clone(), m).expect("dimension matches by construction")
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let d = self.space.dim();
        let strides = self.space.strides();
        let mut triplets = Vec::new();
        let mut col = Vec::new();
        for j in 0..d {
            self.column(j, &strides, &mut col);
            triplets.extend(col.iter().map(|&(i, v)| (i, j, v)));
        }
        SparseMatrix::from_triplets(d, d, triplets)
    }
}

fn multiply_kinds(space: &HilbertSpace, a: &Kind, b: &Kind) -> Kind {
    match (a, b) {
        (Kind::Product(la), Kind::Product(lb)) => {
            let mut merged: Vec<(usize, CMatrix)> = Vec::with_capacity(la.len() + lb.len());
            let (mut i, mut j) = (0, 0);
            while i < la.len() || j < lb.len() {
                let fa = la.get(i).map(|x| x.0);
                let fb = lb.get(j).map(|x| x.0);
                match (fa, fb) {
                    (Some(x), Some(y)) if x == y => {
                        merged.push((x, &la[i].1 * &lb[j].1));
                        i += 1;
                        j += 1;
                    }
                    (Some(x), Some(y)) if x < y => {
                        merged.push(la[i].clone());
                        i += 1;
                    }
                    (Some(_), None) => {
                        merged.push(la[i].clone());
                        i += 1;
                    }
                    _ => {
                        merged.push(lb[j].clone());
                        j += 1;
                    }
                }
            }
            Kind::Product(merged)
        }
        _ => {
            let da = dense_kind(space, a);
            let db = dense_kind(space, b);
            Kind::Full(da * db)
        }
    }
}

fn dense_kind(space: &HilbertSpace, k: &Kind) -> CMatrix {
    match k {
        Kind::Full(m) => m.clone(),
        Kind::Product(_) => OpSum {
            space: space.clone(),
            terms: vec![Term {
                coeff: ONE,
                kind: k.clone(),
            }],
        }
        .to_operator()
        .into_matrix(),
    }
}

// Operator-style arithmetic for builder code. These panic when the spaces
// differ; use `try_add` / `try_mul` for fallible composition.

impl Add for &OpSum {
    type Output = OpSum;
    fn add(self, rhs: &OpSum) -> OpSum {
        self.try_add(rhs).expect("OpSum spaces differ")
    }
}

impl Add for OpSum {
    type Output = OpSum;
    fn add(mut self, rhs: OpSum) -> OpSum {
        self.space.ensure_same(&rhs.space).expect("OpSum spaces differ");
        self.terms.extend(rhs.terms);
        self
    }
}

impl Sub for &OpSum {
    type Output = OpSum;
    fn sub(self, rhs: &OpSum) -> OpSum {
        self + &rhs.scale(-ONE)
    }
}

impl Sub for OpSum {
    type Output = OpSum;
    fn sub(self, rhs: OpSum) -> OpSum {
        self + rhs.scale(-ONE)
    }
}

impl Neg for &OpSum {
    type Output = OpSum;
    fn neg(self) -> OpSum {
        self.scale(-ONE)
    }
}

impl Mul for &OpSum {
    type Output = OpSum;
    fn mul(self, rhs: &OpSum) -> OpSum {
        self.try_mul(rhs).expect("OpSum spaces differ")
    }
}

impl Mul for OpSum {
    type Output = OpSum;
    fn mul(self, rhs: OpSum) -> OpSum {
        (&self) * (&rhs)
    }
}

impl Mul<&OpSum> for f64 {
    type Output = OpSum;
    fn mul(self, rhs: &OpSum) -> OpSum {
        rhs.scale_re(self)
    }
}

impl Mul<OpSum> for f64 {
    type Output = OpSum;
    fn mul(self, rhs: OpSum) -> OpSum {
        rhs.scale_re(self)
    }
}

impl Mul<OpSum> for C64 {
    type Output = OpSum;
    fn mul(self, rhs: OpSum) -> OpSum {
        rhs.scale(self)
    }
}
