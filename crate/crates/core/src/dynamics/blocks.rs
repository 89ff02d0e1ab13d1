//! Block-diagonal density-matrix storage over charge sectors.
//!
//! With no charges there is a single sector holding the whole space, which is
//! the plain dense master equation. With charges, only the diagonal blocks
//! reachable from the initial state are stored; this is exact for observables
//! that commute with every charge.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, SparseMatrix, C64, I, ONE, ZERO};
use crate::models::{Coefficient, LindbladModel};
use crate::qops::{HilbertSpace, OpSum, Validity};

use super::InitialState;

type Key = Vec<i64>;

#[derive(Clone, Debug)]
struct Sector {
    basis: Vec<usize>,
    offset: usize,
}

impl Sector {
    fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug)]
struct Jump {
    rate: f64,
    coeffs: Vec<Coefficient>,
    /// (source sector, target sector, one matrix target × source per term)
    pieces: Vec<(usize, usize, Vec<SparseMatrix>)>,
}

/// Charge-sector decomposition of a model plus compiled operators.
#[derive(Clone, Debug)]
pub struct Blocks {
    sectors: Vec<Sector>,
    keys: Vec<Key>,
    /// constant part of H_eff = H − (i/2)Σ rate c†c, per sector
    h_static: Vec<SparseMatrix>,
    /// time-dependent terms of H_eff, per sector
    h_dynamic: Vec<(Coefficient, Vec<SparseMatrix>)>,
    jumps: Vec<Jump>,
    charges: Vec<Vec<i64>>,
    len: usize,
}

fn charge_key(levels: &[usize], charges: &[Vec<i64>]) -> Key {
    charges
        .iter()
        .map(|w| w.iter().zip(levels).map(|(a, &l)| a * l as i64).sum())
        .collect()
}

/// Restricts `op` to rows in `rows` and columns in `cols`, checking that no
/// entry of those columns falls outside `rows`.
fn restrict(
    op: &OpSum,
    cols: &[usize],
    row_index: &dyn Fn(usize) -> Option<usize>,
    nrows: usize,
    strides: &[usize],
    what: &str,
) -> Result<SparseMatrix> {
    let mut col = Vec::new();
    let mut triplets = Vec::new();
    for (j, &c) in cols.iter().enumerate() {
        op.column(c, strides, &mut col);
        for &(r, v) in &col {
            match row_index(r) {
                Some(i) => triplets.push((i, j, v)),
                None => {
                    return Err(Error::invalid(format!("{what} does not conserve the declared charges")));
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(nrows, cols.len(), triplets))
}

impl Blocks {
    /// Builds the sector structure for `model`, keeping the sectors that carry
    /// weight in `initial` together with everything reachable by the jumps.
    /// `use_charges = false` forces a single dense sector.
    pub fn new(model: &LindbladModel, initial: &InitialState, use_charges: bool) -> Result<Self> {
        let space = &model.space;
        let d = space.dim();
        let strides = space.strides();
        let charges: &[Vec<i64>] = if use_charges { &model.charges } else { &[] };

        let mut by_key: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
        let mut key_of = Vec::with_capacity(d);
        for i in 0..d {
            let k = charge_key(&space.levels_of(i), charges);
            by_key.entry(k.clone()).or_default().push(i);
            key_of.push(k);
        }

        // jump shifts
        let mut shifts = Vec::new();
        let mut col = Vec::new();
        for c in &model.collapse {
            let mut shift: Option<Key> = None;
            for (j, (_, op)) in (0..d).flat_map(|j| c.terms.iter().map(move |t| (j, t))) {
                op.column(j, &strides, &mut col);
                for &(r, _) in &col {
                    let s: Key = key_of[r].iter().zip(&key_of[j]).map(|(a, b)| a - b).collect();
                    match &shift {
                        None => shift = Some(s),
                        Some(prev) if *prev != s => {
                            return Err(Error::invalid(format!(
                                "collapse operator '{}' has no fixed charge shift",
                                c.label
                            )));
                        }
                        _ => {}
                    }
                }
            }
            shifts.push(shift);
        }

        // active sectors: initial support closed under the jump shifts
        let weights = initial.sector_weights(space, &by_key)?;
        let mut active: Vec<Key> = weights
            .iter()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, _)| k.clone())
            .collect();
        let mut seen: std::collections::BTreeSet<Key> = active.iter().cloned().collect();
        let mut frontier = active.clone();
        while let Some(k) = frontier.pop() {
            for s in shifts.iter().flatten() {
                let t: Key = k.iter().zip(s).map(|(a, b)| a + b).collect();
                if by_key.contains_key(&t) && seen.insert(t.clone()) {
                    active.push(t.clone());
                    frontier.push(t);
                }
            }
        }
        active.sort();

        let mut sectors = Vec::with_capacity(active.len());
        let mut offset = 0;
        for k in &active {
            let basis = by_key[k].clone();
            let n = basis.len();
            sectors.push(Sector { basis, offset });
            offset += n * n;
        }
        let sector_of: BTreeMap<&Key, usize> = active.iter().enumerate().map(|(i, k)| (k, i)).collect();

        // local index of a global basis state within its sector
        let mut local = vec![usize::MAX; d];
        for s in &sectors {
            for (i, &g) in s.basis.iter().enumerate() {
                local[g] = i;
            }
        }

        let mut h_const = OpSum::zero(space);
        let mut dynamic_terms: Vec<(Coefficient, OpSum)> = Vec::new();
        for (coef, op) in model.hamiltonian.terms() {
            match coef {
                Coefficient::Const(c) => h_const = h_const + op.scale(*c),
                Coefficient::Func(_) => dynamic_terms.push((coef.clone(), op.clone())),
            }
        }
        // −(i/2) rate L†L with L = Σ f_i A_i
        for c in &model.collapse {
            for (fi, ai) in &c.terms {
                for (fj, aj) in &c.terms {
                    let op = (&ai.adjoint() * aj).scale(C64::new(0.0, -0.5 * c.rate));
                    match (fi, fj) {
                        (Coefficient::Const(x), Coefficient::Const(y)) => h_const = h_const + op.scale(x.conj() * y),
                        _ => {
                            let (fi, fj) = (fi.clone(), fj.clone());
                            dynamic_terms.push((Coefficient::func(move |t| fi.at(t).conj() * fj.at(t)), op));
                        }
                    }
                }
            }
        }

        let in_sector = |si: usize| {
            let key = &active[si];
            let key_of = &key_of;
            let local = &local;
            move |r: usize| (&key_of[r] == key).then(|| local[r])
        };

        let mut h_static = Vec::with_capacity(sectors.len());
        for (si, s) in sectors.iter().enumerate() {
            h_static.push(restrict(&h_const, &s.basis, &in_sector(si), s.dim(), &strides, "Hamiltonian")?);
        }
        let mut h_dynamic = Vec::new();
        for (coef, op) in dynamic_terms {
            let mut per = Vec::with_capacity(sectors.len());
            for (si, s) in sectors.iter().enumerate() {
                per.push(restrict(&op, &s.basis, &in_sector(si), s.dim(), &strides, "Hamiltonian term")?);
            }
            h_dynamic.push((coef, per));
        }

        let mut jumps = Vec::new();
        for (c, shift) in model.collapse.iter().zip(&shifts) {
            let Some(shift) = shift else { continue };
            let mut pieces = Vec::new();
            for (si, s) in sectors.iter().enumerate() {
                let t: Key = active[si].iter().zip(shift).map(|(a, b)| a + b).collect();
                let Some(&ti) = sector_of.get(&t) else { continue };
                let ms = c
                    .terms
                    .iter()
                    .map(|(_, op)| restrict(op, &s.basis, &in_sector(ti), sectors[ti].dim(), &strides, "collapse operator"))
                    .collect::<Result<Vec<_>>>()?;
                if ms.iter().any(|m| m.nnz() > 0) {
                    pieces.push((si, ti, ms));
                }
            }
            jumps.push(Jump {
                rate: c.rate,
                coeffs: c.terms.iter().map(|(f, _)| f.clone()).collect(),
                pieces,
            });
        }

        Ok(Blocks {
            sectors,
            keys: active,
            h_static,
            h_dynamic,
            jumps,
            charges: charges.to_vec(),
            len: offset,
        })
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn state_len(&self) -> usize {
        self.len
    }

    pub fn largest_sector(&self) -> usize {
        self.sectors.iter().map(|s| s.dim()).max().unwrap_or(0)
    }

    pub fn keys(&self) -> &[Vec<i64>] {
        &self.keys
    }

    fn block<'a>(&self, y: &'a [C64], si: usize) -> &'a [C64] {
        let s = &self.sectors[si];
        &y[s.offset..s.offset + s.dim() * s.dim()]
    }

    /// Flattened initial state.
    pub fn initial(&self, space: &HilbertSpace, initial: &InitialState) -> Result<Vec<C64>> {
        let mut y = vec![ZERO; self.len];
        for s in &self.sectors {
            let n = s.dim();
            let block = initial.block(space, &s.basis)?;
            y[s.offset..s.offset + n * n].copy_from_slice(block.as_slice());
        }
        Ok(y)
    }

    /// dρ/dt for the stored blocks.
    pub fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64], scratch: &mut Vec<C64>) {
        let coeffs: Vec<C64> = self.h_dynamic.iter().map(|(c, _)| c.at(t)).collect();
        for (si, s) in self.sectors.iter().enumerate() {
            let n = s.dim();
            let rho = self.block(y, si);
            scratch.resize(n * n, ZERO);
            let x = &mut scratch[..n * n];
            self.h_static[si].mul_cols(ONE, rho, n, x, false);
            for ((_, per), &cf) in self.h_dynamic.iter().zip(&coeffs) {
                if cf != ZERO {
                    per[si].mul_cols(cf, rho, n, x, true);
                }
            }
            let out = &mut dy[s.offset..s.offset + n * n];
            // −i(X − X†)
            for j in 0..n {
                for i in 0..n {
                    out[j * n + i] = -I * (x[j * n + i] - x[i * n + j].conj());
                }
            }
        }
        let mut yb = Vec::new();
        let mut ybt = Vec::new();
        let mut d = Vec::new();
        for jump in &self.jumps {
            let f: Vec<C64> = jump.coeffs.iter().map(|c| c.at(t)).collect();
            for (si, ti, cs) in &jump.pieces {
                let ns = self.sectors[*si].dim();
                let nt = self.sectors[*ti].dim();
                let rho = self.block(y, *si);
                // Y = L ρ  (nt × ns)
                yb.clear();
                yb.resize(nt * ns, ZERO);
                for (c, &fi) in cs.iter().zip(&f) {
                    if fi != ZERO {
                        c.mul_cols(fi, rho, ns, &mut yb, true);
                    }
                }
                // Y† (ns × nt)
                ybt.resize(ns * nt, ZERO);
                for j in 0..ns {
                    for i in 0..nt {
                        ybt[i * ns + j] = yb[j * nt + i].conj();
                    }
                }
                d.clear();
                d.resize(nt * nt, ZERO);
                for (c, &fi) in cs.iter().zip(&f) {
                    if fi != ZERO {
                        c.mul_cols(fi * jump.rate, &ybt, nt, &mut d, true);
                    }
                }
                // Add the Hermitian part only. The commutator half of the generator maps
                // anti-Hermitian input to Hermitian output, so nothing would damp
                // rounding noise that leaks in here.
                let off = self.sectors[*ti].offset;
                let out = &mut dy[off..off + nt * nt];
                for j in 0..nt {
                    for i in 0..nt {
                        out[j * nt + i] += 0.5 * (d[j * nt + i] + d[i * nt + j].conj());
                    }
                }
            }
        }
    }

    /// −iH(t)ψ on a single-sector layout (state vectors, or propagator columns).
    pub fn schrodinger(&self, t: f64, y: &[C64], dy: &mut [C64], ncols: usize) {
        debug_assert_eq!(self.sectors.len(), 1);
        self.h_static[0].mul_cols(-I, y, ncols, dy, false);
        for (c, per) in &self.h_dynamic {
            let cf = c.at(t);
            if cf != ZERO {
                per[0].mul_cols(-I * cf, y, ncols, dy, true);
            }
        }
    }

    /// Compiles an observable into per-sector sparse blocks. The observable
    /// must be Hermitian and commute with every charge.
    pub fn observable(&self, space: &HilbertSpace, op: &OpSum, name: &str) -> Result<Vec<SparseMatrix>> {
        let strides = space.strides();
        let mut local = BTreeMap::new();
        for s in &self.sectors {
            for (i, &g) in s.basis.iter().enumerate() {
                local.insert(g, i);
            }
        }
        let mut out = Vec::with_capacity(self.sectors.len());
        let mut col = Vec::new();
        for s in &self.sectors {
            let mut triplets = Vec::new();
            for (j, &c) in s.basis.iter().enumerate() {
                let kc = charge_key(&space.levels_of(c), &self.charges);
                op.column(c, &strides, &mut col);
                for &(r, v) in &col {
                    if charge_key(&space.levels_of(r), &self.charges) != kc {
                        return Err(Error::invalid(format!(
                            "observable '{name}' mixes charge sectors; evolve without charges"
                        )));
                    }
                    triplets.push((local[&r], j, v));
                }
            }
            let m = SparseMatrix::from_triplets(s.dim(), s.dim(), triplets);
            if m.add(&m.adjoint().scaled(-ONE)).max_abs() > 1e-10 {
                return Err(Error::invalid(format!("observable '{name}' is not Hermitian")));
            }
            out.push(m);
        }
        Ok(out)
    }

    /// tr(Oρ) summed over sectors.
    pub fn expect(&self, obs: &[SparseMatrix], y: &[C64]) -> C64 {
        let mut acc = ZERO;
        for (si, s) in self.sectors.iter().enumerate() {
            let n = s.dim();
            let rho = self.block(y, si);
            for (r, c, v) in obs[si].triplets() {
                acc += v * rho[r * n + c];
            }
        }
        acc
    }

    /// Trace, Hermiticity and smallest-eigenvalue diagnostics of the stored state.
    pub fn validity(&self, y: &[C64]) -> Validity {
        self.validity_with(y, None)
    }

    /// Like [`Blocks::validity`], but with `Some(limit)` positivity is first
    /// certified by a Cholesky factorisation of ρ_k + limit·1, which succeeds
    /// exactly when every eigenvalue of the block exceeds −limit. Eigenvalues
    /// are computed only for blocks that fail; when all pass, `min_eigenvalue`
    /// is +∞.
    pub fn validity_with(&self, y: &[C64], certify: Option<f64>) -> Validity {
        let mut trace = ZERO;
        let mut herm = 0.0f64;
        let mut min_eig = f64::INFINITY;
        for (si, s) in self.sectors.iter().enumerate() {
            let n = s.dim();
            let m = CMatrix::from_column_slice(n, n, self.block(y, si));
            trace += m.trace();
            herm = herm.max(linalg::hermiticity_error(&m));
            if let Some(limit) = certify {
                let shifted = &m + CMatrix::identity(n, n) * C64::new(limit, 0.0);
                if linalg::is_positive_definite(&shifted) {
                    continue;
                }
            }
            if let Some(e) = linalg::eigvalsh(&m).iter().copied().reduce(f64::min) {
                min_eig = min_eig.min(e);
            }
        }
        Validity {
            trace_error: (trace - ONE).norm(),
            hermiticity_error: herm,
            min_eigenvalue: min_eig,
        }
    }
}
