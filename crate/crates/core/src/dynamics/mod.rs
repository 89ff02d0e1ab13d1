//! Lindblad and Schrödinger time evolution with sampled observables.

mod blocks;
mod dopri;

pub use blocks::Blocks;
pub use dopri::{Dopri5, Stats};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};
use crate::models::LindbladModel;
use crate::qops::{DensityMatrix, HilbertSpace, OpSum, Operator, StateVector, Validity};

pub const DEFAULT_REL_TOL: f64 = 1e-8;
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

/// Per-sample state checks on master-equation runs.
pub const TRACE_LIMIT: f64 = 1e-6;
pub const HERMITICITY_LIMIT: f64 = 1e-8;
pub const NEGATIVITY_LIMIT: f64 = 1e-6;
/// Every sample is certified against [`NEGATIVITY_LIMIT`]; full spectra are
/// taken at every this many samples and at the last one.
pub const SPECTRUM_STRIDE: usize = 20;
/// Norm drift allowed in pure-state runs.
pub const NORM_LIMIT: f64 = 1e-6;
/// Convergence gates.
pub const TOLERANCE_GATE: f64 = 1e-5;
pub const TRUNCATION_GATE: f64 = 1e-4;

#[derive(Clone, Debug)]
pub enum InitialState {
    Pure(StateVector),
    Mixed(DensityMatrix),
    /// Diagonal in the product basis with the given probabilities.
    Diagonal { space: HilbertSpace, probs: Vec<f64> },
}

impl InitialState {
    /// Product of per-factor diagonal distributions (each normalised).
    pub fn product_diagonal(space: &HilbertSpace, locals: &[Vec<f64>]) -> Result<Self> {
        if locals.len() != space.len() {
            return Err(Error::invalid("one population vector per factor is required"));
        }
        let mut probs = vec![1.0];
        for (i, (p, f)) in locals.iter().zip(space.factors()).enumerate() {
            if p.len() != f.dim() {
                return Err(Error::mismatch(format!("populations {i} do not fit {f}")));
            }
            let total: f64 = p.iter().sum();
            if p.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidState(format!("populations {i} are not a distribution")));
            }
            probs = probs.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
        }
        Ok(InitialState::Diagonal {
            space: space.clone(),
            probs,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        match self {
            InitialState::Pure(s) => s.space(),
            InitialState::Mixed(r) => r.space(),
            InitialState::Diagonal { space, .. } => space,
        }
    }

    fn population(&self, i: usize) -> f64 {
        match self {
            InitialState::Pure(s) => s.amplitudes()[i].norm_sqr(),
            InitialState::Mixed(r) => r.matrix()[(i, i)].re,
            InitialState::Diagonal { probs, .. } => probs[i],
        }
    }

    pub(crate) fn sector_weights(
        &self,
        space: &HilbertSpace,
        by_key: &BTreeMap<Vec<i64>, Vec<usize>>,
    ) -> Result<BTreeMap<Vec<i64>, f64>> {
        self.space().ensure_same(space)?;
        Ok(by_key
            .iter()
            .map(|(k, idx)| (k.clone(), idx.iter().map(|&i| self.population(i)).sum()))
            .collect())
    }

    pub(crate) fn block(&self, space: &HilbertSpace, basis: &[usize]) -> Result<CMatrix> {
        self.space().ensure_same(space)?;
        let n = basis.len();
        Ok(match self {
            InitialState::Pure(s) => {
                let a = s.amplitudes();
                CMatrix::from_fn(n, n, |i, j| a[basis[i]] * a[basis[j]].conj())
            }
            InitialState::Mixed(r) => CMatrix::from_fn(n, n, |i, j| r.matrix()[(basis[i], basis[j])]),
            InitialState::Diagonal { probs, .. } => {
                CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(probs[basis[i]], 0.0) } else { ZERO })
            }
        })
    }
}

impl From<StateVector> for InitialState {
    fn from(s: StateVector) -> Self {
        InitialState::Pure(s)
    }
}

impl From<DensityMatrix> for InitialState {
    fn from(r: DensityMatrix) -> Self {
        InitialState::Mixed(r)
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub n_samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub observables: Vec<(String, OpSum)>,
    pub initial: InitialState,
    /// Evolve only the populated charge sectors when the model declares charges.
    pub use_charges: bool,
}

impl EvolutionSpec {
    pub fn new(t_start: f64, t_end: f64, n_samples: usize, initial: impl Into<InitialState>) -> Self {
        EvolutionSpec {
            t_start,
            t_end,
            n_samples,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            observables: Vec::new(),
            initial: initial.into(),
            use_charges: true,
        }
    }

    pub fn observe(mut self, name: impl Into<String>, op: OpSum) -> Self {
        self.observables.push((name.into(), op));
        self
    }

    pub fn observe_operator(self, name: impl Into<String>, op: &Operator) -> Self {
        self.observe(name, OpSum::from_operator(op))
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn dense(mut self) -> Self {
        self.use_charges = false;
        self
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_samples;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.t_end
                } else {
                    self.t_start + (self.t_end - self.t_start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    pub fn check(&self) -> Result<()> {
        if !(self.t_end > self.t_start) {
            return Err(Error::invalid(format!("t_end ({}) must exceed t_start ({})", self.t_end, self.t_start)));
        }
        if self.n_samples < 2 {
            return Err(Error::invalid("at least two samples are required"));
        }
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 1e-14 && tol < 1e-3) {
                return Err(Error::invalid(format!("{name} = {tol:e} outside (1e-14, 1e-3)")));
            }
        }
        for (name, op) in &self.observables {
            self.initial
                .space()
                .ensure_same(op.space())
                .map_err(|_| Error::mismatch(format!("observable '{name}' lives on another space")))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
    pub stats: Stats,
}

impl TimeSeries {
    fn empty(times: Vec<f64>, names: Vec<String>) -> Self {
        let n = names.len();
        TimeSeries {
            columns: vec![Vec::with_capacity(times.len()); n],
            times,
            names,
            metadata: BTreeMap::new(),
            stats: Stats::default(),
        }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len(), self.times.len());
        self.names.push(name.into());
        self.columns.push(values);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Largest absolute difference between matching columns of two runs on the same grid.
pub fn max_drift(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    if a.times.len() != b.times.len() || a.names != b.names {
        return Err(Error::invalid("time series do not share a grid and columns"));
    }
    let mut worst = 0.0f64;
    for (ca, cb) in a.columns.iter().zip(&b.columns) {
        for (x, y) in ca.iter().zip(cb) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

fn check_validity(v: &Validity, t: f64) -> Result<()> {
    if v.trace_error > TRACE_LIMIT {
        return Err(Error::IntegrationFailure {
            time: t,
            reason: format!("trace drifted by {:e}", v.trace_error),
        });
    }
    if v.hermiticity_error > HERMITICITY_LIMIT {
        return Err(Error::IntegrationFailure {
            time: t,
            reason: format!("density matrix lost Hermiticity ({:e})", v.hermiticity_error),
        });
    }
    if v.min_eigenvalue < -NEGATIVITY_LIMIT {
        return Err(Error::IntegrationFailure {
            time: t,
            reason: format!("density matrix has eigenvalue {:e}", v.min_eigenvalue),
        });
    }
    Ok(())
}

/// Integrates the master equation and records the observables at each sample.
pub fn evolve_lindblad(model: &LindbladModel, spec: &EvolutionSpec) -> Result<TimeSeries> {
    spec.check()?;
    model.space.ensure_same(spec.initial.space())?;
    let blocks = Blocks::new(model, &spec.initial, spec.use_charges)?;
    let observables: Vec<_> = spec
        .observables
        .iter()
        .map(|(name, op)| blocks.observable(&model.space, op, name))
        .collect::<Result<_>>()?;
    let y0 = blocks.initial(&model.space, &spec.initial)?;
    let times = spec.times();
    let mut ts = TimeSeries::empty(times.clone(), spec.observables.iter().map(|(n, _)| n.clone()).collect());
    let mut worst = Validity {
        trace_error: 0.0,
        hermiticity_error: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    let mut imag = 0.0f64;
    let solver = Dopri5::new(spec.rel_tol, spec.abs_tol);
    let mut scratch = Vec::new();
    let stats = solver.integrate(
        |t, y, dy| blocks.rhs(t, y, dy, &mut scratch),
        spec.t_start,
        y0,
        &times,
        |i, t, y| {
            let spectrum = i % SPECTRUM_STRIDE == 0 || i + 1 == times.len();
            let v = blocks.validity_with(y, (!spectrum).then_some(NEGATIVITY_LIMIT));
            check_validity(&v, t)?;
            worst.trace_error = worst.trace_error.max(v.trace_error);
            worst.hermiticity_error = worst.hermiticity_error.max(v.hermiticity_error);
            worst.min_eigenvalue = worst.min_eigenvalue.min(v.min_eigenvalue);
            for (col, obs) in ts.columns.iter_mut().zip(&observables) {
                let e = blocks.expect(obs, y);
                imag = imag.max(e.im.abs());
                col.push(e.re);
            }
            Ok(())
        },
    )?;
    ts.stats = stats;
    let m = &mut ts.metadata;
    m.insert("model".into(), model.label.clone());
    m.insert("solver".into(), "lindblad".into());
    m.insert("space".into(), model.space.to_string());
    m.insert("sectors".into(), blocks.n_sectors().to_string());
    m.insert("rel_tol".into(), spec.rel_tol.to_string());
    m.insert("abs_tol".into(), spec.abs_tol.to_string());
    m.insert("steps".into(), stats.steps.to_string());
    m.insert("rejected".into(), stats.rejected.to_string());
    m.insert("max_trace_error".into(), format!("{:e}", worst.trace_error));
    m.insert("max_hermiticity_error".into(), format!("{:e}", worst.hermiticity_error));
    m.insert("min_eigenvalue".into(), format!("{:e}", worst.min_eigenvalue));
    m.insert("spectrum_stride".into(), SPECTRUM_STRIDE.to_string());
    m.insert("max_imag_residue".into(), format!("{imag:e}"));
    Ok(ts)
}

fn pure_initial(spec: &EvolutionSpec) -> Result<&StateVector> {
    match &spec.initial {
        InitialState::Pure(s) => Ok(s),
        _ => Err(Error::invalid("unitary evolution needs a pure initial state")),
    }
}

/// Propagates a state vector under the Hamiltonian alone; collapse operators are ignored.
pub fn evolve_unitary(model: &LindbladModel, spec: &EvolutionSpec) -> Result<TimeSeries> {
    spec.check()?;
    let psi0 = pure_initial(spec)?;
    model.space.ensure_same(psi0.space())?;
    let obs: Vec<_> = spec.observables.iter().map(|(_, op)| op.to_sparse()).collect();
    for ((name, _), o) in spec.observables.iter().zip(&obs) {
        if o.add(&o.adjoint().scaled(C64::new(-1.0, 0.0))).max_abs() > 1e-10 {
            return Err(Error::invalid(format!("observable '{name}' is not Hermitian")));
        }
    }
    let times = spec.times();
    let mut ts = TimeSeries::empty(times.clone(), spec.observables.iter().map(|(n, _)| n.clone()).collect());
    let record = |t: f64, psi: &[C64], ts: &mut TimeSeries| -> Result<()> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_LIMIT {
            return Err(Error::IntegrationFailure {
                time: t,
                reason: format!("norm drifted to {norm}"),
            });
        }
        for (col, o) in ts.columns.iter_mut().zip(&obs) {
            let opsi = o.mul_vec(psi);
            let e: C64 = psi.iter().zip(&opsi).map(|(a, b)| a.conj() * b).sum();
            col.push(e.re);
        }
        Ok(())
    };

    if model.is_static() {
        let h = model.hamiltonian.operator_at(0.0);
        let (vals, vecs) = linalg::eigh(h.matrix());
        let coeffs = vecs.adjoint() * psi0.amplitudes();
        for &t in &times {
            let phased = CVector::from_fn(coeffs.len(), |k, _| coeffs[k] * C64::from_polar(1.0, -vals[k] * (t - spec.t_start)));
            let psi = &vecs * phased;
            record(t, psi.as_slice(), &mut ts)?;
        }
        ts.metadata.insert("solver".into(), "unitary-eigen".into());
    } else {
        let closed = model.without_dissipation();
        let blocks = Blocks::new(&closed, &spec.initial, false)?;
        let solver = Dopri5::new(spec.rel_tol, spec.abs_tol);
        let stats = solver.integrate(
            |t, y, dy| blocks.schrodinger(t, y, dy, 1),
            spec.t_start,
            psi0.amplitudes().as_slice().to_vec(),
            &times,
            |_, t, y| record(t, y, &mut ts),
        )?;
        ts.stats = stats;
        ts.metadata.insert("solver".into(), "unitary-dopri5".into());
        ts.metadata.insert("steps".into(), stats.steps.to_string());
    }
    ts.metadata.insert("model".into(), model.label.clone());
    ts.metadata.insert("space".into(), model.space.to_string());
    Ok(ts)
}

/// Final state vector after unitary evolution from `t0` to `t1`.
pub fn evolve_state(model: &LindbladModel, psi0: &StateVector, t0: f64, t1: f64, rel_tol: f64, abs_tol: f64) -> Result<StateVector> {
    let closed = model.without_dissipation();
    let initial = InitialState::Pure(psi0.clone());
    let blocks = Blocks::new(&closed, &initial, false)?;
    let mut out = Vec::new();
    Dopri5::new(rel_tol, abs_tol).integrate(
        |t, y, dy| blocks.schrodinger(t, y, dy, 1),
        t0,
        psi0.amplitudes().as_slice().to_vec(),
        &[t1],
        |_, _, y| {
            out = y.to_vec();
            Ok(())
        },
    )?;
    StateVector::normalized(model.space.clone(), CVector::from_vec(out))
}

/// Final density matrix of a master-equation run over the full space.
pub fn evolve_density(model: &LindbladModel, initial: &InitialState, t0: f64, t1: f64, rel_tol: f64, abs_tol: f64) -> Result<DensityMatrix> {
    let blocks = Blocks::new(model, initial, false)?;
    let y0 = blocks.initial(&model.space, initial)?;
    let mut out = Vec::new();
    let mut scratch = Vec::new();
    Dopri5::new(rel_tol, abs_tol).integrate(
        |t, y, dy| blocks.rhs(t, y, dy, &mut scratch),
        t0,
        y0,
        &[t1],
        |_, t, y| {
            check_validity(&blocks.validity(y), t)?;
            out = y.to_vec();
            Ok(())
        },
    )?;
    let d = model.space.dim();
    Ok(DensityMatrix::from_raw(model.space.clone(), CMatrix::from_column_slice(d, d, &out)))
}

/// Time-ordered propagator U(t₁, t₀); collapse operators are ignored.
pub fn propagator_between(model: &LindbladModel, t0: f64, t1: f64) -> Result<Operator> {
    let d = model.space.dim();
    let u = if model.is_static() {
        linalg::expm_hermitian(model.hamiltonian.operator_at(0.0).matrix(), t1 - t0)
    } else if t1 == t0 {
        CMatrix::identity(d, d)
    } else {
        let closed = model.without_dissipation();
        let psi = crate::qops::ground(&model.space);
        let blocks = Blocks::new(&closed, &InitialState::Pure(psi), false)?;
        let mut out = Vec::new();
        Dopri5::new(1e-11, 1e-13).integrate(
            |t, y, dy| blocks.schrodinger(t, y, dy, d),
            t0,
            CMatrix::identity(d, d).as_slice().to_vec(),
            &[t1],
            |_, _, y| {
                out = y.to_vec();
                Ok(())
            },
        )?;
        CMatrix::from_column_slice(d, d, &out)
    };
    let defect = linalg::max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(d, d));
    if defect > 1e-7 {
        return Err(Error::IntegrationFailure {
            time: t1,
            reason: format!("propagator lost unitarity ({defect:e})"),
        });
    }
    Operator::new(model.space.clone(), u)
}

/// U(t) from t = 0.
pub fn propagator(model: &LindbladModel, t: f64) -> Result<Operator> {
    propagator_between(model, 0.0, t)
}

/// Outcome of the tolerance-halving and truncation+5 re-runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub tolerance_drift: f64,
    pub truncation_drift: Option<f64>,
}

impl GateReport {
    pub fn tolerance_ok(&self) -> bool {
        self.tolerance_drift < TOLERANCE_GATE
    }

    pub fn truncation_ok(&self) -> bool {
        self.truncation_drift.is_none_or(|d| d < TRUNCATION_GATE)
    }

    pub fn converged(&self) -> bool {
        self.tolerance_ok() && self.truncation_ok()
    }

    pub fn annotate(&self, ts: &mut TimeSeries) {
        let m = &mut ts.metadata;
        m.insert("gate.tolerance_drift".into(), format!("{:e}", self.tolerance_drift));
        if let Some(d) = self.truncation_drift {
            m.insert("gate.truncation_drift".into(), format!("{d:e}"));
        }
        m.insert("converged".into(), self.converged().to_string());
    }
}

/// Runs `run(extra_levels, tolerance_scale)` at the base setting, with both
/// tolerances halved, and (when `truncation`) with five extra Fock levels.
pub fn convergence_gates<F>(run: F, truncation: bool) -> Result<(TimeSeries, GateReport)>
where
    F: Fn(usize, f64) -> Result<TimeSeries>,
{
    let base = run(0, 1.0)?;
    let halved = run(0, 0.5)?;
    let tolerance_drift = max_drift(&base, &halved)?;
    let truncation_drift = if truncation { Some(max_drift(&base, &run(5, 1.0)?)?) } else { None };
    let report = GateReport {
        tolerance_drift,
        truncation_drift,
    };
    let mut base = base;
    report.annotate(&mut base);
    Ok((base, report))
}
