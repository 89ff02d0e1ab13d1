//! Hamiltonian and collapse-operator builders for every model variant.
//!
//! Factor order is fixed per builder and documented on each one. Qubit level 1
//! is the excited spin state. Builders with U(1) symmetries record integer
//! charge weights per factor; the dynamics layer uses them to evolve only the
//! symmetry blocks that are populated.

mod hamiltonian;

pub use hamiltonian::{Coefficient, Hamiltonian};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{self, SqueezeParams, SystemParams};
use crate::linalg::{c, C64, ONE};
use crate::qops::{Collective, Factor, HilbertSpace, OpSum, Pauli};

/// Largest spin count accepted by [`build_cooling_exact`].
pub const MAX_EXACT_SPINS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    Red,
    Blue,
}

/// √rate · L(t) with L(t) = Σ_i f_i(t) A_i. Static collapses have one constant term.
#[derive(Clone, Debug)]
pub struct Collapse {
    pub rate: f64,
    pub terms: Vec<(Coefficient, OpSum)>,
    pub label: String,
}

impl Collapse {
    pub fn is_static(&self) -> bool {
        self.terms.iter().all(|(c, _)| c.is_const())
    }
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub space: HilbertSpace,
    pub hamiltonian: Hamiltonian,
    pub collapse: Vec<Collapse>,
    pub label: String,
    /// Integer weights per factor, one vector per conserved charge
    /// Q = Σ_f w_f · level_f of the Hamiltonian.
    pub charges: Vec<Vec<i64>>,
}

impl LindbladModel {
    pub fn new(space: &HilbertSpace, hamiltonian: Hamiltonian, label: impl Into<String>) -> Self {
        LindbladModel {
            space: space.clone(),
            hamiltonian,
            collapse: Vec::new(),
            label: label.into(),
            charges: Vec::new(),
        }
    }

    /// Adds √rate · op; zero rates are dropped.
    pub fn with_collapse(self, rate: f64, op: OpSum, label: impl Into<String>) -> Result<Self> {
        self.with_modulated_collapse(rate, vec![(Coefficient::Const(ONE), op)], label)
    }

    /// Adds √rate · Σ_i f_i(t) A_i; zero rates are dropped.
    pub fn with_modulated_collapse(
        mut self,
        rate: f64,
        terms: Vec<(Coefficient, OpSum)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::invalid(format!("collapse rate must be a finite non-negative number, got {rate}")));
        }
        if terms.is_empty() {
            return Err(Error::invalid("collapse operator needs at least one term"));
        }
        for (_, op) in &terms {
            self.space.ensure_same(op.space())?;
        }
        if rate > 0.0 {
            self.collapse.push(Collapse {
                rate,
                terms,
                label: label.into(),
            });
        }
        Ok(self)
    }

    pub fn with_charge(mut self, weights: Vec<i64>) -> Self {
        assert_eq!(weights.len(), self.space.len());
        self.charges.push(weights);
        self
    }

    pub fn without_dissipation(&self) -> Self {
        let mut m = self.clone();
        m.collapse.clear();
        m
    }

    /// Whether the Hamiltonian is time independent (collapses are not considered).
    pub fn is_static(&self) -> bool {
        self.hamiltonian.is_static()
    }

    /// Diagonal operator Q = Σ_f w_f n_f for a recorded charge.
    pub fn charge_operator(&self, which: usize) -> Result<OpSum> {
        let w = self
            .charges
            .get(which)
            .ok_or_else(|| Error::invalid(format!("model has {} charges", self.charges.len())))?;
        let mut q = OpSum::zero(&self.space);
        for (f, &wf) in w.iter().enumerate() {
            if wf == 0 {
                continue;
            }
            let n = match self.space.factor(f)? {
                Factor::Qubit => crate::qops::local::outer(2, 1, 1),
                Factor::Boson(n) => crate::qops::local::number(n),
            };
            q = q + OpSum::local(&self.space, f, n)?.scale_re(wf as f64);
        }
        Ok(q)
    }

    /// Largest |H(t) − H(t)†| over the given times.
    pub fn hermiticity_error(&self, times: &[f64]) -> f64 {
        times
            .iter()
            .map(|&t| self.hamiltonian.operator_at(t).hermiticity_error())
            .fold(0.0, f64::max)
    }
}

/// Parameters plus truncations for one model instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRecipe {
    pub params: SystemParams,
    /// Fock cutoffs of the boson factors, in builder factor order.
    pub truncations: Vec<usize>,
    pub sideband: Sideband,
    pub label: String,
    /// Expected occupation per boson factor, when known; drives the truncation guards.
    #[serde(default)]
    pub expected_occupation: Vec<f64>,
}

impl ModelRecipe {
    pub fn new(params: SystemParams, truncations: Vec<usize>) -> Self {
        ModelRecipe {
            params,
            truncations,
            sideband: Sideband::Red,
            label: String::new(),
            expected_occupation: Vec::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_sideband(mut self, sideband: Sideband) -> Self {
        self.sideband = sideband;
        self
    }

    pub fn with_occupation(mut self, occupation: Vec<f64>) -> Self {
        self.expected_occupation = occupation;
        self
    }

    /// Same recipe with every truncation raised by `extra`.
    pub fn with_extra_levels(&self, extra: usize) -> Self {
        let mut r = self.clone();
        r.truncations.iter_mut().for_each(|n| *n += extra);
        r
    }

    /// Squeezed-frame parameters implied by Δ_m and Ω_p.
    pub fn squeeze(&self) -> Result<SqueezeParams> {
        let p = &self.params;
        frames::squeeze_params(p.delta_m, p.pump_amplitude, p.g0, p.j_m)
    }

    fn boson_truncations(&self, n: usize) -> Result<&[usize]> {
        if self.truncations.len() != n {
            return Err(Error::mismatch(format!(
                "model needs {n} boson truncations, recipe has {}",
                self.truncations.len()
            )));
        }
        for (i, &t) in self.truncations.iter().enumerate() {
            if t < 2 {
                return Err(Error::invalid(format!("truncation {i} must be at least 2, got {t}")));
            }
            if let Some(&occ) = self.expected_occupation.get(i) {
                if occ >= 1.0 && t < 4 {
                    return Err(Error::TruncationGuard(format!(
                        "boson {i} expects occupation {occ} but truncation is {t} (< 4)"
                    )));
                }
            }
        }
        Ok(&self.truncations)
    }

    /// Key/value echo for output metadata.
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("label".into(), self.label.clone());
        m.insert("sideband".into(), format!("{:?}", self.sideband).to_lowercase());
        m.insert(
            "truncations".into(),
            self.truncations.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" "),
        );
        if let Ok(v) = serde_json::to_value(&self.params) {
            if let Some(obj) = v.as_object() {
                for (k, v) in obj {
                    m.insert(format!("params.{k}"), v.to_string());
                }
            }
        }
        m
    }
}

fn space_of(factors: Vec<Factor>) -> Result<HilbertSpace> {
    HilbertSpace::new(factors)
}

fn re(x: f64) -> C64 {
    c(x, 0.0)
}

/// Full model: cavities (L, T, R), resonators (L, T, R), spin.
/// Factor order a_L, a_T, a_R, b_L, b_T, b_R, σ.
pub fn build_full(recipe: &ModelRecipe) -> Result<LindbladModel> {
    let tr = recipe.boson_truncations(6)?;
    let p = &recipe.params;
    let mut factors: Vec<Factor> = tr.iter().map(|&n| Factor::Boson(n)).collect();
    factors.push(Factor::Qubit);
    let s = space_of(factors)?;
    let a: Vec<OpSum> = (0..3).map(|i| OpSum::annihilation(&s, i)).collect::<Result<_>>()?;
    let b: Vec<OpSum> = (3..6).map(|i| OpSum::annihilation(&s, i)).collect::<Result<_>>()?;
    let sm = OpSum::pauli(&s, 6, Pauli::Minus)?;
    let sz = OpSum::pauli(&s, 6, Pauli::Z)?;
    let (l, t, r) = (0, 1, 2);

    let mut h0 = OpSum::zero(&s);
    for bj in &b {
        let bd = bj.adjoint();
        h0 = h0 + p.delta_m * (&bd * bj);
        h0 = h0 - (p.pump_amplitude / 2.0) * (&(bj * bj) + &(&bd * &bd));
    }
    h0 = h0 + (p.j_m * (&b[t].adjoint() * &(&b[l] + &b[r]))).plus_hc();
    for aj in &a {
        h0 = h0 + p.omega_c * (&aj.adjoint() * aj);
    }
    h0 = h0 + p.omega_a * sz;
    h0 = h0 + (p.g * (&a[t].adjoint() * &sm)).plus_hc();
    h0 = h0 + (p.j * (&a[t].adjoint() * &(&a[l] + &a[r]))).plus_hc();

    let mut h = Hamiltonian::constant(h0);
    let w = p.omega_p;
    for j in 0..3 {
        let na = &a[j].adjoint() * &a[j];
        let up = -p.g0 * (&na * &b[j].adjoint());
        let down = -p.g0 * (&na * &b[j]);
        h.push(Coefficient::func(move |t| C64::from_polar(1.0, w * t)), up);
        h.push(Coefficient::func(move |t| C64::from_polar(1.0, -w * t)), down);
    }
    let mut m = LindbladModel::new(&s, h, label_or(recipe, "full"));
    for (j, aj) in a.into_iter().enumerate() {
        m = m.with_collapse(p.kappa, aj, format!("kappa a{j}"))?;
    }
    for (j, bj) in b.into_iter().enumerate() {
        m = m.with_collapse(p.gamma_m_s, bj, format!("gamma_m b{j}"))?;
    }
    m.with_collapse(p.gamma, OpSum::pauli(&s, 6, Pauli::Minus)?, "gamma sigma-")
}

/// Effective tripartite model with g₀^S = g₀e^r cos ω_p t. Factor order a₀, b₀, σ; with
/// `classical_drive` the cavity is replaced by its amplitude n̄ and the order
/// is b₀, σ.
pub fn build_effective_tripartite(recipe: &ModelRecipe, classical_drive: bool) -> Result<LindbladModel> {
    let p = &recipe.params;
    let sq = recipe.squeeze()?;
    let w = p.omega_p;
    let amp = p.g * sq.g0_s_amplitude / (2.0 * p.j);
    let cosine = Coefficient::func(move |t| re((w * t).cos()));
    if classical_drive {
        let tr = recipe.boson_truncations(1)?;
        let s = space_of(vec![Factor::Boson(tr[0]), Factor::Qubit])?;
        let b = OpSum::annihilation(&s, 0)?;
        let x = b.plus_hc();
        let h = Hamiltonian::constant(p.delta * OpSum::pauli(&s, 1, Pauli::Z)? + sq.delta_m_s * (&b.adjoint() * &b))
            .with(cosine, (p.n_bar_cav() * amp) * (&x * &OpSum::pauli(&s, 1, Pauli::X)?));
        return LindbladModel::new(&s, h, label_or(recipe, "rabi"))
            .with_collapse(p.gamma_m_s, b, "gamma_m b0")?
            .with_collapse(p.gamma, OpSum::pauli(&s, 1, Pauli::Minus)?, "gamma sigma-");
    }
    let tr = recipe.boson_truncations(2)?;
    let s = space_of(vec![Factor::Boson(tr[0]), Factor::Boson(tr[1]), Factor::Qubit])?;
    let a = OpSum::annihilation(&s, 0)?;
    let b = OpSum::annihilation(&s, 1)?;
    let sm = OpSum::pauli(&s, 2, Pauli::Minus)?;
    let exch = (&a.adjoint() * &sm).plus_hc();
    let h = Hamiltonian::constant(p.delta * OpSum::pauli(&s, 2, Pauli::Z)? + sq.delta_m_s * (&b.adjoint() * &b))
        .with(cosine, amp * (&b.plus_hc() * &exch));
    LindbladModel::new(&s, h, label_or(recipe, "tripartite"))
        .with_collapse(p.kappa, a, "kappa a0")?
        .with_collapse(p.gamma_m_s, b, "gamma_m b0")?
        .with_collapse(p.gamma, sm, "gamma sigma-")
}

fn spin_boson(recipe: &ModelRecipe) -> Result<(HilbertSpace, OpSum, OpSum)> {
    let tr = recipe.boson_truncations(1)?;
    let s = space_of(vec![Factor::Boson(tr[0]), Factor::Qubit])?;
    let b = OpSum::annihilation(&s, 0)?;
    let sm = OpSum::pauli(&s, 1, Pauli::Minus)?;
    Ok((s, b, sm))
}

/// Jaynes–Cummings: Λ(b₀σ₊ + b₀†σ₋). Factor order b₀, σ.
pub fn build_jc(recipe: &ModelRecipe, lambda: f64) -> Result<LindbladModel> {
    let (s, b, sm) = spin_boson(recipe)?;
    let h = lambda * (&b * &sm.adjoint()).plus_hc();
    let p = &recipe.params;
    Ok(LindbladModel::new(&s, Hamiltonian::constant(h), label_or(recipe, "jc"))
        .with_collapse(p.gamma_m_s, b, "gamma_m b0")?
        .with_collapse(p.gamma, sm, "gamma sigma-")?
        .with_charge(vec![1, 1]))
}

/// Anti-Jaynes–Cummings: Λ(b₀σ₋ + b₀†σ₊). Factor order b₀, σ.
pub fn build_anti_jc(recipe: &ModelRecipe, lambda: f64) -> Result<LindbladModel> {
    let (s, b, sm) = spin_boson(recipe)?;
    let h = lambda * (&b * &sm).plus_hc();
    let p = &recipe.params;
    Ok(LindbladModel::new(&s, Hamiltonian::constant(h), label_or(recipe, "anti-jc"))
        .with_collapse(p.gamma_m_s, b, "gamma_m b0")?
        .with_collapse(p.gamma, sm, "gamma sigma-")?
        .with_charge(vec![1, -1]))
}

fn tripartite_ops(recipe: &ModelRecipe) -> Result<(HilbertSpace, OpSum, OpSum, OpSum)> {
    let tr = recipe.boson_truncations(2)?;
    let s = space_of(vec![Factor::Boson(tr[0]), Factor::Boson(tr[1]), Factor::Qubit])?;
    let a = OpSum::annihilation(&s, 0)?;
    let b = OpSum::annihilation(&s, 1)?;
    let sm = OpSum::pauli(&s, 2, Pauli::Minus)?;
    Ok((s, a, b, sm))
}

fn tripartite_model(recipe: &ModelRecipe, h: OpSum, label: &str, charges: [[i64; 3]; 2]) -> Result<LindbladModel> {
    let p = &recipe.params;
    let s = h.space().clone();
    let mut m = LindbladModel::new(&s, Hamiltonian::constant(h), label_or(recipe, label))
        .with_collapse(p.kappa, OpSum::annihilation(&s, 0)?, "kappa a0")?
        .with_collapse(p.gamma_m_s, OpSum::annihilation(&s, 1)?, "gamma_m b0")?
        .with_collapse(p.gamma, OpSum::pauli(&s, 2, Pauli::Minus)?, "gamma sigma-")?;
    for w in charges {
        m = m.with_charge(w.to_vec());
    }
    Ok(m)
}

/// Blue sideband: Λ₀(σ₋b₀â₀† + σ₊b₀†â₀). Factor order a₀, b₀, σ.
/// Conserves n_a + n_b and n_a + s.
pub fn build_blue(recipe: &ModelRecipe, lambda0: f64) -> Result<LindbladModel> {
    let (_, a, b, sm) = tripartite_ops(recipe)?;
    let h = lambda0 * (&(&sm * &b) * &a.adjoint()).plus_hc();
    tripartite_model(recipe, h, "blue", [[1, 1, 0], [1, 0, 1]])
}

/// Red sideband: Λ₀(σ₋b₀†â₀† + σ₊b₀â₀). Factor order a₀, b₀, σ.
/// Conserves n_a − n_b and n_a + s.
pub fn build_red(recipe: &ModelRecipe, lambda0: f64) -> Result<LindbladModel> {
    let (_, a, b, sm) = tripartite_ops(recipe)?;
    let h = lambda0 * (&(&sm * &b.adjoint()) * &a.adjoint()).plus_hc();
    tripartite_model(recipe, h, "red", [[1, -1, 0], [1, 0, 1]])
}

fn spins_and_boson(recipe: &ModelRecipe, n_spins: usize) -> Result<(HilbertSpace, Vec<usize>)> {
    let tr = recipe.boson_truncations(1)?;
    let mut factors = vec![Factor::Boson(tr[0])];
    factors.extend(std::iter::repeat_n(Factor::Qubit, n_spins));
    Ok((space_of(factors)?, (1..=n_spins).collect()))
}

fn per_spin_decay(mut m: LindbladModel, gamma: f64, qubits: &[usize]) -> Result<LindbladModel> {
    let s = m.space.clone();
    for &q in qubits {
        m = m.with_collapse(gamma, OpSum::pauli(&s, q, Pauli::Minus)?, format!("gamma sigma-{q}"))?;
    }
    Ok(m)
}

/// Mølmer–Sørensen gate: Λ(b₀e^{−iδt} + b₀†e^{iδt})J_x with δ = Δ_m^S. Factor order b₀, σ₁ … σ_N.
/// `couplings` optionally replaces the homogeneous Λ by one value per spin.
pub fn build_ms_gate(
    recipe: &ModelRecipe,
    lambda: f64,
    n_spins: usize,
    delta_m_s: f64,
    couplings: Option<&[f64]>,
) -> Result<LindbladModel> {
    if n_spins < 2 {
        return Err(Error::invalid(format!("the MS gate needs at least 2 spins, got {n_spins}")));
    }
    if let Some(cs) = couplings {
        if cs.len() != n_spins {
            return Err(Error::invalid(format!("{} couplings for {n_spins} spins", cs.len())));
        }
    }
    let (s, qubits) = spins_and_boson(recipe, n_spins)?;
    let b = OpSum::annihilation(&s, 0)?;
    let mut jx = OpSum::zero(&s);
    for (k, &q) in qubits.iter().enumerate() {
        let lk = couplings.map_or(lambda, |cs| cs[k]);
        jx = jx + lk * OpSum::pauli(&s, q, Pauli::X)?;
    }
    let d = delta_m_s;
    let h = Hamiltonian::new(&s)
        .with(Coefficient::func(move |t| C64::from_polar(1.0, -d * t)), &b * &jx)
        .with(Coefficient::func(move |t| C64::from_polar(1.0, d * t)), &b.adjoint() * &jx);
    let p = &recipe.params;
    let m = LindbladModel::new(&s, h, label_or(recipe, "ms-gate")).with_collapse(p.gamma_m_s, b, "gamma_m b0")?;
    per_spin_decay(m, p.gamma, &qubits)
}

/// Collective cooling: Λ(b₀J₊ + b₀†J₋) with exact spins. Factor order b₀, σ₁ … σ_N.
pub fn build_cooling_exact(recipe: &ModelRecipe, lambda: f64, n_spins: usize) -> Result<LindbladModel> {
    if n_spins == 0 {
        return Err(Error::invalid("cooling model needs at least one spin"));
    }
    if n_spins > MAX_EXACT_SPINS {
        return Err(Error::invalid(format!(
            "{n_spins} spins exceed the exact limit of {MAX_EXACT_SPINS}; use build_cooling_hp"
        )));
    }
    let (s, qubits) = spins_and_boson(recipe, n_spins)?;
    let b = OpSum::annihilation(&s, 0)?;
    let jp = OpSum::collective(&s, &qubits, Collective::Plus)?;
    let h = lambda * (&b * &jp).plus_hc();
    let p = &recipe.params;
    let m = LindbladModel::new(&s, Hamiltonian::constant(h), label_or(recipe, "cooling-exact"))
        .with_collapse(p.gamma_m_s, b, "gamma_m b0")?
        .with_charge(vec![1; n_spins + 1]);
    per_spin_decay(m, p.gamma, &qubits)
}

/// Holstein–Primakoff form of the cooling model: Λ√N(b₀d̂† + b₀†d̂). Factor order b₀, d.
/// The first boson must hold its expected occupation plus six standard
/// deviations (coherent-state width √n̄).
pub fn build_cooling_hp(recipe: &ModelRecipe, lambda: f64, n_spins: usize) -> Result<LindbladModel> {
    if n_spins == 0 {
        return Err(Error::invalid("cooling model needs at least one spin"));
    }
    let tr = recipe.boson_truncations(2)?;
    if let Some(&occ) = recipe.expected_occupation.first() {
        let need = (occ + 6.0 * occ.sqrt()).ceil() as usize;
        if tr[0] < need {
            return Err(Error::TruncationGuard(format!(
                "phonon truncation {} is below occupation {occ} + 6σ = {need}",
                tr[0]
            )));
        }
    }
    let s = space_of(vec![Factor::Boson(tr[0]), Factor::Boson(tr[1])])?;
    let b = OpSum::annihilation(&s, 0)?;
    let d = OpSum::annihilation(&s, 1)?;
    let h = (lambda * (n_spins as f64).sqrt()) * (&b * &d.adjoint()).plus_hc();
    let p = &recipe.params;
    Ok(LindbladModel::new(&s, Hamiltonian::constant(h), label_or(recipe, "cooling-hp"))
        .with_collapse(p.gamma_m_s, b, "gamma_m b0")?
        .with_collapse(p.gamma, d, "gamma d")?
        .with_charge(vec![1, 1]))
}

/// [`build_cooling_hp`] in the interaction picture of its exchange term
/// H = Ω(b₀d̂† + b₀†d̂), Ω = Λ√N. The Hamiltonian vanishes and the collapses
/// become U†b₀U = cos Ωt b₀ − i sin Ωt d̂ and U†d̂U = cos Ωt d̂ − i sin Ωt b₀.
/// Sectors with b₀ + d̂ up to the smaller truncation are complete and invariant,
/// so the picture change is exact on states supported there. Lab populations
/// follow from [`cooling_lab_populations`].
pub fn build_cooling_hp_rotating(recipe: &ModelRecipe, lambda: f64, n_spins: usize) -> Result<LindbladModel> {
    let lab = build_cooling_hp(recipe, lambda, n_spins)?;
    let s = lab.space.clone();
    let b = OpSum::annihilation(&s, 0)?;
    let d = OpSum::annihilation(&s, 1)?;
    let omega = lambda * (n_spins as f64).sqrt();
    let cos = Coefficient::func(move |t| c((omega * t).cos(), 0.0));
    let sin = Coefficient::func(move |t| c(0.0, -(omega * t).sin()));
    let p = &recipe.params;
    Ok(LindbladModel::new(&s, Hamiltonian::new(&s), format!("{} rotating", lab.label))
        .with_modulated_collapse(p.gamma_m_s, vec![(cos.clone(), b.clone()), (sin.clone(), d.clone())], "gamma_m b0")?
        .with_modulated_collapse(p.gamma, vec![(cos, d), (sin, b)], "gamma d")?
        .with_charge(vec![1, 1]))
}

/// Lab-frame (⟨n_b⟩, ⟨n_d⟩) at time t from rotating-frame ⟨n_b⟩, ⟨n_d⟩ and
/// ⟨i(d̂†b₀ − b₀†d̂)⟩, see [`cooling_current`].
pub fn cooling_lab_populations(omega: f64, t: f64, n_b: f64, n_d: f64, current: f64) -> (f64, f64) {
    let (sn, cs) = (omega * t).sin_cos();
    let mixed = cs * sn * current;
    (cs * cs * n_b + sn * sn * n_d + mixed, cs * cs * n_d + sn * sn * n_b - mixed)
}

/// i(d̂†b₀ − b₀†d̂) on the (b₀, d̂) space of the cooling models.
pub fn cooling_current(space: &HilbertSpace) -> Result<OpSum> {
    let b = OpSum::annihilation(space, 0)?;
    let d = OpSum::annihilation(space, 1)?;
    Ok((&d.adjoint() * &b - &b.adjoint() * &d).scale(c(0.0, 1.0)))
}

fn label_or(recipe: &ModelRecipe, default: &str) -> String {
    if recipe.label.is_empty() {
        default.to_string()
    } else {
        recipe.label.clone()
    }
}

/// Single-excitation block of a static model: the Hamiltonian restricted to
/// basis states whose levels sum to one.
pub fn single_excitation_block(model: &LindbladModel) -> crate::linalg::CMatrix {
    let s = &model.space;
    let idx: Vec<usize> = (0..s.dim()).filter(|&i| s.levels_of(i).iter().sum::<usize>() == 1).collect();
    let h = model.hamiltonian.operator_at(0.0);
    crate::linalg::CMatrix::from_fn(idx.len(), idx.len(), |i, j| h.get(idx[i], idx[j]))
}
