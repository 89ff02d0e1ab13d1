use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::figures::{fig3_params, fig4_params, fig5_params, fig6_params, squeezing_of, FIG3_N_CAV, FIG3_R, FIG4_R};
use super::{CsvTable, FigureId, NBarReading, CODE_VERSION};
use crate::dynamics::{convergence_gates, evolve_lindblad, evolve_unitary, EvolutionSpec, GateReport, InitialState, TimeSeries};
use crate::error::{Error, Result};
use crate::frames::{lambda_enhanced, lambda_tripartite, SystemParams};
use crate::models::{self, LindbladModel, ModelRecipe, Sideband};
use crate::qops::{local, Factor, HilbertSpace, OpSum, Pauli, StateVector};

/// Top-level population above which a truncation is rejected.
pub const GUARD_LIMIT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Full,
    Tripartite,
    Rabi,
    Jc,
    AntiJc,
    Blue,
    Red,
    MsGate,
    CoolingExact,
    CoolingHp,
    /// Interaction picture of the exchange term; figure use only.
    #[serde(skip)]
    CoolingHpRotating,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Tripartite => "tripartite",
            ModelKind::Rabi => "rabi",
            ModelKind::Jc => "jc",
            ModelKind::AntiJc => "anti-jc",
            ModelKind::Blue => "blue",
            ModelKind::Red => "red",
            ModelKind::MsGate => "ms-gate",
            ModelKind::CoolingExact => "cooling-exact",
            ModelKind::CoolingHp => "cooling-hp",
            ModelKind::CoolingHpRotating => "cooling-hp-rotating",
        }
    }

    /// Factor names in builder order.
    pub fn factor_names(self, n_spins: usize) -> Vec<String> {
        let v = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        match self {
            ModelKind::Full => v(&["aL", "aT", "aR", "bL", "bT", "bR", "s"]),
            ModelKind::Tripartite | ModelKind::Blue | ModelKind::Red => v(&["a", "b", "s"]),
            ModelKind::Rabi | ModelKind::Jc | ModelKind::AntiJc => v(&["b", "s"]),
            ModelKind::MsGate | ModelKind::CoolingExact => {
                let mut n = v(&["b"]);
                n.extend((1..=n_spins).map(|k| format!("s{k}")));
                n
            }
            ModelKind::CoolingHp | ModelKind::CoolingHpRotating => v(&["b", "d"]),
        }
    }

    /// Λ for the spin-phonon models, Λ₀ for the sideband models.
    pub fn coupling(self, p: &SystemParams) -> Result<f64> {
        let r = squeezing_of(p)?;
        Ok(match self {
            ModelKind::Blue | ModelKind::Red => lambda_tripartite(p, r),
            _ => lambda_enhanced(p, r),
        })
    }

    pub fn build(self, recipe: &ModelRecipe, coupling: f64, n_spins: usize, detuning: f64) -> Result<LindbladModel> {
        match self {
            ModelKind::Full => models::build_full(recipe),
            ModelKind::Tripartite => models::build_effective_tripartite(recipe, false),
            ModelKind::Rabi => models::build_effective_tripartite(recipe, true),
            ModelKind::Jc => models::build_jc(recipe, coupling),
            ModelKind::AntiJc => models::build_anti_jc(recipe, coupling),
            ModelKind::Blue => models::build_blue(&recipe.clone().with_sideband(Sideband::Blue), coupling),
            ModelKind::Red => models::build_red(&recipe.clone().with_sideband(Sideband::Red), coupling),
            ModelKind::MsGate => models::build_ms_gate(recipe, coupling, n_spins, detuning, None),
            ModelKind::CoolingExact => models::build_cooling_exact(recipe, coupling, n_spins),
            ModelKind::CoolingHp => models::build_cooling_hp(recipe, coupling, n_spins),
            ModelKind::CoolingHpRotating => models::build_cooling_hp_rotating(recipe, coupling, n_spins),
        }
    }
}

/// ⟨n⟩ per boson and ⟨σ_z⟩ per qubit, named after the factors, plus the
/// top-level projector of every boson for the growth guard.
pub fn observables(space: &HilbertSpace, names: &[String]) -> Result<Vec<(String, OpSum)>> {
    let qubits = space.factors().iter().filter(|f| f.is_qubit()).count();
    let mut out = Vec::new();
    let mut tops = Vec::new();
    for (i, (f, name)) in space.factors().iter().zip(names).enumerate() {
        match *f {
            Factor::Boson(n) => {
                out.push((format!("n_{name}"), OpSum::number(space, i)?));
                tops.push((format!("top_{name}"), OpSum::local(space, i, local::outer(n, n - 1, n - 1))?));
            }
            Factor::Qubit => {
                let label = if qubits == 1 { "sigma_z".to_string() } else { format!("sigma_z_{name}") };
                out.push((label, OpSum::pauli(space, i, Pauli::Z)?));
            }
        }
    }
    out.extend(tops);
    Ok(out)
}

/// Columns of a run except the guard projectors.
pub fn observable_columns(ts: &TimeSeries) -> Vec<(String, Vec<f64>)> {
    ts.names
        .iter()
        .zip(&ts.columns)
        .filter(|(n, _)| !n.starts_with("top_"))
        .map(|(n, c)| (n.clone(), c.clone()))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Settings {
    pub t_end: f64,
    pub n_samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub gates: bool,
}

/// A master-equation run that passed the truncation growth guard.
#[derive(Clone, Debug)]
pub struct GuardedRun {
    pub recipe: ModelRecipe,
    pub series: TimeSeries,
    pub gate: Option<GateReport>,
    pub max_top_population: f64,
    pub escalations: usize,
}

impl GuardedRun {
    pub fn converged(&self) -> bool {
        self.gate.is_none_or(|g| g.converged())
    }

    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = self.recipe.metadata();
        for (k, v) in &self.series.metadata {
            m.insert(format!("run.{k}"), v.clone());
        }
        m.insert("converged".into(), self.converged().to_string());
        if let Some(g) = self.gate {
            m.insert("gate.tolerance_drift".into(), format!("{:e}", g.tolerance_drift));
            if let Some(d) = g.truncation_drift {
                m.insert("gate.truncation_drift".into(), format!("{d:e}"));
            }
        }
        m.insert("max_top_population".into(), format!("{:e}", self.max_top_population));
        m.insert("truncation_escalations".into(), self.escalations.to_string());
        m
    }
}

fn max_top(ts: &TimeSeries) -> f64 {
    ts.names
        .iter()
        .zip(&ts.columns)
        .filter(|(n, _)| n.starts_with("top_"))
        .flat_map(|(_, c)| c.iter().copied())
        .fold(0.0, f64::max)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn evolve_guarded<F>(
    kind: ModelKind,
    recipe: &ModelRecipe,
    coupling: f64,
    n_spins: usize,
    detuning: f64,
    levels: &[usize],
    settings: &Settings,
    truncations: &[usize],
    initial: F,
) -> Result<GuardedRun>
where
    F: Fn(&HilbertSpace, &[usize]) -> Result<InitialState>,
{
    evolve_guarded_with(kind, recipe, coupling, n_spins, detuning, levels, settings, truncations, initial, |_| {
        Ok(Vec::new())
    })
}

/// Lindblad run with convergence gates. `truncations` lists the first-boson
/// cutoffs to try in order (other bosons shift by the same amount); the first
/// one whose top-level populations stay below [`GUARD_LIMIT`] is kept.
#[allow(clippy::too_many_arguments)]
pub(crate) fn evolve_guarded_with<F, G>(
    kind: ModelKind,
    recipe: &ModelRecipe,
    coupling: f64,
    n_spins: usize,
    detuning: f64,
    levels: &[usize],
    settings: &Settings,
    truncations: &[usize],
    initial: F,
    extra: G,
) -> Result<GuardedRun>
where
    F: Fn(&HilbertSpace, &[usize]) -> Result<InitialState>,
    G: Fn(&HilbertSpace) -> Result<Vec<(String, OpSum)>>,
{
    let base = *truncations.first().ok_or_else(|| Error::invalid("no truncation to try"))?;
    let names = kind.factor_names(n_spins);
    let mut last_top = 0.0;
    for (step, &cut) in truncations.iter().enumerate() {
        let chosen = recipe.with_extra_levels(cut - base);
        let run = |extra_levels: usize, scale: f64| -> Result<TimeSeries> {
            let r = chosen.with_extra_levels(extra_levels);
            let model = kind.build(&r, coupling, n_spins, detuning)?;
            let mut spec = EvolutionSpec::new(0.0, settings.t_end, settings.n_samples, initial(&model.space, levels)?)
                .with_tolerances(settings.rel_tol * scale, settings.abs_tol * scale);
            for (n, op) in observables(&model.space, &names)?.into_iter().chain(extra(&model.space)?) {
                spec = spec.observe(n, op);
            }
            evolve_lindblad(&model, &spec)
        };
        let (series, gate) = if settings.gates {
            let (s, g) = convergence_gates(run, true)?;
            (s, Some(g))
        } else {
            (run(0, 1.0)?, None)
        };
        last_top = max_top(&series);
        if last_top <= GUARD_LIMIT {
            return Ok(GuardedRun {
                recipe: chosen,
                series,
                gate,
                max_top_population: last_top,
                escalations: step,
            });
        }
    }
    Err(Error::TruncationGuard(format!(
        "{}: top-level population {last_top:e} exceeds {GUARD_LIMIT:e} at truncation {}",
        kind.as_str(),
        truncations.last().expect("non-empty")
    )))
}

// ---------------------------------------------------------------- config

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Lindblad,
    Unitary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub truncations: Vec<usize>,
    #[serde(default = "one")]
    pub n_spins: usize,
    /// Replaces the coupling derived from the parameters.
    pub coupling: Option<f64>,
    /// δ of the MS gate.
    #[serde(default)]
    pub detuning: f64,
    /// Checks the parameters against this figure's reference values.
    pub figure: Option<FigureId>,
    #[serde(default)]
    pub exploratory: bool,
    #[serde(default)]
    pub label: String,
}

fn one() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_end: f64,
    pub n_samples: usize,
    #[serde(default = "default_rel")]
    pub rel_tol: f64,
    #[serde(default = "default_abs")]
    pub abs_tol: f64,
    /// Fock level of every factor.
    pub initial: Vec<usize>,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default = "default_true")]
    pub gates: bool,
}

fn default_rel() -> f64 {
    crate::dynamics::DEFAULT_REL_TOL
}

fn default_abs() -> f64 {
    crate::dynamics::DEFAULT_ABS_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    pub model: ModelConfig,
    pub params: SystemParams,
    pub evolution: EvolutionConfig,
    pub output: OutputConfig,
}

impl CustomConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: CustomConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.params
            .validate()
            .map_err(|e| Error::Config(format!("[params] {e}")))?;
        cfg.check_pinned()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// With a figure named and the exploratory flag off, every pinned
    /// parameter must keep its reference value.
    fn check_pinned(&self) -> Result<()> {
        let Some(fig) = self.model.figure else { return Ok(()) };
        if self.model.exploratory {
            return Ok(());
        }
        let r = squeezing_of(&self.params)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        let (reference, r_set, n_set): (SystemParams, Vec<f64>, Vec<f64>) = match fig {
            FigureId::Fig2a | FigureId::Fig2b => {
                (super::figures::fig2_params(), vec![r], vec![self.params.n_cav])
            }
            FigureId::Fig3 => (fig3_params(FIG3_N_CAV[0], 0.0), FIG3_R.to_vec(), FIG3_N_CAV.to_vec()),
            FigureId::Fig4 => (fig4_params(0.0), FIG4_R.to_vec(), vec![self.params.n_cav]),
            FigureId::Fig5 => {
                let a = fig5_params(NBarReading::Amplitude);
                let i = fig5_params(NBarReading::Intensity);
                (a.clone(), vec![4.0], vec![a.n_cav, i.n_cav])
            }
            FigureId::Fig6 => (fig6_params(), vec![2.0], vec![fig6_params().n_cav]),
        };
        let theirs = super::params_as_map(&reference)?;
        let ours = super::params_as_map(&self.params)?;
        for key in fig.pinned() {
            match *key {
                "r" => {
                    if !r_set.iter().any(|&x| close(x, r)) {
                        return Err(pinned_error(fig, key));
                    }
                }
                "n_cav" => {
                    if !n_set.iter().any(|&x| close(x, self.params.n_cav)) {
                        return Err(pinned_error(fig, key));
                    }
                }
                "n_spins" => {
                    if self.model.n_spins != reference.n_spins {
                        return Err(pinned_error(fig, key));
                    }
                }
                k => {
                    if theirs.get(k) != ours.get(k) {
                        return Err(pinned_error(fig, key));
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds, evolves and tabulates the configured run.
    pub fn run(&self) -> Result<CsvTable> {
        let m = &self.model;
        let e = &self.evolution;
        let recipe = ModelRecipe::new(self.params.clone(), m.truncations.clone()).with_label(m.label.clone());
        let coupling = match m.coupling {
            Some(c) => c,
            None => m.kind.coupling(&self.params)?,
        };
        let names = m.kind.factor_names(m.n_spins);
        let settings = Settings {
            t_end: e.t_end,
            n_samples: e.n_samples,
            rel_tol: e.rel_tol,
            abs_tol: e.abs_tol,
            gates: e.gates,
        };
        let initial = |space: &HilbertSpace, levels: &[usize]| -> Result<InitialState> {
            if levels.len() != space.len() {
                return Err(Error::Config(format!(
                    "[evolution] initial has {} levels, model has {} factors",
                    levels.len(),
                    space.len()
                )));
            }
            Ok(StateVector::basis(space, levels)?.into())
        };
        let (series, meta) = match e.solver {
            SolverKind::Lindblad => {
                let run = evolve_guarded(
                    m.kind,
                    &recipe,
                    coupling,
                    m.n_spins,
                    m.detuning,
                    &e.initial,
                    &settings,
                    &m.truncations[..m.truncations.len().min(1)],
                    initial,
                )?;
                let meta = run.metadata();
                (run.series, meta)
            }
            SolverKind::Unitary => {
                let model = m.kind.build(&recipe, coupling, m.n_spins, m.detuning)?;
                let mut spec = EvolutionSpec::new(0.0, e.t_end, e.n_samples, initial(&model.space, &e.initial)?)
                    .with_tolerances(e.rel_tol, e.abs_tol);
                for (n, op) in observables(&model.space, &names)? {
                    spec = spec.observe(n, op);
                }
                let ts = evolve_unitary(&model, &spec)?;
                let mut meta = recipe.metadata();
                for (k, v) in &ts.metadata {
                    meta.insert(format!("run.{k}"), v.clone());
                }
                (ts, meta)
            }
        };
        let cols = observable_columns(&series);
        let mut names: Vec<&str> = vec!["t"];
        names.extend(cols.iter().map(|(n, _)| n.as_str()));
        let mut data: Vec<&[f64]> = vec![&series.times];
        data.extend(cols.iter().map(|(_, c)| c.as_slice()));
        let mut table = CsvTable::from_columns(&names, &data)?;
        table.metadata = meta;
        let t = &mut table.metadata;
        t.insert("figure".into(), "custom".into());
        t.insert("code_version".into(), CODE_VERSION.into());
        t.insert("model".into(), m.kind.as_str().into());
        t.insert("coupling".into(), super::format_float(coupling));
        t.insert("n_spins".into(), m.n_spins.to_string());
        t.insert("exploratory".into(), m.exploratory.to_string());
        t.insert("rel_tol".into(), e.rel_tol.to_string());
        t.insert("abs_tol".into(), e.abs_tol.to_string());
        t.insert("initial".into(), format!("{:?}", e.initial));
        t.insert("config".into(), toml::to_string(self).unwrap_or_default().replace('\n', "; "));
        Ok(table)
    }
}

fn pinned_error(fig: FigureId, key: &str) -> Error {
    Error::Config(format!(
        "[params] '{key}' differs from the {fig} reference value; set model.exploratory = true to change it"
    ))
}

/// Runs a TOML config and writes its CSV; relative output paths resolve
/// against `out_dir`.
pub fn run_custom(config_path: &Path, out_dir: &Path) -> Result<(CsvTable, PathBuf)> {
    let cfg = CustomConfig::read(config_path)?;
    let table = cfg.run()?;
    let path = if cfg.output.path.is_absolute() {
        cfg.output.path.clone()
    } else {
        out_dir.join(&cfg.output.path)
    };
    table.write(&path)?;
    Ok((table, path))
}
