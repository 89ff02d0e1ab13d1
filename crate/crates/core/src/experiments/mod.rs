//! Figure reproduction harness: pinned parameter sets, oracle gating, and CSV output.
//!
//! Each `compute_*` function is pure given a [`Context`] (oracle digest and GHZ
//! calibration); [`run_figure`] runs the gating oracles first and writes the
//! tables only when they all pass.

mod csv;
mod custom;
mod figures;

pub use csv::{format_float, CsvTable};
pub use custom::{
    observable_columns, observables, run_custom, CustomConfig, EvolutionConfig, GuardedRun, ModelConfig, ModelKind, OutputConfig,
    SolverKind, GUARD_LIMIT,
};
pub use figures::*;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DEFAULT_ABS_TOL, DEFAULT_REL_TOL};
use crate::error::{Error, Result};
use crate::frames::SystemParams;
use crate::oracles::{self, GhzCalibration, Suite};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [
        FigureId::Fig2a,
        FigureId::Fig2b,
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }

    /// Oracles that must pass before the figure is written.
    pub fn gating_oracles(self) -> &'static [&'static str] {
        match self {
            FigureId::Fig2a | FigureId::Fig2b => &[oracles::SUPERMODES],
            FigureId::Fig3 => &[oracles::RWA],
            FigureId::Fig4 => &[oracles::SUPERMODES, oracles::RWA],
            FigureId::Fig5 => &[oracles::MAGNUS, oracles::GHZ_PHASE],
            FigureId::Fig6 => &[oracles::HP_VS_EXACT],
        }
    }

    /// Keys fixed by the figure. Changing them requires the exploratory flag.
    pub fn pinned(self) -> &'static [&'static str] {
        match self {
            FigureId::Fig2a | FigureId::Fig2b => &["g", "g0", "j", "lambda_ref", "gamma", "gamma_m_s"],
            FigureId::Fig3 => &["g", "g0", "j", "gamma", "gamma_m_s", "r", "n_cav"],
            FigureId::Fig4 => &["g", "g0", "j", "gamma", "gamma_m_s", "kappa", "r"],
            FigureId::Fig5 => &["g", "g0", "j", "gamma", "gamma_m_s", "r", "n_cav", "n_spins"],
            FigureId::Fig6 => &["g", "g0", "j", "gamma", "gamma_m_s", "r", "n_cav"],
        }
    }

    /// Harness knobs accepted as overrides besides parameter fields.
    fn knobs(self) -> &'static [&'static str] {
        match self {
            FigureId::Fig2a | FigureId::Fig2b => &[],
            FigureId::Fig3 | FigureId::Fig4 => &["r", "n_cav", "t_end"],
            FigureId::Fig5 => &["r", "n_cav", "n_spins", "truncation"],
            FigureId::Fig6 => &["r", "n_cav", "n_spins", "t_end", "truncation"],
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // both panels share their parameters
        if s == "fig2" {
            return Ok(FigureId::Fig2a);
        }
        FigureId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure '{s}'")))
    }
}

/// How the Fig. 5 n̄_cav ∼ 10⁴ is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NBarReading {
    /// field amplitude n̄ = 10⁴, so n_cav = 10⁸
    #[default]
    Amplitude,
    /// photon number n_cav = 10⁴, so n̄ = 100
    Intensity,
}

impl FromStr for NBarReading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(NBarReading::Amplitude),
            "intensity" => Ok(NBarReading::Intensity),
            _ => Err(Error::Config(format!("unknown n-bar reading '{s}' (amplitude | intensity)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FigureSpec {
    pub figure: FigureId,
    pub overrides: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
    /// Points per axis (Fig. 2) or time samples (dynamics figures).
    pub grid: Option<usize>,
    pub exploratory: bool,
    pub reading: NBarReading,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl FigureSpec {
    pub fn new(figure: FigureId) -> Self {
        FigureSpec {
            figure,
            overrides: BTreeMap::new(),
            output_dir: PathBuf::from("out"),
            grid: None,
            exploratory: false,
            reading: NBarReading::Amplitude,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
        }
    }

    pub fn with_override(mut self, key: &str, value: f64) -> Self {
        self.overrides.insert(key.to_string(), value);
        self
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        self
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid = Some(n);
        self
    }

    pub fn with_reading(mut self, reading: NBarReading) -> Self {
        self.reading = reading;
        self
    }

    pub fn exploratory(mut self, on: bool) -> Self {
        self.exploratory = on;
        self
    }

    pub fn knob(&self, key: &str) -> Option<f64> {
        self.overrides.get(key).copied()
    }

    /// Rejects unknown keys, and pinned keys that change a reference value while
    /// the exploratory flag is off. `pinned_values` holds the reference values of
    /// knobs that are not parameter fields.
    pub fn validate(&self, base: &SystemParams, pinned_values: &BTreeMap<&str, Vec<f64>>) -> Result<()> {
        let fields = params_as_map(base)?;
        for (key, &value) in &self.overrides {
            let knob = self.figure.knobs().contains(&key.as_str());
            let current = if knob {
                pinned_values.get(key.as_str()).cloned()
            } else {
                match fields.get(key) {
                    Some(v) => v.as_f64().map(|x| vec![x]),
                    None => return Err(Error::Config(format!("{}: unknown override '{key}'", self.figure))),
                }
            };
            if !value.is_finite() {
                return Err(Error::Config(format!("{}: override '{key}' must be finite", self.figure)));
            }
            let pinned = self.figure.pinned().contains(&key.as_str());
            let unchanged = current.is_some_and(|c| c.contains(&value));
            if pinned && !unchanged && !self.exploratory {
                return Err(Error::Config(format!(
                    "{}: '{key}' is pinned by the figure; pass the exploratory flag to change it",
                    self.figure
                )));
            }
        }
        Ok(())
    }

    /// Applies the parameter-field overrides to `p`.
    pub fn apply(&self, p: &SystemParams) -> Result<SystemParams> {
        let mut fields = params_as_map(p)?;
        for (key, &value) in &self.overrides {
            if self.figure.knobs().contains(&key.as_str()) {
                continue;
            }
            let slot = fields
                .get_mut(key)
                .ok_or_else(|| Error::Config(format!("{}: unknown override '{key}'", self.figure)))?;
            *slot = if slot.is_u64() {
                serde_json::Value::from(value as u64)
            } else {
                serde_json::Value::from(value)
            };
        }
        let out: SystemParams = serde_json::from_value(serde_json::Value::Object(fields))
            .map_err(|e| Error::Config(format!("{}: {e}", self.figure)))?;
        out.validate().map_err(|e| Error::Config(format!("{}: {e}", self.figure)))?;
        Ok(out)
    }

    fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("exploratory".into(), self.exploratory.to_string());
        let overrides: Vec<String> = self.overrides.iter().map(|(k, v)| format!("{k}={v}")).collect();
        m.insert("overrides".into(), overrides.join(" "));
        m.insert("rel_tol".into(), self.rel_tol.to_string());
        m.insert("abs_tol".into(), self.abs_tol.to_string());
        m
    }
}

fn params_as_map(p: &SystemParams) -> Result<serde_json::Map<String, serde_json::Value>> {
    match serde_json::to_value(p) {
        Ok(serde_json::Value::Object(m)) => Ok(m),
        _ => Err(Error::Config("parameters do not serialise to a map".into())),
    }
}

/// Outcome of the gating oracles that a figure run depends on.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub digest: String,
    pub calibration: Option<GhzCalibration>,
}

impl Context {
    pub fn from_suite(suite: &Suite) -> Self {
        Context {
            digest: suite.reports.digest.clone(),
            calibration: suite.calibration.clone(),
        }
    }
}

/// Runs the figure's gating oracles; any failure refuses the figure.
pub fn gate(figure: FigureId) -> Result<Context> {
    let suite = oracles::run_suite(figure.gating_oracles());
    if !suite.reports.passed() {
        return Err(Error::OracleFailure(format!(
            "{figure} refused: gating oracle(s) failed: {}",
            suite.reports.failures().join(", ")
        )));
    }
    Ok(Context::from_suite(&suite))
}

#[derive(Clone, Debug)]
pub struct FigureOutput {
    pub figure: FigureId,
    /// File name and table, in output order.
    pub tables: Vec<(String, CsvTable)>,
}

impl FigureOutput {
    pub fn table(&self, file: &str) -> Option<&CsvTable> {
        self.tables.iter().find(|(f, _)| f == file).map(|(_, t)| t)
    }

    /// False when any table was flagged non-converged.
    pub fn converged(&self) -> bool {
        self.tables
            .iter()
            .all(|(_, t)| t.metadata.get("converged").is_none_or(|v| v == "true"))
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::with_capacity(self.tables.len());
        for (name, t) in &self.tables {
            let p = dir.join(name);
            t.write(&p)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Computes a figure under an already-passed oracle context, without writing.
pub fn compute_figure(spec: &FigureSpec, ctx: &Context) -> Result<FigureOutput> {
    match spec.figure {
        FigureId::Fig2a | FigureId::Fig2b => compute_fig2(spec, ctx),
        FigureId::Fig3 => compute_fig3(spec, ctx),
        FigureId::Fig4 => compute_fig4(spec, ctx),
        FigureId::Fig5 => compute_fig5(spec, ctx),
        FigureId::Fig6 => compute_fig6(spec, ctx),
    }
}

/// Gating oracles, then the figure, then its CSV files under `spec.output_dir`.
pub fn run_figure(spec: &FigureSpec) -> Result<(FigureOutput, Vec<PathBuf>)> {
    let ctx = gate(spec.figure)?;
    let out = compute_figure(spec, &ctx)?;
    let paths = out.write(&spec.output_dir)?;
    Ok((out, paths))
}

/// Common header lines for every table of a figure.
pub(crate) fn header(figure: FigureId, spec: &FigureSpec, ctx: &Context) -> BTreeMap<String, String> {
    let mut m = spec.metadata();
    m.insert("figure".into(), figure.to_string());
    m.insert("code_version".into(), CODE_VERSION.into());
    m.insert("oracle_digest".into(), ctx.digest.clone());
    m
}

/// Order-preserving parallel map; the first error wins.
pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    items.par_iter().map(f).collect()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Time of the first local maximum, refined by a parabola through the three
/// samples around it.
pub fn first_maximum(times: &[f64], values: &[f64]) -> Option<f64> {
    let i = (1..values.len().saturating_sub(1)).find(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])?;
    let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
    let h = times[i + 1] - times[i];
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom != 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
    Some(times[i] + shift * h)
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for i in 0..values.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}
