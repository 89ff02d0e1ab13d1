use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which rate the dimensionless frequencies are measured in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseRate {
    Gamma,
    G,
}

/// Unit convention: all frequencies are multiples of one base rate, whose
/// value divided by 2π in hertz is optionally known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub base: BaseRate,
    pub base_over_2pi_hz: Option<f64>,
}

impl Units {
    pub fn gamma(hz: Option<f64>) -> Self {
        Units {
            base: BaseRate::Gamma,
            base_over_2pi_hz: hz,
        }
    }

    pub fn g(hz: Option<f64>) -> Self {
        Units {
            base: BaseRate::G,
            base_over_2pi_hz: hz,
        }
    }

    /// Frequency (dimensionless multiple of the base) as ν = ω/2π in Hz.
    pub fn to_hz(&self, x: f64) -> Option<f64> {
        self.base_over_2pi_hz.map(|b| x * b)
    }

    /// Dimensionless time (in units of 1/base) in seconds.
    pub fn to_seconds(&self, t: f64) -> Option<f64> {
        self.base_over_2pi_hz
            .map(|b| t / (2.0 * std::f64::consts::PI * b))
    }
}

/// Symbol set of the hybrid system. All angular frequencies and rates share
/// the unit declared in `units`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub units: Units,
    /// spin-cavity coupling
    pub g: f64,
    /// single-photon optomechanical coupling
    pub g0: f64,
    /// cavity-cavity hopping
    pub j: f64,
    /// resonator-resonator hopping
    pub j_m: f64,
    pub omega_m: f64,
    /// pump frequency ω_p
    pub omega_p: f64,
    /// parametric drive amplitude Ω_p
    pub pump_amplitude: f64,
    /// Δ = ω_A − ω_c
    pub delta: f64,
    /// Δ_m = ω_m − ω_p
    pub delta_m: f64,
    pub omega_c: f64,
    pub omega_a: f64,
    /// mean intracavity photon number; the field amplitude is √n_cav
    pub n_cav: f64,
    pub gamma: f64,
    pub gamma_m_s: f64,
    pub kappa: f64,
    pub lambda_ref: f64,
    pub n_spins: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            units: Units::gamma(None),
            g: 0.0,
            g0: 0.0,
            j: 1.0,
            j_m: 0.0,
            omega_m: 0.0,
            omega_p: 0.0,
            pump_amplitude: 0.0,
            delta: 0.0,
            delta_m: 0.0,
            omega_c: 0.0,
            omega_a: 0.0,
            n_cav: 1.0,
            gamma: 0.0,
            gamma_m_s: 0.0,
            kappa: 0.0,
            lambda_ref: 0.0,
            n_spins: 1,
        }
    }
}

impl SystemParams {
    /// n̄_cav = √n_cav
    pub fn n_bar_cav(&self) -> f64 {
        self.n_cav.sqrt()
    }

    /// Sets n_cav from a field amplitude.
    pub fn with_n_bar_cav(mut self, n_bar: f64) -> Self {
        self.n_cav = n_bar * n_bar;
        self
    }

    /// Rejects non-finite values and negative rates, naming the field.
    pub fn validate(&self) -> Result<()> {
        let fields: [(&str, f64); 16] = [
            ("g", self.g),
            ("g0", self.g0),
            ("j", self.j),
            ("j_m", self.j_m),
            ("omega_m", self.omega_m),
            ("omega_p", self.omega_p),
            ("pump_amplitude", self.pump_amplitude),
            ("delta", self.delta),
            ("delta_m", self.delta_m),
            ("omega_c", self.omega_c),
            ("omega_a", self.omega_a),
            ("n_cav", self.n_cav),
            ("gamma", self.gamma),
            ("gamma_m_s", self.gamma_m_s),
            ("kappa", self.kappa),
            ("lambda_ref", self.lambda_ref),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("gamma_m_s", self.gamma_m_s),
            ("kappa", self.kappa),
            ("n_cav", self.n_cav),
            ("lambda_ref", self.lambda_ref),
            ("g", self.g),
            ("g0", self.g0),
            ("j_m", self.j_m),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.j <= 0.0 {
            return Err(Error::invalid(format!("j must be positive, got {}", self.j)));
        }
        Ok(())
    }
}

/// Bare mechanical bath parameters; Γ_m = n_th κ_m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationParams {
    pub n_th: f64,
    pub kappa_m: f64,
    pub gamma_m_product: f64,
}

impl DissipationParams {
    pub fn new(n_th: f64, kappa_m: f64) -> Result<Self> {
        if n_th < 0.0 || kappa_m < 0.0 {
            return Err(Error::invalid("n_th and kappa_m must be non-negative"));
        }
        Ok(DissipationParams {
            n_th,
            kappa_m,
            gamma_m_product: n_th * kappa_m,
        })
    }
}
