//! Squeezed-frame and supermode transformations, and closed-form couplings.

mod params;

pub use params::{BaseRate, DissipationParams, SystemParams, Units};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::qops::{local, OpSum, Operator};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub alpha: f64,
    pub r: f64,
    pub delta_m_s: f64,
    /// g₀e^r, the amplitude of the oscillating squeezed-frame coupling
    pub g0_s_amplitude: f64,
    pub jm_s: f64,
}

/// Squeezed-frame coefficients for a parametric drive Ω_p on a resonator
/// detuned by Δ_m. `g0` and `j_m` are the bare couplings to rescale.
pub fn squeeze_params(delta_m: f64, pump_amplitude: f64, g0: f64, j_m: f64) -> Result<SqueezeParams> {
    if !(delta_m > 0.0) {
        return Err(Error::invalid(format!("delta_m must be positive, got {delta_m}")));
    }
    if pump_amplitude.abs() >= delta_m {
        return Err(Error::UnstableDrive {
            omega_p: pump_amplitude.abs(),
            delta_m,
        });
    }
    let alpha = pump_amplitude / delta_m;
    let r = 0.5 * alpha.atanh();
    Ok(SqueezeParams {
        alpha,
        r,
        delta_m_s: delta_m * (1.0 - alpha * alpha).sqrt(),
        g0_s_amplitude: g0 * r.exp(),
        jm_s: j_m * (2.0 * r).exp() / 2.0,
    })
}

/// Drive amplitude that produces squeezing `r` at detuning Δ_m.
pub fn pump_for_squeezing(delta_m: f64, r: f64) -> f64 {
    delta_m * (2.0 * r).tanh()
}

/// Ŝ(r) = exp[r(b̂² − b̂†²)/2] on one boson factor, built from the truncated generator.
pub fn squeeze_unitary_local(n: usize, r: f64) -> CMatrix {
    let a = local::annihilation(n);
    let a2 = &a * &a;
    let gen = (&a2 - a2.adjoint()) * C64::new(0.5, 0.0);
    // exp(rG) = exp(−i·(iG)·r) with iG Hermitian
    let h = gen * C64::new(0.0, 1.0);
    linalg::expm_hermitian(&h, r)
}

/// Ŝ† op Ŝ for the squeeze acting on `factor`.
pub fn squeeze_operator_transform(op: &Operator, factor: usize, r: f64) -> Result<Operator> {
    let n = op.space().expect_boson(factor)?;
    let s = OpSum::local(op.space(), factor, squeeze_unitary_local(n, r))?.to_operator();
    s.adjoint().matmul(op)?.matmul(&s)
}

/// Orthogonal matrix taking (b̂_L^S, b̂_T^S, b̂_R^S) to (b̂_+, b̂_−, b̂_0).
pub fn mechanical_supermode_matrix() -> Matrix3<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Matrix3::new(
        0.5, h, 0.5, //
        0.5, -h, 0.5, //
        h, 0.0, -h,
    )
}

/// Single-excitation matrix of the three coupled resonators over (L, T, R).
pub fn mechanical_single_excitation(delta: f64, coupling: f64) -> Matrix3<f64> {
    Matrix3::new(
        delta, coupling, 0.0, //
        coupling, delta, coupling, //
        0.0, coupling, delta,
    )
}

/// Orthogonal matrix taking (â_L, â_T, â_R) to (â_0, â_+, â_−) for a scalar Θ,
/// together with E = √(2J² + Θ²).
pub fn optical_supermode_matrix(theta: f64, j: f64) -> Result<(Matrix3<f64>, f64)> {
    if !(j > 0.0) {
        return Err(Error::invalid(format!("J must be positive, got {j}")));
    }
    let e = (2.0 * j * j + theta * theta).sqrt();
    let r1 = j / e;
    let r2 = theta / e;
    let m = Matrix3::new(
        r1, r2, -r1, //
        (e - theta) / (2.0 * e), r1, (e + theta) / (2.0 * e), //
        (e + theta) / (2.0 * e), -r1, (e - theta) / (2.0 * e),
    );
    Ok((m, e))
}

/// Θ(â_R†â_R − â_L†â_L) + J â_T†(â_L + â_R) + h.c. on one photon, basis (L, T, R).
pub fn optical_single_excitation(theta: f64, j: f64) -> Matrix3<f64> {
    Matrix3::new(
        -theta, j, 0.0, //
        j, 0.0, j, //
        0.0, j, theta,
    )
}

/// Λ = n̄_cav g g₀ e^r / (4J)
pub fn lambda_enhanced(p: &SystemParams, r: f64) -> f64 {
    p.n_bar_cav() * lambda_tripartite(p, r)
}

/// Λ₀ = g g₀ e^r / (4J)
pub fn lambda_tripartite(p: &SystemParams, r: f64) -> f64 {
    p.g * p.g0 * r.exp() / (4.0 * p.j)
}

/// C = Λ² / (Γ_m^S γ)
pub fn cooperativity(lambda: f64, gamma_m_s: f64, gamma: f64) -> Result<f64> {
    if !(gamma_m_s > 0.0) || !(gamma > 0.0) {
        return Err(Error::invalid(format!(
            "cooperativity needs positive rates, got Γ = {gamma_m_s}, γ = {gamma}"
        )));
    }
    Ok(lambda * lambda / (gamma_m_s * gamma))
}
