//! Reflection phase configuration and the closed forms it induces.
//!
//! Aligning every cascaded UAV→IRS→BS element path with the direct UAV→BS
//! path maximizes the expected boosted SNR. The aligning phase of element
//! `m` (1-based) of IRS `k` in slot `n` is
//!
//! `θ = −(2π/λ)·[ d·(cos φ2 − cos φ1)·(m−1) − (d1 − d2) + d3 ]   (mod 2π)`
//!
//! where `d` is the element spacing. Note that `d` multiplies only the
//! element-index ramp: the distance terms carry their own path lengths.
//! With these phases all M cascaded LoS summands collapse onto the phase of
//! the direct path, which yields simple closed forms for the mean combined
//! channel and the expected rate/SNR.

use num_complex::Complex64;

use crate::channel::{los_steering, LinkState};
use crate::physical_layer::combined_channel;
use crate::scenario::Scenario;
use crate::Result;

/// Per-slot, per-IRS element phases in `[0, 2π)`: `theta[n][k][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    pub theta: Vec<Vec<Vec<f64>>>,
}

impl PhaseSchedule {
    #[inline]
    pub fn n_slots(&self) -> usize {
        self.theta.len()
    }
}

/// Aligning phase of a single element (`m_index` 0-based).
#[inline]
pub fn phase_for_element(
    lambda: f64,
    spacing: f64,
    cos_phi1: f64,
    cos_phi2: f64,
    d1: f64,
    d2: f64,
    d3: f64,
    m_index: usize,
) -> f64 {
    let tau = std::f64::consts::TAU;
    let raw = -(tau / lambda) * (spacing * (cos_phi2 - cos_phi1) * m_index as f64 - (d1 - d2) + d3);
    raw.rem_euclid(tau)
}

/// SNR-maximizing phases for every (slot, IRS, element).
pub fn optimal_phases(s: &Scenario, ls: &LinkState) -> Result<PhaseSchedule> {
    let spacing = s.element_spacing();
    let theta = (0..ls.n_slots())
        .map(|n| {
            (0..ls.k_irs())
                .map(|k| {
                    (0..s.m_elements)
                        .map(|m| {
                            phase_for_element(
                                s.lambda,
                                spacing,
                                ls.cos_phi1[n][k],
                                ls.cos_phi2[k],
                                ls.d1[n][k],
                                ls.d2[k],
                                ls.d3[n],
                                m,
                            )
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(PhaseSchedule { theta })
}

/// Coherent combining factor `h2_losᴴ·diag(e^{jθ})·h1_los` on unit-modulus
/// steering vectors. Its magnitude is at most M, with equality exactly when
/// `theta` aligns all element paths.
pub fn combining_factor(
    s: &Scenario,
    ls: &LinkState,
    n: usize,
    k: usize,
    theta: &[f64],
) -> Result<Complex64> {
    let spacing = s.element_spacing();
    let a1 = los_steering(
        s.m_elements,
        ls.cos_phi1[n][k],
        ls.d1[n][k],
        s.lambda,
        spacing,
    )?;
    let a2 = los_steering(s.m_elements, ls.cos_phi2[k], ls.d2[k], s.lambda, spacing)?;
    combined_channel(&a1, &a2, theta)
}

/// Squared magnitude of the mean combined (direct + reflected) channel for
/// arbitrary element phases `theta`.
pub fn x0_sq_for_phases(
    s: &Scenario,
    ls: &LinkState,
    n: usize,
    k: usize,
    theta: &[f64],
) -> Result<f64> {
    let combo = combining_factor(s, ls, n, k, theta)?;
    let w12 = (s.k1 * s.k2 * ls.beta1[n][k] * ls.beta2[k] / ((s.k1 + 1.0) * (s.k2 + 1.0))).sqrt();
    let w3 = (s.k3 * ls.beta3[n] / (s.k3 + 1.0)).sqrt();
    let direct = Complex64::from_polar(w3, -std::f64::consts::TAU * ls.d3[n] / s.lambda);
    Ok((direct + w12 * combo).norm_sqr())
}

/// Squared magnitude of the mean *reflected* channel for arbitrary phases
/// (no direct-path term).
pub fn xbar0_sq_for_phases(
    s: &Scenario,
    ls: &LinkState,
    n: usize,
    k: usize,
    theta: &[f64],
) -> Result<f64> {
    let combo = combining_factor(s, ls, n, k, theta)?;
    let w12_sq = s.k1 * s.k2 * ls.beta1[n][k] * ls.beta2[k] / ((s.k1 + 1.0) * (s.k2 + 1.0));
    Ok(w12_sq * combo.norm_sqr())
}

/// Closed form of [`x0_sq_for_phases`] at the aligning phases:
/// `K3β3/(K3+1) + K1K2M²β1β2/((K1+1)(K2+1)) + 2M·sqrt(K1K2K3·β1β2β3/((K1+1)(K2+1)(K3+1)))`.
pub fn x0_sq_opt(s: &Scenario, ls: &LinkState, n: usize, k: usize) -> f64 {
    let m = s.m_elements as f64;
    let (b1, b2, b3) = (ls.beta1[n][k], ls.beta2[k], ls.beta3[n]);
    let kk = (s.k1 + 1.0) * (s.k2 + 1.0);
    s.k3 * b3 / (s.k3 + 1.0)
        + s.k1 * s.k2 * m * m * b1 * b2 / kk
        + 2.0 * m * (s.k1 * s.k2 * s.k3 * b1 * b2 * b3 / (kk * (s.k3 + 1.0))).sqrt()
}

/// Closed form of [`xbar0_sq_for_phases`] at the aligning phases: `c1·β1`.
pub fn xbar0_sq_opt(_s: &Scenario, ls: &LinkState, n: usize, k: usize) -> f64 {
    ls.c1[k] * ls.beta1[n][k]
}

/// Expected primary rate of slot `n` when IRS `k` reflects with aligned
/// phases (Jensen form):
/// `(1−ρ)·log2(1+Pβ3/σ²) + ρ·log2(1 + P·((c1+c3)β1 + c2·√(β1β3) + β3)/σ²)`.
pub fn rate_uk(s: &Scenario, ls: &LinkState, n: usize, k: usize) -> f64 {
    let (b1, b3) = (ls.beta1[n][k], ls.beta3[n]);
    let boosted = (ls.c1[k] + ls.c3[k]) * b1 + ls.c2[k] * (b1 * b3).sqrt() + b3;
    let snr_on = s.tx_power_w * boosted / s.noise_power_w;
    let snr_off = s.tx_power_w * b3 / s.noise_power_w;
    (1.0 - s.rho) * (1.0 + snr_off).log2() + s.rho * (1.0 + snr_on).log2()
}

/// Expected backscatter SNR for arbitrary element phases: the aligned case
/// collapses to `(c1 + c3)·β1/σ²`.
pub fn gamma_for_phases(
    s: &Scenario,
    ls: &LinkState,
    n: usize,
    k: usize,
    theta: &[f64],
) -> Result<f64> {
    let xbar = xbar0_sq_for_phases(s, ls, n, k, theta)?;
    Ok((xbar + ls.c3[k] * ls.beta1[n][k]) / s.noise_power_w)
}

// ──────────────────────────────── tests ─────────────────────────────────
