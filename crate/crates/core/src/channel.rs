//! Link geometry and Rician channel sampling.
//!
//! Three links matter in every slot: UAV→IRS (subscript 1), IRS→BS
//! (subscript 2), and the direct UAV→BS path (subscript 3). The IRSs are
//! uniform linear arrays along the x axis, so line-of-sight responses are
//! classic steering vectors driven by the x-direction cosine of the
//! arrival/departure angle. Small-scale fading is Rician per link.
//!
//! Sampling is deterministic: every (seed, k, n) triple owns a counter-mode
//! substream, so Monte-Carlo estimates are reproducible regardless of
//! evaluation order or thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::scenario::Scenario;
use crate::trajectory::Trajectory;
use crate::Result;

/// Complex channel coefficient type used throughout.
pub type C64 = Complex64;

// ─────────────────────────── geometry helpers ───────────────────────────

/// Squared UAV→IRS distance for a UAV at horizontal position `q`.
#[inline]
pub fn d1_sq(s: &Scenario, k: usize, q: [f64; 2]) -> f64 {
    let dx = q[0] - s.irs_pos[k][0];
    let dy = q[1] - s.irs_pos[k][1];
    let dh = s.uav_height - s.irs_height;
    dx * dx + dy * dy + dh * dh
}

/// Squared UAV→BS distance for a UAV at horizontal position `q`.
#[inline]
pub fn d3_sq(s: &Scenario, q: [f64; 2]) -> f64 {
    let dx = q[0] - s.bs_pos[0];
    let dy = q[1] - s.bs_pos[1];
    let dh = s.uav_height - s.bs_height;
    dx * dx + dy * dy + dh * dh
}

/// Distance-power law β = β0 · (d²)^(−α/2).
#[inline]
pub fn gain_from_dist_sq(ref_gain: f64, dist_sq: f64, alpha: f64) -> f64 {
    ref_gain * dist_sq.powf(-alpha / 2.0)
}

// ─────────────────────────────── LinkState ──────────────────────────────

/// Deterministic per-slot link quantities induced by a trajectory:
/// distances, large-scale gains, steering cosines, and the three
/// element-count/Rician constants used by the closed-form SNR and rate.
///
/// Slot-indexed vectors have length N; `x[n][k]` refers to slot `n`
/// (position `trajectory.points[n+1]`) and IRS `k`.
#[derive(Debug, Clone)]
pub struct LinkState {
    /// UAV→IRS distances `d1[n][k]`.
    pub d1: Vec<Vec<f64>>,
    /// IRS→BS distances `d2[k]` (static).
    pub d2: Vec<f64>,
    /// UAV→BS distances `d3[n]`.
    pub d3: Vec<f64>,
    /// Large-scale gains for the same three links.
    pub beta1: Vec<Vec<f64>>,
    pub beta2: Vec<f64>,
    pub beta3: Vec<f64>,
    /// x-direction cosine of the UAV→IRS arrival angle, `cos_phi1[n][k]`.
    pub cos_phi1: Vec<Vec<f64>>,
    /// x-direction cosine of the IRS→BS departure angle, `cos_phi2[k]`.
    pub cos_phi2: Vec<f64>,
    /// Reflected-path SNR constants per IRS: the expected coherent combining
    /// gain scales as (c1 + c3)·β1, and c2 weighs the cross term with the
    /// direct path.
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
}

impl LinkState {
    #[inline]
    pub fn n_slots(&self) -> usize {
        self.d3.len()
    }

    #[inline]
    pub fn k_irs(&self) -> usize {
        self.d2.len()
    }
}

/// Computes the per-slot link state for a trajectory. The trajectory must
/// already satisfy the scenario's mobility invariants.
pub fn link_state(s: &Scenario, traj: &Trajectory) -> Result<LinkState> {
    traj.validate(s, 1e-6)?;
    let n = s.n_slots();
    let k_irs = s.k_irs();
    let m = s.m_elements as f64;
    let (k1, k2, k3) = (s.k1, s.k2, s.k3);

    let mut d2 = vec![0.0; k_irs];
    let mut beta2 = vec![0.0; k_irs];
    let mut cos_phi2 = vec![0.0; k_irs];
    let mut c1 = vec![0.0; k_irs];
    let mut c2 = vec![0.0; k_irs];
    let mut c3 = vec![0.0; k_irs];
    for k in 0..k_irs {
        let dx = s.bs_pos[0] - s.irs_pos[k][0];
        let dy = s.bs_pos[1] - s.irs_pos[k][1];
        let dh = s.bs_height - s.irs_height;
        d2[k] = (dx * dx + dy * dy + dh * dh).sqrt();
        beta2[k] = gain_from_dist_sq(s.ref_gain, d2[k] * d2[k], s.alpha2);
        cos_phi2[k] = dx / d2[k];
        let kk = (k1 + 1.0) * (k2 + 1.0);
        c1[k] = k1 * k2 * m * m * beta2[k] / kk;
        c2[k] = 2.0 * m * (k1 * k2 * k3 * beta2[k] / (kk * (k3 + 1.0))).sqrt();
        c3[k] = (1.0 + k1 + k2) * m * beta2[k] / kk;
    }

    let mut d1 = vec![vec![0.0; k_irs]; n];
    let mut beta1 = vec![vec![0.0; k_irs]; n];
    let mut cos_phi1 = vec![vec![0.0; k_irs]; n];
    let mut d3 = vec![0.0; n];
    let mut beta3 = vec![0.0; n];
    for slot in 0..n {
        let q = traj.points[slot + 1];
        for k in 0..k_irs {
            let dsq = d1_sq(s, k, q);
            d1[slot][k] = dsq.sqrt();
            beta1[slot][k] = gain_from_dist_sq(s.ref_gain, dsq, s.alpha1);
            cos_phi1[slot][k] = (s.irs_pos[k][0] - q[0]) / d1[slot][k];
        }
        let dsq = d3_sq(s, q);
        d3[slot] = dsq.sqrt();
        beta3[slot] = gain_from_dist_sq(s.ref_gain, dsq, s.alpha3);
    }

    Ok(LinkState {
        d1,
        d2,
        d3,
        beta1,
        beta2,
        beta3,
        cos_phi1,
        cos_phi2,
        c1,
        c2,
        c3,
    })
}

// ─────────────────────────── steering vectors ───────────────────────────

/// Line-of-sight response of an M-element ULA: element `m` (1-based) is
/// `exp(−j2π·dist/λ) · exp(−j2π·d·(m−1)·cos_phi/λ)`. Unit modulus per
/// element.
pub fn los_steering(
    m_count: usize,
    cos_phi: f64,
    dist: f64,
    lambda: f64,
    spacing: f64,
) -> Result<Vec<C64>> {
    if m_count == 0 {
        return Err(Error::InvalidInput(
            "steering vector needs m_count >= 1".into(),
        ));
    }
    if !(cos_phi.abs() <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "direction cosine {cos_phi} outside [-1, 1]"
        )));
    }
    if !(dist >= 0.0) || !(lambda > 0.0) || !(spacing > 0.0) {
        return Err(Error::InvalidInput(
            "distance must be >= 0, wavelength and spacing positive".into(),
        ));
    }
    let two_pi = std::f64::consts::TAU;
    let base = C64::from_polar(1.0, -two_pi * dist / lambda);
    let step = -two_pi * spacing * cos_phi / lambda;
    Ok((0..m_count)
        .map(|m| base * C64::from_polar(1.0, step * m as f64))
        .collect())
}

// ─────────────────────────── random substreams ──────────────────────────

/// Domain separators so different consumers of the same master seed never
/// overlap streams.
pub mod domain {
    /// Fading draws used by channel Monte-Carlo estimates.
    pub const CHANNEL: u64 = 1;
    /// OOK symbol/noise draws used by the detector Monte-Carlo.
    pub const DETECTOR: u64 = 2;
    /// Randomized problem instances in self-check suites.
    pub const VERIFY: u64 = 3;
}

#[inline]
fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    *state = z ^ (z >> 31);
}

/// Deterministic per-(domain, k, n) random stream derived from a master
/// seed. Streams for distinct tags are independent for all practical
/// purposes, and the mapping is stable across platforms and crate versions
/// (the seed expansion is done here, not by the RNG crate).
pub fn substream(seed: u64, dom: u64, k: u64, n: u64) -> ChaCha12Rng {
    let mut bytes = [0u8; 32];
    let mut state = seed ^ 0xA076_1D64_78BD_642F;
    for (i, tag) in [dom, k, n, 0x7061_7468].iter().enumerate() {
        state ^= tag
            .wrapping_mul(0xE703_7ED1_A0B4_28DB)
            .rotate_left(17 * i as u32 + 1);
        splitmix64(&mut state);
        bytes[i * 8..(i + 1) * 8].copy_from_slice(&state.to_le_bytes());
    }
    ChaCha12Rng::from_seed(bytes)
}

// ────────────────────────────── sampling ────────────────────────────────

/// One realization of the three fading channels in a slot.
#[derive(Debug, Clone)]
pub struct ChannelDraw {
    /// UAV→IRS vector channel (length M).
    pub h1: Vec<C64>,
    /// IRS→BS vector channel (length M).
    pub h2: Vec<C64>,
    /// Direct UAV→BS scalar channel.
    pub h3: C64,
}

/// Standard complex normal CN(0, 1): independent real/imag parts of
/// variance 1/2.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws the slot-`n` channels toward IRS `k` from `rng`:
/// `h = sqrt(β)·(sqrt(K/(K+1))·h_los + sqrt(1/(K+1))·h_nlos)` per link,
/// with CN(0,1) i.i.d. non-LoS entries. Use [`substream`] to build `rng`
/// when reproducibility across call orders matters.
pub fn sample_channels<R: Rng + ?Sized>(
    s: &Scenario,
    ls: &LinkState,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<ChannelDraw> {
    if n >= ls.n_slots() || k >= ls.k_irs() {
        return Err(Error::DimensionMismatch(format!(
            "slot {n} / IRS {k} outside link state ({} slots, {} IRSs)",
            ls.n_slots(),
            ls.k_irs()
        )));
    }
    let m = s.m_elements;
    let spacing = s.element_spacing();

    let mix = |k_fac: f64, beta: f64, los: Vec<C64>, rng: &mut R| -> Vec<C64> {
        let (w_los, w_nlos) = rician_weights(k_fac, beta);
        los.into_iter()
            .map(|e| w_los * e + w_nlos * complex_normal(rng))
            .collect()
    };

    let los1 = los_steering(m, ls.cos_phi1[n][k], ls.d1[n][k], s.lambda, spacing)?;
    let h1 = mix(s.k1, ls.beta1[n][k], los1, rng);
    let los2 = los_steering(m, ls.cos_phi2[k], ls.d2[k], s.lambda, spacing)?;
    let h2 = mix(s.k2, ls.beta2[k], los2, rng);

    let (w_los, w_nlos) = rician_weights(s.k3, ls.beta3[n]);
    let los3 = C64::from_polar(1.0, -std::f64::consts::TAU * ls.d3[n] / s.lambda);
    let h3 = w_los * los3 + w_nlos * complex_normal(rng);

    Ok(ChannelDraw { h1, h2, h3 })
}

/// (LoS, non-LoS) amplitude weights of a Rician link with factor K and
/// large-scale gain β.
#[inline]
pub fn rician_weights(k_factor: f64, beta: f64) -> (f64, f64) {
    let s = beta.sqrt();
    (
        s * (k_factor / (k_factor + 1.0)).sqrt(),
        s * (1.0 / (k_factor + 1.0)).sqrt(),
    )
}

// ──────────────────────────────── tests ─────────────────────────────────
