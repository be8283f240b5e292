//! Seeded Monte-Carlo oracles for the closed forms.
//!
//! Four suites, each checking one analytic layer against a brute-force
//! estimate on randomized geometries:
//!
//! 1. phase alignment — the aligning phases reach the coherent-combining
//!    cap `|combining| = M`, and the induced mean-channel power matches
//!    its closed form;
//! 2. jensen gap — the expected exact primary rate never exceeds the
//!    moment-based rate bound (up to sampling error);
//! 3. energy detector — the Gaussian-approximation bit error rate matches
//!    a symbol-level simulation of the detector;
//! 4. reflected moments — the second moments of the composite channel
//!    match the mean-power closed forms plus the scatter power, for
//!    arbitrary (not just aligned) element phases.
//!
//! Every random quantity is drawn from a substream of the scenario seed,
//! so the whole report is byte-stable for a fixed seed and flag set.

use std::f64::consts::TAU;

use rand::Rng;

use uav_irs_core::channel::{domain, link_state, sample_channels, substream, LinkState};
use uav_irs_core::closed_forms::{
    combining_factor, optimal_phases, rate_uk, x0_sq_for_phases, x0_sq_opt, xbar0_sq_for_phases,
};
use uav_irs_core::physical_layer::{
    ber_closed_form, ber_monte_carlo, combined_channel, primary_rate_exact,
};
use uav_irs_core::scenario::fmt_float;
use uav_irs_core::trajectory::Trajectory;
use uav_irs_core::{Result, Scenario};

/// Runs all suites and renders the report. The boolean is the overall
/// verdict; individual suite verdicts are in the report text.
pub fn verify_report(s: &Scenario, quick: bool) -> Result<(String, bool)> {
    let mut lines = Vec::new();
    let mut passed = 0usize;

    let suites: [(&str, bool); 4] = [
        (
            "phase alignment",
            phase_suite(s, if quick { 10 } else { 50 }, &mut lines)?,
        ),
        (
            "jensen gap",
            jensen_suite(
                s,
                if quick { 5 } else { 20 },
                if quick { 2_000 } else { 10_000 },
                &mut lines,
            )?,
        ),
        (
            "energy detector",
            ber_suite(s, if quick { 10_000 } else { 100_000 }, &mut lines)?,
        ),
        (
            "reflected moments",
            moments_suite(
                s,
                if quick { 4 } else { 10 },
                if quick { 2_000 } else { 8_000 },
                &mut lines,
            )?,
        ),
    ];
    for (_, ok) in &suites {
        passed += usize::from(*ok);
    }

    let mut report = String::new();
    for line in &lines {
        report.push_str(line);
        report.push('\n');
    }
    report.push_str(&format!(
        "verify: {passed}/{} suites passed\n",
        suites.len()
    ));
    Ok((report, passed == suites.len()))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// A fresh single-slot problem with the UAV hovering at a random spot and
/// the reflectors scattered around it. Radio constants come from the base
/// scenario; only the geometry is randomized.
fn random_geometry(s: &Scenario, trial: u64) -> Result<(Scenario, LinkState)> {
    let mut rng = substream(s.rng_seed, domain::VERIFY, trial, 0);
    let mut s2 = s.clone();
    s2.horizon_s = s2.slot_s;
    s2.q_init = [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)];
    s2.q_final = s2.q_init;
    for p in &mut s2.irs_pos {
        *p = [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)];
    }
    s2.validate()?;
    let traj = Trajectory::stationary(s2.q_init, s2.n_slots());
    let ls = link_state(&s2, &traj)?;
    Ok((s2, ls))
}

/// Suite 1: optimal phases hit the combining cap and reproduce the
/// mean-channel power closed form.
fn phase_suite(s: &Scenario, trials: u64, lines: &mut Vec<String>) -> Result<bool> {
    let mut worst_combo = 0.0_f64;
    let mut worst_power = 0.0_f64;
    for t in 0..trials {
        let (s2, ls) = random_geometry(s, t)?;
        let phases = optimal_phases(&s2, &ls)?;
        let m = s2.m_elements as f64;
        for k in 0..s2.k_irs() {
            let theta = &phases.theta[0][k];
            let combo = combining_factor(&s2, &ls, 0, k, theta)?;
            worst_combo = worst_combo.max((combo.norm() - m).abs() / m);
            let first_principles = x0_sq_for_phases(&s2, &ls, 0, k, theta)?;
            let closed = x0_sq_opt(&s2, &ls, 0, k);
            worst_power = worst_power.max((first_principles - closed).abs() / closed);
        }
    }
    let ok = worst_combo <= 1e-9 && worst_power <= 1e-9;
    lines.push(format!(
        "phase alignment: {trials} geometries x {} reflectors; max combining defect {}; \
         max mean-power mismatch {} -> {}",
        s.k_irs(),
        fmt_float(worst_combo),
        fmt_float(worst_power),
        verdict(ok)
    ));
    Ok(ok)
}

/// Suite 2: the sample mean of the exact per-draw rate stays below the
/// moment bound, within three standard errors.
fn jensen_suite(s: &Scenario, configs: u64, draws: usize, lines: &mut Vec<String>) -> Result<bool> {
    let mut worst_z = f64::NEG_INFINITY;
    for t in 0..configs {
        let (s2, ls) = random_geometry(s, 1_000 + t)?;
        let k = t as usize % s2.k_irs();
        let phases = optimal_phases(&s2, &ls)?;
        let theta = &phases.theta[0][k];
        let mut rng = substream(s2.rng_seed, domain::CHANNEL, t, 0);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let draw = sample_channels(&s2, &ls, 0, k, &mut rng)?;
            let rate = primary_rate_exact(&s2, &draw.h1, &draw.h2, draw.h3, theta)?;
            sum += rate;
            sum_sq += rate * rate;
        }
        let n = draws as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        let se = (var / n).sqrt();
        let bound = rate_uk(&s2, &ls, 0, k);
        worst_z = worst_z.max((mean - bound) / se);
    }
    let ok = worst_z <= 3.0;
    lines.push(format!(
        "jensen gap: {configs} configurations x {draws} fading draws; \
         worst (mean - bound)/se = {} -> {}",
        fmt_float(worst_z),
        verdict(ok)
    ));
    Ok(ok)
}

/// Largest reflected gain whose closed-form error rate still reaches
/// `target` (the error rate is decreasing in the gain).
fn gain_for_target_ber(s: &Scenario, target: f64) -> f64 {
    let mut lo = 1e-20_f64.ln();
    let mut hi = 1e-2_f64.ln();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ber_closed_form(mid.exp(), s.noise_power_w, s.tx_power_w, s.l_samples) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Suite 3: symbol-level detector simulation against the closed-form error
/// rate at operating points spanning the interesting error-rate range.
fn ber_suite(s: &Scenario, symbols: usize, lines: &mut Vec<String>) -> Result<bool> {
    let targets = [0.25, 0.1, 0.05, 0.01, 2e-3];
    let mut worst_z = f64::NEG_INFINITY;
    for (i, &target) in targets.iter().enumerate() {
        let g = gain_for_target_ber(s, target);
        let closed = ber_closed_form(g, s.noise_power_w, s.tx_power_w, s.l_samples);
        let mut rng = substream(s.rng_seed, domain::DETECTOR, i as u64, 0);
        let mc = ber_monte_carlo(
            g,
            s.noise_power_w,
            s.tx_power_w,
            s.l_samples,
            s.rho,
            symbols,
            &mut rng,
        )?;
        let se = (closed * (1.0 - closed) / symbols as f64).sqrt();
        worst_z = worst_z.max((mc - closed).abs() / se);
    }
    let ok = worst_z <= 3.0;
    lines.push(format!(
        "energy detector: {} operating points x {symbols} symbols (L={}); \
         worst |mc - closed|/se = {} -> {}",
        targets.len(),
        s.l_samples,
        fmt_float(worst_z),
        verdict(ok)
    ));
    Ok(ok)
}

/// Suite 4: for arbitrary phases, the measured second moments of the
/// composite and reflected-only channels equal the mean-power closed forms
/// plus the scatter power.
fn moments_suite(s: &Scenario, trials: u64, draws: usize, lines: &mut Vec<String>) -> Result<bool> {
    let mut worst_z = f64::NEG_INFINITY;
    for t in 0..trials {
        let (s2, ls) = random_geometry(s, 2_000 + t)?;
        let k = t as usize % s2.k_irs();
        let mut rng = substream(s2.rng_seed, domain::CHANNEL, 5_000 + t, 0);
        let theta: Vec<f64> = (0..s2.m_elements)
            .map(|_| rng.random_range(0.0..TAU))
            .collect();

        let mut acc = [(0.0_f64, 0.0_f64); 2]; // (sum, sum of squares)
        for _ in 0..draws {
            let draw = sample_channels(&s2, &ls, 0, k, &mut rng)?;
            let combo = combined_channel(&draw.h1, &draw.h2, &theta)?;
            for (slot, v) in [(draw.h3 + combo).norm_sqr(), combo.norm_sqr()]
                .into_iter()
                .enumerate()
            {
                acc[slot].0 += v;
                acc[slot].1 += v * v;
            }
        }

        let m = s2.m_elements as f64;
        let kk = (s2.k1 + 1.0) * (s2.k2 + 1.0);
        let scatter_reflected = (s2.k1 + s2.k2 + 1.0) * m * ls.beta1[0][k] * ls.beta2[k] / kk;
        let predictions = [
            x0_sq_for_phases(&s2, &ls, 0, k, &theta)?
                + scatter_reflected
                + ls.beta3[0] / (s2.k3 + 1.0),
            xbar0_sq_for_phases(&s2, &ls, 0, k, &theta)? + scatter_reflected,
        ];
        let n = draws as f64;
        for ((sum, sum_sq), predicted) in acc.into_iter().zip(predictions) {
            let mean = sum / n;
            let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            let se = (var / n).sqrt();
            worst_z = worst_z.max((mean - predicted).abs() / se);
        }
    }
    let ok = worst_z <= 3.5;
    lines.push(format!(
        "reflected moments: {trials} geometries x {draws} draws, random phases; \
         worst |mean - predicted|/se = {} -> {}",
        fmt_float(worst_z),
        verdict(ok)
    ));
    Ok(ok)
}
