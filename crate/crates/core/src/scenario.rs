//! Scenario configuration, validation, and result serialization.
//!
//! A [`Scenario`] bundles every parameter of the system: geometry, radio
//! constants, frame structure, and optimizer knobs. Configs are read from
//! JSON; power-like quantities may be given either in dB form
//! (`tx_power_dbm`, `ref_gain_db`, ...) or directly in linear units
//! (`tx_power_w`, `ref_gain_lin`, ...). Internally everything is stored
//! linear. Missing fields fall back to the built-in default deployment.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::trajectory::{Schedule, Trajectory};
use crate::Result;

/// Propagation speed used to turn a carrier frequency into a wavelength.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

// ─────────────────────────── unit conversions ───────────────────────────

/// dB → linear power ratio.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio → dB.
#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// dBm → watts.
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Watts → dBm.
#[inline]
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Formats a float with 17 significant digits. Every float written to a
/// result artifact goes through this one helper so output bytes are stable
/// across runs and platforms.
#[inline]
pub fn fmt_float(x: f64) -> String {
    format!("{:.16e}", x)
}

// ─────────────────────────────── types ──────────────────────────────────

/// Solver tuning parameters. All have working defaults; configs only need
/// to override what they care about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoParams {
    /// Iteration cap for the alternating-optimization loops.
    pub r_max: usize,
    /// Fractional-increase stopping threshold for the AO objective.
    pub eps1: f64,
    /// Binariness threshold on the penalty violation metric ξ.
    pub eps2: f64,
    /// Initial penalty weight η for the fairness scheduler.
    pub eta0: f64,
    /// Multiplicative decrease of η per outer step, in (0, 1).
    pub c_scale: f64,
    /// Cap on penalty outer steps before reporting non-convergence.
    pub outer_max: usize,
    /// Relative suboptimality target for the trajectory subproblem solver.
    pub sca_tol: f64,
    /// Feasibility/duality tolerance for the LP solver.
    pub lp_tol: f64,
    /// Initial barrier weight μ for the interior-point trajectory solver.
    pub barrier_mu0: f64,
    /// Multiplicative decrease of μ per centering step, in (0, 1).
    pub barrier_shrink: f64,
    /// Duality-gap target of the barrier solver (m·μ ≤ this).
    pub barrier_tol: f64,
    /// Utility prefactor `s` in F(γ) = log2(1 + s·γ). `None` selects the
    /// detection-bandwidth scaling L·P.
    pub utility_prefactor: Option<f64>,
}

impl Default for AlgoParams {
    fn default() -> Self {
        AlgoParams {
            r_max: 300,
            eps1: 1e-3,
            eps2: 1e-10,
            eta0: 500.0,
            c_scale: 0.7,
            outer_max: 200,
            sca_tol: 1e-6,
            lp_tol: 1e-9,
            barrier_mu0: 1.0,
            barrier_shrink: 0.1,
            barrier_tol: 1e-8,
            utility_prefactor: None,
        }
    }
}

/// Full system description. Linear units throughout (watts, meters,
/// seconds); dB appears only at the JSON boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    // geometry (meters)
    pub bs_pos: [f64; 2],
    pub bs_height: f64,
    pub irs_pos: Vec<[f64; 2]>,
    pub irs_height: f64,
    pub uav_height: f64,
    pub q_init: [f64; 2],
    pub q_final: [f64; 2],
    /// Maximum UAV horizontal speed (m/s).
    pub v_max: f64,

    // timing
    /// Mission duration T (s).
    pub horizon_s: f64,
    /// Slot length δ (s). The horizon must be an integer number of slots.
    pub slot_s: f64,

    // radio
    /// Reflecting elements per IRS (uniform linear array along x).
    pub m_elements: usize,
    /// UAV transmit power (W).
    pub tx_power_w: f64,
    /// Receiver noise power (W).
    pub noise_power_w: f64,
    /// Reference channel gain at 1 m (linear).
    pub ref_gain: f64,
    /// Path-loss exponents: UAV→IRS, IRS→BS, UAV→BS.
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Rician factors (linear) for the same three links.
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Carrier wavelength (m).
    pub lambda: f64,
    /// Element spacing in wavelengths.
    pub d_over_lambda: f64,

    // frame structure
    /// Prior probability of the IRS sending "1" in a symbol (also the
    /// fraction of time the reflection boosts the primary link).
    pub rho: f64,
    /// Primary symbols spanned by one IRS symbol (energy-detector window).
    pub l_samples: usize,
    /// IRS symbols per transmission block (bookkeeping only).
    pub n1_symbols: usize,

    // optimization
    /// Per-slot primary-rate floor R_th (bps/Hz).
    pub rate_floor: f64,
    /// Per-IRS priority weights in [0, 1]; length K.
    pub weights: Vec<f64>,
    pub algo: AlgoParams,
    pub rng_seed: u64,
}

impl Scenario {
    /// Number of IRSs.
    #[inline]
    pub fn k_irs(&self) -> usize {
        self.irs_pos.len()
    }

    /// Number of time slots N = T/δ.
    #[inline]
    pub fn n_slots(&self) -> usize {
        (self.horizon_s / self.slot_s).round() as usize
    }

    /// Physical element spacing d (m).
    #[inline]
    pub fn element_spacing(&self) -> f64 {
        self.d_over_lambda * self.lambda
    }

    /// Prefactor `s` of the backscatter utility F(γ) = log2(1 + s·γ).
    /// Defaults to L·P, the effective post-detection energy scaling.
    #[inline]
    pub fn utility_prefactor(&self) -> f64 {
        self.algo
            .utility_prefactor
            .unwrap_or(self.l_samples as f64 * self.tx_power_w)
    }

    /// Switches to the desk-scale profile: 1 s slots, same horizon.
    pub fn coarse(mut self) -> Result<Self> {
        self.slot_s = 1.0;
        self.validate()?;
        Ok(self)
    }

    /// Checks every invariant the rest of the crate relies on.
    pub fn validate(&self) -> Result<()> {
        let k = self.k_irs();
        if k == 0 {
            return Err(Error::validation("irs_pos_m", "at least one IRS required"));
        }
        if self.m_elements == 0 {
            return Err(Error::validation("m_elements", "must be >= 1"));
        }
        for (name, v) in [
            ("tx_power_w", self.tx_power_w),
            ("noise_power_w", self.noise_power_w),
            ("ref_gain", self.ref_gain),
            ("lambda_m", self.lambda),
            ("d_over_lambda", self.d_over_lambda),
            ("horizon_s", self.horizon_s),
            ("slot_s", self.slot_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(
                    name,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
        ] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(Error::validation(
                    name,
                    format!("path-loss exponent must be >= 1, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("rician_k1", self.k1),
            ("rician_k2", self.k2),
            ("rician_k3", self.k3),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(
                    name,
                    format!("Rician factor must be >= 0, got {v}"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::validation(
                "rho",
                format!("must lie in [0, 1], got {}", self.rho),
            ));
        }
        if self.l_samples == 0 {
            return Err(Error::validation("l_samples", "must be >= 1"));
        }
        if !(self.v_max >= 0.0) {
            return Err(Error::validation("v_max_mps", "must be >= 0"));
        }
        if self.uav_height <= self.irs_height {
            return Err(Error::validation(
                "uav_height_m",
                "UAV must fly above the IRS plane",
            ));
        }
        if self.uav_height <= self.bs_height {
            return Err(Error::validation(
                "uav_height_m",
                "UAV must fly above the BS",
            ));
        }
        if !(self.rate_floor >= 0.0) {
            return Err(Error::validation("rate_floor_bpshz", "must be >= 0"));
        }
        if self.weights.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "weights has length {}, expected K = {k}",
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::validation("weights", "entries must lie in [0, 1]"));
        }

        // The horizon must shatter into an integer number of slots.
        let n_exact = self.horizon_s / self.slot_s;
        if (n_exact - n_exact.round()).abs() > 1e-9 * n_exact.max(1.0) || n_exact.round() < 1.0 {
            return Err(Error::validation(
                "slot_s",
                format!(
                    "horizon {} s is not an integer number of {} s slots",
                    self.horizon_s, self.slot_s
                ),
            ));
        }

        // Endpoints must be mutually reachable within the horizon.
        let n = self.n_slots() as f64;
        let dx = self.q_init[0] - self.q_final[0];
        let dy = self.q_init[1] - self.q_final[1];
        let dist = (dx * dx + dy * dy).sqrt();
        if dist > n * self.v_max * self.slot_s + 1e-9 {
            return Err(Error::validation(
                "q_final_m",
                format!(
                    "endpoint {dist:.3} m away exceeds reachable range {:.3} m",
                    n * self.v_max * self.slot_s
                ),
            ));
        }

        let a = &self.algo;
        if a.r_max == 0 {
            return Err(Error::validation("algo.r_max", "must be >= 1"));
        }
        for (name, v) in [
            ("algo.eps1", a.eps1),
            ("algo.eps2", a.eps2),
            ("algo.eta0", a.eta0),
            ("algo.sca_tol", a.sca_tol),
            ("algo.lp_tol", a.lp_tol),
            ("algo.barrier_mu0", a.barrier_mu0),
            ("algo.barrier_tol", a.barrier_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(
                    name,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("algo.c_scale", a.c_scale),
            ("algo.barrier_shrink", a.barrier_shrink),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::validation(
                    name,
                    format!("must lie in (0, 1), got {v}"),
                ));
            }
        }
        if let Some(s) = a.utility_prefactor {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::validation(
                    "algo.utility_prefactor",
                    "must be positive",
                ));
            }
        }

        // Within a slot the channel is held constant; a displacement that is
        // large relative to the flight altitude stretches that assumption.
        if self.v_max * self.slot_s > 0.2 * self.uav_height {
            log::warn!(
                "per-slot displacement {:.2} m exceeds 20% of flight altitude {:.1} m; \
                 slot-invariant channel approximation is coarse",
                self.v_max * self.slot_s,
                self.uav_height
            );
        }
        Ok(())
    }
}

/// Built-in default deployment: five IRSs ringed around the BS, 30 m flight
/// altitude, 40 s mission at 0.1 s slots, 755 MHz carrier.
pub fn default_scenario() -> Scenario {
    let s = Scenario {
        bs_pos: [0.0, 0.0],
        bs_height: 10.0,
        irs_pos: vec![
            [30.0, 30.0],
            [-30.0, 30.0],
            [-40.0, 0.0],
            [-30.0, -30.0],
            [30.0, -30.0],
        ],
        irs_height: 10.0,
        uav_height: 30.0,
        q_init: [15.0, 0.0],
        q_final: [15.0, 0.0],
        v_max: 10.0,
        horizon_s: 40.0,
        slot_s: 0.1,
        m_elements: 50,
        tx_power_w: dbm_to_watts(20.0),     // 0.1 W
        noise_power_w: dbm_to_watts(-60.0), // 1e-9 W
        ref_gain: db_to_linear(-30.0),      // 1e-3
        alpha1: 2.4,
        alpha2: 2.4,
        alpha3: 2.4,
        k1: db_to_linear(10.0),
        k2: db_to_linear(10.0),
        k3: db_to_linear(10.0),
        lambda: SPEED_OF_LIGHT / 755e6,
        d_over_lambda: 0.5,
        rho: 0.5,
        l_samples: 512,
        n1_symbols: 100,
        rate_floor: 2.0,
        weights: vec![1.0; 5],
        algo: AlgoParams::default(),
        rng_seed: 1,
    };
    debug_assert!(s.validate().is_ok());
    s
}

// ───────────────────────────── JSON boundary ────────────────────────────

/// Raw shape of a scenario file. Every field is optional; dB and linear
/// spellings of the same quantity are mutually exclusive.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioFile {
    bs_pos_m: Option<[f64; 2]>,
    bs_height_m: Option<f64>,
    irs_pos_m: Option<Vec<[f64; 2]>>,
    irs_height_m: Option<f64>,
    uav_height_m: Option<f64>,
    q_init_m: Option<[f64; 2]>,
    q_final_m: Option<[f64; 2]>,
    v_max_mps: Option<f64>,
    horizon_s: Option<f64>,
    slot_s: Option<f64>,
    m_elements: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tx_power_dbm: Option<f64>,
    tx_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_power_dbm: Option<f64>,
    noise_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ref_gain_db: Option<f64>,
    ref_gain_lin: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    alpha3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rician_k1_db: Option<f64>,
    rician_k1_lin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rician_k2_db: Option<f64>,
    rician_k2_lin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rician_k3_db: Option<f64>,
    rician_k3_lin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    carrier_freq_hz: Option<f64>,
    lambda_m: Option<f64>,
    d_over_lambda: Option<f64>,
    rho: Option<f64>,
    l_samples: Option<usize>,
    n1_symbols: Option<usize>,
    rate_floor_bpshz: Option<f64>,
    weights: Option<Vec<f64>>,
    algo: Option<AlgoParams>,
    rng_seed: Option<u64>,
}

/// Picks between the dB and linear spelling of one quantity.
fn pick_unit(
    field: &str,
    db: Option<f64>,
    lin: Option<f64>,
    conv: impl Fn(f64) -> f64,
    default: f64,
) -> Result<f64> {
    match (db, lin) {
        (Some(_), Some(_)) => Err(Error::validation(
            field,
            "given in both dB and linear form; pick one",
        )),
        (Some(d), None) => Ok(conv(d)),
        (None, Some(l)) => Ok(l),
        (None, None) => Ok(default),
    }
}

impl ScenarioFile {
    fn resolve(self) -> Result<Scenario> {
        let d = default_scenario();
        let irs_pos = self.irs_pos_m.unwrap_or_else(|| d.irs_pos.clone());
        let k = irs_pos.len();
        let lambda = match (self.carrier_freq_hz, self.lambda_m) {
            (Some(_), Some(_)) => {
                return Err(Error::validation(
                    "lambda_m",
                    "given as both carrier_freq_hz and lambda_m; pick one",
                ))
            }
            (Some(f), None) => {
                if !(f > 0.0) {
                    return Err(Error::validation("carrier_freq_hz", "must be positive"));
                }
                SPEED_OF_LIGHT / f
            }
            (None, Some(l)) => l,
            (None, None) => d.lambda,
        };
        let weights = match self.weights {
            Some(w) => w,
            None => vec![1.0; k],
        };
        let s = Scenario {
            bs_pos: self.bs_pos_m.unwrap_or(d.bs_pos),
            bs_height: self.bs_height_m.unwrap_or(d.bs_height),
            irs_pos,
            irs_height: self.irs_height_m.unwrap_or(d.irs_height),
            uav_height: self.uav_height_m.unwrap_or(d.uav_height),
            q_init: self.q_init_m.unwrap_or(d.q_init),
            q_final: self.q_final_m.unwrap_or(d.q_final),
            v_max: self.v_max_mps.unwrap_or(d.v_max),
            horizon_s: self.horizon_s.unwrap_or(d.horizon_s),
            slot_s: self.slot_s.unwrap_or(d.slot_s),
            m_elements: self.m_elements.unwrap_or(d.m_elements),
            tx_power_w: pick_unit(
                "tx_power",
                self.tx_power_dbm,
                self.tx_power_w,
                dbm_to_watts,
                d.tx_power_w,
            )?,
            noise_power_w: pick_unit(
                "noise_power",
                self.noise_power_dbm,
                self.noise_power_w,
                dbm_to_watts,
                d.noise_power_w,
            )?,
            ref_gain: pick_unit(
                "ref_gain",
                self.ref_gain_db,
                self.ref_gain_lin,
                db_to_linear,
                d.ref_gain,
            )?,
            alpha1: self.alpha1.unwrap_or(d.alpha1),
            alpha2: self.alpha2.unwrap_or(d.alpha2),
            alpha3: self.alpha3.unwrap_or(d.alpha3),
            k1: pick_unit(
                "rician_k1",
                self.rician_k1_db,
                self.rician_k1_lin,
                db_to_linear,
                d.k1,
            )?,
            k2: pick_unit(
                "rician_k2",
                self.rician_k2_db,
                self.rician_k2_lin,
                db_to_linear,
                d.k2,
            )?,
            k3: pick_unit(
                "rician_k3",
                self.rician_k3_db,
                self.rician_k3_lin,
                db_to_linear,
                d.k3,
            )?,
            lambda,
            d_over_lambda: self.d_over_lambda.unwrap_or(d.d_over_lambda),
            rho: self.rho.unwrap_or(d.rho),
            l_samples: self.l_samples.unwrap_or(d.l_samples),
            n1_symbols: self.n1_symbols.unwrap_or(d.n1_symbols),
            rate_floor: self.rate_floor_bpshz.unwrap_or(d.rate_floor),
            weights,
            algo: self.algo.unwrap_or_default(),
            rng_seed: self.rng_seed.unwrap_or(d.rng_seed),
        };
        s.validate()?;
        Ok(s)
    }

    fn from_scenario(s: &Scenario) -> Self {
        ScenarioFile {
            bs_pos_m: Some(s.bs_pos),
            bs_height_m: Some(s.bs_height),
            irs_pos_m: Some(s.irs_pos.clone()),
            irs_height_m: Some(s.irs_height),
            uav_height_m: Some(s.uav_height),
            q_init_m: Some(s.q_init),
            q_final_m: Some(s.q_final),
            v_max_mps: Some(s.v_max),
            horizon_s: Some(s.horizon_s),
            slot_s: Some(s.slot_s),
            m_elements: Some(s.m_elements),
            // Linear spellings round-trip bit-exactly; dB ones would not.
            tx_power_dbm: None,
            tx_power_w: Some(s.tx_power_w),
            noise_power_dbm: None,
            noise_power_w: Some(s.noise_power_w),
            ref_gain_db: None,
            ref_gain_lin: Some(s.ref_gain),
            alpha1: Some(s.alpha1),
            alpha2: Some(s.alpha2),
            alpha3: Some(s.alpha3),
            rician_k1_db: None,
            rician_k1_lin: Some(s.k1),
            rician_k2_db: None,
            rician_k2_lin: Some(s.k2),
            rician_k3_db: None,
            rician_k3_lin: Some(s.k3),
            carrier_freq_hz: None,
            lambda_m: Some(s.lambda),
            d_over_lambda: Some(s.d_over_lambda),
            rho: Some(s.rho),
            l_samples: Some(s.l_samples),
            n1_symbols: Some(s.n1_symbols),
            rate_floor_bpshz: Some(s.rate_floor),
            weights: Some(s.weights.clone()),
            algo: Some(s.algo.clone()),
            rng_seed: Some(s.rng_seed),
        }
    }
}

/// Loads and validates a scenario from a JSON file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_scenario(&text)
}

/// Parses a scenario from JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    raw.resolve()
}

/// Serializes a scenario back to its JSON file form (linear units, all
/// fields explicit). A saved scenario re-loads to an identical `Scenario`.
pub fn scenario_to_json(s: &Scenario) -> String {
    let file = ScenarioFile::from_scenario(s);
    // Serialization of a plain struct cannot fail.
    serde_json::to_string_pretty(&file).expect("scenario serialization")
}

/// Writes a scenario to disk; see [`scenario_to_json`].
pub fn save_scenario(path: impl AsRef<Path>, s: &Scenario) -> Result<()> {
    fs::write(path.as_ref(), scenario_to_json(s) + "\n")?;
    Ok(())
}

// ───────────────────────────── solve reports ────────────────────────────

/// Terminal condition of an optimizer run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Stopping criterion met.
    Converged,
    /// Iteration cap reached first; result is the best iterate seen.
    IterationCap,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationCap => "iteration_cap",
        }
    }
}

/// One outer penalty step of the fairness solver.
#[derive(Debug, Clone, Copy)]
pub struct OuterRecord {
    /// Penalty weight η during this step.
    pub eta: f64,
    /// Binariness violation ξ after this step.
    pub xi: f64,
    /// Objective after this step.
    pub objective: f64,
}

/// Outcome of an optimizer run plus the traces the analysis tooling needs.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Alternating-optimization iterations (summed over outer steps for the
    /// fairness solver).
    pub iterations: usize,
    /// Penalty outer steps; zero for the weighted-sum solver.
    pub outer_iterations: usize,
    /// Final objective: per-slot average utility (weighted-sum) or the
    /// max-min per-IRS utility (fairness).
    pub objective: f64,
    /// Objective after every AO iteration; non-decreasing for the
    /// weighted-sum solver.
    pub objective_trace: Vec<f64>,
    /// Per-outer-step (η, ξ, objective) records; empty for weighted-sum.
    pub outer_trace: Vec<OuterRecord>,
    /// min over slots of (scheduled primary rate − rate floor), recorded at
    /// every AO iteration. Non-negative iff all iterates were feasible.
    pub min_rate_margin_trace: Vec<f64>,
    /// Final binariness violation (0 for weighted-sum, whose scheduler is
    /// binary by construction).
    pub xi_final: f64,
    /// Wall-clock duration of the run. Not serialized: result artifacts are
    /// byte-stable for a fixed scenario and seed, and timing is not.
    pub wall_time_s: f64,
}

/// Writes `trajectory.csv`, `schedule.csv`, `trace.csv` and `summary.json`
/// under `dir` (created if missing). Output bytes depend only on the
/// arguments, never on timing, so re-running a deterministic solve
/// reproduces the artifacts exactly.
pub fn save_results(
    dir: impl AsRef<Path>,
    report: &SolveReport,
    trajectory: &Trajectory,
    schedule: &Schedule,
    slot_s: f64,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    // trajectory.csv: one row per waypoint, speed of the arriving segment.
    let mut t_csv = String::from("n,x_m,y_m,speed_mps\n");
    for (n, q) in trajectory.points.iter().enumerate() {
        let speed = if n == 0 {
            0.0
        } else {
            let p = trajectory.points[n - 1];
            ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt() / slot_s
        };
        t_csv.push_str(&format!(
            "{n},{},{},{}\n",
            fmt_float(q[0]),
            fmt_float(q[1]),
            fmt_float(speed)
        ));
    }
    fs::write(dir.join("trajectory.csv"), t_csv)?;

    // schedule.csv: K rows per slot.
    let mut s_csv = String::from("n,k,a\n");
    for (n, row) in schedule.a.iter().enumerate() {
        for (k, &a) in row.iter().enumerate() {
            s_csv.push_str(&format!("{n},{k},{}\n", fmt_float(a)));
        }
    }
    fs::write(dir.join("schedule.csv"), s_csv)?;

    // trace.csv: objective trace; ξ column is only meaningful for the
    // fairness solver and is written as 0 for weighted-sum iterations.
    let mut tr_csv = String::from("iter,objective,xi\n");
    let xi_at = |i: usize| -> f64 {
        report
            .outer_trace
            .get(i)
            .map(|r| r.xi)
            .unwrap_or(report.xi_final)
    };
    for (i, &obj) in report.objective_trace.iter().enumerate() {
        let xi = if report.outer_trace.is_empty() {
            0.0
        } else {
            xi_at(i.min(report.outer_trace.len().saturating_sub(1)))
        };
        tr_csv.push_str(&format!("{i},{},{}\n", fmt_float(obj), fmt_float(xi)));
    }
    fs::write(dir.join("trace.csv"), tr_csv)?;

    // summary.json: hand-rendered so float formatting stays pinned to the
    // one helper above.
    let mut j = String::from("{\n");
    j.push_str(&format!("  \"status\": \"{}\",\n", report.status.as_str()));
    j.push_str(&format!("  \"iterations\": {},\n", report.iterations));
    j.push_str(&format!(
        "  \"outer_iterations\": {},\n",
        report.outer_iterations
    ));
    j.push_str(&format!(
        "  \"objective\": {},\n",
        fmt_float(report.objective)
    ));
    j.push_str(&format!(
        "  \"xi_final\": {},\n",
        fmt_float(report.xi_final)
    ));
    let trace: Vec<String> = report
        .objective_trace
        .iter()
        .map(|&x| fmt_float(x))
        .collect();
    j.push_str(&format!("  \"objective_trace\": [{}],\n", trace.join(", ")));
    let margins: Vec<String> = report
        .min_rate_margin_trace
        .iter()
        .map(|&x| fmt_float(x))
        .collect();
    j.push_str(&format!(
        "  \"min_rate_margin_trace\": [{}],\n",
        margins.join(", ")
    ));
    let outer: Vec<String> = report
        .outer_trace
        .iter()
        .map(|r| {
            format!(
                "{{\"eta\": {}, \"xi\": {}, \"objective\": {}}}",
                fmt_float(r.eta),
                fmt_float(r.xi),
                fmt_float(r.objective)
            )
        })
        .collect();
    j.push_str(&format!("  \"outer_trace\": [{}]\n", outer.join(", ")));
    j.push_str("}\n");
    fs::write(dir.join("summary.json"), j)?;
    Ok(())
}

// ──────────────────────────────── tests ─────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_matches_reference_deployment() {
        let s = default_scenario();
        assert_eq!(s.k_irs(), 5);
        assert_eq!(s.irs_pos[2], [-40.0, 0.0]);
        assert!(s.weights.iter().all(|&w| w == 1.0));
        assert_eq!(s.n_slots(), 400);
        assert_eq!(s.algo.eta0, 500.0);
        assert_eq!(s.algo.c_scale, 0.7);
        assert!((s.tx_power_w - 0.1).abs() < 1e-15);
        assert!((s.noise_power_w - 1e-9).abs() < 1e-24);
        assert!((s.ref_gain - 1e-3).abs() < 1e-18);
        assert!((s.lambda - 0.397_076_103_311_258_25).abs() < 1e-12);
        assert!((s.utility_prefactor() - 51.2).abs() < 1e-12);
    }

    #[test]
    fn loads_db_quantities_as_linear() {
        let s = parse_scenario(
            r#"{
                "tx_power_dbm": 20.0,
                "noise_power_dbm": -60.0,
                "ref_gain_db": -30.0,
                "rician_k1_db": 10.0
            }"#,
        )
        .unwrap();
        assert!((s.tx_power_w - 0.1).abs() < 1e-15);
        assert!((s.noise_power_w - 1e-9).abs() < 1e-24);
        assert!((s.ref_gain - 1e-3).abs() < 1e-18);
        assert!((s.k1 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_rho_outside_unit_interval() {
        let err = parse_scenario(r#"{"rho": 1.5}"#).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "rho"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_unit_spellings() {
        let err = parse_scenario(r#"{"tx_power_dbm": 20.0, "tx_power_w": 0.1}"#).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn omitted_algo_params_take_defaults() {
        let s = parse_scenario(r#"{"algo": {"r_max": 50}}"#).unwrap();
        assert_eq!(s.algo.r_max, 50);
        assert_eq!(s.algo.eta0, 500.0);
        assert_eq!(s.algo.eps2, 1e-10);
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(matches!(
            parse_scenario(r#"{"tx_power": 3}"#),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn rejects_unreachable_endpoints() {
        let err = parse_scenario(r#"{"q_final_m": [1e6, 0.0]}"#).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn rejects_fractional_slot_count() {
        let err = parse_scenario(r#"{"horizon_s": 40.0, "slot_s": 0.3}"#).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn save_load_round_trip_is_identity() {
        let mut s = default_scenario();
        s.rho = 0.25;
        s.weights = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        s.algo.utility_prefactor = Some(7.5);
        let text = scenario_to_json(&s);
        let back = parse_scenario(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn coarse_profile_keeps_horizon() {
        let s = default_scenario().coarse().unwrap();
        assert_eq!(s.n_slots(), 40);
        assert_eq!(s.slot_s, 1.0);
    }

    #[test]
    fn save_results_writes_expected_rows_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let report = SolveReport {
            status: SolveStatus::Converged,
            iterations: 3,
            outer_iterations: 0,
            objective: 1.25,
            objective_trace: vec![1.0, 1.2, 1.25],
            outer_trace: vec![],
            min_rate_margin_trace: vec![0.5, 0.4, 0.4],
            xi_final: 0.0,
            wall_time_s: 0.123,
        };
        let traj = Trajectory {
            points: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
        };
        let sched = Schedule {
            a: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        save_results(dir.path(), &report, &traj, &sched, 1.0).unwrap();

        let t = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert_eq!(t.lines().count(), 1 + 3); // header + N+1 waypoints
        let s = std::fs::read_to_string(dir.path().join("schedule.csv")).unwrap();
        assert_eq!(s.lines().count(), 1 + 4); // header + K*N

        // Byte determinism: write again into a second directory.
        let dir2 = tempfile::tempdir().unwrap();
        save_results(dir2.path(), &report, &traj, &sched, 1.0).unwrap();
        for f in [
            "trajectory.csv",
            "schedule.csv",
            "trace.csv",
            "summary.json",
        ] {
            let a = std::fs::read(dir.path().join(f)).unwrap();
            let b = std::fs::read(dir2.path().join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between runs");
        }
    }

    #[test]
    fn save_results_propagates_io_errors() {
        let report = SolveReport {
            status: SolveStatus::Converged,
            iterations: 0,
            outer_iterations: 0,
            objective: 0.0,
            objective_trace: vec![],
            outer_trace: vec![],
            min_rate_margin_trace: vec![],
            xi_final: 0.0,
            wall_time_s: 0.0,
        };
        let traj = Trajectory {
            points: vec![[0.0, 0.0]],
        };
        let sched = Schedule { a: vec![] };
        // /proc is not writable; creating subdirectories there must fail.
        let err = save_results("/proc/no_such_dir/x", &report, &traj, &sched, 1.0).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    proptest! {
        #[test]
        fn db_round_trip(db in -120.0f64..60.0) {
            let lin = db_to_linear(db);
            prop_assert!((linear_to_db(lin) - db).abs() <= 1e-12 * db.abs().max(1.0));
        }

        #[test]
        fn dbm_round_trip(dbm in -120.0f64..60.0) {
            let w = dbm_to_watts(dbm);
            prop_assert!((watts_to_dbm(w) - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
    }
}
