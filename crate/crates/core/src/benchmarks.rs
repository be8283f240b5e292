//! Reference schemes and the comparison harness.
//!
//! Four baselines bracket the planners: a fixed circular flight with the
//! schedule still optimized, the same flight with all IRS elements frozen
//! at one phase, and the two closed-form upper bounds. Sweeps vary either
//! the mission duration `T` or the element count `M`.
//!
//! A duration sweep holds the *slot count* fixed and rescales the slot
//! length, so every candidate path keeps the same number of waypoints and
//! a fixed flight circle is sampled at identical positions for every `T`.
//! Schemes that never leave that circle therefore see literally the same
//! per-slot channel tables at each duration, while the planners gain from
//! the larger per-slot displacement budget `V·δ`.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

use crate::channel::{self, LinkState};
use crate::closed_forms::{self, PhaseSchedule};
use crate::convex::solve_slot_lp;
use crate::error::Error;
use crate::fairness;
use crate::physical_layer;
use crate::scenario::Scenario;
use crate::trajectory::Trajectory;
use crate::weighted_sum;
use crate::Result;

/// Circular flight of one full counterclockwise loop at constant angular
/// speed: `N+1` points on the circle with `points[0] = points[N] = q_init`.
///
/// The launch point must sit on the requested circle and the mission must
/// end where it starts; the validated per-slot chord `2r·sin(π/N)` must
/// not exceed the speed budget `V·δ`.
pub fn circular_trajectory(s: &Scenario, radius: f64, center: [f64; 2]) -> Result<Trajectory> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "circle radius must be positive, got {radius}"
        )));
    }
    let n = s.n_slots();
    let dx = s.q_init[0] - center[0];
    let dy = s.q_init[1] - center[1];
    let start_r = (dx * dx + dy * dy).sqrt();
    if (start_r - radius).abs() > 1e-6 * radius.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "launch point lies {start_r:.6} m from the circle center; \
             a radius-{radius:.6} loop cannot pass through it"
        )));
    }
    let end_gap =
        ((s.q_final[0] - s.q_init[0]).powi(2) + (s.q_final[1] - s.q_init[1]).powi(2)).sqrt();
    if end_gap > 1e-9 {
        return Err(Error::InvalidInput(
            "a closed circular path needs q_init = q_final".into(),
        ));
    }
    let step = 2.0 * radius * (PI / n as f64).sin();
    let cap = s.v_max * s.slot_s;
    if step > cap * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "circle step {step:.4} m exceeds the per-slot reach {cap:.4} m; \
             shrink the radius or lengthen the slots"
        )));
    }
    let theta0 = dy.atan2(dx);
    let mut points = Vec::with_capacity(n + 1);
    points.push(s.q_init);
    for i in 1..n {
        let th = theta0 + TAU * i as f64 / n as f64;
        points.push([center[0] + radius * th.cos(), center[1] + radius * th.sin()]);
    }
    points.push(s.q_final);
    let traj = Trajectory { points };
    traj.validate(s, 1e-9)?;
    Ok(traj)
}

/// Per-slot, per-IRS expected utilities `F(γ)` and primary-rate bounds for
/// one phase configuration on one trajectory.
#[derive(Debug, Clone)]
pub struct PhaseEval {
    /// `utilities[n][k] = F(γ_{n,k})`, unweighted.
    pub utilities: Vec<Vec<f64>>,
    /// `rates[n][k]`: expected primary-rate bound when IRS `k` serves slot `n`.
    pub rates: Vec<Vec<f64>>,
}

/// Evaluates arbitrary element phases analytically: the expected combined
/// channel and scatter terms are averaged in closed form, so the tables are
/// deterministic (no Monte-Carlo noise).
pub fn phase_eval(s: &Scenario, traj: &Trajectory, phases: &PhaseSchedule) -> Result<PhaseEval> {
    let ls = channel::link_state(s, traj)?;
    if phases.n_slots() != ls.n_slots() {
        return Err(Error::DimensionMismatch(format!(
            "phase schedule covers {} slots, trajectory has {}",
            phases.n_slots(),
            ls.n_slots()
        )));
    }
    let mut utilities = Vec::with_capacity(ls.n_slots());
    let mut rates = Vec::with_capacity(ls.n_slots());
    for n in 0..ls.n_slots() {
        let mut u_row = Vec::with_capacity(ls.k_irs());
        let mut r_row = Vec::with_capacity(ls.k_irs());
        for k in 0..ls.k_irs() {
            let theta = &phases.theta[n][k];
            let gamma = closed_forms::gamma_for_phases(s, &ls, n, k, theta)?;
            u_row.push(physical_layer::utility(s, gamma));
            let x0_sq = closed_forms::x0_sq_for_phases(s, &ls, n, k, theta)?;
            r_row.push(physical_layer::primary_rate_bound(
                s,
                x0_sq,
                ls.beta1[n][k],
                ls.beta2[k],
                ls.beta3[n],
            ));
        }
        utilities.push(u_row);
        rates.push(r_row);
    }
    Ok(PhaseEval { utilities, rates })
}

/// [`phase_eval`] with every element of every IRS frozen at `theta0`
/// (normalized into `[0, 2π)`).
pub fn fixed_phase_eval(s: &Scenario, traj: &Trajectory, theta0: f64) -> Result<PhaseEval> {
    let th = theta0.rem_euclid(TAU);
    let n = traj.n_slots();
    let phases = PhaseSchedule {
        theta: vec![vec![vec![th; s.m_elements]; s.k_irs()]; n],
    };
    phase_eval(s, traj, &phases)
}

/// Utility/rate tables at the aligning phases, straight from the closed
/// forms (equal to [`phase_eval`] on the optimal phase schedule).
pub fn aligned_eval(s: &Scenario, ls: &LinkState) -> PhaseEval {
    let mut utilities = Vec::with_capacity(ls.n_slots());
    let mut rates = Vec::with_capacity(ls.n_slots());
    for n in 0..ls.n_slots() {
        let mut u_row = Vec::with_capacity(ls.k_irs());
        let mut r_row = Vec::with_capacity(ls.k_irs());
        for k in 0..ls.k_irs() {
            u_row.push(physical_layer::utility(
                s,
                physical_layer::irs_snr(s, ls, n, k),
            ));
            r_row.push(closed_forms::rate_uk(s, ls, n, k));
        }
        utilities.push(u_row);
        rates.push(r_row);
    }
    PhaseEval { utilities, rates }
}

/// Best weighted-sum utility attainable by scheduling alone on fixed
/// tables: one exact LP per slot, averaged over slots.
pub fn best_weighted_value(s: &Scenario, eval: &PhaseEval) -> Result<f64> {
    let n_slots = eval.utilities.len();
    let mut total = 0.0;
    for n in 0..n_slots {
        let gains: Vec<f64> = eval.utilities[n]
            .iter()
            .zip(&s.weights)
            .map(|(u, w)| w * u)
            .collect();
        let sol = solve_slot_lp(&gains, &eval.rates[n], s.rate_floor)?;
        total += sol.objective;
    }
    Ok(total / n_slots as f64)
}

/// Comparison scheme identifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Alternating schedule/trajectory optimization of the weighted sum.
    ProposedWeightedSum,
    /// Penalty-based max-min fair planner.
    ProposedFairness,
    /// Fixed circular flight through the launch point around the BS,
    /// schedule still optimized (relaxed) on both objectives.
    Circular,
    /// Circular flight with all element phases frozen at the given angle.
    FixedPhase(f64),
    /// Closed-form upper bounds on both objectives.
    UpperBound,
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::ProposedWeightedSum => "proposed-wsb".into(),
            Scheme::ProposedFairness => "proposed-fair".into(),
            Scheme::Circular => "circular".into(),
            Scheme::FixedPhase(th) => format!("fixed-phase({th:.3})"),
            Scheme::UpperBound => "upper-bound".into(),
        }
    }
}

/// Full default roster, with the fixed-phase baseline frozen at `theta0`.
pub fn default_schemes(theta0: f64) -> Vec<Scheme> {
    vec![
        Scheme::ProposedWeightedSum,
        Scheme::ProposedFairness,
        Scheme::Circular,
        Scheme::FixedPhase(theta0),
        Scheme::UpperBound,
    ]
}

/// Sweep axis of a comparison run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Mission duration T (s); the slot count stays fixed.
    MissionDuration,
    /// IRS element count M.
    ElementCount,
}

impl Sweep {
    pub fn label(self) -> &'static str {
        match self {
            Sweep::MissionDuration => "T",
            Sweep::ElementCount => "M",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            Sweep::MissionDuration => vec![10.0, 20.0, 30.0, 40.0],
            Sweep::ElementCount => vec![20.0, 40.0, 60.0, 80.0, 100.0],
        }
    }
}

/// One comparison result: a scheme evaluated at one sweep point. Schemes
/// fill in whichever objectives they define.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub sweep: String,
    pub value: f64,
    pub scheme: String,
    pub weighted_sum: Option<f64>,
    pub max_min: Option<f64>,
}

/// Applies one sweep point to a base scenario.
fn scenario_at(s: &Scenario, sweep: Sweep, value: f64) -> Result<Scenario> {
    let mut s2 = s.clone();
    match sweep {
        Sweep::MissionDuration => {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "mission duration must be positive, got {value}"
                )));
            }
            s2.slot_s = s.slot_s * value / s.horizon_s;
            s2.horizon_s = value;
        }
        Sweep::ElementCount => {
            s2.m_elements = value.round() as usize;
        }
    }
    s2.validate()?;
    Ok(s2)
}

/// The circle every fixed-flight baseline uses: through the launch point,
/// centered on the BS.
fn baseline_circle(s: &Scenario) -> Result<Trajectory> {
    let radius = ((s.q_init[0] - s.bs_pos[0]).powi(2) + (s.q_init[1] - s.bs_pos[1]).powi(2)).sqrt();
    circular_trajectory(s, radius, s.bs_pos)
}

fn circular_point(s2: &Scenario) -> Result<(Option<f64>, Option<f64>)> {
    let traj = baseline_circle(s2)?;
    let ls = channel::link_state(s2, &traj)?;
    let eval = aligned_eval(s2, &ls);
    let weighted = best_weighted_value(s2, &eval)?;
    let (_, max_min) = fairness::max_min_schedule_lp(s2, &eval.utilities, &eval.rates)?;
    Ok((Some(weighted), Some(max_min)))
}

fn fixed_phase_point(s2: &Scenario, theta0: f64) -> Result<(Option<f64>, Option<f64>)> {
    let traj = baseline_circle(s2)?;
    let eval = fixed_phase_eval(s2, &traj, theta0)?;
    let weighted = best_weighted_value(s2, &eval)?;
    let (_, max_min) = fairness::max_min_schedule_lp(s2, &eval.utilities, &eval.rates)?;
    Ok((Some(weighted), Some(max_min)))
}

fn upper_bound_point(s2: &Scenario) -> Result<(Option<f64>, Option<f64>)> {
    Ok((
        Some(weighted_sum::weighted_sum_upper_bound(s2)?),
        Some(fairness::fairness_upper_bound(s2)?),
    ))
}

/// Evaluates every scheme across the sweep grid.
///
/// Fixed-flight and bound rows are independent across points and run in
/// parallel. The planner rows run in sweep order: each point is solved
/// both from the default initial path and warm-started from the previous
/// point's optimized path, keeping whichever scores better. Warm starts
/// make the proposed curves non-decreasing along axes that only enlarge
/// the feasible set or the gains (element count, duration), while the
/// cold start guarantees each point still dominates the circular baseline
/// it shares an initial path with.
pub fn compare_schemes(
    s: &Scenario,
    schemes: &[Scheme],
    sweep: Sweep,
    values: &[f64],
) -> Result<Vec<ComparisonRow>> {
    s.validate()?;
    let scenarios: Vec<Scenario> = values
        .iter()
        .map(|&v| scenario_at(s, sweep, v))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(schemes.len() * values.len());
    let mut push_rows = |points: Vec<(Option<f64>, Option<f64>)>, scheme: &Scheme| {
        for (&value, (weighted_sum, max_min)) in values.iter().zip(points) {
            rows.push(ComparisonRow {
                sweep: sweep.label().to_string(),
                value,
                scheme: scheme.label(),
                weighted_sum,
                max_min,
            });
        }
    };

    for scheme in schemes {
        match scheme {
            Scheme::Circular => {
                let pts = scenarios
                    .par_iter()
                    .map(|s2| circular_point(s2))
                    .collect::<Result<Vec<_>>>()?;
                push_rows(pts, scheme);
            }
            Scheme::FixedPhase(th) => {
                let pts = scenarios
                    .par_iter()
                    .map(|s2| fixed_phase_point(s2, *th))
                    .collect::<Result<Vec<_>>>()?;
                push_rows(pts, scheme);
            }
            Scheme::UpperBound => {
                let pts = scenarios
                    .par_iter()
                    .map(|s2| upper_bound_point(s2))
                    .collect::<Result<Vec<_>>>()?;
                push_rows(pts, scheme);
            }
            Scheme::ProposedWeightedSum => {
                let mut warm: Option<Trajectory> = None;
                let mut pts = Vec::with_capacity(scenarios.len());
                for s2 in &scenarios {
                    let cold = weighted_sum::run_weighted_sum(s2)?;
                    let best = match warm.take() {
                        Some(t) if t.validate(s2, 1e-9).is_ok() => {
                            let w = weighted_sum::run_weighted_sum_from(s2, t)?;
                            if w.report.objective > cold.report.objective {
                                w
                            } else {
                                cold
                            }
                        }
                        _ => cold,
                    };
                    pts.push((Some(best.report.objective), None));
                    warm = Some(best.trajectory);
                }
                push_rows(pts, scheme);
            }
            Scheme::ProposedFairness => {
                let mut warm: Option<Trajectory> = None;
                let mut pts = Vec::with_capacity(scenarios.len());
                for s2 in &scenarios {
                    let cold = fairness::run_fairness(s2)?;
                    let best = match warm.take() {
                        Some(t) if t.validate(s2, 1e-9).is_ok() => {
                            let w = fairness::run_fairness_from(s2, t)?;
                            if w.report.objective > cold.report.objective {
                                w
                            } else {
                                cold
                            }
                        }
                        _ => cold,
                    };
                    pts.push((None, Some(best.report.objective)));
                    warm = Some(best.trajectory);
                }
                push_rows(pts, scheme);
            }
        }
    }
    Ok(rows)
}

// ──────────────────────────────── tests ─────────────────────────────────
