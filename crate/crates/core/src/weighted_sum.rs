//! Weighted-sum utility planner: alternating optimization of the IRS
//! service schedule and the UAV trajectory.
//!
//! Each round solves the scheduling problem exactly (it separates into one
//! tiny LP per slot, see [`crate::convex::solve_slot_lp`]) and then takes
//! one convexified trajectory step around the current path.  The
//! trajectory step maximizes a concave lower bound of the true objective,
//! so the candidate path is re-evaluated on the exact objective and the
//! previous path is kept when it would not improve; together with the
//! exactness of the scheduling step this makes the reported objective
//! trace non-decreasing.

use std::time::Instant;

use crate::channel::{self, LinkState};
use crate::closed_forms::{self, PhaseSchedule};
use crate::convex::{
    solve_barrier, solve_slot_lp, BarrierParams, BarrierStatus, LogPiece, LogSumTerm,
    QuadOverLinTerm, QuadTerm, SmoothFn, SmoothProgram,
};
use crate::error::Error;
use crate::physical_layer;
use crate::scenario::{Scenario, SolveReport, SolveStatus};
use crate::trajectory::{Schedule, Trajectory};
use crate::Result;

/// Allocations below this are treated as "not scheduled" when building the
/// trajectory subproblem.
pub(crate) const ACTIVE_TOL: f64 = 1e-9;

/// Strict-feasibility backoff applied to the subproblem start (the scaled
/// constraint rows are O(1), so this is a relative nudge of the same size).
const START_MARGIN: f64 = 1e-7;

/// Final operating point of a planner run.
#[derive(Debug, Clone)]
pub struct PlannerSolution {
    pub trajectory: Trajectory,
    pub schedule: Schedule,
    /// Aligning IRS phases on the final trajectory.
    pub phases: PhaseSchedule,
    pub report: SolveReport,
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Objective coefficients and primary rates of one slot's scheduling LP.
pub fn scheduling_inputs(s: &Scenario, ls: &LinkState, n: usize) -> (Vec<f64>, Vec<f64>) {
    let k_irs = s.k_irs();
    let mut gains = Vec::with_capacity(k_irs);
    let mut rates = Vec::with_capacity(k_irs);
    for k in 0..k_irs {
        let gamma = physical_layer::irs_snr(s, ls, n, k);
        gains.push(s.weights[k] * physical_layer::utility(s, gamma));
        rates.push(closed_forms::rate_uk(s, ls, n, k));
    }
    (gains, rates)
}

/// Solves the scheduling problem exactly for a fixed trajectory.
///
/// The problem separates across slots; each slot's LP is maximized over
/// the vertices of its feasible polytope.  The optimum is guaranteed
/// binary whenever each slot's highest-gain IRS alone satisfies the rate
/// floor; otherwise a fractional vertex can win, which is logged along
/// with the offending slots.
pub fn schedule_subproblem(s: &Scenario, ls: &LinkState) -> Result<Schedule> {
    let n_slots = ls.n_slots();
    let mut a = Vec::with_capacity(n_slots);
    let mut fractional: Vec<usize> = Vec::new();
    for n in 0..n_slots {
        let (gains, rates) = scheduling_inputs(s, ls, n);
        let best_rate = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        match solve_slot_lp(&gains, &rates, s.rate_floor) {
            Ok(sol) => {
                if !sol.binary {
                    fractional.push(n);
                }
                a.push(sol.a);
            }
            Err(Error::InfeasibleLp) => {
                return Err(Error::InfeasibleSlot {
                    slot: n,
                    best_rate,
                    threshold: s.rate_floor,
                });
            }
            Err(e) => return Err(e),
        }
    }
    if !fractional.is_empty() {
        log::warn!(
            "{} of {} slots have fractional optimal schedules (first: slot {}); \
             a binary optimum is only guaranteed when each slot's best-gain IRS \
             meets the rate floor on its own",
            fractional.len(),
            n_slots,
            fractional[0]
        );
    }
    Ok(Schedule { a })
}

/// Exact weighted-sum objective: per-slot average of `Σₖ wₖ aₖ F(γₖ)`.
pub fn weighted_objective(s: &Scenario, ls: &LinkState, schedule: &Schedule) -> f64 {
    let n_slots = ls.n_slots();
    let mut total = 0.0;
    for n in 0..n_slots {
        for k in 0..s.k_irs() {
            let a = schedule.a[n][k];
            if a > 0.0 {
                let gamma = physical_layer::irs_snr(s, ls, n, k);
                total += s.weights[k] * a * physical_layer::utility(s, gamma);
            }
        }
    }
    total / n_slots as f64
}

/// Worst-slot slack of the scheduled primary rate against the floor:
/// `min_n (Σₖ aₖRₖ − R_th)`. Non-negative iff the point is rate-feasible.
pub fn min_rate_margin(s: &Scenario, ls: &LinkState, schedule: &Schedule) -> f64 {
    let mut worst = f64::INFINITY;
    for n in 0..ls.n_slots() {
        let mut scheduled = 0.0;
        for k in 0..s.k_irs() {
            let a = schedule.a[n][k];
            if a > 0.0 {
                scheduled += a * closed_forms::rate_uk(s, ls, n, k);
            }
        }
        worst = worst.min(scheduled - s.rate_floor);
    }
    worst
}

/// One scheduled IRS/slot pair inside the trajectory subproblem, with its
/// variable indices and the expansion-point scales that keep the scaled
/// variables near 1.
pub(crate) struct SlotVars {
    pub k: usize,
    pub slot: usize,
    pub a: f64,
    /// Scaled IRS-link gain bound ẑ₁ (true z₁ = ẑ₁·β₁_prev).
    pub z1: usize,
    /// Scaled cross term ẑ₂ (true z₂ = ẑ₂·√(β₁β₃)_prev). Only the rate
    /// rows read it, so it exists only when the rate floor is active:
    /// otherwise it and the cone tying it to ẑ₁/ẑ₃ would be pure dead
    /// weight with a degenerate centering direction (ẑ₂, ẑ₃ → 0) that
    /// stalls the barrier solve.
    pub z2: Option<usize>,
    pub beta1_prev: f64,
    /// Secondary SNR per unit ẑ₁: (c₁+c₃)·β₁_prev/σ².
    pub snr_coeff: f64,
}

/// Shared structure of the convexified trajectory subproblem: variables,
/// start point, and the constraints common to both planners (mobility,
/// gain lower bounds, the cross-term cone, and the per-slot rate floor).
pub(crate) struct TrajCore {
    pub n_vars: usize,
    pub pairs: Vec<SlotVars>,
    pub constraints: Vec<Box<dyn SmoothFn>>,
    pub x0: Vec<f64>,
}

/// Either a free waypoint's variable pair or a pinned endpoint.
enum Pos {
    Free(usize, usize),
    Fixed([f64; 2]),
}

/// Builds the trajectory subproblem skeleton around the previous path.
pub(crate) fn build_traj_core(
    s: &Scenario,
    ls: &LinkState,
    schedule: &Schedule,
    prev: &Trajectory,
) -> TrajCore {
    let n = s.n_slots();
    let sigma2 = s.noise_power_w;
    let p_over_s2 = s.tx_power_w / sigma2;

    // Variable layout: interior waypoints first, then per-slot ẑ₃ and the
    // per-pair (ẑ₁, ẑ₂) blocks in slot order. The direct-link and
    // cross-term variables only feed the rate rows, so without a rate
    // floor the layout shrinks to waypoints plus one ẑ₁ per pair.
    let with_rate = s.rate_floor > 0.0;
    let wp_vars = 2 * (n - 1);
    let mut next = wp_vars;
    let mut z3: Vec<Option<usize>> = vec![None; n];
    let mut pairs: Vec<SlotVars> = Vec::new();
    for slot in 0..n {
        let active: Vec<usize> = (0..s.k_irs())
            .filter(|&k| schedule.a[slot][k] > ACTIVE_TOL)
            .collect();
        if active.is_empty() {
            continue;
        }
        if with_rate {
            z3[slot] = Some(next);
            next += 1;
        }
        for k in active {
            let beta1_prev = ls.beta1[slot][k];
            let z1 = next;
            next += 1;
            let z2 = with_rate.then(|| {
                next += 1;
                next - 1
            });
            pairs.push(SlotVars {
                k,
                slot,
                a: schedule.a[slot][k],
                z1,
                z2,
                beta1_prev,
                snr_coeff: (ls.c1[k] + ls.c3[k]) * beta1_prev / sigma2,
            });
        }
    }
    let n_vars = next;

    let pos_of_waypoint = |wp: usize| -> Pos {
        if wp == 0 {
            Pos::Fixed(s.q_init)
        } else if wp == n {
            Pos::Fixed(s.q_final)
        } else {
            Pos::Free(2 * (wp - 1), 2 * wp - 1)
        }
    };
    let slot_pos = |slot: usize| pos_of_waypoint(slot + 1);

    let mut constraints: Vec<Box<dyn SmoothFn>> = Vec::new();

    // Mobility: ‖q_w − q_{w−1}‖² ≤ (V·δ)², scaled by the right-hand side.
    let speed_cap_sq = (s.v_max * s.slot_s).powi(2);
    for step in 1..=n {
        let pa = pos_of_waypoint(step - 1);
        let pb = pos_of_waypoint(step);
        let inv = 1.0 / speed_cap_sq;
        let mut quad = Vec::new();
        let mut lin = Vec::new();
        let mut offset = -1.0;
        for axis in 0..2 {
            match (&pa, &pb) {
                (Pos::Free(ax, ay), Pos::Free(bx, by)) => {
                    let (ia, ib) = if axis == 0 { (*ax, *bx) } else { (*ay, *by) };
                    quad.push((ia, ia, inv));
                    quad.push((ib, ib, inv));
                    quad.push((ia, ib, -2.0 * inv));
                }
                (Pos::Fixed(c), Pos::Free(bx, by)) | (Pos::Free(bx, by), Pos::Fixed(c)) => {
                    let ib = if axis == 0 { *bx } else { *by };
                    let cv = c[axis];
                    quad.push((ib, ib, inv));
                    lin.push((ib, -2.0 * cv * inv));
                    offset += cv * cv * inv;
                }
                (Pos::Fixed(c0), Pos::Fixed(c1)) => {
                    offset += (c1[axis] - c0[axis]).powi(2) * inv;
                }
            }
        }
        constraints.push(Box::new(QuadTerm { quad, lin, offset }));
    }

    // Concave gain lower bounds, written in scaled form.  The true gain
    // β(q) = β₀/(‖q − site‖² + h²)^(α/2) is convex in u = ‖q − site‖², so
    // it dominates its tangent at the expansion point:
    //   β(q) ≥ β_prev − (α·β_prev / (2·d_prev²))·(u − u_prev),
    // and z ≤ tangent stays a convex quadratic row in q.
    let gain_bound_row = |z_idx: usize,
                          pos: &Pos,
                          site: [f64; 2],
                          alpha: f64,
                          d_prev_sq: f64,
                          u_prev: f64|
     -> Box<dyn SmoothFn> {
        let b_hat = alpha / (2.0 * d_prev_sq); // B/β_prev in scaled units
        let mut quad = Vec::new();
        let mut lin = Vec::new();
        let mut offset = -1.0 - b_hat * u_prev;
        lin.push((z_idx, 1.0));
        match pos {
            Pos::Free(x, y) => {
                for (idx, c) in [(*x, site[0]), (*y, site[1])] {
                    quad.push((idx, idx, b_hat));
                    lin.push((idx, -2.0 * c * b_hat));
                    offset += c * c * b_hat;
                }
            }
            Pos::Fixed(q) => {
                offset += b_hat * dist2(*q, site);
            }
        }
        Box::new(QuadTerm { quad, lin, offset })
    };

    let h1_sq = (s.uav_height - s.irs_height).powi(2);
    let h3_sq = (s.uav_height - s.bs_height).powi(2);
    for pair in &pairs {
        let pos = slot_pos(pair.slot);
        let site = s.irs_pos[pair.k];
        let d_prev_sq = ls.d1[pair.slot][pair.k].powi(2);
        let u_prev = d_prev_sq - h1_sq;
        constraints.push(gain_bound_row(
            pair.z1, &pos, site, s.alpha1, d_prev_sq, u_prev,
        ));
    }
    for slot in 0..n {
        if let Some(z3_idx) = z3[slot] {
            let pos = slot_pos(slot);
            let d_prev_sq = ls.d3[slot].powi(2);
            let u_prev = d_prev_sq - h3_sq;
            constraints.push(gain_bound_row(
                z3_idx, &pos, s.bs_pos, s.alpha3, d_prev_sq, u_prev,
            ));
        }
    }

    // Cross-term cone ẑ₂² / ẑ₃ ≤ ẑ₁ (scale-invariant: the true cone
    // z₂² ≤ z₁·z₃ divides through by the expansion-point scales).
    for pair in &pairs {
        let Some(z2_idx) = pair.z2 else { continue };
        constraints.push(Box::new(QuadOverLinTerm {
            num: z2_idx,
            den: z3[pair.slot].expect("scheduled slot has a direct-gain bound"),
            slack: pair.z1,
        }));
    }

    // Per-slot rate floor on the scheduled primary rate, in terms of the
    // gain bounds (a lower bound of the true rate, so feasibility here
    // implies feasibility of the true constraint).
    if s.rate_floor > 0.0 {
        for slot in 0..n {
            let Some(z3_idx) = z3[slot] else { continue };
            let beta3_prev = ls.beta3[slot];
            let c3_hat = p_over_s2 * beta3_prev;
            let mut logs = Vec::new();
            let mut a_sum = 0.0;
            for pair in pairs.iter().filter(|p| p.slot == slot) {
                a_sum += pair.a;
                let c1_hat = p_over_s2 * (ls.c1[pair.k] + ls.c3[pair.k]) * pair.beta1_prev;
                let c2_hat = p_over_s2 * ls.c2[pair.k] * (pair.beta1_prev * beta3_prev).sqrt();
                let z2_idx = pair
                    .z2
                    .expect("cross terms exist when the rate floor is active");
                logs.push(LogPiece {
                    weight: s.rho * pair.a,
                    inner: 1.0,
                    coeffs: vec![(pair.z1, c1_hat), (z2_idx, c2_hat), (z3_idx, c3_hat)],
                });
            }
            logs.push(LogPiece {
                weight: (1.0 - s.rho) * a_sum,
                inner: 1.0,
                coeffs: vec![(z3_idx, c3_hat)],
            });
            constraints.push(Box::new(LogSumTerm {
                base: s.rate_floor,
                lin: vec![],
                logs,
            }));
        }
    }

    // Start point: nudge the previous path toward the (strictly feasible)
    // straight chord so tight mobility steps move off the boundary, then
    // back the gain bounds off by the same margin.
    let chord = Trajectory::line(s.q_init, s.q_final, n);
    let blend = 1e-7;
    let mut x0 = vec![0.0; n_vars];
    for wp in 1..n {
        let p = prev.points[wp];
        let c = chord.points[wp];
        x0[2 * (wp - 1)] = (1.0 - blend) * p[0] + blend * c[0];
        x0[2 * wp - 1] = (1.0 - blend) * p[1] + blend * c[1];
    }
    let point_at = |pos: &Pos, x: &[f64]| -> [f64; 2] {
        match pos {
            Pos::Free(ix, iy) => [x[*ix], x[*iy]],
            Pos::Fixed(q) => *q,
        }
    };
    for slot in 0..n {
        if let Some(z3_idx) = z3[slot] {
            let q0 = point_at(&slot_pos(slot), &x0);
            let d_prev_sq = ls.d3[slot].powi(2);
            let b_hat = s.alpha3 / (2.0 * d_prev_sq);
            let u_prev = d_prev_sq - h3_sq;
            x0[z3_idx] = 1.0 + b_hat * (u_prev - dist2(q0, s.bs_pos)) - START_MARGIN;
        }
    }
    for pair in &pairs {
        let q0 = point_at(&slot_pos(pair.slot), &x0);
        let d_prev_sq = ls.d1[pair.slot][pair.k].powi(2);
        let b_hat = s.alpha1 / (2.0 * d_prev_sq);
        let u_prev = d_prev_sq - h1_sq;
        x0[pair.z1] = 1.0 + b_hat * (u_prev - dist2(q0, s.irs_pos[pair.k])) - START_MARGIN;
        if let Some(z2_idx) = pair.z2 {
            let z3_val = x0[z3[pair.slot].unwrap()];
            x0[z2_idx] = (1.0 - START_MARGIN) * (x0[pair.z1].max(0.0) * z3_val.max(0.0)).sqrt();
        }
    }

    TrajCore {
        n_vars,
        pairs,
        constraints,
        x0,
    }
}

/// Extracts the optimized path from a subproblem solution vector.
pub(crate) fn extract_trajectory(s: &Scenario, x: &[f64]) -> Trajectory {
    let n = s.n_slots();
    let mut points = Vec::with_capacity(n + 1);
    points.push(s.q_init);
    for wp in 1..n {
        points.push([x[2 * (wp - 1)], x[2 * wp - 1]]);
    }
    points.push(s.q_final);
    Trajectory { points }
}

/// True when the endpoints use up the whole speed budget, leaving no room
/// to optimize the path (or there are no interior waypoints at all).
pub(crate) fn path_is_forced(s: &Scenario) -> bool {
    let n = s.n_slots();
    let reach = dist2(s.q_init, s.q_final).sqrt();
    n < 2 || reach >= (n as f64) * s.v_max * s.slot_s * (1.0 - 1e-12)
}

/// One convexified trajectory step for the weighted-sum objective.
///
/// Maximizes the concave surrogate of the per-slot average utility around
/// `prev` subject to mobility, the gain-bound system, and the per-slot
/// rate floor, then re-evaluates the exact objective: the returned path is
/// never worse than `prev` (on a line-search stall or a surrogate
/// mismatch, `prev` itself is returned).
pub fn trajectory_subproblem(
    s: &Scenario,
    ls: &LinkState,
    schedule: &Schedule,
    prev: &Trajectory,
) -> Result<Trajectory> {
    if path_is_forced(s) {
        return Ok(prev.clone());
    }
    let core = build_traj_core(s, ls, schedule, prev);
    if core.pairs.is_empty() {
        return Ok(prev.clone());
    }

    let n_slots = s.n_slots() as f64;
    let prefactor = s.utility_prefactor();
    let logs = core
        .pairs
        .iter()
        .map(|pair| LogPiece {
            weight: s.weights[pair.k] * pair.a / n_slots,
            inner: 1.0,
            coeffs: vec![(pair.z1, prefactor * pair.snr_coeff)],
        })
        .collect();
    let objective = Box::new(LogSumTerm {
        base: 0.0,
        lin: vec![],
        logs,
    });

    let prog = SmoothProgram {
        n: core.n_vars,
        objective,
        constraints: core.constraints,
        equalities: vec![],
    };
    let mut params = BarrierParams::from_algo(&s.algo);
    params.gap_tol = s.algo.sca_tol;
    let sol = solve_barrier(&prog, &core.x0, &params)?;
    if sol.status == BarrierStatus::LineSearchStall {
        // Barrier iterates stay strictly feasible, so a stalled solve still
        // yields a usable candidate; the exact-objective screen below decides.
        log::debug!("trajectory solve stalled; screening the partial iterate");
    }
    let cand = extract_trajectory(s, &sol.x);
    let ls_cand = channel::link_state(s, &cand)?;
    if weighted_objective(s, &ls_cand, schedule) >= weighted_objective(s, ls, schedule) {
        Ok(cand)
    } else {
        log::debug!("surrogate optimum scores below the expansion point; keeping path");
        Ok(prev.clone())
    }
}

/// Initial path for the planners: one counterclockwise loop around the BS
/// through the launch point when the mission starts and ends at the same
/// place, otherwise the straight chord between the endpoints.
pub fn initial_trajectory(s: &Scenario) -> Trajectory {
    let n = s.n_slots();
    if dist2(s.q_init, s.q_final).sqrt() < 1e-9 {
        let radius = dist2(s.q_init, s.bs_pos).sqrt();
        if radius > 1e-9 {
            if let Ok(t) = crate::benchmarks::circular_trajectory(s, radius, s.bs_pos) {
                return t;
            }
        }
    }
    Trajectory::line(s.q_init, s.q_final, n)
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::InfeasibleStart { .. } | Error::Solver(_) | Error::NonConverged(_)
    )
}

/// Runs the full weighted-sum planner from the default initial path.
///
/// The objective trace is exactly non-decreasing and every iterate is
/// rate-feasible; the loop stops when the fractional objective increase
/// falls below `algo.eps1` or after `algo.r_max` rounds.
pub fn run_weighted_sum(s: &Scenario) -> Result<PlannerSolution> {
    run_weighted_sum_from(s, initial_trajectory(s))
}

/// [`run_weighted_sum`] from a caller-supplied feasible initial path
/// (sweep harnesses warm-start consecutive points with it).
pub fn run_weighted_sum_from(s: &Scenario, init: Trajectory) -> Result<PlannerSolution> {
    s.validate()?;
    init.validate(s, 1e-6)?;
    let started = Instant::now();
    let mut traj = init;
    let mut ls = channel::link_state(s, &traj)?;

    // Relaxed uniform start; the first scheduling step replaces it.
    let mut schedule = Schedule::uniform(s.n_slots(), s.k_irs());
    let mut objective_trace = Vec::new();
    let mut margin_trace = Vec::new();
    let mut status = SolveStatus::IterationCap;
    let mut iterations = 0;
    let mut prev_obj = f64::NEG_INFINITY;

    for round in 1..=s.algo.r_max {
        iterations = round;
        schedule = schedule_subproblem(s, &ls)?;

        match trajectory_subproblem(s, &ls, &schedule, &traj) {
            Ok(next) => {
                if next != traj {
                    ls = channel::link_state(s, &next)?;
                    traj = next;
                }
            }
            Err(e) if recoverable(&e) => {
                log::warn!("round {round}: trajectory step failed ({e}); keeping path");
            }
            Err(e) => return Err(e),
        }

        let obj = weighted_objective(s, &ls, &schedule);
        objective_trace.push(obj);
        margin_trace.push(min_rate_margin(s, &ls, &schedule));

        if round > 1 && obj - prev_obj <= s.algo.eps1 * prev_obj.abs().max(1e-12) {
            status = SolveStatus::Converged;
            break;
        }
        prev_obj = obj;
    }

    let objective = *objective_trace.last().expect("at least one round ran");
    let phases = closed_forms::optimal_phases(s, &ls)?;
    let report = SolveReport {
        status,
        iterations,
        outer_iterations: 0,
        objective,
        objective_trace,
        outer_trace: Vec::new(),
        min_rate_margin_trace: margin_trace,
        xi_final: schedule.binariness_gap(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(PlannerSolution {
        trajectory: traj,
        schedule,
        phases,
        report,
    })
}

/// Closed-form upper bound on the weighted-sum objective: the most
/// favorable IRS served in every slot from directly overhead (the smallest
/// possible UAV–IRS distance), ignoring mobility and the rate floor.
/// Valid because the weights are confined to [0, 1].
pub fn weighted_sum_upper_bound(s: &Scenario) -> Result<f64> {
    let ls = channel::link_state(s, &Trajectory::stationary(s.q_init, s.n_slots()))?;
    let h_sq = (s.uav_height - s.irs_height).powi(2);
    let beta1_max = channel::gain_from_dist_sq(s.ref_gain, h_sq, s.alpha1);
    let mut best = 0.0_f64;
    for k in 0..s.k_irs() {
        let gamma_max = (ls.c1[k] + ls.c3[k]) * beta1_max / s.noise_power_w;
        best = best.max(physical_layer::utility(s, gamma_max));
    }
    Ok(best)
}
