//! End-to-end acceptance suite: nine numbered criteria covering phase
//! alignment, the primary-rate bound, the energy detector, scheduling
//! binariness, both planners, scheme ordering, the convex solvers, and the
//! fairness upper bound.
//!
//! Each test prints exactly one `criterion N (...): PASS|FAIL [...]` line
//! (visible with `--nocapture`) before asserting, so a red run names the
//! offending criterion directly. Every randomized check draws from a fixed
//! seed substream and is fully deterministic.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;

use uav_irs_core::benchmarks::{compare_schemes, default_schemes, ComparisonRow, Scheme, Sweep};
use uav_irs_core::channel::{
    domain, gain_from_dist_sq, link_state, sample_channels, substream, LinkState,
};
use uav_irs_core::closed_forms::{
    combining_factor, optimal_phases, rate_uk, x0_sq_for_phases, x0_sq_opt,
};
use uav_irs_core::convex::{
    solve_lp, solve_qp, solve_slot_lp, Cmp, LinearProgram, QuadraticProgram,
};
use uav_irs_core::fairness::{fairness_upper_bound, run_fairness};
use uav_irs_core::physical_layer::{
    ber_closed_form, ber_monte_carlo, primary_rate_bound, primary_rate_exact, utility,
};
use uav_irs_core::scenario::{default_scenario, SolveStatus};
use uav_irs_core::trajectory::{Schedule, Trajectory};
use uav_irs_core::weighted_sum::{
    run_weighted_sum, scheduling_inputs, trajectory_subproblem, weighted_objective,
};
use uav_irs_core::{Error, Result, Scenario};

/// Prints the one-line verdict for a criterion, then asserts it.
fn report(n: u32, name: &str, pass: bool, started: Instant, detail: &str) {
    let line = format!(
        "criterion {n} ({name}): {} [{:.2}s] {detail}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
    );
    println!("{line}");
    assert!(pass, "{line}");
}

fn within(started: Instant, budget_s: f64) -> bool {
    started.elapsed().as_secs_f64() < budget_s
}

/// Single-slot scenario with the UAV hovering at a random spot and the
/// reflectors scattered around it; radio constants come from the defaults.
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

/// Criterion 1: on random geometries the aligning phases reach the
/// coherent-combining cap `|combining| = M`, and the induced mean-channel
/// power matches its closed form.
#[test]
fn criterion_1_phase_alignment() {
    let started = Instant::now();
    let s = default_scenario();
    let mut worst_combo = 0.0_f64;
    let mut worst_power = 0.0_f64;
    for t in 0..50 {
        let (s2, ls) = random_geometry(&s, t).unwrap();
        let phases = optimal_phases(&s2, &ls).unwrap();
        let m = s2.m_elements as f64;
        for k in 0..s2.k_irs() {
            let theta = &phases.theta[0][k];
            let combo = combining_factor(&s2, &ls, 0, k, theta).unwrap();
            worst_combo = worst_combo.max((combo.norm() - m).abs() / m);
            let first_principles = x0_sq_for_phases(&s2, &ls, 0, k, theta).unwrap();
            let closed = x0_sq_opt(&s2, &ls, 0, k);
            worst_power = worst_power.max((first_principles - closed).abs() / closed);
        }
    }
    let pass = worst_combo <= 1e-9 && worst_power <= 1e-9 && within(started, 1.0);
    report(
        1,
        "phase alignment",
        pass,
        started,
        &format!(
            "50 geometries x 5 reflectors: combining defect {worst_combo:.2e}, \
             mean-power mismatch {worst_power:.2e} (cap 1e-9, budget 1 s)"
        ),
    );
}

/// Criterion 2: the Monte-Carlo mean of the exact per-draw primary rate
/// stays below the moment bound, within three standard errors, on 20
/// random configurations of 1e4 fading draws each.
#[test]
fn criterion_2_rate_bound() {
    let started = Instant::now();
    let s = default_scenario();
    let draws = 10_000usize;
    let mut worst_z = f64::NEG_INFINITY;
    for t in 0..20 {
        let (s2, ls) = random_geometry(&s, 1_000 + t).unwrap();
        let k = t as usize % s2.k_irs();
        let phases = optimal_phases(&s2, &ls).unwrap();
        let theta = &phases.theta[0][k];
        let mut rng = substream(s2.rng_seed, domain::CHANNEL, t, 0);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let draw = sample_channels(&s2, &ls, 0, k, &mut rng).unwrap();
            let rate = primary_rate_exact(&s2, &draw.h1, &draw.h2, draw.h3, theta).unwrap();
            sum += rate;
            sum_sq += rate * rate;
        }
        let n = draws as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        let se = (var / n).sqrt();
        let bound = primary_rate_bound(
            &s2,
            x0_sq_opt(&s2, &ls, 0, k),
            ls.beta1[0][k],
            ls.beta2[k],
            ls.beta3[0],
        );
        worst_z = worst_z.max((mean - bound) / se);
    }
    let pass = worst_z <= 3.0 && within(started, 30.0);
    report(
        2,
        "primary-rate bound",
        pass,
        started,
        &format!(
            "20 configurations x {draws} draws: worst (mean - bound)/se = {worst_z:.3} \
             (cap 3.0, budget 30 s)"
        ),
    );
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

/// Criterion 3: the Gaussian-approximation error rate matches a
/// symbol-level detector simulation of 1e5 symbols at operating points
/// spanning error rates from 2e-3 to 0.25.
#[test]
fn criterion_3_detector_error_rate() {
    let started = Instant::now();
    let s = default_scenario();
    let symbols = 100_000usize;
    let targets = [0.25, 0.1, 0.05, 0.01, 2e-3];
    let mut worst_z = f64::NEG_INFINITY;
    let mut in_range = true;
    for (i, &target) in targets.iter().enumerate() {
        let g = gain_for_target_ber(&s, target);
        let closed = ber_closed_form(g, s.noise_power_w, s.tx_power_w, s.l_samples);
        in_range &= (1e-3..=0.3).contains(&closed);
        let mut rng = substream(s.rng_seed, domain::DETECTOR, 100 + i as u64, 0);
        let mc = ber_monte_carlo(
            g,
            s.noise_power_w,
            s.tx_power_w,
            s.l_samples,
            s.rho,
            symbols,
            &mut rng,
        )
        .unwrap();
        let se = (closed * (1.0 - closed) / symbols as f64).sqrt();
        worst_z = worst_z.max((mc - closed).abs() / se);
    }
    let pass = worst_z <= 3.0 && in_range && within(started, 60.0);
    report(
        3,
        "detector error rate",
        pass,
        started,
        &format!(
            "{} operating points x {symbols} symbols (L={}): worst |mc - closed|/se = \
             {worst_z:.3} (cap 3.0, budget 60 s)",
            targets.len(),
            s.l_samples
        ),
    );
}

/// Criterion 4: across randomized feasible instances the relaxed per-slot
/// scheduling LP lands on binary vertices; any fractional optimum must be
/// forced by the rate floor (the best-gain reflector alone misses it).
#[test]
fn criterion_4_schedule_binariness() {
    let started = Instant::now();
    let base = default_scenario();
    let instances = 120u64;
    let mut fractional = 0usize;
    let mut unexplained = 0usize;
    for i in 0..instances {
        let mut rng = substream(base.rng_seed, domain::VERIFY, 10_000 + i, 0);
        let mut s2 = base.clone();
        s2.horizon_s = s2.slot_s;
        let k_irs = rng.random_range(2..=6usize);
        s2.irs_pos = (0..k_irs)
            .map(|_| [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)])
            .collect();
        s2.weights = (0..k_irs).map(|_| rng.random_range(0.25..1.0)).collect();
        s2.m_elements = rng.random_range(20..=64usize);
        s2.q_init = [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)];
        s2.q_final = s2.q_init;
        s2.validate().unwrap();
        let traj = Trajectory::stationary(s2.q_init, s2.n_slots());
        let ls = link_state(&s2, &traj).unwrap();
        let (gains, rates) = scheduling_inputs(&s2, &ls, 0);
        let best_rate = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let floor = rng.random_range(0.2..0.95) * best_rate;
        let sol = solve_slot_lp(&gains, &rates, floor).unwrap();
        let gap = sol
            .a
            .iter()
            .map(|&a| a.abs().min((a - 1.0).abs()))
            .fold(0.0_f64, f64::max);
        if gap > 1e-6 {
            fractional += 1;
            let k_star = (0..k_irs)
                .max_by(|&a, &b| gains[a].total_cmp(&gains[b]))
                .unwrap();
            let forced = rates[k_star] < floor;
            if !forced {
                unexplained += 1;
            }
            println!(
                "instance {i}: fractional optimum {:?}; best-gain reflector {k_star} \
                 has rate {:.6} vs floor {:.6} -> {}",
                sol.a,
                rates[k_star],
                floor,
                if forced {
                    "floor forces time-sharing"
                } else {
                    "unexplained (solver defect)"
                }
            );
        }
    }
    let pass = unexplained == 0 && within(started, 10.0);
    report(
        4,
        "schedule binariness",
        pass,
        started,
        &format!(
            "{instances} feasible instances: {} binary at 1e-6, {fractional} fractional \
             ({unexplained} unexplained; budget 10 s)",
            instances as usize - fractional
        ),
    );
}

/// Criterion 5: the weighted-sum planner's objective trace rises
/// monotonically, converges within ten rounds, and every recorded iterate
/// respects the per-slot rate floor.
#[test]
fn criterion_5_weighted_sum_planner() {
    let started = Instant::now();
    let s = default_scenario().coarse().unwrap();
    let sol = run_weighted_sum(&s).unwrap();
    let trace = &sol.report.objective_trace;

    let monotone = trace.windows(2).all(|w| w[1] >= w[0] - 1e-8);
    let converged_round = (1..trace.len())
        .find(|&i| (trace[i] - trace[i - 1]).abs() / trace[i - 1].abs().max(1e-12) < 1e-3)
        .map(|i| i + 1)
        .unwrap_or(trace.len().max(1));
    let feasible = sol.report.min_rate_margin_trace.iter().all(|&m| m >= -1e-9);
    let pass = matches!(sol.report.status, SolveStatus::Converged)
        && monotone
        && converged_round <= 10
        && feasible
        && within(started, 300.0);
    report(
        5,
        "weighted-sum planner",
        pass,
        started,
        &format!(
            "trace of {} rounds: monotone={monotone}, converged at round {converged_round} \
             (cap 10), worst rate margin {:.2e} (floor -1e-9; budget 5 min)",
            trace.len(),
            sol.report
                .min_rate_margin_trace
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        ),
    );
}

/// Criterion 6: the fairness planner drives the binariness violation below
/// 1e-10 and ends on an exactly binary schedule that still meets the
/// per-slot rate floor.
#[test]
fn criterion_6_fairness_planner() {
    let started = Instant::now();
    let s = default_scenario().coarse().unwrap();
    let sol = run_fairness(&s).unwrap();

    let xi = sol.report.xi_final;
    let binary = sol
        .schedule
        .a
        .iter()
        .flatten()
        .all(|&a| a == 0.0 || a == 1.0);
    let ls = link_state(&s, &sol.trajectory).unwrap();
    let mut worst_margin = f64::INFINITY;
    for n in 0..s.n_slots() {
        let scheduled: f64 = (0..s.k_irs())
            .map(|k| sol.schedule.a[n][k] * rate_uk(&s, &ls, n, k))
            .sum();
        worst_margin = worst_margin.min(scheduled - s.rate_floor);
    }
    let pass = xi <= 1e-10 && binary && worst_margin >= -1e-9 && within(started, 600.0);
    report(
        6,
        "fairness planner",
        pass,
        started,
        &format!(
            "violation {xi:.2e} (cap 1e-10), binary={binary}, worst binary rate margin \
             {worst_margin:.3e} (floor -1e-9; budget 10 min)"
        ),
    );
}

type SchemeTable = HashMap<(String, u64), (Option<f64>, Option<f64>)>;

fn scheme_table(rows: &[ComparisonRow]) -> SchemeTable {
    rows.iter()
        .map(|r| {
            (
                (r.scheme.clone(), r.value.to_bits()),
                (r.weighted_sum, r.max_min),
            )
        })
        .collect()
}

fn ws_at(t: &SchemeTable, scheme: &Scheme, v: f64) -> f64 {
    t[&(scheme.label(), v.to_bits())].0.unwrap()
}

fn mm_at(t: &SchemeTable, scheme: &Scheme, v: f64) -> f64 {
    t[&(scheme.label(), v.to_bits())].1.unwrap()
}

/// `a >= b` up to a 1e-9 relative slack.
fn ge(a: f64, b: f64) -> bool {
    a >= b - 1e-9 * b.abs().max(1.0)
}

/// Criterion 7: scheme ordering (upper bound >= proposed >= circular >=
/// fixed phase) holds for both objectives at every sweep point; the
/// coherent schemes improve monotonically with the element count; the
/// circular fairness utility is flat across mission durations.
#[test]
fn criterion_7_scheme_ordering() {
    let started = Instant::now();
    let s = default_scenario().coarse().unwrap();
    let schemes = default_schemes(PI);
    let (ub, wsb, fair, circ, fixed) = (
        &Scheme::UpperBound,
        &Scheme::ProposedWeightedSum,
        &Scheme::ProposedFairness,
        &Scheme::Circular,
        &Scheme::FixedPhase(PI),
    );

    let t_values = Sweep::MissionDuration.default_values();
    let m_values = Sweep::ElementCount.default_values();
    let t_rows = compare_schemes(&s, &schemes, Sweep::MissionDuration, &t_values).unwrap();
    let m_rows = compare_schemes(&s, &schemes, Sweep::ElementCount, &m_values).unwrap();
    let tt = scheme_table(&t_rows);
    let mt = scheme_table(&m_rows);

    let mut ordered = true;
    for (table, values) in [(&tt, &t_values), (&mt, &m_values)] {
        for &v in values.iter() {
            ordered &= ge(ws_at(table, ub, v), ws_at(table, wsb, v))
                && ge(ws_at(table, wsb, v), ws_at(table, circ, v))
                && ge(ws_at(table, circ, v), ws_at(table, fixed, v));
            ordered &= ge(mm_at(table, ub, v), mm_at(table, fair, v))
                && ge(mm_at(table, fair, v), mm_at(table, circ, v))
                && ge(mm_at(table, circ, v), mm_at(table, fixed, v));
        }
    }

    // More reflecting elements mean more coherent beamforming gain, so the
    // phase-aligned schemes must not lose utility as M grows; the
    // fixed-phase baseline has no such guarantee (its combining magnitude
    // oscillates with M), so its trend is reported without being asserted.
    let mono = |col: &dyn Fn(f64) -> f64| m_values.windows(2).all(|w| ge(col(w[1]), col(w[0])));
    let m_monotone = mono(&|v| ws_at(&mt, ub, v))
        && mono(&|v| ws_at(&mt, wsb, v))
        && mono(&|v| ws_at(&mt, circ, v))
        && mono(&|v| mm_at(&mt, ub, v))
        && mono(&|v| mm_at(&mt, fair, v))
        && mono(&|v| mm_at(&mt, circ, v));
    let fixed_trend = if mono(&|v| ws_at(&mt, fixed, v)) && mono(&|v| mm_at(&mt, fixed, v)) {
        "non-decreasing"
    } else {
        "oscillating"
    };

    let circ_mm: Vec<f64> = t_values.iter().map(|&v| mm_at(&tt, circ, v)).collect();
    let spread = circ_mm.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - circ_mm.iter().cloned().fold(f64::INFINITY, f64::min);
    let flat = spread.abs() <= 1e-9;

    let pass = ordered && m_monotone && flat && within(started, 900.0);
    report(
        7,
        "scheme ordering",
        pass,
        started,
        &format!(
            "orderings at {} sweep points: ok={ordered}; coherent schemes monotone in M: \
             {m_monotone}; fixed-phase M-trend {fixed_trend}; circular fairness spread \
             across T = {spread:.2e} (cap 1e-9; budget 15 min)",
            t_values.len() + m_values.len()
        ),
    );
}

/// Exhaustively maximizes `eval` over the feasible two-slot waypoint, with
/// two local refinements around the best coarse cell.
fn grid_max_waypoint(s: &Scenario, eval: &dyn Fn([f64; 2]) -> f64, reach: f64) -> f64 {
    let feasible = |q: [f64; 2]| {
        let da = ((q[0] - s.q_init[0]).powi(2) + (q[1] - s.q_init[1]).powi(2)).sqrt();
        let db = ((q[0] - s.q_final[0]).powi(2) + (q[1] - s.q_final[1]).powi(2)).sqrt();
        da <= reach - 1e-9 && db <= reach - 1e-9
    };
    let mut best = f64::NEG_INFINITY;
    let mut best_q = [0.0, 0.0];
    let scan = |center: [f64; 2], half: f64, step: f64, best: &mut f64, best_q: &mut [f64; 2]| {
        let cells = (2.0 * half / step).round() as i64;
        for ix in 0..=cells {
            for iy in 0..=cells {
                let q = [
                    center[0] - half + ix as f64 * step,
                    center[1] - half + iy as f64 * step,
                ];
                if feasible(q) {
                    let v = eval(q);
                    if v > *best {
                        *best = v;
                        *best_q = q;
                    }
                }
            }
        }
    };
    let mid = [
        0.5 * (s.q_init[0] + s.q_final[0]),
        0.5 * (s.q_init[1] + s.q_final[1]),
    ];
    scan(mid, reach + 0.2, 0.04, &mut best, &mut best_q);
    let anchor = best_q;
    scan(anchor, 0.08, 0.002, &mut best, &mut best_q);
    let anchor = best_q;
    scan(anchor, 0.004, 5e-5, &mut best, &mut best_q);
    best
}

/// Criterion 8: each convex solver agrees with an exhaustive oracle —
/// the trajectory barrier solve and the scheduling QP against dense grid
/// searches on two-variable toys, and the general simplex against the
/// per-slot vertex enumeration.
#[test]
fn criterion_8_solver_oracles() {
    let started = Instant::now();

    // (a) General LP vs the per-slot vertex enumeration on random slots,
    // including infeasible floors, which both must reject.
    let mut rng = substream(1, domain::VERIFY, 30_000, 0);
    let mut lp_gap = 0.0_f64;
    let mut infeasible_agreed = 0usize;
    let mut disagreements = 0usize;
    for _ in 0..50 {
        let k = rng.random_range(1..=6usize);
        let gains: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..5.0)).collect();
        let rates: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..6.0)).collect();
        let best_rate = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let floor = rng.random_range(0.0..1.2) * best_rate;
        let vertex = solve_slot_lp(&gains, &rates, floor);
        let lp = solve_lp(&LinearProgram {
            maximize: true,
            objective: gains.clone(),
            rows: vec![
                (vec![1.0; k], Cmp::Le, 1.0),
                (rates.clone(), Cmp::Ge, floor),
            ],
            bounds: vec![(0.0, f64::INFINITY); k],
        });
        match (vertex, lp) {
            (Ok(v), Ok(l)) => {
                lp_gap = lp_gap.max((v.objective - l.objective).abs() / v.objective.abs().max(1.0));
            }
            (Err(Error::InfeasibleLp), Err(Error::InfeasibleLp)) => infeasible_agreed += 1,
            _ => disagreements += 1,
        }
    }
    let lp_ok = lp_gap <= 1e-12 && disagreements == 0;

    // (b) Penalty-scheduling QP toy (two shares plus the worst-rate
    // epigraph variable) against a two-stage grid search.
    let eta = 0.7;
    let u = [3.0, 5.0];
    let a_bar = [0.3_f64, 0.8];
    let q_diag = vec![2.0 / eta, 2.0 / eta, 0.0];
    let c = vec![
        -(a_bar[0] + a_bar[0].round()) / eta,
        -(a_bar[1] + a_bar[1].round()) / eta,
        -1.0,
    ];
    let qp = solve_qp(&QuadraticProgram {
        q_diag: q_diag.clone(),
        c: c.clone(),
        g: vec![
            vec![-1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![-u[0], 0.0, 1.0],
            vec![0.0, -u[1], 1.0],
        ],
        h: vec![0.0, 0.0, 1.0, 0.0, 0.0],
    })
    .unwrap();
    let qp_value = 0.5 * (q_diag[0] * qp.x[0] * qp.x[0] + q_diag[1] * qp.x[1] * qp.x[1])
        + c[0] * qp.x[0]
        + c[1] * qp.x[1]
        + c[2] * qp.x[2];
    let toy = |a1: f64, a2: f64| {
        let r = (u[0] * a1).min(u[1] * a2);
        0.5 * (q_diag[0] * a1 * a1 + q_diag[1] * a2 * a2) + c[0] * a1 + c[1] * a2 + c[2] * r
    };
    let mut grid_min = f64::INFINITY;
    let mut grid_at = (0.0, 0.0);
    let sweep = |c1: f64, c2: f64, half: f64, step: f64, best: &mut f64, at: &mut (f64, f64)| {
        let cells = (2.0 * half / step).round() as i64;
        for i in 0..=cells {
            for j in 0..=cells {
                let a1 = (c1 - half + i as f64 * step).clamp(0.0, 1.0);
                let a2 = (c2 - half + j as f64 * step).clamp(0.0, 1.0);
                if a1 + a2 <= 1.0 {
                    let v = toy(a1, a2);
                    if v < *best {
                        *best = v;
                        *at = (a1, a2);
                    }
                }
            }
        }
    };
    sweep(0.5, 0.5, 0.5, 1e-3, &mut grid_min, &mut grid_at);
    let anchor = grid_at;
    sweep(anchor.0, anchor.1, 2e-3, 2e-5, &mut grid_min, &mut grid_at);
    let anchor = grid_at;
    sweep(anchor.0, anchor.1, 4e-5, 1e-7, &mut grid_min, &mut grid_at);
    let qp_gap = (qp_value - grid_min).abs();
    let qp_ok = qp_gap <= 1e-4;

    // (c) Barrier trajectory solve on a two-slot, one-reflector toy with a
    // single free waypoint, iterated to its fixed point, against a dense
    // grid over the reachable lens.
    let mut s = default_scenario();
    s.horizon_s = 2.0;
    s.slot_s = 1.0;
    s.irs_pos = vec![[2.0, 6.0]];
    s.weights = vec![1.0];
    s.q_init = [0.0, 0.0];
    s.q_final = [4.0, 0.0];
    s.v_max = 5.0;
    s.rate_floor = 0.0;
    s.validate().unwrap();
    let schedule = Schedule {
        a: vec![vec![1.0]; 2],
    };
    let mut traj = Trajectory::line(s.q_init, s.q_final, 2);
    for _ in 0..200 {
        let ls = link_state(&s, &traj).unwrap();
        let next = trajectory_subproblem(&s, &ls, &schedule, &traj).unwrap();
        let moved = traj
            .points
            .iter()
            .zip(&next.points)
            .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
            .fold(0.0_f64, f64::max);
        traj = next;
        if moved < 1e-10 {
            break;
        }
    }
    let ls = link_state(&s, &traj).unwrap();
    let barrier_value = weighted_objective(&s, &ls, &schedule);
    let eval = |q: [f64; 2]| {
        let t = Trajectory {
            points: vec![s.q_init, q, s.q_final],
        };
        let ls = link_state(&s, &t).unwrap();
        weighted_objective(&s, &ls, &schedule)
    };
    let grid_value = grid_max_waypoint(&s, &eval, s.v_max * s.slot_s);
    let barrier_gap = (barrier_value - grid_value).abs() / grid_value.abs().max(1.0);
    let barrier_ok = barrier_gap <= 1e-4;

    let pass = lp_ok && qp_ok && barrier_ok;
    report(
        8,
        "solver oracles",
        pass,
        started,
        &format!(
            "lp vs vertex enumeration: max gap {lp_gap:.2e} over 50 slots \
             ({infeasible_agreed} infeasible agreed, {disagreements} disagreements); \
             qp vs grid: {qp_gap:.2e}; barrier vs grid: {barrier_gap:.2e} (caps 1e-12/1e-4/1e-4)"
        ),
    );
}

/// Criterion 9: the hover-overhead fairness upper bound LP reproduces the
/// harmonic closed form `1/Σ_k U_k⁻¹` of the equal-time-ratio solution.
#[test]
fn criterion_9_fairness_upper_bound() {
    let started = Instant::now();
    let s = default_scenario();
    let lp = fairness_upper_bound(&s).unwrap();

    let ls = link_state(&s, &Trajectory::stationary(s.q_init, s.n_slots())).unwrap();
    let h_sq = (s.uav_height - s.irs_height).powi(2);
    let beta1_max = gain_from_dist_sq(s.ref_gain, h_sq, s.alpha1);
    let harmonic = 1.0
        / (0..s.k_irs())
            .map(|k| 1.0 / utility(&s, (ls.c1[k] + ls.c3[k]) * beta1_max / s.noise_power_w))
            .sum::<f64>();
    let gap = (lp - harmonic).abs() / harmonic.abs().max(1.0);
    let pass = gap <= 1e-9;
    report(
        9,
        "fairness upper bound",
        pass,
        started,
        &format!("LP {lp:.12} vs harmonic form {harmonic:.12}: relative gap {gap:.2e} (cap 1e-9)"),
    );
}
