//! Log-barrier Newton method for smooth convex programs.
//!
//! The trajectory subproblems are smooth convex programs of moderate size
//! (a few hundred to a couple of thousand variables): minimize a smooth
//! convex objective subject to smooth convex inequalities `gᵢ(x) ≤ 0` and
//! linear equalities `Ax = b`.  This module solves them with the classic
//! path-following scheme: damped Newton centering on
//! `f₀(x) + μ Σᵢ −ln(−gᵢ(x))`, shrinking μ geometrically until the duality
//! gap bound `m·μ` is below tolerance.
//!
//! Functions enter through the [`SmoothFn`] trait, which exposes values,
//! sparse gradients, and Hessian contributions; the concrete terms needed
//! by the planners (affine, quadratic, quadratic-over-linear, and
//! log-of-affine sums) are provided here.  Starts on or outside the
//! boundary are repaired by a phase-I program that minimizes the worst
//! constraint value; an empty interior surfaces as
//! [`Error::InfeasibleStart`].

use nalgebra::DMatrix;

use crate::error::Error;
use crate::scenario::AlgoParams;
use crate::Result;

const LN_2: f64 = std::f64::consts::LN_2;

/// A smooth convex function of the solver variables.
///
/// Implementations must be convex on their domain and return `+∞` from
/// [`SmoothFn::value`] outside it; gradients and Hessians are only queried
/// at points with finite value.
pub trait SmoothFn: Send + Sync {
    /// Function value, `f64::INFINITY` outside the domain.
    fn value(&self, x: &[f64]) -> f64;
    /// Appends `(index, ∂f/∂xᵢ)` pairs; indices may repeat and are summed.
    fn push_grad(&self, x: &[f64], out: &mut Vec<(usize, f64)>);
    /// Adds `scale · ∇²f(x)` into a dense Hessian accumulator.
    fn add_hess(&self, x: &[f64], scale: f64, out: &mut DMatrix<f64>);
}

/// Affine function `offset + Σ coeffs·x`.
#[derive(Debug, Clone)]
pub struct LinearTerm {
    pub coeffs: Vec<(usize, f64)>,
    pub offset: f64,
}

impl SmoothFn for LinearTerm {
    fn value(&self, x: &[f64]) -> f64 {
        self.offset + self.coeffs.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    fn push_grad(&self, _x: &[f64], out: &mut Vec<(usize, f64)>) {
        out.extend_from_slice(&self.coeffs);
    }

    fn add_hess(&self, _x: &[f64], _scale: f64, _out: &mut DMatrix<f64>) {}
}

/// Quadratic function `offset + Σ lin·x + Σ c·xᵢxⱼ` (convexity is the
/// builder's responsibility).
#[derive(Debug, Clone)]
pub struct QuadTerm {
    /// Terms `c·xᵢ·xⱼ` as `(i, j, c)`; diagonal entries use `i == j`.
    pub quad: Vec<(usize, usize, f64)>,
    pub lin: Vec<(usize, f64)>,
    pub offset: f64,
}

impl SmoothFn for QuadTerm {
    fn value(&self, x: &[f64]) -> f64 {
        let q: f64 = self.quad.iter().map(|&(i, j, c)| c * x[i] * x[j]).sum();
        let l: f64 = self.lin.iter().map(|&(i, c)| c * x[i]).sum();
        self.offset + q + l
    }

    fn push_grad(&self, x: &[f64], out: &mut Vec<(usize, f64)>) {
        for &(i, j, c) in &self.quad {
            if i == j {
                out.push((i, 2.0 * c * x[i]));
            } else {
                out.push((i, c * x[j]));
                out.push((j, c * x[i]));
            }
        }
        out.extend_from_slice(&self.lin);
    }

    fn add_hess(&self, _x: &[f64], scale: f64, out: &mut DMatrix<f64>) {
        for &(i, j, c) in &self.quad {
            if i == j {
                out[(i, i)] += 2.0 * c * scale;
            } else {
                out[(i, j)] += c * scale;
                out[(j, i)] += c * scale;
            }
        }
    }
}

/// Quadratic-over-linear constraint kernel `x[num]² / x[den] − x[slack]`,
/// convex on `x[den] > 0`.
#[derive(Debug, Clone)]
pub struct QuadOverLinTerm {
    pub num: usize,
    pub den: usize,
    pub slack: usize,
}

impl SmoothFn for QuadOverLinTerm {
    fn value(&self, x: &[f64]) -> f64 {
        let v = x[self.den];
        if v <= 0.0 {
            return f64::INFINITY;
        }
        x[self.num] * x[self.num] / v - x[self.slack]
    }

    fn push_grad(&self, x: &[f64], out: &mut Vec<(usize, f64)>) {
        let u = x[self.num];
        let v = x[self.den];
        out.push((self.num, 2.0 * u / v));
        out.push((self.den, -u * u / (v * v)));
        out.push((self.slack, -1.0));
    }

    fn add_hess(&self, x: &[f64], scale: f64, out: &mut DMatrix<f64>) {
        let u = x[self.num];
        let v = x[self.den];
        out[(self.num, self.num)] += scale * 2.0 / v;
        out[(self.den, self.den)] += scale * 2.0 * u * u / (v * v * v);
        let cross = scale * -2.0 * u / (v * v);
        out[(self.num, self.den)] += cross;
        out[(self.den, self.num)] += cross;
    }
}

/// One `−weight · log₂(inner + coeffs·x)` piece of a [`LogSumTerm`].
#[derive(Debug, Clone)]
pub struct LogPiece {
    /// Nonnegative weight (negated logs of affine forms stay convex).
    pub weight: f64,
    pub inner: f64,
    pub coeffs: Vec<(usize, f64)>,
}

impl LogPiece {
    fn arg(&self, x: &[f64]) -> f64 {
        self.inner + self.coeffs.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }
}

/// Convex function `base + Σ lin·x − Σⱼ wⱼ·log₂(innerⱼ + coeffsⱼ·x)`.
///
/// This covers both the achievable-rate constraints (rate floor minus a
/// weighted sum of logs ≤ 0) and, negated, the concave throughput
/// objectives.
#[derive(Debug, Clone)]
pub struct LogSumTerm {
    pub base: f64,
    pub lin: Vec<(usize, f64)>,
    pub logs: Vec<LogPiece>,
}

impl SmoothFn for LogSumTerm {
    fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.base + self.lin.iter().map(|&(i, c)| c * x[i]).sum::<f64>();
        for piece in &self.logs {
            let arg = piece.arg(x);
            if arg <= 0.0 {
                return f64::INFINITY;
            }
            v -= piece.weight * arg.ln() / LN_2;
        }
        v
    }

    fn push_grad(&self, x: &[f64], out: &mut Vec<(usize, f64)>) {
        out.extend_from_slice(&self.lin);
        for piece in &self.logs {
            let scale = -piece.weight / (LN_2 * piece.arg(x));
            for &(i, c) in &piece.coeffs {
                out.push((i, scale * c));
            }
        }
    }

    fn add_hess(&self, x: &[f64], scale: f64, out: &mut DMatrix<f64>) {
        for piece in &self.logs {
            let arg = piece.arg(x);
            let w = scale * piece.weight / (LN_2 * arg * arg);
            for &(i, ci) in &piece.coeffs {
                for &(j, cj) in &piece.coeffs {
                    out[(i, j)] += w * ci * cj;
                }
            }
        }
    }
}

/// Phase-I wrapper `g(x) − x[slack]` around a borrowed constraint.
struct SlackShifted<'a> {
    inner: &'a dyn SmoothFn,
    slack: usize,
}

impl SmoothFn for SlackShifted<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x) - x[self.slack]
    }

    fn push_grad(&self, x: &[f64], out: &mut Vec<(usize, f64)>) {
        self.inner.push_grad(x, out);
        out.push((self.slack, -1.0));
    }

    fn add_hess(&self, x: &[f64], scale: f64, out: &mut DMatrix<f64>) {
        self.inner.add_hess(x, scale, out);
    }
}

/// A smooth convex program: minimize `objective` over
/// `constraints[i](x) ≤ 0` and `Σ coeffs·x = rhs` for each equality row.
pub struct SmoothProgram {
    pub n: usize,
    pub objective: Box<dyn SmoothFn>,
    pub constraints: Vec<Box<dyn SmoothFn>>,
    /// Sparse equality rows `(coeffs, rhs)`.
    pub equalities: Vec<(Vec<(usize, f64)>, f64)>,
}

/// Tuning knobs for [`solve_barrier`].
#[derive(Debug, Clone)]
pub struct BarrierParams {
    /// Initial barrier weight.
    pub mu0: f64,
    /// Geometric factor applied to μ between centerings, in (0, 1).
    pub shrink: f64,
    /// Stop once `m·μ ≤ gap_tol · max(1, |f₀|)`.
    pub gap_tol: f64,
    /// Newton decrement threshold `λ²/2` per centering.
    pub newton_tol: f64,
    /// Newton step cap per centering.
    pub max_newton: usize,
    /// Starts with a constraint value above `−strict_margin` go to phase I.
    pub strict_margin: f64,
    /// Margin phase I aims for; thinner interiors are accepted with a log.
    pub phase1_margin: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            shrink: 0.1,
            gap_tol: 1e-8,
            newton_tol: 1e-9,
            max_newton: 80,
            strict_margin: 1e-9,
            phase1_margin: 1e-6,
        }
    }
}

impl BarrierParams {
    /// Pulls the barrier-related knobs out of the scenario parameters.
    pub fn from_algo(algo: &AlgoParams) -> Self {
        Self {
            mu0: algo.barrier_mu0,
            shrink: algo.barrier_shrink,
            gap_tol: algo.barrier_tol,
            ..Self::default()
        }
    }

    /// Same parameters but a different starting barrier weight (warm starts
    /// near the previous optimum need far less centering).
    pub fn with_mu0(mut self, mu0: f64) -> Self {
        self.mu0 = mu0;
        self
    }
}

/// Why the barrier loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierStatus {
    /// Duality-gap bound met.
    Optimal,
    /// A Newton line search made no progress; the returned point is the
    /// best interior point found and callers should treat it as inexact.
    LineSearchStall,
}

/// Solution of a smooth program.
#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Final duality-gap bound `m·μ`.
    pub gap_bound: f64,
    pub status: BarrierStatus,
    /// Total Newton iterations across all centerings.
    pub newton_steps: usize,
    /// Objective value after each centering (non-increasing along the path).
    pub center_objectives: Vec<f64>,
}

/// Outcome of one centering run.
struct CenterOutcome {
    steps: usize,
    stalled: bool,
}

/// Solves a smooth convex program from start `x0`.
///
/// `x0` must satisfy the equality rows and lie in the domain of every
/// function; if it touches or violates an inequality, a phase-I program is
/// solved first to recover a strictly interior point, and
/// [`Error::InfeasibleStart`] is returned when no such point exists.
pub fn solve_barrier(
    prog: &SmoothProgram,
    x0: &[f64],
    params: &BarrierParams,
) -> Result<BarrierSolution> {
    let n = prog.n;
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "start has {} entries, program has {} variables",
            x0.len(),
            n
        )));
    }
    for (row, (coeffs, rhs)) in prog.equalities.iter().enumerate() {
        let res: f64 = coeffs.iter().map(|&(i, c)| c * x0[i]).sum::<f64>() - rhs;
        if res.abs() > 1e-7 * rhs.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "start violates equality row {row} by {res:.3e}"
            )));
        }
    }
    if !prog.objective.value(x0).is_finite() {
        return Err(Error::InvalidInput(
            "start lies outside the objective domain".into(),
        ));
    }

    let mut x = x0.to_vec();
    let worst = prog
        .constraints
        .iter()
        .map(|g| g.value(&x))
        .fold(f64::NEG_INFINITY, f64::max);
    if !prog.constraints.is_empty() && worst >= -params.strict_margin {
        x = phase1(prog, &x, worst, params)?;
    }

    let constraint_refs: Vec<&dyn SmoothFn> = prog.constraints.iter().map(|b| b.as_ref()).collect();
    let m = constraint_refs.len();
    let mut mu = params.mu0;
    let mut newton_steps = 0;
    let mut center_objectives = Vec::new();
    let mut status = BarrierStatus::Optimal;

    loop {
        let outcome = newton_center(
            n,
            prog.objective.as_ref(),
            &constraint_refs,
            &prog.equalities,
            &mut x,
            if m == 0 { 0.0 } else { mu },
            params,
            None,
        )?;
        newton_steps += outcome.steps;
        let f0 = prog.objective.value(&x);
        center_objectives.push(f0);
        if outcome.stalled {
            status = BarrierStatus::LineSearchStall;
            break;
        }
        if m == 0 || (m as f64) * mu <= params.gap_tol * f0.abs().max(1.0) {
            break;
        }
        mu *= params.shrink;
    }

    let objective = prog.objective.value(&x);
    Ok(BarrierSolution {
        x,
        objective,
        gap_bound: (m as f64) * mu,
        status,
        newton_steps,
        center_objectives,
    })
}

/// Phase I: minimize `s` subject to `gᵢ(x) − s ≤ 0` plus the original
/// equalities, stopping as soon as `s` is comfortably negative.
fn phase1(
    prog: &SmoothProgram,
    x0: &[f64],
    worst: f64,
    params: &BarrierParams,
) -> Result<Vec<f64>> {
    if !worst.is_finite() {
        // Start outside some constraint's domain: nothing to relax against.
        return Err(Error::InfeasibleStart { margin: worst });
    }
    let n = prog.n;
    let slack = n;
    let wrapped: Vec<SlackShifted> = prog
        .constraints
        .iter()
        .map(|g| SlackShifted {
            inner: g.as_ref(),
            slack,
        })
        .collect();
    let refs: Vec<&dyn SmoothFn> = wrapped.iter().map(|w| w as &dyn SmoothFn).collect();
    let objective = LinearTerm {
        coeffs: vec![(slack, 1.0)],
        offset: 0.0,
    };

    let mut x = x0.to_vec();
    x.push(worst + 1.0);
    let m = refs.len() as f64;
    let mut mu = params.mu0.max(1.0);
    let target = -params.phase1_margin;

    loop {
        let outcome = newton_center(
            n + 1,
            &objective,
            &refs,
            &prog.equalities,
            &mut x,
            mu,
            params,
            Some((slack, target)),
        )?;
        if x[slack] <= target {
            break;
        }
        if outcome.stalled || m * mu <= 1e-9 * x[slack].abs().max(1.0) {
            // The relaxation has converged without reaching the target
            // margin: either the interior is razor thin or empty.
            if x[slack] < -1e-12 {
                log::warn!(
                    "phase I found only a thin interior (margin {:.3e})",
                    x[slack]
                );
                break;
            }
            return Err(Error::InfeasibleStart { margin: x[slack] });
        }
        mu *= params.shrink;
    }

    x.pop();
    Ok(x)
}

/// Damped Newton centering of `f₀ + μ Σ −ln(−gᵢ)` under the equality rows.
///
/// With `stop_below = Some((idx, thr))` the iteration also exits as soon as
/// `x[idx] < thr` (used by phase I).
#[allow(clippy::too_many_arguments)]
fn newton_center(
    n: usize,
    objective: &dyn SmoothFn,
    constraints: &[&dyn SmoothFn],
    equalities: &[(Vec<(usize, f64)>, f64)],
    x: &mut [f64],
    mu: f64,
    params: &BarrierParams,
    stop_below: Option<(usize, f64)>,
) -> Result<CenterOutcome> {
    let p = equalities.len();
    let barrier_value = |pt: &[f64]| -> f64 {
        let mut v = objective.value(pt);
        if !v.is_finite() {
            return f64::INFINITY;
        }
        for g in constraints {
            let gv = g.value(pt);
            if gv >= 0.0 || !gv.is_finite() {
                return f64::INFINITY;
            }
            v += mu * (-(-gv).ln());
        }
        v
    };

    let mut scratch: Vec<(usize, f64)> = Vec::new();
    for step in 0..params.max_newton {
        if let Some((idx, thr)) = stop_below {
            if x[idx] < thr {
                return Ok(CenterOutcome {
                    steps: step,
                    stalled: false,
                });
            }
        }

        // Assemble ∇F and ∇²F.
        let mut grad = vec![0.0; n];
        let mut hess = DMatrix::<f64>::zeros(n, n);
        scratch.clear();
        objective.push_grad(x, &mut scratch);
        for &(i, v) in &scratch {
            grad[i] += v;
        }
        objective.add_hess(x, 1.0, &mut hess);
        for g in constraints {
            let gv = g.value(x);
            if gv >= 0.0 || !gv.is_finite() {
                return Err(Error::Solver(format!(
                    "interior point lost (constraint value {gv:.3e})"
                )));
            }
            let w1 = -mu / gv; // μ / (−g)
            let w2 = mu / (gv * gv);
            scratch.clear();
            g.push_grad(x, &mut scratch);
            for &(i, v) in &scratch {
                grad[i] += w1 * v;
            }
            for &(i, vi) in &scratch {
                for &(j, vj) in &scratch {
                    hess[(i, j)] += w2 * vi * vj;
                }
            }
            g.add_hess(x, w1, &mut hess);
        }

        // Equality residual b − Ax (kept at zero, corrected if drifting).
        let mut r_eq = vec![0.0; p];
        for (row, (coeffs, rhs)) in equalities.iter().enumerate() {
            r_eq[row] = rhs - coeffs.iter().map(|&(i, c)| c * x[i]).sum::<f64>();
        }

        let dir = solve_kkt(&hess, &grad, equalities, &r_eq)?;
        let decrement = -grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>();
        let eq_ok = r_eq.iter().all(|r| r.abs() <= 1e-10);
        if eq_ok && decrement <= 2.0 * params.newton_tol {
            return Ok(CenterOutcome {
                steps: step,
                stalled: false,
            });
        }

        // Backtracking line search on the barrier function.
        let f_here = barrier_value(x);
        let slope = -decrement;
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-12 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            let f_trial = barrier_value(&trial);
            if f_trial.is_finite() && f_trial <= f_here + 0.25 * t * slope {
                x.copy_from_slice(&trial);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok(CenterOutcome {
                steps: step + 1,
                stalled: true,
            });
        }
    }
    log::warn!("newton centering hit the step cap (mu = {mu:.3e})");
    Ok(CenterOutcome {
        steps: params.max_newton,
        stalled: false,
    })
}

/// Solves the KKT system `[H Aᵀ; A 0]·[p; ν] = [−∇F; r_eq]`.
fn solve_kkt(
    hess: &DMatrix<f64>,
    grad: &[f64],
    equalities: &[(Vec<(usize, f64)>, f64)],
    r_eq: &[f64],
) -> Result<Vec<f64>> {
    let n = grad.len();
    let p = equalities.len();
    let dim = n + p;
    let diag_scale = (0..n)
        .fold(0.0_f64, |acc, i| acc.max(hess[(i, i)].abs()))
        .max(1.0);

    let mut ridge = 0.0;
    for _attempt in 0..4 {
        let mut kkt = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = hess[(i, j)];
            }
            kkt[(i, i)] += ridge;
        }
        for (row, (coeffs, _)) in equalities.iter().enumerate() {
            for &(i, c) in coeffs {
                kkt[(n + row, i)] = c;
                kkt[(i, n + row)] = c;
            }
        }
        let mut rhs = nalgebra::DVector::<f64>::zeros(dim);
        for i in 0..n {
            rhs[i] = -grad[i];
        }
        for (row, &r) in r_eq.iter().enumerate() {
            rhs[n + row] = r;
        }
        if let Some(sol) = kkt.lu().solve(&rhs) {
            let dir: Vec<f64> = sol.as_slice()[..n].to_vec();
            if dir.iter().all(|d| d.is_finite()) {
                return Ok(dir);
            }
        }
        ridge = if ridge == 0.0 {
            1e-10 * diag_scale
        } else {
            ridge * 100.0
        };
    }
    Err(Error::Solver("kkt system is numerically singular".into()))
}
