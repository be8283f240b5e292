//! Dense linear programming.
//!
//! Two entry points:
//!
//! * [`solve_lp`] — a two-phase tableau simplex with Bland's anti-cycling
//!   rule for general (small, dense) linear programs.  Used for the
//!   fairness upper-bound program and as an oracle in tests.
//! * [`solve_slot_lp`] — exact maximization over the vertices of the
//!   per-slot scheduling polytope { a ≥ 0, Σ aₖ ≤ 1, Σ aₖRₖ ≥ R_th }.
//!   With K in the tens this is faster and exactly deterministic, and it
//!   lets us report whether the optimum is binary.

use crate::error::Error;
use crate::Result;

/// Row sense for [`LinearProgram`] constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// A dense linear program over variables with box bounds.
///
/// Maximize (or minimize) `objective · x` subject to the listed rows and
/// per-variable bounds.  Bounds may be infinite (`f64::NEG_INFINITY` /
/// `f64::INFINITY`) for free variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub maximize: bool,
    pub objective: Vec<f64>,
    /// Rows `(coeffs, sense, rhs)` with `coeffs.len() == objective.len()`.
    pub rows: Vec<(Vec<f64>, Cmp, f64)>,
    /// Per-variable `(lower, upper)` bounds.
    pub bounds: Vec<(f64, f64)>,
}

/// Optimal point and objective value returned by [`solve_lp`].
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_EPS: f64 = 1e-9;

/// How each original variable is represented in the nonnegative standard form.
enum VarMap {
    /// `x = lo + x'` with `x' ≥ 0`.
    Shifted { col: usize, lo: f64 },
    /// `x = hi − x'` with `x' ≥ 0` (lower bound is −∞).
    Mirrored { col: usize, hi: f64 },
    /// `x = x⁺ − x⁻`, both ≥ 0 (free variable).
    Split { pos: usize, neg: usize },
}

/// Solves a general dense LP with the two-phase simplex method.
///
/// Returns [`Error::InfeasibleLp`] when the feasible set is empty and
/// [`Error::UnboundedLp`] when the objective is unbounded over it.  Bland's
/// rule guarantees termination on degenerate instances.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    if lp.bounds.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "lp has {} objective coefficients but {} bounds",
            n,
            lp.bounds.len()
        )));
    }
    for (i, (coeffs, _, _)) in lp.rows.iter().enumerate() {
        if coeffs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "lp row {} has {} coefficients, expected {}",
                i,
                coeffs.len(),
                n
            )));
        }
    }

    // Map every original variable onto nonnegative standard-form columns.
    let mut maps = Vec::with_capacity(n);
    let mut n_cols = 0usize;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new(); // (col, upper) for x' ≤ upper
    for &(lo, hi) in &lp.bounds {
        if lo > hi {
            return Err(Error::InfeasibleLp);
        }
        if lo.is_finite() {
            let col = n_cols;
            n_cols += 1;
            if hi.is_finite() {
                extra_rows.push((col, hi - lo));
            }
            maps.push(VarMap::Shifted { col, lo });
        } else if hi.is_finite() {
            let col = n_cols;
            n_cols += 1;
            maps.push(VarMap::Mirrored { col, hi });
        } else {
            let pos = n_cols;
            let neg = n_cols + 1;
            n_cols += 2;
            maps.push(VarMap::Split { pos, neg });
        }
    }

    // Assemble rows in standard-form columns, folding the bound shifts into
    // the right-hand side.
    let mut rows: Vec<(Vec<f64>, Cmp, f64)> = Vec::with_capacity(lp.rows.len() + extra_rows.len());
    for (coeffs, sense, rhs) in &lp.rows {
        let mut r = vec![0.0; n_cols];
        let mut b = *rhs;
        for (j, &c) in coeffs.iter().enumerate() {
            match maps[j] {
                VarMap::Shifted { col, lo } => {
                    r[col] += c;
                    b -= c * lo;
                }
                VarMap::Mirrored { col, hi } => {
                    r[col] -= c;
                    b -= c * hi;
                }
                VarMap::Split { pos, neg } => {
                    r[pos] += c;
                    r[neg] -= c;
                }
            }
        }
        rows.push((r, *sense, b));
    }
    for (col, ub) in extra_rows {
        let mut r = vec![0.0; n_cols];
        r[col] = 1.0;
        rows.push((r, Cmp::Le, ub));
    }

    // Objective in standard-form columns (always minimize internally).
    let sign = if lp.maximize { -1.0 } else { 1.0 };
    let mut cost = vec![0.0; n_cols];
    for (j, &c) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shifted { col, .. } => cost[col] += sign * c,
            VarMap::Mirrored { col, .. } => cost[col] -= sign * c,
            VarMap::Split { pos, neg } => {
                cost[pos] += sign * c;
                cost[neg] -= sign * c;
            }
        }
    }

    let x_std = simplex_two_phase(n_cols, &rows, &cost)?;

    // Recover the original variables and recompute the objective from the
    // original data (the tableau value accumulates roundoff).
    let mut x = vec![0.0; n];
    for (j, map) in maps.iter().enumerate() {
        x[j] = match *map {
            VarMap::Shifted { col, lo } => lo + x_std[col],
            VarMap::Mirrored { col, hi } => hi - x_std[col],
            VarMap::Split { pos, neg } => x_std[pos] - x_std[neg],
        };
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective })
}

/// Two-phase simplex over `min cost·x  s.t. rows, x ≥ 0`.
fn simplex_two_phase(
    n_cols: usize,
    rows: &[(Vec<f64>, Cmp, f64)],
    cost: &[f64],
) -> Result<Vec<f64>> {
    let m = rows.len();
    // Column layout: [structural | slack/surplus | artificial | rhs].
    let mut n_slack = 0usize;
    let mut n_art = 0usize;
    for (_, sense, _) in rows {
        match sense {
            Cmp::Le | Cmp::Ge => n_slack += 1,
            Cmp::Eq => {}
        }
    }
    // Artificials are added per row after sign normalisation; allocate one
    // per row and skip the ones a feasible slack already covers.
    let total = n_cols + n_slack + m + 1;
    let rhs_col = total - 1;
    let mut tab = vec![vec![0.0; total]; m];
    let mut basis = vec![usize::MAX; m];
    let mut slack_at = n_cols;
    let art_base = n_cols + n_slack;

    for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        let flip = *rhs < 0.0;
        let s = if flip { -1.0 } else { 1.0 };
        for (j, &c) in coeffs.iter().enumerate() {
            tab[i][j] = s * c;
        }
        tab[i][rhs_col] = s * rhs;
        let eff_sense = match (sense, flip) {
            (Cmp::Le, false) | (Cmp::Ge, true) => Cmp::Le,
            (Cmp::Ge, false) | (Cmp::Le, true) => Cmp::Ge,
            (Cmp::Eq, _) => Cmp::Eq,
        };
        match eff_sense {
            Cmp::Le => {
                tab[i][slack_at] = 1.0;
                basis[i] = slack_at;
                slack_at += 1;
            }
            Cmp::Ge => {
                tab[i][slack_at] = -1.0;
                slack_at += 1;
                tab[i][art_base + i] = 1.0;
                basis[i] = art_base + i;
                n_art += 1;
            }
            Cmp::Eq => {
                tab[i][art_base + i] = 1.0;
                basis[i] = art_base + i;
                n_art += 1;
            }
        }
    }

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        let mut z = vec![0.0; total];
        for i in 0..m {
            if basis[i] >= art_base {
                for j in 0..total {
                    z[j] -= tab[i][j];
                }
            }
        }
        run_simplex(&mut tab, &mut basis, &mut z, art_base, rhs_col)?;
        if -z[rhs_col] > 1e-7 {
            return Err(Error::InfeasibleLp);
        }
        // Drive any artificial still in the basis out (or drop its row if the
        // row has become identically zero, i.e. the constraint was redundant).
        for i in 0..m {
            if basis[i] >= art_base {
                let mut pivot_col = None;
                for (j, &v) in tab[i].iter().enumerate().take(art_base) {
                    if v.abs() > PIVOT_EPS {
                        pivot_col = Some(j);
                        break;
                    }
                }
                match pivot_col {
                    Some(j) => pivot(&mut tab, &mut basis, &mut vec![0.0; total], i, j),
                    None => {
                        // Redundant row: neutralize it so it never pivots.
                        for v in tab[i].iter_mut() {
                            *v = 0.0;
                        }
                    }
                }
            }
        }
    }

    // Phase 2: minimize the real cost over the feasible basis.
    let mut z = vec![0.0; total];
    z[..n_cols].copy_from_slice(cost);
    // Reduce the cost row against the current basis.
    for i in 0..m {
        let b = basis[i];
        if b == usize::MAX {
            continue;
        }
        let factor = z[b];
        if factor != 0.0 {
            for j in 0..total {
                z[j] -= factor * tab[i][j];
            }
        }
    }
    run_simplex(&mut tab, &mut basis, &mut z, art_base, rhs_col)?;

    let mut x = vec![0.0; n_cols];
    for i in 0..m {
        let b = basis[i];
        if b < n_cols {
            x[b] = tab[i][rhs_col];
        }
    }
    Ok(x)
}

/// Runs simplex pivots until optimality, using Bland's rule throughout.
/// Columns at or beyond `forbidden_from` (artificials) never enter.
fn run_simplex(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    z: &mut [f64],
    forbidden_from: usize,
    rhs_col: usize,
) -> Result<()> {
    let m = tab.len();
    loop {
        // Bland: entering column = lowest index with negative reduced cost.
        let mut enter = None;
        for (j, &zj) in z.iter().enumerate().take(forbidden_from) {
            if zj < -PIVOT_EPS {
                enter = Some(j);
                break;
            }
        }
        let Some(col) = enter else {
            return Ok(());
        };
        // Ratio test; Bland tie-break on the smallest basic-variable index.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tab[i][col];
            if a > PIVOT_EPS {
                let ratio = tab[i][rhs_col] / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - PIVOT_EPS
                            || (ratio < br + PIVOT_EPS && basis[i] < basis[bi])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::UnboundedLp);
        };
        pivot(tab, basis, z, row, col);
    }
}

/// Gauss-Jordan pivot on `(row, col)`, updating the cost row as well.
fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], z: &mut [f64], row: usize, col: usize) {
    let piv = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= piv;
    }
    let pivot_row = tab[row].clone();
    for (i, r) in tab.iter_mut().enumerate() {
        if i != row {
            let f = r[col];
            if f != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    let f = z[col];
    if f != 0.0 {
        for (v, p) in z.iter_mut().zip(&pivot_row) {
            *v -= f * p;
        }
    }
    basis[row] = col;
}

/// Result of the per-slot scheduling LP.
#[derive(Debug, Clone)]
pub struct SlotAssignment {
    /// Optimal allocation, one entry per candidate.
    pub a: Vec<f64>,
    /// Optimal value of `gains · a`.
    pub objective: f64,
    /// Whether the returned vertex is {0,1}-valued.
    pub binary: bool,
}

/// Exactly solves `max gains·a  s.t.  a ≥ 0, Σ aₖ ≤ 1, rates·a ≥ rate_floor`.
///
/// The feasible set is a polytope whose vertices fall into four classes —
/// the origin, the unit points `eₖ`, single-variable points on the rate
/// plane, and two-variable points where both the budget and the rate plane
/// are tight — so the LP is solved by direct enumeration.  Among optima
/// within `1e-12` relative tolerance a binary vertex is preferred, then the
/// one with lexicographically smallest support, which keeps the planner
/// deterministic across platforms.
///
/// Returns [`Error::InfeasibleLp`] when even the best vertex violates the
/// rate floor (the caller maps this to a per-slot diagnostic).
pub fn solve_slot_lp(gains: &[f64], rates: &[f64], rate_floor: f64) -> Result<SlotAssignment> {
    let k = gains.len();
    if rates.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} gains but {} rates",
            k,
            rates.len()
        )));
    }
    if k == 0 {
        return if rate_floor <= 0.0 {
            Ok(SlotAssignment {
                a: Vec::new(),
                objective: 0.0,
                binary: true,
            })
        } else {
            Err(Error::InfeasibleLp)
        };
    }

    let mut best: Option<SlotAssignment> = None;
    let mut consider = |a: Vec<f64>, objective: f64, binary: bool| {
        let better = match &best {
            None => true,
            Some(b) => {
                let tol = 1e-12 * b.objective.abs().max(1.0);
                if objective > b.objective + tol {
                    true
                } else if objective >= b.objective - tol {
                    // Tie: prefer binary, then the earlier support.
                    if binary != b.binary {
                        binary
                    } else {
                        support_key(&a) < support_key(&b.a)
                    }
                } else {
                    false
                }
            }
        };
        if better {
            best = Some(SlotAssignment {
                a,
                objective,
                binary,
            });
        }
    };

    if rate_floor <= 0.0 {
        consider(vec![0.0; k], 0.0, true);
    }
    for i in 0..k {
        if rates[i] >= rate_floor {
            let mut a = vec![0.0; k];
            a[i] = 1.0;
            consider(a, gains[i], true);
        } else if rate_floor > 0.0 && rates[i] > 0.0 {
            // Rate plane tight with a single variable: aᵢ = floor / Rᵢ.
            let ai = rate_floor / rates[i];
            if ai <= 1.0 {
                let mut a = vec![0.0; k];
                a[i] = ai;
                consider(a, gains[i] * ai, false);
            }
        }
    }
    // Budget and rate plane both tight: aᵢ + aⱼ = 1, aᵢRᵢ + aⱼRⱼ = floor.
    for i in 0..k {
        for j in (i + 1)..k {
            let denom = rates[i] - rates[j];
            if denom.abs() < 1e-14 {
                continue;
            }
            let ai = (rate_floor - rates[j]) / denom;
            let aj = 1.0 - ai;
            if ai > 1e-12 && aj > 1e-12 && ai < 1.0 - 1e-12 {
                let mut a = vec![0.0; k];
                a[i] = ai;
                a[j] = aj;
                consider(a, gains[i] * ai + gains[j] * aj, false);
            }
        }
    }

    best.ok_or(Error::InfeasibleLp)
}

/// Lexicographic key on the support used to break exact ties.
fn support_key(a: &[f64]) -> Vec<usize> {
    a.iter()
        .enumerate()
        .filter(|(_, &v)| v > 1e-12)
        .map(|(i, _)| i)
        .collect()
}
