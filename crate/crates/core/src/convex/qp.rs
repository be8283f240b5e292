//! Primal-dual interior-point method for convex quadratic programs.
//!
//! Solves `min ½ xᵀQx + cᵀx  s.t.  Gx ≤ h` with diagonal positive
//! semidefinite `Q` — the structure of the penalty scheduling subproblem,
//! whose quadratic term is a per-variable proximal penalty.  The method is
//! the standard infeasible-start Mehrotra predictor-corrector: each
//! iteration factorizes the reduced matrix `Q + Gᵀ diag(λ/s) G` once and
//! reuses the factorization for both the affine and the corrected step.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// A convex QP `min ½ Σ q_diag[i]·x[i]² + c·x  s.t.  g·x ≤ h` (row-wise).
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    /// Diagonal of the quadratic term; entries must be ≥ 0.
    pub q_diag: Vec<f64>,
    pub c: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

/// Primal-dual solution returned by [`solve_qp`].
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Inequality multipliers, one per row of `g`.
    pub duals: Vec<f64>,
    /// Worst KKT violation at the returned point (∞-norm, unscaled).
    pub kkt_residual: f64,
}

const MAX_ITER: usize = 100;
const FRACTION_TO_BOUNDARY: f64 = 0.99;

/// Solves the QP to a KKT residual below `1e-8` (absolute, on data scaled
/// O(1)); returns [`Error::Infeasible`] when the iterates certify an empty
/// feasible set and [`Error::Solver`] when the iteration cap is hit without
/// convergence.
pub fn solve_qp(qp: &QuadraticProgram) -> Result<QpSolution> {
    let n = qp.q_diag.len();
    let m = qp.g.len();
    if qp.c.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "qp has {} quadratic entries but {} linear coefficients",
            n,
            qp.c.len()
        )));
    }
    if qp.h.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "qp has {} constraint rows but {} right-hand sides",
            m,
            qp.h.len()
        )));
    }
    for (i, row) in qp.g.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "qp row {} has {} coefficients, expected {}",
                i,
                row.len(),
                n
            )));
        }
    }
    if let Some(&q) = qp.q_diag.iter().find(|&&q| q < 0.0) {
        return Err(Error::InvalidInput(format!(
            "quadratic diagonal must be nonnegative, found {q}"
        )));
    }

    // Unconstrained or trivially solvable cases.
    if m == 0 {
        let mut x = vec![0.0; n];
        for i in 0..n {
            if qp.q_diag[i] > 0.0 {
                x[i] = -qp.c[i] / qp.q_diag[i];
            } else if qp.c[i] != 0.0 {
                return Err(Error::UnboundedLp);
            }
        }
        return Ok(QpSolution {
            x,
            duals: Vec::new(),
            kkt_residual: 0.0,
        });
    }

    let g = DMatrix::from_fn(m, n, |i, j| qp.g[i][j]);
    let h = DVector::from_column_slice(&qp.h);
    let c = DVector::from_column_slice(&qp.c);
    let q = DVector::from_column_slice(&qp.q_diag);

    let mut x = DVector::zeros(n);
    let mut s = DVector::from_fn(m, |i, _| {
        let slack0 = h[i]; // h − G·0
        slack0.max(1.0)
    });
    let mut lam = DVector::from_element(m, 1.0);

    let data_scale =
        qp.c.iter()
            .chain(qp.h.iter())
            .chain(qp.q_diag.iter())
            .fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-9 * data_scale.max(1.0);
    let mu_tol = 1e-10 * data_scale.max(1.0);
    // Keep polishing past the acceptance threshold while the residual still
    // falls quickly: penalty-method callers live off the last digits of the
    // primal iterate, and each extra Mehrotra step cuts the residual by
    // orders of magnitude until f64 roundoff (~1e-16 of the data) bites.
    let kkt_target = 1e-15 * data_scale.max(1.0);
    let mut prev_kkt = f64::INFINITY;
    let mut best: Option<QpSolution> = None;

    for _ in 0..MAX_ITER {
        // Residuals of the perturbed KKT system.
        let r_dual = &q.component_mul(&x) + &c + g.transpose() * &lam;
        let r_prim = &g * &x + &s - &h;
        let mu = s.dot(&lam) / m as f64;

        let kkt = kkt_violation(&r_dual, &r_prim, &s, &lam);
        if kkt <= tol && mu <= mu_tol {
            let snap = QpSolution {
                x: x.as_slice().to_vec(),
                duals: lam.as_slice().to_vec(),
                kkt_residual: kkt,
            };
            if kkt <= kkt_target || kkt > 0.5 * prev_kkt {
                return Ok(snap);
            }
            best = Some(snap);
        }
        prev_kkt = kkt;

        // Reduced normal matrix M = Q + Gᵀ diag(λ/s) G, shared by both solves.
        let ratio = lam.component_div(&s);
        let mut m_mat = DMatrix::zeros(n, n);
        for i in 0..n {
            m_mat[(i, i)] = q[i];
        }
        for r in 0..m {
            let w = ratio[r];
            for a in 0..n {
                let ga = g[(r, a)];
                if ga == 0.0 {
                    continue;
                }
                for b in a..n {
                    m_mat[(a, b)] += w * ga * g[(r, b)];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                m_mat[(a, b)] = m_mat[(b, a)];
            }
        }
        let chol = match Cholesky::new(m_mat.clone()) {
            Some(c) => c,
            None => {
                // Semidefinite corner (e.g. q = 0 with rank-deficient G):
                // a tiny deterministic ridge restores definiteness.
                let ridge = 1e-12 * data_scale.max(1.0);
                for i in 0..n {
                    m_mat[(i, i)] += ridge;
                }
                match Cholesky::new(m_mat) {
                    Some(c) => c,
                    // Polishing past the acceptance threshold may push the
                    // normal matrix beyond factorizable conditioning; settle
                    // for the last acceptable iterate if one exists.
                    None => {
                        return best.ok_or_else(|| {
                            Error::Solver("qp normal matrix not positive definite".into())
                        });
                    }
                }
            }
        };

        // Affine (predictor) direction: r_cent = s∘λ.
        let r_cent_aff = s.component_mul(&lam);
        let (_dx_aff, ds_aff, dl_aff) =
            solve_step(&chol, &g, &r_dual, &r_prim, &r_cent_aff, &s, &lam);
        let alpha_aff = step_length(&s, &ds_aff).min(step_length(&lam, &dl_aff));
        let mu_aff = (&s + alpha_aff * &ds_aff).dot(&(&lam + alpha_aff * &dl_aff)) / m as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // Corrector: add the second-order term and the centering target.
        let r_cent =
            &r_cent_aff + ds_aff.component_mul(&dl_aff) - DVector::from_element(m, sigma * mu);
        let (dx, ds, dl) = solve_step(&chol, &g, &r_dual, &r_prim, &r_cent, &s, &lam);

        let alpha_p = FRACTION_TO_BOUNDARY * step_length(&s, &ds);
        let alpha_d = FRACTION_TO_BOUNDARY * step_length(&lam, &dl);
        x += alpha_p.min(1.0) * &dx;
        s += alpha_p.min(1.0) * &ds;
        lam += alpha_d.min(1.0) * &dl;

        // Primal infeasibility shows up as exploding multipliers while the
        // primal residual refuses to shrink.
        if lam.amax() > 1e12 * data_scale.max(1.0) {
            let prim_now = (&g * &x + &s - &h).amax();
            if prim_now > 1e-6 * data_scale.max(1.0) {
                return Err(Error::Infeasible(
                    "qp constraints admit no feasible point".into(),
                ));
            }
        }
    }

    best.ok_or_else(|| {
        Error::Solver(format!(
            "qp interior point did not converge in {MAX_ITER} iterations"
        ))
    })
}

/// Solves one Newton system given the factorized reduced matrix.
///
/// The block system is
///   Q dx + Gᵀ dλ = −r_dual
///   G dx + ds    = −r_prim
///   Λ ds + S dλ  = −r_cent
/// which reduces to `M dx = −r_dual − Gᵀ[(λ∘r_prim − r_cent)/s]`.
fn solve_step(
    chol: &Cholesky<f64, nalgebra::Dyn>,
    g: &DMatrix<f64>,
    r_dual: &DVector<f64>,
    r_prim: &DVector<f64>,
    r_cent: &DVector<f64>,
    s: &DVector<f64>,
    lam: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let w = (lam.component_mul(r_prim) - r_cent).component_div(s);
    let rhs = -r_dual - g.transpose() * w;
    let dx = chol.solve(&rhs);
    let ds = -r_prim - g * &dx;
    let dl = (-r_cent - lam.component_mul(&ds)).component_div(s);
    (dx, ds, dl)
}

/// Largest α ∈ (0, 1] keeping `v + α·dv > 0`.
fn step_length(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut alpha = 1.0_f64;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            alpha = alpha.min(-v[i] / dv[i]);
        }
    }
    alpha
}

fn kkt_violation(
    r_dual: &DVector<f64>,
    r_prim: &DVector<f64>,
    s: &DVector<f64>,
    lam: &DVector<f64>,
) -> f64 {
    let comp = s
        .iter()
        .zip(lam.iter())
        .fold(0.0_f64, |acc, (&si, &li)| acc.max((si * li).abs()));
    r_dual.amax().max(r_prim.amax()).max(comp)
}
