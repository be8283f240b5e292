//! UAV path and IRS association types shared across the optimizers.

use crate::error::Error;
use crate::scenario::Scenario;
use crate::Result;

/// Horizontal UAV path sampled at slot boundaries: `points[0]` is the
/// launch position, `points[N]` the landing position, and `points[n]` the
/// (constant) position during slot `n` for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<[f64; 2]>,
}

impl Trajectory {
    /// Path that parks at `q` for the whole horizon.
    pub fn stationary(q: [f64; 2], n_slots: usize) -> Self {
        Trajectory {
            points: vec![q; n_slots + 1],
        }
    }

    /// Straight path from `q0` to `q1` in `n_slots` equal steps.
    pub fn line(q0: [f64; 2], q1: [f64; 2], n_slots: usize) -> Self {
        let points = (0..=n_slots)
            .map(|i| {
                let t = i as f64 / n_slots.max(1) as f64;
                [q0[0] + t * (q1[0] - q0[0]), q0[1] + t * (q1[1] - q0[1])]
            })
            .collect();
        Trajectory { points }
    }

    /// Number of slots spanned (points − 1).
    #[inline]
    pub fn n_slots(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    /// Per-slot speeds ‖q[n] − q[n−1]‖/δ, length N.
    pub fn speeds(&self, slot_s: f64) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| {
                let dx = w[1][0] - w[0][0];
                let dy = w[1][1] - w[0][1];
                (dx * dx + dy * dy).sqrt() / slot_s
            })
            .collect()
    }

    /// Checks slot count, endpoints, and the per-slot speed limit.
    /// `tol` is the absolute slack (meters) allowed on each check.
    pub fn validate(&self, s: &Scenario, tol: f64) -> Result<()> {
        let n = s.n_slots();
        if self.points.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "trajectory has {} points, expected N+1 = {}",
                self.points.len(),
                n + 1
            )));
        }
        let close = |a: [f64; 2], b: [f64; 2]| -> bool {
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() <= tol
        };
        if !close(self.points[0], s.q_init) {
            return Err(Error::InvalidInput(format!(
                "trajectory start {:?} != q_init {:?}",
                self.points[0], s.q_init
            )));
        }
        if !close(self.points[n], s.q_final) {
            return Err(Error::InvalidInput(format!(
                "trajectory end {:?} != q_final {:?}",
                self.points[n], s.q_final
            )));
        }
        let cap = s.v_max * s.slot_s + tol;
        for (i, w) in self.points.windows(2).enumerate() {
            let dx = w[1][0] - w[0][0];
            let dy = w[1][1] - w[0][1];
            let step = (dx * dx + dy * dy).sqrt();
            if step > cap {
                return Err(Error::InvalidInput(format!(
                    "slot {}: step {step:.6} m exceeds V_max*delta = {:.6} m",
                    i + 1,
                    s.v_max * s.slot_s
                )));
            }
        }
        Ok(())
    }
}

/// IRS association fractions: `a[n][k]` is the airtime share of IRS `k` in
/// slot `n`. Relaxed schedules are fractional; converged ones are binary
/// with at most one active IRS per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub a: Vec<Vec<f64>>,
}

impl Schedule {
    /// Uniform 1/K split in every slot (relaxation start point).
    pub fn uniform(n_slots: usize, k_irs: usize) -> Self {
        Schedule {
            a: vec![vec![1.0 / k_irs as f64; k_irs]; n_slots],
        }
    }

    #[inline]
    pub fn n_slots(&self) -> usize {
        self.a.len()
    }

    /// Largest entry distance from the binary set {0, 1}.
    pub fn binariness_gap(&self) -> f64 {
        self.a
            .iter()
            .flatten()
            .map(|&a| a.min(1.0 - a).abs().min((a - a.round()).abs()))
            .fold(0.0, f64::max)
    }

    /// Rounds to the nearest binary schedule (ties keep the larger entry;
    /// at most one IRS per slot, chosen as the largest fraction, lowest
    /// index on ties).
    pub fn rounded(&self) -> Schedule {
        let a = self
            .a
            .iter()
            .map(|row| {
                let mut out = vec![0.0; row.len()];
                let mut best = 0usize;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] + 1e-15 {
                        best = k;
                    }
                }
                if row[best] >= 0.5 {
                    out[best] = 1.0;
                }
                out
            })
            .collect();
        Schedule { a }
    }
}
