//! Small dense convex solvers used by the planners.
//!
//! Problem sizes here are tiny by solver standards (tens to a few hundred
//! variables), so everything is dense, deterministic, and dependency-free:
//!
//! * [`lp`] — two-phase tableau simplex for general linear programs plus an
//!   exact vertex-enumeration routine for the per-slot scheduling LPs,
//! * [`qp`] — primal-dual interior-point method for convex quadratic
//!   programs with linear inequality constraints,
//! * [`barrier`] — log-barrier Newton method for smooth convex programs
//!   (the trajectory subproblems), with a phase-I recovery step for starts
//!   on the constraint boundary.

pub mod barrier;
pub mod lp;
pub mod qp;

pub use barrier::{
    solve_barrier, BarrierParams, BarrierSolution, BarrierStatus, LinearTerm, LogPiece, LogSumTerm,
    QuadOverLinTerm, QuadTerm, SmoothFn, SmoothProgram,
};
pub use lp::{solve_lp, solve_slot_lp, Cmp, LinearProgram, LpSolution, SlotAssignment};
pub use qp::{solve_qp, QpSolution, QuadraticProgram};
