//! Derivative-free coordinate line search for bound-constrained minimization.
//!
//! The solver minimizes `f(x)` subject to `l <= x <= u` using only function
//! values. Each outer iteration sweeps the coordinate directions `±e_i`, tests a
//! sufficient-decrease condition `f(x ± ν e_i) <= f(x) - γ ν²`, and on success
//! expands the step geometrically until the decrease stalls or a bound is hit.
//! Steps that reach a bound land on it exactly, which is what makes finite
//! active-set identification observable in a trace.
//!
//! Besides the solver, the crate carries the tools needed to audit a run:
//!
//! * [`criticality`]: ε-active sets, tangent/normal cone projections, the
//!   criticality measure `χ(x)` and a first-order stationarity report.
//! * [`diagnostics`]: the Lyapunov sequence `Φ_k`, the worst-case constants
//!   and the per-record checks that the stepsize, decrease, criticality and
//!   complexity bounds hold on a recorded trace.
//! * [`problems`]: a seeded benchmark suite with analytic gradients and
//!   certified Lipschitz metadata.

pub mod criticality;
pub mod diagnostics;
pub mod error;
pub mod linesearch;
pub mod params;
pub mod problem;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};
pub use linesearch::{line_search, Direction, LineSearchOutcome};
pub use params::SolverParams;
pub use problem::{Bounds, EvalCounter, Evaluation, LipschitzInfo, Problem};
pub use solver::{
    solve, solve_with_mode, IterateRecord, SolverState, StopReason, Terminal, Trace, TraceMode,
};
