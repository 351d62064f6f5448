#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Algorithm parameters and stopping controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Contraction factor applied on unsuccessful iterations, in (0,1).
    pub theta: f64,
    /// Expansion ratio: accepted steps grow by `1/delta`, in (0,1).
    pub delta: f64,
    /// Sufficient-decrease weight, > 0.
    pub gamma: f64,
    /// Coupling of each coordinate step to the largest one, in (0,1].
    pub c: f64,
    /// Initial tentative stepsize per coordinate, all > 0.
    pub initial_steps: Vec<f64>,
    /// Stop once the largest tentative stepsize is at or below this value.
    pub stop_delta: f64,
    pub max_iterations: u64,
    pub max_evaluations: u64,
}

impl SolverParams {
    /// Defaults for an `n`-dimensional problem.
    pub fn new(n: usize) -> Self {
        Self {
            theta: 0.5,
            delta: 0.5,
            gamma: 1e-6,
            c: 0.5,
            initial_steps: vec![1.0; n],
            stop_delta: 1e-8,
            max_iterations: 1_000_000,
            max_evaluations: 10_000_000,
        }
    }

    /// Checks every range constraint; the error names the first violation.
    pub fn validate(&self, n: usize) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.theta) {
            return Err(invalid("theta must lie in (0,1)"));
        }
        if !open_unit(self.delta) {
            return Err(invalid("delta must lie in (0,1)"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma must be positive and finite"));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(invalid("c must lie in (0,1]"));
        }
        if self.initial_steps.len() != n {
            return Err(invalid(&format!(
                "initial_steps must have length {n}, got {}",
                self.initial_steps.len()
            )));
        }
        if let Some(i) = self
            .initial_steps
            .iter()
            .position(|&s| !(s > 0.0 && s.is_finite()))
        {
            return Err(invalid(&format!(
                "initial_steps[{i}] must be positive and finite"
            )));
        }
        if !(self.stop_delta > 0.0) {
            return Err(invalid("stop_delta must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be positive"));
        }
        if self.max_evaluations == 0 {
            return Err(invalid("max_evaluations must be positive"));
        }
        Ok(())
    }
}

fn invalid(msg: &str) -> Error {
    Error::InvalidParameter(msg.to_string())
}
