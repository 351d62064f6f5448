//! Outer loop: coordinate sweeps, tentative stepsize updates and the trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linesearch::line_search;
use crate::params::SolverParams;
use crate::problem::{EvalCounter, Problem};

/// How much per-iteration detail the trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    #[default]
    Compact,
    /// Also keep the intermediate sweep points `y^1, ..., y^{n+1}`.
    Verbose,
}

/// Everything one outer iteration did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: u64,
    pub x_before: Vec<f64>,
    pub x_after: Vec<f64>,
    /// Largest tentative stepsize at entry, `Δ_k`.
    pub delta: f64,
    /// Trial stepsizes `ν_k^i = max(α̃_k^i, cΔ_k)`.
    pub nu: Vec<f64>,
    /// Accepted stepsizes `α_k^i` (zero where the line search failed).
    pub alpha: Vec<f64>,
    pub dir_sign: Vec<i8>,
    pub hit_bound: Vec<bool>,
    /// Evaluations per coordinate that passed an acceptance test.
    pub accepted_probes: Vec<u32>,
    pub success: bool,
    pub f_before: f64,
    pub f_after: f64,
    /// Evaluation counter when the iteration started.
    pub evals_before: u64,
    /// Evaluation counter when the iteration ended.
    pub evals_cumulative: u64,
    /// False when the evaluation budget ran out mid-sweep.
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    DeltaTol,
    IterationLimit,
    Budget,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::DeltaTol => "delta-tol",
            StopReason::IterationLimit => "iteration-limit",
            StopReason::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub reason: StopReason,
    pub x: Vec<f64>,
    pub f: f64,
    /// `Δ` of the final state, i.e. `Δ_{k+1}` for the last record.
    pub delta: f64,
    pub tentative_steps: Vec<f64>,
    pub iterations: u64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<IterateRecord>,
    pub terminal: Terminal,
}

impl Trace {
    /// `Δ_{k+1}` for record `k`: the next record's `Δ`, or the terminal one.
    pub fn next_delta(&self, k: usize) -> f64 {
        self.records
            .get(k + 1)
            .map_or(self.terminal.delta, |r| r.delta)
    }

    pub fn truncated_by_budget(&self) -> bool {
        self.terminal.reason != StopReason::DeltaTol
    }
}

/// Iterate, tentative stepsizes and evaluation counter of one solve session.
#[derive(Debug, Clone)]
pub struct SolverState {
    k: u64,
    x: Vec<f64>,
    tentative_steps: Vec<f64>,
    f_x: f64,
    counter: EvalCounter,
    exhausted: bool,
}

impl SolverState {
    /// Validates inputs, then spends one evaluation on `f(x0)`.
    pub fn new(problem: &Problem, params: &SolverParams, x0: &[f64]) -> Result<Self> {
        Self::with_counter(
            problem,
            params,
            x0,
            EvalCounter::with_limit(params.max_evaluations),
        )
    }

    pub fn with_counter(
        problem: &Problem,
        params: &SolverParams,
        x0: &[f64],
        mut counter: EvalCounter,
    ) -> Result<Self> {
        let n = problem.dim();
        params.validate(n)?;
        problem.bounds().check_feasible(x0)?;
        let f_x = problem.evaluate(&mut counter, x0)?;
        Ok(Self {
            k: 0,
            x: x0.to_vec(),
            tentative_steps: params.initial_steps.clone(),
            f_x,
            counter,
            exhausted: false,
        })
    }

    pub fn iteration(&self) -> u64 {
        self.k
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn f_x(&self) -> f64 {
        self.f_x
    }

    pub fn tentative_steps(&self) -> &[f64] {
        &self.tentative_steps
    }

    pub fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    pub fn counter_mut(&mut self) -> &mut EvalCounter {
        &mut self.counter
    }

    /// `Δ_k = max_i α̃_k^i`.
    pub fn delta(&self) -> f64 {
        self.tentative_steps.iter().copied().fold(0.0, f64::max)
    }

    /// Whether a previous step ran out of evaluations.
    pub fn exhausted(&self) -> bool {
        self.exhausted || self.counter.exhausted()
    }

    /// One outer iteration: a full sweep over coordinates `0..n`.
    pub fn step(
        &mut self,
        problem: &Problem,
        params: &SolverParams,
        mode: TraceMode,
    ) -> Result<IterateRecord> {
        let n = self.x.len();
        let delta_k = self.delta();
        let evals_before = self.counter.count();
        let x_before = self.x.clone();
        let f_before = self.f_x;

        let mut y = self.x.clone();
        let mut f_y = self.f_x;
        let mut nu = vec![0.0; n];
        let mut alpha = vec![0.0; n];
        let mut dir_sign = vec![1i8; n];
        let mut hit_bound = vec![false; n];
        let mut accepted_probes = vec![0u32; n];
        let mut sweep_points = (mode == TraceMode::Verbose).then(|| vec![y.clone()]);
        let mut complete = true;

        for i in 0..n {
            nu[i] = self.tentative_steps[i].max(params.c * delta_k);
            if !complete {
                continue;
            }
            let out = line_search(
                problem,
                &mut self.counter,
                &mut y,
                f_y,
                i,
                params.gamma,
                params.delta,
                nu[i],
            )?;
            if out.succeeded() {
                y[i] = out.coordinate;
                f_y = out.value;
                alpha[i] = out.step;
                dir_sign[i] = out.direction.as_i8();
                hit_bound[i] = out.hit_bound;
                accepted_probes[i] = out.accepted.len() as u32;
            }
            if let Some(points) = sweep_points.as_mut() {
                points.push(y.clone());
            }
            if out.budget_exhausted {
                complete = false;
            }
        }

        let success = alpha.iter().any(|&a| a > 0.0);
        if complete {
            for i in 0..n {
                self.tentative_steps[i] = if !success {
                    params.theta * nu[i]
                } else if alpha[i] > 0.0 {
                    alpha[i]
                } else {
                    nu[i]
                };
            }
        } else {
            self.exhausted = true;
        }

        let record = IterateRecord {
            k: self.k,
            x_before,
            x_after: y.clone(),
            delta: delta_k,
            nu,
            alpha,
            dir_sign,
            hit_bound,
            accepted_probes,
            success,
            f_before,
            f_after: f_y,
            evals_before,
            evals_cumulative: self.counter.count(),
            complete,
            sweep_points,
        };
        self.x = y;
        self.f_x = f_y;
        self.k += 1;
        Ok(record)
    }

    fn terminal(&self, reason: StopReason) -> Terminal {
        Terminal {
            reason,
            x: self.x.clone(),
            f: self.f_x,
            delta: self.delta(),
            tentative_steps: self.tentative_steps.clone(),
            iterations: self.k,
            evaluations: self.counter.count(),
        }
    }
}

/// Runs the solver from `x0` until `Δ_k <= stop_delta` or a budget runs out.
pub fn solve(problem: &Problem, params: &SolverParams, x0: &[f64]) -> Result<Trace> {
    solve_with_mode(problem, params, x0, TraceMode::Compact)
}

pub fn solve_with_mode(
    problem: &Problem,
    params: &SolverParams,
    x0: &[f64],
    mode: TraceMode,
) -> Result<Trace> {
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x0.len(),
        });
    }
    let mut state = SolverState::new(problem, params, x0)?;
    let mut records = Vec::new();
    let reason = loop {
        if state.delta() <= params.stop_delta {
            break StopReason::DeltaTol;
        }
        if state.exhausted() {
            break StopReason::Budget;
        }
        if state.iteration() >= params.max_iterations {
            break StopReason::IterationLimit;
        }
        records.push(state.step(problem, params, mode)?);
    };
    Ok(Trace {
        records,
        terminal: state.terminal(reason),
    })
}
