//! Coordinate line search with sufficient decrease and extrapolation.
//!
//! Along coordinate `i` the search first checks that a step of length `ν` fits
//! inside the box in at least one direction. It then probes `-e_i` before
//! `+e_i`, accepting the first direction where
//!
//! ```text
//! f(x + ν d) <= f(x) - γ ν²
//! ```
//!
//! After an acceptance the step is expanded to `ω = min(α/δ, α_max)` for as
//! long as `α < α_max` and `f(x + ω d) <= f(x + α d) - γ (ω - α)²`, where
//! `α_max` is the distance to the bound along `d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{EvalCounter, Problem};

/// Upper limit on expansion probes in one line search.
pub const MAX_EXPANSIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Minus,
    Plus,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Minus => -1.0,
            Direction::Plus => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Direction::Minus => -1,
            Direction::Plus => 1,
        }
    }
}

/// A step that passed its acceptance test, with the objective value there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedStep {
    pub step: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    /// Direction `d = sign · e_i`. Meaningless when `step == 0`.
    pub direction: Direction,
    /// Accepted step length `α`; zero on failure.
    pub step: f64,
    /// Objective evaluations spent by this call.
    pub probes: u64,
    /// Whether `α` reached the distance to the bound along `d`.
    pub hit_bound: bool,
    /// New value of `x_i`. Equal to the bound, bit for bit, when `hit_bound`.
    pub coordinate: f64,
    /// Objective value at the new point (the input `f(x)` on failure).
    pub value: f64,
    /// Every accepted step in order: the initial probe, then each expansion.
    pub accepted: Vec<AcceptedStep>,
    /// The evaluation budget ran out; `step` is the last accepted one.
    pub budget_exhausted: bool,
}

impl LineSearchOutcome {
    fn failure(x_i: f64, fx: f64, probes: u64) -> Self {
        Self {
            direction: Direction::Plus,
            step: 0.0,
            probes,
            hit_bound: false,
            coordinate: x_i,
            value: fx,
            accepted: Vec::new(),
            budget_exhausted: false,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.step > 0.0
    }

    /// Number of accepted expansions beyond the initial step.
    pub fn expansions(&self) -> usize {
        self.accepted.len().saturating_sub(1)
    }
}

/// Coordinate value reached from `x_i` by moving `step` along `dir`.
///
/// A step equal to `max_step` lands on the bound verbatim; any other step is
/// kept inside `[lower, upper]` so rounding cannot leave the box.
fn coordinate_after(
    x_i: f64,
    dir: Direction,
    step: f64,
    max_step: f64,
    lower: f64,
    upper: f64,
) -> f64 {
    if step == max_step {
        return match dir {
            Direction::Minus => lower,
            Direction::Plus => upper,
        };
    }
    (x_i + dir.sign() * step).clamp(lower, upper)
}

/// Sufficient decrease `f_new <= f_ref - gamma * s^2`, tested on the
/// difference of the two values. Near convergence `gamma * s^2` drops below
/// the spacing of floats around `f_ref`, and the subtracted form would then
/// accept points with no decrease at all.
fn sufficient_decrease(f_new: f64, f_ref: f64, gamma: f64, s: f64) -> bool {
    f_new < f_ref && f_new - f_ref <= -(gamma * s * s)
}

/// Runs the line search along coordinate `i` from the feasible point `x`,
/// whose objective value `fx` is supplied by the caller.
///
/// `x` is used as scratch space and restored before returning.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    problem: &Problem,
    counter: &mut EvalCounter,
    x: &mut [f64],
    fx: f64,
    i: usize,
    gamma: f64,
    delta: f64,
    nu: f64,
) -> Result<LineSearchOutcome> {
    let lower = problem.bounds().lower()[i];
    let upper = problem.bounds().upper()[i];
    let x_i = x[i];
    let room_down = x_i - lower;
    let room_up = upper - x_i;

    if nu > room_down.max(room_up) {
        return Ok(LineSearchOutcome::failure(x_i, fx, 0));
    }

    let mut probes = 0u64;
    let mut eval_at = |x: &mut [f64], value: f64, probes: &mut u64| -> Result<f64> {
        x[i] = value;
        let out = problem.evaluate(counter, x);
        x[i] = x_i;
        if out.is_ok() {
            *probes += 1;
        }
        out
    };

    let mut start = None;
    for (dir, room) in [(Direction::Minus, room_down), (Direction::Plus, room_up)] {
        if nu > room {
            continue;
        }
        let y_i = coordinate_after(x_i, dir, nu, room, lower, upper);
        let f_y = match eval_at(x, y_i, &mut probes) {
            Ok(v) => v,
            Err(Error::BudgetExhausted(_)) => {
                let mut out = LineSearchOutcome::failure(x_i, fx, probes);
                out.budget_exhausted = true;
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        if sufficient_decrease(f_y, fx, gamma, nu) {
            start = Some((dir, room, y_i, f_y));
            break;
        }
    }

    let Some((dir, max_step, first_coord, first_value)) = start else {
        return Ok(LineSearchOutcome::failure(x_i, fx, probes));
    };

    let mut alpha = nu;
    let mut f_alpha = first_value;
    let mut coord = first_coord;
    let mut accepted = vec![AcceptedStep {
        step: alpha,
        value: f_alpha,
    }];
    let mut budget_exhausted = false;
    let mut expansions = 0usize;

    while alpha < max_step {
        if expansions == MAX_EXPANSIONS {
            return Err(Error::ExpansionCap {
                coordinate: i,
                cap: MAX_EXPANSIONS,
            });
        }
        let omega = (alpha / delta).min(max_step);
        let w_coord = coordinate_after(x_i, dir, omega, max_step, lower, upper);
        let f_omega = match eval_at(x, w_coord, &mut probes) {
            Ok(v) => v,
            Err(Error::BudgetExhausted(_)) => {
                budget_exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        expansions += 1;
        let gap = omega - alpha;
        if sufficient_decrease(f_omega, f_alpha, gamma, gap) {
            alpha = omega;
            f_alpha = f_omega;
            coord = w_coord;
            accepted.push(AcceptedStep {
                step: alpha,
                value: f_alpha,
            });
        } else {
            break;
        }
    }

    Ok(LineSearchOutcome {
        direction: dir,
        step: alpha,
        probes,
        hit_bound: alpha == max_step,
        coordinate: coord,
        value: f_alpha,
        accepted,
        budget_exhausted,
    })
}
