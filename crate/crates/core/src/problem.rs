//! Bounds, the counted objective oracle and per-problem metadata.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box `[l, u]` with `l_i < u_i`. Entries may be infinite, never NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidBounds("dimension must be positive".into()));
        }
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(Error::InvalidBounds(format!("NaN bound at coordinate {i}")));
            }
            if l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidBounds(format!(
                    "coordinate {i}: lower bound may not be +inf nor upper bound -inf"
                )));
            }
            if !(l < u) {
                return Err(Error::InvalidBounds(format!(
                    "coordinate {i}: lower {l} must be strictly below upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Same interval `[lower, upper]` on every coordinate.
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; n], vec![upper; n])
    }

    pub fn unbounded(n: usize) -> Result<Self> {
        Self::uniform(n, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Exact componentwise feasibility check, no tolerance.
    pub fn check_feasible(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            // NaN fails both comparisons and is reported as infeasible.
            if !(self.lower[i] <= v && v <= self.upper[i]) {
                return Err(Error::Infeasible {
                    index: i,
                    value: v,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check_feasible(x).is_ok()
    }
}

/// Lipschitz and gradient-norm constants of `∇f` over the box.
///
/// `l` bounds the full gradient, `coordinate[i]` the partial `∇_i f` along
/// `e_i`, and `m_g` bounds `‖∇f‖`. All three only need to be valid upper bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzInfo {
    pub l: f64,
    pub coordinate: Vec<f64>,
    pub l_max: f64,
    pub m_g: f64,
}

impl LipschitzInfo {
    pub fn new(l: f64, coordinate: Vec<f64>, m_g: f64) -> Self {
        let l_max = coordinate.iter().copied().fold(0.0, f64::max);
        Self {
            l,
            coordinate,
            l_max,
            m_g,
        }
    }
}

pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type Gradient = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A bound-constrained minimization problem.
///
/// Only `objective` and `bounds` are used by the solver. The remaining fields
/// feed the verification layer.
#[derive(Clone)]
pub struct Problem {
    bounds: Bounds,
    objective: Objective,
    gradient: Option<Gradient>,
    lipschitz: Option<LipschitzInfo>,
    known_solution: Option<Vec<f64>>,
    f_min: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("bounds", &self.bounds)
            .field("gradient", &self.gradient.is_some())
            .field("lipschitz", &self.lipschitz)
            .field("known_solution", &self.known_solution)
            .field("f_min", &self.f_min)
            .finish()
    }
}

impl Problem {
    pub fn new<F>(bounds: Bounds, objective: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            bounds,
            objective: Arc::new(objective),
            gradient: None,
            lipschitz: None,
            known_solution: None,
            f_min: None,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_lipschitz(mut self, info: LipschitzInfo) -> Self {
        self.lipschitz = Some(info);
        self
    }

    pub fn with_known_solution(mut self, x: Vec<f64>) -> Self {
        self.known_solution = Some(x);
        self
    }

    pub fn with_f_min(mut self, f_min: f64) -> Self {
        self.f_min = Some(f_min);
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn lipschitz(&self) -> Option<&LipschitzInfo> {
        self.lipschitz.as_ref()
    }

    pub fn known_solution(&self) -> Option<&[f64]> {
        self.known_solution.as_deref()
    }

    pub fn f_min(&self) -> Option<f64> {
        self.f_min
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Analytic gradient, if the problem carries one.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    /// Raw objective value, uncounted. Meant for verification code only;
    /// the solver goes through [`Problem::evaluate`].
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    /// Counted evaluation of `f(x)`.
    ///
    /// Fails without calling the oracle if `x` is infeasible or the budget in
    /// `counter` is spent. Values are never cached.
    pub fn evaluate(&self, counter: &mut EvalCounter, x: &[f64]) -> Result<f64> {
        self.bounds.check_feasible(x)?;
        if let Some(limit) = counter.limit {
            if counter.count >= limit {
                return Err(Error::BudgetExhausted(limit));
            }
        }
        let value = (self.objective)(x);
        counter.count += 1;
        if let Some(log) = counter.log.as_mut() {
            log.push(Evaluation {
                point: x.to_vec(),
                value,
            });
        }
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective {
                point: x.to_vec(),
                value,
            });
        }
        Ok(value)
    }
}

/// One objective call, recorded when event logging is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Number of objective calls made in one solve session, with an optional cap.
#[derive(Debug, Clone, Default)]
pub struct EvalCounter {
    count: u64,
    limit: Option<u64>,
    log: Option<Vec<Evaluation>>,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_limit(limit: u64) -> Self {
        Self {
            limit: Some(limit),
            ..Self::default()
        }
    }

    /// Keep every evaluated point and value.
    pub fn logging(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn limit(&self) -> Option<u64> {
        self.limit
    }

    pub fn exhausted(&self) -> bool {
        self.limit.is_some_and(|l| self.count >= l)
    }

    pub fn events(&self) -> Option<&[Evaluation]> {
        self.log.as_deref()
    }

    pub fn take_events(&mut self) -> Option<Vec<Evaluation>> {
        self.log.as_mut().map(std::mem::take)
    }
}
