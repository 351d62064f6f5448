//! First-order geometry of the box: ε-active sets, tangent and normal cones,
//! the criticality measure `χ` and a stationarity report.
//!
//! Nothing here is used by the solver. These functions need an exact gradient
//! and exist to audit iterates.

use crate::error::{Error, Result};
use crate::problem::Bounds;

/// Coordinates within `ε` of their lower and upper bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsActiveSets {
    at_lower: Vec<bool>,
    at_upper: Vec<bool>,
}

impl EpsActiveSets {
    /// Builds the sets from explicit index lists.
    pub fn from_indices(n: usize, lower: &[usize], upper: &[usize]) -> Self {
        let mut at_lower = vec![false; n];
        let mut at_upper = vec![false; n];
        lower.iter().for_each(|&i| at_lower[i] = true);
        upper.iter().for_each(|&i| at_upper[i] = true);
        Self { at_lower, at_upper }
    }

    pub fn dim(&self) -> usize {
        self.at_lower.len()
    }

    pub fn is_lower(&self, i: usize) -> bool {
        self.at_lower[i]
    }

    pub fn is_upper(&self, i: usize) -> bool {
        self.at_upper[i]
    }

    /// `I_l(x, ε)` as sorted indices.
    pub fn lower_indices(&self) -> Vec<usize> {
        indices(&self.at_lower)
    }

    /// `I_u(x, ε)` as sorted indices.
    pub fn upper_indices(&self) -> Vec<usize> {
        indices(&self.at_upper)
    }
}

fn indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect()
}

/// `I_l(x,ε) = {i : x_i <= l_i + ε}` and `I_u(x,ε) = {i : x_i >= u_i - ε}`.
pub fn eps_active_sets(x: &[f64], eps: f64, bounds: &Bounds) -> EpsActiveSets {
    let at_lower = x
        .iter()
        .zip(bounds.lower())
        .map(|(&xi, &l)| xi <= l + eps)
        .collect();
    let at_upper = x
        .iter()
        .zip(bounds.upper())
        .map(|(&xi, &u)| xi >= u - eps)
        .collect();
    EpsActiveSets { at_lower, at_upper }
}

/// A signed coordinate direction `±e_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedAxis {
    pub index: usize,
    pub positive: bool,
}

impl SignedAxis {
    /// `-gᵀd` for `d = ±e_i`.
    pub fn descent(&self, g: &[f64]) -> f64 {
        if self.positive {
            -g[self.index]
        } else {
            g[self.index]
        }
    }
}

/// Generators of the ε-tangent cone; the zero vector is left implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeGenerators {
    pub directions: Vec<SignedAxis>,
}

/// `{-e_i : i ∉ I_l} ∪ {e_i : i ∉ I_u}`, minus directions first.
pub fn tangent_generators(sets: &EpsActiveSets) -> ConeGenerators {
    let n = sets.dim();
    let minus = (0..n)
        .filter(|&i| !sets.is_lower(i))
        .map(|index| SignedAxis {
            index,
            positive: false,
        });
    let plus = (0..n)
        .filter(|&i| !sets.is_upper(i))
        .map(|index| SignedAxis {
            index,
            positive: true,
        });
    ConeGenerators {
        directions: minus.chain(plus).collect(),
    }
}

/// Projection of `v` onto the ε-tangent cone.
pub fn project_tangent(v: &[f64], sets: &EpsActiveSets) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(i, &vi)| match (sets.is_lower(i), sets.is_upper(i)) {
            (true, true) => 0.0,
            (true, false) => vi.max(0.0),
            (false, true) => vi.min(0.0),
            (false, false) => vi,
        })
        .collect()
}

/// Projection of `v` onto the ε-normal cone.
pub fn project_normal(v: &[f64], sets: &EpsActiveSets) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(i, &vi)| match (sets.is_lower(i), sets.is_upper(i)) {
            (true, true) => vi,
            (true, false) => vi.min(0.0),
            (false, true) => vi.max(0.0),
            (false, false) => 0.0,
        })
        .collect()
}

/// `χ(x) = max { -gᵀd : l <= x + d <= u, ‖d‖ <= 1 }`.
///
/// For a multiplier `λ > 0` on the ball constraint the maximizer is
/// `d_i(λ) = clamp(-g_i / 2λ, l_i - x_i, u_i - x_i)`, and `‖d(λ)‖` does not
/// increase with `λ`. If the `λ → 0` limit already fits in the unit ball it is
/// optimal; otherwise `λ` is found by bisection on `‖d(λ)‖ = 1`.
pub fn chi(x: &[f64], g: &[f64], bounds: &Bounds) -> Result<f64> {
    if g.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: g.len(),
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    let lo: Vec<f64> = x
        .iter()
        .zip(bounds.lower())
        .map(|(&xi, &l)| l - xi)
        .collect();
    let hi: Vec<f64> = x
        .iter()
        .zip(bounds.upper())
        .map(|(&xi, &u)| u - xi)
        .collect();

    let g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if g_norm == 0.0 {
        return Ok(0.0);
    }

    // λ → 0: each coordinate runs to the bound on its descent side.
    let box_only: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(i, &gi)| {
            if gi < 0.0 {
                hi[i]
            } else if gi > 0.0 {
                lo[i]
            } else {
                0.0
            }
        })
        .collect();
    if box_only.iter().all(|d| d.is_finite()) && norm_sq(&box_only) <= 1.0 {
        return Ok(descent(g, &box_only).max(0.0));
    }

    let step = |lambda: f64| -> Vec<f64> {
        g.iter()
            .enumerate()
            .map(|(i, &gi)| (-gi / (2.0 * lambda)).clamp(lo[i], hi[i]))
            .collect()
    };

    let mut lambda_hi = g_norm / 2.0;
    while norm_sq(&step(lambda_hi)) > 1.0 {
        lambda_hi *= 2.0;
    }
    let mut lambda_lo = lambda_hi;
    while norm_sq(&step(lambda_lo)) <= 1.0 {
        lambda_lo /= 2.0;
        if lambda_lo < f64::MIN_POSITIVE {
            // The box-only branch would have caught this; be safe anyway.
            return Ok(descent(g, &step(lambda_hi)).max(0.0));
        }
    }

    let mut chi_hi = descent(g, &step(lambda_hi));
    for _ in 0..2000 {
        let chi_lo = descent(g, &step(lambda_lo));
        if (chi_lo - chi_hi).abs() < 1e-12 * (1.0 + chi_hi.abs()) {
            break;
        }
        let mid = 0.5 * (lambda_lo + lambda_hi);
        if mid <= lambda_lo || mid >= lambda_hi {
            break;
        }
        let d = step(mid);
        if norm_sq(&d) > 1.0 {
            lambda_lo = mid;
        } else {
            lambda_hi = mid;
            chi_hi = descent(g, &d);
        }
    }
    Ok(chi_hi.max(0.0))
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn descent(g: &[f64], d: &[f64]) -> f64 {
    -g.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()
}

/// First-order optimality at a point, judged with exact bound comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// Per-coordinate violation of the sign conditions on `∇f`.
    pub residual: Vec<f64>,
    /// Coordinates sitting exactly on a bound.
    pub active_set: Vec<usize>,
    /// Active coordinates with nonzero gradient.
    pub strict_active_set: Vec<usize>,
    /// Smallest `|∇_i f|` over the strict active set.
    pub zeta: Option<f64>,
}

impl StationarityReport {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_stationary(&self) -> bool {
        self.max_residual() == 0.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.strict_active_set.len() < self.active_set.len()
    }
}

pub fn stationarity_report(x: &[f64], g: &[f64], bounds: &Bounds) -> StationarityReport {
    let mut residual = Vec::with_capacity(x.len());
    let mut active_set = Vec::new();
    let mut strict_active_set = Vec::new();
    for (i, (&xi, &gi)) in x.iter().zip(g).enumerate() {
        let at_lower = xi == bounds.lower()[i];
        let at_upper = xi == bounds.upper()[i];
        let r = if at_lower {
            (-gi).max(0.0)
        } else if at_upper {
            gi.max(0.0)
        } else {
            gi.abs()
        };
        residual.push(r);
        if at_lower || at_upper {
            active_set.push(i);
            if gi != 0.0 {
                strict_active_set.push(i);
            }
        }
    }
    let zeta = strict_active_set
        .iter()
        .map(|&i| g[i].abs())
        .reduce(f64::min);
    StationarityReport {
        residual,
        active_set,
        strict_active_set,
        zeta,
    }
}
