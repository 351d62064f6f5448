//! Seeded benchmark problems with analytic gradients and certified metadata.
//!
//! Every problem carries a known stationary point, `f_min` over its box and
//! valid upper bounds `L`, `L_i`, `M_g`, so all trace checks can run.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Bounds, LipschitzInfo, Problem};

/// Relative inflation applied to constants computed in floating point, so
/// that rounding in `QDQᵀ` cannot make a declared bound slightly too small.
const CERTIFY: f64 = 1.0 + 1e-12;

/// Largest dimension for which `M_g` of a quadratic is computed by visiting
/// every corner of the box.
const CORNER_ENUMERATION_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub degenerate: bool,
    pub quadratic: bool,
    pub even_dimension_only: bool,
}

pub const REGISTRY: &[ProblemInfo] = &[
    ProblemInfo {
        name: "quad-interior",
        description: "convex quadratic, spectrum in [1,10], minimizer strictly inside [-1,1]^n",
        degenerate: false,
        quadratic: true,
        even_dimension_only: false,
    },
    ProblemInfo {
        name: "quad-corner",
        description: "convex quadratic on [-1,1]^n whose constrained minimizer lies on bounds with strict complementarity",
        degenerate: false,
        quadratic: true,
        even_dimension_only: false,
    },
    ProblemInfo {
        name: "linear-edge",
        description: "linear objective c^T x with c > 0 on [0,1]^n; every coordinate strict-active at 0",
        degenerate: false,
        quadratic: true,
        even_dimension_only: false,
    },
    ProblemInfo {
        name: "degenerate-bound",
        description: "||x||^2 on [0,1]^n; minimizer on the lower bounds with zero gradient",
        degenerate: true,
        quadratic: true,
        even_dimension_only: false,
    },
    ProblemInfo {
        name: "rosenbrock-box",
        description: "extended Rosenbrock on [-2,2]^n (n even), minimizer at the all-ones point",
        degenerate: false,
        quadratic: false,
        even_dimension_only: true,
    },
    ProblemInfo {
        name: "illcond-quad",
        description: "convex quadratic with spectrum [1e-4,1] (condition number 1e4), minimizer inside [-1,1]^n",
        degenerate: false,
        quadratic: true,
        even_dimension_only: false,
    },
];

pub fn lookup(name: &str) -> Option<&'static ProblemInfo> {
    REGISTRY.iter().find(|p| p.name == name)
}

/// A fully populated benchmark problem.
#[derive(Debug, Clone)]
pub struct SuiteProblem {
    pub name: String,
    pub n: usize,
    pub seed: u64,
    pub problem: Problem,
    pub degenerate: bool,
    pub f_min_over_box: f64,
}

impl SuiteProblem {
    pub fn known_solution(&self) -> &[f64] {
        self.problem
            .known_solution()
            .expect("suite problems always carry a solution")
    }

    pub fn lipschitz(&self) -> &LipschitzInfo {
        self.problem
            .lipschitz()
            .expect("suite problems always carry Lipschitz metadata")
    }
}

/// Builds the named problem for dimension `n` and `seed`.
pub fn make_problem(name: &str, n: usize, seed: u64) -> Result<SuiteProblem> {
    let info = lookup(name).ok_or_else(|| Error::UnknownProblem(name.to_string()))?;
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if info.even_dimension_only && !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "{name} requires an even dimension, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (problem, f_min) = match name {
        "quad-interior" => interior_quadratic(n, &mut rng, &linear_spectrum(n, 1.0, 10.0)),
        "illcond-quad" => interior_quadratic(n, &mut rng, &geometric_spectrum(n, 1e-4, 1.0)),
        "quad-corner" => corner_quadratic(n, &mut rng),
        "linear-edge" => linear_edge(n, &mut rng),
        "degenerate-bound" => degenerate_bound(n),
        "rosenbrock-box" => rosenbrock_box(n, 2.0),
        _ => unreachable!("registry and constructors out of sync"),
    }?;
    Ok(SuiteProblem {
        name: name.to_string(),
        n,
        seed,
        problem: problem.with_f_min(f_min),
        degenerate: info.degenerate,
        f_min_over_box: f_min,
    })
}

fn linear_spectrum(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    (0..n)
        .map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64)
        .collect()
}

fn geometric_spectrum(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let ratio = hi / lo;
    (0..n)
        .map(|j| lo * ratio.powf(j as f64 / (n - 1) as f64))
        .collect()
}

/// Orthogonal matrix built from one Givens rotation per coordinate pair.
fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let angle = rng.gen_range(0.0..2.0 * PI);
            let (s, c) = angle.sin_cos();
            for r in 0..n {
                let a = q[(r, i)];
                let b = q[(r, j)];
                q[(r, i)] = c * a - s * b;
                q[(r, j)] = s * a + c * b;
            }
        }
    }
    q
}

/// `f(x) = ½ xᵀAx - bᵀx` with metadata on a box.
struct Quadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
    lambda_max: f64,
}

impl Quadratic {
    fn from_spectrum(spectrum: &[f64], rng: &mut ChaCha8Rng) -> Self {
        let n = spectrum.len();
        let q = random_rotation(n, rng);
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(spectrum));
        let mut a = &q * d * q.transpose();
        // symmetrize away rounding
        let at = a.transpose();
        a = (a + at) * 0.5;
        let lambda_max = spectrum.iter().copied().fold(0.0, f64::max);
        Self {
            a,
            b: DVector::zeros(n),
            lambda_max,
        }
    }

    fn gradient_at(&self, x: &[f64]) -> DVector<f64> {
        &self.a * DVector::from_column_slice(x) - &self.b
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        0.5 * v.dot(&(&self.a * &v)) - self.b.dot(&v)
    }

    fn lipschitz(&self, bounds: &Bounds) -> LipschitzInfo {
        let n = self.a.nrows();
        let rows = (0..n)
            .map(|i| self.a.row(i).iter().map(|v| v.abs()).sum::<f64>() * CERTIFY)
            .collect();
        LipschitzInfo::new(self.lambda_max * CERTIFY, rows, self.gradient_bound(bounds))
    }

    /// Largest `‖Ax - b‖` over the box. The norm is convex, so the maximum is
    /// attained at a corner.
    fn gradient_bound(&self, bounds: &Bounds) -> f64 {
        let n = self.a.nrows();
        let (l, u) = (bounds.lower(), bounds.upper());
        if n <= CORNER_ENUMERATION_MAX_N {
            let mut best = 0.0f64;
            let mut corner = vec![0.0; n];
            for mask in 0u32..(1u32 << n) {
                for (i, c) in corner.iter_mut().enumerate() {
                    *c = if mask & (1 << i) != 0 { u[i] } else { l[i] };
                }
                best = best.max(self.gradient_at(&corner).norm());
            }
            best * CERTIFY
        } else {
            // Interval bound per component: |a_iᵀ m - b_i| + Σ_j |a_ij| r_j.
            let mid: Vec<f64> = l.iter().zip(u).map(|(a, b)| 0.5 * (a + b)).collect();
            let g_mid = self.gradient_at(&mid);
            let sq: f64 = (0..n)
                .map(|i| {
                    let spread: f64 = (0..n)
                        .map(|j| self.a[(i, j)].abs() * 0.5 * (u[j] - l[j]))
                        .sum();
                    let m = g_mid[i].abs() + spread;
                    m * m
                })
                .sum();
            sq.sqrt() * CERTIFY
        }
    }

    fn into_problem(self, bounds: Bounds, solution: Vec<f64>) -> (Problem, f64) {
        let lip = self.lipschitz(&bounds);
        let f_min = self.value_at(&solution);
        let q = std::sync::Arc::new(self);
        let qf = q.clone();
        let problem = Problem::new(bounds, move |x| qf.value_at(x))
            .with_gradient(move |x| q.gradient_at(x).as_slice().to_vec())
            .with_lipschitz(lip)
            .with_known_solution(solution);
        (problem, f_min)
    }
}

fn interior_quadratic(n: usize, rng: &mut ChaCha8Rng, spectrum: &[f64]) -> Result<(Problem, f64)> {
    let bounds = Bounds::uniform(n, -1.0, 1.0)?;
    let mut quad = Quadratic::from_spectrum(spectrum, rng);
    let x_star: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    quad.b = &quad.a * DVector::from_column_slice(&x_star);
    Ok(quad.into_problem(bounds, x_star))
}

/// Picks an active pattern and a gradient at the solution first, then sets
/// `b = A x* - g*` so that `x*` satisfies the KKT conditions with
/// `|g*_i| >= 0.5` on every active coordinate.
fn corner_quadratic(n: usize, rng: &mut ChaCha8Rng) -> Result<(Problem, f64)> {
    let bounds = Bounds::uniform(n, -1.0, 1.0)?;
    let mut quad = Quadratic::from_spectrum(&linear_spectrum(n, 1.0, 10.0), rng);
    let mut pattern: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3u8)).collect();
    if pattern.iter().all(|&p| p == 2) {
        pattern[0] = rng.gen_range(0..2u8);
    }
    let mut x_star = vec![0.0; n];
    let mut g_star = vec![0.0; n];
    for i in 0..n {
        match pattern[i] {
            0 => {
                x_star[i] = -1.0;
                g_star[i] = rng.gen_range(0.5..2.0);
            }
            1 => {
                x_star[i] = 1.0;
                g_star[i] = -rng.gen_range(0.5..2.0);
            }
            _ => x_star[i] = rng.gen_range(-0.5..0.5),
        }
    }
    quad.b = &quad.a * DVector::from_column_slice(&x_star) - DVector::from_column_slice(&g_star);
    Ok(quad.into_problem(bounds, x_star))
}

fn linear_edge(n: usize, rng: &mut ChaCha8Rng) -> Result<(Problem, f64)> {
    let bounds = Bounds::uniform(n, 0.0, 1.0)?;
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let m_g = c.iter().map(|v| v * v).sum::<f64>().sqrt() * CERTIFY;
    let cf = c.clone();
    let problem = Problem::new(bounds, move |x| x.iter().zip(&cf).map(|(a, b)| a * b).sum())
        .with_gradient(move |_| c.clone())
        .with_lipschitz(LipschitzInfo::new(0.0, vec![0.0; n], m_g))
        .with_known_solution(vec![0.0; n]);
    Ok((problem, 0.0))
}

fn degenerate_bound(n: usize) -> Result<(Problem, f64)> {
    let bounds = Bounds::uniform(n, 0.0, 1.0)?;
    let problem = Problem::new(bounds, |x| x.iter().map(|v| v * v).sum())
        .with_gradient(|x| x.iter().map(|v| 2.0 * v).collect())
        .with_lipschitz(LipschitzInfo::new(
            2.0,
            vec![2.0; n],
            2.0 * (n as f64).sqrt() * CERTIFY,
        ))
        .with_known_solution(vec![0.0; n]);
    Ok((problem, 0.0))
}

/// `Σ_pairs 100(b - a²)² + (1 - a)²` on `[-r, r]^n`, with Gershgorin bounds
/// on the Hessian over the box.
fn rosenbrock_box(n: usize, r: f64) -> Result<(Problem, f64)> {
    let bounds = Bounds::uniform(n, -r, r)?;
    let h_aa = 1200.0 * r * r + 400.0 * r + 2.0;
    let h_ab = 400.0 * r;
    let h_bb = 200.0;
    let l = (h_aa + h_ab).max(h_bb + h_ab);
    let coordinate = (0..n)
        .map(|i| if i % 2 == 0 { h_aa } else { h_bb })
        .collect();
    let g_a = 400.0 * r * (r + r * r) + 2.0 * (1.0 + r);
    let g_b = 200.0 * (r + r * r);
    let m_g = ((n / 2) as f64).sqrt() * (g_a * g_a + g_b * g_b).sqrt();
    let problem = Problem::new(bounds, |x| {
        x.chunks_exact(2)
            .map(|p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2))
            .sum()
    })
    .with_gradient(|x| {
        let mut g = vec![0.0; x.len()];
        for (k, p) in x.chunks_exact(2).enumerate() {
            let t = p[1] - p[0] * p[0];
            g[2 * k] = -400.0 * p[0] * t - 2.0 * (1.0 - p[0]);
            g[2 * k + 1] = 200.0 * t;
        }
        g
    })
    .with_lipschitz(LipschitzInfo::new(l, coordinate, m_g))
    .with_known_solution(vec![1.0; n]);
    Ok((problem, 0.0))
}

/// How to pick the starting point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "point")]
pub enum StartPolicy {
    /// Midpoint of the box.
    Center,
    /// Uniform sample from the box, seeded.
    Random,
    /// The upper corner `u`.
    Corner,
    Explicit(Vec<f64>),
}

/// Starting point for `policy`. Random starts draw from a stream separate
/// from the one that built the problem.
pub fn initial_point(problem: &SuiteProblem, policy: &StartPolicy) -> Result<Vec<f64>> {
    let bounds = problem.problem.bounds();
    let x0 = match policy {
        StartPolicy::Center => bounds
            .lower()
            .iter()
            .zip(bounds.upper())
            .map(|(l, u)| 0.5 * (l + u))
            .collect(),
        StartPolicy::Corner => bounds.upper().to_vec(),
        StartPolicy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(problem.seed ^ 0x005e_ed0f_57a7);
            bounds
                .lower()
                .iter()
                .zip(bounds.upper())
                .map(|(&l, &u)| rng.gen_range(l..=u))
                .collect()
        }
        StartPolicy::Explicit(x) => x.clone(),
    };
    bounds.check_feasible(&x0)?;
    Ok(x0)
}
