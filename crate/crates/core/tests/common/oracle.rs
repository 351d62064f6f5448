//! Reference computations that share no code with the library.
#![allow(dead_code)]

/// `max -gᵀd` over `l - x <= d <= u - x`, `‖d‖ <= 1`, by visiting every
/// lower/upper/free pattern. Free coordinates follow `-g_F` scaled to use the
/// remaining norm; infeasible candidates are dropped.
pub fn chi_by_patterns(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let n = x.len();
    let lo: Vec<f64> = (0..n).map(|i| lower[i] - x[i]).collect();
    let hi: Vec<f64> = (0..n).map(|i| upper[i] - x[i]).collect();
    let mut best = 0.0f64;
    let patterns = 3usize.pow(n as u32);
    let mut d = vec![0.0; n];
    'pattern: for p in 0..patterns {
        let mut code = p;
        let mut fixed_sq = 0.0;
        let mut free = Vec::new();
        for i in 0..n {
            match code % 3 {
                0 => free.push(i),
                1 => {
                    if !lo[i].is_finite() {
                        continue 'pattern;
                    }
                    d[i] = lo[i];
                    fixed_sq += lo[i] * lo[i];
                }
                _ => {
                    if !hi[i].is_finite() {
                        continue 'pattern;
                    }
                    d[i] = hi[i];
                    fixed_sq += hi[i] * hi[i];
                }
            }
            code /= 3;
        }
        if fixed_sq > 1.0 + 1e-12 {
            continue;
        }
        let g_free = free.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt();
        let radius = (1.0 - fixed_sq).max(0.0).sqrt();
        for &i in &free {
            d[i] = if g_free > 0.0 {
                -g[i] * radius / g_free
            } else {
                0.0
            };
            let tol = 1e-12 * (1.0 + d[i].abs());
            if d[i] < lo[i] - tol || d[i] > hi[i] + tol {
                continue 'pattern;
            }
        }
        let value: f64 = -(0..n).map(|i| g[i] * d[i]).sum::<f64>();
        best = best.max(value);
    }
    best
}

/// Euclidean projection of `v` onto `cone(generators)` by cyclic coordinate
/// descent on the non-negative least-squares problem.
pub fn project_onto_cone(v: &[f64], generators: &[Vec<f64>]) -> Vec<f64> {
    let n = v.len();
    let mut weights = vec![0.0; generators.len()];
    let mut residual = v.to_vec();
    for _ in 0..10_000 {
        let mut moved = 0.0f64;
        for (j, a) in generators.iter().enumerate() {
            let aa: f64 = a.iter().map(|t| t * t).sum();
            let ar: f64 = a.iter().zip(&residual).map(|(p, q)| p * q).sum();
            let next = (weights[j] + ar / aa).max(0.0);
            let change = next - weights[j];
            if change != 0.0 {
                for i in 0..n {
                    residual[i] -= change * a[i];
                }
                weights[j] = next;
                moved = moved.max(change.abs());
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    (0..n).map(|i| v[i] - residual[i]).collect()
}

fn axis(n: usize, i: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = sign;
    e
}

/// `I_l(x, ε)` and `I_u(x, ε)` straight from their definitions.
pub fn active_sets(x: &[f64], eps: f64, lower: &[f64], upper: &[f64]) -> (Vec<bool>, Vec<bool>) {
    let il = (0..x.len()).map(|i| x[i] <= lower[i] + eps).collect();
    let iu = (0..x.len()).map(|i| x[i] >= upper[i] - eps).collect();
    (il, iu)
}

/// Outward normals of the ε-active bounds.
pub fn normal_cone_generators(il: &[bool], iu: &[bool]) -> Vec<Vec<f64>> {
    let n = il.len();
    let mut out = Vec::new();
    for i in 0..n {
        if il[i] {
            out.push(axis(n, i, -1.0));
        }
        if iu[i] {
            out.push(axis(n, i, 1.0));
        }
    }
    out
}

/// `{-e_i : i ∉ I_l} ∪ {e_i : i ∉ I_u}`.
pub fn tangent_cone_generators(il: &[bool], iu: &[bool]) -> Vec<Vec<f64>> {
    let n = il.len();
    let mut out = Vec::new();
    for i in 0..n {
        if !il[i] {
            out.push(axis(n, i, -1.0));
        }
        if !iu[i] {
            out.push(axis(n, i, 1.0));
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Result of [`reference_line_search`]: sign, step and evaluations spent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceStep {
    pub sign: i8,
    pub alpha: f64,
    pub evals: u64,
}

/// Coordinate line search written directly from its pseudo-code, with the
/// decrease test applied to the difference of stored values.
#[allow(clippy::too_many_arguments)]
pub fn reference_line_search(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    i: usize,
    gamma: f64,
    delta: f64,
    nu: f64,
) -> ReferenceStep {
    let decreases = |new: f64, old: f64, s: f64| new < old && new - old <= -gamma * s * s;
    let mut evals = 0;
    let fx = f(x);
    let at = |dir: f64, step: f64, max_step: f64| {
        let mut y = x.to_vec();
        y[i] = if step == max_step {
            if dir < 0.0 {
                lower[i]
            } else {
                upper[i]
            }
        } else {
            (x[i] + dir * step).clamp(lower[i], upper[i])
        };
        y
    };
    if nu > (upper[i] - x[i]).max(x[i] - lower[i]) {
        return ReferenceStep {
            sign: 1,
            alpha: 0.0,
            evals,
        };
    }
    let mut chosen = None;
    for (dir, room) in [(-1.0, x[i] - lower[i]), (1.0, upper[i] - x[i])] {
        if nu <= room {
            evals += 1;
            let fy = f(&at(dir, nu, room));
            if decreases(fy, fx, nu) {
                chosen = Some((dir, room, fy));
                break;
            }
        }
    }
    let Some((dir, max_step, mut f_alpha)) = chosen else {
        return ReferenceStep {
            sign: 1,
            alpha: 0.0,
            evals,
        };
    };
    let mut alpha = nu;
    while alpha < max_step {
        let omega = (alpha / delta).min(max_step);
        evals += 1;
        let fw = f(&at(dir, omega, max_step));
        if !decreases(fw, f_alpha, omega - alpha) {
            break;
        }
        alpha = omega;
        f_alpha = fw;
    }
    ReferenceStep {
        sign: if dir < 0.0 { -1 } else { 1 },
        alpha,
        evals,
    }
}
