//! Checks the benchmark suite's gradients and declared constants by sampling.
#![allow(clippy::needless_range_loop)]

use dfls::criticality::stationarity_report;
use dfls::problems::{make_problem, SuiteProblem, REGISTRY};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIMS: [usize; 4] = [1, 2, 5, 10];

fn instances() -> Vec<SuiteProblem> {
    let mut out = Vec::new();
    for info in REGISTRY {
        for n in DIMS {
            if info.even_dimension_only && n % 2 == 1 {
                continue;
            }
            for seed in [0, 1, 17] {
                out.push(make_problem(info.name, n, seed).unwrap());
            }
        }
    }
    out
}

fn sample(sp: &SuiteProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let b = sp.problem.bounds();
    (0..sp.n)
        .map(|i| match rng.gen_range(0..8) {
            0 => b.lower()[i],
            1 => b.upper()[i],
            _ => rng.gen_range(b.lower()[i]..=b.upper()[i]),
        })
        .collect()
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|t| t * t).sum::<f64>().sqrt()
}

/// Difference quotient minus the rounding error of computing it, so tiny
/// steps cannot inflate a ratio past a valid constant.
fn ratio(diff: f64, magnitude: f64, step: f64) -> f64 {
    (diff - 4.0 * f64::EPSILON * magnitude).max(0.0) / step
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for sp in instances() {
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let x = sample(&sp, &mut rng);
            let g = sp.problem.gradient(&x).unwrap();
            let scale = g.iter().fold(1.0f64, |m, t| m.max(t.abs()));
            for i in 0..sp.n {
                let h = 1e-5 * (1.0 + x[i].abs());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (sp.problem.value(&xp) - sp.problem.value(&xm)) / (xp[i] - xm[i]);
                worst = worst.max((fd - g[i]).abs() / scale);
            }
        }
        assert!(
            worst <= 1e-6,
            "{} n={} seed={}: relative error {worst:e}",
            sp.name,
            sp.n,
            sp.seed
        );
    }
}

#[test]
fn declared_constants_bound_sampled_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let per_instance = 1_000_000 / instances().len();
    for sp in instances() {
        let lip = sp.lipschitz().clone();
        let b = sp.problem.bounds().clone();
        let (mut worst_l, mut worst_m) = (0.0f64, 0.0f64);
        let mut worst_li = vec![0.0f64; sp.n];
        for _ in 0..per_instance {
            let x = sample(&sp, &mut rng);
            let y = sample(&sp, &mut rng);
            let gx = sp.problem.gradient(&x).unwrap();
            let gy = sp.problem.gradient(&y).unwrap();
            worst_m = worst_m.max(norm(gx.iter().copied()));
            let dx = norm(x.iter().zip(&y).map(|(a, b)| a - b));
            if dx > 0.0 {
                let diff = norm(gx.iter().zip(&gy).map(|(a, b)| a - b));
                let mag = norm(gx.iter().copied()) + norm(gy.iter().copied());
                worst_l = worst_l.max(ratio(diff, mag, dx));
            }
            let i = rng.gen_range(0..sp.n);
            let mut z = x.clone();
            z[i] = rng.gen_range(b.lower()[i]..=b.upper()[i]);
            let s = z[i] - x[i];
            if s != 0.0 {
                let gz = sp.problem.gradient(&z).unwrap();
                let r = ratio((gz[i] - gx[i]).abs(), gz[i].abs() + gx[i].abs(), s.abs());
                worst_li[i] = worst_li[i].max(r);
            }
        }
        let tag = format!("{} n={} seed={}", sp.name, sp.n, sp.seed);
        assert!(worst_l <= lip.l, "{tag}: sampled L {worst_l} > {}", lip.l);
        assert!(
            worst_m <= lip.m_g,
            "{tag}: sampled |g| {worst_m} > {}",
            lip.m_g
        );
        for i in 0..sp.n {
            assert!(
                worst_li[i] <= lip.coordinate[i],
                "{tag}: sampled L_{i} {} > {}",
                worst_li[i],
                lip.coordinate[i]
            );
        }
        let l_max = lip.coordinate.iter().cloned().fold(0.0, f64::max);
        assert_eq!(lip.l_max, l_max);
    }
}

#[test]
fn known_solutions_are_stationary_and_minimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for sp in instances() {
        let x = sp.known_solution().to_vec();
        let g = sp.problem.gradient(&x).unwrap();
        let r = stationarity_report(&x, &g, sp.problem.bounds());
        assert!(
            r.max_residual() <= 1e-10,
            "{} residual {:e}",
            sp.name,
            r.max_residual()
        );
        assert_eq!(r.is_degenerate(), sp.degenerate, "{}", sp.name);
        let f_star = sp.problem.value(&x);
        assert!((f_star - sp.f_min_over_box).abs() <= 1e-12 * (1.0 + f_star.abs()));
        for _ in 0..2000 {
            let y = sample(&sp, &mut rng);
            assert!(
                sp.problem.value(&y) >= sp.f_min_over_box - 1e-12,
                "{}",
                sp.name
            );
        }
    }
}
