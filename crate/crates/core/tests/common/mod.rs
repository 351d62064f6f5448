//! Oracles plus proptest strategies shared by the integration tests.
#![allow(dead_code)]

pub mod oracle;

pub use oracle::*;

use proptest::prelude::*;

/// Random box, feasible point (often on a bound) and gradient, `n <= max_n`.
/// Some bounds are infinite.
pub fn box_instance(
    max_n: usize,
) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(
                (
                    -3.0..1.0f64,
                    0.05..4.0f64,
                    prop_oneof![
                        Just(0.0),
                        Just(1.0),
                        0.0..1.0f64,
                        0.0..0.05f64,
                        0.95..1.0f64
                    ],
                    0..10u8,
                ),
                n,
            ),
            prop::collection::vec(prop_oneof![3 => -5.0..5.0f64, 1 => Just(0.0)], n),
        )
            .prop_map(|(coords, g)| {
                let mut lower = Vec::new();
                let mut upper = Vec::new();
                let mut x = Vec::new();
                for (l, w, t, inf) in coords {
                    let u = l + w;
                    let xi = if t == 1.0 { u } else { (l + t * w).min(u) };
                    x.push(xi);
                    lower.push(if inf == 0 && xi != l {
                        f64::NEG_INFINITY
                    } else {
                        l
                    });
                    upper.push(if inf == 1 && xi != u {
                        f64::INFINITY
                    } else {
                        u
                    });
                }
                (lower, upper, x, g)
            })
    })
}
