//! Numerical inverse Laplace transforms: fixed Talbot and Gaver-Stehfest.

use super::C64;
use std::f64::consts::{LN_2, PI};

/// Fixed-Talbot inversion with `m` nodes; `f` must be analytic to the right of the deformed contour.
pub fn talbot<F: Fn(C64) -> C64>(f: &F, t: f64, m: usize) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * (f(C64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..m {
        let th = k as f64 * PI / m as f64;
        let cot = th.cos() / th.sin();
        let s = C64::new(r * th * cot, r * th);
        let sigma = th + (th * cot - 1.0) * cot;
        acc += ((s * t).exp() * f(s) * C64::new(1.0, sigma)).re;
    }
    acc * r / m as f64
}

/// Stehfest weights for an even order `n`.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n.is_multiple_of(2) && n > 0, "Stehfest order must be even");
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |a, i| a * i as f64);
    (1..=n)
        .map(|k| {
            let mut v = 0.0;
            for j in k.div_ceil(2)..=k.min(half) {
                v += (j as f64).powi(half as i32) * fact(2 * j)
                    / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
            }
            if (half + k) % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect()
}

/// Gaver-Stehfest inversion using real abscissae only.
pub fn gaver_stehfest<F: Fn(f64) -> f64>(f: &F, t: f64, weights: &[f64]) -> f64 {
    let a = LN_2 / t;
    weights.iter().enumerate().map(|(i, w)| w * f((i + 1) as f64 * a)).sum::<f64>() * a
}
