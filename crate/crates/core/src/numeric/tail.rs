//! Tail transforms `T_k(v) = ∫_v^∞ (t-v)^k/k!·e^{-r(t-v)} g(t) dt` of a sampled density `g`.
//!
//! Computed on the sampling grid by a backward recursion that is exact for
//! piecewise-linear `g`, so the cost is linear in the grid size.

use super::C64;

/// `∫_0^h τ^k/k!·e^{-rτ} dτ` for `k = 0..=kmax`.
fn local_moments(r: C64, h: f64, kmax: usize) -> Vec<C64> {
    let z = r * h;
    let mut out = vec![C64::new(0.0, 0.0); kmax + 1];
    if z.norm() < 2.0 {
        // Σ_n (-r)^n h^{n+k+1} / (n! (n+k+1) k!)
        for (k, o) in out.iter_mut().enumerate() {
            let kf: f64 = (1..=k).map(|i| i as f64).product();
            let mut term = C64::new(h.powi(k as i32 + 1) / kf, 0.0);
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..60 {
                acc += term / (n + k + 1) as f64;
                term *= -z / (n + 1) as f64;
                if term.norm() < 1e-18 * acc.norm() {
                    break;
                }
            }
            *o = acc;
        }
    } else {
        let e = (-z).exp();
        out[0] = (1.0 - e) / r;
        let mut hk = 1.0;
        for k in 1..=kmax {
            hk *= h / k as f64;
            out[k] = (out[k - 1] - e * hk) / r;
        }
    }
    out
}

/// Returns `T[k][i]` for `k < power`, at nodes `v_i = i·h`; `g` is taken as zero beyond the grid.
pub fn tail_transform(g: &[f64], h: f64, rate: C64, power: usize) -> Vec<Vec<C64>> {
    let n = g.len();
    let mut t = vec![vec![C64::new(0.0, 0.0); n]; power];
    if n < 2 || power == 0 {
        return t;
    }
    let m = local_moments(rate, h, power);
    let decay = (-rate * h).exp();
    let mut hpow = vec![1.0; power];
    for k in 1..power {
        hpow[k] = hpow[k - 1] * h / k as f64;
    }
    for i in (0..n - 1).rev() {
        let (g0, g1) = (g[i], g[i + 1]);
        for k in 0..power {
            // Piecewise-linear g on [v_i, v_{i+1}]: g0 + (g1 - g0) τ/h.
            let lin = m[k] * g0 + (m[k + 1] * (k + 1) as f64 / h) * (g1 - g0);
            let mut carry = C64::new(0.0, 0.0);
            for j in 0..=k {
                carry += t[j][i + 1] * hpow[k - j];
            }
            t[k][i] = decay * carry + lin;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_density_is_reproduced() {
        // g(t) = 2 e^{-2t}; T_0(v) = ∫_v^∞ e^{-(t-v)} 2 e^{-2t} dt = (2/3) e^{-2v}
        let h = 1.0 / 512.0;
        let g: Vec<f64> = (0..512 * 30).map(|i| 2.0 * (-2.0 * i as f64 * h).exp()).collect();
        let t = tail_transform(&g, h, C64::new(1.0, 0.0), 2);
        for i in [0, 100, 1000] {
            let v = i as f64 * h;
            assert!((t[0][i].re - 2.0 / 3.0 * (-2.0 * v).exp()).abs() < 1e-6);
            // T_1(v) = ∫ (t-v) e^{-(t-v)} 2e^{-2t} = (2/9) e^{-2v}
            assert!((t[1][i].re - 2.0 / 9.0 * (-2.0 * v).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn moments_agree_across_branches() {
        let r = C64::new(1.9, 0.4);
        let a = local_moments(r, 1.0, 3);
        let b = local_moments(r * 1.0001, 1.0 / 1.0001, 3);
        // Scaling r·h is fixed, so I_k scales like h^{k+1}.
        for k in 0..=3 {
            assert!((a[k] - b[k] * 1.0001f64.powi(k as i32 + 1)).norm() < 1e-10);
        }
        let big = local_moments(C64::new(2.1, 0.0), 1.0, 2);
        let small = local_moments(C64::new(1.9999999, 0.0), 1.05, 2);
        assert!(big.iter().zip(&small).all(|(x, y)| (x - y).norm() < 0.2));
    }
}
