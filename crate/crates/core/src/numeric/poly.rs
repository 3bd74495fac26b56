//! Dense complex polynomials with ascending coefficients.

use super::C64;
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn constant(c: C64) -> Self {
        Poly(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    /// `s + a`
    pub fn linear(a: C64) -> Self {
        Poly(vec![a, C64::new(1.0, 0.0)])
    }

    pub fn from_real(c: &[f64]) -> Self {
        Poly(c.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Product of `(s + a)^m` over the given factors.
    pub fn from_linear_factors(factors: &[(C64, u32)]) -> Self {
        let mut p = Self::one();
        for &(a, m) in factors {
            for _ in 0..m {
                p = p.mul(&Self::linear(a));
            }
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C64 {
        *self.0.last().unwrap_or(&C64::new(0.0, 0.0))
    }

    /// Drops trailing coefficients whose modulus is below `tol` times the largest one.
    pub fn trim(mut self, tol: f64) -> Self {
        let scale = self.0.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while self.0.len() > 1 && self.leading().norm() <= tol * scale {
            self.0.pop();
        }
        if self.0.is_empty() {
            self.0.push(C64::new(0.0, 0.0));
        }
        self
    }

    pub fn eval(&self, s: C64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn deriv(&self) -> Self {
        if self.0.len() <= 1 {
            return Poly(vec![C64::new(0.0, 0.0)]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        let z = C64::new(0.0, 0.0);
        Poly((0..n).map(|k| *self.0.get(k).unwrap_or(&z) + *o.0.get(k).unwrap_or(&z)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        Poly(self.0.iter().map(|&x| x * c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = vec![C64::new(0.0, 0.0); self.0.len() + o.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// Coefficients of `p(a + t)` in powers of `t`.
    pub fn shift(&self, a: C64) -> Self {
        let mut c = self.0.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let hi = c[j + 1];
                c[j] += a * hi;
            }
        }
        Poly(c)
    }

    /// Exact division by `s`, discarding the constant term.
    pub fn div_s(&self) -> Self {
        if self.0.len() <= 1 {
            return Poly(vec![C64::new(0.0, 0.0)]);
        }
        Poly(self.0[1..].to_vec())
    }

    /// Quotient and remainder of division by `o`.
    pub fn div_rem(&self, o: &Self) -> (Self, Self) {
        let dn = o.degree();
        if self.degree() < dn {
            return (Poly(vec![C64::new(0.0, 0.0)]), self.clone());
        }
        let mut r = self.0.clone();
        let lead = o.leading();
        let mut q = vec![C64::new(0.0, 0.0); self.degree() - dn + 1];
        for k in (0..q.len()).rev() {
            let c = r[k + dn] / lead;
            q[k] = c;
            for j in 0..=dn {
                r[k + j] -= c * o.0[j];
            }
        }
        r.truncate(dn.max(1));
        (Poly(q), Poly(r))
    }

    /// All roots, from the eigenvalues of the companion matrix, each polished by one Newton step.
    pub fn roots(&self) -> Vec<C64> {
        let p = self.clone().trim(1e-300);
        let n = p.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = p.leading();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = C64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -p.0[i] / lead;
        }
        let eig: Vec<C64> = if p.0.iter().all(|c| c.im == 0.0) {
            let mr = m.map(|c| c.re);
            mr.complex_eigenvalues().iter().copied().collect()
        } else {
            m.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
        };
        let dp = p.deriv();
        eig.into_iter()
            .map(|z| {
                let d = dp.eval(z);
                if d.norm() > 0.0 {
                    let step = p.eval(z) / d;
                    if step.norm() < 1e-3 * (1.0 + z.norm()) {
                        return z - step;
                    }
                }
                z
            })
            .collect()
    }
}

/// Taylor coefficients (first `n`) of `1/p(t)` given those of `p(t)`, which must not vanish at 0.
pub fn series_reciprocal(p: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n == 0 {
        return out;
    }
    out[0] = C64::new(1.0, 0.0) / p[0];
    for k in 1..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..=k.min(p.len() - 1) {
            acc += p[j] * out[k - j];
        }
        out[k] = -acc / p[0];
    }
    out
}

/// Product of two truncated series.
pub fn series_mul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (i, &x) in a.iter().enumerate().take(n) {
        for (j, &y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn roots_of_real_quadratic() {
        let p = Poly::from_real(&[-2.0, 0.0, 1.0]);
        let mut r: Vec<f64> = p.roots().iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        assert!((r[0] + 2f64.sqrt()).abs() < 1e-14);
        assert!((r[1] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn roots_of_complex_cubic() {
        let want = [C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(3.0, -1.0)];
        let p = Poly::from_linear_factors(&want.map(|z| (-z, 1)));
        let got = p.roots();
        for w in want {
            assert!(got.iter().any(|g| (g - w).norm() < 1e-12));
        }
    }

    #[test]
    fn shift_matches_evaluation() {
        let p = Poly::from_real(&[1.0, -3.0, 0.5, 2.0]);
        let a = C64::new(0.3, -1.1);
        let q = p.shift(a);
        let t = C64::new(0.7, 0.2);
        assert!((q.eval(t) - p.eval(a + t)).norm() < 1e-13);
    }

    #[test]
    fn division_reconstructs() {
        let p = Poly::from_real(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let d = Poly::from_real(&[-1.0, 0.0, 2.0]);
        let (q, r) = p.div_rem(&d);
        let back = q.mul(&d).add(&r);
        for (x, y) in back.0.iter().zip(&p.0) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn reciprocal_series() {
        // 1/(1 - t) = 1 + t + t^2 + ...
        let r = series_reciprocal(&[c(1.0), c(-1.0)], 5);
        assert!(r.iter().all(|z| (z - c(1.0)).norm() < 1e-15));
    }
}
