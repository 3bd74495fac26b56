//! Exponential polynomials `Σ c·u^{p-1}/(p-1)!·e^{-r u}` on `u ≥ 0`, with complex `c` and `r`.

use super::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpTerm {
    pub coef: C64,
    pub rate: C64,
    pub power: u32,
}

impl EpTerm {
    fn basis(&self, u: f64) -> C64 {
        let mut poly = 1.0;
        for k in 1..self.power {
            poly *= u / k as f64;
        }
        (-self.rate * u).exp() * poly
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpPoly {
    pub terms: Vec<EpTerm>,
}

impl ExpPoly {
    pub fn new(terms: Vec<EpTerm>) -> Self {
        ExpPoly { terms }
    }

    /// Single real exponential `c·e^{-r u}`.
    pub fn exponential(coef: f64, rate: f64) -> Self {
        ExpPoly::new(vec![EpTerm { coef: C64::new(coef, 0.0), rate: C64::new(rate, 0.0), power: 1 }])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == C64::new(0.0, 0.0))
    }

    pub fn eval_c(&self, u: f64) -> C64 {
        self.terms.iter().map(|t| t.coef * t.basis(u)).sum()
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.eval_c(u).re
    }

    pub fn deriv(&self) -> ExpPoly {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.power > 1 {
                out.push(EpTerm { coef: t.coef, rate: t.rate, power: t.power - 1 });
            }
            out.push(EpTerm { coef: -t.coef * t.rate, rate: t.rate, power: t.power });
        }
        ExpPoly::new(out).merged()
    }

    /// `u ↦ ∫_u^∞` of the function.
    pub fn tail(&self) -> ExpPoly {
        let mut out = Vec::new();
        for t in &self.terms {
            for k in 1..=t.power {
                let coef = t.coef / t.rate.powi((t.power - k + 1) as i32);
                out.push(EpTerm { coef, rate: t.rate, power: k });
            }
        }
        ExpPoly::new(out).merged()
    }

    /// `∫_0^∞ e^{-s u}` of the function.
    pub fn laplace(&self, s: C64) -> C64 {
        self.terms.iter().map(|t| t.coef / (s + t.rate).powi(t.power as i32)).sum()
    }

    pub fn mass(&self) -> f64 {
        self.laplace(C64::new(0.0, 0.0)).re
    }

    pub fn scale(&self, c: C64) -> ExpPoly {
        ExpPoly::new(self.terms.iter().map(|t| EpTerm { coef: t.coef * c, ..*t }).collect())
    }

    pub fn add(&self, o: &ExpPoly) -> ExpPoly {
        let mut t = self.terms.clone();
        t.extend_from_slice(&o.terms);
        ExpPoly::new(t).merged()
    }

    /// Smallest real part among the rates, i.e. the slowest decay.
    pub fn min_decay(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.rate.re).reduce(f64::min)
    }

    /// Combines terms sharing rate and power.
    pub fn merged(self) -> ExpPoly {
        let mut out: Vec<EpTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            match out.iter_mut().find(|o| o.power == t.power && (o.rate - t.rate).norm() <= 1e-14 * (1.0 + t.rate.norm())) {
                Some(o) => o.coef += t.coef,
                None => out.push(t),
            }
        }
        ExpPoly::new(out)
    }
}

/// Law on `[0, ∞)` made of an atom at zero and an exponential-polynomial density.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMixture {
    pub atom: f64,
    pub density: ExpPoly,
}

impl ExpMixture {
    pub fn exponential(rate: f64) -> Self {
        ExpMixture { atom: 0.0, density: ExpPoly::exponential(rate, rate) }
    }

    pub fn total_mass(&self) -> f64 {
        self.atom + self.density.mass()
    }

    /// `P(M > u)` for `u ≥ 0`.
    pub fn survival(&self, u: f64) -> f64 {
        self.density.tail().eval(u)
    }

    /// `P(M ≤ u)` for `u ≥ 0`.
    pub fn cdf(&self, u: f64) -> f64 {
        self.atom + self.density.mass() - self.survival(u)
    }

    /// `E[e^{-s M}]`.
    pub fn transform(&self, s: C64) -> C64 {
        self.density.laplace(s) + self.atom
    }
}
