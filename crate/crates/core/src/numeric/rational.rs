//! Proper rational functions with factored denominators and their partial-fraction inverses.

use super::exp_poly::{EpTerm, ExpPoly};
use super::poly::{series_mul, series_reciprocal, Poly};
use super::C64;
use crate::error::{Error, Result};

/// `num(s) / Π (s + rate)^mult`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    pub num: Poly,
    pub poles: Vec<(C64, u32)>,
}

impl RationalFn {
    pub fn denominator(&self) -> Poly {
        Poly::from_linear_factors(&self.poles)
    }

    pub fn eval(&self, s: C64) -> C64 {
        let mut v = self.num.eval(s);
        for &(r, m) in &self.poles {
            v /= (s + r).powi(m as i32);
        }
        v
    }

    /// `(f(s) - f(0)) / s`, which stays proper and shares the poles of `f`.
    pub fn difference_quotient(&self) -> RationalFn {
        let d = self.denominator();
        let f0 = self.eval(C64::new(0.0, 0.0));
        let n = self.num.sub(&d.scale(f0));
        RationalFn { num: n.div_s(), poles: self.poles.clone() }
    }

    /// Splits into the constant limit at infinity and the inverse Laplace transform of the rest.
    pub fn partial_fractions(&self) -> Result<(C64, ExpPoly)> {
        let d = self.denominator();
        let num = self.num.clone().trim(1e-14);
        if num.degree() > d.degree() {
            return Err(Error::Regularity(format!(
                "transform grows like s^{} at infinity",
                num.degree() - d.degree()
            )));
        }
        let (constant, rem) = if num.degree() == d.degree() {
            let c = num.leading() / d.leading();
            let mut r = num.sub(&d.scale(c));
            r.0.truncate(d.degree().max(1));
            (c, r)
        } else {
            (C64::new(0.0, 0.0), num)
        };
        let mut terms = Vec::new();
        for (i, &(p, m)) in self.poles.iter().enumerate() {
            let m = m as usize;
            let shifted = rem.shift(-p);
            let mut others = Poly::one();
            for (j, &(po, mo)) in self.poles.iter().enumerate() {
                if j != i {
                    for _ in 0..mo {
                        others = others.mul(&Poly::linear(po - p));
                    }
                }
            }
            let inv = series_reciprocal(&others.0, m);
            let h = series_mul(&shifted.0, &inv, m);
            for (k, &hk) in h.iter().enumerate() {
                terms.push(EpTerm { coef: hk, rate: p, power: (m - k) as u32 });
            }
        }
        Ok((constant, ExpPoly::new(terms)))
    }
}
