//! Roots of the exponent equations: Φ(q), φ(q), and the full Cramér-Lundberg root sets.

use crate::error::{Error, Result};
use crate::levy_models::{LevySpec, VariationClass};
use crate::numeric::poly::Poly;
use crate::numeric::C64;
use serde::Serialize;

const BRACKET_LIMIT: f64 = 1e6;

/// The fixed `(q, δ)` problem context.
#[derive(Debug, Clone)]
pub struct QContext {
    pub model: LevySpec,
    pub q: f64,
    pub delta: f64,
    /// Φ(q)
    pub phi_q: f64,
    /// φ(q)
    pub varphi_q: f64,
    pub variation: VariationClass,
}

impl QContext {
    pub fn new(model: &LevySpec, q: f64, delta: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidModel(format!("q must be positive, got {q}")));
        }
        model.validate()?;
        Ok(QContext {
            model: model.clone(),
            q,
            delta,
            phi_q: phi_root(model, q)?,
            varphi_q: varphi_root(model, q, delta)?,
            variation: model.variation(),
        })
    }

    /// The context of `Y = X - δt` viewed as a plain Lévy process.
    pub fn y_model(&self) -> LevySpec {
        self.model.shifted(self.delta)
    }
}

/// Largest root of `f(θ) = q` for a convex `f` with `f(0) = 0`.
fn sup_root<F, D>(f: F, df: D, q: f64, domain: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    let mut hi = 1.0f64;
    if domain.is_finite() {
        hi = hi.min(0.5 * domain);
    }
    loop {
        if f(hi)? > q {
            break;
        }
        let next = if domain.is_finite() { 0.5 * (hi + domain) } else { 2.0 * hi };
        if next > BRACKET_LIMIT || next == hi {
            return Err(Error::Bracket(BRACKET_LIMIT.min(next)));
        }
        hi = next;
    }
    // Convexity with f(0) = 0 < q leaves exactly one crossing in [0, hi].
    let mut lo = 0.0f64;
    for _ in 0..400 {
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? > q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (blo, bhi) = (lo, hi);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = df(x)?;
        if d <= 0.0 {
            break;
        }
        let next = x - (f(x)? - q) / d;
        if next < blo - 1e-12 * bhi || next > bhi + 1e-12 * bhi {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Φ(q) = sup{θ ≥ 0 : ψ(θ) = q}.
pub fn phi_root(model: &LevySpec, q: f64) -> Result<f64> {
    sup_root(|t| model.laplace_exponent(t), |t| model.exponent_deriv(t), q, model.exponent_domain())
}

/// φ(q) = sup{θ ≥ 0 : ψ(θ) - δθ = q}.
pub fn varphi_root(model: &LevySpec, q: f64, delta: f64) -> Result<f64> {
    sup_root(
        |t| model.exponent_y(t, delta),
        |t| Ok(model.exponent_deriv(t)? - delta),
        q,
        model.exponent_domain(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub multiplicity: u32,
}

impl Root {
    pub fn location(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// Which exponent equation a root set solves: `q = ψ(s)` or `q = ψ(s) - δs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Equation {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSet {
    pub equation: Equation,
    pub roots: Vec<Root>,
}

impl RootSet {
    /// Roots with positive real part: these feed the supremum factor.
    pub fn sup_side(&self) -> Vec<Root> {
        self.roots.iter().copied().filter(|r| r.re > 0.0).collect()
    }

    /// Roots with negative real part: these feed the infimum factor.
    pub fn inf_side(&self) -> Vec<Root> {
        self.roots.iter().copied().filter(|r| r.re < 0.0).collect()
    }

    pub fn count(&self) -> u32 {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

/// Numerator and denominator of a mixture transform `Σ w (r/(s+r))^j`.
fn transform_parts(terms: &[(C64, C64, u32)]) -> (Poly, Poly) {
    let mut poles: Vec<(C64, u32)> = Vec::new();
    for &(_, r, j) in terms {
        match poles.iter_mut().find(|(p, _)| (*p - r).norm() <= 1e-14 * r.norm()) {
            Some(p) => p.1 = p.1.max(j),
            None => poles.push((r, j)),
        }
    }
    let denom = Poly::from_linear_factors(&poles);
    let mut num = Poly::constant(C64::new(0.0, 0.0));
    for &(w, r, j) in terms {
        let mut f: Vec<(C64, u32)> = Vec::new();
        for &(p, m) in &poles {
            let m = if (p - r).norm() <= 1e-14 * r.norm() { m - j } else { m };
            if m > 0 {
                f.push((p, m));
            }
        }
        num = num.add(&Poly::from_linear_factors(&f).scale(w * r.powi(j as i32)));
    }
    (num, denom)
}

/// `(q - ψ(s) + δs)` cleared of denominators.
pub fn cleared_polynomial(model: &LevySpec, q: f64, delta: f64) -> Result<Poly> {
    if !model.is_rational() {
        return Err(Error::Unsupported("Cramér-Lundberg roots need rational jump laws".into()));
    }
    let neg: Vec<(C64, C64, u32)> = if model.neg_jumps.is_active() {
        model.neg_jumps.terms.iter().filter(|t| t.weight.norm() > 0.0).map(|t| (t.weight, t.rate, t.power)).collect()
    } else {
        Vec::new()
    };
    let pos: Vec<(C64, C64, u32)> = if model.pos_jumps.is_active() {
        model.pos_jumps.terms.iter().filter(|t| t.weight.norm() > 0.0).map(|t| (t.weight, -t.rate, t.power)).collect()
    } else {
        Vec::new()
    };
    let (an, bn) = transform_parts(&neg);
    let (ap, bp) = transform_parts(&pos);
    let ln = if neg.is_empty() { 0.0 } else { model.neg_jumps.intensity };
    let lp = if pos.is_empty() { 0.0 } else { model.pos_jumps.intensity };
    let s2 = model.gaussian_coeff.powi(2);
    let lead = Poly::from_real(&[q + ln + lp, -(model.drift - delta), -0.5 * s2]);
    let n = lead
        .mul(&bn)
        .mul(&bp)
        .sub(&an.mul(&bp).scale(C64::new(ln, 0.0)))
        .sub(&ap.mul(&bn).scale(C64::new(lp, 0.0)));
    // Trim structurally: a relative threshold would drop the small leading
    // coefficient when the jump rates span several orders of magnitude.
    let top = if s2 > 0.0 { 2 } else if model.drift != delta { 1 } else { 0 };
    let degree = top + bn.degree() + bp.degree();
    let mut n = n;
    n.0.truncate(degree + 1);
    Ok(n)
}

fn merge(roots: Vec<C64>) -> Vec<Root> {
    let mut out: Vec<(C64, u32)> = Vec::new();
    for z in roots {
        match out.iter_mut().find(|(c, _)| (*c - z).norm() < 1e-7) {
            Some(e) => {
                let m = e.1 as f64;
                e.0 = (e.0 * m + z) / (m + 1.0);
                e.1 += 1;
            }
            None => out.push((z, 1)),
        }
    }
    let mut v: Vec<Root> = out
        .into_iter()
        .map(|(z, m)| {
            let im = if z.im.abs() < 1e-12 * (1.0 + z.re.abs()) { 0.0 } else { z.im };
            Root { re: z.re, im, multiplicity: m }
        })
        .collect();
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

/// Rates of a jump law made of plain exponentials with positive weights.
fn hyper_exponential_rates(j: &crate::levy_models::JumpSpec) -> Option<Vec<f64>> {
    if !j.is_active() {
        return Some(Vec::new());
    }
    let ok = j.terms.iter().all(|t| t.power == 1 && t.weight.im == 0.0 && t.weight.re > 0.0 && t.rate.im == 0.0);
    ok.then(|| {
        let mut r: Vec<f64> = j.terms.iter().map(|t| t.rate.re).collect();
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    })
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// For hyper-exponential jumps every root is real and sits between consecutive poles,
/// so bracketing on the real line avoids the ill-conditioned companion matrix.
fn interlaced_real_roots(model: &LevySpec, q: f64, delta: f64, degree: usize) -> Option<Vec<C64>> {
    let neg = hyper_exponential_rates(&model.neg_jumps)?;
    let pos = hyper_exponential_rates(&model.pos_jumps)?;
    let f = |s: f64| model.exponent_complex(C64::new(s, 0.0)).map(|v| q - v.re + delta * s).unwrap_or(f64::NAN);
    // Interval endpoints: 0, the poles, and ±∞ as outward searches.
    let mut roots = Vec::new();
    for (sign, poles) in [(-1.0, &neg), (1.0, &pos)] {
        let mut edges = vec![0.0];
        edges.extend(poles.iter().map(|p| sign * p));
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let pad = 1e-13 * b.abs();
            let (lo, hi) = if a == 0.0 { (0.0, b - sign * pad) } else { (a + sign * pad * a.abs() / b.abs(), b - sign * pad) };
            if f(lo) * f(hi) < 0.0 {
                roots.push(bisect(&f, lo.min(hi), lo.max(hi)));
            }
        }
        let start = *edges.last().unwrap();
        let mut lo = start + sign * 1e-13 * start.abs().max(1e-300);
        let mut hi = sign * (2.0 * start.abs()).max(1.0);
        while hi.abs() < 1e12 {
            if f(lo) * f(hi) < 0.0 {
                roots.push(bisect(&f, lo.min(hi), lo.max(hi)));
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
    }
    (roots.len() == degree).then(|| roots.into_iter().map(|r| C64::new(r, 0.0)).collect())
}

fn solve(model: &LevySpec, q: f64, delta: f64, equation: Equation) -> Result<RootSet> {
    let p = cleared_polynomial(model, q, delta)?;
    if p.degree() == 0 {
        return Err(Error::Degenerate("the cleared exponent equation has no roots".into()));
    }
    let roots = match interlaced_real_roots(model, q, delta, p.degree()) {
        Some(r) => merge(r),
        None => merge(p.roots()),
    };
    for r in &roots {
        let s = r.location();
        let val = q - model.exponent_complex(s)? + delta * s;
        let scale = q
            + 0.5 * model.gaussian_coeff.powi(2) * s.norm_sqr()
            + (model.drift - delta).abs() * s.norm()
            + model.neg_jumps.intensity * (1.0 + model.neg_jumps.transform(s).norm())
            + model.pos_jumps.intensity * (1.0 + model.pos_jumps.transform(-s).norm());
        // Multiple roots are only located to about the square root of the working precision.
        let gate = if r.multiplicity > 1 { 1e-6 } else { 1e-9 };
        if val.norm() > gate * scale {
            return Err(Error::RootResidual { location: format!("{s}"), residual: val.norm() / scale });
        }
    }
    Ok(RootSet { equation, roots })
}

/// All roots of `q = ψ(s)` and of `q = ψ(s) - δs` for a rational model.
pub fn cramer_lundberg_roots(model: &LevySpec, q: f64, delta: f64) -> Result<(RootSet, RootSet)> {
    Ok((solve(model, q, 0.0, Equation::X)?, solve(model, q, delta, Equation::Y)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_models::catalog::*;
    use crate::levy_models::{ExpTerm, JumpSpec};

    #[test]
    fn closed_form_roots() {
        assert!((phi_root(&m1(), 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!((phi_root(&m2(), 1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((varphi_root(&m1(), 1.0, 1.0).unwrap() - (1.0 + 3f64.sqrt())).abs() < 1e-14);
        assert!((varphi_root(&m1(), 1.0, -1.0).unwrap() - (3f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!((varphi_root(&m2(), 1.0, 1.0).unwrap() - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn small_q_tends_to_zero() {
        assert!(phi_root(&m2(), 1e-8).unwrap() < 1e-7);
    }

    #[test]
    fn bracket_failure_for_drift_below_delta() {
        assert!(matches!(varphi_root(&m2(), 1.0, 3.0), Err(Error::Bracket(_))));
    }

    #[test]
    fn brownian_root_sets() {
        let (x, _) = cramer_lundberg_roots(&m1(), 1.0, 0.0).unwrap();
        assert_eq!(x.sup_side().len(), 1);
        assert!((x.sup_side()[0].re - 2f64.sqrt()).abs() < 1e-12);
        assert!((x.inf_side()[0].re + 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bv_root_sets() {
        let (x, y) = cramer_lundberg_roots(&m2(), 1.0, 1.0).unwrap();
        assert_eq!(x.count(), 2);
        assert!((x.sup_side()[0].re - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(x.inf_side().len(), 1);
        assert!((y.sup_side()[0].re - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_sided_quartic() {
        let (x, _) = cramer_lundberg_roots(&m3(), 1.0, 0.0).unwrap();
        assert_eq!(x.count(), 4);
        let inside: Vec<_> = x.sup_side().into_iter().filter(|r| r.re < 2.0).collect();
        assert_eq!(inside.len(), 1);
        assert!((inside[0].re - phi_root(&m3(), 1.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn erlang_jumps_give_double_pole_terms() {
        let neg = JumpSpec::rational(1.0, vec![ExpTerm::real(1.0, 2.0, 2)]);
        let m = LevySpec::jump_diffusion(1.0, 0.5, neg, JumpSpec::none());
        let (x, _) = cramer_lundberg_roots(&m, 1.0, 0.0).unwrap();
        assert_eq!(x.count(), 4);
        assert!((x.sup_side()[0].re - phi_root(&m, 1.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn many_rates_stay_accurate() {
        let rates = [0.5, 1.7, 6.0, 21.0, 80.0, 300.0, 1100.0, 2500.0];
        let terms = rates.iter().map(|&r| ExpTerm::real(1.0 / rates.len() as f64, r, 1)).collect();
        let m = LevySpec::jump_diffusion(1.05, 0.3, JumpSpec::rational(3.0, terms), JumpSpec::none());
        let (x, y) = cramer_lundberg_roots(&m, 1.0, 1.0).unwrap();
        assert_eq!(x.count(), 10);
        assert_eq!(y.count(), 10);
        assert!(x.roots.iter().all(|r| r.im == 0.0));
        assert!((x.sup_side()[0].re - phi_root(&m, 1.0).unwrap()).abs() < 1e-10);
        // The polynomial route agrees where it is well conditioned.
        let (x3, _) = cramer_lundberg_roots(&m3(), 1.0, 0.5).unwrap();
        let p = cleared_polynomial(&m3(), 1.0, 0.0).unwrap();
        let mut a: Vec<f64> = p.roots().iter().map(|z| z.re).collect();
        a.sort_by(f64::total_cmp);
        let _ = x3;
        let (x, _) = cramer_lundberg_roots(&m3(), 1.0, 0.0).unwrap();
        for (r, b) in x.roots.iter().zip(&a) {
            assert!((r.re - b).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_equation() {
        let m = LevySpec::jump_diffusion(0.0, 1.0, JumpSpec::none(), JumpSpec::none());
        assert!(matches!(cramer_lundberg_roots(&m, 1.0, 1.0), Err(Error::Degenerate(_))));
    }
}
