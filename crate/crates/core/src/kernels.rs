//! The kernels `K_q`, `F₁`, `F₂` and their diagnostics.
//!
//! `K_q` is the law of `X̄_{e(q)} + Y̲_{e(q)}` (independent copies), i.e. of `S - I` with
//! `S` the supremum of `X` and `I` the magnitude of the infimum of `Y`.
//! `F₁` lives on `[0, ∞)` and `F₂` on `(-∞, 0]`; both are stored as functions of a
//! nonnegative distance `u`, with `F₂` queried as `F₂(-u)`.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{GridFunction, GridKind, GridSpec};
use crate::numeric::exp_poly::{EpTerm, ExpPoly};
use crate::numeric::poly::Poly;
use crate::numeric::quad::{integrate_to_inf, Tolerance};
use crate::numeric::rational::RationalFn;
use crate::numeric::tail::tail_transform;
use crate::numeric::C64;
use crate::roots::QContext;
use crate::wiener_hopf::{factor_inf, factor_sup, inf_law, sup_law, tail_length, ExtremaLaw, LawRepr, Process, WhContext};
use serde::Serialize;

/// A kernel on `u ≥ 0`, exact or sampled at `u_i = i·du`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Exact(ExpPoly),
    Sampled(GridFunction),
}

impl Kernel {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Kernel::Exact(e) => e.eval(u),
            Kernel::Sampled(g) => g.interp(u),
        }
    }

    /// Derivative in `u`; sampled kernels use centred differences.
    pub fn deriv(&self, u: f64) -> f64 {
        match self {
            Kernel::Exact(e) => e.deriv().eval(u),
            Kernel::Sampled(g) => {
                let h = g.dx;
                let lo = (u - h).max(0.0);
                (g.interp(u + h) - g.interp(lo)) / (u + h - lo)
            }
        }
    }
}

/// The `I`-side of `K_q` on `w < 0`, in the distance `v = -w`.
#[derive(Debug, Clone, PartialEq)]
pub enum LeftPart {
    Exact(ExpPoly),
    /// Density and CDF `P(S - I ≤ -v)` at `v_i = i·dv`.
    Sampled { density: GridFunction, cdf: GridFunction },
}

/// Law of `S - I`: density `right` on `w > 0`, `left` on `w < 0`, and an atom at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct KqLaw {
    pub atom: f64,
    pub right: ExpPoly,
    pub left: LeftPart,
    right_tail: ExpPoly,
    left_tail: Option<ExpPoly>,
}

impl KqLaw {
    pub fn cdf(&self, w: f64) -> f64 {
        if w >= 0.0 {
            1.0 - self.right_tail.eval(w)
        } else {
            match (&self.left, &self.left_tail) {
                (LeftPart::Exact(_), Some(t)) => t.eval(-w),
                (LeftPart::Sampled { cdf, .. }, _) => cdf.interp(-w),
                _ => unreachable!(),
            }
        }
    }

    /// Continuous density; `w = 0` returns the right limit.
    pub fn density(&self, w: f64) -> f64 {
        if w >= 0.0 {
            self.right.eval(w)
        } else {
            self.density_left(-w)
        }
    }

    /// Density at `-v`, `v ≥ 0`, as a left limit.
    pub fn density_left(&self, v: f64) -> f64 {
        match &self.left {
            LeftPart::Exact(e) => e.eval(v),
            LeftPart::Sampled { density, .. } => density.interp(v),
        }
    }

    /// `P(S - I < 0)`.
    pub fn left_mass(&self) -> f64 {
        self.cdf(-f64::MIN_POSITIVE)
    }
}

/// `T_k(v) = ∫_v^∞ (t-v)^k/k!·e^{-r(t-v)} g(t) dt` in closed form for an exponential-polynomial `g`.
fn tail_transform_exact(g: &ExpPoly, rate: C64, k: usize) -> ExpPoly {
    let mut out = Vec::new();
    for t in &g.terms {
        let p = t.power as usize;
        let big_r = rate + t.rate;
        for m in 0..p {
            let a = k + p - 1 - m;
            let binom = binomial(a, k);
            let coef = t.coef * binom / big_r.powi((a + 1) as i32);
            out.push(EpTerm { coef, rate: t.rate, power: (m + 1) as u32 });
        }
    }
    ExpPoly::new(out).merged()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Builds the law of `S - I`.
pub fn kq_law(sup_x: &ExtremaLaw, inf_y: &ExtremaLaw) -> Result<KqLaw> {
    let s = sup_x.mixture().ok_or_else(|| Error::Unsupported("supremum law must be exact".into()))?;
    let s0 = inf_y.atom_at_zero;
    let a0 = s.atom;
    match inf_y.mixture() {
        Some(i) => {
            // Right: s0·f_S(w) + Σ c e^{-rw} Σ_k w^k/k! T_{p-1-k}(0).
            let mut right = s.density.scale(C64::new(s0, 0.0));
            let mut left = i.density.scale(C64::new(a0, 0.0));
            for t in &s.density.terms {
                let p = t.power as usize;
                for k in 0..p {
                    let tk0 = tail_transform_exact(&i.density, t.rate, p - 1 - k).eval_c(0.0);
                    right = right.add(&ExpPoly::new(vec![EpTerm { coef: t.coef * tk0, rate: t.rate, power: (k + 1) as u32 }]));
                }
                left = left.add(&tail_transform_exact(&i.density, t.rate, p - 1).scale(t.coef));
            }
            let right_tail = right.tail();
            let left_tail = left.tail();
            Ok(KqLaw { atom: s0 * a0, right, left: LeftPart::Exact(left), right_tail, left_tail: Some(left_tail) })
        }
        None => {
            let LawRepr::Grid { density: g, survival } = &inf_y.representation else { unreachable!() };
            let dv = g.dx;
            let n = g.len();
            let mut right = s.density.scale(C64::new(s0, 0.0));
            let mut left_d: Vec<f64> = g.values.iter().map(|v| a0 * v).collect();
            let mut left_c: Vec<f64> = survival.values.iter().map(|v| a0 * v).collect();
            for t in &s.density.terms {
                let p = t.power as usize;
                let tg = tail_transform(&g.values, dv, t.rate, p);
                let ts = tail_transform(&survival.values, dv, t.rate, p);
                for k in 0..p {
                    right = right.add(&ExpPoly::new(vec![EpTerm { coef: t.coef * tg[p - 1 - k][0], rate: t.rate, power: (k + 1) as u32 }]));
                }
                for i in 0..n {
                    left_d[i] += (t.coef * tg[p - 1][i]).re;
                    left_c[i] += (t.coef * ts[p - 1][i]).re;
                }
            }
            // At v = 0 the left CDF is P(S - I < 0).
            let density = GridFunction { x0: 0.0, dx: dv, values: left_d, kind: GridKind::Density };
            let cdf = GridFunction { x0: 0.0, dx: dv, values: left_c, kind: GridKind::Raw };
            let right_tail = right.tail();
            Ok(KqLaw { atom: s0 * a0, right, left: LeftPart::Sampled { density, cdf }, right_tail, left_tail: None })
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelSet {
    pub wh: WhContext,
    pub kq_law: KqLaw,
    /// `K_q` sampled on `[-L, L]`.
    pub kq: GridFunction,
    pub f1: Kernel,
    /// `F₂(-u)` as a function of `u ≥ 0`.
    pub f2: Kernel,
    pub f1_grid: GridFunction,
    pub f2_grid: GridFunction,
    pub f1_zero: f64,
    pub f2_zero: f64,
    pub f1_inf: f64,
    /// `(Φ(q), φ(q))`.
    pub rates: (f64, f64),
    pub dx: f64,
    pub length: f64,
}

/// Default grid step `2^{-9}·max(1, 1/min(Φ, φ))`.
pub fn default_step(ctx: &QContext) -> f64 {
    2f64.powi(-9) * (1.0f64).max(1.0 / ctx.phi_q.min(ctx.varphi_q))
}

impl KernelSet {
    pub fn build(wh: &WhContext, dx: f64, length: f64) -> Result<Self> {
        let ctx = &wh.ctx;
        let (phi, vphi) = (ctx.phi_q, ctx.varphi_q);
        let sup_x = sup_law(wh, Process::X)?;
        let inf_y = inf_law(wh, Process::Y, dx, length)?;
        let kq_law = kq_law(&sup_x, &inf_y)?;
        let (f1, f2, f1_zero, f2_zero) = if wh.factors.is_some() && !ctx.model.is_spectrally_negative() {
            let f1 = rational_f1(wh)?;
            let f2 = rational_f2(wh)?;
            let (a, b) = (f1.eval(0.0), f2.eval(0.0));
            (Kernel::Exact(f1), Kernel::Exact(f2), a, b)
        } else {
            let f1 = ExpPoly::exponential((vphi - phi) / phi, vphi);
            let inf_x = inf_law(wh, Process::X, dx, length)?;
            let scale = ctx.delta * vphi / ctx.q;
            let f2 = match inf_x.mixture() {
                Some(m) => Kernel::Exact(tail_transform_exact(&m.density, C64::new(vphi, 0.0), 0).scale(C64::new(scale, 0.0))),
                None => {
                    let LawRepr::Grid { density, .. } = &inf_x.representation else { unreachable!() };
                    let t = tail_transform(&density.values, density.dx, C64::new(vphi, 0.0), 1);
                    let values = t[0].iter().map(|v| scale * v.re).collect();
                    Kernel::Sampled(GridFunction { x0: 0.0, dx: density.dx, values, kind: GridKind::Raw })
                }
            };
            (Kernel::Exact(f1), f2, vphi / phi - 1.0, sn_f2_zero(wh))
        };
        let nu = (length / dx).ceil() as usize + 1;
        let half = GridSpec::new(0.0, dx, nu);
        let f1_grid = GridFunction::sample(half, GridKind::Raw, |u| f1.eval(u));
        let f2_grid = GridFunction::sample(half, GridKind::Raw, |u| f2.eval(u));
        let kq = GridFunction::sample(GridSpec::new(-half.last(), dx, 2 * nu - 1), GridKind::Cdf, |w| kq_law.cdf(w));
        if kq.values[kq.len() - 1] < 1.0 - 1e-3 {
            return Err(Error::Mass(format!("K_q reaches only {} at the grid edge", kq.values[kq.len() - 1])));
        }
        Ok(KernelSet { wh: wh.clone(), kq_law, kq, f1, f2, f1_grid, f2_grid, f1_zero, f2_zero, f1_inf: 0.0, rates: (phi, vphi), dx, length })
    }

    /// Builds with the default step and tail length.
    pub fn build_default(wh: &WhContext) -> Result<Self> {
        Self::build(wh, default_step(&wh.ctx), tail_length(wh))
    }

    pub fn f1_eval(&self, x: f64) -> f64 {
        self.f1.eval(x.max(0.0))
    }

    pub fn f2_eval(&self, x: f64) -> f64 {
        self.f2.eval((-x).max(0.0))
    }
}

/// `F₂(0)` for spectrally negative models: `φ/Φ - 1`, times `(d-δ)/d` on the ratio under bounded variation.
fn sn_f2_zero(wh: &WhContext) -> f64 {
    let ratio = wh.ctx.varphi_q / wh.ctx.phi_q;
    match wh.bv_drift(Process::X) {
        Some(d) => ratio * (d - wh.ctx.delta) / d - 1.0,
        None => ratio - 1.0,
    }
}

/// `num_f/den_f` for two factors sharing their jump poles, normalised to one at `s = 0`.
fn ratio_fn(num_f: &RationalFn, den_f: &RationalFn) -> RationalFn {
    let prod = |f: &RationalFn| f.poles.iter().map(|(r, m)| r.powi(*m as i32)).product::<C64>();
    let num = Poly::from_linear_factors(&den_f.poles).scale(prod(num_f) / prod(den_f));
    RationalFn { num, poles: num_f.poles.clone() }
}

/// `F₁` from `(G(s) - 1)/s`, `G = E e^{-sȲ}/E e^{-sX̄}`.
fn rational_f1(wh: &WhContext) -> Result<ExpPoly> {
    let f = wh.factors.as_ref().expect("rational factors");
    let g = ratio_fn(&f.sup_y, &f.sup_x);
    kernel_from_ratio(&g, "supremum")
}

/// `F₂(-u)` from `(G(s) - 1)/s`, `G = E e^{sX̲}/E e^{sY̲}`.
fn rational_f2(wh: &WhContext) -> Result<ExpPoly> {
    let f = wh.factors.as_ref().expect("rational factors");
    let g = ratio_fn(&f.inf_x, &f.inf_y);
    kernel_from_ratio(&g, "infimum")
}

fn kernel_from_ratio(g: &RationalFn, side: &str) -> Result<ExpPoly> {
    let h = g.difference_quotient();
    match h.partial_fractions() {
        Ok((c, e)) if c.norm() < 1e-10 => Ok(e),
        Ok((c, _)) => Err(Error::Regularity(format!("{side} factor ratio leaves a constant {c} after division by s"))),
        Err(_) => Err(Error::Regularity(format!("{side} factor ratio is unbounded at large s"))),
    }
}

/// `K_q` on a grid.
pub fn kq_grid(ks: &KernelSet, grid: GridSpec) -> GridFunction {
    GridFunction::sample(grid, GridKind::Cdf, |w| ks.kq_law.cdf(w))
}

/// First-passage form of the Π₁ density, `(e^{-φx} - e^{-Φx})/x`.
pub fn pi1_density(ctx: &QContext, x: f64) -> f64 {
    let (phi, vphi) = (ctx.phi_q, ctx.varphi_q);
    if x < 1e-8 {
        return phi - vphi + 0.5 * x * (vphi * vphi - phi * phi);
    }
    ((-vphi * x).exp() - (-phi * x).exp()) / x
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Signed distance to failure; nonnegative when passed.
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub checks: Vec<Check>,
    pub f1_zero: f64,
    pub f2_zero: f64,
    /// `F₁(0) ≠ F₂(0)`, as happens under bounded variation.
    pub boundary_values_differ: bool,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, margin: f64, detail: String) -> Check {
    Check { name: name.into(), passed: margin >= 0.0, margin, detail }
}

const SLACK: f64 = 1e-10;
const STIELTJES_TOL: f64 = 1e-3;

/// Worst violation of monotonicity in the given direction (`+1` increasing).
fn monotone_margin(v: &[f64], direction: f64) -> f64 {
    v.windows(2).map(|w| direction * (w[1] - w[0]) + SLACK).fold(f64::INFINITY, f64::min)
}

/// Continuity margin: every adjacent jump against three times the neighbouring slope.
fn continuity_margin(v: &[f64]) -> f64 {
    let d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut margin = f64::INFINITY;
    for i in 0..d.len() {
        let left = if i > 0 { d[i - 1] } else { 0.0 };
        let right = if i + 1 < d.len() { d[i + 1] } else { 0.0 };
        let bound = 3.0 * left.max(right) + 1e-12;
        margin = margin.min(bound - d[i]);
    }
    margin
}

/// `∫_{(0, L]} e^{-sx} dF(x)` by parts against the samples: `e^{-sL}F(L) - F(0) + s∫ e^{-sx}F dx`.
fn stieltjes_by_parts(g: &GridFunction, s: f64) -> f64 {
    let n = g.len();
    (-s * g.x(n - 1)).exp() * g.values[n - 1] - g.values[0] + s * trapezoid_laplace(g, s)
}

pub fn kernel_property_report(ks: &KernelSet, exec: Execution) -> PropertyReport {
    let wh = &ks.wh;
    let ctx = &wh.ctx;
    let (phi, vphi) = ks.rates;
    let delta = ctx.delta;
    // The SN bound; two-sided models are only held to the range their boundary values span.
    let sn = ctx.model.is_spectrally_negative();
    let upper = (0.0f64).max((vphi - phi) / phi);
    let (upper1, upper2) = if sn { (upper, upper) } else { (upper.max(ks.f1_zero), upper.max(ks.f2_zero)) };
    let dir = if delta > 0.0 { -1.0 } else { 1.0 };
    let jobs: Vec<Box<dyn Fn() -> Vec<Check> + Sync>> = vec![
        // (i) F₁ monotone, bounded, and its Stieltjes transform.
        Box::new(move || {
            let f1 = &ks.f1_grid.values;
            let mut out = Vec::new();
            let m = if delta == 0.0 { -f1.iter().map(|v| v.abs()).fold(0.0, f64::max) + SLACK } else { monotone_margin(f1, dir) };
            out.push(check("f1_monotone", m, format!("direction {}", if delta > 0.0 { "decreasing" } else { "increasing" })));
            let lo = f1.iter().map(|v| v + 1.0).fold(f64::INFINITY, f64::min);
            let hi = f1.iter().map(|v| upper1 - v).fold(f64::INFINITY, f64::min);
            out.push(check("f1_bounds", lo.min(hi) + SLACK, format!("-1 ≤ F₁ ≤ {upper1}")));
            let edge = f1[f1.len() - 1].abs();
            out.push(check("f1_vanishes_at_infinity", 1e-6 - edge, format!("|F₁(L)| = {edge:e}")));
            let mut worst = 0.0f64;
            for s in [0.5, 1.0, 2.0, 5.0] {
                let lhs = stieltjes_by_parts(&ks.f1_grid, s);
                let rhs = factor_sup(wh, Process::Y, s) / factor_sup(wh, Process::X, s) - (ks.f1_zero + 1.0);
                worst = worst.max((lhs - rhs).abs());
            }
            out.push(check("f1_stieltjes_identity", STIELTJES_TOL - worst, format!("max residual {worst:e}")));
            out
        }),
        // (ii) e^{φx}F₂(x) on x ≤ 0.
        Box::new(move || {
            let g = &ks.f2_grid;
            let h: Vec<f64> = (0..g.len()).rev().map(|i| (-vphi * g.x(i)).exp() * g.values[i]).collect();
            let mut out = Vec::new();
            let m = if delta == 0.0 { -h.iter().map(|v| v.abs()).fold(0.0, f64::max) + SLACK } else { monotone_margin(&h, -dir) };
            out.push(check("f2_weighted_monotone", m, format!("e^(φx)F₂(x) {}", if delta > 0.0 { "increasing" } else { "decreasing" })));
            let lo = h.iter().map(|v| v + 1.0).fold(f64::INFINITY, f64::min);
            let hi = h.iter().map(|v| upper2 - v).fold(f64::INFINITY, f64::min);
            out.push(check("f2_weighted_bounds", lo.min(hi) + SLACK, format!("-1 ≤ e^(φx)F₂ ≤ {upper2}")));
            // H(x) = e^{φx}F₂(x) in u = -x: ∫_{-∞}^0 e^{sx} dH = H(0) - s∫ e^{-su} H(-u) du.
            let hu = GridFunction { x0: 0.0, dx: g.dx, values: (0..g.len()).map(|i| (-vphi * g.x(i)).exp() * g.values[i]).collect(), kind: GridKind::Raw };
            let mut worst = 0.0f64;
            for s in [0.5, 1.0, 2.0, 5.0] {
                let lhs = hu.values[0] - s * trapezoid_laplace(&hu, s);
                let ratio = factor_inf(wh, Process::X, s + vphi).unwrap_or(f64::NAN) / factor_inf(wh, Process::Y, s + vphi).unwrap_or(f64::NAN);
                let rhs = s / (s + vphi) * (1.0 - ratio) + ks.f2_zero;
                worst = worst.max((lhs - rhs).abs());
            }
            out.push(check("f2_stieltjes_identity", STIELTJES_TOL - worst, format!("max residual {worst:e}")));
            out
        }),
        // (iii) and (iv): continuity of F₁, e^{-φx}F₂(-x) and K_q.
        Box::new(move || {
            let g = &ks.f2_grid;
            let w: Vec<f64> = (0..g.len()).map(|i| (-vphi * g.x(i)).exp() * g.values[i]).collect();
            vec![
                check("f1_continuous", continuity_margin(&ks.f1_grid.values), String::new()),
                check("f2_continuous", continuity_margin(&w), String::new()),
                check("kq_continuous", continuity_margin(&ks.kq.values), format!("K_q atom {:e}", ks.kq_law.atom)),
            ]
        }),
        // (v) infinite divisibility of F₁ + 1 for δ < 0.
        Box::new(move || {
            if delta >= 0.0 || !ctx.model.is_spectrally_negative() {
                return Vec::new();
            }
            let mut worst = 0.0f64;
            let mut detail = String::new();
            for s in [0.5, 1.0, 2.0] {
                let lhs = vphi * (s + phi) / (phi * (s + vphi));
                let e = integrate_to_inf(|x| (-(s * x)).exp_m1() * pi1_density(ctx, x), 0.0, Tolerance::new(1e-12, 1e-12));
                let rhs = e.map(f64::exp).unwrap_or(f64::NAN);
                worst = worst.max((lhs - rhs).abs());
                detail.push_str(&format!("s={s}: {lhs:.7} vs {rhs:.7}; "));
            }
            let min_pi1 = (1..200).map(|i| pi1_density(ctx, 0.05 * i as f64)).fold(f64::INFINITY, f64::min);
            vec![
                check("pi1_frullani_identity", 1e-6 - worst, detail),
                check("pi1_nonnegative", min_pi1 + SLACK, format!("min Π₁ density {min_pi1:e}")),
            ]
        }),
    ];
    let checks = exec.map(jobs.len(), |i| jobs[i]()).into_iter().flatten().collect();
    PropertyReport { checks, f1_zero: ks.f1_zero, f2_zero: ks.f2_zero, boundary_values_differ: (ks.f1_zero - ks.f2_zero).abs() > 1e-9 }
}

fn trapezoid_laplace(g: &GridFunction, s: f64) -> f64 {
    let n = g.len();
    let mut acc = 0.0;
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * (-s * g.x(i)).exp() * g.values[i];
    }
    acc * g.dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_models::catalog::*;
    use crate::levy_models::{DensityFamily, LevySpec};

    fn kernels(m: &LevySpec, delta: f64) -> KernelSet {
        let wh = WhContext::build(m, 1.0, delta).unwrap();
        KernelSet::build(&wh, 1.0 / 128.0, tail_length(&wh)).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn kq_is_laplace_law_without_refraction() {
        let ks = kernels(&m1(), 0.0);
        close(ks.kq_law.cdf(0.0), 0.5, 1e-12);
        close(ks.kq_law.cdf(1.0), 1.0 - 0.5 * (-2f64.sqrt()).exp(), 1e-12);
        close(ks.kq_law.cdf(-1.0), 0.5 * (-2f64.sqrt()).exp(), 1e-12);
        assert!(ks.kq_law.cdf(-40.0) < 1e-20);
        assert!(ks.f1_grid.values.iter().chain(&ks.f2_grid.values).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn brownian_kernel_values() {
        let ks = kernels(&m1(), 1.0);
        close(ks.f1_eval(0.0), 0.9318517, 1e-7);
        close(ks.f1_eval(0.5), 0.9318517 * (-(1.0 + 3f64.sqrt()) / 2.0).exp(), 1e-7);
        close(ks.f2_eval(0.0), 0.9318517, 1e-7);
        close(ks.f2_zero, ks.f1_zero, 1e-12);
        close(ks.f2_eval(-0.5), 0.9318517 * (-0.5 * 2f64.sqrt()).exp(), 1e-7);
        close(ks.f2_eval(-0.5), 0.45947, 1e-5);
    }

    #[test]
    fn bounded_variation_boundary_values() {
        let ks = kernels(&m2(), 1.0);
        close(ks.f2_zero, 0.1441228, 1e-7);
        // The convolution form agrees with the boundary formula.
        close(ks.f2_eval(0.0), ks.f2_zero, 1e-10);
        close(ks.f1_zero, 1.2882456, 1e-7);
        let r = kernel_property_report(&ks, Execution::Sequential);
        assert!(r.boundary_values_differ);
        assert!(r.all_passed(), "{:#?}", r.checks);
    }

    #[test]
    fn partial_fraction_route_matches_closed_forms() {
        for (m, d) in [(m1(), 1.0), (m1(), -0.5), (m2(), 1.0), (m2(), -1.0)] {
            let ks = kernels(&m, d);
            let f1 = rational_f1(&ks.wh).unwrap();
            let f2 = rational_f2(&ks.wh).unwrap();
            for u in [0.0, 0.3, 1.0, 2.5] {
                close(f1.eval(u), ks.f1.eval(u), 1e-9);
                close(f2.eval(u), ks.f2.eval(u), 1e-9);
            }
        }
    }

    #[test]
    fn pi1_values() {
        let ctx = QContext::new(&m1(), 1.0, -1.0).unwrap();
        close(pi1_density(&ctx, 1.0), 0.2378050, 1e-7);
        close(pi1_density(&ctx, 1e-10), 2f64.sqrt() - (3f64.sqrt() - 1.0), 1e-9);
        let ctx0 = QContext::new(&m1(), 1.0, 0.0).unwrap();
        assert_eq!(pi1_density(&ctx0, 0.7), 0.0);
    }

    #[test]
    fn reports_pass_for_brownian() {
        for d in [1.0, -1.0] {
            let r = kernel_property_report(&kernels(&m1(), d), Execution::Parallel);
            assert!(r.all_passed(), "{:#?}", r.checks);
            assert!(!r.boundary_values_differ);
        }
        let r = kernel_property_report(&kernels(&m1(), -1.0), Execution::Sequential);
        assert!(r.get("pi1_frullani_identity").unwrap().detail.contains("s=1: 0.7215"));
    }

    #[test]
    fn two_sided_kernels() {
        for d in [1.0, -0.5] {
            let ks = kernels(&m3(), d);
            let r = kernel_property_report(&ks, Execution::Sequential);
            assert!(r.all_passed(), "δ={d}: {:#?}", r.checks);
            close(ks.kq.values[ks.kq.len() - 1], 1.0, 1e-8);
        }
    }

    #[test]
    fn kendall_identity_brownian() {
        // x ∫ e^{-qt} t^{-1} N(x; 0, t) dt = e^{-√(2q) x}
        for x in [0.5f64, 1.0, 2.0] {
            let f = |t: f64| {
                if t <= 0.0 {
                    return 0.0;
                }
                x * (-t).exp() / t * (-(x * x) / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
            };
            let v = integrate_to_inf(f, 0.0, Tolerance::new(1e-12, 1e-12)).unwrap();
            close(v, (-(2f64.sqrt()) * x).exp(), 1e-6);
        }
    }

    #[test]
    fn f1_transform_round_trip() {
        let ks = kernels(&m1(), 1.0);
        let wh = &ks.wh;
        for s in [1.0, 2.0, 5.0] {
            let lhs = s * integrate_to_inf(|x| (-s * x).exp() * ks.f1_eval(x), 0.0, Tolerance::new(1e-13, 1e-13)).unwrap();
            let rhs = factor_sup(wh, Process::Y, s) / factor_sup(wh, Process::X, s) - 1.0;
            close(lhs, rhs, 1e-6);
        }
    }

    #[test]
    fn density_model_matches_rational_twin() {
        let gamma = 2.0 - (1.0 - 2.0 * (-1.0f64).exp());
        let dm = LevySpec::with_density(0.0, gamma, DensityFamily::Exponential { intensity: 1.0, rate: 1.0 });
        let a = kernels(&m2(), 1.0);
        let b = kernels(&dm, 1.0);
        assert!(matches!(b.f2, Kernel::Sampled(_)));
        for i in 0..400 {
            let w = -10.0 + 0.05 * i as f64;
            close(a.kq_law.cdf(w), b.kq_law.cdf(w), 2e-5);
            if w <= 0.0 {
                close(a.f2_eval(w), b.f2_eval(w), 2e-5);
            }
        }
        close(b.f2_eval(0.0), b.f2_zero, 1e-4);
    }

    #[test]
    fn kq_density_integrates_to_cdf() {
        let ks = kernels(&m3(), 1.0);
        let total = ks.kq_law.right.mass() + match &ks.kq_law.left {
            LeftPart::Exact(e) => e.mass(),
            _ => unreachable!(),
        } + ks.kq_law.atom;
        close(total, 1.0, 1e-10);
        close(ks.kq_law.left_mass() + ks.kq_law.atom, 1.0 - ks.kq_law.right.mass(), 1e-10);
    }
}
