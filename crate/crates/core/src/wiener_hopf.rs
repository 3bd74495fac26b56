//! Wiener-Hopf factors and the laws of the running extrema at an exponential time.
//!
//! Laws are stored on the magnitude of the extremum, `M = X̄` for the supremum
//! and `M = -X̲` for the infimum, as an atom at zero plus a density on `(0, ∞)`.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridKind, GridSpec};
use crate::levy_models::{LevySpec, VariationClass};
use crate::numeric::exp_poly::ExpMixture;
use crate::numeric::inversion::{gaver_stehfest, stehfest_weights, talbot};
use crate::numeric::poly::Poly;
use crate::numeric::rational::RationalFn;
use crate::numeric::C64;
use crate::roots::{cramer_lundberg_roots, QContext, Root};
use serde::Serialize;

/// Talbot nodes for route B.
pub const TALBOT_NODES: usize = 32;
/// Gaver-Stehfest order for the cross-check.
pub const STEHFEST_ORDER: usize = 14;
/// Largest tolerated disagreement between the two inversion routes.
pub const INVERSION_GATE: f64 = 1e-4;
/// Target tail mass beyond the grid edge.
pub const TAIL_MASS: f64 = 1e-8;
/// Large-`s` evaluation point for the atom diagnostics.
pub const ATOM_S: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Process {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Sup,
    Inf,
}

/// `E[e^{-s M}]` for the four extrema of a rational model.
#[derive(Debug, Clone)]
pub struct RationalFactors {
    pub sup_x: RationalFn,
    pub inf_x: RationalFn,
    pub sup_y: RationalFn,
    pub inf_y: RationalFn,
}

impl RationalFactors {
    pub fn get(&self, side: Side, process: Process) -> &RationalFn {
        match (side, process) {
            (Side::Sup, Process::X) => &self.sup_x,
            (Side::Inf, Process::X) => &self.inf_x,
            (Side::Sup, Process::Y) => &self.sup_y,
            (Side::Inf, Process::Y) => &self.inf_y,
        }
    }
}

/// `Π(1 + s/p)^m · Π ρ/(ρ + s)` as a normalised rational function.
fn factor_from_roots(jump_poles: &[(C64, u32)], roots: &[Root]) -> RationalFn {
    let mut c = C64::new(1.0, 0.0);
    for &(p, m) in jump_poles {
        c /= p.powi(m as i32);
    }
    let mut poles = Vec::new();
    for r in roots {
        let rho = C64::new(r.re.abs(), if r.re > 0.0 { r.im } else { -r.im });
        c *= rho.powi(r.multiplicity as i32);
        poles.push((rho, r.multiplicity));
    }
    RationalFn { num: Poly::from_linear_factors(jump_poles).scale(c), poles }
}

pub fn rational_factors(model: &LevySpec, q: f64, delta: f64) -> Result<RationalFactors> {
    let (x, y) = cramer_lundberg_roots(model, q, delta)?;
    let up = if model.pos_jumps.is_active() { model.pos_jumps.poles() } else { Vec::new() };
    let down = if model.neg_jumps.is_active() { model.neg_jumps.poles() } else { Vec::new() };
    Ok(RationalFactors {
        sup_x: factor_from_roots(&up, &x.sup_side()),
        inf_x: factor_from_roots(&down, &x.inf_side()),
        sup_y: factor_from_roots(&up, &y.sup_side()),
        inf_y: factor_from_roots(&down, &y.inf_side()),
    })
}

/// Wiener-Hopf data for a fixed `(q, δ)`: the context plus cached rational factors.
#[derive(Debug, Clone)]
pub struct WhContext {
    pub ctx: QContext,
    pub factors: Option<RationalFactors>,
}

impl WhContext {
    pub fn new(ctx: QContext) -> Result<Self> {
        let factors = if ctx.model.is_rational() {
            Some(rational_factors(&ctx.model, ctx.q, ctx.delta)?)
        } else {
            None
        };
        Ok(WhContext { ctx, factors })
    }

    pub fn build(model: &LevySpec, q: f64, delta: f64) -> Result<Self> {
        Self::new(QContext::new(model, q, delta)?)
    }

    fn rate(&self, process: Process) -> f64 {
        match process {
            Process::X => self.ctx.phi_q,
            Process::Y => self.ctx.varphi_q,
        }
    }

    fn process_delta(&self, process: Process) -> f64 {
        match process {
            Process::X => 0.0,
            Process::Y => self.ctx.delta,
        }
    }

    fn sn(&self) -> bool {
        self.ctx.model.is_spectrally_negative()
    }

    /// Bounded-variation drift of the given process, if any.
    pub fn bv_drift(&self, process: Process) -> Option<f64> {
        match self.ctx.variation {
            VariationClass::Bounded { bv_drift } => Some(bv_drift - self.process_delta(process)),
            VariationClass::Unbounded => None,
        }
    }
}

/// `E[e^{-s X̄_{e(q)}}]` (or the `Y` analogue).
pub fn factor_sup(wh: &WhContext, process: Process, s: f64) -> f64 {
    factor_sup_c(wh, process, C64::new(s, 0.0)).re
}

pub fn factor_sup_c(wh: &WhContext, process: Process, s: C64) -> C64 {
    if wh.sn() {
        let r = wh.rate(process);
        return r / (r + s);
    }
    wh.factors.as_ref().expect("two-sided models are rational").get(Side::Sup, process).eval(s)
}

/// `E[e^{s X̲_{e(q)}}]` (or the `Y` analogue), with the removable singularity filled in.
pub fn factor_inf(wh: &WhContext, process: Process, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(1.0);
    }
    Ok(factor_inf_c(wh, process, C64::new(s, 0.0))?.re)
}

pub fn factor_inf_c(wh: &WhContext, process: Process, s: C64) -> Result<C64> {
    if !wh.sn() {
        return Ok(wh.factors.as_ref().expect("two-sided models are rational").get(Side::Inf, process).eval(s));
    }
    let q = wh.ctx.q;
    let rho = wh.rate(process);
    let delta = wh.process_delta(process);
    let m = &wh.ctx.model;
    if (s - rho).norm() < 1e-6 * rho.max(1.0) {
        let mid = 0.5 * (s.re + rho);
        let d = m.exponent_deriv(mid)? - delta;
        return Ok(C64::new(q / rho / d, 0.0));
    }
    let psi = if s.im == 0.0 && s.re > 0.0 {
        C64::new(m.laplace_exponent(s.re)?, 0.0)
    } else {
        m.exponent_complex(s)?
    };
    let den = q - psi + delta * s;
    if den.norm() == 0.0 {
        return Err(Error::Pole(s.re));
    }
    Ok(q / rho * (rho - s) / den)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawRepr {
    ExponentialRate(f64),
    Mixture(ExpMixture),
    /// Continuous part sampled at `u_i = i·du`: density and survival `P(M > u)`.
    Grid { density: GridFunction, survival: GridFunction },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaLaw {
    pub side: Side,
    pub process: Process,
    pub representation: LawRepr,
    pub atom_at_zero: f64,
}

impl ExtremaLaw {
    /// Exact representation, when one exists.
    pub fn mixture(&self) -> Option<ExpMixture> {
        match &self.representation {
            LawRepr::ExponentialRate(r) => Some(ExpMixture::exponential(*r)),
            LawRepr::Mixture(m) => Some(m.clone()),
            LawRepr::Grid { .. } => None,
        }
    }

    /// Density of the magnitude at `u > 0`.
    pub fn density(&self, u: f64) -> f64 {
        match &self.representation {
            LawRepr::Grid { density, .. } => density.interp(u),
            _ => self.mixture().map(|m| m.density.eval(u)).unwrap_or(0.0),
        }
    }

    /// `P(M > u)` for `u ≥ 0`.
    pub fn survival(&self, u: f64) -> f64 {
        match &self.representation {
            LawRepr::Grid { survival, .. } => survival.interp(u),
            _ => self.mixture().map(|m| m.survival(u)).unwrap_or(0.0),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match &self.representation {
            LawRepr::Grid { survival, .. } => self.atom_at_zero + survival.values[0],
            _ => self.mixture().map(|m| m.total_mass()).unwrap_or(f64::NAN),
        }
    }

    /// Slowest exponential decay rate of the tail, when known exactly.
    pub fn decay_rate(&self) -> Option<f64> {
        match &self.representation {
            LawRepr::ExponentialRate(r) => Some(*r),
            LawRepr::Mixture(m) => m.density.min_decay(),
            LawRepr::Grid { .. } => None,
        }
    }
}

fn mixture_from(r: &RationalFn, side: Side, process: Process) -> Result<ExtremaLaw> {
    let (atom, density) = r.partial_fractions()?;
    let atom = atom.re.max(0.0);
    let m = ExpMixture { atom, density };
    Ok(ExtremaLaw { side, process, representation: LawRepr::Mixture(m), atom_at_zero: atom })
}

/// Law of the running supremum at `e(q)`.
pub fn sup_law(wh: &WhContext, process: Process) -> Result<ExtremaLaw> {
    if wh.sn() {
        let r = wh.rate(process);
        return Ok(ExtremaLaw { side: Side::Sup, process, representation: LawRepr::ExponentialRate(r), atom_at_zero: 0.0 });
    }
    match &wh.factors {
        Some(f) => mixture_from(f.get(Side::Sup, process), Side::Sup, process),
        None => Err(Error::Regularity("supremum law of a non-rational two-sided model".into())),
    }
}

/// Exact atom of the infimum for spectrally negative models: `q/(ρ d)` under bounded variation.
pub fn sn_inf_atom(wh: &WhContext, process: Process) -> f64 {
    match wh.bv_drift(process) {
        Some(d) if d > 0.0 => wh.ctx.q / (wh.rate(process) * d),
        _ => 0.0,
    }
}

/// Atom of an extremum read off the factor at `s = 10^8`.
pub fn atom_by_transform_limit(wh: &WhContext, side: Side, process: Process) -> Result<f64> {
    match side {
        Side::Sup => Ok(factor_sup(wh, process, ATOM_S)),
        Side::Inf => factor_inf(wh, process, ATOM_S),
    }
}

/// Ratios of the supremum and infimum factors at large `s`, for the admissibility report.
pub fn large_s_ratios(model: &LevySpec, q: f64, delta: f64) -> (Option<f64>, Option<f64>) {
    let Ok(wh) = WhContext::build(model, q, delta) else { return (None, None) };
    let sup = factor_sup(&wh, Process::Y, ATOM_S) / factor_sup(&wh, Process::X, ATOM_S);
    let inf = match (factor_inf(&wh, Process::X, ATOM_S), factor_inf(&wh, Process::Y, ATOM_S)) {
        (Ok(a), Ok(b)) if b != 0.0 => Some(a / b),
        _ => None,
    };
    (sup.is_finite().then_some(sup), inf.filter(|v| v.is_finite()))
}

/// Decay rate of the infimum tail for a density-specified model: the negative root of
/// `q = ψ_P(s)` closest to zero inside the convergence strip, else the tempering rate.
fn sn_inf_decay(wh: &WhContext, process: Process) -> f64 {
    let m = &wh.ctx.model;
    let delta = wh.process_delta(process);
    let q = wh.ctx.q;
    let beta = m.levy_density.map(|d| d.family.tempering()).unwrap_or(f64::INFINITY);
    let g = |s: f64| m.exponent_complex(C64::new(s, 0.0)).map(|v| v.re - delta * s - q);
    let lo_end = if beta.is_finite() { -beta * (1.0 - 1e-12) } else { -1e6 };
    match g(lo_end) {
        Ok(v) if v > 0.0 => {
            let (mut lo, mut hi) = (lo_end, 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid).map(|x| x > 0.0).unwrap_or(true) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            -0.5 * (lo + hi)
        }
        _ => beta,
    }
}

/// Grid length `L` with `e^{-r L} < 10^{-8}` for the slowest rate `r` among Φ, φ and the infimum tails.
pub fn tail_length(wh: &WhContext) -> f64 {
    let mut r = wh.ctx.phi_q.min(wh.ctx.varphi_q);
    for p in [Process::X, Process::Y] {
        let d = if wh.sn() && wh.factors.is_none() {
            sn_inf_decay(wh, p)
        } else {
            match wh.factors.as_ref() {
                Some(f) => f
                    .get(Side::Inf, p)
                    .poles
                    .iter()
                    .chain(f.get(Side::Sup, p).poles.iter())
                    .map(|(z, _)| z.re)
                    .fold(f64::INFINITY, f64::min),
                None => f64::INFINITY,
            }
        };
        r = r.min(d);
    }
    (1.0 / TAIL_MASS).ln() / r
}

/// Law of the running infimum. Rational models get an exact mixture; density models are
/// inverted numerically on `u_i = i·du` up to `length`.
pub fn inf_law(wh: &WhContext, process: Process, du: f64, length: f64) -> Result<ExtremaLaw> {
    if let Some(f) = &wh.factors {
        return mixture_from(f.get(Side::Inf, process), Side::Inf, process);
    }
    if !wh.sn() {
        return Err(Error::Unsupported("infimum law of a non-rational two-sided model".into()));
    }
    inf_law_inverted(wh, process, du, length)
}

fn inf_law_inverted(wh: &WhContext, process: Process, du: f64, length: f64) -> Result<ExtremaLaw> {
    let atom = sn_inf_atom(wh, process);
    let n = (length / du).ceil() as usize + 1;
    let r = |s: C64| factor_inf_c(wh, process, s).unwrap_or(C64::new(f64::NAN, 0.0));
    let dens_t = |s: C64| r(s) - atom;
    let surv_t = |s: C64| (1.0 - atom - (r(s) - atom)) / s;
    let mut density = Vec::with_capacity(n);
    let mut survival = Vec::with_capacity(n);
    for i in 1..n {
        let u = i as f64 * du;
        density.push(talbot(&dens_t, u, TALBOT_NODES));
        survival.push(talbot(&surv_t, u, TALBOT_NODES));
    }
    if density.iter().chain(&survival).any(|v| !v.is_finite()) {
        return Err(Error::Inversion(f64::NAN));
    }
    // Values at u = 0 by quadratic extrapolation.
    let d0 = 3.0 * density[0] - 3.0 * density[1] + density[2];
    density.insert(0, d0.max(0.0));
    survival.insert(0, 1.0 - atom);

    // Gaver-Stehfest cross-check of the survival function on a coarse subsample.
    let w = stehfest_weights(STEHFEST_ORDER);
    let surv_real = |s: f64| {
        let v = factor_inf(wh, process, s).unwrap_or(f64::NAN);
        (1.0 - v) / s
    };
    let stride = (n / 64).max(1);
    let mut worst = 0.0f64;
    for i in (stride..n).step_by(stride) {
        let u = i as f64 * du;
        let gs = gaver_stehfest(&surv_real, u, &w);
        worst = worst.max((gs - survival[i]).abs());
    }
    if !(worst <= INVERSION_GATE) {
        return Err(Error::Inversion(worst));
    }
    let spec = GridSpec::new(0.0, du, n);
    let density = GridFunction { x0: spec.x0, dx: du, values: density, kind: GridKind::Density };
    let survival = GridFunction { x0: spec.x0, dx: du, values: survival, kind: GridKind::Raw };
    Ok(ExtremaLaw { side: Side::Inf, process, representation: LawRepr::Grid { density, survival }, atom_at_zero: atom })
}

/// CDF of the running infimum on a grid over `(-L, 0]`: `z ↦ P(inf ≤ z)`.
pub fn inf_law_cdf(wh: &WhContext, process: Process, grid: GridSpec) -> Result<GridFunction> {
    let length = -grid.x0;
    let law = inf_law(wh, process, grid.dx, length.max(grid.dx))?;
    Ok(GridFunction::sample(grid, GridKind::Cdf, |z| if z >= 0.0 { 1.0 } else { law.survival(-z) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_models::catalog::*;
    use crate::levy_models::{DensityFamily, LevySpec};

    fn wh(m: &LevySpec, delta: f64) -> WhContext {
        WhContext::build(m, 1.0, delta).unwrap()
    }

    #[test]
    fn sup_factor_examples() {
        let w = wh(&m1(), 0.0);
        assert_eq!(factor_sup(&w, Process::X, 0.0), 1.0);
        assert!((factor_sup(&w, Process::X, 2f64.sqrt()) - 0.5).abs() < 1e-15);
        let w = wh(&m2(), 1.0);
        assert!((factor_sup(&w, Process::Y, (1.0 + 5f64.sqrt()) / 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inf_factor_examples() {
        let w = wh(&m1(), 0.0);
        let want = 2.0 * (2f64.sqrt() - 1.0) / 2f64.sqrt();
        assert!((factor_inf(&w, Process::X, 1.0).unwrap() - want).abs() < 1e-14);
        assert_eq!(factor_inf(&w, Process::X, 0.0).unwrap(), 1.0);
        assert!((factor_inf(&w, Process::X, 2f64.sqrt()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn laws_have_unit_mass() {
        for (m, d) in [(m1(), 1.0), (m2(), 1.0), (m3(), 1.0), (m3(), -0.5)] {
            let w = wh(&m, d);
            for p in [Process::X, Process::Y] {
                let s = sup_law(&w, p).unwrap();
                let i = inf_law(&w, p, 0.01, 10.0).unwrap();
                assert!((s.total_mass() - 1.0).abs() < 1e-8);
                assert!((i.total_mass() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn bv_atom_matches_transform_limit() {
        let w = wh(&m2(), 1.0);
        let law = inf_law(&w, Process::X, 0.01, 10.0).unwrap();
        let exact = sn_inf_atom(&w, Process::X);
        assert!((law.atom_at_zero - exact).abs() < 1e-12);
        let lim = atom_by_transform_limit(&w, Side::Inf, Process::X).unwrap();
        assert!((lim - exact).abs() < 1e-6);
    }

    #[test]
    fn brownian_inf_cdf() {
        let w = wh(&m1(), 0.0);
        let g = inf_law_cdf(&w, Process::X, GridSpec::new(-2.0, 0.5, 5)).unwrap();
        assert_eq!(g.values[4], 1.0);
        assert!((g.values[2] - (-2f64.sqrt()).exp()).abs() < 1e-14);
    }

    #[test]
    fn route_b_matches_route_a() {
        let gamma = 2.0 - (1.0 - 2.0 * (-1.0f64).exp());
        let dm = LevySpec::with_density(0.0, gamma, DensityFamily::Exponential { intensity: 1.0, rate: 1.0 });
        let a = inf_law(&wh(&m2(), 1.0), Process::X, 1.0 / 64.0, 12.0).unwrap();
        let b = inf_law(&wh(&dm, 1.0), Process::X, 1.0 / 64.0, 12.0).unwrap();
        assert!((a.atom_at_zero - b.atom_at_zero).abs() < 1e-9);
        for i in 1..700 {
            let u = i as f64 / 64.0;
            assert!((a.survival(u) - b.survival(u)).abs() < 1e-5, "u = {u}");
        }
    }

    #[test]
    fn large_s_ratio_limits() {
        // φ/Φ for the supremum, (φ/Φ)(d-δ)/d for the infimum of a BV model.
        let w = wh(&m2(), 1.0);
        let (phi, vphi) = (w.ctx.phi_q, w.ctx.varphi_q);
        let (s, i) = large_s_ratios(&m2(), 1.0, 1.0);
        assert!((s.unwrap() - vphi / phi).abs() < 1e-4 * vphi / phi);
        let want = vphi / phi * 0.5;
        assert!((i.unwrap() - want).abs() < 1e-4 * want);
    }

    #[test]
    fn factors_are_monotone_in_s() {
        for (m, d) in [(m1(), 1.0), (m2(), 1.0), (m3(), 1.0)] {
            let w = wh(&m, d);
            for p in [Process::X, Process::Y] {
                let mut prev = (1.0 + 1e-15, 1.0 + 1e-15);
                for k in 0..50 {
                    let s = 0.2 * k as f64;
                    let v = (factor_sup(&w, p, s), factor_inf(&w, p, s).unwrap());
                    assert!(v.0 <= prev.0 && v.1 <= prev.1 && v.0 > 0.0 && v.1 > 0.0);
                    prev = v;
                }
            }
        }
    }
}
