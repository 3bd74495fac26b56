//! Lévy model catalog, Laplace exponents, path-variation classes and admissibility.
//!
//! Jumps are stored by size: `neg_jumps` are downward jumps of size `z > 0`,
//! `pos_jumps` upward ones. A rational jump law has density
//! `Σ w·η^j z^{j-1}/(j-1)!·e^{-η z}` whose weights sum to one.
//!
//! For rational models `drift` is the plain drift `μ` of `μt + σW_t + jumps`.
//! For density-specified models it is `γ`, with small jumps compensated on `(0, 1)`.

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate, integrate_to_inf, Tolerance};
use crate::numeric::C64;
use serde::{Deserialize, Serialize};

const QUAD_TOL: Tolerance = Tolerance::new(1e-10, 1e-13);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub weight: C64,
    pub rate: C64,
    pub power: u32,
}

impl ExpTerm {
    pub fn real(weight: f64, rate: f64, power: u32) -> Self {
        ExpTerm { weight: C64::new(weight, 0.0), rate: C64::new(rate, 0.0), power }
    }

    fn density(&self, z: f64) -> C64 {
        let mut poly = C64::new(1.0, 0.0);
        for k in 1..self.power {
            poly *= self.rate * z / k as f64;
        }
        self.weight * self.rate * poly * (-self.rate * z).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpKind {
    None,
    Exponential,
    HyperExponential,
    RationalMixture,
    Density,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpSpec {
    pub kind: JumpKind,
    pub intensity: f64,
    pub terms: Vec<ExpTerm>,
}

impl JumpSpec {
    pub fn none() -> Self {
        JumpSpec { kind: JumpKind::None, intensity: 0.0, terms: Vec::new() }
    }

    pub fn exponential(intensity: f64, rate: f64) -> Self {
        JumpSpec { kind: JumpKind::Exponential, intensity, terms: vec![ExpTerm::real(1.0, rate, 1)] }
    }

    /// Infers the kind from the terms.
    pub fn rational(intensity: f64, terms: Vec<ExpTerm>) -> Self {
        let kind = if intensity == 0.0 || terms.is_empty() {
            JumpKind::None
        } else if terms.iter().all(|t| t.power == 1 && t.weight.im == 0.0 && t.rate.im == 0.0 && t.weight.re > 0.0) {
            if terms.len() == 1 {
                JumpKind::Exponential
            } else {
                JumpKind::HyperExponential
            }
        } else {
            JumpKind::RationalMixture
        };
        JumpSpec { kind, intensity, terms }
    }

    pub fn is_active(&self) -> bool {
        self.intensity > 0.0 && !self.terms.is_empty()
    }

    /// Jump-size density at `z > 0` (not scaled by the intensity).
    pub fn density(&self, z: f64) -> f64 {
        self.terms.iter().map(|t| t.density(z)).sum::<C64>().re
    }

    /// `E[e^{-s Z}]`, the rational transform continued to the complex plane.
    pub fn transform(&self, s: C64) -> C64 {
        self.terms.iter().map(|t| t.weight * (t.rate / (t.rate + s)).powi(t.power as i32)).sum()
    }

    fn transform_deriv(&self, s: C64) -> C64 {
        self.terms
            .iter()
            .map(|t| -t.weight * t.power as f64 * t.rate.powi(t.power as i32) / (t.rate + s).powi(t.power as i32 + 1))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.terms.iter().map(|t| t.weight * t.power as f64 / t.rate).sum::<C64>().re
    }

    /// Distinct rates with the highest power carrying a nonzero weight.
    pub fn poles(&self) -> Vec<(C64, u32)> {
        let mut out: Vec<(C64, u32)> = Vec::new();
        for t in self.terms.iter().filter(|t| t.weight.norm() > 0.0) {
            match out.iter_mut().find(|(r, _)| (*r - t.rate).norm() <= 1e-14 * t.rate.norm()) {
                Some(p) => p.1 = p.1.max(t.power),
                None => out.push((t.rate, t.power)),
            }
        }
        out
    }

    fn validate(&self, side: &str) -> Result<()> {
        if !(self.intensity >= 0.0) || !self.intensity.is_finite() {
            return Err(Error::InvalidModel(format!("{side} jump intensity must be finite and nonnegative")));
        }
        if !self.is_active() {
            return Ok(());
        }
        for t in &self.terms {
            if t.power == 0 {
                return Err(Error::InvalidModel(format!("{side} jump term power must be positive")));
            }
            if !(t.rate.re > 0.0) {
                return Err(Error::InvalidModel(format!("{side} jump rates need a positive real part")));
            }
        }
        let total: C64 = self.terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).norm() > 1e-9 {
            return Err(Error::InvalidModel(format!("{side} jump weights sum to {total}, not 1")));
        }
        // Realness and positivity on a 64-point grid spanning the slowest decay scale.
        let slow = self.terms.iter().map(|t| t.rate.re).fold(f64::INFINITY, f64::min);
        let span = 20.0 / slow;
        for i in 0..64 {
            let z = span * (i as f64 + 0.5) / 64.0;
            let v: C64 = self.terms.iter().map(|t| t.density(z)).sum();
            let scale: f64 = self.terms.iter().map(|t| t.density(z).norm()).sum::<f64>().max(1.0);
            if v.im.abs() > 1e-9 * scale {
                return Err(Error::InvalidModel(format!("{side} jump density is not real at z = {z}")));
            }
            if v.re < -1e-9 * scale {
                return Err(Error::InvalidModel(format!("{side} jump density is negative at z = {z}")));
            }
        }
        Ok(())
    }
}

/// Parametric Lévy densities of downward jumps, `Π(dz) = density(z) dz` on `z > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityFamily {
    /// `c·z^{-1-α}·e^{-βz}` with `α ∈ (0, 2)`, `α ≠ 1`.
    TemperedStable { c: f64, alpha: f64, beta: f64 },
    /// `c·z^{-1}·e^{-βz}`.
    Gamma { c: f64, beta: f64 },
    /// `λη·e^{-ηz}`.
    Exponential { intensity: f64, rate: f64 },
}

impl DensityFamily {
    pub fn eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        match *self {
            DensityFamily::TemperedStable { c, alpha, beta } => c * z.powf(-1.0 - alpha) * (-beta * z).exp(),
            DensityFamily::Gamma { c, beta } => c * (-beta * z).exp() / z,
            DensityFamily::Exponential { intensity, rate } => intensity * rate * (-rate * z).exp(),
        }
    }

    /// Rate of the exponential tempering.
    pub fn tempering(&self) -> f64 {
        match *self {
            DensityFamily::TemperedStable { beta, .. } | DensityFamily::Gamma { beta, .. } => beta,
            DensityFamily::Exponential { rate, .. } => rate,
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            DensityFamily::TemperedStable { c, alpha, beta } => {
                c > 0.0 && alpha > 0.0 && alpha < 2.0 && (alpha - 1.0).abs() > 1e-12 && beta > 0.0
            }
            DensityFamily::Gamma { c, beta } => c > 0.0 && beta > 0.0,
            DensityFamily::Exponential { intensity, rate } => intensity >= 0.0 && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("bad density parameters {self:?}")))
        }
    }

    /// Whether `∫_(0,1) z Π(dz)` is finite.
    pub fn finite_first_moment_near_zero(&self) -> bool {
        match *self {
            DensityFamily::TemperedStable { alpha, .. } => alpha < 1.0,
            _ => true,
        }
    }

    /// `∫_0^∞ (e^{-sz} - 1 + s z 1{z<1}) Π(dz)` in closed form, valid off the cut `s ≤ -β`.
    pub fn compensated_transform(&self, s: C64) -> C64 {
        match *self {
            DensityFamily::TemperedStable { c, alpha, beta } => {
                let g = libm::tgamma(-alpha);
                let upper = tail_moment(alpha, beta);
                let b = C64::new(beta, 0.0);
                c * g * ((b + s).powf(alpha) - beta.powf(alpha) - alpha * beta.powf(alpha - 1.0) * s) - s * c * upper
            }
            DensityFamily::Gamma { c, beta } => {
                -c * (1.0 + s / beta).ln() + s * c * (1.0 - (-beta).exp()) / beta
            }
            DensityFamily::Exponential { intensity, rate } => {
                -intensity * s / (rate + s) + s * intensity * (1.0 - (-rate).exp() * (1.0 + rate)) / rate
            }
        }
    }
}

/// `∫_1^∞ z^{-α} e^{-βz} dz`.
fn tail_moment(alpha: f64, beta: f64) -> f64 {
    integrate_to_inf(|z| z.powf(-alpha) * (-beta * z).exp(), 1.0, Tolerance::new(1e-15, 1e-13)).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevyDensity {
    pub family: DensityFamily,
    /// Jumps larger than this are dropped; `∞` keeps the closed-form continuation available.
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum VariationClass {
    Bounded { bv_drift: f64 },
    Unbounded,
}

impl VariationClass {
    pub fn bv_drift(&self) -> Option<f64> {
        match *self {
            VariationClass::Bounded { bv_drift } => Some(bv_drift),
            VariationClass::Unbounded => None,
        }
    }
}


/// `e^{-x} - 1 + x` without cancellation for small `x`.
pub fn compensated_exp(x: f64) -> f64 {
    if x.abs() > 0.1 {
        return (-x).exp_m1() + x;
    }
    let (mut term, mut acc) = (0.5 * x * x, 0.0);
    for n in 3..20 {
        acc += term;
        term *= -x / n as f64;
        if term.abs() < 1e-17 * acc.abs() {
            break;
        }
    }
    acc
}

/// `∫_0^a g(z) dz` for integrands with a power singularity at zero, via `z = t^4`.
pub(crate) fn near_zero<G: Fn(f64) -> f64>(g: G, a: f64) -> Result<f64> {
    integrate(|t| { let t2 = t * t; 4.0 * t * t2 * g(t2 * t2) }, 0.0, a.powf(0.25), QUAD_TOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevySpec {
    pub gaussian_coeff: f64,
    pub drift: f64,
    pub neg_jumps: JumpSpec,
    pub pos_jumps: JumpSpec,
    pub levy_density: Option<LevyDensity>,
}

impl LevySpec {
    pub fn brownian(sigma: f64, drift: f64) -> Self {
        LevySpec { gaussian_coeff: sigma, drift, neg_jumps: JumpSpec::none(), pos_jumps: JumpSpec::none(), levy_density: None }
    }

    pub fn jump_diffusion(sigma: f64, drift: f64, neg: JumpSpec, pos: JumpSpec) -> Self {
        LevySpec { gaussian_coeff: sigma, drift, neg_jumps: neg, pos_jumps: pos, levy_density: None }
    }

    pub fn with_density(sigma: f64, gamma: f64, family: DensityFamily) -> Self {
        let neg = JumpSpec { kind: JumpKind::Density, intensity: 0.0, terms: Vec::new() };
        LevySpec {
            gaussian_coeff: sigma,
            drift: gamma,
            neg_jumps: neg,
            pos_jumps: JumpSpec::none(),
            levy_density: Some(LevyDensity { family, upper: f64::INFINITY }),
        }
    }

    pub fn is_spectrally_negative(&self) -> bool {
        !self.pos_jumps.is_active()
    }

    pub fn is_rational(&self) -> bool {
        self.levy_density.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_coeff >= 0.0) || !self.gaussian_coeff.is_finite() {
            return Err(Error::InvalidModel("gaussian coefficient must be finite and nonnegative".into()));
        }
        if !self.drift.is_finite() {
            return Err(Error::InvalidModel("drift must be finite".into()));
        }
        self.neg_jumps.validate("negative")?;
        self.pos_jumps.validate("positive")?;
        if let Some(ld) = &self.levy_density {
            ld.family.check()?;
            if self.pos_jumps.is_active() {
                return Err(Error::InvalidModel("density-specified models are spectrally negative".into()));
            }
            let f = |z: f64| ld.family.eval(z);
            let near = integrate(|z| z * z * f(z), 0.0, 1.0f64.min(ld.upper), QUAD_TOL)?;
            let far = if ld.upper > 1.0 { integrate(f, 1.0, ld.upper.min(1e3), QUAD_TOL)? } else { 0.0 };
            if !(near + far).is_finite() {
                return Err(Error::InvalidModel("Lévy density fails the (z²∧1) integrability check".into()));
            }
        }
        if self.gaussian_coeff == 0.0 && !self.neg_jumps.is_active() && !self.pos_jumps.is_active() && self.levy_density.is_none() {
            return Err(Error::InvalidModel("model is a pure drift".into()));
        }
        Ok(())
    }

    /// Supremum of the real domain of ψ (the smallest upward jump rate).
    pub fn exponent_domain(&self) -> f64 {
        if !self.pos_jumps.is_active() {
            return f64::INFINITY;
        }
        self.pos_jumps.terms.iter().map(|t| t.rate.re).fold(f64::INFINITY, f64::min)
    }

    fn pole_check(&self, s: C64) -> Result<()> {
        for t in self.pos_jumps.terms.iter().filter(|_| self.pos_jumps.is_active()) {
            if (t.rate - s).norm() <= 1e-14 * (1.0 + t.rate.norm()) {
                return Err(Error::Pole(s.re));
            }
        }
        for t in self.neg_jumps.terms.iter().filter(|_| self.neg_jumps.is_active()) {
            if (t.rate + s).norm() <= 1e-14 * (1.0 + t.rate.norm()) {
                return Err(Error::Pole(s.re));
            }
        }
        Ok(())
    }

    fn rational_exponent(&self, s: C64) -> C64 {
        let mut v = 0.5 * self.gaussian_coeff.powi(2) * s * s + self.drift * s;
        if self.neg_jumps.is_active() {
            v += self.neg_jumps.intensity * (self.neg_jumps.transform(s) - 1.0);
        }
        if self.pos_jumps.is_active() {
            v += self.pos_jumps.intensity * (self.pos_jumps.transform(-s) - 1.0);
        }
        v
    }

    /// ψ continued to complex `s`; closed forms only.
    pub fn exponent_complex(&self, s: C64) -> Result<C64> {
        match &self.levy_density {
            None => {
                self.pole_check(s)?;
                Ok(self.rational_exponent(s))
            }
            Some(ld) => {
                if ld.upper.is_finite() {
                    return Err(Error::Unsupported("complex exponent of a truncated density".into()));
                }
                let beta = ld.family.tempering();
                if s.im == 0.0 && s.re <= -beta {
                    return Err(Error::Pole(s.re));
                }
                Ok(0.5 * self.gaussian_coeff.powi(2) * s * s + self.drift * s + ld.family.compensated_transform(s))
            }
        }
    }

    /// ψ(θ) for real θ; density models are integrated numerically.
    pub fn laplace_exponent(&self, theta: f64) -> Result<f64> {
        if theta == 0.0 {
            return Ok(0.0);
        }
        match &self.levy_density {
            None => {
                let s = C64::new(theta, 0.0);
                self.pole_check(s)?;
                Ok(self.rational_exponent(s).re)
            }
            Some(ld) => {
                let f = |z: f64| ld.family.eval(z);
                let m1 = |z: f64| compensated_exp(theta * z);
                let near = near_zero(|z| m1(z) * f(z), 1.0f64.min(ld.upper))?;
                let far = if ld.upper > 1.0 {
                    let g = |z: f64| if z > ld.upper { 0.0 } else { (-theta * z).exp_m1() * f(z) };
                    integrate_to_inf(g, 1.0, QUAD_TOL)?
                } else {
                    0.0
                };
                Ok(0.5 * self.gaussian_coeff.powi(2) * theta * theta + self.drift * theta + near + far)
            }
        }
    }

    /// ψ'(θ) for real θ.
    pub fn exponent_deriv(&self, theta: f64) -> Result<f64> {
        let base = self.gaussian_coeff.powi(2) * theta + self.drift;
        match &self.levy_density {
            None => {
                let s = C64::new(theta, 0.0);
                self.pole_check(s)?;
                let mut v = C64::new(base, 0.0);
                if self.neg_jumps.is_active() {
                    v += self.neg_jumps.intensity * self.neg_jumps.transform_deriv(s);
                }
                if self.pos_jumps.is_active() {
                    v -= self.pos_jumps.intensity * self.pos_jumps.transform_deriv(-s);
                }
                Ok(v.re)
            }
            Some(ld) => {
                let f = |z: f64| ld.family.eval(z);
                let near = near_zero(|z| -z * (-theta * z).exp_m1() * f(z), 1.0f64.min(ld.upper))?;
                let far = if ld.upper > 1.0 {
                    let g = |z: f64| if z > ld.upper { 0.0 } else { -z * (-theta * z).exp() * f(z) };
                    integrate_to_inf(g, 1.0, QUAD_TOL)?
                } else {
                    0.0
                };
                Ok(base + near + far)
            }
        }
    }

    /// ψ_Y(θ) = ψ(θ) - δθ, the exponent of `Y_t = X_t - δt`.
    pub fn exponent_y(&self, theta: f64, delta: f64) -> Result<f64> {
        Ok(self.laplace_exponent(theta)? - delta * theta)
    }

    /// The same model with drift lowered by δ.
    pub fn shifted(&self, delta: f64) -> LevySpec {
        LevySpec { drift: self.drift - delta, ..self.clone() }
    }

    pub fn variation(&self) -> VariationClass {
        if self.gaussian_coeff > 0.0 {
            return VariationClass::Unbounded;
        }
        match &self.levy_density {
            None => VariationClass::Bounded { bv_drift: self.drift },
            Some(ld) if ld.family.finite_first_moment_near_zero() => {
                let f = |z: f64| z * ld.family.eval(z);
                let m = integrate(f, 0.0, 1.0f64.min(ld.upper), QUAD_TOL).unwrap_or(f64::NAN);
                VariationClass::Bounded { bv_drift: self.drift + m }
            }
            Some(_) => VariationClass::Unbounded,
        }
    }
}

/// Catalog models used throughout the tests and the acceptance suite.
pub mod catalog {
    use super::*;

    /// Standard Brownian motion.
    pub fn m1() -> LevySpec {
        LevySpec::brownian(1.0, 0.0)
    }

    /// Drift 2 with rate-1 Exp(1) downward jumps.
    pub fn m2() -> LevySpec {
        LevySpec::jump_diffusion(0.0, 2.0, JumpSpec::exponential(1.0, 1.0), JumpSpec::none())
    }

    /// Unit Brownian part, Exp(2) upward and Exp(3) downward jumps, both at rate 1.
    pub fn m3() -> LevySpec {
        LevySpec::jump_diffusion(1.0, 0.0, JumpSpec::exponential(1.0, 3.0), JumpSpec::exponential(1.0, 2.0))
    }

    /// Compound Poisson with upward Exp(1) jumps and drift 0.5.
    pub fn positive_drift_compound_poisson() -> LevySpec {
        LevySpec::jump_diffusion(0.0, 0.5, JumpSpec::none(), JumpSpec::exponential(1.0, 1.0))
    }

    /// Two-sided compound Poisson with drift -0.5.
    pub fn negative_drift_two_sided() -> LevySpec {
        LevySpec::jump_diffusion(0.0, -0.5, JumpSpec::exponential(1.0, 1.0), JumpSpec::exponential(1.0, 1.0))
    }

    /// Unit Brownian part plus `z^{-3/2} e^{-z}` downward jumps.
    pub fn tempered_stable() -> LevySpec {
        LevySpec::with_density(1.0, 0.0, DensityFamily::TemperedStable { c: 1.0, alpha: 0.5, beta: 1.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomFlags {
    pub sup_x: bool,
    pub inf_x: bool,
    pub sup_y: bool,
    pub inf_y: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub admitted: bool,
    pub spectrally_negative: bool,
    pub in_snlp: bool,
    pub variation: VariationClass,
    pub atoms: AtomFlags,
    /// `Ê[e^{-sȲ}]/E[e^{-sX̄}]` and `E[e^{sX̲}]/Ê[e^{sY̲}]` at large `s`, when computable.
    pub sup_ratio_large_s: Option<f64>,
    pub inf_ratio_large_s: Option<f64>,
    pub reasons: Vec<String>,
    pub warnings: Vec<String>,
}

/// Classifies path variation and decides whether the refracted law can be computed.
pub fn classify_and_admit(model: &LevySpec, delta: f64) -> (VariationClass, AdmissibilityReport) {
    let variation = model.variation();
    let sn = model.is_spectrally_negative();
    let mut reasons = Vec::new();
    let mut warnings = Vec::new();
    if let Err(e) = model.validate() {
        reasons.push(e.to_string());
    }
    let atoms = match variation {
        VariationClass::Unbounded => AtomFlags { sup_x: false, inf_x: false, sup_y: false, inf_y: false },
        VariationClass::Bounded { bv_drift: d } => AtomFlags {
            sup_x: d <= 0.0,
            inf_x: d >= 0.0,
            sup_y: d - delta <= 0.0,
            inf_y: d - delta >= 0.0,
        },
    };
    let in_snlp = sn
        && match variation {
            VariationClass::Unbounded => true,
            VariationClass::Bounded { bv_drift: d } => d > delta && delta > 0.0,
        };
    if sn {
        if let VariationClass::Bounded { bv_drift: d } = variation {
            if delta == 0.0 {
                warnings.push("δ = 0: no refraction, U = X".into());
            } else if !in_snlp {
                reasons.push(format!("bounded variation requires d > δ > 0, got d = {d}, δ = {delta}"));
            }
        }
    } else if !model.is_rational() {
        reasons.push("two-sided models must have rational jump laws".into());
    } else {
        if delta > 0.0 && atoms.sup_y && !atoms.sup_x {
            reasons.push(
                "finiteness of the large-s factor ratios fails: Y has an atom at its supremum and X does not".into(),
            );
        }
        if delta > 0.0 && atoms.inf_x && !atoms.inf_y {
            reasons.push(
                "finiteness of the large-s factor ratios fails: X has an atom at its infimum and Y does not".into(),
            );
        }
        if atoms.sup_x && atoms.inf_y {
            reasons.push("K_q is discontinuous: P(sup X = 0) > 0 and P(inf Y = 0) > 0".into());
        }
        if reasons.is_empty() {
            warnings.push("continuity and uniform bounds of F1, F2 are checked numerically only".into());
        }
    }
    if delta < 0.0 {
        warnings.push("for δ < 0 the law is that of the constructed solution; uniqueness is not established".into());
    }
    let (sup_ratio, inf_ratio) = crate::wiener_hopf::large_s_ratios(model, 1.0, delta);
    let report = AdmissibilityReport {
        admitted: reasons.is_empty(),
        spectrally_negative: sn,
        in_snlp,
        variation,
        atoms,
        sup_ratio_large_s: sup_ratio,
        inf_ratio_large_s: inf_ratio,
        reasons,
        warnings,
    };
    (variation, report)
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;

    #[test]
    fn brownian_exponent() {
        assert_eq!(m1().laplace_exponent(2.0).unwrap(), 2.0);
    }

    #[test]
    fn bv_exponent_and_zero() {
        assert!((m2().laplace_exponent(1.0).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(m2().laplace_exponent(0.0).unwrap(), 0.0);
    }

    #[test]
    fn bv_slope_tends_to_drift() {
        let m = m2();
        let d = m.variation().bv_drift().unwrap();
        let a = (m.laplace_exponent(1e3).unwrap() / 1e3 - d).abs();
        let b = (m.laplace_exponent(1e4).unwrap() / 1e4 - d).abs();
        assert!(a < 0.01 * d && b < a);
    }

    #[test]
    fn density_exponent_matches_closed_form() {
        for m in [
            tempered_stable(),
            LevySpec::with_density(0.0, 0.3, DensityFamily::TemperedStable { c: 0.7, alpha: 0.4, beta: 2.0 }),
            LevySpec::with_density(0.5, -0.2, DensityFamily::TemperedStable { c: 0.3, alpha: 1.5, beta: 1.0 }),
            LevySpec::with_density(0.0, 1.0, DensityFamily::Gamma { c: 1.0, beta: 1.0 }),
            LevySpec::with_density(0.0, 2.0, DensityFamily::Exponential { intensity: 1.0, rate: 1.0 }),
        ] {
            for th in [0.3, 1.0, 4.0] {
                let q = m.laplace_exponent(th).unwrap();
                let c = m.exponent_complex(C64::new(th, 0.0)).unwrap().re;
                assert!((q - c).abs() < 1e-9 * (1.0 + c.abs()), "{m:?} θ={th}: {q} vs {c}");
                let h = 1e-3;
                let fd = (m.laplace_exponent(th + h).unwrap() - m.laplace_exponent(th - h).unwrap()) / (2.0 * h);
                let d = m.exponent_deriv(th).unwrap();
                assert!((d - fd).abs() < 1e-5, "{m:?} θ={th}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn exponential_density_matches_rational_model() {
        // γ = d - ∫_0^1 z e^{-z} dz for the density form of M2.
        let gamma = 2.0 - (1.0 - 2.0 * (-1.0f64).exp());
        let m = LevySpec::with_density(0.0, gamma, DensityFamily::Exponential { intensity: 1.0, rate: 1.0 });
        for th in [0.5, 1.0, 3.0] {
            assert!((m.laplace_exponent(th).unwrap() - m2().laplace_exponent(th).unwrap()).abs() < 1e-10);
        }
        assert!((m.variation().bv_drift().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn two_sided_pole() {
        assert!(matches!(m3().laplace_exponent(2.0), Err(Error::Pole(_))));
        assert_eq!(m3().exponent_domain(), 2.0);
    }

    #[test]
    fn admissibility_examples() {
        let (v, r) = classify_and_admit(&m1(), 1.0);
        assert_eq!(v, VariationClass::Unbounded);
        assert!(r.admitted && r.in_snlp);
        let (v, r) = classify_and_admit(&m2(), 1.0);
        assert_eq!(v, VariationClass::Bounded { bv_drift: 2.0 });
        assert!(r.admitted);
        let (_, r) = classify_and_admit(&m2(), 2.5);
        assert!(!r.admitted);
        let (_, r) = classify_and_admit(&positive_drift_compound_poisson(), 1.0);
        assert!(!r.admitted);
        assert!(r.reasons[0].contains("large-s factor ratios"));
        let (_, r) = classify_and_admit(&negative_drift_two_sided(), -1.0);
        assert!(!r.admitted);
        let (_, r) = classify_and_admit(&m3(), 1.0);
        assert!(r.admitted);
    }

    #[test]
    fn complex_weights_must_be_real_density() {
        let w = C64::new(0.0, 0.1);
        let r = C64::new(2.0, 1.0);
        let good = JumpSpec::rational(
            1.0,
            vec![
                ExpTerm::real(1.0, 1.0, 1),
                ExpTerm { weight: w, rate: r, power: 1 },
                ExpTerm { weight: w.conj(), rate: r.conj(), power: 1 },
            ],
        );
        assert!(good.validate("negative").is_ok());
        assert_eq!(good.kind, JumpKind::RationalMixture);
        let bad = JumpSpec::rational(1.0, vec![ExpTerm { weight: C64::new(1.0, 0.0), rate: r, power: 1 }]);
        assert!(bad.validate("negative").is_err());
    }
}
