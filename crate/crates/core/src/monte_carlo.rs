//! Simulation oracle for `U_t = X_t - δ ∫_0^t 1{U_s > b} ds` sampled at `e(q)`.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::levy_models::{DensityFamily, JumpSpec, LevySpec};
use crate::potential::{PotentialResult, RefractionProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;

pub const SAMPLE_MAGIC: &[u8; 4] = b"RFWH";
pub const SAMPLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub step_h: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exact Gaussian increments with the indicator frozen over each step.
    FrozenIndicatorEuler,
    /// Piecewise-linear motion between jumps with exact crossings of `b`.
    ExactBoundedVariation,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    /// Sorted values of `U_{e(q)}`.
    pub samples: Vec<f64>,
    pub config: SimConfig,
    pub scheme: Scheme,
    pub q: f64,
    pub delta: f64,
    pub b: f64,
    pub x: f64,
}

impl SimResult {
    pub fn empirical_cdf(&self, y: f64) -> f64 {
        self.samples.partition_point(|&s| s <= y) as f64 / self.samples.len() as f64
    }

    /// Binomial standard error of the empirical CDF at `y`.
    pub fn stderr_band(&self, y: f64) -> f64 {
        let p = self.empirical_cdf(y);
        (p * (1.0 - p) / self.samples.len() as f64).sqrt()
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.samples.len();
        let i = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.samples[i]
    }
}

/// One jump component: intensity and an Erlang mixture of sizes.
#[derive(Debug, Clone)]
struct JumpSampler {
    intensity: f64,
    cumulative: Vec<f64>,
    laws: Vec<Gamma<f64>>,
}

impl JumpSampler {
    fn new(j: &JumpSpec) -> Result<Option<Self>> {
        if !j.is_active() {
            return Ok(None);
        }
        if j.terms.iter().any(|t| t.weight.im != 0.0 || t.rate.im != 0.0 || t.weight.re < 0.0) {
            return Err(Error::Unsupported("simulation needs jump laws that are mixtures with nonnegative weights".into()));
        }
        let total: f64 = j.terms.iter().map(|t| t.weight.re).sum();
        let mut acc = 0.0;
        let mut cumulative = Vec::new();
        let mut laws = Vec::new();
        for t in &j.terms {
            acc += t.weight.re / total;
            cumulative.push(acc);
            laws.push(Gamma::new(t.power as f64, 1.0 / t.rate.re).map_err(|e| Error::InvalidModel(e.to_string()))?);
        }
        Ok(Some(JumpSampler { intensity: j.intensity, cumulative, laws }))
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let k = self.cumulative.iter().position(|&c| u <= c).unwrap_or(self.laws.len() - 1);
        self.laws[k].sample(rng)
    }
}

/// Path dynamics in the plain-drift form `μt + σW_t + upward jumps - downward jumps`.
#[derive(Debug, Clone)]
struct Dynamics {
    sigma: f64,
    drift: f64,
    down: Option<JumpSampler>,
    up: Option<JumpSampler>,
}

impl Dynamics {
    fn new(model: &LevySpec) -> Result<Self> {
        match model.levy_density {
            None => Ok(Dynamics {
                sigma: model.gaussian_coeff,
                drift: model.drift,
                down: JumpSampler::new(&model.neg_jumps)?,
                up: JumpSampler::new(&model.pos_jumps)?,
            }),
            Some(ld) => match ld.family {
                DensityFamily::Exponential { intensity, rate } if ld.upper.is_infinite() => {
                    // Finite activity: undo the compensation on (0, 1).
                    let comp = intensity * (1.0 - (-rate).exp() * (1.0 + rate)) / rate;
                    Ok(Dynamics {
                        sigma: model.gaussian_coeff,
                        drift: model.drift + comp,
                        down: JumpSampler::new(&JumpSpec::exponential(intensity, rate))?,
                        up: None,
                    })
                }
                _ => Err(Error::Unsupported("infinite-activity jump laws cannot be simulated exactly".into())),
            },
        }
    }

    fn jump_rate(&self) -> f64 {
        self.down.as_ref().map_or(0.0, |j| j.intensity) + self.up.as_ref().map_or(0.0, |j| j.intensity)
    }

    fn jump<R: Rng>(&self, rng: &mut R) -> f64 {
        let dn = self.down.as_ref().map_or(0.0, |j| j.intensity);
        let total = self.jump_rate();
        let u: f64 = rng.random::<f64>() * total;
        match (&self.down, &self.up) {
            (Some(d), _) if u < dn => -d.draw(rng),
            (_, Some(up)) => up.draw(rng),
            (Some(d), None) => -d.draw(rng),
            (None, None) => 0.0,
        }
    }
}

/// Deterministic flow of `du = (μ - δ 1{u > b}) dt` over `dt`, with sliding at `b`.
fn flow(mut u: f64, mut dt: f64, mu: f64, delta: f64, b: f64) -> f64 {
    if delta == 0.0 {
        return u + mu * dt;
    }
    let above = mu - delta;
    for _ in 0..3 {
        if dt <= 0.0 {
            break;
        }
        if u > b {
            if above >= 0.0 {
                return u + above * dt;
            }
            let hit = (u - b) / -above;
            if dt <= hit {
                return u + above * dt;
            }
            u = b;
            dt -= hit;
        } else if u < b {
            if mu <= 0.0 {
                return u + mu * dt;
            }
            let hit = (b - u) / mu;
            if dt <= hit {
                return u + mu * dt;
            }
            u = b;
            dt -= hit;
        } else {
            // At b the indicator is off: leave downward with μ, upward only if μ - δ > 0 too.
            if mu < 0.0 {
                return b + mu * dt;
            }
            if mu > 0.0 && above > 0.0 {
                return b + above * dt;
            }
            return b;
        }
    }
    u
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

#[allow(clippy::too_many_arguments)]
fn simulate_path(dynamics: &Dynamics, scheme: Scheme, q: f64, delta: f64, b: f64, x: f64, h: f64, rng: &mut ChaCha8Rng) -> f64 {
    let horizon: f64 = Exp1.sample(rng);
    let horizon = horizon / q;
    let rate = dynamics.jump_rate();
    let next_jump = |rng: &mut ChaCha8Rng| -> f64 {
        if rate > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / rate
        } else {
            f64::INFINITY
        }
    };
    let mut t = 0.0;
    let mut u = x;
    let mut jump_at = next_jump(rng);
    match scheme {
        Scheme::ExactBoundedVariation => {
            while t < horizon {
                let end = jump_at.min(horizon);
                u = flow(u, end - t, dynamics.drift, delta, b);
                t = end;
                if jump_at <= horizon {
                    u += dynamics.jump(rng);
                    jump_at += next_jump(rng);
                }
            }
        }
        Scheme::FrozenIndicatorEuler => {
            let mut step_end = h;
            while t < horizon {
                let end = step_end.min(jump_at).min(horizon);
                let dt = end - t;
                let on = if u > b { 1.0 } else { 0.0 };
                let z: f64 = StandardNormal.sample(rng);
                u += (dynamics.drift - delta * on) * dt + dynamics.sigma * dt.sqrt() * z;
                t = end;
                if jump_at <= end && jump_at <= horizon {
                    u += dynamics.jump(rng);
                    jump_at += next_jump(rng);
                }
                if t >= step_end {
                    step_end += h;
                }
            }
        }
    }
    u
}

pub fn scheme_for(model: &LevySpec) -> Scheme {
    if model.gaussian_coeff == 0.0 {
        Scheme::ExactBoundedVariation
    } else {
        Scheme::FrozenIndicatorEuler
    }
}

pub fn simulate_u(p: &RefractionProblem, c: &SimConfig) -> Result<SimResult> {
    if c.n_paths == 0 || !(c.step_h > 0.0) {
        return Err(Error::InvalidModel("simulation needs paths and a positive step".into()));
    }
    let dynamics = Dynamics::new(&p.model)?;
    let scheme = scheme_for(&p.model);
    let mut samples = p.execution.map(c.n_paths, |i| {
        let mut rng = path_rng(c.seed, i as u64);
        simulate_path(&dynamics, scheme, p.q, p.delta, p.b, p.x, c.step_h, &mut rng)
    });
    samples.sort_by(f64::total_cmp);
    Ok(SimResult { samples, config: *c, scheme, q: p.q, delta: p.delta, b: p.b, x: p.x })
}

/// `x + X_{e(q)}` without refraction, on the same random streams.
pub fn simulate_levy(model: &LevySpec, q: f64, x: f64, c: &SimConfig, exec: Execution) -> Result<SimResult> {
    let p = RefractionProblem::new(model.clone(), q, 0.0, 0.0, x).with_execution(exec);
    simulate_u(&p, c)
}

#[derive(Debug, Clone, Serialize)]
pub struct Decile {
    pub p: f64,
    pub y: f64,
    pub analytic: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub n_paths: usize,
    pub ks: f64,
    pub threshold: f64,
    pub sampling_term: f64,
    pub bias_term: f64,
    pub deciles: Vec<Decile>,
    pub passed: bool,
    pub scheme: Scheme,
}

pub fn compare(analytic: &PotentialResult, sim: &SimResult) -> Result<ComparisonReport> {
    if analytic.b != sim.b || analytic.x != sim.x || analytic.q != sim.q {
        return Err(Error::GridMismatch("analytic and simulated problems differ".into()));
    }
    let n = sim.samples.len();
    let lo = analytic.cdf.x0;
    let hi = analytic.cdf.spec().last();
    let outside = sim.samples.iter().filter(|&&s| s < lo || s > hi).count();
    if outside as f64 > 1e-3 * n as f64 {
        return Err(Error::GridMismatch(format!("{outside} of {n} samples fall outside [{lo}, {hi}]")));
    }
    let nf = n as f64;
    let mut ks = 0.0f64;
    for (i, &s) in sim.samples.iter().enumerate() {
        let f = analytic.cdf_at(s);
        ks = ks.max((f - i as f64 / nf).abs()).max((f - (i + 1) as f64 / nf).abs());
    }
    let deciles = (1..10)
        .map(|k| {
            let p = k as f64 / 10.0;
            let y = sim.quantile(p);
            let a = analytic.cdf_at(y);
            let emp = sim.empirical_cdf(y);
            Decile { p, y, analytic: a, z: (emp - a) / (a * (1.0 - a) / nf).sqrt().max(1e-300) }
        })
        .collect();
    let sampling_term = 1.5 * 1.63 / nf.sqrt();
    let bias_term = match sim.scheme {
        Scheme::ExactBoundedVariation => 0.0,
        Scheme::FrozenIndicatorEuler => 3.0 * sim.config.step_h.sqrt() * sim.delta.abs() * analytic.max_density(),
    };
    let threshold = sampling_term.max(bias_term);
    Ok(ComparisonReport { n_paths: n, ks, threshold, sampling_term, bias_term, deciles, passed: ks <= threshold, scheme: sim.scheme })
}

pub fn write_samples(path: &Path, samples: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 8 * samples.len());
    buf.extend_from_slice(SAMPLE_MAGIC);
    buf.extend_from_slice(&SAMPLE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for s in samples {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(&buf).map_err(io_err)
}

pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let mut buf = Vec::new();
    std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut buf)).map_err(io_err)?;
    if buf.len() < 16 || &buf[0..4] != SAMPLE_MAGIC {
        return Err(Error::InvalidModel("not a sample file".into()));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != SAMPLE_VERSION {
        return Err(Error::InvalidModel(format!("unsupported sample file version {version}")));
    }
    let count = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
    if buf.len() != 16 + 8 * count {
        return Err(Error::InvalidModel("sample file length does not match its header".into()));
    }
    Ok(buf[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_models::catalog;
    use crate::potential::refracted_cdf;

    fn cfg(n: usize, seed: u64) -> SimConfig {
        SimConfig { n_paths: n, step_h: 1e-2, seed }
    }

    #[test]
    fn same_seed_same_samples() {
        let p = RefractionProblem::new(catalog::m1(), 1.0, 1.0, 0.0, 0.0);
        let a = simulate_u(&p, &cfg(2000, 7)).unwrap();
        let b = simulate_u(&p.clone().with_execution(Execution::Sequential), &cfg(2000, 7)).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = simulate_u(&p, &cfg(2000, 8)).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn zero_refraction_matches_plain_process() {
        for model in [catalog::m1(), catalog::m2(), catalog::m3()] {
            let p = RefractionProblem::new(model.clone(), 1.0, 0.0, 0.3, 0.0);
            let u = simulate_u(&p, &cfg(3000, 3)).unwrap();
            let x = simulate_levy(&model, 1.0, 0.0, &cfg(3000, 3), Execution::Parallel).unwrap();
            assert_eq!(u.samples, x.samples);
        }
    }

    #[test]
    fn larger_refraction_lowers_every_path() {
        let h = 1e-2;
        for model in [catalog::m1(), catalog::m2(), catalog::m3()] {
            let scheme = scheme_for(&model);
            let dynamics = Dynamics::new(&model).unwrap();
            let (d1, d2) = (0.5, 1.5);
            let slack = match scheme {
                Scheme::ExactBoundedVariation => 1e-12,
                Scheme::FrozenIndicatorEuler => h * (d1 + d2),
            };
            for i in 0..2000u64 {
                let u1 = simulate_path(&dynamics, scheme, 1.0, d1, 0.0, 0.0, h, &mut path_rng(11, i));
                let u2 = simulate_path(&dynamics, scheme, 1.0, d2, 0.0, 0.0, h, &mut path_rng(11, i));
                assert!(u2 <= u1 + slack, "{u1} {u2}");
            }
        }
    }

    #[test]
    fn flow_slides_at_the_level() {
        // Upward drift below b, downward above: the path sticks at b.
        assert_eq!(flow(-1.0, 5.0, 1.0, 2.0, 0.0), 0.0);
        assert_eq!(flow(1.0, 5.0, 1.0, 2.0, 0.0), 0.0);
        assert!((flow(-1.0, 0.5, 1.0, 2.0, 0.0) + 0.5).abs() < 1e-15);
        // Crossing upward then continuing with the reduced slope.
        assert!((flow(-1.0, 2.0, 2.0, 1.0, 0.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_analytic_law_and_detects_a_shift() {
        let p = RefractionProblem::new(catalog::m2(), 1.0, 1.0, 0.0, 0.0);
        let analytic = refracted_cdf(&p).unwrap();
        let sim = simulate_u(&p, &cfg(40_000, 5)).unwrap();
        let r = compare(&analytic, &sim).unwrap();
        assert!(r.passed, "{r:?}");
        let mut shifted = analytic.clone();
        shifted.cdf.x0 += 0.05;
        let r = compare(&shifted, &sim).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn mismatched_problems_are_refused() {
        let p = RefractionProblem::new(catalog::m2(), 1.0, 1.0, 0.0, 0.0);
        let analytic = refracted_cdf(&p).unwrap();
        let mut sim = simulate_u(&p, &cfg(100, 1)).unwrap();
        sim.b = 0.5;
        assert!(matches!(compare(&analytic, &sim), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn infinite_activity_is_unsupported() {
        let p = RefractionProblem::new(catalog::tempered_stable(), 1.0, 1.0, 0.0, 0.0);
        assert!(matches!(simulate_u(&p, &cfg(10, 1)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sample_file_round_trip() {
        let dir = std::env::temp_dir().join(format!("refract-mc-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.bin");
        let v = vec![0.0, -1.5, f64::MIN_POSITIVE, 1e300];
        write_samples(&path, &v).unwrap();
        let back = read_samples(&path).unwrap();
        assert_eq!(v.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), back.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        std::fs::write(&path, b"nope").unwrap();
        assert!(read_samples(&path).is_err());
    }
}
