//! Law of the refracted process at `e(q)` and the q-potential density.
//!
//! With `w = y - x` and `c = b - x` the CDF is
//! `K_q(w) + ∫_c^w F₁(w-z) K_q(dz)` for `y ≥ b` and
//! `K_q(w) - ∫_w^c F₂(w-z) K_q(dz)` for `y < b`.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{GridFunction, GridKind, GridSpec};
use crate::kernels::{default_step, Kernel, KernelSet};
use crate::levy_models::{classify_and_admit, AdmissibilityReport, LevySpec};
use crate::numeric::exp_poly::ExpPoly;
use crate::wiener_hopf::{tail_length, WhContext};
use serde::Serialize;

/// Largest accepted gap between the two density routes.
pub const DENSITY_ROUTE_TOL: f64 = 2e-3;
/// Mass tolerance at the grid edge.
pub const MASS_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct RefractionProblem {
    pub model: LevySpec,
    pub q: f64,
    pub delta: f64,
    pub b: f64,
    pub x: f64,
    /// Grid step; defaults to `2^{-9}·max(1, 1/min(Φ, φ))`, adjusted so `b - x` is a node.
    pub dx: Option<f64>,
    /// Half-width beyond `[min(x,b), max(x,b)]`; defaults to the tail rule.
    pub length: Option<f64>,
    /// Computes rejected problems anyway (their results are diagnostics only).
    pub allow_inadmissible: bool,
    pub execution: Execution,
}

impl RefractionProblem {
    pub fn new(model: LevySpec, q: f64, delta: f64, b: f64, x: f64) -> Self {
        RefractionProblem { model, q, delta, b, x, dx: None, length: None, allow_inadmissible: false, execution: Execution::default() }
    }

    pub fn with_grid(mut self, dx: Option<f64>, length: Option<f64>) -> Self {
        self.dx = dx;
        self.length = length;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub total_mass: f64,
    pub left_mass: f64,
    pub max_jump: f64,
    pub seam_gap_at_b: f64,
    pub seam_bound: f64,
    /// Sup-norm gap between finite-difference and direct densities, away from `y = b` and `y = x`.
    pub density_route_gap: f64,
    pub kq_atom: f64,
}

#[derive(Debug, Clone)]
pub struct PotentialResult {
    pub cdf: GridFunction,
    pub density: GridFunction,
    pub potential_measure_density: GridFunction,
    /// Direct density with one-sided limits `(left, right)` at each node.
    pub density_direct: Vec<(f64, f64)>,
    pub diagnostics: Diagnostics,
    pub admissibility: AdmissibilityReport,
    pub warnings: Vec<String>,
    pub b: f64,
    pub x: f64,
    pub q: f64,
}

impl PotentialResult {
    pub fn grid(&self) -> GridSpec {
        self.cdf.spec()
    }

    pub fn cdf_at(&self, y: f64) -> f64 {
        self.cdf.interp(y)
    }

    /// Largest density value, a bound used by the Monte Carlo comparison.
    pub fn max_density(&self) -> f64 {
        self.density_direct.iter().map(|(l, r)| l.max(*r)).fold(0.0, f64::max)
    }
}

fn sample_kernel(k: &Kernel, n: usize, dx: f64) -> (Vec<f64>, Vec<f64>) {
    match k {
        Kernel::Exact(e) => {
            let d: ExpPoly = e.deriv();
            ((0..n).map(|i| e.eval(i as f64 * dx)).collect(), (0..n).map(|i| d.eval(i as f64 * dx)).collect())
        }
        Kernel::Sampled(_) => ((0..n).map(|i| k.eval(i as f64 * dx)).collect(), (0..n).map(|i| k.deriv(i as f64 * dx)).collect()),
    }
}

/// Step adjusted so that `c` is an integer multiple of it.
fn aligned_step(dx: f64, c: f64) -> f64 {
    if c == 0.0 {
        dx
    } else {
        c.abs() / (c.abs() / dx).ceil()
    }
}

pub fn refracted_cdf(p: &RefractionProblem) -> Result<PotentialResult> {
    let (_, admissibility) = classify_and_admit(&p.model, p.delta);
    if !admissibility.admitted && !p.allow_inadmissible {
        return Err(Error::NotAdmitted(admissibility.reasons.join("; ")));
    }
    let wh = WhContext::build(&p.model, p.q, p.delta)?;
    let c = p.b - p.x;
    let dx = aligned_step(p.dx.unwrap_or_else(|| default_step(&wh.ctx)), c);
    let length = p.length.unwrap_or_else(|| tail_length(&wh));
    let ks = KernelSet::build(&wh, dx, length + c.abs())?;
    assemble(p, &ks, c, dx, length, admissibility)
}

fn assemble(p: &RefractionProblem, ks: &KernelSet, c: f64, dx: f64, length: f64, admissibility: AdmissibilityReport) -> Result<PotentialResult> {
    let law = &ks.kq_law;
    let wgrid = GridSpec::covering(c.min(0.0) - length, c.max(0.0) + length, dx, 0.0);
    let n = wgrid.n;
    let w: Vec<f64> = (0..n).map(|i| wgrid.x(i)).collect();
    let i0 = wgrid.nearest(0.0);
    let ic = wgrid.nearest(c);
    let kcdf: Vec<f64> = w.iter().map(|&v| law.cdf(v)).collect();
    // One-sided density samples; they differ only at w = 0.
    let k_r: Vec<f64> = (0..n).map(|i| if i >= i0 { law.density(w[i].max(0.0)) } else { law.density_left(-w[i]) }).collect();
    let k_l: Vec<f64> = (0..n).map(|i| if i > i0 { law.density(w[i]) } else { law.density_left((-w[i]).max(0.0)) }).collect();
    let (f1, d1) = sample_kernel(&ks.f1, n, dx);
    let (f2, d2) = sample_kernel(&ks.f2, n, dx);
    let atom = law.atom;

    // Returns (cdf, interior integral of the kernel derivative) at node i.
    let node = |i: usize| -> (f64, f64, f64) {
        let h = 0.5 * dx;
        if i >= ic {
            let (mut s, mut sd) = (0.0, 0.0);
            for j in ic..i {
                s += h * (f1[i - j] * k_r[j] + f1[i - j - 1] * k_l[j + 1]);
                sd += h * (d1[i - j] * k_r[j] + d1[i - j - 1] * k_l[j + 1]);
            }
            if ic < i0 && i0 <= i {
                s += f1[i - i0] * atom;
                sd += d1[i - i0] * atom;
            }
            (kcdf[i] + s, sd, 1.0 + ks.f1_zero)
        } else {
            let (mut s, mut sd) = (0.0, 0.0);
            for j in i..ic {
                s += h * (f2[j - i] * k_r[j] + f2[j + 1 - i] * k_l[j + 1]);
                sd += h * (d2[j - i] * k_r[j] + d2[j + 1 - i] * k_l[j + 1]);
            }
            if i <= i0 && i0 < ic {
                s += f2[i0 - i] * atom;
                sd += d2[i0 - i] * atom;
            }
            // d/dw of -∫_w^c F₂(w - z) k(z) dz with F₂ stored in u = z - w.
            (kcdf[i] - s, sd, 1.0 + ks.f2_zero)
        }
    };
    let rows = p.execution.map(n, node);
    let cdf: Vec<f64> = rows.iter().map(|r| r.0).collect();
    // Direct density: (1 + F(0)) k(w) plus the interior derivative term.
    let direct: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let (_, sd, lead) = rows[i];
            let right = lead * k_r[i] + sd;
            let left = if i == ic && i > 0 {
                (1.0 + ks.f2_zero) * k_l[i]
            } else {
                lead * k_l[i] + sd
            };
            let right = if i == ic { (1.0 + ks.f1_zero) * k_r[i] } else { right };
            (left, right)
        })
        .collect();
    let fd: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                (cdf[1] - cdf[0]) / dx
            } else if i == n - 1 {
                (cdf[n - 1] - cdf[n - 2]) / dx
            } else {
                (cdf[i + 1] - cdf[i - 1]) / (2.0 * dx)
            }
        })
        .collect();

    let near = |i: usize, j: usize| i.abs_diff(j) <= 1;
    let density_route_gap = (1..n - 1)
        .filter(|&i| !near(i, ic) && !near(i, i0))
        .map(|i| (fd[i] - 0.5 * (direct[i].0 + direct[i].1)).abs())
        .fold(0.0, f64::max);

    let (seam_gap_at_b, seam_bound) = if ic >= 2 && ic + 2 < n {
        let right = 2.0 * cdf[ic + 1] - cdf[ic + 2];
        let left = 2.0 * cdf[ic - 1] - cdf[ic - 2];
        let local = (ic - 3.min(ic)..(ic + 4).min(n)).map(|i| direct[i].0.max(direct[i].1)).fold(0.0, f64::max);
        ((right - left).abs(), 5.0 * dx * local)
    } else {
        (0.0, f64::INFINITY)
    };
    if seam_gap_at_b > seam_bound && !p.allow_inadmissible {
        return Err(Error::Seam { gap: seam_gap_at_b, bound: seam_bound });
    }
    let total_mass = cdf[n - 1];
    if (total_mass - 1.0).abs() > MASS_TOL && !p.allow_inadmissible {
        return Err(Error::Mass(format!("CDF reaches {total_mass} at the grid edge")));
    }

    let ygrid = GridSpec::new(p.x + wgrid.x0, dx, n);
    let cdf = GridFunction { x0: ygrid.x0, dx, values: cdf, kind: GridKind::Cdf };
    let max_jump = cdf.max_jump();
    let density = GridFunction { x0: ygrid.x0, dx, values: fd, kind: GridKind::Density };
    let potential = GridFunction { values: density.values.iter().map(|v| v / p.q).collect(), ..density.clone() };
    Ok(PotentialResult {
        cdf,
        density,
        potential_measure_density: potential,
        density_direct: direct,
        diagnostics: Diagnostics {
            total_mass,
            left_mass: rows[0].0,
            max_jump,
            seam_gap_at_b,
            seam_bound,
            density_route_gap,
            kq_atom: atom,
        },
        warnings: admissibility.warnings.clone(),
        admissibility,
        b: p.b,
        x: p.x,
        q: p.q,
    })
}

/// Largest single-cell CDF increment beyond what the continuous density predicts.
pub fn atom_scan(r: &PotentialResult) -> f64 {
    let v = &r.cdf.values;
    let dx = r.cdf.dx;
    (0..v.len() - 1)
        .map(|i| (v[i + 1] - v[i]) - 0.5 * dx * (r.density_direct[i].1 + r.density_direct[i + 1].0))
        .fold(0.0, f64::max)
}

pub fn total_mass(r: &PotentialResult) -> f64 {
    r.cdf.values[r.cdf.len() - 1]
}
