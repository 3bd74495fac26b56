//! Uniform grids and sampled functions.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(x0: f64, dx: f64, n: usize) -> Self {
        GridSpec { x0, dx, n }
    }

    /// Grid from `lo` to at least `hi` with step `dx`, anchored so that `anchor` is a node.
    pub fn covering(lo: f64, hi: f64, dx: f64, anchor: f64) -> Self {
        let i0 = ((lo - anchor) / dx).floor();
        let i1 = ((hi - anchor) / dx).ceil();
        GridSpec { x0: anchor + i0 * dx, dx, n: (i1 - i0) as usize + 1 }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn last(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        (((x - self.x0) / self.dx).round().max(0.0) as usize).min(self.n - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridKind {
    Cdf,
    Density,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub kind: GridKind,
}

impl GridFunction {
    pub fn sample<F: Fn(f64) -> f64>(spec: GridSpec, kind: GridKind, f: F) -> Self {
        GridFunction { x0: spec.x0, dx: spec.dx, values: (0..spec.n).map(|i| f(spec.x(i))).collect(), kind }
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec::new(self.x0, self.dx, self.values.len())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Linear interpolation; outside the grid a CDF is 0 or 1 and other kinds are 0.
    pub fn interp(&self, x: f64) -> f64 {
        let n = self.values.len();
        let t = (x - self.x0) / self.dx;
        if t < 0.0 || n == 0 {
            return 0.0;
        }
        if t >= (n - 1) as f64 {
            return match self.kind {
                GridKind::Cdf => 1.0,
                _ if t <= (n - 1) as f64 + 1e-9 => self.values[n - 1],
                _ => 0.0,
            };
        }
        let i = t.floor() as usize;
        let w = t - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Largest increment between adjacent samples, in absolute value.
    pub fn max_jump(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }

    /// Checks the kind-specific shape: monotone in `[0, 1]` for a CDF, nonnegative for a density.
    pub fn is_valid(&self, slack: f64) -> bool {
        match self.kind {
            GridKind::Cdf => {
                self.values.windows(2).all(|w| w[1] >= w[0] - slack)
                    && self.values.iter().all(|&v| v >= -slack && v <= 1.0 + slack)
            }
            GridKind::Density => self.values.iter().all(|&v| v >= -slack),
            GridKind::Raw => true,
        }
    }
}
