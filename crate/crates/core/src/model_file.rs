//! Declarative model files (TOML) with a `kind` discriminator and strict keys.

use crate::error::{Error, Result};
use crate::levy_models::{DensityFamily, ExpTerm, JumpSpec, LevyDensity, LevySpec};
use crate::numeric::C64;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn one() -> u32 {
    1
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub weight: f64,
    pub rate: f64,
    #[serde(default = "one")]
    pub power: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub weight_im: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub rate_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpTable {
    pub intensity: f64,
    pub terms: Vec<TermEntry>,
}

impl JumpTable {
    fn to_spec(&self) -> JumpSpec {
        let terms = self
            .terms
            .iter()
            .map(|t| ExpTerm { weight: C64::new(t.weight, t.weight_im), rate: C64::new(t.rate, t.rate_im), power: t.power })
            .collect();
        JumpSpec::rational(self.intensity, terms)
    }

    fn from_spec(j: &JumpSpec) -> Self {
        let terms = j
            .terms
            .iter()
            .map(|t| TermEntry { weight: t.weight.re, rate: t.rate.re, power: t.power, weight_im: t.weight.im, rate_im: t.rate.im })
            .collect();
        JumpTable { intensity: j.intensity, terms }
    }
}

/// Downward jumps are listed under `down`, upward ones under `up`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelFile {
    Brownian {
        sigma: f64,
        drift: f64,
    },
    CompoundPoisson {
        drift: f64,
        down: JumpTable,
    },
    JumpDiffusion {
        sigma: f64,
        drift: f64,
        down: JumpTable,
    },
    TwoSided {
        sigma: f64,
        drift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        down: Option<JumpTable>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        up: Option<JumpTable>,
    },
    /// Spectrally negative model given by a Lévy density; `gamma` is the drift with
    /// jumps on `(0, 1)` compensated.
    Density {
        sigma: f64,
        gamma: f64,
        density: DensityFamily,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<f64>,
    },
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model files always serialize")
    }

    pub fn to_spec(&self) -> Result<LevySpec> {
        let spec = match self {
            ModelFile::Brownian { sigma, drift } => LevySpec::brownian(*sigma, *drift),
            ModelFile::CompoundPoisson { drift, down } => {
                LevySpec::jump_diffusion(0.0, *drift, down.to_spec(), JumpSpec::none())
            }
            ModelFile::JumpDiffusion { sigma, drift, down } => {
                LevySpec::jump_diffusion(*sigma, *drift, down.to_spec(), JumpSpec::none())
            }
            ModelFile::TwoSided { sigma, drift, down, up } => LevySpec::jump_diffusion(
                *sigma,
                *drift,
                down.as_ref().map_or_else(JumpSpec::none, JumpTable::to_spec),
                up.as_ref().map_or_else(JumpSpec::none, JumpTable::to_spec),
            ),
            ModelFile::Density { sigma, gamma, density, upper } => {
                let mut m = LevySpec::with_density(*sigma, *gamma, *density);
                if let Some(u) = upper {
                    m.levy_density = Some(LevyDensity { family: *density, upper: *u });
                }
                m
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(m: &LevySpec) -> Self {
        if let Some(ld) = &m.levy_density {
            let upper = if ld.upper.is_infinite() { None } else { Some(ld.upper) };
            return ModelFile::Density { sigma: m.gaussian_coeff, gamma: m.drift, density: ld.family, upper };
        }
        let (sigma, drift) = (m.gaussian_coeff, m.drift);
        match (m.neg_jumps.is_active(), m.pos_jumps.is_active()) {
            (false, false) => ModelFile::Brownian { sigma, drift },
            (true, false) if sigma == 0.0 => ModelFile::CompoundPoisson { drift, down: JumpTable::from_spec(&m.neg_jumps) },
            (true, false) => ModelFile::JumpDiffusion { sigma, drift, down: JumpTable::from_spec(&m.neg_jumps) },
            (d, _) => ModelFile::TwoSided {
                sigma,
                drift,
                down: d.then(|| JumpTable::from_spec(&m.neg_jumps)),
                up: Some(JumpTable::from_spec(&m.pos_jumps)),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_models::catalog;

    #[test]
    fn parses_each_kind() {
        let bm = ModelFile::parse("kind = \"brownian\"\nsigma = 1.0\ndrift = 0.0\n").unwrap();
        assert_eq!(bm.to_spec().unwrap(), catalog::m1());
        let cp = ModelFile::parse(
            "kind = \"compound_poisson\"\ndrift = 2.0\n[down]\nintensity = 1.0\nterms = [{ weight = 1.0, rate = 1.0 }]\n",
        )
        .unwrap();
        assert_eq!(cp.to_spec().unwrap(), catalog::m2());
        let ts = ModelFile::parse(
            "kind = \"density\"\nsigma = 1.0\ngamma = 0.0\n[density]\nfamily = \"tempered_stable\"\nc = 1.0\nalpha = 0.5\nbeta = 1.0\n",
        )
        .unwrap();
        assert_eq!(ts.to_spec().unwrap(), catalog::tempered_stable());
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(ModelFile::parse("kind = \"brownian\"\nsigma = 1.0\ndrift = 0.0\nsigma2 = 1.0\n").is_err());
        assert!(ModelFile::parse("kind = \"levy\"\nsigma = 1.0\ndrift = 0.0\n").is_err());
        assert!(ModelFile::parse(
            "kind = \"compound_poisson\"\ndrift = 2.0\n[down]\nintensity = 1.0\nterms = [{ weight = 1.0, rat = 1.0 }]\n"
        )
        .is_err());
    }

    #[test]
    fn catalog_round_trips() {
        for m in [
            catalog::m1(),
            catalog::m2(),
            catalog::m3(),
            catalog::positive_drift_compound_poisson(),
            catalog::negative_drift_two_sided(),
            catalog::tempered_stable(),
        ] {
            let file = ModelFile::from_spec(&m);
            let back = ModelFile::parse(&file.to_toml()).unwrap();
            assert_eq!(back, file);
            assert_eq!(back.to_spec().unwrap(), m);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let f = ModelFile::parse("kind = \"brownian\"\nsigma = -1.0\ndrift = 0.0\n").unwrap();
        assert!(f.to_spec().is_err());
    }
}
