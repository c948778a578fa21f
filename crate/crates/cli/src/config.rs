//! Experiment configuration: one TOML file, no silent defaults.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dirac1d::{Grid, PotentialSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub family: String,
    pub params: toml::Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: f64,
    pub t_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub window: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub mass: f64,
    pub potential: PotentialConfig,
    pub sigma: f64,
    pub epsilon: f64,
    pub evolution: EvolutionSection,
    pub fit: FitSection,
}

/// Parameter names each family requires, in a fixed order.
pub fn family_params(family: &str) -> Option<&'static [&'static str]> {
    Some(match family {
        "gaussian_offdiag" | "sech2_offdiag" => &["amplitude", "width", "phase"],
        "diag_gaussian" => &["upper", "lower", "width"],
        "full_hermitian_gaussian" => &["upper", "lower", "coupling", "phase", "width"],
        _ => return None,
    })
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&s).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical re-serialization, so formatting and key order do not matter.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canon).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid.l > 0.0 && self.grid.l.is_finite()) || self.grid.n < 16 {
            bail!("grid needs L > 0 and N >= 16, got L = {}, N = {}", self.grid.l, self.grid.n);
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            bail!("mass must be positive, got {}", self.mass);
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            bail!("sigma must be positive, got {}", self.sigma);
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            bail!("epsilon must be positive, got {}", self.epsilon);
        }
        let ev = &self.evolution;
        if !(ev.dt > 0.0 && ev.t_max > 0.0 && ev.dt < ev.t_max && ev.t_max.is_finite()) {
            bail!("evolution needs 0 < dt < t_max, got dt = {}, t_max = {}", ev.dt, ev.t_max);
        }
        let [t0, t1] = self.fit.window;
        if !(t0 > 0.0 && t1 > t0 && t1 <= ev.t_max * (1.0 + 1e-12)) {
            bail!("fit.window [{t0}, {t1}] must satisfy 0 < t0 < t1 <= t_max");
        }
        self.potential_spec()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.l, self.grid.n).map_err(|e| anyhow!(e))
    }

    pub fn window(&self) -> (f64, f64) {
        (self.fit.window[0], self.fit.window[1])
    }

    /// The potential descriptor. Every parameter of the family must be given; unknown
    /// parameters are rejected.
    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let fam = self.potential.family.as_str();
        let names = family_params(fam).ok_or_else(|| {
            anyhow!("unknown potential family {fam:?} (gaussian_offdiag, sech2_offdiag, diag_gaussian, full_hermitian_gaussian)")
        })?;
        let p = &self.potential.params;
        if let Some(k) = p.keys().find(|k| !names.contains(&k.as_str())) {
            bail!("potential.params.{k} is not a parameter of {fam} (expected {names:?})");
        }
        let get = |k: &str| -> Result<f64> {
            match p.get(k) {
                Some(toml::Value::Float(v)) => Ok(*v),
                Some(toml::Value::Integer(v)) => Ok(*v as f64),
                Some(v) => bail!("potential.params.{k} must be a number, got {v}"),
                None => bail!("potential.params.{k} is required for {fam}"),
            }
        };
        let spec = match fam {
            "gaussian_offdiag" => {
                PotentialSpec::GaussianOffdiag { amplitude: get("amplitude")?, width: get("width")?, phase: get("phase")? }
            }
            "sech2_offdiag" => {
                PotentialSpec::Sech2Offdiag { amplitude: get("amplitude")?, width: get("width")?, phase: get("phase")? }
            }
            "diag_gaussian" => PotentialSpec::DiagGaussian { upper: get("upper")?, lower: get("lower")?, width: get("width")? },
            _ => PotentialSpec::FullHermitianGaussian {
                upper: get("upper")?,
                lower: get("lower")?,
                coupling: get("coupling")?,
                phase: get("phase")?,
                width: get("width")?,
            },
        };
        spec.validate().map_err(|e| anyhow!(e))?;
        Ok(spec)
    }

    /// True when every amplitude is zero, i.e. `𝒱 ≡ 0`.
    pub fn potential_is_zero(&self) -> bool {
        let p = &self.potential.params;
        ["amplitude", "upper", "lower", "coupling"]
            .iter()
            .filter_map(|k| p.get(*k))
            .all(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)) == Some(0.0))
    }

    /// The desk-scale profile with the given potential.
    pub fn desk_scale(family: &str, params: &[(&str, f64)]) -> Self {
        let mut t = toml::Table::new();
        for (k, v) in params {
            t.insert((*k).to_string(), toml::Value::Float(*v));
        }
        ExperimentConfig {
            grid: GridConfig { l: 200.0, n: 4096 },
            mass: 1.0,
            potential: PotentialConfig { family: family.to_string(), params: t },
            sigma: 3.0,
            epsilon: 0.5,
            evolution: EvolutionSection { dt: 0.02, t_max: 200.0 },
            fit: FitSection { window: [20.0, 200.0] },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
mass = 1.0
sigma = 3.0
epsilon = 0.5

[grid]
L = 200.0
N = 4096

[potential]
family = "gaussian_offdiag"
params = { amplitude = 0.4, width = 1.0, phase = 0.0 }

[evolution]
dt = 0.02
t_max = 200.0

[fit]
window = [20.0, 200.0]
"#;

    #[test]
    fn parses_the_sample() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c, ExperimentConfig::desk_scale("gaussian_offdiag", &[("amplitude", 0.4), ("width", 1.0), ("phase", 0.0)]));
        assert_eq!(c.potential_spec().unwrap(), PotentialSpec::gaussian_offdiag(0.4));
        assert!(!c.potential_is_zero());
    }

    #[test]
    fn rejects_unknown_and_missing_keys() {
        assert!(ExperimentConfig::from_toml_str(&SAMPLE.replace("sigma = 3.0", "sigma = 3.0\nseed = 1")).is_err());
        assert!(ExperimentConfig::from_toml_str(&SAMPLE.replace("epsilon = 0.5\n", "")).is_err());
        assert!(ExperimentConfig::from_toml_str(&SAMPLE.replace(", phase = 0.0", "")).is_err());
        assert!(ExperimentConfig::from_toml_str(&SAMPLE.replace("phase = 0.0", "phase = 0.0, depth = 2.0")).is_err());
        assert!(ExperimentConfig::from_toml_str(&SAMPLE.replace("gaussian_offdiag", "square_well")).is_err());
        assert!(ExperimentConfig::from_toml_str(&SAMPLE.replace("[20.0, 200.0]", "[20.0, 300.0]")).is_err());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        let b = ExperimentConfig::from_toml_str(&SAMPLE.replace("mass = 1.0", "mass   =   1.0 # m")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_toml_str(&SAMPLE.replace("amplitude = 0.4", "amplitude = 0.3")).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(ExperimentConfig::from_toml_str(&a.to_toml_string()).unwrap(), a);
    }

    #[test]
    fn zero_amplitude_is_the_free_case() {
        let c = ExperimentConfig::desk_scale("gaussian_offdiag", &[("amplitude", 0.0), ("width", 1.0), ("phase", 0.3)]);
        assert!(c.potential_is_zero());
    }
}
