//! Run configuration files.
//!
//! A run is described by one TOML document; see `docs/config.md` for the
//! schema. Parsing is strict: unknown keys are rejected with the line and
//! key that caused them.

use std::path::{Path, PathBuf};

use conelab::{ConeSpec, DistSpec, HarmonicCone, IncrementDistribution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    Splitting,
    Dp,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Monte Carlo trials per start.
    pub trials: Option<u64>,
    /// Splitting particles per level.
    pub particles: Option<usize>,
    /// Largest DP state count before a run is refused.
    pub max_states: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicMethod {
    Truncated,
    Corrected,
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSection {
    pub grid: Vec<Vec<f64>>,
    #[serde(default = "default_harmonic_method")]
    pub method: HarmonicMethod,
    /// Extra shifts for the corrected representation; each is compared
    /// with the default shift.
    #[serde(default, rename = "R")]
    pub r: Vec<f64>,
    pub n0: Option<usize>,
    pub max_n: Option<usize>,
    pub rel_tol: Option<f64>,
    pub trials: Option<u64>,
}

fn default_harmonic_method() -> HarmonicMethod {
    HarmonicMethod::Corrected
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Precomputed curves (CSV) used instead of running the estimator.
    pub curves: Option<PathBuf>,
    /// Inclusive horizon range of the log-log fit.
    pub fit_range: Option<[usize; 2]>,
    pub slope_tol: Option<f64>,
    pub proportionality_tol: Option<f64>,
    pub near_boundary_horizons: Option<Vec<usize>>,
    pub near_boundary_tol: Option<f64>,
    pub tv_horizon: Option<usize>,
    pub tv_tol: Option<f64>,
    /// Compare Monte Carlo and splitting curves with the DP curve.
    #[serde(default)]
    pub crossval: bool,
    pub crossval_se: Option<f64>,
    /// `max_n` for the V estimates behind `κ̂` and proportionality.
    pub v_max_n: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Conditioned,
    HTransform,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    pub sampler: Sampler,
    pub start: Vec<f64>,
    pub n: usize,
    pub paths: usize,
    /// V table for the h-transform sampler; `h` itself when absent.
    pub v_table: Option<PathBuf>,
    pub envelope: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub method: Method,
    #[serde(default)]
    pub starts: Vec<Vec<f64>>,
    #[serde(default)]
    pub horizons: Vec<usize>,
    pub cone: ConeSpec,
    pub distribution: DistSpec,
    #[serde(default)]
    pub budgets: Budgets,
    pub harmonic: Option<HarmonicSection>,
    pub verify: Option<VerifySection>,
    pub sample: Option<SampleSection>,
}

/// A parsed configuration together with the hash of its bytes.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub sha256: String,
    pub path: Option<PathBuf>,
    pub cone: HarmonicCone,
    pub dist: IncrementDistribution,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut loaded = Self::from_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        loaded.path = Some(path.to_path_buf());
        Ok(loaded)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        let cone = config.cone.build().map_err(|e| CliError::Config(format!("[cone]: {e}")))?;
        let dist = config.distribution.build().map_err(|e| CliError::Config(format!("[distribution]: {e}")))?;
        for (i, x) in config.starts.iter().enumerate() {
            if x.len() != cone.dimension() {
                return Err(CliError::Config(format!(
                    "starts[{i}]: expected {} coordinates, got {}",
                    cone.dimension(),
                    x.len()
                )));
            }
            if !cone.contains(x) {
                return Err(CliError::Config(format!("starts[{i}]: {x:?} is not in the open cone")));
            }
        }
        if let Some(h) = &config.harmonic {
            for (i, x) in h.grid.iter().enumerate() {
                if x.len() != cone.dimension() || !cone.contains(x) {
                    return Err(CliError::Config(format!("harmonic.grid[{i}]: {x:?} is not in the open cone")));
                }
            }
        }
        if let Some(s) = &config.sample {
            if s.start.len() != cone.dimension() || !cone.contains(&s.start) {
                return Err(CliError::Config(format!("sample.start: {:?} is not in the open cone", s.start)));
            }
        }
        Ok(Self { sha256: sha256_hex(text.as_bytes()), path: None, config, cone, dist })
    }

    /// Resolves a path from the configuration relative to the file.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match (&self.path, p.is_absolute()) {
            (Some(cfg), false) => cfg.parent().map(|d| d.join(p)).unwrap_or_else(|| p.to_path_buf()),
            _ => p.to_path_buf(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.workers == 0 {
            return bad("workers: must be at least 1".into());
        }
        if self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("horizons: must be strictly increasing, got {:?}", self.horizons));
        }
        if self.horizons.first() == Some(&0) {
            return bad("horizons: must be positive".into());
        }
        if let Some(v) = &self.verify {
            if let Some([lo, hi]) = v.fit_range {
                if lo >= hi {
                    return bad(format!("verify.fit_range: {lo} >= {hi}"));
                }
            }
            if let Some(h) = &v.near_boundary_horizons {
                if h.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("verify.near_boundary_horizons: must be strictly increasing".into());
                }
            }
        }
        match self.method {
            Method::Mc if self.budgets.trials.is_none() => bad("budgets.trials: required for method = \"mc\"".into()),
            Method::Splitting if self.budgets.particles.is_none() => {
                bad("budgets.particles: required for method = \"splitting\"".into())
            }
            _ => Ok(()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "t"
seed = 1
workers = 1
method = "dp"
starts = [[1.0]]
horizons = [1, 2, 3]

[cone]
family = "C"
dimension = 1

[distribution]
kind = "rademacher"
"#;

    #[test]
    fn parses_and_hashes() {
        let c = LoadedConfig::from_str(BASE).unwrap();
        assert_eq!(c.config.method, Method::Dp);
        assert_eq!(c.sha256.len(), 64);
        assert_eq!(c.sha256, LoadedConfig::from_str(BASE).unwrap().sha256);
    }

    #[test]
    fn missing_seed_is_rejected() {
        let text = BASE.replace("seed = 1\n", "");
        let err = LoadedConfig::from_str(&text).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = BASE.replace("workers = 1", "workers = 1\nwrokers = 2");
        let err = LoadedConfig::from_str(&text).unwrap_err().to_string();
        assert!(err.contains("wrokers") && err.contains("line 5"), "{err}");
    }

    #[test]
    fn unsorted_horizons_and_exterior_starts() {
        assert!(LoadedConfig::from_str(&BASE.replace("[1, 2, 3]", "[2, 1]")).is_err());
        assert!(LoadedConfig::from_str(&BASE.replace("[[1.0]]", "[[-1.0]]")).is_err());
        assert!(LoadedConfig::from_str(&BASE.replace("\"dp\"", "\"mc\"")).is_err());
    }
}
