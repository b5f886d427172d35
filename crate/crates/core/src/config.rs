//! Declarative run configuration, read from TOML.
//!
//! Every section has defaults, so a file only needs the keys it changes.
//! `config/default.toml` in the repository lists all of them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adapt::{EstimatorConfig, FrameGeometry, RoundPolicy, Scheme};
use crate::metrics::SecretKeyParams;
use crate::session::{DecoderConfig, SessionConfig, TimeModel};
use crate::simchannel::ChannelParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeConfig {
    /// PEG seed of the pool.
    pub seed: u64,
    pub cache_dir: PathBuf,
    /// Directory with `rate_<pct>.txt` degree distributions. Rates without a
    /// file, or every rate when this is unset, use column weight three.
    pub distributions: Option<PathBuf>,
}

impl Default for CodeConfig {
    fn default() -> Self {
        CodeConfig {
            seed: 1,
            cache_dir: PathBuf::from("matrices"),
            distributions: Some(PathBuf::from("config/distributions")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of the simulated channel and of the synchronized streams.
    pub seed: u64,
    pub frames_per_block: usize,
    pub frames_per_point: usize,
    pub qber_grid: Vec<f64>,
    pub loss_grid_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 2024,
            frames_per_block: 50,
            frames_per_point: 1000,
            qber_grid: (1..=21).map(|i| i as f64 * 0.005).map(|q| (q * 1e4).round() / 1e4).collect(),
            loss_grid_db: (0..=10).map(|i| (2 * i) as f64).collect(),
            schemes: Scheme::ALL.to_vec(),
        }
    }
}

/// Per-scheme round policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemePolicies {
    pub adaptive_asym: RoundPolicy,
    pub blind_fixed: RoundPolicy,
    pub blind_linear: RoundPolicy,
    pub symmetric: RoundPolicy,
}

impl Default for SchemePolicies {
    fn default() -> Self {
        SchemePolicies {
            adaptive_asym: RoundPolicy::for_scheme(Scheme::AdaptiveAsym),
            blind_fixed: RoundPolicy::for_scheme(Scheme::BlindFixed),
            blind_linear: RoundPolicy::for_scheme(Scheme::BlindLinear),
            symmetric: RoundPolicy::for_scheme(Scheme::Symmetric),
        }
    }
}

impl SchemePolicies {
    pub fn get(&self, scheme: Scheme) -> &RoundPolicy {
        match scheme {
            Scheme::AdaptiveAsym => &self.adaptive_asym,
            Scheme::BlindFixed => &self.blind_fixed,
            Scheme::BlindLinear => &self.blind_linear,
            Scheme::Symmetric => &self.symmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub host: String,
    pub port: u16,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            host: "127.0.0.1".into(),
            port: 7878,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub frame: FrameGeometry,
    pub code: CodeConfig,
    pub run: RunConfig,
    pub estimator: EstimatorConfig,
    pub decoder: DecoderConfig,
    pub time: TimeModel,
    pub schemes: SchemePolicies,
    pub channel: ChannelParams,
    pub secret_key: SecretKeyParams,
    pub net: NetConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for scheme in Scheme::ALL {
            let policy = self.schemes.get(scheme);
            if policy.scheme != scheme {
                return Err(Error::Config(format!(
                    "schemes.{0} declares scheme {1}",
                    scheme.name(),
                    policy.scheme.name()
                )));
            }
            self.session(scheme, 0).validate()?;
        }
        if self.run.frames_per_block == 0 {
            return Err(Error::Config("frames_per_block must be positive".into()));
        }
        if self.run.qber_grid.iter().any(|q| !(*q >= 0.0 && *q < 0.5)) {
            return Err(Error::Config("qber_grid values must lie in [0, 0.5)".into()));
        }
        self.channel.validate()?;
        self.secret_key.validate()
    }

    /// The session parameters of one scheme.
    pub fn session(&self, scheme: Scheme, seed: u64) -> SessionConfig {
        SessionConfig {
            seed,
            geometry: self.frame,
            policy: self.schemes.get(scheme).clone(),
            estimator: self.estimator.clone(),
            decoder: self.decoder.clone(),
            time: self.time,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_default_file_matches_defaults() {
        let text = include_str!("../../../config/default.toml");
        assert_eq!(Config::from_toml(text).unwrap(), Config::default());
    }

    #[test]
    fn round_trip() {
        let config = Config::default();
        let text = config.to_toml().unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), config);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = Config::from_toml("[frame]\nell_frame = 2000\nalpha = 0.15\n[run]\nseed = 9\n").unwrap();
        assert_eq!(c.frame.ell_frame, 2000);
        assert_eq!(c.run.seed, 9);
        assert_eq!(c.run.frames_per_block, 50);
        assert_eq!(c.run.qber_grid.len(), 21);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Config::from_toml("[run]\nsede = 1\n").is_err());
        assert!(Config::from_toml("[frame]\nell_frame = 2001\nalpha = 0.15\n").is_err());
        let mut c = Config::default();
        c.schemes.symmetric.scheme = Scheme::BlindFixed;
        assert!(Config::from_toml(&c.to_toml().unwrap()).is_err());
    }
}
