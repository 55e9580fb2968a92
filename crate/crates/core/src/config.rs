//! TOML configuration shared by the command-line tools.
//!
//! ```toml
//! seed = 2022
//!
//! [noise.24]
//! read_sigma = 2e-4
//! shot_k = 1e-4
//!
//! [isp]
//! demosaic = "mhc5x5"
//! wb_gains = [1.0, 1.0, 1.0]
//! transfer = "srgb"
//!
//! [metrics]
//! lpips_default = 0.0
//! kld = { bins = 256, eps = 1e-8 }
//!
//! [lpips]
//! provider = "python3 lpips_provider.py"
//! timeout_s = 60
//!
//! [train]
//! patch_radius = 2
//! lambda = 1e-4
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isp::IspConfig;
use crate::metrics::{LpipsPolicy, LpipsProvider, MetricKnobs, DEFAULT_PROVIDER_TIMEOUT};
use crate::noise::{NoiseProfile, NoiseRegistry, DEFAULT_READ_SIGMA, DEFAULT_SHOT_K};
use crate::remosaic::{DEFAULT_LAMBDA, DEFAULT_PATCH_RADIUS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseEntry {
    pub read_sigma: f64,
    pub shot_k: f64,
}

impl Default for NoiseEntry {
    fn default() -> Self {
        NoiseEntry {
            read_sigma: DEFAULT_READ_SIGMA,
            shot_k: DEFAULT_SHOT_K,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpipsSection {
    pub provider: String,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default)]
    pub reentrant: bool,
}

fn default_timeout_s() -> f64 {
    DEFAULT_PROVIDER_TIMEOUT.as_secs_f64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub patch_radius: usize,
    pub lambda: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            patch_radius: DEFAULT_PATCH_RADIUS,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolkitConfig {
    pub seed: Option<u64>,
    /// Keyed by gain in dB, e.g. `"24"`.
    pub noise: BTreeMap<String, NoiseEntry>,
    pub isp: IspConfig,
    pub metrics: MetricKnobs,
    pub lpips: Option<LpipsSection>,
    pub train: TrainSection,
}

impl ToolkitConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ToolkitConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.isp.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.noise_registry()?;
        if let Some(l) = &self.lpips {
            if !(l.timeout_s > 0.0 && l.timeout_s.is_finite()) {
                return Err(Error::Config(format!("lpips.timeout_s must be positive, got {}", l.timeout_s)));
            }
        }
        if !(self.train.lambda >= 0.0 && self.train.lambda.is_finite()) {
            return Err(Error::Config(format!("train.lambda must be non-negative, got {}", self.train.lambda)));
        }
        Ok(())
    }

    /// Default challenge profiles with the configured entries applied on top.
    pub fn noise_registry(&self) -> Result<NoiseRegistry> {
        let mut reg = NoiseRegistry::default();
        for (key, entry) in &self.noise {
            let gain: f64 = key
                .trim()
                .trim_end_matches("dB")
                .parse()
                .map_err(|_| Error::Config(format!("noise section key `{key}` is not a gain in dB")))?;
            reg.insert(NoiseProfile::new(gain, entry.read_sigma, entry.shot_k)?)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(reg)
    }

    pub fn lpips_policy(&self) -> Result<LpipsPolicy> {
        match &self.lpips {
            None => Ok(LpipsPolicy::Default(self.metrics.lpips_default)),
            Some(l) => Ok(LpipsPolicy::External(Arc::new(
                LpipsProvider::new(&l.provider)?
                    .with_timeout(Duration::from_secs_f64(l.timeout_s))
                    .reentrant(l.reentrant),
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isp::{DemosaicKind, Transfer};

    #[test]
    fn empty_config_is_default() {
        let cfg = ToolkitConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ToolkitConfig::default());
        assert_eq!(cfg.noise_registry().unwrap(), NoiseRegistry::default());
        assert!(matches!(cfg.lpips_policy().unwrap(), LpipsPolicy::Default(v) if v == 0.0));
    }

    #[test]
    fn full_config() {
        let text = r#"
seed = 7
[noise.24]
read_sigma = 1e-3
shot_k = 2e-4
[noise."6dB"]
read_sigma = 0.0
[isp]
demosaic = "bilinear"
wb_gains = [2.0, 1.0, 1.5]
transfer = "gamma22"
[metrics]
lpips_default = 0.1
kld = { bins = 64, eps = 1e-6 }
[lpips]
provider = "python3 provider.py"
timeout_s = 5
[train]
lambda = 1e-3
"#;
        let cfg = ToolkitConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed, Some(7));
        let reg = cfg.noise_registry().unwrap();
        assert_eq!(reg.profile_for_gain(24.0).unwrap().read_sigma, 1e-3);
        assert_eq!(reg.profile_for_gain(6.0).unwrap().shot_k, DEFAULT_SHOT_K);
        assert_eq!(cfg.isp.demosaic, DemosaicKind::Bilinear);
        assert_eq!(cfg.isp.transfer, Transfer::Gamma22);
        assert_eq!(cfg.metrics.kld.bins, 64);
        assert_eq!(cfg.train.patch_radius, 2);
        match cfg.lpips_policy().unwrap() {
            LpipsPolicy::External(p) => {
                assert_eq!(p.command_line(), "python3 provider.py");
                assert_eq!(p.timeout(), Duration::from_secs(5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ToolkitConfig::from_toml_str("bogus = 1").is_err());
        assert!(ToolkitConfig::from_toml_str("[isp]\nwb_gains = [0.0, 1.0, 1.0]").is_err());
        assert!(ToolkitConfig::from_toml_str("[noise.abc]\nshot_k = 1.0").is_err());
        assert!(ToolkitConfig::from_toml_str("[noise.0]\nshot_k = -1.0").is_err());
        assert!(ToolkitConfig::from_toml_str("[lpips]\nprovider = \"x\"\ntimeout_s = 0").is_err());
    }
}
