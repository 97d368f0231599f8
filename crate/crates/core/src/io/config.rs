use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cfa::CfaKind;
use crate::error::{Error, Result};
use crate::micronet::Strategy;

/// Seeds for every random stream of a run. All are required.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub noise: u64,
    pub dead: u64,
    pub data: u64,
    pub train: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub cfa: CfaKind,
    pub iso: u32,
    #[serde(default)]
    pub noise_model: Option<PathBuf>,
    pub maskout: (f64, f64),
    pub dead_rate: f64,
    pub strategy: Strategy,
    pub seeds: Seeds,
    #[serde(default)]
    pub paths: Paths,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.maskout;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::invalid(format!("maskout range [{lo}, {hi}] is not a sub-interval of [0, 1]")));
        }
        if !(0.0..=0.05).contains(&self.dead_rate) {
            return Err(Error::invalid(format!("dead-pixel rate {} outside [0, 0.05]", self.dead_rate)));
        }
        if self.iso == 0 {
            return Err(Error::invalid("iso must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "cfa": "quad", "iso": 3200, "maskout": [0.0, 0.05], "dead_rate": 0.01,
        "strategy": "esum", "seeds": {"noise": 1, "dead": 2, "data": 3, "train": 4},
        "paths": {"input": "a.png"}
    }"#;

    #[test]
    fn parses() {
        let c = PipelineConfig::from_json(DOC).unwrap();
        assert_eq!(c.cfa, CfaKind::Quad);
        assert_eq!(c.maskout, (0.0, 0.05));
        assert_eq!(c.paths.input.as_deref(), Some(Path::new("a.png")));
        assert_eq!(c.noise_model, None);
    }

    #[test]
    fn unknown_keys_and_missing_seeds_rejected() {
        let extra = DOC.replacen("\"iso\"", "\"bogus\": 1, \"iso\"", 1);
        assert!(PipelineConfig::from_json(&extra).is_err());
        let missing = DOC.replace("\"train\": 4", "\"extra\": 4");
        assert!(PipelineConfig::from_json(&missing).is_err());
        let bad = DOC.replace("0.01", "0.2");
        assert!(PipelineConfig::from_json(&bad).is_err());
    }
}
