//! Versioned JSON snapshots of a model or a PCA projection.
//!
//! Floats are written in shortest round-trip form, so load followed by save
//! reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::engine::AdaptiveModel;
use crate::error::{Error, Result};
use crate::pca::PcaModel;
use crate::types::{Mixture, Mode};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub version: u32,
    pub config: ModelConfig,
    pub modes: Vec<Mode>,
    pub next_id: u64,
    pub samples_seen: u64,
}

impl ModelSnapshot {
    pub fn capture(model: &AdaptiveModel) -> Self {
        let mix = model.mixture();
        Self {
            version: SNAPSHOT_VERSION,
            config: model.config().clone(),
            modes: mix.modes().to_vec(),
            next_id: mix.next_id(),
            samples_seen: mix.samples_seen(),
        }
    }

    pub fn restore(self) -> Result<AdaptiveModel> {
        check_version(self.version)?;
        let mixture = Mixture::from_parts(self.modes, self.next_id, self.samples_seen)?;
        AdaptiveModel::from_state(self.config, mixture)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Self = serde_json::from_str(text)?;
        check_version(snap.version)?;
        Ok(snap)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSnapshot {
    pub version: u32,
    #[serde(flatten)]
    pub model: PcaModel,
}

impl PcaSnapshot {
    pub fn new(model: PcaModel) -> Self {
        Self {
            version: SNAPSHOT_VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Self = serde_json::from_str(text)?;
        check_version(snap.version)?;
        let m = &snap.model;
        if m.components.len() != m.explained_variance.len()
            || m.components.iter().any(|row| row.len() != m.mean.len())
        {
            return Err(Error::Parse {
                line: 0,
                message: "pca snapshot has inconsistent shapes".into(),
            });
        }
        Ok(snap)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn check_version(found: u32) -> Result<()> {
    if found != SNAPSHOT_VERSION {
        return Err(Error::SnapshotVersion {
            expected: SNAPSHOT_VERSION,
            found,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitialVariance;

    #[test]
    fn empty_model_snapshot() {
        let model = AdaptiveModel::new(ModelConfig::uagmm(3)).unwrap();
        let snap = ModelSnapshot::capture(&model);
        assert!(snap.modes.is_empty());
        assert_eq!(snap.samples_seen, 0);
        let back = ModelSnapshot::from_json(&snap.to_json().unwrap()).unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let cfg = ModelConfig::agmm(2, 3)
            .with_z(InitialVariance::PerDimension(vec![0.1, 1.0 / 3.0]))
            .with_alpha(0.0005);
        let mut model = AdaptiveModel::new(cfg).unwrap();
        for i in 0..50 {
            let t = i as f64 * 0.37;
            model
                .process(&[t.sin() * 4.0, (t * 1.3).cos() / 7.0])
                .unwrap();
        }
        let first = ModelSnapshot::capture(&model).to_json().unwrap();
        let restored = ModelSnapshot::from_json(&first).unwrap().restore().unwrap();
        let second = ModelSnapshot::capture(&restored).to_json().unwrap();
        assert_eq!(first, second);
        assert_eq!(restored.config(), model.config());
        assert_eq!(restored.mixture(), model.mixture());
    }

    #[test]
    fn wrong_version_is_rejected() {
        let model = AdaptiveModel::new(ModelConfig::uagmm(1)).unwrap();
        let text = ModelSnapshot::capture(&model)
            .to_json()
            .unwrap()
            .replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(
            ModelSnapshot::from_json(&text),
            Err(Error::SnapshotVersion { found: 9, .. })
        ));
    }

    #[test]
    fn pca_snapshot_round_trip() {
        let samples: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64;
                vec![t, (t * 0.7).sin(), t * t / 10.0]
            })
            .collect();
        let snap = PcaSnapshot::new(PcaModel::fit(&samples, 2).unwrap());
        let text = snap.to_json().unwrap();
        assert!(text.contains("\"explained_variance\""));
        let back = PcaSnapshot::from_json(&text).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.to_json().unwrap(), text);
    }
}
