//! Versioned policy checkpoints (JSON).
//!
//! ```json
//! {
//!   "format": "spinelab-policy",
//!   "version": 1,
//!   "env": "planar",
//!   "seed": 0,
//!   "iteration": 299,
//!   "curriculum": { ... },
//!   "params": { "actor": {...}, "log_std": [...], "critic": {...}, "action_scale": 0.25 }
//! }
//! ```
//!
//! Networks are stored as layer sizes plus one flat parameter vector (per
//! layer: row-major `out x in` weights, then biases).

use std::path::Path;

use serde::{Deserialize, Serialize};
use spinelab_core::curriculum::CurriculumState;
use spinelab_core::policy::PolicyParams;

use crate::config::EnvKind;
use crate::error::{LabError, Result};

pub const CHECKPOINT_FORMAT: &str = "spinelab-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub env: EnvKind,
    pub seed: u64,
    /// Last completed training iteration.
    pub iteration: usize,
    pub curriculum: CurriculumState,
    pub params: PolicyParams,
}

impl Checkpoint {
    pub fn new(
        env: EnvKind,
        seed: u64,
        iteration: usize,
        curriculum: CurriculumState,
        params: PolicyParams,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            env,
            seed,
            iteration,
            curriculum,
            params,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(self).map_err(|e| LabError::format(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| LabError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let header: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| LabError::format(path, e))?;
        if header.get("format").and_then(|v| v.as_str()) != Some(CHECKPOINT_FORMAT) {
            return Err(LabError::format(path, "not a spinelab policy checkpoint"));
        }
        let version = header.get("version").and_then(|v| v.as_u64());
        if version != Some(u64::from(CHECKPOINT_VERSION)) {
            return Err(LabError::format(
                path,
                format!(
                    "unsupported checkpoint version {version:?}, expected {CHECKPOINT_VERSION}"
                ),
            ));
        }
        let ckpt: Checkpoint =
            serde_json::from_value(header).map_err(|e| LabError::format(path, e))?;
        ckpt.params.validate()?;
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spinelab_core::curriculum::CurriculumConfig;

    fn sample() -> Checkpoint {
        let mut params = PolicyParams::zeros(5, 1, &[4, 3], 0.5).unwrap();
        for (i, p) in params.actor.params_mut().iter_mut().enumerate() {
            *p = (i as f64 * 0.37).sin() / 3.0;
        }
        params.log_std[0] = -1.25;
        let curriculum = CurriculumState::new(CurriculumConfig::default()).unwrap();
        Checkpoint::new(EnvKind::Toy1d, 7, 12, curriculum, params)
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        let ckpt = sample();
        ckpt.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ckpt);
    }

    #[test]
    fn rejects_other_versions_and_formats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        let mut v = serde_json::to_value(sample()).unwrap();
        v["version"] = 99.into();
        std::fs::write(&path, v.to_string()).unwrap();
        let err = Checkpoint::load(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
        v["version"] = 1.into();
        v["format"] = "something-else".into();
        std::fs::write(&path, v.to_string()).unwrap();
        assert!(matches!(
            Checkpoint::load(&path),
            Err(LabError::Format { .. })
        ));
    }

    #[test]
    fn rejects_truncated_weights() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        let mut v = serde_json::to_value(sample()).unwrap();
        v["params"]["actor"]["params"].as_array_mut().unwrap().pop();
        std::fs::write(&path, v.to_string()).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(LabError::Core(_))));
    }
}
