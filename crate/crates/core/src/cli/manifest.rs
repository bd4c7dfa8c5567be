use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::solver::RecoveryConfig;

/// JSON sidecar describing how an artifact was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub seed: u64,
    pub subrate: Option<f64>,
    pub config: Option<RecoveryConfig>,
    /// Resolved values the config leaves implicit.
    pub resolved: BTreeMap<String, f64>,
    /// Only filled with `--timing`, so that reruns stay byte-identical.
    pub wall_clock_ms: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            seed,
            subrate: None,
            config: None,
            resolved: BTreeMap::new(),
            wall_clock_ms: None,
        }
    }

    /// `<artifact>.json` next to the artifact.
    pub fn sidecar_path(artifact: &Path) -> PathBuf {
        let mut s = artifact.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut m = RunManifest::new("recover", 9);
        m.inputs.insert("measurements".into(), "a.hodw".into());
        m.outputs.insert("image".into(), "out.png".into());
        m.subrate = Some(0.3);
        m.config = Some(RecoveryConfig {
            sigma_star: Some(10.0),
            outer_loops: Some(60),
            ..Default::default()
        });
        m.resolved.insert("eta".into(), 0.299_775_168_6);
        let back = RunManifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(RunManifest::sidecar_path(Path::new("x/m.hodw")), PathBuf::from("x/m.hodw.json"));
    }
}
