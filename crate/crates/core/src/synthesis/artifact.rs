use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SynthesizedController;
use crate::linalg::StateSpaceModel;
use crate::rng::sha256_hex;
use crate::{Error, Result};

/// Persisted controller. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerArtifact {
    pub controller: StateSpaceModel,
    pub epsilon: f64,
    pub gamma: f64,
    pub certified_norm: f64,
    /// Hash of the dataset the plant model was identified from.
    pub dataset_sha256: Option<String>,
}

impl ControllerArtifact {
    pub fn from_synthesis(result: &SynthesizedController, dataset_sha256: Option<String>) -> Result<Self> {
        let controller = result
            .controller
            .clone()
            .ok_or_else(|| Error::InvalidParameter("synthesis was infeasible, no controller to save".into()))?;
        Ok(Self {
            controller,
            epsilon: result.epsilon,
            gamma: result.gamma_achieved,
            certified_norm: result.certified_norm,
            dataset_sha256,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the JSON encoding.
    pub fn sha256(&self) -> Result<String> {
        Ok(sha256_hex(self.to_json()?.as_bytes()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{linearize, PhysicalParams};
    use crate::synthesis::{build_generalized_plant, hinf_synthesize, SynthesisOptions};

    #[test]
    fn roundtrip_is_exact() {
        let m = linearize(&PhysicalParams::default()).unwrap();
        let r = hinf_synthesize(
            &build_generalized_plant(&m, 5e-3).unwrap(),
            &SynthesisOptions::default(),
        )
        .unwrap();
        let art = ControllerArtifact::from_synthesis(&r, Some("abc".into())).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.json");
        art.write(&path).unwrap();
        let back = ControllerArtifact::read(&path).unwrap();
        assert_eq!(back, art);
        assert_eq!(back.sha256().unwrap(), art.sha256().unwrap());
        let raw: serde_json::Value = serde_json::from_str(&art.to_json().unwrap()).unwrap();
        assert_eq!(raw["controller"]["a"]["rows"], 4);
        assert_eq!(raw["controller"]["dt"], 0.02);
    }
}
