use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::network::Mlp;
use super::sac::{Policy, SacConfig};
use crate::rng::sha256_hex;
use crate::{Error, Result};

/// Architecture half of a policy checkpoint; the weights live in a sibling
/// `.bin` file as little-endian `f64`, layer by layer, weights row-major then biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: SacConfig,
    pub sizes: Vec<usize>,
    pub n_params: usize,
    pub weights_file: String,
    pub weights_sha256: String,
}

fn blob_path(json: &Path) -> PathBuf {
    json.with_extension("bin")
}

fn encode(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Hash of the weight blob, as recorded in the checkpoint header.
pub fn policy_sha256(policy: &Policy) -> String {
    sha256_hex(&encode(&policy.net.flatten()))
}

/// Writes `path` (JSON) and the weight blob next to it.
pub fn save_policy(path: &Path, policy: &Policy, config: &SacConfig) -> Result<CheckpointHeader> {
    let blob = encode(&policy.net.flatten());
    let bin = blob_path(path);
    let header = CheckpointHeader {
        config: config.clone(),
        sizes: policy.net.sizes(),
        n_params: policy.net.n_params(),
        weights_file: bin
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::InvalidParameter(format!("bad checkpoint path {}", path.display())))?
            .to_string(),
        weights_sha256: sha256_hex(&blob),
    };
    fs::write(&bin, &blob)?;
    fs::write(path, serde_json::to_string_pretty(&header)?)?;
    Ok(header)
}

pub fn load_policy(path: &Path) -> Result<(Policy, SacConfig)> {
    let header: CheckpointHeader = serde_json::from_str(&fs::read_to_string(path)?)?;
    let bin = path.with_file_name(&header.weights_file);
    let blob = fs::read(&bin)?;
    if sha256_hex(&blob) != header.weights_sha256 {
        return Err(Error::InvalidParameter(format!(
            "weight blob {} does not match its header",
            bin.display()
        )));
    }
    if blob.len() != 8 * header.n_params {
        return Err(Error::Dimension(format!(
            "weight blob has {} bytes, expected {}",
            blob.len(),
            8 * header.n_params
        )));
    }
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of 8")))
        .collect();
    let mut net = Mlp::zeros(&header.sizes, header.config.activation);
    if net.n_params() != header.n_params {
        return Err(Error::Dimension("layer sizes disagree with parameter count".into()));
    }
    net.set_flat(&values);
    Ok((
        Policy {
            net,
            action_limit: header.config.action_limit,
        },
        header.config,
    ))
}
