//! System identification from excitation data: ARX least squares followed by
//! a Ho-Kalman realization, and a full-state least-squares fit.

mod arx;
mod data;
mod full_state;
mod ho_kalman;

pub use arx::{arx_rows, fit_arx, ArxModel};
pub use data::{
    collect_budget, collect_sysid_data, dataset_hash, excitation_trajectory, read_dataset, total_samples,
    write_dataset, DatasetManifest, ExcitationConfig,
};
pub use full_state::fit_full_state;
pub use ho_kalman::{hankel_matrix, ho_kalman, observer_arx, HoKalmanResult, RANK_RATIO};

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::StateSpaceModel;
use crate::plant::{PhysicalParams, SensorSpec, Trajectory};
use crate::Result;

pub const DEFAULT_ARX_ORDER: usize = 10;
pub const DEFAULT_MODEL_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SysidMethod {
    /// ARX fit then Ho-Kalman realization, from `(z, u)` only.
    Arxhk,
    /// Least squares on the full state with the known readout row.
    FullState,
}

impl SysidMethod {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "arxhk" => Some(Self::Arxhk),
            "fullstate" | "full_state" => Some(Self::FullState),
            _ => None,
        }
    }
}

/// Identifies a plant model with `method`.
pub fn identify(
    data: &[Trajectory],
    method: SysidMethod,
    params: &PhysicalParams,
    order_p: usize,
    order_n: usize,
) -> Result<StateSpaceModel> {
    match method {
        SysidMethod::Arxhk => ho_kalman(&fit_arx(data, order_p)?, order_n)?.model(params.tau),
        SysidMethod::FullState => fit_full_state(data, params.ell0, params.tau),
    }
}

/// Persisted identification result, the input of `synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub model: StateSpaceModel,
    pub method: SysidMethod,
    pub order_p: usize,
    pub order_n: usize,
    pub params: PhysicalParams,
    pub sensor: SensorSpec,
    pub seed: u64,
    pub budget: usize,
    pub dataset_sha256: String,
    /// Realization details for ARXHK models.
    pub ho_kalman: Option<HoKalmanResult>,
}

impl ModelArtifact {
    /// Identifies a model from `data` and records where it came from.
    #[allow(clippy::too_many_arguments)]
    pub fn identify(
        data: &[Trajectory],
        method: SysidMethod,
        params: &PhysicalParams,
        sensor: &SensorSpec,
        seed: u64,
        order_p: usize,
        order_n: usize,
    ) -> Result<Self> {
        let (model, ho_kalman) = match method {
            SysidMethod::Arxhk => {
                let hk = ho_kalman(&fit_arx(data, order_p)?, order_n)?;
                (hk.model(params.tau)?, Some(hk))
            }
            SysidMethod::FullState => (fit_full_state(data, params.ell0, params.tau)?, None),
        };
        Ok(Self {
            model,
            method,
            order_p,
            order_n,
            params: *params,
            sensor: *sensor,
            seed,
            budget: total_samples(data),
            dataset_sha256: dataset_hash(data)?,
            ho_kalman,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}
