use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::plant::{read_trajectory_csv, step, write_trajectory, PhysicalParams, SensorSpec, SimState, Trajectory};
use crate::rng::{sha256_hex, substream};
use crate::{Error, Result};

/// Open-loop excitation experiment used to collect identification data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationConfig {
    /// Inputs are i.i.d. uniform on `[-input_limit, input_limit]`.
    pub input_limit: f64,
    pub init_halfwidth: f64,
    /// Trajectory stops once the cart leaves `h(0) +- h_excursion`.
    pub h_excursion: f64,
    /// Trajectory stops once `|theta|` exceeds this (rad).
    pub theta_limit: f64,
    /// Safety cap on a single trajectory.
    pub max_len: usize,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self {
            input_limit: 10.0,
            init_halfwidth: 0.05,
            h_excursion: 0.6,
            theta_limit: 15f64.to_radians(),
            max_len: 100_000,
        }
    }
}

/// Simulates excitation trajectory number `index` of the dataset seeded by `seed`.
pub fn excitation_trajectory(
    params: &PhysicalParams,
    sensor: &SensorSpec,
    cfg: &ExcitationConfig,
    seed: u64,
    index: u64,
) -> Result<Trajectory> {
    let mut init = substream(seed, "sysid-init", index);
    let mut inputs = substream(seed, "sysid-input", index);
    let mut noise = sensor.instance_on(substream(seed, "sysid-sensor", index));
    let w = cfg.init_halfwidth;
    let mut x = SimState::new(
        init.random_range(-w..=w),
        init.random_range(-w..=w),
        init.random_range(-w..=w),
        init.random_range(-w..=w),
    );
    let h0 = x.h;
    let mut traj = Trajectory::default();
    let a = cfg.input_limit;
    while traj.len() < cfg.max_len {
        let u = inputs.random_range(-a..=a);
        traj.push(x, noise.observe(params, &x), u);
        x = step(params, &x, u)?;
        if (x.h - h0).abs() > cfg.h_excursion || x.theta.abs() > cfg.theta_limit || !x.is_finite() {
            break;
        }
    }
    Ok(traj)
}

/// `n_trajectories` independent excitation runs with the default experiment.
pub fn collect_sysid_data(
    params: &PhysicalParams,
    sensor: &SensorSpec,
    n_trajectories: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if n_trajectories == 0 {
        return Err(Error::InvalidParameter("n_trajectories must be at least 1".into()));
    }
    let cfg = ExcitationConfig::default();
    (0..n_trajectories as u64)
        .map(|i| excitation_trajectory(params, sensor, &cfg, seed, i))
        .collect()
}

/// Trajectories until `budget` samples are collected, the last one truncated.
///
/// Datasets with the same seed are nested: a smaller budget is a prefix of a
/// larger one.
pub fn collect_budget(
    params: &PhysicalParams,
    sensor: &SensorSpec,
    budget: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let cfg = ExcitationConfig::default();
    let mut out = Vec::new();
    let mut total = 0;
    let mut index = 0;
    while total < budget {
        let traj = excitation_trajectory(params, sensor, &cfg, seed, index)?;
        index += 1;
        let take = traj.len().min(budget - total);
        total += take;
        out.push(if take < traj.len() { traj.truncated(take) } else { traj });
    }
    Ok(out)
}

pub fn total_samples(data: &[Trajectory]) -> usize {
    data.iter().map(Trajectory::len).sum()
}

/// SHA-256 over the canonical CSV encoding of every trajectory, in order.
pub fn dataset_hash(data: &[Trajectory]) -> Result<String> {
    let mut bytes = Vec::new();
    for traj in data {
        write_trajectory(&mut bytes, traj)?;
    }
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub params: PhysicalParams,
    pub sensor: SensorSpec,
    pub budget: usize,
    pub files: Vec<String>,
    pub sha256: String,
}

/// Writes `traj_NNNNN.csv` files and `manifest.json` into `dir`.
pub fn write_dataset(
    dir: &Path,
    data: &[Trajectory],
    seed: u64,
    params: &PhysicalParams,
    sensor: &SensorSpec,
) -> Result<DatasetManifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(data.len());
    for (i, traj) in data.iter().enumerate() {
        let name = format!("traj_{i:05}.csv");
        write_trajectory(BufWriter::new(File::create(dir.join(&name))?), traj)?;
        files.push(name);
    }
    let manifest = DatasetManifest {
        seed,
        params: *params,
        sensor: *sensor,
        budget: total_samples(data),
        files,
        sha256: dataset_hash(data)?,
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("manifest.json"))?), &manifest)?;
    Ok(manifest)
}

/// Reads a dataset and checks its hash against the manifest.
pub fn read_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<Trajectory>)> {
    let manifest: DatasetManifest = serde_json::from_reader(File::open(dir.join("manifest.json"))?)?;
    let data = manifest
        .files
        .iter()
        .map(|f| read_trajectory_csv(&dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    let hash = dataset_hash(&data)?;
    if hash != manifest.sha256 {
        return Err(Error::InvalidParameter(format!(
            "dataset hash mismatch: manifest {}, files {hash}",
            manifest.sha256
        )));
    }
    Ok((manifest, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::SensorTier;

    fn setup() -> (PhysicalParams, SensorSpec) {
        let p = PhysicalParams::default();
        (p, SensorSpec::for_params(SensorTier::DepthLike, &p))
    }

    #[test]
    fn deterministic_and_terminating() {
        let (p, s) = setup();
        let a = collect_sysid_data(&p, &s, 20, 5).unwrap();
        let b = collect_sysid_data(&p, &s, 20, 5).unwrap();
        assert_eq!(a, b);
        for t in &a {
            assert!(!t.is_empty() && t.len() < 1000);
            let x = t.x_full.as_ref().unwrap();
            assert!(x[0].as_array().iter().all(|v| v.abs() <= 0.05));
            assert!(t.u.iter().all(|u| u.abs() <= 10.0));
            assert!(x
                .iter()
                .all(|s| (s.h - x[0].h).abs() <= 0.6 && s.theta.abs() <= 15f64.to_radians()));
        }
    }

    #[test]
    fn budgets_are_exact_and_nested() {
        let (p, s) = setup();
        let small = collect_budget(&p, &s, 100, 3).unwrap();
        let large = collect_budget(&p, &s, 1000, 3).unwrap();
        assert_eq!(total_samples(&small), 100);
        assert_eq!(total_samples(&large), 1000);
        let last = small.len() - 1;
        assert_eq!(small[..last], large[..last]);
        assert_eq!(small[last], large[last].truncated(small[last].len()));
    }

    #[test]
    fn dataset_roundtrip() {
        let (p, s) = setup();
        let data = collect_budget(&p, &s, 300, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = write_dataset(dir.path(), &data, 9, &p, &s).unwrap();
        let (m2, back) = read_dataset(dir.path()).unwrap();
        assert_eq!(m, m2);
        assert_eq!(back, data);
        assert_eq!(m.budget, 300);
    }
}
