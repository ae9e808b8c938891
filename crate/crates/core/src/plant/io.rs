use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpisodeConfig, EpisodeResult, PhysicalParams, SensorSpec, SimState, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Row {
    t: usize,
    h: f64,
    h_dot: f64,
    theta: f64,
    theta_dot: f64,
    u: f64,
    y: f64,
}

/// Sidecar written next to a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetadata {
    pub params: PhysicalParams,
    pub sensor: SensorSpec,
    pub config: EpisodeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<EpisodeResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<String>,
}

/// Writes `t,h,h_dot,theta,theta_dot,u,y`. Requires the full state record.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    write_trajectory(BufWriter::new(File::create(path)?), traj)
}

pub fn write_trajectory<W: Write>(writer: W, traj: &Trajectory) -> Result<()> {
    let states = traj
        .x_full
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("trajectory has no state record".into()))?;
    if states.len() != traj.len() || traj.u.len() != traj.len() {
        return Err(Error::Dimension("trajectory columns differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    for (t, s) in states.iter().enumerate() {
        w.serialize(Row {
            t,
            h: s.h,
            h_dot: s.h_dot,
            theta: s.theta,
            theta_dot: s.theta_dot,
            u: traj.u[t],
            y: traj.z[t],
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let mut r = csv::Reader::from_path(path)?;
    let mut traj = Trajectory::default();
    for (i, row) in r.deserialize::<Row>().enumerate() {
        let row = row?;
        if row.t != i {
            return Err(Error::InvalidParameter(format!("row {i} has time index {}", row.t)));
        }
        traj.push(SimState::new(row.h, row.h_dot, row.theta, row.theta_dot), row.y, row.u);
    }
    Ok(traj)
}

pub fn write_episode_metadata(path: &Path, meta: &EpisodeMetadata) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, meta)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ZeroController;
    use crate::plant::{run_episode, SensorTier};

    #[test]
    fn csv_roundtrip_is_exact() {
        let p = PhysicalParams::with_fixation(0.9).unwrap();
        let sensor = SensorSpec::for_params(SensorTier::DepthLike, &p);
        let cfg = EpisodeConfig::with_seed(4);
        let (res, traj) = run_episode(&p, &cfg, &mut ZeroController, &sensor).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectory_csv(&path, &traj).unwrap();
        assert_eq!(read_trajectory_csv(&path).unwrap(), traj);
        let meta = EpisodeMetadata {
            params: p,
            sensor,
            config: cfg,
            result: Some(res),
            controller: Some("zero".into()),
        };
        let mpath = dir.path().join("traj.json");
        write_episode_metadata(&mpath, &meta).unwrap();
        let back: EpisodeMetadata = serde_json::from_reader(File::open(&mpath).unwrap()).unwrap();
        assert_eq!(back, meta);
    }
}
