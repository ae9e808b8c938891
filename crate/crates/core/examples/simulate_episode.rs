//! Open-loop episodes from a small tilt, observed through each sensor tier.

use occball::harness::ZeroController;
use occball::plant::{run_episode, EpisodeConfig};
use occball::{PhysicalParams, SensorSpec, SensorTier, SimState};

fn main() -> occball::Result<()> {
    let params = PhysicalParams::with_fixation(0.8)?;
    let cfg = EpisodeConfig::with_seed(7).starting_at(SimState::upright_with_angle(2f64.to_radians()));
    for tier in SensorTier::ALL {
        let sensor = SensorSpec::for_params(tier, &params);
        let (res, traj) = run_episode(&params, &cfg, &mut ZeroController, &sensor)?;
        println!(
            "{tier:>7}: sigma {:.2e}, fell after {} steps ({:?})",
            sensor.sigma(),
            res.steps,
            res.termination
        );
        let every = (traj.len() / 5).max(1);
        for (t, z) in traj.z.iter().enumerate().step_by(every) {
            println!("    t={t:>3} z={z:+.5}");
        }
    }
    Ok(())
}
