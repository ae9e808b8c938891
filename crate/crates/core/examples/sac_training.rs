//! A short SAC run with a small network, then a deterministic evaluation.
//! Full-size training takes hours; pass an episode count to go longer.

use occball::harness::evaluate;
use occball::rl::{train, PolicyController, SacConfig, TrainConfig};
use occball::{PhysicalParams, SensorSpec, SensorTier};

fn main() -> occball::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(150);
    let params = PhysicalParams::default();
    let sensor = SensorSpec::for_params(SensorTier::NoiseFree, &params);
    let sac = SacConfig {
        history_len: 10,
        hidden_widths: vec![64, 64],
        warmup_steps: 500,
        seed: 1,
        ..SacConfig::for_tier(SensorTier::NoiseFree)
    };
    let cfg = TrainConfig {
        max_episodes: episodes,
        ..TrainConfig::default()
    };
    let out = train(&params, &sensor, &sac, &cfg, |p| {
        if (p.episode + 1) % 25 == 0 {
            println!(
                "episode {:>4} running reward {:>6.1} steps {}",
                p.episode + 1,
                p.running_reward,
                p.steps_cumulative
            );
        }
    })?;
    println!("stopped: {:?}", out.stop);
    let mut k = PolicyController::new(out.agent.policy, sac.history_len);
    let ev = evaluate(&mut k, &params, &sensor, 20, 99)?;
    println!(
        "deterministic policy: avg reward {:.1}, success rate {:.2}",
        ev.avg_reward, ev.success_rate
    );
    Ok(())
}
