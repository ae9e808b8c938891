//! A small data-budget sweep written to a temporary directory.

use occball::harness::{run_sweep, AngleSearch, ExperimentSpec, SweepMethod};
use occball::SensorTier;

fn main() -> occball::Result<()> {
    let dir = std::env::temp_dir().join("occball_sweep_example");
    let spec = ExperimentSpec {
        fixations: vec![1.0, 0.8],
        tiers: vec![SensorTier::NoiseFree, SensorTier::DepthLike],
        method: SweepMethod::HinfFullstate,
        budgets: vec![100, 1000],
        n_eval_episodes: 10,
        n_repeats: Some(3),
        output_dir: dir.clone(),
        angle_search: AngleSearch {
            tol_deg: 0.1,
            ..AngleSearch::default()
        },
        ..ExperimentSpec::default()
    };
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let result = run_sweep(&spec, jobs)?;
    for row in &result.max_angle {
        println!(
            "ell0 {} {:>6} budget {:>5}: median {:.2} deg [{:.2}, {:.2}]",
            row.fixation, row.tier, row.budget, row.median, row.q25, row.q75
        );
    }
    for row in &result.summary {
        println!(
            "ell0 {} {:>6}: reward {:.1}, success {:.2}",
            row.fixation, row.tier, row.avg_reward, row.success_rate
        );
    }
    println!("tables in {}", dir.display());
    Ok(())
}
