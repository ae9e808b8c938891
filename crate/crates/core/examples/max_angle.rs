//! Bisection for the largest recoverable initial tilt, on a mock controller
//! with a known threshold and on a synthesized controller under each tier.

use occball::harness::{bisect_angle, max_stabilized_angle, AngleSearch, LtiController};
use occball::synthesis::{build_generalized_plant, hinf_synthesize, SynthesisOptions};
use occball::sysid::{collect_budget, fit_full_state};
use occball::{PhysicalParams, SensorSpec, SensorTier};

fn main() -> occball::Result<()> {
    let search = AngleSearch::default();
    let mock = bisect_angle(&search, |deg| Ok(deg <= 6.25))?;
    println!(
        "mock threshold 6.25 deg -> {:.4} deg in {} probes",
        mock.degrees, mock.probes
    );

    let params = PhysicalParams::default();
    let data = collect_budget(
        &params,
        &SensorSpec::for_params(SensorTier::NoiseFree, &params),
        2000,
        3,
    )?;
    let model = fit_full_state(&data, params.ell0, params.tau)?;
    let synth = hinf_synthesize(&build_generalized_plant(&model, 1e-6)?, &SynthesisOptions::default())?;
    let k = synth.controller.expect("feasible on a full-state model");
    for tier in SensorTier::ALL {
        let sensor = SensorSpec::for_params(tier, &params);
        let m = max_stabilized_angle(&mut LtiController::new(k.clone())?, &params, &sensor, &search)?;
        println!(
            "{tier:>7}: {:.2} deg{}",
            m.degrees,
            if m.non_monotone { " (non-monotone)" } else { "" }
        );
    }
    Ok(())
}
