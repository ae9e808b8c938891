//! H-infinity synthesis on a full-state least-squares model, checked against
//! the analytic sensitivity bound on the true plant.

use occball::harness::AngleSearch;
use occball::synthesis::{
    build_generalized_plant, default_epsilon, hinf_synthesize, validate_controller, SynthesisOptions,
};
use occball::sysid::{collect_budget, fit_full_state};
use occball::{PhysicalParams, SensorSpec, SensorTier};

fn main() -> occball::Result<()> {
    for ell0 in [1.0, 0.9, 0.8, 0.7] {
        let params = PhysicalParams::with_fixation(ell0)?;
        let sensor = SensorSpec::for_params(SensorTier::NoiseFree, &params);
        let data = collect_budget(&params, &sensor, 5000, 0)?;
        let model = fit_full_state(&data, params.ell0, params.tau)?;
        let gp = build_generalized_plant(&model, default_epsilon(SensorTier::NoiseFree))?;
        let synth = hinf_synthesize(&gp, &SynthesisOptions::default())?;
        let Some(k) = synth.controller.as_ref() else {
            println!("ell0 {ell0}: infeasible ({:?})", synth.diagnostics.failure);
            continue;
        };
        let report = validate_controller(k, &params, &sensor, &AngleSearch::default())?;
        println!(
            "ell0 {ell0}: gamma {:.1}, |T| {:.3} >= bound {:.3}, max angle {:.2} deg",
            synth.gamma_achieved,
            report.t_norm.unwrap_or(f64::NAN),
            report.bound,
            report.max_angle.degrees
        );
    }
    Ok(())
}
