//! ARX least squares followed by a Ho-Kalman realization, compared with the
//! true linearization on the unit circle.

use occball::plant::linearize;
use occball::sysid::{collect_budget, fit_arx, ho_kalman, DEFAULT_ARX_ORDER, DEFAULT_MODEL_ORDER};
use occball::{PhysicalParams, SensorSpec, SensorTier};

fn main() -> occball::Result<()> {
    let params = PhysicalParams::with_fixation(0.9)?;
    let truth = linearize(&params)?;
    for tier in SensorTier::ALL {
        let sensor = SensorSpec::for_params(tier, &params);
        let data = collect_budget(&params, &sensor, 5000, 1)?;
        let arx = fit_arx(&data, DEFAULT_ARX_ORDER)?;
        let hk = ho_kalman(&arx, DEFAULT_MODEL_ORDER)?;
        let model = hk.model(params.tau)?;
        let sv: Vec<String> = hk.singular_values.iter().take(6).map(|s| format!("{s:.3e}")).collect();
        println!("{tier}: hankel singular values {}", sv.join(" "));
        println!(
            "  identified poles {:?}",
            model
                .poles()
                .iter()
                .map(|p| format!("{:.4}", p.norm()))
                .collect::<Vec<_>>()
        );
        for omega in [0.01, 0.1, 1.0] {
            let g = truth.freq_response(omega)?[(0, 0)];
            let h = model.freq_response(omega)?[(0, 0)];
            println!("  omega {omega:<5} |G| {:.3e} |G_hat| {:.3e}", g.norm(), h.norm());
        }
    }
    Ok(())
}
