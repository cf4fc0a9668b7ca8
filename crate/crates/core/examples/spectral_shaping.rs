// Two-stage shaping: flatten the comb, then close the loop on tap weights
// through an actuator with a 10 % gain error and noisy spectrum reads.
//
// ```text
// cargo run --example spectral_shaping
// ```

use microcomb_rf::comb::{generate_soliton_crystal_comb, EnvelopeParams, FSR_49_GHZ};
use microcomb_rf::designs::{sinc_bandpass_taps, BandpassDesign};
use microcomb_rf::shaper::{
    feedback_calibrate, pre_shape, targets_from_taps, ActuatorModel, CalibrationSettings,
};

pub fn run_example() -> microcomb_rf::Result<()> {
    let envelope = EnvelopeParams::sech2(0.0, 15.0).with_fingerprint(3.0, 7.0, 0.0);
    let comb = generate_soliton_crystal_comb(193.4e12, FSR_49_GHZ, 81, &envelope)?;
    let pre = pre_shape(&comb, 15.0)?;
    let flat = pre.apply(&comb)?;
    println!(
        "spread {:.2} dB -> {:.2} dB after pre-shaping",
        comb.spread_db(),
        flat.spread_db()
    );

    let design = sinc_bandpass_taps(&BandpassDesign::apodized(40, 1e9, 10e9), 26.7e-12)?;
    let (targets, signs) = targets_from_taps(design.taps.coefficients())?;
    let negative = signs.iter().filter(|&&s| s < 0.0).count();
    println!(
        "{} taps, {negative} on the negative detector arm",
        targets.len()
    );

    let selected = flat.central_lines(targets.len())?;
    let actuator = ActuatorModel {
        gain_error: 0.1,
        ..ActuatorModel::ideal()
    };
    let settings = CalibrationSettings {
        osa_noise_db: 0.01,
        seed: 1,
        ..CalibrationSettings::default()
    };
    let (plan, report) = feedback_calibrate(&flat, &selected, &targets, &actuator, &settings)?;
    for (i, e) in report.error_trace.iter().enumerate() {
        println!("  iteration {:>2}: max error {e:.4} dB", i + 1);
    }
    let deepest = plan.attenuations_db.iter().copied().fold(0.0, f64::max);
    println!(
        "converged: {}, deepest attenuation {deepest:.1} dB",
        report.converged
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> microcomb_rf::Result<()> {
    run_example()
}
