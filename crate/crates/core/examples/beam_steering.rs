// True-time-delay beam steering and beamwidth versus element count.
//
// ```text
// cargo run --example beam_steering
// ```

use microcomb_rf::beamform::{
    achievable_steering_angles, angle_grid, array_factor, beamwidth_sweep, BeamformerConfig,
};

pub fn run_example() -> microcomb_rf::Result<()> {
    let grid = angle_grid(0.01);
    let base = BeamformerConfig::half_wavelength(16, 10e9, 0.0);

    // Delays come in multiples of the dispersive tap spacing.
    let step = 5e-12;
    for (k, angle) in achievable_steering_angles(base.element_spacing, step, -2, 4)? {
        let cfg = BeamformerConfig {
            inter_element_delay: k as f64 * step,
            ..base
        };
        let pattern = array_factor(&cfg, &grid)?;
        println!(
            "k = {k:>2}: expected {angle:>7.2} deg, peak {:>7.2} deg",
            pattern.argmax_deg()
        );
    }

    let sweep = beamwidth_sweep(&base, &[11, 21, 41, 81], &grid)?;
    for p in &sweep.0 {
        println!(
            "M = {:>2}: 3 dB beamwidth {:.3} deg (M * width = {:.1})",
            p.n_elements,
            p.theta_3db_deg,
            p.n_elements as f64 * p.theta_3db_deg
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> microcomb_rf::Result<()> {
    run_example()
}
