// Tunable Gaussian-apodized sinc bandpass filters and the Q_RF versus tap
// count trend.
//
// ```text
// cargo run --example bandpass_filter
// ```

use microcomb_rf::designs::{sinc_bandpass_taps, BandpassDesign};
use microcomb_rf::transversal::{
    find_passband, period_grid, q_rf, rf_fsr, sidelobe_level, transfer_function, QrfConvention,
    TapWeights,
};

const T: f64 = 26.7e-12;

pub fn run_example() -> microcomb_rf::Result<()> {
    for center in [5e9, 10e9, 15e9] {
        let d = sinc_bandpass_taps(&BandpassDesign::apodized(80, 1e9, center), T)?;
        let response = transfer_function(&d.taps, &period_grid(&d.taps, 0.0, 1 << 15))?;
        println!(
            "request {:>4.1} GHz: center {:.3} GHz, width {:.3} GHz, sidelobes {:.1} dB",
            center / 1e9,
            d.achieved_center.unwrap_or(f64::NAN) / 1e9,
            d.achieved_bandwidth.unwrap_or(f64::NAN) / 1e9,
            sidelobe_level(&response)
        );
    }

    // Uniform taps: the passband narrows as 1/N, so Q_RF grows linearly.
    for n in [10, 20, 40, 80] {
        let taps = TapWeights::new(vec![1.0; n], T)?;
        let fsr = rf_fsr(&taps);
        let grid = period_grid(&taps, -0.5 * fsr, 1 << 16);
        let response = transfer_function(&taps, &grid)?;
        let band = find_passband(&response, 0.0)?;
        let q = q_rf(
            &response,
            0.0,
            QrfConvention::FsrOverBandwidth { rf_fsr: fsr },
        )?;
        println!(
            "N = {n:>2}: 3 dB width {:.3} GHz, Q_RF {q:.2}, Q_RF/N {:.4}",
            band.width() / 1e9,
            q / n as f64
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> microcomb_rf::Result<()> {
    run_example()
}
