// Hilbert transformer taps: the phase sits at -90 degrees across the band
// for both kernels; the odd-tap kernel also keeps the magnitude flat.
//
// ```text
// cargo run --example hilbert_transformer
// ```

use microcomb_rf::designs::{hilbert_taps_with, HilbertKernel};
use microcomb_rf::transversal::{rf_fsr, transfer_function};

const T: f64 = 26.7e-12;

pub fn run_example() -> microcomb_rf::Result<()> {
    for kernel in [HilbertKernel::Reciprocal, HilbertKernel::OddTaps] {
        let d = hilbert_taps_with(81, T, kernel)?;
        let half = 0.5 * rf_fsr(&d.taps);
        let grid: Vec<f64> = (1..=9).map(|i| half * i as f64 / 10.0).collect();
        let response = transfer_function(&d.taps, &grid)?.delay_compensated(d.taps.center_delay());
        println!("{kernel:?}:");
        for ((f, p), m) in grid
            .iter()
            .zip(response.phase_deg())
            .zip(response.magnitude_db())
        {
            println!(
                "  {:>6.2} GHz  phase {p:>8.3} deg  |H| {m:>7.2} dB",
                f / 1e9
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> microcomb_rf::Result<()> {
    run_example()
}
