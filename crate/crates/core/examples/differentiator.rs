// First-order differentiator applied to a Gaussian pulse in the time domain.
//
// ```text
// cargo run --example differentiator
// ```

use microcomb_rf::designs::differentiator_taps;
use microcomb_rf::sigio::Waveform;
use microcomb_rf::transversal::apply_to_waveform;

const T: f64 = 26.7e-12;

pub fn run_example() -> microcomb_rf::Result<()> {
    let d = differentiator_taps(81, T)?;
    let sigma = 8.0;
    let t0 = 200.0;
    // One sample per tap spacing, pulse width in samples.
    let pulse = |n: f64| (-(n - t0).powi(2) / (2.0 * sigma * sigma)).exp();
    let slope = |n: f64| -(n - t0) / (sigma * sigma) * pulse(n);
    let input = Waveform::new(1.0 / T, (0..400).map(|n| pulse(n as f64)).collect())?;
    let output = apply_to_waveform(&d.taps, &input)?;

    let lag = (d.taps.len() - 1) as f64 / 2.0;
    let expected: Vec<f64> = (0..output.len()).map(|n| slope(n as f64 - lag)).collect();
    // Least-squares gain, then normalized RMS error.
    let dot: f64 = output
        .samples()
        .iter()
        .zip(&expected)
        .map(|(y, e)| y * e)
        .sum();
    let energy: f64 = expected.iter().map(|e| e * e).sum();
    let gain = dot / energy;
    let err: f64 = output
        .samples()
        .iter()
        .zip(&expected)
        .map(|(y, e)| (y - gain * e).powi(2))
        .sum();
    println!(
        "gain {gain:.4} per sample, normalized RMS error {:.3} %",
        100.0 * (err / (gain * gain * energy)).sqrt()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> microcomb_rf::Result<()> {
    run_example()
}
