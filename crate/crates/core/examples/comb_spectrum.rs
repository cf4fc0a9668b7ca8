// Soliton-crystal comb spectra for the two ring sizes.
//
// ```text
// cargo run --example comb_spectrum
// ```

use microcomb_rf::comb::{
    frequency_to_wavelength, fsr_to_wavelength_spacing, generate_soliton_crystal_comb,
    EnvelopeParams, DEFAULT_CENTER_FREQUENCY_HZ, FSR_200_GHZ, FSR_49_GHZ,
};

pub fn run_example() -> microcomb_rf::Result<()> {
    let lambda = frequency_to_wavelength(DEFAULT_CENTER_FREQUENCY_HZ);
    for fsr in [FSR_49_GHZ, FSR_200_GHZ] {
        let spacing = fsr_to_wavelength_spacing(fsr, lambda)?;
        println!(
            "FSR {:>5.1} GHz -> {:.4} nm line spacing at {:.2} nm",
            fsr / 1e9,
            spacing * 1e9,
            lambda * 1e9
        );
    }

    // Sech^2 envelope with a period-7 fingerprint ripple.
    let envelope = EnvelopeParams::sech2(0.0, 15.0).with_fingerprint(3.0, 7.0, 0.0);
    let comb =
        generate_soliton_crystal_comb(DEFAULT_CENTER_FREQUENCY_HZ, FSR_49_GHZ, 81, &envelope)?;
    println!(
        "{}: {} lines, spread {:.2} dB",
        comb.label(),
        comb.len(),
        comb.spread_db()
    );
    for line in comb.lines().iter().filter(|l| l.index % 10 == 0) {
        println!(
            "  line {:>3}  {:.4} nm  {:>7.2} dBm",
            line.index,
            frequency_to_wavelength(line.frequency) * 1e9,
            line.power_dbm
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> microcomb_rf::Result<()> {
    run_example()
}
