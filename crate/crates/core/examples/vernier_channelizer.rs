// Vernier channelization of a broadband spectrum with a binary channel mask.
//
// ```text
// cargo run --example vernier_channelizer
// ```

use microcomb_rf::channelizer::{
    apply_binary_weights, channel_centers, operation_bandwidth, reconstruct_linear, slice_spectrum,
    ChannelPlan, Lineshape,
};
use microcomb_rf::sigio::{linspace, Spectrum};

pub fn run_example() -> microcomb_rf::Result<()> {
    for n in [80, 5] {
        let plan = ChannelPlan::new(49e9, 51e9, n, 0.0, 2e9);
        println!(
            "{n} channels x 2 GHz -> {:.0} GHz operation bandwidth",
            operation_bandwidth(&plan)? / 1e9
        );
    }

    let plan = ChannelPlan::new(49e9, 51e9, 8, 2e9, 2e9).with_lineshape(Lineshape::Rectangular);
    let grid = linspace(0.0, 20e9, 2001);
    let input = Spectrum::new(grid.clone(), vec![0.0; grid.len()])?;
    let sliced = slice_spectrum(&plan, &input)?;
    let mask = [1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0];
    let weighted = apply_binary_weights(&sliced, &mask)?;
    let output = reconstruct_linear(&weighted)?;

    for ((ch, fc), w) in weighted
        .channels()
        .iter()
        .zip(channel_centers(&plan)?)
        .zip(mask)
    {
        println!(
            "channel {}: {:>5.1} GHz, weight {w}, power {:>6.1}",
            ch.index,
            fc / 1e9,
            ch.total_power()
        );
    }
    let passed = output.iter().filter(|&&p| p > 0.0).count();
    println!("{passed} of {} grid points pass the mask", grid.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> microcomb_rf::Result<()> {
    run_example()
}
