use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use microcomb_rf::cli::{
    cmd_beamform, cmd_channelize, cmd_design, cmd_shape, simulate, CommandOutcome,
};
use microcomb_rf::sigio::{read_json, resolve_value, Scenario, SCHEMA_VERSION};
use microcomb_rf::{Error, Result};

/// Microcomb RF photonics experiments as plot-ready CSV.
///
/// Exit codes: 0 success, 2 validation, 3 numeric or infeasible, 4 I/O.
#[derive(Parser)]
#[command(name = "microcomb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; flags override its fields
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Output directory [default: the scenario's output_dir]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// RNG seed recorded in every manifest
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Design FIR taps and write taps.json, response.csv and metrics.json
    Design {
        /// Filter kind; omit to use the scenario's design section
        kind: Option<Kind>,
        /// Number of taps
        #[arg(long)]
        taps: Option<usize>,
        /// Sinc passband width, Hz
        #[arg(long, value_name = "HZ")]
        bw: Option<f64>,
        /// Sinc passband center, Hz
        #[arg(long, value_name = "HZ")]
        center: Option<f64>,
        /// Gaussian apodization width in taps (0 disables) [default: taps/6]
        #[arg(long)]
        sigma: Option<f64>,
        /// Hilbert kernel
        #[arg(long)]
        kernel: Option<Kernel>,
        /// Differentiator roll-off start as a fraction of rf_fsr
        #[arg(long)]
        rolloff: Option<f64>,
        /// Link dispersion, ps/nm/km
        #[arg(long)]
        dispersion: Option<f64>,
        /// Link length, km
        #[arg(long)]
        length: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Shape a comb to tap weights and write spectra and the calibration trace
    Shape {
        /// Relative actuator gain error
        #[arg(long)]
        gain_error: Option<f64>,
        /// Actuator quantization step, dB
        #[arg(long, value_name = "DB")]
        quantization: Option<f64>,
        /// OSA read-noise standard deviation, dB
        #[arg(long, value_name = "DB")]
        noise: Option<f64>,
        /// Largest spread left by pre-shaping, dB
        #[arg(long, value_name = "DB")]
        max_spread: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Array factors per steering delay and the beamwidth-vs-M sweep
    Beamform {
        /// Number of array elements
        #[arg(long)]
        elements: Option<usize>,
        /// RF carrier, Hz
        #[arg(long, value_name = "HZ")]
        rf_frequency: Option<f64>,
        /// Element spacing, m [default: half wavelength]
        #[arg(long, value_name = "M")]
        spacing: Option<f64>,
        /// Inter-element delays, s (comma separated)
        #[arg(
            long,
            value_name = "S",
            value_delimiter = ',',
            allow_negative_numbers = true
        )]
        tau: Option<Vec<f64>>,
        /// Element counts of the beamwidth sweep (comma separated)
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<usize>>,
        /// Angle grid step, degrees
        #[arg(long, value_name = "DEG")]
        step: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Slice an RF spectrum into Vernier channels and apply channel weights
    Channelize {
        /// Periodic filter FSR, Hz
        #[arg(long, value_name = "HZ")]
        filter_fsr: Option<f64>,
        /// Comb FSR, Hz
        #[arg(long, value_name = "HZ")]
        comb_fsr: Option<f64>,
        /// Number of channels
        #[arg(long)]
        channels: Option<usize>,
        /// Channel bandwidth, Hz
        #[arg(long, value_name = "HZ")]
        bandwidth: Option<f64>,
        /// RF frequency of channel 0, Hz
        #[arg(long, value_name = "HZ")]
        base_offset: Option<f64>,
        /// Per-channel weights (comma separated)
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every section of a scenario
    Simulate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sinc,
    Hilbert,
    Differentiator,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Reciprocal,
    OddTaps,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(outcome) => {
            if outcome.success() {
                // A closed pipe (`| head`) is not a failure of the run.
                let mut stdout = std::io::stdout().lock();
                let _ = writeln!(stdout, "{}", outcome.summary);
                for f in &outcome.files {
                    let _ = writeln!(stdout, "  {}", f.display());
                }
            } else {
                eprintln!("{}", outcome.summary);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<CommandOutcome> {
    match command {
        Command::Design {
            kind,
            taps,
            bw,
            center,
            sigma,
            kernel,
            rolloff,
            dispersion,
            length,
            common,
        } => {
            let (scenario, out) = load(&common, |doc| {
                let design = section(doc, "design");
                if let Some(kind) = kind {
                    design.clear();
                    let name = match kind {
                        Kind::Sinc => "sinc",
                        Kind::Hilbert => "hilbert",
                        Kind::Differentiator => "differentiator",
                    };
                    design.insert("kind".into(), json!(name));
                }
                set(design, "n_taps", taps);
                set(design, "bandwidth", bw);
                set(design, "center_frequency", center);
                set(design, "apodization_sigma", sigma);
                set(
                    design,
                    "kernel",
                    kernel.map(|k| match k {
                        Kernel::Reciprocal => "reciprocal",
                        Kernel::OddTaps => "odd_taps",
                    }),
                );
                set(design, "rolloff_start", rolloff);
                if dispersion.is_some() || length.is_some() {
                    let link = section(doc, "link");
                    set(link, "dispersion_ps_nm_km", dispersion);
                    set(link, "length_km", length);
                }
            })?;
            Ok(cmd_design(&scenario, &out))
        }
        Command::Shape {
            gain_error,
            quantization,
            noise,
            max_spread,
            common,
        } => {
            let (scenario, out) = load(&common, |doc| {
                section(doc, "comb");
                let shaping = section(doc, "shaping");
                set(shaping, "osa_noise_db", noise);
                set(shaping, "max_spread_db", max_spread);
                if gain_error.is_some() || quantization.is_some() {
                    let actuator = shaping
                        .entry("actuator")
                        .or_insert_with(|| json!({}))
                        .as_object_mut();
                    if let Some(a) = actuator {
                        set(a, "gain_error", gain_error);
                        set(a, "quantization_db", quantization);
                    }
                }
            })?;
            Ok(cmd_shape(&scenario, &out))
        }
        Command::Beamform {
            elements,
            rf_frequency,
            spacing,
            tau,
            sweep,
            step,
            common,
        } => {
            let (scenario, out) = load(&common, |doc| {
                let b = section(doc, "beamformer");
                set(b, "n_elements", elements);
                set(b, "rf_frequency_hz", rf_frequency);
                set(b, "element_spacing_m", spacing);
                set(b, "steering_delays_s", tau);
                set(b, "sweep_counts", sweep);
                set(b, "angle_step_deg", step);
            })?;
            Ok(cmd_beamform(&scenario, &out))
        }
        Command::Channelize {
            filter_fsr,
            comb_fsr,
            channels,
            bandwidth,
            base_offset,
            weights,
            common,
        } => {
            let (scenario, out) = load(&common, |doc| {
                let ch = section(doc, "channelizer");
                set(ch, "weights", weights);
                let plan = ch
                    .entry("plan")
                    .or_insert_with(|| json!({}))
                    .as_object_mut();
                if let Some(p) = plan {
                    set(p, "filter_fsr", filter_fsr);
                    set(p, "comb_fsr", comb_fsr);
                    set(p, "n_channels", channels);
                    set(p, "channel_bandwidth", bandwidth);
                    set(p, "base_offset", base_offset);
                }
            })?;
            Ok(cmd_channelize(&scenario, &out))
        }
        Command::Simulate { common } => {
            if common.scenario.is_none() {
                return Err(Error::Validation {
                    field: "--scenario".into(),
                    constraint: "simulate needs a scenario file".into(),
                });
            }
            let (scenario, out) = load(&common, |_| {})?;
            Ok(simulate(&scenario, &out))
        }
    }
}

/// Reads the scenario (or starts empty), applies flag overrides and resolves it.
fn load(
    common: &Common,
    patch: impl FnOnce(&mut Map<String, Value>),
) -> Result<(Scenario, PathBuf)> {
    let (mut value, origin) = match &common.scenario {
        Some(path) => (read_json::<Value>(path)?, path.clone()),
        None => (
            json!({ "schema_version": SCHEMA_VERSION }),
            PathBuf::from("<flags>"),
        ),
    };
    let doc = value.as_object_mut().ok_or_else(|| Error::Parse {
        path: origin.clone(),
        message: "top level must be a JSON object".into(),
    })?;
    patch(doc);
    if let Some(seed) = common.seed {
        doc.insert("seed".into(), json!(seed));
    }
    let scenario = resolve_value(value, Path::new(&origin))?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| scenario.config.output_dir.clone());
    Ok((scenario, out))
}

fn section<'a>(doc: &'a mut Map<String, Value>, name: &str) -> &'a mut Map<String, Value> {
    let entry = doc.entry(name).or_insert_with(|| json!({}));
    if !entry.is_object() {
        *entry = json!({});
    }
    entry.as_object_mut().expect("just made an object")
}

fn set<T: serde::Serialize>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.into(), json!(v));
    }
}
