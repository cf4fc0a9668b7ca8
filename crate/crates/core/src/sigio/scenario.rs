//! Versioned JSON scenario files.
//!
//! A scenario names the experiments to run and their parameters. Loading
//! rejects unknown fields, fills in defaults and records the dotted path of
//! every field it defaulted. Saving writes the fully resolved form, so a saved
//! scenario reloads to an identical config with nothing defaulted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beamform::DEFAULT_ANGLE_STEP_DEG;
use crate::channelizer::{ChannelPlan, Lineshape};
use crate::comb::{
    frequency_to_wavelength, fsr_to_wavelength_spacing, EnvelopeParams,
    DEFAULT_CENTER_FREQUENCY_HZ, DEFAULT_LINE_COUNT, FSR_49_GHZ,
};
use crate::designs::{DesignRequest, DifferentiatorOptions, HilbertKernel};
use crate::shaper::{
    ActuatorModel, DEFAULT_FLOOR_DB, DEFAULT_MAX_ITER, DEFAULT_MAX_SPREAD_DB, DEFAULT_TOLERANCE_DB,
};
use crate::transversal::{tap_spacing, DispersionLink};
use crate::{Error, Result, SPEED_OF_LIGHT};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{linspace, read_json, write_json, Spectrum};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_OUTPUT_DIR: &str = "out";
/// Element counts of the default beamwidth sweep.
pub const DEFAULT_SWEEP_COUNTS: [usize; 4] = [11, 21, 41, 81];
pub const DEFAULT_SINC_TAPS: usize = 80;
pub const DEFAULT_SINC_BANDWIDTH_HZ: f64 = 1e9;
pub const DEFAULT_SINC_CENTER_HZ: f64 = 10e9;
/// Hilbert and differentiator designs.
pub const DEFAULT_ODD_TAPS: usize = 81;
/// Input grid points per channel bandwidth for the default channelizer input.
const POINTS_PER_CHANNEL: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comb: Option<CombSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link: Option<DispersionLink>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignRequest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shaping: Option<ShapingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beamformer: Option<BeamformerSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channelizer: Option<ChannelizerSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CombSection {
    pub center_frequency_hz: f64,
    pub fsr_hz: f64,
    pub n_lines: usize,
    pub envelope: EnvelopeParams,
}

impl Default for CombSection {
    fn default() -> Self {
        CombSection {
            center_frequency_hz: DEFAULT_CENTER_FREQUENCY_HZ,
            fsr_hz: FSR_49_GHZ,
            n_lines: DEFAULT_LINE_COUNT,
            envelope: default_envelope(),
        }
    }
}

fn default_envelope() -> EnvelopeParams {
    EnvelopeParams::sech2(0.0, 15.0).with_fingerprint(3.0, 7.0, 0.0)
}

/// Where the shaping targets come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapingTargets {
    /// Tap magnitudes of the scenario's design section.
    Design,
    /// Equal weights on the `n_lines` central lines.
    Flat { n_lines: usize },
    /// Explicit signed tap weights on the central lines.
    Explicit { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapingSection {
    pub targets: ShapingTargets,
    pub actuator: ActuatorModel,
    pub osa_noise_db: f64,
    pub tolerance_db: f64,
    pub max_iter: usize,
    pub max_spread_db: f64,
    pub usable_range_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamformerSection {
    pub n_elements: usize,
    pub rf_frequency_hz: f64,
    pub element_spacing_m: f64,
    /// One pattern is written per delay increment.
    pub steering_delays_s: Vec<f64>,
    pub sweep_counts: Vec<usize>,
    pub angle_step_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpectrum {
    /// Constant power on a uniform grid.
    Flat {
        start_hz: f64,
        stop_hz: f64,
        points: usize,
        power_db: f64,
    },
    /// Gaussian power fluctuations in dB drawn from the scenario seed.
    Random {
        start_hz: f64,
        stop_hz: f64,
        points: usize,
        mean_db: f64,
        std_db: f64,
    },
    /// Tones at the nearest grid points over a constant floor.
    Tones {
        start_hz: f64,
        stop_hz: f64,
        points: usize,
        floor_db: f64,
        tones: Vec<Tone>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    pub frequency_hz: f64,
    pub power_db: f64,
}

impl InputSpectrum {
    fn grid_params(&self) -> (f64, f64, usize) {
        match *self {
            InputSpectrum::Flat {
                start_hz,
                stop_hz,
                points,
                ..
            }
            | InputSpectrum::Random {
                start_hz,
                stop_hz,
                points,
                ..
            }
            | InputSpectrum::Tones {
                start_hz,
                stop_hz,
                points,
                ..
            } => (start_hz, stop_hz, points),
        }
    }

    /// Materializes the spectrum; only the random kind consumes `seed`.
    pub fn build(&self, seed: u64) -> Result<Spectrum> {
        let (start, stop, points) = self.grid_params();
        let grid = linspace(start, stop, points);
        let power = match self {
            InputSpectrum::Flat { power_db, .. } => vec![*power_db; points],
            InputSpectrum::Random {
                mean_db, std_db, ..
            } => {
                let normal = Normal::new(*mean_db, *std_db)
                    .map_err(|e| Error::invalid(format!("input noise: {e}")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..points).map(|_| normal.sample(&mut rng)).collect()
            }
            InputSpectrum::Tones {
                floor_db, tones, ..
            } => {
                let step = (stop - start) / (points - 1) as f64;
                let mut linear = vec![10f64.powf(floor_db / 10.0); points];
                let mut hit = vec![false; points];
                for t in tones {
                    let i = (((t.frequency_hz - start) / step).round() as usize).min(points - 1);
                    let p = 10f64.powf(t.power_db / 10.0);
                    linear[i] = if hit[i] { linear[i] + p } else { p };
                    hit[i] = true;
                }
                linear.iter().map(|p| 10.0 * p.log10()).collect()
            }
        };
        Spectrum::new(grid, power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelizerSection {
    pub plan: ChannelPlan,
    pub input: InputSpectrum,
    /// Per-channel weights; 0 switches a channel off.
    pub weights: Vec<f64>,
}

impl ScenarioConfig {
    /// A config with no sections.
    pub fn empty(seed: u64) -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            seed,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            comb: None,
            link: None,
            design: None,
            shaping: None,
            beamformer: None,
            channelizer: None,
        }
    }

    /// The comb section, or the default comb when absent.
    pub fn comb_or_default(&self) -> CombSection {
        self.comb.unwrap_or_default()
    }

    pub fn link_or_default(&self) -> DispersionLink {
        self.link.unwrap_or_default()
    }

    /// Tap spacing from the link and the comb's line spacing at its center.
    pub fn tap_spacing(&self) -> Result<f64> {
        let comb = self.comb_or_default();
        let spacing = fsr_to_wavelength_spacing(
            comb.fsr_hz,
            frequency_to_wavelength(comb.center_frequency_hz),
        )?;
        tap_spacing(&self.link_or_default(), spacing)
    }
}

/// A loaded scenario plus the dotted paths of every defaulted field.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub defaulted: Vec<String>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    resolve_value(read_json(path)?, path)
}

/// Parses and resolves scenario JSON held in memory.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let origin = Path::new("<memory>");
    let value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    resolve_value(value, origin)
}

/// Resolves an already parsed JSON document; `origin` labels diagnostics.
pub fn resolve_value(value: serde_json::Value, origin: &Path) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_path_to_error::deserialize(value).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: format!("at `{}`: {}", e.path(), e.inner()),
    })?;
    resolve(doc)
}

pub fn save_scenario(config: &ScenarioConfig, path: impl AsRef<Path>) -> Result<()> {
    write_json(config, path)
}

// On-disk form: every defaultable field is optional.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    schema_version: u32,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    comb: Option<CombDoc>,
    link: Option<LinkDoc>,
    design: Option<DesignDoc>,
    shaping: Option<ShapingDoc>,
    beamformer: Option<BeamformerDoc>,
    channelizer: Option<ChannelizerDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CombDoc {
    center_frequency_hz: Option<f64>,
    fsr_hz: Option<f64>,
    n_lines: Option<usize>,
    envelope: Option<EnvelopeParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    dispersion_ps_nm_km: Option<f64>,
    length_km: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DesignDoc {
    Sinc {
        n_taps: Option<usize>,
        bandwidth: Option<f64>,
        center_frequency: Option<f64>,
        apodization_sigma: Option<f64>,
    },
    Hilbert {
        n_taps: Option<usize>,
        kernel: Option<HilbertKernel>,
    },
    Differentiator {
        n_taps: Option<usize>,
        rolloff_start: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActuatorDoc {
    gain_error: Option<f64>,
    quantization_db: Option<f64>,
    floor_db: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapingDoc {
    targets: Option<ShapingTargets>,
    actuator: Option<ActuatorDoc>,
    osa_noise_db: Option<f64>,
    tolerance_db: Option<f64>,
    max_iter: Option<usize>,
    max_spread_db: Option<f64>,
    usable_range_db: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeamformerDoc {
    n_elements: Option<usize>,
    rf_frequency_hz: Option<f64>,
    element_spacing_m: Option<f64>,
    steering_delays_s: Option<Vec<f64>>,
    sweep_counts: Option<Vec<usize>>,
    angle_step_deg: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    comb_fsr: Option<f64>,
    filter_fsr: f64,
    n_channels: usize,
    base_offset: Option<f64>,
    channel_bandwidth: Option<f64>,
    lineshape: Option<Lineshape>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelizerDoc {
    plan: PlanDoc,
    input: Option<InputSpectrum>,
    weights: Option<Vec<f64>>,
}

/// Records defaulted fields under a dotted prefix.
struct Defaults {
    prefix: String,
    log: Vec<String>,
}

impl Defaults {
    fn take<T>(&mut self, field: &str, value: Option<T>, default: impl FnOnce() -> T) -> T {
        value.unwrap_or_else(|| {
            self.log.push(format!("{}{field}", self.prefix));
            default()
        })
    }

    fn section(&mut self, name: &str) {
        self.prefix = format!("{name}.");
    }
}

fn positive(field: &str, value: f64, constraint: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, constraint))
    }
}

fn finite(field: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("{field} finite")))
    }
}

fn resolve(doc: ScenarioDoc) -> Result<Scenario> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::validation(
            "schema_version",
            format!("schema_version == {SCHEMA_VERSION}"),
        ));
    }
    let any_section = doc.comb.is_some()
        || doc.link.is_some()
        || doc.design.is_some()
        || doc.shaping.is_some()
        || doc.beamformer.is_some()
        || doc.channelizer.is_some();
    if !any_section {
        return Err(Error::validation(
            "scenario",
            "at least one task section present",
        ));
    }

    let mut d = Defaults {
        prefix: String::new(),
        log: Vec::new(),
    };
    let seed = d.take("seed", doc.seed, || 0);
    let output_dir = d.take("output_dir", doc.output_dir, || {
        PathBuf::from(DEFAULT_OUTPUT_DIR)
    });

    let comb = doc.comb.map(|c| resolve_comb(c, &mut d)).transpose()?;
    let link = doc.link.map(|l| resolve_link(l, &mut d)).transpose()?;
    let design = doc.design.map(|x| resolve_design(x, &mut d)).transpose()?;
    let shaping = match doc.shaping {
        Some(s) => {
            if comb.is_none() {
                return Err(Error::validation(
                    "shaping",
                    "shaping requires a comb section",
                ));
            }
            Some(resolve_shaping(
                s,
                design.is_some(),
                comb.unwrap_or_default(),
                &mut d,
            )?)
        }
        None => None,
    };
    let beamformer = doc
        .beamformer
        .map(|b| resolve_beamformer(b, &mut d))
        .transpose()?;
    let comb_fsr = comb.map(|c| c.fsr_hz);
    let channelizer = doc
        .channelizer
        .map(|c| resolve_channelizer(c, comb_fsr, &mut d))
        .transpose()?;

    Ok(Scenario {
        config: ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            seed,
            output_dir,
            comb,
            link,
            design,
            shaping,
            beamformer,
            channelizer,
        },
        defaulted: d.log,
    })
}

fn resolve_comb(c: CombDoc, d: &mut Defaults) -> Result<CombSection> {
    d.section("comb");
    let base = CombSection::default();
    let s = CombSection {
        center_frequency_hz: d.take("center_frequency_hz", c.center_frequency_hz, || {
            base.center_frequency_hz
        }),
        fsr_hz: d.take("fsr_hz", c.fsr_hz, || base.fsr_hz),
        n_lines: d.take("n_lines", c.n_lines, || base.n_lines),
        envelope: d.take("envelope", c.envelope, default_envelope),
    };
    positive(
        "comb.center_frequency_hz",
        s.center_frequency_hz,
        "center_frequency > 0",
    )?;
    positive("comb.fsr_hz", s.fsr_hz, "fsr > 0")?;
    if s.n_lines < 2 {
        return Err(Error::validation("comb.n_lines", "n_lines >= 2"));
    }
    Ok(s)
}

fn resolve_link(l: LinkDoc, d: &mut Defaults) -> Result<DispersionLink> {
    d.section("link");
    let base = DispersionLink::default();
    let link = DispersionLink {
        dispersion_ps_nm_km: d.take("dispersion_ps_nm_km", l.dispersion_ps_nm_km, || {
            base.dispersion_ps_nm_km
        }),
        length_km: d.take("length_km", l.length_km, || base.length_km),
    };
    finite("link.dispersion_ps_nm_km", link.dispersion_ps_nm_km)?;
    if link.dispersion_ps_nm_km == 0.0 {
        return Err(Error::validation(
            "link.dispersion_ps_nm_km",
            "dispersion != 0",
        ));
    }
    positive("link.length_km", link.length_km, "length > 0")?;
    Ok(link)
}

fn resolve_design(x: DesignDoc, d: &mut Defaults) -> Result<DesignRequest> {
    d.section("design");
    let req = match x {
        DesignDoc::Sinc {
            n_taps,
            bandwidth,
            center_frequency,
            apodization_sigma,
        } => {
            let n_taps = d.take("n_taps", n_taps, || DEFAULT_SINC_TAPS);
            let bandwidth = d.take("bandwidth", bandwidth, || DEFAULT_SINC_BANDWIDTH_HZ);
            let center_frequency = d.take("center_frequency", center_frequency, || {
                DEFAULT_SINC_CENTER_HZ
            });
            positive("design.bandwidth", bandwidth, "bandwidth > 0")?;
            if !(center_frequency >= 0.0) || !center_frequency.is_finite() {
                return Err(Error::validation(
                    "design.center_frequency",
                    "center_frequency >= 0",
                ));
            }
            let sigma = d.take("apodization_sigma", apodization_sigma, || {
                n_taps as f64 / 6.0
            });
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return Err(Error::validation("design.apodization_sigma", "sigma >= 0"));
            }
            DesignRequest::Sinc {
                n_taps,
                bandwidth,
                center_frequency,
                apodization_sigma: sigma,
            }
        }
        DesignDoc::Hilbert { n_taps, kernel } => DesignRequest::Hilbert {
            n_taps: d.take("n_taps", n_taps, || DEFAULT_ODD_TAPS),
            kernel: d.take("kernel", kernel, HilbertKernel::default),
        },
        DesignDoc::Differentiator {
            n_taps,
            rolloff_start,
        } => {
            let n_taps = d.take("n_taps", n_taps, || DEFAULT_ODD_TAPS);
            let r = d.take("rolloff_start", rolloff_start, || {
                DifferentiatorOptions::default().rolloff_start
            });
            if !(r > 0.0 && r <= 0.5) {
                return Err(Error::validation(
                    "design.rolloff_start",
                    "0 < rolloff_start <= 0.5",
                ));
            }
            DesignRequest::Differentiator {
                n_taps,
                rolloff_start: r,
            }
        }
    };
    if req.n_taps() < 1 {
        return Err(Error::validation("design.n_taps", "n_taps >= 1"));
    }
    Ok(req)
}

fn resolve_shaping(
    s: ShapingDoc,
    have_design: bool,
    comb: CombSection,
    d: &mut Defaults,
) -> Result<ShapingSection> {
    d.section("shaping");
    let targets = d.take("targets", s.targets, || {
        if have_design {
            ShapingTargets::Design
        } else {
            ShapingTargets::Flat {
                n_lines: comb.n_lines,
            }
        }
    });
    match &targets {
        ShapingTargets::Design if !have_design => {
            return Err(Error::validation(
                "shaping.targets",
                "design targets require a design section",
            ))
        }
        ShapingTargets::Flat { n_lines } if *n_lines < 1 || *n_lines > comb.n_lines => {
            return Err(Error::validation(
                "shaping.targets.n_lines",
                "1 <= n_lines <= comb.n_lines",
            ))
        }
        ShapingTargets::Explicit { weights } => {
            if weights.is_empty() || weights.len() > comb.n_lines {
                return Err(Error::validation(
                    "shaping.targets.weights",
                    "1 <= len(weights) <= comb.n_lines",
                ));
            }
            if weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::validation(
                    "shaping.targets.weights",
                    "weights finite",
                ));
            }
        }
        _ => {}
    }
    let a = s.actuator.unwrap_or(ActuatorDoc {
        gain_error: None,
        quantization_db: None,
        floor_db: None,
    });
    d.section("shaping.actuator");
    let actuator = ActuatorModel {
        gain_error: d.take("gain_error", a.gain_error, || 0.0),
        quantization_db: d.take("quantization_db", a.quantization_db, || 0.0),
        floor_db: d.take("floor_db", a.floor_db, || DEFAULT_FLOOR_DB),
    };
    actuator.validate().map_err(|e| match e {
        Error::Validation { field, constraint } => {
            Error::validation(format!("shaping.actuator.{field}"), constraint)
        }
        other => other,
    })?;
    d.section("shaping");
    let max_spread_db = d.take("max_spread_db", s.max_spread_db, || DEFAULT_MAX_SPREAD_DB);
    let section = ShapingSection {
        targets,
        actuator,
        osa_noise_db: d.take("osa_noise_db", s.osa_noise_db, || 0.0),
        tolerance_db: d.take("tolerance_db", s.tolerance_db, || DEFAULT_TOLERANCE_DB),
        max_iter: d.take("max_iter", s.max_iter, || DEFAULT_MAX_ITER),
        max_spread_db,
        usable_range_db: d.take("usable_range_db", s.usable_range_db, || 2.0 * max_spread_db),
    };
    if !(section.osa_noise_db >= 0.0) || !section.osa_noise_db.is_finite() {
        return Err(Error::validation("shaping.osa_noise_db", "osa_noise >= 0"));
    }
    positive(
        "shaping.tolerance_db",
        section.tolerance_db,
        "tolerance > 0",
    )?;
    if section.max_iter < 1 {
        return Err(Error::validation("shaping.max_iter", "max_iter >= 1"));
    }
    positive(
        "shaping.max_spread_db",
        section.max_spread_db,
        "max_spread > 0",
    )?;
    if !(section.usable_range_db >= section.max_spread_db) {
        return Err(Error::validation(
            "shaping.usable_range_db",
            "usable_range >= max_spread",
        ));
    }
    Ok(section)
}

fn resolve_beamformer(b: BeamformerDoc, d: &mut Defaults) -> Result<BeamformerSection> {
    d.section("beamformer");
    let rf = d.take("rf_frequency_hz", b.rf_frequency_hz, || 10e9);
    positive("beamformer.rf_frequency_hz", rf, "rf_frequency > 0")?;
    let s = BeamformerSection {
        n_elements: d.take("n_elements", b.n_elements, || 16),
        rf_frequency_hz: rf,
        element_spacing_m: d.take("element_spacing_m", b.element_spacing_m, || {
            0.5 * SPEED_OF_LIGHT / rf
        }),
        steering_delays_s: d.take("steering_delays_s", b.steering_delays_s, || vec![0.0]),
        sweep_counts: d.take("sweep_counts", b.sweep_counts, || {
            DEFAULT_SWEEP_COUNTS.to_vec()
        }),
        angle_step_deg: d.take("angle_step_deg", b.angle_step_deg, || {
            DEFAULT_ANGLE_STEP_DEG
        }),
    };
    if s.n_elements < 2 {
        return Err(Error::validation("beamformer.n_elements", "M >= 2"));
    }
    positive("beamformer.element_spacing_m", s.element_spacing_m, "d > 0")?;
    if s.steering_delays_s.iter().any(|t| !t.is_finite()) {
        return Err(Error::validation(
            "beamformer.steering_delays_s",
            "tau finite",
        ));
    }
    if s.sweep_counts.iter().any(|&m| m < 2) {
        return Err(Error::validation("beamformer.sweep_counts", "M >= 2"));
    }
    if !(s.angle_step_deg > 0.0 && s.angle_step_deg <= 1.0) {
        return Err(Error::validation(
            "beamformer.angle_step_deg",
            "0 < angle_step <= 1",
        ));
    }
    Ok(s)
}

fn resolve_channelizer(
    c: ChannelizerDoc,
    comb_fsr: Option<f64>,
    d: &mut Defaults,
) -> Result<ChannelizerSection> {
    d.section("channelizer.plan");
    let p = c.plan;
    let comb_fsr = d.take("comb_fsr", p.comb_fsr, || comb_fsr.unwrap_or(FSR_49_GHZ));
    let spacing = (p.filter_fsr - comb_fsr).abs();
    let bandwidth = d.take("channel_bandwidth", p.channel_bandwidth, || spacing);
    let plan = ChannelPlan {
        comb_fsr,
        filter_fsr: p.filter_fsr,
        n_channels: p.n_channels,
        base_offset: d.take("base_offset", p.base_offset, || 0.0),
        channel_bandwidth: bandwidth,
        lineshape: d.take("lineshape", p.lineshape, || Lineshape::Lorentzian {
            fwhm: bandwidth,
        }),
    };
    plan.validate().map_err(|e| match e {
        Error::Validation { field, constraint } => {
            Error::validation(format!("channelizer.plan.{field}"), constraint)
        }
        other => other,
    })?;

    d.section("channelizer");
    let input = d.take("input", c.input, || default_input(&plan));
    let (start, stop, points) = input.grid_params();
    finite("channelizer.input.start_hz", start)?;
    if !(stop > start) || !stop.is_finite() {
        return Err(Error::validation(
            "channelizer.input.stop_hz",
            "stop_hz > start_hz",
        ));
    }
    if points < 2 {
        return Err(Error::validation("channelizer.input.points", "points >= 2"));
    }
    match &input {
        InputSpectrum::Random { std_db, .. } if !(*std_db >= 0.0) || !std_db.is_finite() => {
            return Err(Error::validation("channelizer.input.std_db", "std_db >= 0"))
        }
        InputSpectrum::Tones { tones, .. }
            if tones
                .iter()
                .any(|t| t.frequency_hz < start || t.frequency_hz > stop) =>
        {
            return Err(Error::validation(
                "channelizer.input.tones",
                "tones inside [start_hz, stop_hz]",
            ))
        }
        _ => {}
    }

    let weights = d.take("weights", c.weights, || vec![1.0; plan.n_channels]);
    if weights.len() != plan.n_channels {
        return Err(Error::validation(
            "channelizer.weights",
            "len(weights) == n_channels",
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::validation("channelizer.weights", "weights >= 0"));
    }
    Ok(ChannelizerSection {
        plan,
        input,
        weights,
    })
}

/// Flat 0 dB input spanning every channel with one bandwidth of margin.
fn default_input(plan: &ChannelPlan) -> InputSpectrum {
    let last = plan.base_offset + (plan.n_channels - 1) as f64 * plan.channel_spacing();
    let margin = match plan.lineshape {
        Lineshape::Rectangular => plan.channel_bandwidth,
        Lineshape::Lorentzian { fwhm } => fwhm.max(plan.channel_bandwidth),
    };
    let start = plan.base_offset.min(last) - margin;
    let stop = plan.base_offset.max(last) + margin;
    let step = plan.channel_bandwidth / POINTS_PER_CHANNEL;
    InputSpectrum::Flat {
        start_hz: start,
        stop_hz: stop,
        points: ((stop - start) / step).round() as usize + 1,
        power_db: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comb_only_gets_defaults() {
        let s = parse_scenario(r#"{"schema_version": 1, "comb": {"fsr_hz": 200e9}}"#).unwrap();
        let comb = s.config.comb.unwrap();
        assert_eq!(comb.fsr_hz, 200e9);
        assert_eq!(comb.n_lines, DEFAULT_LINE_COUNT);
        assert_eq!(comb.center_frequency_hz, DEFAULT_CENTER_FREQUENCY_HZ);
        for f in [
            "seed",
            "output_dir",
            "comb.center_frequency_hz",
            "comb.n_lines",
            "comb.envelope",
        ] {
            assert!(
                s.defaulted.iter().any(|x| x == f),
                "{f} missing from {:?}",
                s.defaulted
            );
        }
        assert!(!s.defaulted.iter().any(|x| x == "comb.fsr_hz"));
    }

    #[test]
    fn zero_fsr_names_the_constraint() {
        let err = parse_scenario(r#"{"schema_version": 1, "comb": {"fsr_hz": 0}}"#).unwrap_err();
        assert!(err.to_string().contains("fsr > 0"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_fields_are_rejected_with_a_path() {
        let err = parse_scenario(r#"{"schema_version": 1, "comb": {"fsr": 49e9}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("comb") && msg.contains("fsr"), "{msg}");
    }

    #[test]
    fn requires_a_section_and_known_version() {
        assert!(parse_scenario(r#"{"schema_version": 1, "seed": 3}"#).is_err());
        assert!(parse_scenario(r#"{"schema_version": 2, "comb": {}}"#).is_err());
        assert!(parse_scenario(r#"{"comb": {}}"#).is_err());
    }

    #[test]
    fn shaping_needs_a_comb() {
        let err = parse_scenario(r#"{"schema_version": 1, "shaping": {}}"#).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
    }

    #[test]
    fn channelizer_defaults_cover_the_plan() {
        let s = parse_scenario(
            r#"{"schema_version": 1, "channelizer": {"plan": {"filter_fsr": 51e9, "n_channels": 4, "base_offset": 2e9}}}"#,
        )
        .unwrap();
        let ch = s.config.channelizer.unwrap();
        assert_eq!(ch.plan.channel_bandwidth, 2e9);
        assert_eq!(ch.weights, vec![1.0; 4]);
        let (start, stop, _) = ch.input.grid_params();
        assert!(start <= 0.0 && stop >= 10e9);
        assert!(s
            .defaulted
            .contains(&"channelizer.plan.lineshape".to_string()));
    }

    #[test]
    fn weights_length_is_checked() {
        let err = parse_scenario(
            r#"{"schema_version": 1, "channelizer": {"plan": {"filter_fsr": 51e9, "n_channels": 4}, "weights": [1, 0]}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_channels"), "{err}");
    }

    #[test]
    fn round_trip_is_identical() {
        let text = r#"{
            "schema_version": 1,
            "seed": 7,
            "comb": {},
            "link": {"length_km": 2},
            "design": {"kind": "sinc", "n_taps": 40, "bandwidth": 1e9, "center_frequency": 5e9},
            "shaping": {"actuator": {"gain_error": 0.1}, "osa_noise_db": 0.02},
            "beamformer": {"steering_delays_s": [0, 2e-11]},
            "channelizer": {"plan": {"filter_fsr": 49.5e9, "n_channels": 6,
                "lineshape": {"kind": "rectangular"}},
                "input": {"kind": "random", "start_hz": 0, "stop_hz": 4e9, "points": 401,
                    "mean_db": -10, "std_db": 1}}
        }"#;
        let first = parse_scenario(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        save_scenario(&first.config, &path).unwrap();
        let second = load_scenario(&path).unwrap();
        assert_eq!(second.config, first.config);
        assert!(second.defaulted.is_empty(), "{:?}", second.defaulted);
    }

    #[test]
    fn design_defaults_are_recorded() {
        let s = parse_scenario(
            r#"{"schema_version": 1, "design": {"kind": "sinc", "center_frequency": 5e9}}"#,
        )
        .unwrap();
        assert_eq!(
            s.config.design,
            Some(DesignRequest::Sinc {
                n_taps: 80,
                bandwidth: 1e9,
                center_frequency: 5e9,
                apodization_sigma: 80.0 / 6.0,
            })
        );
        for f in [
            "design.n_taps",
            "design.bandwidth",
            "design.apodization_sigma",
        ] {
            assert!(s.defaulted.iter().any(|x| x == f), "{f}");
        }
    }

    #[test]
    fn input_spectra() {
        let flat = InputSpectrum::Flat {
            start_hz: 0.0,
            stop_hz: 1e9,
            points: 11,
            power_db: -3.0,
        };
        let s = flat.build(0).unwrap();
        assert_eq!(s.len(), 11);
        assert!(s.power_db().iter().all(|&p| p == -3.0));

        let random = InputSpectrum::Random {
            start_hz: 0.0,
            stop_hz: 1e9,
            points: 2001,
            mean_db: -10.0,
            std_db: 2.0,
        };
        let a = random.build(5).unwrap();
        assert_eq!(a, random.build(5).unwrap());
        assert_ne!(a, random.build(6).unwrap());
        let mean = a.power_db().iter().sum::<f64>() / 2001.0;
        assert!((mean + 10.0).abs() < 0.2, "{mean}");

        let tones = InputSpectrum::Tones {
            start_hz: 0.0,
            stop_hz: 1e9,
            points: 101,
            floor_db: -80.0,
            tones: vec![Tone {
                frequency_hz: 0.301e9,
                power_db: 0.0,
            }],
        };
        let t = tones.build(0).unwrap();
        assert!(t.power_db()[30].abs() < 1e-12);
        assert_eq!(t.power_db()[31], -80.0);
    }

    #[test]
    fn default_tap_spacing() {
        let t = ScenarioConfig::empty(0).tap_spacing().unwrap();
        assert!((t - 26.70e-12).abs() < 0.01e-12, "{t}");
    }
}
