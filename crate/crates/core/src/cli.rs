//! End-to-end experiments composed from the library modules.
//!
//! Each command writes plot-ready CSV and JSON under an output directory,
//! together with the resolved `scenario.json` and a `manifest.json` listing
//! every file written. Re-running `simulate --scenario <out>/scenario.json`
//! reproduces the outputs byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beamform::{
    angle_grid, array_factor, beamwidth_3db, beamwidth_sweep, steering_angle, BeamformerConfig,
};
use crate::channelizer::{
    apply_binary_weights, channel_centers, reconstruct, slice_spectrum, transmission,
};
use crate::comb::{frequency_to_wavelength, generate_soliton_crystal_comb, CombSpec};
use crate::designs::DesignRequest;
use crate::shaper::{
    feedback_calibrate, pre_shape_with, targets_from_taps, CalibrationSettings, PreShapeOptions,
    DEFAULT_FLOOR_DB,
};
use crate::sigio::{
    format_number, save_scenario, write_csv, write_json, CsvExport, Scenario, ScenarioConfig,
    ShapingTargets, Spectrum,
};
use crate::transversal::{period_grid, rf_fsr, sidelobe_level, transfer_function};
use crate::{Error, Result};

/// Points per period in the written response CSV.
pub const RESPONSE_POINTS: usize = 4096;
/// Points per period used for the sidelobe metric.
const SIDELOBE_POINTS: usize = 1 << 15;

pub const SCENARIO_FILE: &str = "scenario.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug)]
pub struct CommandOutcome {
    pub exit_code: i32,
    /// Every file written, relative to the output directory.
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl CommandOutcome {
    pub fn success(&self) -> bool {
        self.exit_code == 0
    }
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub status: String,
    pub exit_code: i32,
    pub seed: u64,
    pub schema_version: u32,
    pub scenario: PathBuf,
    pub defaulted: Vec<String>,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// A generic CSV table for command outputs.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvExport for Table {
    fn header(&self) -> Vec<&'static str> {
        self.header.clone()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows.clone()
    }
}

struct Outputs {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn prepare(&self, rel: &Path) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(path)
    }

    fn csv(&mut self, rel: impl AsRef<Path>, table: &dyn CsvExport) -> Result<()> {
        let rel = rel.as_ref();
        write_csv(table, self.prepare(rel)?)?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, rel: impl AsRef<Path>, value: &T) -> Result<()> {
        let rel = rel.as_ref();
        write_json(value, self.prepare(rel)?)?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }
}

type Body<'a> = dyn FnOnce(&ScenarioConfig, &mut Outputs) -> Result<Vec<String>> + 'a;

/// Writes the scenario, runs `body`, then writes the manifest, on failure too.
fn execute(command: &str, scenario: &Scenario, out: &Path, body: Box<Body<'_>>) -> CommandOutcome {
    let mut outputs = Outputs {
        root: out.to_path_buf(),
        files: Vec::new(),
    };
    let result = outputs
        .prepare(Path::new(SCENARIO_FILE))
        .and_then(|p| save_scenario(&scenario.config, p))
        .and_then(|()| {
            outputs.files.push(PathBuf::from(SCENARIO_FILE));
            body(&scenario.config, &mut outputs)
        });
    let (exit_code, status, summary) = match result {
        Ok(lines) => (0, "ok", lines),
        Err(e) => (e.exit_code(), "failed", vec![format!("error: {e}")]),
    };
    let mut files = outputs.files.clone();
    files.push(PathBuf::from(MANIFEST_FILE));
    let manifest = RunManifest {
        command: command.to_string(),
        status: status.to_string(),
        exit_code,
        seed: scenario.config.seed,
        schema_version: scenario.config.schema_version,
        scenario: PathBuf::from(SCENARIO_FILE),
        defaulted: scenario.defaulted.clone(),
        files: files.clone(),
        summary: summary.clone(),
    };
    let (exit_code, summary) = match outputs.json(MANIFEST_FILE, &manifest) {
        Ok(()) => (exit_code, summary),
        Err(e) if exit_code == 0 => (e.exit_code(), vec![format!("error: {e}")]),
        Err(_) => (exit_code, summary),
    };
    CommandOutcome {
        exit_code,
        files: outputs.files,
        summary: summary.join("\n"),
    }
}

/// Taps JSON, delay-compensated response CSV and metrics JSON for the
/// scenario's design section.
pub fn cmd_design(scenario: &Scenario, out: &Path) -> CommandOutcome {
    execute(
        "design",
        scenario,
        out,
        Box::new(|c, o| run_design(c, o, Path::new(""))),
    )
}

/// Comb spectra before and after shaping plus the calibration trace.
pub fn cmd_shape(scenario: &Scenario, out: &Path) -> CommandOutcome {
    execute(
        "shape",
        scenario,
        out,
        Box::new(|c, o| run_shape(c, o, Path::new(""))),
    )
}

/// One array-factor CSV per steering delay and the beamwidth sweep.
pub fn cmd_beamform(scenario: &Scenario, out: &Path) -> CommandOutcome {
    execute(
        "beamform",
        scenario,
        out,
        Box::new(|c, o| run_beamform(c, o, Path::new(""))),
    )
}

/// Per-channel CSVs, the composite transmission and the paired comb.
pub fn cmd_channelize(scenario: &Scenario, out: &Path) -> CommandOutcome {
    execute(
        "channelize",
        scenario,
        out,
        Box::new(|c, o| run_channelize(c, o, Path::new(""))),
    )
}

/// Every section present in the scenario, each in its own subdirectory.
pub fn simulate(scenario: &Scenario, out: &Path) -> CommandOutcome {
    execute(
        "simulate",
        scenario,
        out,
        Box::new(|c, o| {
            let mut lines = Vec::new();
            if c.comb.is_some() {
                lines.extend(run_comb(c, o, Path::new("comb"))?);
            }
            if c.design.is_some() {
                lines.extend(run_design(c, o, Path::new("design"))?);
            }
            if c.shaping.is_some() {
                lines.extend(run_shape(c, o, Path::new("shape"))?);
            }
            if c.beamformer.is_some() {
                lines.extend(run_beamform(c, o, Path::new("beamform"))?);
            }
            if c.channelizer.is_some() {
                lines.extend(run_channelize(c, o, Path::new("channelize"))?);
            }
            if lines.is_empty() {
                lines.push("nothing to run: the scenario only configures the link".into());
            }
            Ok(lines)
        }),
    )
}

fn comb_table(comb: &CombSpec) -> Table {
    Table {
        header: vec!["index", "frequency_hz", "wavelength_nm", "power_dbm"],
        rows: comb
            .lines()
            .iter()
            .map(|l| {
                vec![
                    l.index.to_string(),
                    format_number(l.frequency),
                    format_number(frequency_to_wavelength(l.frequency) * 1e9),
                    format_number(l.power_dbm),
                ]
            })
            .collect(),
    }
}

fn scenario_comb(config: &ScenarioConfig) -> Result<CombSpec> {
    let c = config.comb_or_default();
    generate_soliton_crystal_comb(c.center_frequency_hz, c.fsr_hz, c.n_lines, &c.envelope)
}

fn run_comb(config: &ScenarioConfig, o: &mut Outputs, dir: &Path) -> Result<Vec<String>> {
    let comb = scenario_comb(config)?;
    o.csv(dir.join("comb.csv"), &comb_table(&comb))?;
    Ok(vec![format!(
        "comb: {} lines at {:.3} GHz spacing, spread {:.2} dB",
        comb.len(),
        comb.fsr() / 1e9,
        comb.spread_db()
    )])
}

#[derive(Serialize)]
struct DesignMetrics {
    request: DesignRequest,
    tap_spacing_s: f64,
    rf_fsr_hz: f64,
    q_rf: Option<f64>,
    sidelobe_level_db: Option<f64>,
    achieved_center_hz: Option<f64>,
    achieved_bandwidth_hz: Option<f64>,
    peak_frequency_hz: f64,
    grid_step_hz: f64,
    normalization: f64,
    notes: String,
    seed: u64,
}

fn run_design(config: &ScenarioConfig, o: &mut Outputs, dir: &Path) -> Result<Vec<String>> {
    let request = config
        .design
        .ok_or_else(|| Error::validation("design", "design section present"))?;
    let t = config.tap_spacing()?;
    let result = request.design(t)?;
    let taps = &result.taps;
    let fsr = rf_fsr(taps);

    let response = transfer_function(taps, &period_grid(taps, 0.0, RESPONSE_POINTS))?
        .delay_compensated(taps.center_delay());
    let is_bandpass = matches!(request, DesignRequest::Sinc { .. });
    let (q, sidelobe) = if is_bandpass {
        let dense = transfer_function(taps, &period_grid(taps, 0.0, SIDELOBE_POINTS))?;
        (
            result.achieved_bandwidth.map(|b| fsr / b),
            Some(sidelobe_level(&dense)),
        )
    } else {
        (None, None)
    };

    o.json(dir.join("taps.json"), taps)?;
    o.csv(dir.join("response.csv"), &response)?;
    o.json(
        dir.join("metrics.json"),
        &DesignMetrics {
            request,
            tap_spacing_s: taps.tap_spacing(),
            rf_fsr_hz: fsr,
            q_rf: q,
            sidelobe_level_db: sidelobe.filter(|s| s.is_finite()),
            achieved_center_hz: result.achieved_center,
            achieved_bandwidth_hz: result.achieved_bandwidth,
            peak_frequency_hz: result.peak_frequency,
            grid_step_hz: result.grid_step,
            normalization: result.normalization,
            notes: result.notes.clone(),
            seed: config.seed,
        },
    )?;

    let mut line = format!(
        "design: {} taps, T = {:.3} ps, rf_fsr = {:.3} GHz",
        taps.len(),
        t * 1e12,
        fsr / 1e9
    );
    if let (true, Some(c), Some(b)) = (
        is_bandpass,
        result.achieved_center,
        result.achieved_bandwidth,
    ) {
        line += &format!(", passband {:.3} GHz wide at {:.3} GHz", b / 1e9, c / 1e9);
    }
    if let Some(q) = q {
        line += &format!(", Q_RF {q:.2}");
    }
    Ok(vec![line])
}

fn run_shape(config: &ScenarioConfig, o: &mut Outputs, dir: &Path) -> Result<Vec<String>> {
    let s = config
        .shaping
        .as_ref()
        .ok_or_else(|| Error::validation("shaping", "shaping section present"))?;
    let comb = scenario_comb(config)?;
    let pre = pre_shape_with(
        &comb,
        &PreShapeOptions {
            max_spread_db: s.max_spread_db,
            usable_range_db: s.usable_range_db,
        },
    )?;
    let flattened = pre.apply(&comb)?;

    let coefficients = match &s.targets {
        ShapingTargets::Design => {
            let request = config
                .design
                .ok_or_else(|| Error::validation("shaping.targets", "design section present"))?;
            request
                .design(config.tap_spacing()?)?
                .taps
                .coefficients()
                .to_vec()
        }
        ShapingTargets::Flat { n_lines } => vec![1.0; *n_lines],
        ShapingTargets::Explicit { weights } => weights.clone(),
    };
    let (targets, signs) = targets_from_taps(&coefficients)?;
    let selected = flattened.central_lines(targets.len())?;
    let settings = CalibrationSettings {
        osa_noise_db: s.osa_noise_db,
        tolerance_db: s.tolerance_db,
        max_iter: s.max_iter,
        seed: config.seed,
    };
    let (plan, report) =
        feedback_calibrate(&flattened, &selected, &targets, &s.actuator, &settings)?;
    let shaped = plan.shaped_comb(&flattened)?;

    let mut shaped_table = comb_table(&shaped);
    shaped_table.header.extend(["target_weight", "sign"]);
    for ((row, w), sign) in shaped_table.rows.iter_mut().zip(&targets).zip(&signs) {
        row.push(format_number(*w));
        row.push(format_number(*sign));
    }

    o.csv(dir.join("comb_initial.csv"), &comb_table(&comb))?;
    o.csv(dir.join("comb_flattened.csv"), &comb_table(&flattened))?;
    o.csv(dir.join("shaped_comb.csv"), &shaped_table)?;
    o.csv(dir.join("calibration_trace.csv"), &report)?;
    o.json(dir.join("shaping_plan.json"), &plan)?;

    let state = if report.converged {
        "converged"
    } else {
        "did not converge"
    };
    Ok(vec![format!(
        "shape: {} of {} lines, spread {:.2} dB after pre-shaping, {state} in {} iterations (max error {:.3} dB)",
        selected.len(),
        comb.len(),
        flattened.spread_db(),
        report.iterations,
        report.final_error_db
    )])
}

fn run_beamform(config: &ScenarioConfig, o: &mut Outputs, dir: &Path) -> Result<Vec<String>> {
    let b = config
        .beamformer
        .as_ref()
        .ok_or_else(|| Error::validation("beamformer", "beamformer section present"))?;
    let grid = angle_grid(b.angle_step_deg);
    let base = BeamformerConfig {
        n_elements: b.n_elements,
        element_spacing: b.element_spacing_m,
        rf_frequency: b.rf_frequency_hz,
        inter_element_delay: 0.0,
    };

    let mut steering = Table {
        header: vec![
            "pattern",
            "tau_s",
            "expected_angle_deg",
            "argmax_deg",
            "theta_3db_deg",
        ],
        rows: Vec::new(),
    };
    let mut lines = Vec::new();
    for (i, &tau) in b.steering_delays_s.iter().enumerate() {
        let expected = steering_angle(tau, b.element_spacing_m)?;
        let cfg = BeamformerConfig {
            inter_element_delay: tau,
            ..base
        };
        let pattern = array_factor(&cfg, &grid)?;
        let width = beamwidth_3db(&pattern)?;
        o.csv(dir.join(format!("pattern_{i:02}.csv")), &pattern)?;
        steering.rows.push(vec![
            i.to_string(),
            format_number(tau),
            format_number(expected),
            format_number(pattern.argmax_deg()),
            format_number(width),
        ]);
        lines.push(format!(
            "beamform: tau = {:.3} ps steers to {:.2} deg, 3 dB width {:.3} deg",
            tau * 1e12,
            pattern.argmax_deg(),
            width
        ));
    }
    o.csv(dir.join("steering.csv"), &steering)?;
    if !b.sweep_counts.is_empty() {
        let sweep = beamwidth_sweep(&base, &b.sweep_counts, &grid)?;
        o.csv(dir.join("beamwidth_sweep.csv"), &sweep)?;
    }
    Ok(lines)
}

fn run_channelize(config: &ScenarioConfig, o: &mut Outputs, dir: &Path) -> Result<Vec<String>> {
    let ch = config
        .channelizer
        .as_ref()
        .ok_or_else(|| Error::validation("channelizer", "channelizer section present"))?;
    let plan = ch.plan;
    let input = ch.input.build(config.seed)?;
    let sliced = slice_spectrum(&plan, &input)?;
    let weighted = apply_binary_weights(&sliced, &ch.weights)?;
    let grid = input.frequencies().to_vec();

    o.csv(dir.join("input.csv"), &input)?;
    for k in 0..plan.n_channels {
        o.csv(
            dir.join(format!("channel_{k:03}.csv")),
            &weighted.segment(k)?,
        )?;
    }
    o.csv(dir.join("channels.csv"), &weighted.manifest())?;
    let mask = transmission(&plan, &ch.weights, &grid)?;
    o.csv(
        dir.join("transmission.csv"),
        &Spectrum::from_linear(grid, &mask)?,
    )?;
    o.csv(dir.join("output.csv"), &reconstruct(&weighted)?)?;

    // The comb line that selects each channel, attenuated to its weight.
    let center = config.comb_or_default().center_frequency_hz;
    let centers = channel_centers(&plan)?;
    let paired = Table {
        header: vec![
            "channel",
            "line_index",
            "frequency_hz",
            "wavelength_nm",
            "power_dbm",
            "weight",
            "rf_center_hz",
        ],
        rows: ch
            .weights
            .iter()
            .zip(&centers)
            .enumerate()
            .map(|(k, (&w, &fc))| {
                let f = center + k as f64 * plan.comb_fsr;
                let p = if w > 0.0 {
                    10.0 * w.log10()
                } else {
                    -DEFAULT_FLOOR_DB
                };
                vec![
                    k.to_string(),
                    k.to_string(),
                    format_number(f),
                    format_number(frequency_to_wavelength(f) * 1e9),
                    format_number(p),
                    format_number(w),
                    format_number(fc),
                ]
            })
            .collect(),
    };
    o.csv(dir.join("shaped_comb.csv"), &paired)?;

    let on = ch.weights.iter().filter(|&&w| w > 0.0).count();
    Ok(vec![format!(
        "channelize: {} channels {:.3} GHz apart, {} on, {:.3} GHz operation bandwidth",
        plan.n_channels,
        plan.channel_spacing().abs() / 1e9,
        on,
        plan.n_channels as f64 * plan.channel_bandwidth / 1e9
    )])
}
