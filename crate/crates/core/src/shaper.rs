//! Per-line spectral shaping of a comb.
//!
//! Shaping happens in two stages. [`pre_shape`] flattens the raw comb to a
//! bounded power spread. [`solve_attenuations`] or [`feedback_calibrate`] then
//! imprints the tap weights. The feedback loop reads the shaped powers back
//! with a noisy spectrum analyzer and applies an integral correction in dB.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::comb::CombSpec;
use crate::sigio::{format_number, CsvExport};
use crate::{Error, Result};

pub const DEFAULT_MAX_SPREAD_DB: f64 = 15.0;
pub const DEFAULT_FLOOR_DB: f64 = 60.0;
pub const DEFAULT_TOLERANCE_DB: f64 = 0.1;
pub const DEFAULT_MAX_ITER: usize = 20;

/// Commanded per-line attenuation for a set of comb lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingPlan {
    /// Comb line indices in increasing order; tap `n` maps to the `n`-th entry.
    pub selected_indices: Vec<i64>,
    /// Linear weights normalized to a maximum of 1.
    pub target_weights: Vec<f64>,
    pub attenuations_db: Vec<f64>,
    /// Lines left out of the spread window because they are too weak to use.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unusable: Vec<i64>,
}

impl ShapingPlan {
    /// The comb after attenuation; unselected lines pass unchanged.
    pub fn apply(&self, comb: &CombSpec) -> Result<CombSpec> {
        let mut powers = comb.powers_dbm();
        for (&idx, &att) in self.selected_indices.iter().zip(&self.attenuations_db) {
            let pos = position(comb, idx)?;
            powers[pos] -= att;
        }
        comb.with_powers_dbm(&powers)
    }

    /// Shaped powers of the selected lines, dBm.
    pub fn shaped_powers_dbm(&self, comb: &CombSpec) -> Result<Vec<f64>> {
        self.selected_indices
            .iter()
            .zip(&self.attenuations_db)
            .map(|(&idx, &att)| Ok(comb.lines()[position(comb, idx)?].power_dbm - att))
            .collect()
    }

    /// Selected lines of the shaped comb as a standalone comb.
    pub fn shaped_comb(&self, comb: &CombSpec) -> Result<CombSpec> {
        let powers = self.shaped_powers_dbm(comb)?;
        CombSpec::new(
            comb.center_frequency(),
            comb.fsr(),
            self.selected_indices.iter().copied().zip(powers),
            format!("{} (shaped)", comb.label()),
        )
    }
}

/// Waveshaper imperfections: the applied attenuation is
/// `quantize(command * (1 + gain_error))`, clipped to `[0, floor_db]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorModel {
    pub gain_error: f64,
    pub quantization_db: f64,
    pub floor_db: f64,
}

impl Default for ActuatorModel {
    fn default() -> Self {
        ActuatorModel::ideal()
    }
}

impl ActuatorModel {
    pub fn ideal() -> Self {
        ActuatorModel {
            gain_error: 0.0,
            quantization_db: 0.0,
            floor_db: DEFAULT_FLOOR_DB,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gain_error.is_finite() {
            return Err(Error::validation("gain_error", "gain_error must be finite"));
        }
        if !(self.quantization_db >= 0.0) || !self.quantization_db.is_finite() {
            return Err(Error::validation("quantization_db", "quantization >= 0"));
        }
        if !(self.floor_db > 0.0) || !self.floor_db.is_finite() {
            return Err(Error::validation("floor_db", "floor > 0"));
        }
        Ok(())
    }

    pub fn actuate(&self, command_db: f64) -> f64 {
        let mut applied = command_db * (1.0 + self.gain_error);
        if self.quantization_db > 0.0 {
            applied = (applied / self.quantization_db).round() * self.quantization_db;
        }
        applied.clamp(0.0, self.floor_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSettings {
    /// Std-dev of the additive Gaussian read noise, dB.
    pub osa_noise_db: f64,
    pub tolerance_db: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            osa_noise_db: 0.0,
            tolerance_db: DEFAULT_TOLERANCE_DB,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub iterations: usize,
    /// Largest absolute per-line deviation from target at the last read, dB.
    pub final_error_db: f64,
    pub error_trace: Vec<f64>,
    pub converged: bool,
}

impl CsvExport for CalibrationReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["iteration", "max_error_db"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.error_trace
            .iter()
            .enumerate()
            .map(|(i, e)| vec![(i + 1).to_string(), format_number(*e)])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreShapeOptions {
    pub max_spread_db: f64,
    /// Lines more than this far below the strongest line are flagged unusable
    /// and do not pull the window down.
    pub usable_range_db: f64,
}

impl PreShapeOptions {
    pub fn new(max_spread_db: f64) -> Self {
        PreShapeOptions {
            max_spread_db,
            usable_range_db: 2.0 * max_spread_db,
        }
    }
}

/// First shaping stage: flattens the comb to at most `max_spread_db` of spread.
pub fn pre_shape(comb: &CombSpec, max_spread_db: f64) -> Result<ShapingPlan> {
    pre_shape_with(comb, &PreShapeOptions::new(max_spread_db))
}

pub fn pre_shape_with(comb: &CombSpec, opts: &PreShapeOptions) -> Result<ShapingPlan> {
    if !(opts.max_spread_db > 0.0) {
        return Err(Error::invalid("max_spread must be > 0"));
    }
    if !(opts.usable_range_db >= opts.max_spread_db) {
        return Err(Error::invalid("usable range must be >= max_spread"));
    }
    let powers = comb.powers_dbm();
    let peak = powers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let usable_floor = peak - opts.usable_range_db;
    let unusable: Vec<i64> = comb
        .lines()
        .iter()
        .filter(|l| l.power_dbm < usable_floor)
        .map(|l| l.index)
        .collect();
    let min_usable = powers
        .iter()
        .copied()
        .filter(|&p| p >= usable_floor)
        .fold(f64::INFINITY, f64::min);
    let ceiling = min_usable + opts.max_spread_db;
    let attenuations: Vec<f64> = powers.iter().map(|&p| (p - ceiling).max(0.0)).collect();
    let shaped: Vec<f64> = powers
        .iter()
        .zip(&attenuations)
        .map(|(p, a)| 10f64.powf((p - a) / 10.0))
        .collect();
    let max = shaped.iter().copied().fold(0.0, f64::max);
    Ok(ShapingPlan {
        selected_indices: comb.indices(),
        target_weights: shaped.iter().map(|s| s / max).collect(),
        attenuations_db: attenuations,
        unusable,
    })
}

/// Magnitudes of signed tap coefficients normalized to a maximum of 1, plus
/// their signs. Negative taps are realized on the other detector arm.
pub fn targets_from_taps(coefficients: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let max = coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::invalid("taps must be finite and not all zero"));
    }
    let mags = coefficients.iter().map(|c| c.abs() / max).collect();
    let signs = coefficients
        .iter()
        .map(|c| if *c < 0.0 { -1.0 } else { 1.0 })
        .collect();
    Ok((mags, signs))
}

fn position(comb: &CombSpec, index: i64) -> Result<usize> {
    comb.lines()
        .binary_search_by_key(&index, |l| l.index)
        .map_err(|_| Error::invalid(format!("comb has no line {index}")))
}

fn normalized_targets(comb: &CombSpec, selected: &[i64], targets: &[f64]) -> Result<Vec<f64>> {
    if selected.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} selected lines but {} targets",
            selected.len(),
            targets.len()
        )));
    }
    if selected.is_empty() {
        return Err(Error::invalid("no lines selected"));
    }
    if let Some(w) = selected.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "selected indices must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    for &idx in selected {
        position(comb, idx)?;
    }
    if let Some(t) = targets.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::invalid(format!(
            "targets must be finite and >= 0, got {t}"
        )));
    }
    let max = targets.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::invalid("all targets are zero"));
    }
    Ok(targets.iter().map(|t| t / max).collect())
}

/// Attenuations that make the selected lines' linear powers proportional to
/// `targets`, keeping as much power as possible.
///
/// The shaped level of the weakest-relative-to-target line is kept unattenuated
/// and every other line is brought down to match. Zero targets are blocked at
/// `floor_db`. Needing more than `floor_db` anywhere is an
/// [`Error::UnreachableTarget`] naming the limiting (too weak) line.
pub fn solve_attenuations(
    comb: &CombSpec,
    selected: &[i64],
    targets: &[f64],
    floor_db: f64,
) -> Result<ShapingPlan> {
    if !(floor_db > 0.0) {
        return Err(Error::invalid("attenuation floor must be > 0"));
    }
    let targets = normalized_targets(comb, selected, targets)?;
    let powers: Vec<f64> = selected
        .iter()
        .map(|&i| Ok(comb.lines()[position(comb, i)?].power_dbm))
        .collect::<Result<_>>()?;

    let mut reference = f64::INFINITY;
    let mut limiting = selected[0];
    for ((&p, &t), &idx) in powers.iter().zip(&targets).zip(selected) {
        if t > 0.0 {
            let level = p - 10.0 * t.log10();
            if level < reference {
                reference = level;
                limiting = idx;
            }
        }
    }

    let mut attenuations = Vec::with_capacity(targets.len());
    for (&p, &t) in powers.iter().zip(&targets) {
        if t == 0.0 {
            attenuations.push(floor_db);
            continue;
        }
        let a = (p - reference - 10.0 * t.log10()).max(0.0);
        if a > floor_db {
            return Err(Error::UnreachableTarget {
                index: limiting,
                required_db: a,
                floor_db,
            });
        }
        attenuations.push(a);
    }
    Ok(ShapingPlan {
        selected_indices: selected.to_vec(),
        target_weights: targets,
        attenuations_db: attenuations,
        unusable: Vec::new(),
    })
}

/// Closed-loop shaping through an imperfect actuator.
///
/// Each iteration commands attenuations, reads the shaped powers with Gaussian
/// noise, forms `error = measured - target` in dB and adds it to the next
/// command. Stops once the largest error is within tolerance; running out of
/// iterations is reported through `converged`, not as an error.
pub fn feedback_calibrate(
    comb: &CombSpec,
    selected: &[i64],
    targets: &[f64],
    actuator: &ActuatorModel,
    settings: &CalibrationSettings,
) -> Result<(ShapingPlan, CalibrationReport)> {
    actuator.validate()?;
    if !(settings.tolerance_db > 0.0) {
        return Err(Error::invalid("tolerance must be > 0"));
    }
    if settings.max_iter < 1 {
        return Err(Error::invalid("max_iter must be >= 1"));
    }
    if !(settings.osa_noise_db >= 0.0) || !settings.osa_noise_db.is_finite() {
        return Err(Error::invalid("osa noise must be finite and >= 0"));
    }
    let ideal = solve_attenuations(comb, selected, targets, actuator.floor_db)?;
    let powers = ideal.shaped_powers_dbm(comb)?;
    // shaped_powers_dbm subtracts the ideal attenuation, so these are the target levels
    let target_levels = powers;
    let raw: Vec<f64> = selected
        .iter()
        .map(|&i| Ok(comb.lines()[position(comb, i)?].power_dbm))
        .collect::<Result<_>>()?;
    let active: Vec<bool> = ideal.target_weights.iter().map(|&t| t > 0.0).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let noise = Normal::new(0.0, settings.osa_noise_db)
        .map_err(|e| Error::invalid(format!("osa noise: {e}")))?;

    let mut command = ideal.attenuations_db.clone();
    let mut applied = vec![0.0; command.len()];
    let mut trace = Vec::with_capacity(settings.max_iter);
    let mut converged = false;
    for _ in 0..settings.max_iter {
        for (a, &c) in applied.iter_mut().zip(&command) {
            *a = actuator.actuate(c);
        }
        let mut max_err = 0.0f64;
        let mut errors = vec![0.0; command.len()];
        for i in 0..command.len() {
            // every line is read, so the RNG stream does not depend on the targets
            let read_noise = if settings.osa_noise_db > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            if !active[i] {
                continue;
            }
            let measured = raw[i] - applied[i] + read_noise;
            errors[i] = measured - target_levels[i];
            max_err = max_err.max(errors[i].abs());
        }
        trace.push(max_err);
        if max_err <= settings.tolerance_db {
            converged = true;
            break;
        }
        for ((c, e), &on) in command.iter_mut().zip(&errors).zip(&active) {
            if on {
                *c = (*c + e).max(0.0);
            }
        }
    }

    let report = CalibrationReport {
        iterations: trace.len(),
        final_error_db: *trace.last().expect("max_iter >= 1"),
        error_trace: trace,
        converged,
    };
    let plan = ShapingPlan {
        attenuations_db: applied,
        ..ideal
    };
    Ok((plan, report))
}
