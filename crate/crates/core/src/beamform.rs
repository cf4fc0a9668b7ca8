//! True-time-delay beamforming for a uniform linear array.
//!
//! Element `m` is fed from comb channel `m`, delayed by `m * tau`. Because the
//! delay is a true time delay rather than a phase shift, the steering angle
//! `asin(c tau / d)` does not depend on the RF frequency.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sigio::{check_grid, format_number, CsvExport};
use crate::{Error, Result, SPEED_OF_LIGHT};

pub const DEFAULT_ANGLE_STEP_DEG: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamformerConfig {
    pub n_elements: usize,
    pub element_spacing: f64,
    pub rf_frequency: f64,
    /// Signed delay increment between adjacent elements, s.
    pub inter_element_delay: f64,
}

impl BeamformerConfig {
    /// Half-wavelength spacing at `rf_frequency`.
    pub fn half_wavelength(n_elements: usize, rf_frequency: f64, inter_element_delay: f64) -> Self {
        BeamformerConfig {
            n_elements,
            element_spacing: 0.5 * SPEED_OF_LIGHT / rf_frequency,
            rf_frequency,
            inter_element_delay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements < 2 {
            return Err(Error::validation("n_elements", "M >= 2"));
        }
        if !(self.element_spacing > 0.0) || !self.element_spacing.is_finite() {
            return Err(Error::validation("element_spacing", "d > 0"));
        }
        if !(self.rf_frequency > 0.0) || !self.rf_frequency.is_finite() {
            return Err(Error::validation("rf_frequency", "rf_frequency > 0"));
        }
        if !self.inter_element_delay.is_finite() {
            return Err(Error::validation("inter_element_delay", "tau finite"));
        }
        Ok(())
    }
}

/// Normalized array factor on an angle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayPattern {
    angles_deg: Vec<f64>,
    magnitude: Vec<f64>,
}

impl ArrayPattern {
    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    /// Linear magnitude, peak 1.
    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn magnitude_db(&self) -> Vec<f64> {
        self.magnitude.iter().map(|m| 20.0 * m.log10()).collect()
    }

    pub fn argmax_deg(&self) -> f64 {
        let (i, _) = self
            .magnitude
            .iter()
            .enumerate()
            .fold(
                (0, f64::MIN),
                |(bi, bm), (i, &m)| if m > bm { (i, m) } else { (bi, bm) },
            );
        self.angles_deg[i]
    }
}

impl CsvExport for ArrayPattern {
    fn header(&self) -> Vec<&'static str> {
        vec!["angle_deg", "magnitude_db"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.angles_deg
            .iter()
            .zip(&self.magnitude)
            .map(|(a, m)| vec![format_number(*a), format_number(20.0 * m.log10())])
            .collect()
    }
}

/// Per-channel delays `m * T`, m = 0..n. No RF frequency enters.
pub fn true_time_delays(n_channels: usize, tap_spacing: f64) -> Result<Vec<f64>> {
    if n_channels < 1 {
        return Err(Error::invalid("at least one channel is required"));
    }
    if tap_spacing == 0.0 || !tap_spacing.is_finite() {
        return Err(Error::invalid("delay step must be finite and non-zero"));
    }
    Ok((0..n_channels).map(|m| m as f64 * tap_spacing).collect())
}

/// Beam direction `asin(c tau / d)` in degrees.
pub fn steering_angle(tau: f64, element_spacing: f64) -> Result<f64> {
    if !(element_spacing > 0.0) || !element_spacing.is_finite() {
        return Err(Error::invalid("element spacing must be > 0"));
    }
    let ratio = SPEED_OF_LIGHT * tau / element_spacing;
    if !(ratio.abs() <= 1.0) {
        return Err(Error::UnreachableSteering { ratio: ratio.abs() });
    }
    Ok(ratio.asin().to_degrees())
}

/// Delay increment that steers the beam to `angle_deg`.
pub fn delay_for_angle(angle_deg: f64, element_spacing: f64) -> f64 {
    element_spacing * angle_deg.to_radians().sin() / SPEED_OF_LIGHT
}

/// Rounds `tau` to the nearest multiple of `delay_step`.
pub fn quantize_delay(tau: f64, delay_step: f64) -> f64 {
    (tau / delay_step).round() * delay_step
}

/// Steering angles reachable with delays `k * delay_step` for
/// `k` in `k_min..=k_max`, skipping delays that cannot steer.
///
/// With an offset `k` range the set is asymmetric about broadside, which is
/// how a delay grid fixed by the dispersion produces lopsided angle sets.
pub fn achievable_steering_angles(
    element_spacing: f64,
    delay_step: f64,
    k_min: i64,
    k_max: i64,
) -> Result<Vec<(i64, f64)>> {
    if !(delay_step > 0.0) {
        return Err(Error::invalid("delay step must be > 0"));
    }
    Ok((k_min..=k_max)
        .filter_map(|k| {
            steering_angle(k as f64 * delay_step, element_spacing)
                .ok()
                .map(|a| (k, a))
        })
        .collect())
}

/// `[-90, 90]` degrees with the given step.
pub fn angle_grid(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg).round() as usize;
    (0..=n)
        .map(|i| -90.0 + 180.0 * i as f64 / n as f64)
        .collect()
}

/// `AF(theta) = |sum_m exp(j 2 pi f m (tau - d sin(theta) / c))|`, normalized to peak 1.
pub fn array_factor(config: &BeamformerConfig, angles_deg: &[f64]) -> Result<ArrayPattern> {
    config.validate()?;
    check_grid(angles_deg)?;
    let f = config.rf_frequency;
    let raw: Vec<f64> = angles_deg
        .par_iter()
        .map(|&theta| {
            let step = config.inter_element_delay
                - config.element_spacing * theta.to_radians().sin() / SPEED_OF_LIGHT;
            let cycles_per_element = f * step;
            (0..config.n_elements)
                .map(|m| {
                    let cycles = (cycles_per_element * m as f64).fract();
                    Complex64::from_polar(1.0, 2.0 * PI * cycles)
                })
                .sum::<Complex64>()
                .norm()
        })
        .collect();
    let peak = raw.iter().copied().fold(0.0, f64::max);
    Ok(ArrayPattern {
        angles_deg: angles_deg.to_vec(),
        magnitude: raw.iter().map(|m| m / peak).collect(),
    })
}

/// Angular distance between the half-power points around the global peak,
/// linearly interpolated between grid points.
pub fn beamwidth_3db(pattern: &ArrayPattern) -> Result<f64> {
    let mag = &pattern.magnitude;
    let ang = &pattern.angles_deg;
    let (peak_i, peak) =
        mag.iter().enumerate().fold(
            (0, f64::MIN),
            |(bi, bm), (i, &m)| if m > bm { (i, m) } else { (bi, bm) },
        );
    let half = peak / std::f64::consts::SQRT_2;
    let cross = |a: usize, b: usize| {
        let t = (mag[a] - half) / (mag[a] - mag[b]);
        ang[a] + t * (ang[b] - ang[a])
    };
    let upper = (peak_i + 1..mag.len())
        .find(|&k| mag[k] <= half)
        .map(|k| cross(k - 1, k));
    let lower = (0..peak_i)
        .rev()
        .find(|&k| mag[k] <= half)
        .map(|k| cross(k + 1, k));
    match (lower, upper) {
        (Some(lo), Some(hi)) => Ok(hi - lo),
        _ => Err(Error::BandwidthUnresolved(
            "beam -3 dB crossings fall outside the angle grid".into(),
        )),
    }
}

/// One row of a beamwidth-versus-element-count sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamwidthPoint {
    pub n_elements: usize,
    pub theta_3db_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamwidthSweep(pub Vec<BeamwidthPoint>);

impl CsvExport for BeamwidthSweep {
    fn header(&self) -> Vec<&'static str> {
        vec!["M", "theta_3db_deg"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|p| vec![p.n_elements.to_string(), format_number(p.theta_3db_deg)])
            .collect()
    }
}

/// 3 dB beamwidth for each element count, other parameters from `base`.
pub fn beamwidth_sweep(
    base: &BeamformerConfig,
    element_counts: &[usize],
    angles_deg: &[f64],
) -> Result<BeamwidthSweep> {
    element_counts
        .iter()
        .map(|&m| {
            let cfg = BeamformerConfig {
                n_elements: m,
                ..*base
            };
            Ok(BeamwidthPoint {
                n_elements: m,
                theta_3db_deg: beamwidth_3db(&array_factor(&cfg, angles_deg)?)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(BeamwidthSweep)
}
