//! Broadcast, delay and sum.
//!
//! Every comb line carries a copy of the RF input. A dispersive link delays
//! line `n` by `n * T`, and photodetection sums the weighted copies, so the
//! processor is an FIR filter `H(f) = sum_n a_n exp(-j 2 pi f n T)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sigio::{check_grid, format_number, CsvExport, Waveform};
use crate::{Error, Result};

/// Standard single-mode fiber.
pub const DEFAULT_DISPERSION_PS_NM_KM: f64 = 17.0;
pub const DEFAULT_LENGTH_KM: f64 = 4.0;

/// Signed tap coefficients and the delay step between adjacent taps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TapDocument", into = "TapDocument")]
pub struct TapWeights {
    coefficients: Vec<f64>,
    tap_spacing: f64,
}

impl TapWeights {
    pub fn new(coefficients: Vec<f64>, tap_spacing: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("at least one tap is required"));
        }
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("tap {i} is not finite")));
        }
        if !(tap_spacing > 0.0) || !tap_spacing.is_finite() {
            return Err(Error::invalid(format!(
                "tap spacing must be > 0, got {tap_spacing}"
            )));
        }
        Ok(TapWeights {
            coefficients,
            tap_spacing,
        })
    }

    /// Accepts a negative spacing (anomalous dispersion) by reversing the tap order.
    pub fn from_signed_spacing(mut coefficients: Vec<f64>, tap_spacing: f64) -> Result<Self> {
        if tap_spacing < 0.0 {
            coefficients.reverse();
        }
        TapWeights::new(coefficients, tap_spacing.abs())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn tap_spacing(&self) -> f64 {
        self.tap_spacing
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Delay of the tap center, `(N - 1) / 2 * T`.
    pub fn center_delay(&self) -> f64 {
        (self.coefficients.len() - 1) as f64 / 2.0 * self.tap_spacing
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        TapWeights::new(
            self.coefficients.iter().map(|c| c * factor).collect(),
            self.tap_spacing,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TapDocument {
    tap_spacing_s: f64,
    coefficients: Vec<f64>,
}

impl TryFrom<TapDocument> for TapWeights {
    type Error = Error;

    fn try_from(doc: TapDocument) -> Result<Self> {
        TapWeights::new(doc.coefficients, doc.tap_spacing_s)
    }
}

impl From<TapWeights> for TapDocument {
    fn from(t: TapWeights) -> Self {
        TapDocument {
            tap_spacing_s: t.tap_spacing,
            coefficients: t.coefficients,
        }
    }
}

/// A dispersive delay line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionLink {
    pub dispersion_ps_nm_km: f64,
    pub length_km: f64,
}

impl Default for DispersionLink {
    fn default() -> Self {
        DispersionLink {
            dispersion_ps_nm_km: DEFAULT_DISPERSION_PS_NM_KM,
            length_km: DEFAULT_LENGTH_KM,
        }
    }
}

impl DispersionLink {
    pub fn validate(&self) -> Result<()> {
        if !self.dispersion_ps_nm_km.is_finite() {
            return Err(Error::validation(
                "dispersion_ps_nm_km",
                "dispersion finite",
            ));
        }
        if !(self.length_km >= 0.0) || !self.length_km.is_finite() {
            return Err(Error::validation("length_km", "length >= 0"));
        }
        Ok(())
    }
}

/// Delay between adjacent wavelength channels, `T = D * L * dlambda`, in seconds.
///
/// The sign follows the dispersion; a zero result is rejected because the
/// taps would not be separated in time.
pub fn tap_spacing(link: &DispersionLink, channel_spacing_m: f64) -> Result<f64> {
    link.validate()?;
    if !(channel_spacing_m > 0.0) || !channel_spacing_m.is_finite() {
        return Err(Error::invalid(format!(
            "channel spacing must be > 0, got {channel_spacing_m}"
        )));
    }
    let t_ps = link.dispersion_ps_nm_km * link.length_km * (channel_spacing_m * 1e9);
    if t_ps == 0.0 {
        return Err(Error::DegenerateDelay {
            dispersion_ps_nm_km: link.dispersion_ps_nm_km,
            length_km: link.length_km,
        });
    }
    Ok(t_ps * 1e-12)
}

/// Complex transfer function on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RfResponse {
    frequencies: Vec<f64>,
    values: Vec<Complex64>,
}

impl RfResponse {
    pub fn new(frequencies: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        check_grid(&frequencies)?;
        if frequencies.len() != values.len() {
            return Err(Error::invalid("response grid and values differ in length"));
        }
        Ok(RfResponse {
            frequencies,
            values,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn magnitude_db(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| 20.0 * v.norm().log10())
            .collect()
    }

    pub fn phase_deg(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.arg().to_degrees()).collect()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Multiplies by `exp(+j 2 pi f delay)`, removing a pure delay.
    pub fn delay_compensated(&self, delay: f64) -> RfResponse {
        let values = self
            .frequencies
            .iter()
            .zip(&self.values)
            .map(|(&f, &v)| v * Complex64::from_polar(1.0, 2.0 * PI * f * delay))
            .collect();
        RfResponse {
            frequencies: self.frequencies.clone(),
            values,
        }
    }
}

impl CsvExport for RfResponse {
    fn header(&self) -> Vec<&'static str> {
        vec!["frequency_hz", "magnitude_db", "phase_deg"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.frequencies
            .iter()
            .zip(&self.values)
            .map(|(f, v)| {
                vec![
                    format_number(*f),
                    format_number(20.0 * v.norm().log10()),
                    format_number(v.arg().to_degrees()),
                ]
            })
            .collect()
    }
}

fn evaluate(coefficients: &[f64], tap_spacing: f64, f: f64) -> Complex64 {
    coefficients
        .iter()
        .enumerate()
        .map(|(n, &a)| {
            // reduce the phase in cycles first so large f*n*T keeps precision
            let cycles = (f * n as f64 * tap_spacing).fract();
            a * Complex64::from_polar(1.0, -2.0 * PI * cycles)
        })
        .sum()
}

/// `H(f) = sum_n a_n exp(-j 2 pi f n T)` evaluated directly at every grid point.
pub fn transfer_function(taps: &TapWeights, frequencies: &[f64]) -> Result<RfResponse> {
    check_grid(frequencies)?;
    let values = frequencies
        .par_iter()
        .map(|&f| evaluate(&taps.coefficients, taps.tap_spacing, f))
        .collect();
    RfResponse::new(frequencies.to_vec(), values)
}

/// Period of the FIR response, `1 / |T|`.
pub fn rf_fsr(taps: &TapWeights) -> f64 {
    1.0 / taps.tap_spacing.abs()
}

/// Grid of `n` points covering one response period `[start, start + rf_fsr)`.
pub fn period_grid(taps: &TapWeights, start: f64, n: usize) -> Vec<f64> {
    let fsr = rf_fsr(taps);
    (0..n).map(|i| start + fsr * i as f64 / n as f64).collect()
}

/// Which quantity the passband width is divided into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QrfConvention {
    /// `rf_fsr / bandwidth`; independent of where the passband sits.
    FsrOverBandwidth { rf_fsr: f64 },
    /// `center / bandwidth`, the resonator convention.
    CenterOverBandwidth,
}

/// Location and width of a passband.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Passband {
    pub peak_frequency: f64,
    pub peak_magnitude: f64,
    pub lower_3db: f64,
    pub upper_3db: f64,
}

impl Passband {
    pub fn width(&self) -> f64 {
        self.upper_3db - self.lower_3db
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.upper_3db + self.lower_3db)
    }
}

/// Finds the passband around `near`: climbs to the local magnitude maximum,
/// then walks out to the half-power points, interpolating linearly in dB.
pub fn find_passband(response: &RfResponse, near: f64) -> Result<Passband> {
    let mag = response.magnitude();
    let freqs = &response.frequencies;
    if mag.is_empty() {
        return Err(Error::BandwidthUnresolved("empty response".into()));
    }
    let mut i = freqs.partition_point(|&f| f < near).min(freqs.len() - 1);
    if i > 0 && (near - freqs[i - 1]) < (freqs[i] - near) {
        i -= 1;
    }
    loop {
        if i + 1 < mag.len() && mag[i + 1] > mag[i] {
            i += 1;
        } else if i > 0 && mag[i - 1] > mag[i] {
            i -= 1;
        } else {
            break;
        }
    }
    let peak = mag[i];
    if !(peak > 0.0) {
        return Err(Error::BandwidthUnresolved(
            "zero response at the passband".into(),
        ));
    }
    let half = peak / std::f64::consts::SQRT_2;
    let db = |m: f64| 20.0 * m.log10();
    let cross = |a: usize, b: usize| -> f64 {
        // magnitude is above half power at `a`, at or below at `b`
        let (da, dbb, dh) = (db(mag[a]), db(mag[b]), db(half));
        let t = if da == dbb {
            0.0
        } else {
            (da - dh) / (da - dbb)
        };
        freqs[a] + t * (freqs[b] - freqs[a])
    };
    let upper = (i + 1..mag.len())
        .find(|&k| mag[k] <= half)
        .map(|k| cross(k - 1, k));
    let lower = (0..i)
        .rev()
        .find(|&k| mag[k] <= half)
        .map(|k| cross(k + 1, k));
    match (lower, upper) {
        (Some(lo), Some(hi)) => Ok(Passband {
            peak_frequency: freqs[i],
            peak_magnitude: peak,
            lower_3db: lo,
            upper_3db: hi,
        }),
        _ => Err(Error::BandwidthUnresolved(format!(
            "no -3 dB crossing on both sides of {:.6e} Hz inside the grid",
            freqs[i]
        ))),
    }
}

/// Quality factor of the passband containing `passband_center`.
pub fn q_rf(response: &RfResponse, passband_center: f64, convention: QrfConvention) -> Result<f64> {
    let band = find_passband(response, passband_center)?;
    let numerator = match convention {
        QrfConvention::FsrOverBandwidth { rf_fsr } => rf_fsr,
        QrfConvention::CenterOverBandwidth => band.center().abs(),
    };
    Ok(numerator / band.width())
}

/// Highest non-mainlobe peak relative to the mainlobe, dB.
///
/// Peaks within 1e-9 of the global maximum are periodic images of the
/// mainlobe and are skipped. Returns `-inf` when no sidelobe exists.
pub fn sidelobe_level(response: &RfResponse) -> f64 {
    let mag = response.magnitude();
    let peaks: Vec<f64> = (1..mag.len().saturating_sub(1))
        .filter(|&i| mag[i] >= mag[i - 1] && mag[i] >= mag[i + 1] && mag[i] > 0.0)
        .map(|i| mag[i])
        .collect();
    let main = peaks.iter().copied().fold(0.0, f64::max);
    if main == 0.0 {
        return f64::NEG_INFINITY;
    }
    let side = peaks
        .iter()
        .copied()
        .filter(|&p| p < main * (1.0 - 1e-9))
        .fold(0.0, f64::max);
    if side == 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * (side / main).log10()
    }
}

/// Time-domain processor: `y[m] = sum_n a_n x[m - n k]`, with `k = T * fs`.
///
/// `T` must be an integer number of samples (within 1e-6 relative); the
/// output is `(N - 1) k` samples longer than the input.
pub fn apply_to_waveform(taps: &TapWeights, input: &Waveform) -> Result<Waveform> {
    let ratio = taps.tap_spacing * input.sample_rate();
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-6 * ratio {
        return Err(Error::SampleAlignment { ratio });
    }
    let k = k as usize;
    let x = input.samples();
    let n_taps = taps.coefficients.len();
    let mut y = vec![0.0; x.len() + (n_taps - 1) * k];
    for (n, &a) in taps.coefficients.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let offset = n * k;
        for (yi, &xi) in y[offset..offset + x.len()].iter_mut().zip(x) {
            *yi += a * xi;
        }
    }
    Waveform::new(input.sample_rate(), y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigio::linspace;
    use proptest::prelude::*;

    const T: f64 = 26.70e-12;

    fn taps(c: &[f64]) -> TapWeights {
        TapWeights::new(c.to_vec(), T).unwrap()
    }

    #[test]
    fn tap_spacing_from_link() {
        let link = DispersionLink {
            dispersion_ps_nm_km: 17.0,
            length_km: 4.0,
        };
        let t = tap_spacing(&link, 0.39265e-9).unwrap();
        // oracle: accumulate the delay kilometre by kilometre
        let per_km = 17.0 * 0.39265;
        let summed: f64 = (0..4).map(|_| per_km).sum::<f64>() * 1e-12;
        assert!((t - summed).abs() < 1e-18);
        assert!((t - 26.70e-12).abs() < 0.01e-12);

        let reversed = DispersionLink {
            dispersion_ps_nm_km: -17.0,
            ..link
        };
        assert!((tap_spacing(&reversed, 0.39265e-9).unwrap() + t).abs() < 1e-24);

        let empty = DispersionLink {
            length_km: 0.0,
            ..link
        };
        assert!(matches!(
            tap_spacing(&empty, 0.3926e-9),
            Err(Error::DegenerateDelay { .. })
        ));
        assert!(tap_spacing(&link, 0.0).is_err());
    }

    #[test]
    fn negative_spacing_reverses_taps() {
        let t = TapWeights::from_signed_spacing(vec![1.0, 2.0, 3.0], -T).unwrap();
        assert_eq!(t.coefficients(), &[3.0, 2.0, 1.0]);
        assert_eq!(t.tap_spacing(), T);
        assert!(TapWeights::new(vec![], T).is_err());
        assert!(TapWeights::new(vec![1.0], 0.0).is_err());
        assert!(TapWeights::new(vec![f64::NAN], T).is_err());
    }

    #[test]
    fn single_tap_is_all_pass() {
        let r = transfer_function(&taps(&[1.0]), &linspace(-50e9, 50e9, 101)).unwrap();
        assert!(r
            .values()
            .iter()
            .all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn two_taps_null_at_half_fsr() {
        let t = taps(&[1.0, 1.0]);
        let r = transfer_function(&t, &[0.0, 0.5 / T]).unwrap();
        assert!((r.magnitude()[0] - 2.0).abs() < 1e-15);
        assert!(r.magnitude()[1] < 1e-12);
    }

    #[test]
    fn rf_fsr_is_reciprocal() {
        assert!((rf_fsr(&taps(&[1.0])) - 37.45e9).abs() < 0.01e9);
        let t49 = TapWeights::new(vec![1.0], 1.0 / 49e9).unwrap();
        assert!((rf_fsr(&t49) - 49e9).abs() < 1e-3);
        let doubled = TapWeights::new(vec![1.0], 2.0 * T).unwrap();
        assert!((rf_fsr(&doubled) - rf_fsr(&taps(&[1.0])) / 2.0).abs() < 1e-3);
    }

    #[test]
    fn response_repeats_every_rf_fsr() {
        let t = taps(&[0.3, -1.0, 0.7, 0.2]);
        let fsr = rf_fsr(&t);
        let grid = linspace(0.0, fsr, 257);
        let r = transfer_function(&t, &grid).unwrap().magnitude();
        // numerical period: the first grid point after 0 that reproduces H(0)
        let period = (1..grid.len())
            .find(|&i| (r[i] - r[0]).abs() < 1e-12 && (r[i - 1] - r[0]).abs() > 1e-12)
            .map(|i| grid[i])
            .unwrap();
        assert!((period - fsr).abs() < 1e-3 * fsr);
    }

    #[test]
    fn q_rf_of_flat_response_is_unresolved() {
        let t = taps(&[1.0]);
        let r = transfer_function(&t, &linspace(-10e9, 10e9, 11)).unwrap();
        let err = q_rf(
            &r,
            0.0,
            QrfConvention::FsrOverBandwidth { rf_fsr: rf_fsr(&t) },
        );
        assert!(matches!(err, Err(Error::BandwidthUnresolved(_))));
    }

    #[test]
    fn two_tap_filter_has_no_sidelobe() {
        let t = taps(&[1.0, 1.0]);
        let fsr = rf_fsr(&t);
        let r = transfer_function(&t, &linspace(-1.5 * fsr, 1.5 * fsr, 3001)).unwrap();
        assert_eq!(sidelobe_level(&r), f64::NEG_INFINITY);
    }

    #[test]
    fn waveform_identity_and_differencer() {
        let w = Waveform::new(1.0 / T, vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        let out = apply_to_waveform(&taps(&[1.0]), &w).unwrap();
        assert_eq!(out, w);
        let d = apply_to_waveform(&taps(&[1.0, -1.0]), &w).unwrap();
        assert_eq!(d.samples(), &[0.0, 1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn waveform_with_multi_sample_spacing() {
        let w = Waveform::new(3.0 / T, vec![1.0, 2.0]).unwrap();
        let out = apply_to_waveform(&taps(&[1.0, 0.5]), &w).unwrap();
        assert_eq!(out.samples(), &[1.0, 2.0, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn misaligned_sampling_is_rejected() {
        let w = Waveform::new(2.5 / T, vec![1.0]).unwrap();
        assert!(matches!(
            apply_to_waveform(&taps(&[1.0, 1.0]), &w),
            Err(Error::SampleAlignment { .. })
        ));
        let slow = Waveform::new(0.2 / T, vec![1.0]).unwrap();
        assert!(apply_to_waveform(&taps(&[1.0, 1.0]), &slow).is_err());
    }

    #[test]
    fn taps_json_layout() {
        let t = taps(&[1.0, -0.5]);
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["tap_spacing_s"], T);
        assert_eq!(v["coefficients"][1], -0.5);
        assert_eq!(serde_json::from_value::<TapWeights>(v).unwrap(), t);
        assert!(
            serde_json::from_str::<TapWeights>(r#"{"tap_spacing_s":0,"coefficients":[1]}"#)
                .is_err()
        );
    }

    #[test]
    fn center_over_bandwidth_convention() {
        let t = taps(&[1.0; 20]);
        let fsr = rf_fsr(&t);
        let grid = period_grid(&t, -0.5 * fsr, 1 << 14);
        let r = transfer_function(&t, &grid).unwrap();
        // shift the passband to fsr/4 by modulating the taps
        let shifted: Vec<f64> = (0..20)
            .map(|n| (2.0 * PI * 0.25 * n as f64).cos())
            .collect();
        let rs = transfer_function(&taps(&shifted), &grid).unwrap();
        let q_fsr = q_rf(&r, 0.0, QrfConvention::FsrOverBandwidth { rf_fsr: fsr }).unwrap();
        let q_c = q_rf(&rs, 0.25 * fsr, QrfConvention::CenterOverBandwidth).unwrap();
        assert!((q_c - 0.25 * q_fsr).abs() < 0.02 * q_c, "{q_c} vs {q_fsr}");
    }

    fn coeffs() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, 1..40)
    }

    proptest! {
        #[test]
        fn response_is_linear_in_taps(w1 in coeffs(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let w2: Vec<f64> = w1.iter().map(|x| (x * 7.3).sin()).collect();
            let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
            let grid = linspace(-20e9, 60e9, 64);
            let h1 = transfer_function(&taps(&w1), &grid).unwrap();
            let h2 = transfer_function(&taps(&w2), &grid).unwrap();
            let hm = transfer_function(&taps(&mix), &grid).unwrap();
            let scale: f64 = w1.iter().chain(&w2).map(|x| x.abs()).sum::<f64>() * (a.abs() + b.abs()) + 1e-300;
            for i in 0..grid.len() {
                let want = h1.values()[i] * a + h2.values()[i] * b;
                prop_assert!((hm.values()[i] - want).norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn response_is_periodic(w in coeffs(), f in -100e9f64..100e9) {
            let t = taps(&w);
            let fsr = rf_fsr(&t);
            let h = transfer_function(&t, &[f]).unwrap().magnitude()[0];
            let h2 = transfer_function(&t, &[f + fsr]).unwrap().magnitude()[0];
            let scale: f64 = w.iter().map(|x| x.abs()).sum();
            prop_assert!((h - h2).abs() <= 1e-9 * scale);
        }

        #[test]
        fn real_taps_are_conjugate_symmetric(w in coeffs(), f in 0.0f64..100e9) {
            let t = taps(&w);
            let r = transfer_function(&t, &[-f, f]).unwrap();
            prop_assert_eq!(r.values()[0], r.values()[1].conj());
        }
    }
}
