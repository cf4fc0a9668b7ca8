//! Parametric soliton-crystal comb spectra.
//!
//! The comb is a grid of lines anchored at the pump (index 0). Line `k` sits
//! at `center_frequency + k * fsr`; only its power is free. Powers are kept in
//! dBm; conversions to linear milliwatts go through [`dbm_to_mw`] and
//! [`mw_to_dbm`].

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SPEED_OF_LIGHT};

/// Default pump frequency (about 1550 nm).
pub const DEFAULT_CENTER_FREQUENCY_HZ: f64 = 193.4e12;
/// FSR of the larger (592 um radius) ring.
pub const FSR_49_GHZ: f64 = 49e9;
/// FSR of the smaller (135 um radius) ring.
pub const FSR_200_GHZ: f64 = 200e9;
pub const DEFAULT_LINE_COUNT: usize = 81;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Wavelength spacing of a comb with the given FSR around `center_wavelength`
/// (first-order, `fsr * lambda^2 / c`).
pub fn fsr_to_wavelength_spacing(fsr_hz: f64, center_wavelength_m: f64) -> Result<f64> {
    if !(fsr_hz >= 0.0) || !fsr_hz.is_finite() {
        return Err(Error::invalid(format!("fsr must be >= 0, got {fsr_hz}")));
    }
    if !(center_wavelength_m > 0.0) || !center_wavelength_m.is_finite() {
        return Err(Error::invalid(format!(
            "center wavelength must be > 0, got {center_wavelength_m}"
        )));
    }
    Ok(fsr_hz * center_wavelength_m * center_wavelength_m / SPEED_OF_LIGHT)
}

pub fn frequency_to_wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombLine {
    /// Signed offset from the pump line.
    pub index: i64,
    pub frequency: f64,
    pub power_dbm: f64,
}

/// Spectral envelope of the comb before the fingerprint modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeShape {
    Flat,
    /// `sech^2((k - offset) / width)`, width in line indices.
    Sech2 {
        width_lines: f64,
    },
}

/// Periodic "fingerprint" ripple in dB: `depth/2 * (cos(2 pi k / period + phase) - 1)`.
///
/// The ripple spans `[-depth, 0]` dB, so with zero phase the pump line is not
/// attenuated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fingerprint {
    pub depth_db: f64,
    pub period_lines: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl Fingerprint {
    pub const NONE: Fingerprint = Fingerprint {
        depth_db: 0.0,
        period_lines: 1.0,
        phase_rad: 0.0,
    };

    pub fn ripple_db(&self, index: i64) -> f64 {
        if self.depth_db == 0.0 {
            return 0.0;
        }
        let arg = 2.0 * std::f64::consts::PI * index as f64 / self.period_lines + self.phase_rad;
        0.5 * self.depth_db * (arg.cos() - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeParams {
    pub shape: EnvelopeShape,
    /// Power of the envelope peak.
    pub peak_power_dbm: f64,
    /// Envelope peak position in line indices (0 = pump).
    #[serde(default)]
    pub offset_lines: f64,
    pub fingerprint: Fingerprint,
}

impl EnvelopeParams {
    pub fn flat(peak_power_dbm: f64) -> Self {
        EnvelopeParams {
            shape: EnvelopeShape::Flat,
            peak_power_dbm,
            offset_lines: 0.0,
            fingerprint: Fingerprint::NONE,
        }
    }

    pub fn sech2(peak_power_dbm: f64, width_lines: f64) -> Self {
        EnvelopeParams {
            shape: EnvelopeShape::Sech2 { width_lines },
            peak_power_dbm,
            offset_lines: 0.0,
            fingerprint: Fingerprint::NONE,
        }
    }

    pub fn with_fingerprint(mut self, depth_db: f64, period_lines: f64, phase_rad: f64) -> Self {
        self.fingerprint = Fingerprint {
            depth_db,
            period_lines,
            phase_rad,
        };
        self
    }

    pub fn with_offset(mut self, offset_lines: f64) -> Self {
        self.offset_lines = offset_lines;
        self
    }

    /// Envelope value in dB relative to the peak, without the fingerprint.
    pub fn envelope_db(&self, index: i64) -> f64 {
        match self.shape {
            EnvelopeShape::Flat => 0.0,
            EnvelopeShape::Sech2 { width_lines } => {
                let y = ((index as f64 - self.offset_lines) / width_lines).abs();
                // 10 log10(sech^2 y) = -20 log10(cosh y), written to avoid overflow
                -20.0 * (y / std::f64::consts::LN_10 + ((1.0 + (-2.0 * y).exp()) / 2.0).log10())
            }
        }
    }

    pub fn power_dbm(&self, index: i64) -> f64 {
        self.peak_power_dbm + self.envelope_db(index) + self.fingerprint.ripple_db(index)
    }

    fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("envelope {name} must be finite")))
            }
        };
        finite("peak_power_dbm", self.peak_power_dbm)?;
        finite("offset_lines", self.offset_lines)?;
        finite("depth_db", self.fingerprint.depth_db)?;
        finite("phase_rad", self.fingerprint.phase_rad)?;
        if let EnvelopeShape::Sech2 { width_lines } = self.shape {
            if !(width_lines > 0.0) || !width_lines.is_finite() {
                return Err(Error::invalid("sech2 width_lines must be > 0"));
            }
        }
        if self.fingerprint.depth_db != 0.0
            && (!(self.fingerprint.period_lines > 0.0)
                || !self.fingerprint.period_lines.is_finite())
        {
            return Err(Error::invalid("fingerprint period_lines must be > 0"));
        }
        Ok(())
    }
}

/// A comb line grid anchored at the pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CombDocument", into = "CombDocument")]
pub struct CombSpec {
    center_frequency: f64,
    fsr: f64,
    lines: Vec<CombLine>,
    label: String,
}

impl CombSpec {
    /// Builds a comb from `(index, power_dbm)` pairs; frequencies come from the grid.
    pub fn new(
        center_frequency: f64,
        fsr: f64,
        lines: impl IntoIterator<Item = (i64, f64)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(fsr > 0.0) || !fsr.is_finite() {
            return Err(Error::invalid(format!("fsr must be > 0, got {fsr}")));
        }
        if !(center_frequency > 0.0) || !center_frequency.is_finite() {
            return Err(Error::invalid(format!(
                "center frequency must be > 0, got {center_frequency}"
            )));
        }
        let lines: Vec<CombLine> = lines
            .into_iter()
            .map(|(index, power_dbm)| CombLine {
                index,
                frequency: center_frequency + index as f64 * fsr,
                power_dbm,
            })
            .collect();
        if lines.len() < 2 {
            return Err(Error::invalid("a comb needs at least 2 lines"));
        }
        if let Some(w) = lines.windows(2).find(|w| w[1].index <= w[0].index) {
            return Err(Error::invalid(format!(
                "line indices must be strictly increasing ({} then {})",
                w[0].index, w[1].index
            )));
        }
        if let Some(l) = lines.iter().find(|l| !l.power_dbm.is_finite()) {
            return Err(Error::invalid(format!(
                "line {} has non-finite power",
                l.index
            )));
        }
        Ok(CombSpec {
            center_frequency,
            fsr,
            lines,
            label: label.into(),
        })
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn fsr(&self) -> f64 {
        self.fsr
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lines(&self) -> &[CombLine] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn line(&self, index: i64) -> Option<&CombLine> {
        self.lines
            .binary_search_by_key(&index, |l| l.index)
            .ok()
            .map(|i| &self.lines[i])
    }

    pub fn indices(&self) -> Vec<i64> {
        self.lines.iter().map(|l| l.index).collect()
    }

    pub fn powers_dbm(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.power_dbm).collect()
    }

    pub fn powers_mw(&self) -> Vec<f64> {
        self.lines.iter().map(|l| dbm_to_mw(l.power_dbm)).collect()
    }

    /// Max minus min line power, dB.
    pub fn spread_db(&self) -> f64 {
        let (lo, hi) = self
            .lines
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| {
                (lo.min(l.power_dbm), hi.max(l.power_dbm))
            });
        hi - lo
    }

    /// Same grid with new per-line powers, in line order.
    pub fn with_powers_dbm(&self, powers: &[f64]) -> Result<Self> {
        if powers.len() != self.lines.len() {
            return Err(Error::invalid(format!(
                "expected {} powers, got {}",
                self.lines.len(),
                powers.len()
            )));
        }
        CombSpec::new(
            self.center_frequency,
            self.fsr,
            self.lines.iter().zip(powers).map(|(l, &p)| (l.index, p)),
            self.label.clone(),
        )
    }

    /// Keeps the `n` lines closest to the pump, preferring negative indices on ties.
    pub fn central_lines(&self, n: usize) -> Result<Vec<i64>> {
        if n > self.lines.len() {
            return Err(Error::invalid(format!(
                "requested {n} lines from a {}-line comb",
                self.lines.len()
            )));
        }
        let mut idx = self.indices();
        idx.sort_by_key(|&k| (k.abs(), k));
        idx.truncate(n);
        idx.sort_unstable();
        Ok(idx)
    }
}

/// Generates a comb of `n_lines` lines centered on the pump.
///
/// Indices run from `-(n_lines / 2)` upward, so odd counts are symmetric about
/// the pump and even counts carry one extra line on the negative side.
pub fn generate_soliton_crystal_comb(
    center_frequency: f64,
    fsr: f64,
    n_lines: usize,
    envelope: &EnvelopeParams,
) -> Result<CombSpec> {
    if n_lines < 2 {
        return Err(Error::invalid(format!(
            "n_lines must be >= 2, got {n_lines}"
        )));
    }
    envelope.validate()?;
    let first = -((n_lines / 2) as i64);
    let label = match envelope.shape {
        EnvelopeShape::Flat => "flat".to_string(),
        EnvelopeShape::Sech2 { .. } => "soliton-crystal".to_string(),
    };
    CombSpec::new(
        center_frequency,
        fsr,
        (first..first + n_lines as i64).map(|k| (k, envelope.power_dbm(k))),
        label,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDocument {
    index: i64,
    power_dbm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CombDocument {
    center_frequency_hz: f64,
    fsr_hz: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    label: String,
    lines: Vec<LineDocument>,
}

impl TryFrom<CombDocument> for CombSpec {
    type Error = Error;

    fn try_from(doc: CombDocument) -> Result<Self> {
        CombSpec::new(
            doc.center_frequency_hz,
            doc.fsr_hz,
            doc.lines.into_iter().map(|l| (l.index, l.power_dbm)),
            doc.label,
        )
    }
}

impl From<CombSpec> for CombDocument {
    fn from(c: CombSpec) -> Self {
        CombDocument {
            center_frequency_hz: c.center_frequency,
            fsr_hz: c.fsr,
            label: c.label,
            lines: c
                .lines
                .into_iter()
                .map(|l| LineDocument {
                    index: l.index,
                    power_dbm: l.power_dbm,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_comb_has_equal_powers_on_exact_grid() {
        let comb =
            generate_soliton_crystal_comb(193.4e12, 49e9, 81, &EnvelopeParams::flat(0.0)).unwrap();
        assert_eq!(comb.len(), 81);
        assert_eq!(comb.lines()[0].index, -40);
        assert_eq!(comb.lines()[80].index, 40);
        assert!(comb.lines().iter().all(|l| l.power_dbm == 0.0));
        for w in comb.lines().windows(2) {
            let step = w[1].frequency - w[0].frequency;
            assert!((step - 49e9).abs() <= 1e-6 * 49e9);
        }
    }

    #[test]
    fn sech2_comb_is_symmetric_and_decreasing() {
        let comb =
            generate_soliton_crystal_comb(193.4e12, 200e9, 40, &EnvelopeParams::sech2(10.0, 8.0))
                .unwrap();
        let pump = comb.line(0).unwrap().power_dbm;
        assert_eq!(pump, 10.0);
        for k in 1..20 {
            let p = comb.line(k).unwrap().power_dbm;
            let m = comb.line(-k).unwrap().power_dbm;
            assert!((p - m).abs() < 1e-12);
            assert!(p < comb.line(k - 1).unwrap().power_dbm);
        }
    }

    #[test]
    fn fingerprint_period_recovered_by_autocorrelation() {
        let env = EnvelopeParams::sech2(0.0, 20.0).with_fingerprint(3.0, 7.0, 0.0);
        let comb = generate_soliton_crystal_comb(193.4e12, 49e9, 81, &env).unwrap();
        // residual after removing the envelope, evaluated independently
        let residual: Vec<f64> = comb
            .lines()
            .iter()
            .map(|l| {
                let y = l.index as f64 / 20.0;
                l.power_dbm - 10.0 * (1.0 / y.cosh().powi(2)).log10()
            })
            .collect();
        let (lo, hi) = residual
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
        // integer lines sample the cosine, so the trough is at k = 3 (mod 7)
        let trough = (0..7)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / 7.0).cos())
            .fold(f64::MAX, f64::min);
        let want = 1.5 * (1.0 - trough);
        assert!((hi - lo - want).abs() < 1e-9, "peak-to-peak {}", hi - lo);
        assert!(want > 2.8 && want <= 3.0);
        let mean = residual.iter().sum::<f64>() / residual.len() as f64;
        let centered: Vec<f64> = residual.iter().map(|r| r - mean).collect();
        let acf = |lag: usize| -> f64 {
            centered
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / (centered.len() - lag) as f64
        };
        let best = (2..20).max_by(|&a, &b| acf(a).total_cmp(&acf(b))).unwrap();
        assert_eq!(best, 7);
    }

    #[test]
    fn offset_moves_the_peak() {
        let env = EnvelopeParams::sech2(0.0, 5.0).with_offset(3.0);
        let comb = generate_soliton_crystal_comb(193.4e12, 49e9, 21, &env).unwrap();
        let peak = comb
            .lines()
            .iter()
            .max_by(|a, b| a.power_dbm.total_cmp(&b.power_dbm))
            .unwrap();
        assert_eq!(peak.index, 3);
    }

    #[test]
    fn rejects_bad_arguments() {
        let env = EnvelopeParams::flat(0.0);
        assert!(matches!(
            generate_soliton_crystal_comb(193.4e12, 0.0, 10, &env),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            generate_soliton_crystal_comb(193.4e12, -1e9, 10, &env),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            generate_soliton_crystal_comb(193.4e12, 49e9, 1, &env),
            Err(Error::InvalidArgument(_))
        ));
        let bad = EnvelopeParams::sech2(f64::NAN, 3.0);
        assert!(generate_soliton_crystal_comb(193.4e12, 49e9, 10, &bad).is_err());
        assert!(CombSpec::new(193.4e12, 49e9, [(0, 0.0), (0, 1.0)], "").is_err());
        assert!(CombSpec::new(193.4e12, 49e9, [(0, 0.0), (1, f64::INFINITY)], "").is_err());
    }

    #[test]
    fn wavelength_spacing_matches_ring_fsrs() {
        let d49 = fsr_to_wavelength_spacing(49e9, 1550e-9).unwrap();
        assert!((0.392..0.3935).contains(&(d49 * 1e9)), "{d49}");
        let d200 = fsr_to_wavelength_spacing(200e9, 1550e-9).unwrap();
        assert!((d200 * 1e9 - 1.602).abs() < 1e-3, "{d200}");
        assert_eq!(fsr_to_wavelength_spacing(0.0, 1550e-9).unwrap(), 0.0);
        assert!(fsr_to_wavelength_spacing(-1.0, 1550e-9).is_err());
        assert!(fsr_to_wavelength_spacing(1.0, 0.0).is_err());
    }

    #[test]
    fn json_stores_no_per_line_frequency() {
        let comb =
            generate_soliton_crystal_comb(193.4e12, 49e9, 3, &EnvelopeParams::flat(1.5)).unwrap();
        let json = serde_json::to_value(&comb).unwrap();
        assert_eq!(json["fsr_hz"], 49e9);
        assert!(json["lines"][0].get("frequency").is_none());
        let back: CombSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, comb);
        let bad = r#"{"center_frequency_hz": 1e14, "fsr_hz": 0, "lines": []}"#;
        assert!(serde_json::from_str::<CombSpec>(bad).is_err());
    }

    #[test]
    fn central_lines_picks_nearest_pump() {
        let comb =
            generate_soliton_crystal_comb(193.4e12, 49e9, 81, &EnvelopeParams::flat(0.0)).unwrap();
        assert_eq!(comb.central_lines(3).unwrap(), vec![-1, 0, 1]);
        assert_eq!(comb.central_lines(4).unwrap(), vec![-2, -1, 0, 1]);
        assert!(comb.central_lines(82).is_err());
    }

    proptest! {
        #[test]
        fn grid_is_exact(fsr in 1e9f64..500e9, n in 2usize..200) {
            let comb = generate_soliton_crystal_comb(193.4e12, fsr, n, &EnvelopeParams::flat(0.0)).unwrap();
            for w in comb.lines().windows(2) {
                let step = w[1].frequency - w[0].frequency;
                prop_assert!((step - fsr).abs() <= 1e-6 * fsr);
                prop_assert_eq!(w[1].index, w[0].index + 1);
            }
        }

        #[test]
        fn symmetric_envelope_gives_symmetric_powers(
            width in 1.0f64..50.0,
            depth in 0.0f64..6.0,
            period in 2.0f64..15.0,
        ) {
            let env = EnvelopeParams::sech2(3.0, width).with_fingerprint(depth, period, 0.0);
            let comb = generate_soliton_crystal_comb(193.4e12, 49e9, 81, &env).unwrap();
            for k in 1..=40 {
                let d = comb.line(k).unwrap().power_dbm - comb.line(-k).unwrap().power_dbm;
                prop_assert!(d.abs() <= 1e-12);
            }
        }

        #[test]
        fn wavelength_spacing_is_linear(fsr in 0.0f64..1e12, lambda in 1e-7f64..1e-5) {
            let one = fsr_to_wavelength_spacing(fsr, lambda).unwrap();
            let two = fsr_to_wavelength_spacing(2.0 * fsr, lambda).unwrap();
            prop_assert!((two - 2.0 * one).abs() <= 1e-12 * two.abs().max(f64::MIN_POSITIVE));
        }
    }
}
