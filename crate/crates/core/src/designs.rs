//! Tap-weight designers for the transversal processor.
//!
//! All designers return taps centered on `c = (N - 1) / 2`. After removing the
//! center delay, symmetric designs (bandpass) have a purely real response and
//! antisymmetric designs (Hilbert, differentiator) a purely imaginary one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::transversal::{find_passband, rf_fsr, transfer_function, TapWeights};
use crate::{Error, Result};

/// Points per period used to measure achieved center and bandwidth.
pub const MEASUREMENT_POINTS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandpassDesign {
    pub n_taps: usize,
    /// Full 3 dB passband width, Hz.
    pub bandwidth: f64,
    pub center_frequency: f64,
    /// Gaussian apodization width in tap-index units; 0 disables it.
    pub apodization_sigma: f64,
}

impl BandpassDesign {
    /// The default apodization, `sigma = N / 6`.
    pub fn apodized(n_taps: usize, bandwidth: f64, center_frequency: f64) -> Self {
        BandpassDesign {
            n_taps,
            bandwidth,
            center_frequency,
            apodization_sigma: n_taps as f64 / 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HilbertKernel {
    /// `a_n = 1 / (pi (n - c))` for every `n != c`.
    #[default]
    Reciprocal,
    /// `a_n = 2 / (pi (n - c))` for odd `n - c`, zero for even offsets; the
    /// band-limited discrete Hilbert kernel with a flat magnitude.
    OddTaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentiatorOptions {
    /// Start of the raised-cosine roll-off as a fraction of `rf_fsr`; the
    /// response reaches zero at `rf_fsr / 2`. A value of 0.5 samples the bare
    /// ramp `j 2 pi f` all the way to the band edge.
    pub rolloff_start: f64,
}

impl Default for DifferentiatorOptions {
    fn default() -> Self {
        DifferentiatorOptions { rolloff_start: 0.4 }
    }
}

/// Any of the supported designs, as recorded in design manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignRequest {
    Sinc {
        n_taps: usize,
        bandwidth: f64,
        center_frequency: f64,
        apodization_sigma: f64,
    },
    Hilbert {
        n_taps: usize,
        #[serde(default)]
        kernel: HilbertKernel,
    },
    Differentiator {
        n_taps: usize,
        #[serde(default = "default_rolloff")]
        rolloff_start: f64,
    },
}

fn default_rolloff() -> f64 {
    DifferentiatorOptions::default().rolloff_start
}

impl DesignRequest {
    pub fn n_taps(&self) -> usize {
        match *self {
            DesignRequest::Sinc { n_taps, .. }
            | DesignRequest::Hilbert { n_taps, .. }
            | DesignRequest::Differentiator { n_taps, .. } => n_taps,
        }
    }

    pub fn design(&self, tap_spacing: f64) -> Result<DesignResult> {
        match *self {
            DesignRequest::Sinc {
                n_taps,
                bandwidth,
                center_frequency,
                apodization_sigma,
            } => sinc_bandpass_taps(
                &BandpassDesign {
                    n_taps,
                    bandwidth,
                    center_frequency,
                    apodization_sigma,
                },
                tap_spacing,
            ),
            DesignRequest::Hilbert { n_taps, kernel } => {
                hilbert_taps_with(n_taps, tap_spacing, kernel)
            }
            DesignRequest::Differentiator {
                n_taps,
                rolloff_start,
            } => differentiator_taps_with(
                n_taps,
                tap_spacing,
                &DifferentiatorOptions { rolloff_start },
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub taps: TapWeights,
    /// Midpoint of the -3 dB points of the realized passband.
    pub achieved_center: Option<f64>,
    pub achieved_bandwidth: Option<f64>,
    /// Frequency of the realized magnitude peak on the measurement grid.
    pub peak_frequency: f64,
    pub grid_step: f64,
    /// Factor the raw coefficients were divided by.
    pub normalization: f64,
    pub notes: String,
}

fn center_offsets(n: usize) -> impl Iterator<Item = f64> {
    let c = (n - 1) as f64 / 2.0;
    (0..n).map(move |i| i as f64 - c)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Measures the realized response over the first half-period. Bandpass designs
/// use the full period so a passband at 0 Hz still has two -3 dB points.
fn measure(taps: &TapWeights, near: Option<f64>) -> (Option<f64>, Option<f64>, f64, f64, f64) {
    let fsr = rf_fsr(taps);
    let step = fsr / MEASUREMENT_POINTS as f64;
    let grid: Vec<f64> = (0..MEASUREMENT_POINTS)
        .map(|i| -0.5 * fsr + i as f64 * step)
        .collect();
    let response = transfer_function(taps, &grid).expect("grid is increasing");
    let mag = response.magnitude();
    let half = MEASUREMENT_POINTS / 2;
    let (peak_i, peak) =
        mag[half..].iter().enumerate().fold(
            (0, 0.0f64),
            |(bi, bm), (i, &m)| if m > bm { (i, m) } else { (bi, bm) },
        );
    let peak_frequency = grid[half + peak_i];
    let band = find_passband(&response, near.unwrap_or(peak_frequency)).ok();
    (
        band.map(|b| b.center()),
        band.map(|b| b.width()),
        peak_frequency,
        peak,
        step,
    )
}

/// Gaussian-apodized sinc bandpass centered on `center_frequency`.
///
/// With `c = (N - 1) / 2`, `x_n = n - c`, cutoff `b = bandwidth / 2`:
/// `a_n = 2 b T sinc(2 b T x_n) cos(2 pi f0 T x_n) exp(-x_n^2 / (2 sigma^2))`,
/// then scaled to unit peak `|H|`.
pub fn sinc_bandpass_taps(design: &BandpassDesign, tap_spacing: f64) -> Result<DesignResult> {
    let t = tap_spacing;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("tap spacing must be > 0"));
    }
    if design.n_taps < 2 {
        return Err(Error::invalid("a bandpass design needs at least 2 taps"));
    }
    let nyquist = 0.5 / t;
    if !(design.bandwidth > 0.0 && design.bandwidth < nyquist) {
        return Err(Error::DesignInfeasible(format!(
            "bandwidth {:.4e} Hz must lie in (0, {:.4e}) Hz",
            design.bandwidth, nyquist
        )));
    }
    if !(design.center_frequency >= 0.0 && design.center_frequency < nyquist) {
        return Err(Error::DesignInfeasible(format!(
            "center {:.4e} Hz must lie in [0, {:.4e}) Hz (half the RF FSR)",
            design.center_frequency, nyquist
        )));
    }
    if !(design.apodization_sigma >= 0.0) || !design.apodization_sigma.is_finite() {
        return Err(Error::invalid("apodization sigma must be >= 0"));
    }
    let cutoff = 0.5 * design.bandwidth;
    let sigma = design.apodization_sigma;
    let raw: Vec<f64> = center_offsets(design.n_taps)
        .map(|x| {
            let mut a = 2.0
                * cutoff
                * t
                * sinc(2.0 * cutoff * t * x)
                * (2.0 * PI * design.center_frequency * t * x).cos();
            if sigma > 0.0 {
                a *= (-x * x / (2.0 * sigma * sigma)).exp();
            }
            a
        })
        .collect();
    let mut raw = raw;
    symmetrize(&mut raw, 1.0);
    let unnormalized = TapWeights::new(raw.clone(), t)?;
    let (_, _, _, peak, _) = measure(&unnormalized, Some(design.center_frequency));
    if !(peak > 0.0) {
        return Err(Error::DesignInfeasible("design has no passband".into()));
    }
    let taps = TapWeights::new(raw.iter().map(|a| a / peak).collect(), t)?;
    let (center, width, peak_frequency, _, step) = measure(&taps, Some(design.center_frequency));
    Ok(DesignResult {
        taps,
        achieved_center: center,
        achieved_bandwidth: width,
        peak_frequency,
        grid_step: step,
        normalization: peak,
        notes: format!(
            "windowed sinc bandpass, cutoff {:.6e} Hz, gaussian sigma {} taps, unit peak |H|",
            cutoff,
            if sigma > 0.0 {
                sigma.to_string()
            } else {
                "off".into()
            }
        ),
    })
}

/// Copies the upper half onto the lower half with `sign`, so the symmetry is exact.
fn symmetrize(taps: &mut [f64], sign: f64) {
    let n = taps.len();
    for i in 0..n / 2 {
        taps[i] = sign * taps[n - 1 - i];
    }
    if n % 2 == 1 && sign < 0.0 {
        taps[n / 2] = 0.0;
    }
}

pub fn hilbert_taps(n_taps: usize, tap_spacing: f64) -> Result<DesignResult> {
    hilbert_taps_with(n_taps, tap_spacing, HilbertKernel::Reciprocal)
}

/// Hilbert transformer taps, antisymmetric about the center tap.
pub fn hilbert_taps_with(
    n_taps: usize,
    tap_spacing: f64,
    kernel: HilbertKernel,
) -> Result<DesignResult> {
    if n_taps < 3 || n_taps.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "Hilbert transformer needs an odd tap count >= 3, got {n_taps}"
        )));
    }
    let c = (n_taps / 2) as i64;
    let mut coeffs: Vec<f64> = (0..n_taps as i64)
        .map(|n| {
            let k = n - c;
            match kernel {
                _ if k == 0 => 0.0,
                HilbertKernel::Reciprocal => 1.0 / (PI * k as f64),
                HilbertKernel::OddTaps if k % 2 == 0 => 0.0,
                HilbertKernel::OddTaps => 2.0 / (PI * k as f64),
            }
        })
        .collect();
    symmetrize(&mut coeffs, -1.0);
    let taps = TapWeights::new(coeffs, tap_spacing)?;
    let (center, width, peak_frequency, _, step) = measure(&taps, None);
    Ok(DesignResult {
        taps,
        achieved_center: center,
        achieved_bandwidth: width,
        peak_frequency,
        grid_step: step,
        normalization: 1.0,
        notes: match kernel {
            HilbertKernel::Reciprocal => "hilbert, a_n = 1/(pi (n - c))".into(),
            HilbertKernel::OddTaps => "hilbert, a_n = 2/(pi (n - c)) on odd offsets".into(),
        },
    })
}

pub fn differentiator_taps(n_taps: usize, tap_spacing: f64) -> Result<DesignResult> {
    differentiator_taps_with(n_taps, tap_spacing, &DifferentiatorOptions::default())
}

/// First-order differentiator by frequency sampling.
///
/// Samples `H_k = j 2 pi f_k W(f_k)` at the `N` DFT frequencies of one period,
/// takes the inverse DFT delayed to the tap center, and keeps the real part.
/// `W` is 1 up to `rolloff_start * rf_fsr` and falls to 0 at `rf_fsr / 2` along
/// a raised cosine. The unpaired Nyquist bin of even `N` is left at zero so the
/// taps stay real. Taps are scaled to a largest magnitude of 1.
pub fn differentiator_taps_with(
    n_taps: usize,
    tap_spacing: f64,
    opts: &DifferentiatorOptions,
) -> Result<DesignResult> {
    if n_taps < 3 {
        return Err(Error::invalid(format!(
            "differentiator needs at least 3 taps, got {n_taps}"
        )));
    }
    if !(tap_spacing > 0.0) || !tap_spacing.is_finite() {
        return Err(Error::invalid("tap spacing must be > 0"));
    }
    if !(opts.rolloff_start > 0.0 && opts.rolloff_start <= 0.5) {
        return Err(Error::invalid("rolloff_start must lie in (0, 0.5]"));
    }
    let n = n_taps as f64;
    let c = (n - 1.0) / 2.0;
    let weight = |frac: f64| {
        if frac <= opts.rolloff_start {
            1.0
        } else {
            0.5 * (1.0 + (PI * (frac - opts.rolloff_start) / (0.5 - opts.rolloff_start)).cos())
        }
    };
    // bins k and -k pair into -(2/N) * 2 pi f_k W sin(2 pi k (n - c) / N)
    let bins: Vec<(f64, f64)> = (1..=(n_taps - 1) / 2)
        .map(|k| {
            let frac = k as f64 / n;
            (k as f64, 2.0 * PI * frac / tap_spacing * weight(frac))
        })
        .collect();
    let mut raw: Vec<f64> = (0..n_taps)
        .map(|i| {
            let m = i as f64 - c;
            -(2.0 / n)
                * bins
                    .iter()
                    .map(|&(k, h)| h * (2.0 * PI * k * m / n).sin())
                    .sum::<f64>()
        })
        .collect();
    symmetrize(&mut raw, -1.0);
    let scale = raw.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let taps = TapWeights::new(raw.iter().map(|a| a / scale).collect(), tap_spacing)?;
    let (center, width, peak_frequency, _, step) = measure(&taps, None);
    Ok(DesignResult {
        taps,
        achieved_center: center,
        achieved_bandwidth: width,
        peak_frequency,
        grid_step: step,
        normalization: scale,
        notes: format!(
            "first-order differentiator, frequency sampling on {n_taps} DFT bins, \
             raised-cosine roll-off from {} rf_fsr, unit max |a_n|",
            opts.rolloff_start
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transversal::sidelobe_level;
    use num_complex::Complex64;

    const T: f64 = 26.70e-12;

    fn delay_compensated(taps: &TapWeights, freqs: &[f64]) -> Vec<Complex64> {
        transfer_function(taps, freqs)
            .unwrap()
            .delay_compensated(taps.center_delay())
            .values()
            .to_vec()
    }

    #[test]
    fn sinc_center_tap_before_normalization() {
        let d = BandpassDesign {
            n_taps: 81,
            bandwidth: 1e9,
            center_frequency: 5e9,
            apodization_sigma: 0.0,
        };
        let r = sinc_bandpass_taps(&d, T).unwrap();
        let center = r.taps.coefficients()[40] * r.normalization;
        assert!((center - 2.0 * 0.5e9 * T).abs() < 1e-15);
    }

    #[test]
    fn sinc_achieves_requested_center_and_width() {
        let d = BandpassDesign::apodized(80, 1e9, 10e9);
        let r = sinc_bandpass_taps(&d, T).unwrap();
        let center = r.achieved_center.unwrap();
        assert!((center - 10e9).abs() <= r.grid_step, "{center}");
        assert!((r.peak_frequency - 10e9).abs() <= r.grid_step);
        let bw = r.achieved_bandwidth.unwrap();
        assert!((bw - 1e9).abs() <= 0.15e9, "{bw}");
    }

    #[test]
    fn sinc_tunes_without_changing_width() {
        let widths: Vec<f64> = [5e9, 10e9, 15e9]
            .iter()
            .map(|&f0| {
                let r = sinc_bandpass_taps(&BandpassDesign::apodized(80, 1e9, f0), T).unwrap();
                assert!((r.achieved_center.unwrap() - f0).abs() <= r.grid_step);
                r.achieved_bandwidth.unwrap()
            })
            .collect();
        for w in &widths {
            assert!((w - widths[1]).abs() <= 0.05 * widths[1]);
        }
    }

    #[test]
    fn sinc_is_symmetric_with_real_compensated_response() {
        let r = sinc_bandpass_taps(&BandpassDesign::apodized(80, 1e9, 7e9), T).unwrap();
        let a = r.taps.coefficients();
        for k in 0..40 {
            assert_eq!(a[k], a[79 - k]);
        }
        let fsr = rf_fsr(&r.taps);
        let grid: Vec<f64> = (0..512).map(|i| i as f64 * fsr / 512.0).collect();
        for v in delay_compensated(&r.taps, &grid) {
            assert!(v.im.abs() <= 1e-9);
        }
    }

    #[test]
    fn sinc_rejects_infeasible_requests() {
        let err = sinc_bandpass_taps(&BandpassDesign::apodized(80, 1e9, 30e9), T).unwrap_err();
        assert!(matches!(err, Error::DesignInfeasible(_)));
        assert_eq!(err.exit_code(), 3);
        assert!(sinc_bandpass_taps(&BandpassDesign::apodized(80, 20e9, 5e9), T).is_err());
        assert!(sinc_bandpass_taps(&BandpassDesign::apodized(80, 0.0, 5e9), T).is_err());
        assert!(sinc_bandpass_taps(&BandpassDesign::apodized(1, 1e9, 5e9), T).is_err());
    }

    #[test]
    fn stronger_apodization_lowers_sidelobes() {
        let fsr = 1.0 / T;
        let grid: Vec<f64> = (0..1 << 16)
            .map(|i| i as f64 * 0.5 * fsr / 65536.0)
            .collect();
        let levels: Vec<f64> = [4.0, 6.0, 8.0]
            .iter()
            .map(|&div| {
                let d = BandpassDesign {
                    apodization_sigma: 80.0 / div,
                    ..BandpassDesign::apodized(80, 1e9, 10e9)
                };
                let r = sinc_bandpass_taps(&d, T).unwrap();
                sidelobe_level(&transfer_function(&r.taps, &grid).unwrap())
            })
            .collect();
        assert!(
            levels[1] <= levels[0] && levels[2] <= levels[1],
            "{levels:?}"
        );
        assert!(levels[1] <= -30.0);
    }

    #[test]
    fn hilbert_taps_for_nine() {
        let r = hilbert_taps(9, T).unwrap();
        let a = r.taps.coefficients();
        assert_eq!(a[4], 0.0);
        assert!((a[5] - 1.0 / PI).abs() < 1e-15);
        assert!((a[3] + 1.0 / PI).abs() < 1e-15);
        assert!((a[6] - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((a[2] + 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn hilbert_needs_odd_taps() {
        assert!(matches!(
            hilbert_taps(80, T),
            Err(Error::InvalidArgument(_))
        ));
        assert!(hilbert_taps(1, T).is_err());
    }

    fn hilbert_ripple_db(n: usize, kernel: HilbertKernel) -> f64 {
        let r = hilbert_taps_with(n, T, kernel).unwrap();
        let half = 0.5 / T;
        let grid: Vec<f64> = (0..=800)
            .map(|i| half * (0.1 + 0.8 * i as f64 / 800.0))
            .collect();
        let mags: Vec<f64> = delay_compensated(&r.taps, &grid)
            .iter()
            .map(|v| v.norm())
            .collect();
        let (lo, hi) = mags
            .iter()
            .fold((f64::MAX, 0.0f64), |(lo, hi), &m| (lo.min(m), hi.max(m)));
        20.0 * (hi / lo).log10()
    }

    #[test]
    fn odd_tap_hilbert_ripple_shrinks_with_length() {
        let r: Vec<f64> = [21, 41, 81]
            .iter()
            .map(|&n| hilbert_ripple_db(n, HilbertKernel::OddTaps))
            .collect();
        assert!(r[2] <= 3.0);
        assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
    }

    #[test]
    fn reciprocal_hilbert_has_a_sloped_magnitude() {
        // sum_k sin(k w) / k -> (pi - w) / 2, so |H| falls linearly across the half-band
        let r = hilbert_ripple_db(81, HilbertKernel::Reciprocal);
        assert!((r - 20.0 * 9f64.log10()).abs() < 1.5, "{r}");
    }

    #[test]
    fn differentiator_annihilates_dc_and_is_antisymmetric() {
        for n in [3, 4, 21, 80, 81] {
            let r = differentiator_taps(n, T).unwrap();
            let a = r.taps.coefficients();
            assert!(a.iter().sum::<f64>().abs() <= 1e-12);
            for k in 0..n / 2 {
                assert_eq!(a[k], -a[n - 1 - k]);
            }
            assert_eq!(a.iter().fold(0.0f64, |m, x| m.max(x.abs())), 1.0);
        }
        assert!(differentiator_taps(2, T).is_err());
    }

    #[test]
    fn plain_frequency_sampling_matches_inverse_dft() {
        // direct inverse DFT of H_k = j 2 pi f_k, circularly shifted to the center
        let n = 21usize;
        let r =
            differentiator_taps_with(n, T, &DifferentiatorOptions { rolloff_start: 0.5 }).unwrap();
        let h: Vec<Complex64> = (0..n)
            .map(|k| {
                let signed = if k <= n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                Complex64::new(0.0, 2.0 * PI * signed / (n as f64 * T))
            })
            .collect();
        let idft: Vec<Complex64> = (0..n)
            .map(|m| {
                (0..n)
                    .map(|k| {
                        h[k] * Complex64::from_polar(1.0, 2.0 * PI * (k * m) as f64 / n as f64)
                    })
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect();
        let imag = idft.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        let scale = idft.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
        assert!(imag <= 1e-12 * scale);
        let shift = (n - 1) / 2;
        for (i, &a) in r.taps.coefficients().iter().enumerate() {
            let want = idft[(i + n - shift) % n].re / r.normalization;
            assert!((a - want).abs() < 1e-12, "{i}: {a} vs {want}");
        }
    }

    #[test]
    fn request_dispatch() {
        let req: DesignRequest = serde_json::from_str(r#"{"kind":"hilbert","n_taps":9}"#).unwrap();
        assert_eq!(req.design(T).unwrap().taps.len(), 9);
        let req: DesignRequest =
            serde_json::from_str(r#"{"kind":"differentiator","n_taps":9}"#).unwrap();
        assert_eq!(req.n_taps(), 9);
        assert!(
            serde_json::from_str::<DesignRequest>(r#"{"kind":"hilbert","n_taps":9,"x":1}"#)
                .is_err()
        );
    }
}
