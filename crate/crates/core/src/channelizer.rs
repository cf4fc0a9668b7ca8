//! Vernier-FSR RF channelization.
//!
//! The RF spectrum is multicast onto every comb line and sliced by a periodic
//! optical filter whose FSR differs slightly from the comb's. Line `k` then
//! selects the RF segment centered at `base_offset + k * (filter_fsr - comb_fsr)`.
//! Demultiplexing and detection are ideal: each channel returns the input
//! power weighted by its lineshape.

use serde::{Deserialize, Serialize};

use crate::sigio::{check_grid, format_number, CsvExport, Spectrum};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Lineshape {
    /// Unit response on `[center - B/2, center + B/2)`.
    Rectangular,
    /// `1 / (1 + (2 (f - center) / fwhm)^2)`.
    Lorentzian { fwhm: f64 },
}

impl Lineshape {
    /// Power response at `offset` Hz from the channel center.
    pub fn response(&self, offset: f64, channel_bandwidth: f64) -> f64 {
        match *self {
            Lineshape::Rectangular => {
                let half = 0.5 * channel_bandwidth;
                if offset >= -half && offset < half {
                    1.0
                } else {
                    0.0
                }
            }
            Lineshape::Lorentzian { fwhm } => {
                let x = 2.0 * offset / fwhm;
                1.0 / (1.0 + x * x)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelPlan {
    pub comb_fsr: f64,
    pub filter_fsr: f64,
    pub n_channels: usize,
    /// RF frequency sliced by channel 0.
    pub base_offset: f64,
    pub channel_bandwidth: f64,
    pub lineshape: Lineshape,
}

impl ChannelPlan {
    /// Lorentzian channels with FWHM equal to the channel bandwidth.
    pub fn new(
        comb_fsr: f64,
        filter_fsr: f64,
        n_channels: usize,
        base_offset: f64,
        channel_bandwidth: f64,
    ) -> Self {
        ChannelPlan {
            comb_fsr,
            filter_fsr,
            n_channels,
            base_offset,
            channel_bandwidth,
            lineshape: Lineshape::Lorentzian {
                fwhm: channel_bandwidth,
            },
        }
    }

    pub fn with_lineshape(mut self, lineshape: Lineshape) -> Self {
        self.lineshape = lineshape;
        self
    }

    /// Vernier step `filter_fsr - comb_fsr`.
    pub fn channel_spacing(&self) -> f64 {
        self.filter_fsr - self.comb_fsr
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, c: &str| Err(Error::validation(field, c));
        if !(self.comb_fsr > 0.0) || !self.comb_fsr.is_finite() {
            return bad("comb_fsr", "comb_fsr > 0");
        }
        if !(self.filter_fsr > 0.0) || !self.filter_fsr.is_finite() {
            return bad("filter_fsr", "filter_fsr > 0");
        }
        if self.filter_fsr == self.comb_fsr {
            return bad("filter_fsr", "filter_fsr != comb_fsr");
        }
        if self.n_channels < 1 {
            return bad("n_channels", "n_channels >= 1");
        }
        if !self.base_offset.is_finite() {
            return bad("base_offset", "base_offset finite");
        }
        if !(self.channel_bandwidth > 0.0) || !self.channel_bandwidth.is_finite() {
            return bad("channel_bandwidth", "channel_bandwidth > 0");
        }
        if let Lineshape::Lorentzian { fwhm } = self.lineshape {
            if !(fwhm > 0.0) || !fwhm.is_finite() {
                return bad("lineshape.fwhm", "fwhm > 0");
            }
        }
        Ok(())
    }

    /// Half-width of the band a channel must see in the input grid.
    fn support_half_width(&self) -> f64 {
        match self.lineshape {
            Lineshape::Rectangular => 0.5 * self.channel_bandwidth,
            Lineshape::Lorentzian { fwhm } => 0.5 * fwhm,
        }
    }
}

/// RF centers `base_offset + k * (filter_fsr - comb_fsr)`.
pub fn channel_centers(plan: &ChannelPlan) -> Result<Vec<f64>> {
    plan.validate()?;
    let step = plan.channel_spacing();
    let centers: Vec<f64> = (0..plan.n_channels)
        .map(|k| plan.base_offset + k as f64 * step)
        .collect();
    if let Some(k) = centers.iter().position(|&f| f < 0.0) {
        return Err(Error::InvalidPlan(format!(
            "channel {k} maps to a negative RF frequency ({:.6e} Hz)",
            centers[k]
        )));
    }
    Ok(centers)
}

/// Total RF bandwidth processed, `n_channels * channel_bandwidth`.
pub fn operation_bandwidth(plan: &ChannelPlan) -> Result<f64> {
    plan.validate()?;
    Ok(plan.n_channels as f64 * plan.channel_bandwidth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub index: usize,
    pub rf_center: f64,
    pub weight: f64,
    /// First source-grid index covered by `power`.
    pub start: usize,
    /// Linear power on `frequencies[start..start + power.len()]`.
    pub power: Vec<f64>,
}

impl Channel {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelizedSpectrum {
    frequencies: Vec<f64>,
    channels: Vec<Channel>,
}

impl ChannelizedSpectrum {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn weights(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.weight).collect()
    }

    /// One channel's segment on its slice of the source grid.
    pub fn segment(&self, channel: usize) -> Result<Spectrum> {
        let ch = self
            .channels
            .get(channel)
            .ok_or_else(|| Error::invalid(format!("no channel {channel}")))?;
        let grid = self.frequencies[ch.start..ch.start + ch.power.len()].to_vec();
        Spectrum::from_linear(grid, &ch.power)
    }

    pub fn manifest(&self) -> ChannelManifest {
        ChannelManifest(
            self.channels
                .iter()
                .map(|c| (c.index, c.rf_center, c.weight))
                .collect(),
        )
    }
}

/// `(channel index, rf_center_hz, weight)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelManifest(pub Vec<(usize, f64, f64)>);

impl CsvExport for ChannelManifest {
    fn header(&self) -> Vec<&'static str> {
        vec!["channel", "rf_center_hz", "weight"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|(i, f, w)| vec![i.to_string(), format_number(*f), format_number(*w)])
            .collect()
    }
}

/// Slices `rf_spectrum` into one segment per channel.
///
/// Rectangular channels keep exactly the in-band grid points; Lorentzian
/// channels weight the whole grid by their profile. Every channel's band
/// (FWHM for Lorentzian) must lie inside the input grid.
pub fn slice_spectrum(plan: &ChannelPlan, rf_spectrum: &Spectrum) -> Result<ChannelizedSpectrum> {
    let centers = channel_centers(plan)?;
    let freqs = rf_spectrum.frequencies();
    if freqs.is_empty() {
        return Err(Error::Coverage {
            channel: 0,
            low_hz: centers[0] - plan.support_half_width(),
            high_hz: centers[0] + plan.support_half_width(),
        });
    }
    let power = rf_spectrum.to_linear();
    let (first, last) = (freqs[0], freqs[freqs.len() - 1]);
    let half = plan.support_half_width();
    let channels = centers
        .iter()
        .enumerate()
        .map(|(k, &fc)| {
            let (lo, hi) = (fc - half, fc + half);
            if lo < first || hi > last {
                return Err(Error::Coverage {
                    channel: k,
                    low_hz: lo,
                    high_hz: hi,
                });
            }
            let (start, end) = match plan.lineshape {
                Lineshape::Rectangular => (
                    freqs.partition_point(|&f| f < lo),
                    freqs.partition_point(|&f| f < hi),
                ),
                Lineshape::Lorentzian { .. } => (0, freqs.len()),
            };
            let seg = (start..end)
                .map(|i| {
                    power[i]
                        * plan
                            .lineshape
                            .response(freqs[i] - fc, plan.channel_bandwidth)
                })
                .collect();
            Ok(Channel {
                index: k,
                rf_center: fc,
                weight: 1.0,
                start,
                power: seg,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelizedSpectrum {
        frequencies: freqs.to_vec(),
        channels,
    })
}

/// Scales each channel by its weight (0 switches it off).
///
/// Weights compose multiplicatively, so binary masks are idempotent.
pub fn apply_binary_weights(
    channelized: &ChannelizedSpectrum,
    weights: &[f64],
) -> Result<ChannelizedSpectrum> {
    if weights.len() != channelized.channels.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} channels",
            weights.len(),
            channelized.channels.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid(format!(
            "weights must be finite and >= 0, got {w}"
        )));
    }
    let channels = channelized
        .channels
        .iter()
        .zip(weights)
        .map(|(ch, &w)| Channel {
            weight: ch.weight * w,
            power: ch.power.iter().map(|p| p * w).collect(),
            ..ch.clone()
        })
        .collect();
    Ok(ChannelizedSpectrum {
        frequencies: channelized.frequencies.clone(),
        channels,
    })
}

/// Sums the (weighted) segments back onto the source grid, linear power.
pub fn reconstruct_linear(channelized: &ChannelizedSpectrum) -> Result<Vec<f64>> {
    check_grid(&channelized.frequencies)?;
    let mut out = vec![0.0; channelized.frequencies.len()];
    for ch in &channelized.channels {
        let end = ch.start + ch.power.len();
        if end > out.len() {
            return Err(Error::invalid(format!(
                "channel {} segment runs past the source grid",
                ch.index
            )));
        }
        for (o, p) in out[ch.start..end].iter_mut().zip(&ch.power) {
            *o += p;
        }
    }
    Ok(out)
}

pub fn reconstruct(channelized: &ChannelizedSpectrum) -> Result<Spectrum> {
    let power = reconstruct_linear(channelized)?;
    Spectrum::from_linear(channelized.frequencies.clone(), &power)
}

/// Composite power transmission `sum_k w_k L_k(f)` on `grid`.
pub fn transmission(plan: &ChannelPlan, weights: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let centers = channel_centers(plan)?;
    if weights.len() != centers.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} channels",
            weights.len(),
            centers.len()
        )));
    }
    Ok(grid
        .iter()
        .map(|&f| {
            centers
                .iter()
                .zip(weights)
                .map(|(&fc, &w)| w * plan.lineshape.response(f - fc, plan.channel_bandwidth))
                .sum()
        })
        .collect())
}
