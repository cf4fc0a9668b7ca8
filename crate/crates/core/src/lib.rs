//! Simulation toolkit for microcomb-based photonic RF signal processing.
//!
//! A Kerr soliton-crystal comb supplies many equally spaced optical lines.
//! Each line carries a replica of an RF signal, a dispersive link delays the
//! replicas progressively, and the per-line powers set the tap weights of a
//! transversal (FIR) processor. The same multi-wavelength source drives
//! true-time-delay beamformers and Vernier-FSR channelizers.
//!
//! Modules:
//!
//! - [`comb`]: parametric comb spectra and FSR/wavelength conversion
//! - [`shaper`]: two-stage spectral shaping with closed-loop calibration
//! - [`transversal`]: the broadcast-delay-sum engine and its figures of merit
//! - [`designs`]: bandpass, Hilbert and differentiator tap designers
//! - [`beamform`]: true time delays, array factors and beamwidth
//! - [`channelizer`]: Vernier channel plans, spectrum slicing and binary weighting
//! - [`sigio`]: scenario configuration, containers and CSV/JSON output
//! - [`cli`]: experiments composed from the modules above

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamform;
pub mod channelizer;
pub mod cli;
pub mod comb;
pub mod designs;
mod error;
pub mod shaper;
pub mod sigio;
pub mod transversal;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
