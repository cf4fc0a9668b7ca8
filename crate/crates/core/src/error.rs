use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target for comb line {index} is unreachable: needs {required_db:.3} dB of attenuation, shaper floor is {floor_db:.3} dB")]
    UnreachableTarget {
        index: i64,
        required_db: f64,
        floor_db: f64,
    },

    #[error("degenerate delay: tap spacing is zero (dispersion {dispersion_ps_nm_km} ps/nm/km, length {length_km} km)")]
    DegenerateDelay {
        dispersion_ps_nm_km: f64,
        length_km: f64,
    },

    #[error("bandwidth unresolved: {0}")]
    BandwidthUnresolved(String),

    #[error("tap spacing is {ratio} samples at the given rate; resample so it is an integer")]
    SampleAlignment { ratio: f64 },

    #[error("design infeasible: {0}")]
    DesignInfeasible(String),

    #[error("steering unreachable: |c*tau/d| = {ratio:.4} > 1")]
    UnreachableSteering { ratio: f64 },

    #[error("invalid channel plan: {0}")]
    InvalidPlan(String),

    #[error(
        "input spectrum does not cover channel {channel} ({low_hz:.6e} Hz to {high_hz:.6e} Hz)"
    )]
    Coverage {
        channel: usize,
        low_hz: f64,
        high_hz: f64,
    },

    #[error("validation failed for `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 validation, 3 numeric/infeasible, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::Validation { .. }
            | Error::Parse { .. }
            | Error::InvalidPlan(_) => 2,
            Error::UnreachableTarget { .. }
            | Error::DegenerateDelay { .. }
            | Error::BandwidthUnresolved(_)
            | Error::SampleAlignment { .. }
            | Error::DesignInfeasible(_)
            | Error::UnreachableSteering { .. }
            | Error::Coverage { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}
