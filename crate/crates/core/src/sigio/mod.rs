//! Shared containers and file output.
//!
//! Serialized spectra are in dB; linear power lives only in memory. CSV files
//! use a comma separator, a header row, `.` decimals and 12 significant
//! digits, so identical inputs give byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

mod scenario;

pub use scenario::*;

/// A real, uniformly sampled waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    sample_rate: f64,
    samples: Vec<f64>,
}

impl Waveform {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::invalid(format!(
                "sample rate must be > 0, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Waveform {
            sample_rate,
            samples,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Power spectrum on a strictly increasing frequency grid, powers in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    frequencies: Vec<f64>,
    power_db: Vec<f64>,
}

impl Spectrum {
    pub fn new(frequencies: Vec<f64>, power_db: Vec<f64>) -> Result<Self> {
        check_grid(&frequencies)?;
        if frequencies.len() != power_db.len() {
            return Err(Error::invalid(format!(
                "{} frequencies but {} powers",
                frequencies.len(),
                power_db.len()
            )));
        }
        if power_db.iter().any(|p| p.is_nan() || *p == f64::INFINITY) {
            return Err(Error::invalid("spectrum powers must be finite or -inf"));
        }
        Ok(Spectrum {
            frequencies,
            power_db,
        })
    }

    /// Builds a spectrum from linear power; zero power maps to `-inf` dB.
    pub fn from_linear(frequencies: Vec<f64>, power: &[f64]) -> Result<Self> {
        if power.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("linear power must be finite and >= 0"));
        }
        let db = power.iter().map(|&p| 10.0 * p.log10()).collect();
        Spectrum::new(frequencies, db)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn power_db(&self) -> &[f64] {
        &self.power_db
    }

    pub fn to_linear(&self) -> Vec<f64> {
        self.power_db.iter().map(|p| 10f64.powf(p / 10.0)).collect()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(i) = grid.iter().position(|f| !f.is_finite()) {
        return Err(Error::invalid(format!("grid point {i} is not finite")));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "grid must be strictly increasing (index {})",
            i + 1
        )));
    }
    Ok(())
}

/// `n` evenly spaced points on `[start, stop]` (inclusive).
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|i| start + i as f64 * step).collect()
        }
    }
}

/// Fixed 12-significant-digit scientific notation, independent of locale.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// A table that can be written as CSV.
pub trait CsvExport {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
}

pub fn write_csv(table: &dyn CsvExport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = csv_bytes(table).map_err(|e| Error::io(path, e))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn csv_bytes(table: &dyn CsvExport) -> std::io::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(table.header())?;
    for row in table.rows() {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: format!("at `{}`: {}", e.path(), e.inner()),
    })
}

impl CsvExport for Spectrum {
    fn header(&self) -> Vec<&'static str> {
        vec!["frequency_hz", "power_db"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.frequencies
            .iter()
            .zip(&self.power_db)
            .map(|(f, p)| vec![format_number(*f), format_number(*p)])
            .collect()
    }
}

impl CsvExport for Waveform {
    fn header(&self) -> Vec<&'static str> {
        vec!["time_s", "amplitude"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                vec![
                    format_number(i as f64 / self.sample_rate),
                    format_number(*s),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Empty;

    impl CsvExport for Empty {
        fn header(&self) -> Vec<&'static str> {
            vec!["iteration", "max_error_db"]
        }
        fn rows(&self) -> Vec<Vec<String>> {
            Vec::new()
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let bytes = csv_bytes(&Empty).unwrap();
        assert_eq!(bytes, b"iteration,max_error_db\n");
    }

    #[test]
    fn spectrum_of_three_points_has_four_lines() {
        let s = Spectrum::new(vec![1.0, 2.0, 3.0], vec![0.0, -3.0, f64::NEG_INFINITY]).unwrap();
        let text = String::from_utf8(csv_bytes(&s).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(text.ends_with('\n'));
        assert_eq!(lines[0], "frequency_hz,power_db");
        assert_eq!(lines[1], "1.00000000000e0,0.00000000000e0");
        assert_eq!(lines[3], "3.00000000000e0,-inf");
    }

    #[test]
    fn number_format_has_twelve_significant_digits() {
        assert_eq!(format_number(49e9), "4.90000000000e10");
        assert_eq!(format_number(-1.0 / 3.0), "-3.33333333333e-1");
        assert_eq!(format_number(0.0), "0.00000000000e0");
    }

    #[test]
    fn containers_validate() {
        assert!(Waveform::new(0.0, vec![]).is_err());
        assert!(Waveform::new(1.0, vec![f64::NAN]).is_err());
        assert!(Spectrum::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0]).is_err());
        let s = Spectrum::from_linear(vec![0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(s.power_db()[1], f64::NEG_INFINITY);
        assert_eq!(s.to_linear(), vec![1.0, 0.0]);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = write_csv(&Empty, "/nonexistent-dir/x.csv").unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
