use crate::config::SensorConfig;
use crate::error::{Result, SensorError};
use crate::network::scan_frame_static;
use crate::pressure::{field_to_resistance, ContactPatch, PressureField, TransferParams};
use crate::readout::Frame;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Linear reading-vs-force fit of one taxel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaxelCalibration {
    /// ADC counts per newton.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub force_min_n: f64,
    pub force_max_n: f64,
}

impl TaxelCalibration {
    pub fn force_from_reading(&self, reading: f64) -> f64 {
        (reading - self.intercept) / self.slope
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub rows: usize,
    pub cols: usize,
    /// Row-major; `None` marks an uncalibrated taxel.
    pub taxels: Vec<Option<TaxelCalibration>>,
}

impl CalibrationTable {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            taxels: vec![None; rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&TaxelCalibration> {
        if row >= self.rows || col >= self.cols {
            return None;
        }
        self.taxels[row * self.cols + col].as_ref()
    }

    pub fn calibrated_count(&self) -> usize {
        self.taxels.iter().flatten().count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text).map_err(|e| SensorError::ConfigParse(e.to_string()))?;
        if t.taxels.len() != t.rows * t.cols {
            return Err(SensorError::ConfigParse("calibration table size mismatch".into()));
        }
        Ok(t)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| SensorError::ConfigParse(e.to_string()))?;
        Self::from_json(&text)
    }
}

/// A frame recorded while a known force loaded one taxel.
#[derive(Debug, Clone)]
pub struct CalibrationSample {
    pub frame: Frame,
    pub taxel: (usize, usize),
    pub force_n: f64,
}

/// Ordinary least squares `y = slope * x + intercept` with its R^2.
/// `None` when the abscissae are all equal.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 0.0 };
    Some((slope, intercept, r2))
}

/// Per-taxel linear fit of reading against applied force.
///
/// Taxels with fewer than two distinct forces, or a non-increasing fit, are
/// left uncalibrated.
pub fn calibrate(rows: usize, cols: usize, samples: &[CalibrationSample]) -> CalibrationTable {
    let mut per_taxel: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); rows * cols];
    for s in samples {
        let (r, c) = s.taxel;
        if r < rows && c < cols && r < s.frame.rows() && c < s.frame.cols() {
            let bucket = &mut per_taxel[r * cols + c];
            bucket.0.push(s.force_n);
            bucket.1.push(s.frame.reading(r, c) as f64);
        }
    }
    let taxels = per_taxel
        .iter()
        .map(|(forces, readings)| {
            let (slope, intercept, r_squared) = fit_line(forces, readings)?;
            (slope > 0.0).then(|| TaxelCalibration {
                slope,
                intercept,
                r_squared,
                force_min_n: forces.iter().copied().fold(f64::INFINITY, f64::min),
                force_max_n: forces.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect();
    CalibrationTable { rows, cols, taxels }
}

/// Simulates the indenter calibration routine: a flat disk centred on each
/// taxel in turn, loaded through every force in `forces_n`.
pub fn simulate_ramp(config: &SensorConfig, params: &TransferParams, forces_n: &[f64]) -> Result<Vec<CalibrationSample>> {
    let radius = (0.4 * config.taxel_size_mm).min(10.0);
    let mut samples = Vec::with_capacity(config.taxel_count() * forces_n.len());
    for row in 0..config.rows {
        for col in 0..config.cols {
            let (x, y) = config.taxel_center(row, col);
            for &f in forces_n {
                let field = PressureField::new(vec![ContactPatch::disk("indenter", x, y, radius, f)]);
                let r = field_to_resistance(&field, config, params, None);
                samples.push(CalibrationSample {
                    frame: scan_frame_static(config, &r)?,
                    taxel: (row, col),
                    force_n: f,
                });
            }
        }
    }
    Ok(samples)
}

/// Forces of the default calibration ramp: 5 N to 30 N in 1 N steps.
pub fn default_ramp_forces() -> Vec<f64> {
    (5..=30).map(f64::from).collect()
}
