//! Taxel resistance state, scan frames and the reference-divider readout.
//!
//! The ADC measures the voltage across the reference resistor, which sits in
//! series with the addressed resistor network:
//!
//! ```text
//! tr = full_scale * r_ref / (r_ref + r_network)
//! r_network = r_ref * (full_scale / tr - 1)
//! ```
//!
//! Conversions use the full scale (1024) in the formula and clamp emitted
//! codes to the largest code the converter can produce (1023).

use crate::config::SensorConfig;
use crate::error::{Result, SensorError};
use crate::grid::Grid;
use serde::{Deserialize, Serialize};

/// Full scale of the 10-bit converter used by all prototypes.
pub const ADC_FULL_SCALE: u32 = 1024;
pub const ADC_MAX_CODE: u32 = ADC_FULL_SCALE - 1;

/// A resistance value, or an open circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Resistance {
    Ohms(f64),
    Open,
}

impl Resistance {
    pub fn is_open(self) -> bool {
        matches!(self, Resistance::Open)
    }

    pub fn ohms(self) -> Option<f64> {
        match self {
            Resistance::Ohms(r) => Some(r),
            Resistance::Open => None,
        }
    }

    /// Conductance in siemens; an open circuit conducts nothing.
    pub fn conductance(self) -> f64 {
        match self {
            Resistance::Ohms(r) => 1.0 / r,
            Resistance::Open => 0.0,
        }
    }
}

/// Per-taxel resistance state of one sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceMatrix(Grid<Resistance>);

impl ResistanceMatrix {
    pub fn open(rows: usize, cols: usize) -> Self {
        Self(Grid::filled(rows, cols, Resistance::Open))
    }

    pub fn new(grid: Grid<Resistance>) -> Result<Self> {
        for (_, r) in grid.indexed() {
            if let Resistance::Ohms(v) = r {
                if !(*v > 0.0) || !v.is_finite() {
                    return Err(SensorError::InvalidParameter(format!(
                        "taxel resistance must be finite and positive, got {v}"
                    )));
                }
            }
        }
        Ok(Self(grid))
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> Resistance {
        self.0[(row, col)]
    }

    /// Sets one taxel. Panics on a non-positive finite value.
    pub fn set(&mut self, row: usize, col: usize, value: Resistance) {
        if let Resistance::Ohms(v) = value {
            assert!(v > 0.0 && v.is_finite(), "taxel resistance must be positive");
        }
        self.0[(row, col)] = value;
    }

    pub fn grid(&self) -> &Grid<Resistance> {
        &self.0
    }

    pub fn finite_count(&self) -> usize {
        self.0.as_slice().iter().filter(|r| !r.is_open()).count()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn check_dims(&self, config: &SensorConfig) -> Result<()> {
        if self.rows() != config.rows || self.cols() != config.cols {
            return Err(SensorError::DimensionMismatch {
                rows: config.rows,
                cols: config.cols,
                got_rows: self.rows(),
                got_cols: self.cols(),
            });
        }
        Ok(())
    }
}

/// One full scan of ADC codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t_start_us: f64,
    pub counts: Grid<u16>,
    /// Sampling instant of every taxel, when the scan is time-resolved.
    pub per_taxel_time_us: Option<Grid<f64>>,
}

impl Frame {
    pub fn new(t_start_us: f64, counts: Grid<u16>) -> Self {
        Self {
            t_start_us,
            counts,
            per_taxel_time_us: None,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(0.0, Grid::filled(rows, cols, 0))
    }

    pub fn rows(&self) -> usize {
        self.counts.rows()
    }

    pub fn cols(&self) -> usize {
        self.counts.cols()
    }

    pub fn reading(&self, row: usize, col: usize) -> u16 {
        self.counts[(row, col)]
    }

    /// Checks the code range and that sampling instants increase in scan order.
    pub fn validate(&self, max_code: u32) -> Result<()> {
        if let Some(&bad) = self.counts.as_slice().iter().find(|&&c| c as u32 > max_code) {
            return Err(SensorError::ReadingOutOfRange {
                reading: bad as u32,
                full_scale: max_code + 1,
            });
        }
        if let Some(times) = &self.per_taxel_time_us {
            if times.rows() != self.rows() || times.cols() != self.cols() {
                return Err(SensorError::DimensionMismatch {
                    rows: self.rows(),
                    cols: self.cols(),
                    got_rows: times.rows(),
                    got_cols: times.cols(),
                });
            }
            if times.as_slice().windows(2).any(|w| w[1] <= w[0]) {
                return Err(SensorError::InvalidParameter(
                    "per-taxel sampling times must increase in scan order".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Network resistance seen through a reading `tr` with full scale 1024.
///
/// A zero reading means no current reaches the reference resistor and is
/// reported as [`Resistance::Open`].
pub fn network_resistance_from_reading(tr: u32, r_ref: f64) -> Result<Resistance> {
    network_resistance_from_reading_scaled(tr, r_ref, ADC_FULL_SCALE)
}

pub fn network_resistance_from_reading_scaled(
    tr: u32,
    r_ref: f64,
    full_scale: u32,
) -> Result<Resistance> {
    if tr > full_scale {
        return Err(SensorError::ReadingOutOfRange {
            reading: tr,
            full_scale,
        });
    }
    if tr == 0 {
        return Ok(Resistance::Open);
    }
    Ok(Resistance::Ohms(r_ref * (full_scale as f64 / tr as f64 - 1.0)))
}

/// ADC code produced by a network of resistance `r_net` against `r_ref`.
pub fn reading_from_network_resistance(r_net: Resistance, r_ref: f64) -> u16 {
    reading_from_network_resistance_scaled(r_net, r_ref, ADC_FULL_SCALE)
}

pub fn reading_from_network_resistance_scaled(
    r_net: Resistance,
    r_ref: f64,
    full_scale: u32,
) -> u16 {
    match r_net {
        Resistance::Open => 0,
        Resistance::Ohms(r) => quantize(r_ref / (r_ref + r.max(0.0)), full_scale),
    }
}

/// Quantizes a divider ratio in [0, 1] to an ADC code.
pub fn quantize(ratio: f64, full_scale: u32) -> u16 {
    let code = (full_scale as f64 * ratio).round();
    code.clamp(0.0, (full_scale - 1) as f64) as u16
}

/// Margin segments in series with taxel (row, col) on the direct current path.
///
/// Indices are zero-based; the counts include the segment between each
/// connector and the first crossing, so they equal the one-based column and
/// row indices: `(n_col_margins, n_row_margins) = (col + 1, row + 1)`.
pub fn series_margin_counts(config: &SensorConfig, row: usize, col: usize) -> Result<(usize, usize)> {
    config.check_index(row, col)?;
    Ok((col + 1, row + 1))
}
