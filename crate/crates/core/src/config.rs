//! Sensor prototype configuration and surface geometry.
//!
//! Surface coordinates are millimetres with the origin at the corner of
//! taxel (0, 0): `x` runs along columns, `y` along rows. Taxel (r, c) has its
//! centre at `((c + 0.5) * pitch, (r + 0.5) * pitch)` and a square sensing
//! area of side `taxel_size_mm`; the rest of each pitch cell is insulating
//! margin.

use crate::error::{Result, SensorError};
use serde::{Deserialize, Serialize};
use std::path::Path;

const PRESET_4X4: &str = include_str!("../presets/4x4.toml");
const PRESET_3X16: &str = include_str!("../presets/3x16.toml");
const PRESET_8X8: &str = include_str!("../presets/8x8.toml");

/// Names of the shipped presets.
pub const PRESET_NAMES: [&str; 3] = ["4x4", "3x16", "8x8"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    #[serde(default)]
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub taxel_pitch_mm: f64,
    pub taxel_size_mm: f64,
    pub margin_width_mm: f64,
    /// Resistance of one stripe segment between adjacent crossings.
    pub r_margin_ohm: f64,
    pub r_ref_ohm: f64,
    pub vcc_volts: f64,
    pub adc_full_scale: u32,
    pub adc_max_code: u32,
    pub t_write_us: f64,
    pub t_read_us: f64,
}

impl SensorConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "4x4" => PRESET_4X4,
            "3x16" => PRESET_3X16,
            "8x8" => PRESET_8X8,
            other => return Err(SensorError::UnknownPreset(other.to_string())),
        };
        Self::from_toml_str(text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| SensorError::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SensorError::ConfigParse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SensorConfig serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(SensorError::InvalidConfig(msg.to_string()));
        if self.rows == 0 || self.cols == 0 {
            return fail("rows and cols must be at least 1");
        }
        if self.rows > u8::MAX as usize || self.cols > u8::MAX as usize {
            return fail("rows and cols must fit the frame header (<= 255)");
        }
        if !(self.r_ref_ohm > 0.0) || !self.r_ref_ohm.is_finite() {
            return fail("r_ref_ohm must be positive");
        }
        // Zero margin resistance models an ideal stripe; the solver contracts it.
        if !(self.r_margin_ohm >= 0.0) || !self.r_margin_ohm.is_finite() {
            return fail("r_margin_ohm must be non-negative");
        }
        if !(self.vcc_volts > 0.0) {
            return fail("vcc_volts must be positive");
        }
        if self.adc_full_scale < 2 || self.adc_max_code + 1 != self.adc_full_scale {
            return fail("adc_max_code must equal adc_full_scale - 1");
        }
        if self.adc_full_scale > u16::MAX as u32 + 1 {
            return fail("adc_full_scale must fit 16-bit codes");
        }
        if !(self.taxel_size_mm > 0.0) || !(self.margin_width_mm >= 0.0) {
            return fail("taxel size must be positive and margin non-negative");
        }
        if self.taxel_pitch_mm + 1e-9 < self.taxel_size_mm {
            return fail("taxel_pitch_mm must be at least taxel_size_mm");
        }
        if !(self.t_write_us > 0.0) || !(self.t_read_us > 0.0) {
            return fail("t_write_us and t_read_us must be positive");
        }
        Ok(())
    }

    pub fn taxel_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn check_index(&self, row: usize, col: usize) -> Result<()> {
        if row < self.rows && col < self.cols {
            Ok(())
        } else {
            Err(SensorError::IndexOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn width_mm(&self) -> f64 {
        self.cols as f64 * self.taxel_pitch_mm
    }

    pub fn height_mm(&self) -> f64 {
        self.rows as f64 * self.taxel_pitch_mm
    }

    /// Centre of taxel (row, col) as `(x, y)` in millimetres.
    pub fn taxel_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            (col as f64 + 0.5) * self.taxel_pitch_mm,
            (row as f64 + 0.5) * self.taxel_pitch_mm,
        )
    }

    /// Sensing area of taxel (row, col) as `(x0, y0, x1, y1)`.
    pub fn taxel_rect(&self, row: usize, col: usize) -> (f64, f64, f64, f64) {
        let (cx, cy) = self.taxel_center(row, col);
        let h = self.taxel_size_mm / 2.0;
        (cx - h, cy - h, cx + h, cy + h)
    }

    /// Taxel whose pitch cell contains the point, if the point is on the sensor.
    pub fn taxel_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if x < 0.0 || y < 0.0 || x >= self.width_mm() || y >= self.height_mm() {
            return None;
        }
        let col = (x / self.taxel_pitch_mm).floor() as usize;
        let row = (y / self.taxel_pitch_mm).floor() as usize;
        Some((row.min(self.rows - 1), col.min(self.cols - 1)))
    }

    /// Nearest taxel to a point, clamping points outside the surface.
    pub fn nearest_taxel(&self, x: f64, y: f64) -> (usize, usize) {
        let clamp = |v: f64, n: usize| {
            let i = (v / self.taxel_pitch_mm).floor();
            (i.max(0.0) as usize).min(n - 1)
        };
        (clamp(y, self.rows), clamp(x, self.cols))
    }

    /// Time to select and read one taxel.
    pub fn taxel_period_us(&self) -> f64 {
        self.t_write_us + self.t_read_us
    }
}
