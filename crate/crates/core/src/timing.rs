use crate::config::SensorConfig;
use crate::error::{Result, SensorError};
use serde::{Deserialize, Serialize};

/// Multiplexer write time and ADC settle/read time for one taxel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanTiming {
    pub t_write_us: f64,
    pub t_read_us: f64,
}

impl Default for ScanTiming {
    fn default() -> Self {
        // Two 16-channel muxes, four select lines each, 3.4 us per digital write.
        Self {
            t_write_us: 3.4 * 4.0 * 2.0,
            t_read_us: 400.0,
        }
    }
}

impl ScanTiming {
    pub fn from_config(config: &SensorConfig) -> Self {
        Self {
            t_write_us: config.t_write_us,
            t_read_us: config.t_read_us,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_write_us > 0.0 && self.t_read_us > 0.0 {
            Ok(())
        } else {
            Err(SensorError::InvalidParameter(
                "scan timing delays must be positive".into(),
            ))
        }
    }

    pub fn taxel_period_us(&self) -> f64 {
        self.t_write_us + self.t_read_us
    }

    /// Instant at which the `k`-th taxel of a frame (row-major) is read,
    /// relative to the frame start: after its mux write and settle delay.
    pub fn sample_offset_us(&self, k: usize) -> f64 {
        k as f64 * self.taxel_period_us() + self.t_write_us + self.t_read_us
    }
}

/// Duration of one full scan: every taxel is selected and read in turn.
pub fn frame_period_us(config: &SensorConfig, timing: &ScanTiming) -> f64 {
    config.taxel_count() as f64 * timing.taxel_period_us()
}

pub fn frame_rate_hz(config: &SensorConfig, timing: &ScanTiming) -> f64 {
    1e6 / frame_period_us(config, timing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_write_delay() {
        assert_relative_eq!(ScanTiming::default().t_write_us, 27.2, max_relative = 1e-12);
    }

    #[test]
    fn frame_periods() {
        let t = ScanTiming::default();
        let c = SensorConfig::preset("4x4").unwrap();
        assert_relative_eq!(frame_period_us(&c, &t), 6835.2, max_relative = 1e-12);
        let c = SensorConfig::preset("8x8").unwrap();
        assert_relative_eq!(frame_period_us(&c, &t), 27340.8, max_relative = 1e-12);
        let mut c = SensorConfig::preset("4x4").unwrap();
        c.rows = 1;
        c.cols = 1;
        assert_relative_eq!(frame_period_us(&c, &t), 427.2, max_relative = 1e-12);
    }
}
