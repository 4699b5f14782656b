//! Time-resolved scanning of a changing pressure field.

use crate::scenario::{Scenario, ScenarioError};
use crossknit_core::network::{build_topology, read_taxel, solve_full};
use crossknit_core::pressure::{apply_hysteresis_drift, force_grid_to_resistance, rasterize, HysteresisParams, HysteresisState};
use crossknit_core::timing::frame_period_us;
use crossknit_core::{Frame, Grid, PressureField, ResistanceMatrix, Result, ScanTiming, SensorConfig, TransferParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Anything that can say which contacts act on the sensor at a given time.
pub trait FieldSource {
    /// Identifier that changes whenever the field does.
    fn version_at(&self, t_us: f64) -> u64;
    fn field_at(&self, t_us: f64) -> PressureField;
}

impl FieldSource for Scenario {
    fn version_at(&self, t_us: f64) -> u64 {
        self.keyframe_at(t_us).map_or(0, |i| i as u64 + 1)
    }

    fn field_at(&self, t_us: f64) -> PressureField {
        Scenario::field_at(self, t_us)
    }
}

impl FieldSource for PressureField {
    fn version_at(&self, _t_us: f64) -> u64 {
        0
    }

    fn field_at(&self, t_us: f64) -> PressureField {
        PressureField {
            patches: self.patches.clone(),
            t_us,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Each taxel sees the field at its own read instant.
    #[default]
    RollingShutter,
    /// The whole frame sees the field at the frame start.
    Snapshot,
}

/// Coarse stand-in for short settle times: below the threshold a fraction
/// of the previously read taxel's code bleeds into the next reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crosstalk {
    pub settle_threshold_us: f64,
    /// Blend fraction as the read delay approaches zero.
    pub max_blend: f64,
}

impl Default for Crosstalk {
    fn default() -> Self {
        Self {
            settle_threshold_us: 100.0,
            max_blend: 0.3,
        }
    }
}

impl Crosstalk {
    pub fn blend(&self, t_read_us: f64) -> f64 {
        if t_read_us >= self.settle_threshold_us {
            return 0.0;
        }
        self.max_blend * (1.0 - t_read_us / self.settle_threshold_us)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub timing: ScanTiming,
    pub transfer: TransferParams,
    pub sampling: Sampling,
    pub hysteresis: Option<HysteresisParams>,
    pub crosstalk: Option<Crosstalk>,
    /// Uniform integer ADC noise amplitude in codes; 0 disables it.
    pub noise_codes: u16,
    pub seed: u64,
}

impl EngineOptions {
    pub fn for_config(config: &SensorConfig) -> Self {
        Self {
            timing: ScanTiming::from_config(config),
            transfer: TransferParams::default(),
            sampling: Sampling::RollingShutter,
            hysteresis: None,
            crosstalk: None,
            noise_codes: 0,
            seed: 0,
        }
    }
}

/// Owns the scan clock and all per-run state.
#[derive(Debug, Clone)]
pub struct ScanEngine {
    config: SensorConfig,
    options: EngineOptions,
    frame_index: u64,
    hysteresis: Option<HysteresisState>,
    last_update_us: f64,
    cache: Option<(u64, ResistanceMatrix)>,
    prev_code: Option<u16>,
    rng: ChaCha8Rng,
}

impl ScanEngine {
    pub fn new(config: SensorConfig, options: EngineOptions) -> Result<Self> {
        config.validate()?;
        options.timing.validate()?;
        options.transfer.validate()?;
        Ok(Self {
            hysteresis: options
                .hysteresis
                .map(|p| HysteresisState::new(config.rows, config.cols, p)),
            rng: ChaCha8Rng::seed_from_u64(options.seed),
            config,
            options,
            frame_index: 0,
            last_update_us: 0.0,
            cache: None,
            prev_code: None,
        })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.config
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn frame_period_us(&self) -> f64 {
        frame_period_us(&self.config, &self.options.timing)
    }

    /// Start time of the next frame.
    pub fn clock_us(&self) -> f64 {
        self.frame_index as f64 * self.frame_period_us()
    }

    pub fn frames_scanned(&self) -> u64 {
        self.frame_index
    }

    fn matrix_for(&mut self, source: &dyn FieldSource, version: u64, t_us: f64, fresh: bool) -> ResistanceMatrix {
        if let Some((v, m)) = &self.cache {
            if *v == version && !fresh {
                return m.clone();
            }
        }
        let mut forces = rasterize(&source.field_at(t_us), &self.config, &self.options.transfer);
        if let Some(state) = self.hysteresis.as_mut() {
            forces = apply_hysteresis_drift(state, &forces, t_us - self.last_update_us);
            self.last_update_us = t_us;
        }
        let m = force_grid_to_resistance(&forces, &self.options.transfer);
        self.cache = Some((version, m.clone()));
        m
    }

    /// Scans one frame and advances the clock by one frame period.
    pub fn next_frame(&mut self, source: &dyn FieldSource) -> Result<Frame> {
        let (rows, cols) = (self.config.rows, self.config.cols);
        let n = rows * cols;
        let t0 = self.clock_us();
        let timing = self.options.timing;
        let times: Vec<f64> = (0..n).map(|k| t0 + timing.sample_offset_us(k)).collect();

        // Matrix in force for each run of taxels that see the same field.
        let mut runs: Vec<(usize, ResistanceMatrix)> = Vec::new();
        match self.options.sampling {
            Sampling::Snapshot => {
                let v = source.version_at(t0);
                let fresh = self.hysteresis.is_some();
                runs.push((0, self.matrix_for(source, v, t0, fresh)));
            }
            Sampling::RollingShutter => {
                let mut current = None;
                for (k, &t) in times.iter().enumerate() {
                    let v = source.version_at(t);
                    if current != Some(v) {
                        // Drift keeps evolving under a constant field, so
                        // the filter runs at least once per frame.
                        let fresh = k == 0 && self.hysteresis.is_some();
                        runs.push((k, self.matrix_for(source, v, t, fresh)));
                        current = Some(v);
                    }
                }
            }
        }
        let run_of = |k: usize| runs.partition_point(|(start, _)| *start <= k) - 1;
        let config = &self.config;
        let mut codes = (0..n)
            .into_par_iter()
            .map(|k| read_taxel(config, &runs[run_of(k)].1, k / cols, k % cols))
            .collect::<Result<Vec<u16>>>()?;

        let max = self.config.adc_max_code as i64;
        let blend = self.options.crosstalk.map_or(0.0, |c| c.blend(timing.t_read_us));
        for code in codes.iter_mut() {
            let raw = *code;
            if blend > 0.0 {
                if let Some(prev) = self.prev_code {
                    *code = ((1.0 - blend) * raw as f64 + blend * prev as f64).round() as u16;
                }
            }
            self.prev_code = Some(raw);
            if self.options.noise_codes > 0 {
                let a = self.options.noise_codes as i64;
                *code = (*code as i64 + self.rng.gen_range(-a..=a)).clamp(0, max) as u16;
            }
        }

        self.frame_index += 1;
        let per_taxel_time_us = match self.options.sampling {
            Sampling::RollingShutter => Some(Grid::from_vec(rows, cols, times).expect("one time per taxel")),
            Sampling::Snapshot => None,
        };
        Ok(Frame {
            t_start_us: t0,
            counts: Grid::from_vec(rows, cols, codes).expect("one code per taxel"),
            per_taxel_time_us,
        })
    }
}

/// Number of frames that start within the scenario duration.
pub fn frame_count(scenario: &Scenario, period_us: f64) -> usize {
    (scenario.duration_us / period_us).ceil() as usize
}

/// Plays a scenario through a fresh engine.
pub fn run_scenario(scenario: &Scenario, config: &SensorConfig, options: EngineOptions) -> std::result::Result<Vec<Frame>, ScenarioError> {
    scenario.check_geometry(config)?;
    let mut engine = ScanEngine::new(config.clone(), options)?;
    let n = frame_count(scenario, engine.frame_period_us());
    let mut frames = Vec::with_capacity(n);
    for _ in 0..n {
        frames.push(engine.next_frame(scenario)?);
    }
    Ok(frames)
}

/// Writes the node voltages of every selection of frame `frame_index`, as
/// seen at each taxel's read instant (`sel_row,sel_col,node,label,volts`).
pub fn dump_frame_voltages<W: Write>(
    scenario: &Scenario,
    config: &SensorConfig,
    options: &EngineOptions,
    frame_index: usize,
    mut out: W,
) -> std::result::Result<(), ScenarioError> {
    let period = frame_period_us(config, &options.timing);
    let t0 = frame_index as f64 * period;
    writeln!(out, "sel_row,sel_col,node,label,volts")?;
    for row in 0..config.rows {
        for col in 0..config.cols {
            let t = match options.sampling {
                Sampling::RollingShutter => t0 + options.timing.sample_offset_us(row * config.cols + col),
                Sampling::Snapshot => t0,
            };
            let forces = rasterize(&scenario.field_at(t), config, &options.transfer);
            let m = force_grid_to_resistance(&forces, &options.transfer);
            let topo = build_topology(config, &m, row, col)?;
            let sol = solve_full(&topo)?;
            for (i, kind) in topo.nodes.iter().enumerate() {
                match sol.voltages[i] {
                    Some(v) => writeln!(out, "{row},{col},{i},{kind},{v:.12}")?,
                    None => writeln!(out, "{row},{col},{i},{kind},")?,
                }
            }
        }
    }
    Ok(())
}
