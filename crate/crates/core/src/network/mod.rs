//! Full crossbar network readout. Sneak paths through unselected taxels
//! are part of the solved circuit, so ghost readings emerge on their own.

mod solver;
mod topology;

pub use solver::{node_residuals, solve_full, voltages_csv, NodalSolution};
pub use topology::{build_topology, Edge, EdgeKind, NetworkTopology, NodeKind};

use crate::config::SensorConfig;
use crate::error::Result;
use crate::grid::Grid;
use crate::readout::{reading_from_network_resistance_scaled, series_margin_counts, Frame, Resistance, ResistanceMatrix};
use crate::timing::ScanTiming;
use rayon::prelude::*;

/// Reading of one taxel by the full network solve.
pub fn read_taxel(config: &SensorConfig, r: &ResistanceMatrix, row: usize, col: usize) -> Result<u16> {
    let topo = build_topology(config, r, row, col)?;
    Ok(solve_full(&topo)?.code)
}

/// Reading of one taxel ignoring sneak paths: the taxel, its series margin
/// segments and the reference resistor form a plain divider.
pub fn solve_naive(config: &SensorConfig, r: &ResistanceMatrix, row: usize, col: usize) -> Result<u16> {
    let (n_col, n_row) = series_margin_counts(config, row, col)?;
    r.check_dims(config)?;
    let r_net = match r.get(row, col) {
        Resistance::Open => Resistance::Open,
        Resistance::Ohms(ohms) => Resistance::Ohms((n_col + n_row) as f64 * config.r_margin_ohm + ohms),
    };
    Ok(reading_from_network_resistance_scaled(r_net, config.r_ref_ohm, config.adc_full_scale))
}

/// Scans every taxel in row-major order against a fixed resistance state.
pub fn scan_frame_static(config: &SensorConfig, r: &ResistanceMatrix) -> Result<Frame> {
    scan_frame_static_at(config, r, &ScanTiming::from_config(config), 0.0)
}

pub fn scan_frame_static_at(
    config: &SensorConfig,
    r: &ResistanceMatrix,
    timing: &ScanTiming,
    t_start_us: f64,
) -> Result<Frame> {
    r.check_dims(config)?;
    let (rows, cols) = (config.rows, config.cols);
    let codes = (0..rows * cols)
        .into_par_iter()
        .map(|k| read_taxel(config, r, k / cols, k % cols))
        .collect::<Result<Vec<u16>>>()?;
    let counts = Grid::from_vec(rows, cols, codes).expect("one code per taxel");
    let times = Grid::from_fn(rows, cols, |row, col| t_start_us + timing.sample_offset_us(row * cols + col));
    Ok(Frame {
        t_start_us,
        counts,
        per_taxel_time_us: Some(times),
    })
}
