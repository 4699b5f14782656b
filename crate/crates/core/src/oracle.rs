//! Reference dense nodal solver used only to cross-check the network solver.
//!
//! It stamps the readout circuit directly from the configuration, finds the
//! driven component with a union-find, and solves the full node set of that
//! component with Gaussian elimination and partial pivoting. Nothing here is
//! shared with [`crate::network`].

use crate::config::SensorConfig;
use crate::readout::{Resistance, ResistanceMatrix};
use std::collections::HashMap;

pub struct OracleSolution {
    /// Voltage per node label (`c{col}`, `c{col}.r{row}`, `r{row}`,
    /// `r{row}.c{col}`, `gnd`) for every node in the driven component.
    pub voltages: HashMap<String, f64>,
    /// Unquantized sense voltage (0 when the sense node is not driven).
    pub sense_volts: f64,
    pub code: u16,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn dense_solve(config: &SensorConfig, r: &ResistanceMatrix, sel_row: usize, sel_col: usize) -> OracleSolution {
    assert!(config.r_margin_ohm > 0.0, "oracle needs finite stripe segments");
    let (rows, cols) = (config.rows, config.cols);
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut node = |name: String, labels: &mut Vec<String>| -> usize {
        *index.entry(name.clone()).or_insert_with(|| {
            labels.push(name);
            labels.len() - 1
        })
    };

    let mut resistors: Vec<(usize, usize, f64)> = Vec::new();
    let gnd = node("gnd".into(), &mut labels);
    for row in (0..rows).rev() {
        let mut prev = node(format!("r{row}"), &mut labels);
        for col in 0..cols {
            let j = node(format!("r{row}.c{col}"), &mut labels);
            resistors.push((prev, j, config.r_margin_ohm));
            prev = j;
        }
    }
    for col in (0..cols).rev() {
        let mut prev = node(format!("c{col}"), &mut labels);
        for row in 0..rows {
            let j = node(format!("c{col}.r{row}"), &mut labels);
            resistors.push((prev, j, config.r_margin_ohm));
            prev = j;
        }
    }
    for row in 0..rows {
        for col in 0..cols {
            if let Resistance::Ohms(ohms) = r.get(row, col) {
                let a = node(format!("c{col}.r{row}"), &mut labels);
                let b = node(format!("r{row}.c{col}"), &mut labels);
                resistors.push((a, b, ohms));
            }
        }
    }
    let vcc = node(format!("c{sel_col}"), &mut labels);
    let sense = node(format!("r{sel_row}"), &mut labels);
    resistors.push((sense, gnd, config.r_ref_ohm));

    let n = labels.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b, _) in &resistors {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let root = find(&mut parent, vcc);
    let members: Vec<usize> = (0..n).filter(|&u| find(&mut parent, u) == root).collect();
    let local: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let m = members.len();

    let mut a = vec![vec![0.0; m + 1]; m];
    for &(p, q, ohms) in &resistors {
        if let (Some(&i), Some(&j)) = (local.get(&p), local.get(&q)) {
            let g = 1.0 / ohms;
            a[i][i] += g;
            a[j][j] += g;
            a[i][j] -= g;
            a[j][i] -= g;
        }
    }
    for (u, volts) in [(vcc, config.vcc_volts), (gnd, 0.0)] {
        if let Some(&i) = local.get(&u) {
            a[i].iter_mut().for_each(|x| *x = 0.0);
            a[i][i] = 1.0;
            a[i][m] = volts;
        }
    }

    for k in 0..m {
        let p = (k..m)
            .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
            .unwrap();
        a.swap(k, p);
        let pivot = a[k][k];
        assert!(pivot.abs() > 1e-300, "oracle system singular");
        for i in k + 1..m {
            let f = a[i][k] / pivot;
            if f != 0.0 {
                for j in k..=m {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = a[i][m];
        for j in i + 1..m {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }

    let voltages: HashMap<String, f64> = members
        .iter()
        .enumerate()
        .map(|(i, &u)| (labels[u].clone(), x[i]))
        .collect();
    let sense_volts = local.get(&sense).map_or(0.0, |&i| x[i]);
    let full = config.adc_full_scale as f64;
    let code = (full * sense_volts / config.vcc_volts).round().clamp(0.0, full - 1.0) as u16;
    OracleSolution {
        voltages,
        sense_volts,
        code,
    }
}
