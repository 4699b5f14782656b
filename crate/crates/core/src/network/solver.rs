//! Nodal analysis of the readout network.
//!
//! Only nodes connected to the driven column take part in the solve. The
//! remaining reduced Laplacian has Dirichlet conditions at VCC and ground,
//! is symmetric positive definite, and is factored with an envelope
//! (profile) Cholesky after a reverse breadth-first ordering.

use super::topology::NetworkTopology;
use crate::error::{Result, SensorError};
use crate::readout::quantize;
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub struct NodalSolution {
    pub code: u16,
    /// Voltage of every node; `None` for nodes isolated from the driven column.
    pub voltages: Vec<Option<f64>>,
}

impl NodalSolution {
    pub fn sense_voltage(&self, topo: &NetworkTopology) -> f64 {
        self.voltages[topo.sense_node].unwrap_or(0.0)
    }
}

fn adjacency(topo: &NetworkTopology) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); topo.node_count()];
    for e in &topo.edges {
        if e.conductance > 0.0 && e.a != e.b {
            adj[e.a].push((e.b, e.conductance));
            adj[e.b].push((e.a, e.conductance));
        }
    }
    adj
}

/// Lower-triangular envelope storage: row `i` holds columns `first[i]..=i`.
struct Envelope {
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl Envelope {
    fn new(first: Vec<usize>) -> Self {
        let rows = first.iter().enumerate().map(|(i, &f)| vec![0.0; i - f + 1]).collect();
        Self { first, rows }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.rows[i][j - self.first[i]] += v;
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.rows.len();
        for i in 0..n {
            let fi = self.first[i];
            for j in fi..=i {
                let fj = self.first[j];
                let start = fi.max(fj);
                let mut s = self.rows[i][j - fi];
                for k in start..j {
                    s -= self.rows[i][k - fi] * self.rows[j][k - fj];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(SensorError::SingularSystem { pivot: i });
                    }
                    self.rows[i][i - fi] = s.sqrt();
                } else {
                    self.rows[i][j - fi] = s / self.rows[j][j - fj];
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n {
            let fi = self.first[i];
            let mut s = b[i];
            for k in fi..i {
                s -= self.rows[i][k - fi] * b[k];
            }
            b[i] = s / self.rows[i][i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            b[i] /= self.rows[i][i - fi];
            let xi = b[i];
            for k in fi..i {
                b[k] -= self.rows[i][k - fi] * xi;
            }
        }
    }
}

/// Solves every node voltage and quantizes the reference-resistor voltage.
pub fn solve_full(topo: &NetworkTopology) -> Result<NodalSolution> {
    let n_nodes = topo.node_count();
    let adj = adjacency(topo);

    let mut reached = vec![false; n_nodes];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([topo.vcc_node]);
    reached[topo.vcc_node] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, _) in &adj[u] {
            if !reached[v] {
                reached[v] = true;
                queue.push_back(v);
            }
        }
    }

    let fixed = |u: usize| -> Option<f64> {
        if u == topo.vcc_node {
            Some(topo.vcc_volts)
        } else if u == topo.gnd_node {
            Some(0.0)
        } else {
            None
        }
    };

    // Reverse BFS order keeps the envelope narrow.
    let unknowns: Vec<usize> = order.iter().rev().copied().filter(|&u| fixed(u).is_none()).collect();
    let mut slot = vec![usize::MAX; n_nodes];
    for (i, &u) in unknowns.iter().enumerate() {
        slot[u] = i;
    }

    let first: Vec<usize> = unknowns
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            adj[u]
                .iter()
                .filter_map(|&(v, _)| (slot[v] != usize::MAX).then_some(slot[v]))
                .fold(i, usize::min)
        })
        .collect();
    let mut matrix = Envelope::new(first);
    let mut rhs = vec![0.0; unknowns.len()];
    for (i, &u) in unknowns.iter().enumerate() {
        for &(v, g) in &adj[u] {
            matrix.add(i, i, g);
            if let Some(volts) = fixed(v) {
                rhs[i] += g * volts;
            } else if slot[v] < i {
                matrix.add(i, slot[v], -g);
            }
        }
    }
    matrix.factor()?;
    matrix.solve(&mut rhs);

    let mut voltages: Vec<Option<f64>> = (0..n_nodes)
        .map(|u| {
            if !reached[u] {
                None
            } else {
                fixed(u).or_else(|| Some(rhs[slot[u]]))
            }
        })
        .collect();
    voltages[topo.gnd_node] = Some(0.0);
    for u in 0..n_nodes {
        let a = topo.alias[u];
        if a != u {
            voltages[u] = voltages[a];
        }
    }

    let code = if reached[topo.sense_node] {
        let v = voltages[topo.sense_node].unwrap_or(0.0);
        quantize(v / topo.vcc_volts, topo.adc_full_scale)
    } else {
        0
    };
    Ok(NodalSolution { code, voltages })
}

/// Net current flowing into every node, by Kirchhoff's current law.
pub fn node_residuals(topo: &NetworkTopology, sol: &NodalSolution) -> Vec<f64> {
    let mut net = vec![0.0; topo.node_count()];
    for e in &topo.edges {
        if let (Some(va), Some(vb)) = (sol.voltages[e.a], sol.voltages[e.b]) {
            let i = e.conductance * (va - vb);
            net[e.a] -= i;
            net[e.b] += i;
        }
    }
    net
}

/// CSV dump of node voltages (`node,label,volts`); isolated nodes are blank.
pub fn voltages_csv(topo: &NetworkTopology, sol: &NodalSolution) -> String {
    let mut out = String::from("node,label,volts\n");
    for (i, kind) in topo.nodes.iter().enumerate() {
        match sol.voltages[i] {
            Some(v) => out.push_str(&format!("{i},{kind},{v:.12}\n")),
            None => out.push_str(&format!("{i},{kind},\n")),
        }
    }
    out
}
