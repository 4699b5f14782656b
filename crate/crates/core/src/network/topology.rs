use crate::config::SensorConfig;
use crate::error::Result;
use crate::readout::{Resistance, ResistanceMatrix};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    ColumnConnector { col: usize },
    ColumnJunction { col: usize, row: usize },
    RowConnector { row: usize },
    RowJunction { row: usize, col: usize },
    Ground,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NodeKind::ColumnConnector { col } => write!(f, "c{col}"),
            NodeKind::ColumnJunction { col, row } => write!(f, "c{col}.r{row}"),
            NodeKind::RowConnector { row } => write!(f, "r{row}"),
            NodeKind::RowJunction { row, col } => write!(f, "r{row}.c{col}"),
            NodeKind::Ground => write!(f, "gnd"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Margin,
    Taxel { row: usize, col: usize },
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub conductance: f64,
    pub kind: EdgeKind,
}

/// Resistor network seen by the readout for one (row, column) selection.
///
/// Every column stripe has a connector node followed by one junction per
/// row crossing; every row stripe has a connector followed by one junction
/// per column crossing. Adjacent nodes along a stripe are joined by a
/// margin segment. The selected column connector is held at VCC, the
/// selected row connector reaches ground through the reference resistor,
/// and every other connector floats.
#[derive(Debug, Clone)]
pub struct NetworkTopology {
    pub rows: usize,
    pub cols: usize,
    pub nodes: Vec<NodeKind>,
    pub edges: Vec<Edge>,
    /// Node driven at `vcc_volts` (selected column connector).
    pub vcc_node: usize,
    pub gnd_node: usize,
    /// Node whose voltage the ADC samples (selected row connector).
    pub sense_node: usize,
    pub vcc_volts: f64,
    pub adc_full_scale: u32,
    /// Electrical node each node belongs to. Differs from the identity only
    /// when ideal (zero-resistance) stripes are contracted to their connector.
    pub alias: Vec<usize>,
}

impl NetworkTopology {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn column_connector(&self, col: usize) -> usize {
        col * (self.rows + 1)
    }

    pub fn column_junction(&self, col: usize, row: usize) -> usize {
        col * (self.rows + 1) + row + 1
    }

    pub fn row_connector(&self, row: usize) -> usize {
        self.cols * (self.rows + 1) + row * (self.cols + 1)
    }

    pub fn row_junction(&self, row: usize, col: usize) -> usize {
        self.row_connector(row) + col + 1
    }

    pub fn taxel_edge_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| matches!(e.kind, EdgeKind::Taxel { .. }))
            .count()
    }
}

/// Builds the network for reading taxel (`sel_row`, `sel_col`).
pub fn build_topology(
    config: &SensorConfig,
    r: &ResistanceMatrix,
    sel_row: usize,
    sel_col: usize,
) -> Result<NetworkTopology> {
    config.check_index(sel_row, sel_col)?;
    r.check_dims(config)?;
    let (rows, cols) = (config.rows, config.cols);

    let mut nodes = Vec::with_capacity(cols * (rows + 1) + rows * (cols + 1) + 1);
    for col in 0..cols {
        nodes.push(NodeKind::ColumnConnector { col });
        nodes.extend((0..rows).map(|row| NodeKind::ColumnJunction { col, row }));
    }
    for row in 0..rows {
        nodes.push(NodeKind::RowConnector { row });
        nodes.extend((0..cols).map(|col| NodeKind::RowJunction { row, col }));
    }
    let gnd_node = nodes.len();
    nodes.push(NodeKind::Ground);

    let mut topo = NetworkTopology {
        rows,
        cols,
        alias: (0..nodes.len()).collect(),
        nodes,
        edges: Vec::new(),
        vcc_node: 0,
        gnd_node,
        sense_node: 0,
        vcc_volts: config.vcc_volts,
        adc_full_scale: config.adc_full_scale,
    };
    topo.vcc_node = topo.column_connector(sel_col);
    topo.sense_node = topo.row_connector(sel_row);

    let ideal_stripes = config.r_margin_ohm == 0.0;
    let g_margin = if ideal_stripes { 0.0 } else { 1.0 / config.r_margin_ohm };
    let mut edges = Vec::new();
    for col in 0..cols {
        let conn = topo.column_connector(col);
        for row in 0..rows {
            let j = topo.column_junction(col, row);
            if ideal_stripes {
                topo.alias[j] = conn;
            } else {
                edges.push(Edge { a: j - 1, b: j, conductance: g_margin, kind: EdgeKind::Margin });
            }
        }
    }
    for row in 0..rows {
        let conn = topo.row_connector(row);
        for col in 0..cols {
            let j = topo.row_junction(row, col);
            if ideal_stripes {
                topo.alias[j] = conn;
            } else {
                edges.push(Edge { a: j - 1, b: j, conductance: g_margin, kind: EdgeKind::Margin });
            }
        }
    }
    for row in 0..rows {
        for col in 0..cols {
            if let Resistance::Ohms(ohms) = r.get(row, col) {
                edges.push(Edge {
                    a: topo.alias[topo.column_junction(col, row)],
                    b: topo.alias[topo.row_junction(row, col)],
                    conductance: 1.0 / ohms,
                    kind: EdgeKind::Taxel { row, col },
                });
            }
        }
    }
    edges.push(Edge {
        a: topo.sense_node,
        b: gnd_node,
        conductance: 1.0 / config.r_ref_ohm,
        kind: EdgeKind::Reference,
    });
    topo.edges = edges;
    Ok(topo)
}
