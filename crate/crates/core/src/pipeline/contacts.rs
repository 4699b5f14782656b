use super::calibration::CalibrationTable;
use crate::config::SensorConfig;
use crate::error::{Result, SensorError};
use crate::grid::Grid;
use crate::readout::Frame;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// A 4-connected group of active taxels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub id: usize,
    /// Members in row-major order.
    pub taxels: Vec<(usize, usize)>,
    pub ghost: bool,
}

impl Component {
    pub fn top_left(&self) -> (usize, usize) {
        self.taxels[0]
    }

    pub fn len(&self) -> usize {
        self.taxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxels.is_empty()
    }
}

pub fn detect_active(frame: &Frame, threshold: u16) -> Result<Grid<bool>> {
    if threshold < 1 {
        return Err(SensorError::InvalidParameter("activation threshold must be at least 1".into()));
    }
    Ok(frame.counts.map(|&c| c >= threshold))
}

/// Flood-fills active taxels with 4-connectivity. Components come out ordered
/// by their top-left (first row-major) member.
pub fn segment(active: &Grid<bool>) -> Vec<Component> {
    let (rows, cols) = (active.rows(), active.cols());
    let mut seen = Grid::filled(rows, cols, false);
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if !active[(r, c)] || seen[(r, c)] {
                continue;
            }
            let mut taxels = Vec::new();
            let mut stack = vec![(r, c)];
            seen[(r, c)] = true;
            while let Some((i, j)) = stack.pop() {
                taxels.push((i, j));
                let mut visit = |ni: usize, nj: usize| {
                    if active[(ni, nj)] && !seen[(ni, nj)] {
                        seen[(ni, nj)] = true;
                        stack.push((ni, nj));
                    }
                };
                if i > 0 {
                    visit(i - 1, j);
                }
                if i + 1 < rows {
                    visit(i + 1, j);
                }
                if j > 0 {
                    visit(i, j - 1);
                }
                if j + 1 < cols {
                    visit(i, j + 1);
                }
            }
            taxels.sort_unstable();
            out.push(Component {
                id: out.len(),
                taxels,
                ghost: false,
            });
        }
    }
    out
}

/// Reading-weighted centroid of the member taxel centres, in millimetres.
pub fn localize(component: &Component, frame: &Frame, config: &SensorConfig) -> [f64; 2] {
    let mut wsum = 0.0;
    let (mut x, mut y) = (0.0, 0.0);
    for &(r, c) in &component.taxels {
        let w = frame.reading(r, c) as f64;
        let (cx, cy) = config.taxel_center(r, c);
        x += w * cx;
        y += w * cy;
        wsum += w;
    }
    if wsum > 0.0 {
        return [x / wsum, y / wsum];
    }
    let n = component.taxels.len().max(1) as f64;
    let (sx, sy) = component.taxels.iter().fold((0.0, 0.0), |(sx, sy), &(r, c)| {
        let (cx, cy) = config.taxel_center(r, c);
        (sx + cx, sy + cy)
    });
    [sx / n, sy / n]
}

/// Whether an active taxel looks like the fourth corner of a sneak-path
/// rectangle: some rectangle through it has its other three corners active
/// and all clearly stronger.
pub fn is_ghost_taxel(active: &HashSet<(usize, usize)>, frame: &Frame, (i, j): (usize, usize), alpha: f64) -> bool {
    let own = frame.reading(i, j) as f64;
    for &(ip, jp) in active {
        if ip == i || jp == j {
            continue;
        }
        if active.contains(&(i, jp)) && active.contains(&(ip, j)) {
            let trio = [frame.reading(i, jp), frame.reading(ip, j), frame.reading(ip, jp)];
            let weakest = *trio.iter().min().unwrap() as f64;
            if own < alpha * weakest {
                return true;
            }
        }
    }
    false
}

/// Flags ghost taxels. Flagged taxels are split out of their component into
/// ghost components; the remaining members are re-segmented. Nothing is
/// dropped.
pub fn deghost(components: Vec<Component>, frame: &Frame, alpha: f64) -> Result<Vec<Component>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SensorError::InvalidParameter("deghost alpha must be in (0, 1)".into()));
    }
    let active: HashSet<(usize, usize)> = components.iter().flat_map(|c| c.taxels.iter().copied()).collect();
    let (rows, cols) = (frame.rows(), frame.cols());
    let mut out = Vec::new();
    for comp in components {
        let (ghosts, real): (Vec<_>, Vec<_>) = comp
            .taxels
            .iter()
            .partition(|&&t| is_ghost_taxel(&active, frame, t, alpha));
        if ghosts.is_empty() {
            out.push(comp);
            continue;
        }
        for (members, ghost) in [(ghosts, true), (real, false)] {
            let mut mask = Grid::filled(rows, cols, false);
            for t in members {
                mask[t] = true;
            }
            out.extend(segment(&mask).into_iter().map(|mut c| {
                c.ghost = ghost;
                c
            }));
        }
    }
    out.sort_by_key(|c| c.top_left());
    for (i, c) in out.iter_mut().enumerate() {
        c.id = i;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceEstimate {
    pub newtons: f64,
    /// Member taxels skipped for lack of calibration.
    pub uncalibrated: usize,
}

/// Calibrated force of a component: the sum of per-taxel inverse fits, each
/// clamped at zero.
pub fn estimate_force(component: &Component, frame: &Frame, calibration: &CalibrationTable) -> ForceEstimate {
    let mut newtons = 0.0;
    let mut uncalibrated = 0;
    for &(r, c) in &component.taxels {
        match calibration.get(r, c) {
            Some(cal) => newtons += cal.force_from_reading(frame.reading(r, c) as f64).max(0.0),
            None => uncalibrated += 1,
        }
    }
    ForceEstimate { newtons, uncalibrated }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub id: usize,
    pub taxels: Vec<(usize, usize)>,
    pub centroid_mm: [f64; 2],
    pub force_n: f64,
    pub peak_reading: u16,
    pub total_reading: u32,
    pub ghost: bool,
    pub t_us: f64,
}

impl ContactEvent {
    pub fn from_component(
        component: &Component,
        frame: &Frame,
        config: &SensorConfig,
        calibration: Option<&CalibrationTable>,
    ) -> (Self, usize) {
        let readings = component.taxels.iter().map(|&(r, c)| frame.reading(r, c));
        let peak_reading = readings.clone().max().unwrap_or(0);
        let total_reading = readings.map(u32::from).sum();
        let est = calibration.map(|cal| estimate_force(component, frame, cal));
        let event = Self {
            id: component.id,
            taxels: component.taxels.clone(),
            centroid_mm: localize(component, frame, config),
            force_n: est.map_or(0.0, |e| e.newtons),
            peak_reading,
            total_reading,
            ghost: component.ghost,
            t_us: frame.t_start_us,
        };
        (event, est.map_or(0, |e| e.uncalibrated))
    }

    /// Bounding box of the member taxels as `(row_min, col_min, row_max, col_max)`.
    pub fn bounds(&self) -> (usize, usize, usize, usize) {
        self.taxels.iter().fold((usize::MAX, usize::MAX, 0, 0), |(a, b, c, d), &(r, col)| {
            (a.min(r), b.min(col), c.max(r), d.max(col))
        })
    }
}

#[derive(Debug, Serialize)]
struct EventRow {
    t_us: f64,
    id: usize,
    centroid_x_mm: f64,
    centroid_y_mm: f64,
    force_n: f64,
    ghost: bool,
    n_taxels: usize,
}

/// Writes events as CSV with header
/// `t_us,id,centroid_x_mm,centroid_y_mm,force_n,ghost,n_taxels`.
pub fn write_events_csv<W: std::io::Write>(events: &[ContactEvent], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(EventRow {
            t_us: e.t_us,
            id: e.id,
            centroid_x_mm: e.centroid_mm[0],
            centroid_y_mm: e.centroid_mm[1],
            force_n: e.force_n,
            ghost: e.ghost,
            n_taxels: e.taxels.len(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(rows: usize, cols: usize, cells: &[((usize, usize), u16)]) -> Frame {
        let mut g = Grid::filled(rows, cols, 0);
        for &(t, v) in cells {
            g[t] = v;
        }
        Frame::new(0.0, g)
    }

    #[test]
    fn detection_threshold() {
        let f = frame(2, 2, &[((0, 1), 50)]);
        assert!(detect_active(&Frame::zeros(2, 2), 10).unwrap().as_slice().iter().all(|&a| !a));
        let a = detect_active(&f, 10).unwrap();
        assert_eq!(a.as_slice().iter().filter(|&&v| v).count(), 1);
        assert!(detect_active(&f, 0).is_err());
    }

    #[test]
    fn segmentation_uses_four_connectivity() {
        let f = frame(3, 3, &[((0, 0), 9), ((1, 1), 9)]);
        let comps = segment(&detect_active(&f, 1).unwrap());
        assert_eq!(comps.len(), 2);
        let f = frame(3, 3, &[((1, 1), 9), ((1, 2), 9), ((2, 1), 9), ((2, 2), 9)]);
        let comps = segment(&detect_active(&f, 1).unwrap());
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].taxels, vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn segmentation_order_is_by_top_left_member() {
        let f = frame(3, 4, &[((2, 0), 9), ((0, 3), 9), ((1, 3), 9), ((0, 1), 9)]);
        let comps = segment(&detect_active(&f, 1).unwrap());
        let tl: Vec<_> = comps.iter().map(|c| c.top_left()).collect();
        assert_eq!(tl, vec![(0, 1), (0, 3), (2, 0)]);
    }

    #[test]
    fn centroid_of_single_and_pair() {
        let c = SensorConfig::preset("4x4").unwrap();
        let f = frame(4, 4, &[((1, 2), 300)]);
        let comps = segment(&detect_active(&f, 10).unwrap());
        assert_eq!(localize(&comps[0], &f, &c), [62.5, 37.5]);
        let f = frame(4, 4, &[((1, 1), 300), ((1, 2), 300)]);
        let comps = segment(&detect_active(&f, 10).unwrap());
        assert_eq!(localize(&comps[0], &f, &c), [50.0, 37.5]);
    }

    #[test]
    fn deghost_flags_weak_fourth_corner() {
        let f = frame(4, 4, &[((0, 2), 400), ((1, 1), 380), ((1, 2), 390), ((0, 1), 150)]);
        let comps = segment(&detect_active(&f, 10).unwrap());
        let out = deghost(comps, &f, 0.5).unwrap();
        let ghosts: Vec<_> = out.iter().filter(|c| c.ghost).collect();
        assert_eq!(ghosts.len(), 1);
        assert_eq!(ghosts[0].taxels, vec![(0, 1)]);
        assert_eq!(out.iter().filter(|c| !c.ghost).count(), 1);
    }

    #[test]
    fn deghost_keeps_comparable_rectangle_and_single_contacts() {
        let f = frame(4, 4, &[((0, 0), 400), ((0, 2), 410), ((2, 0), 405), ((2, 2), 395)]);
        let comps = segment(&detect_active(&f, 10).unwrap());
        assert!(deghost(comps, &f, 0.5).unwrap().iter().all(|c| !c.ghost));
        let f = frame(4, 4, &[((3, 3), 20)]);
        let comps = segment(&detect_active(&f, 10).unwrap());
        assert!(deghost(comps, &f, 0.5).unwrap().iter().all(|c| !c.ghost));
        assert!(deghost(vec![], &f, 1.0).is_err());
    }

    #[test]
    fn force_estimate_sums_and_counts_uncalibrated() {
        use super::super::calibration::TaxelCalibration;
        let mut cal = CalibrationTable::empty(1, 3);
        let tc = TaxelCalibration {
            slope: 10.0,
            intercept: 100.0,
            r_squared: 1.0,
            force_min_n: 5.0,
            force_max_n: 30.0,
        };
        cal.taxels[0] = Some(tc);
        cal.taxels[1] = Some(tc);
        let f = frame(1, 3, &[((0, 0), 200), ((0, 1), 50), ((0, 2), 300)]);
        let comp = Component {
            id: 0,
            taxels: vec![(0, 0), (0, 1), (0, 2)],
            ghost: false,
        };
        let est = estimate_force(&comp, &f, &cal);
        assert_eq!(est.newtons, 10.0);
        assert_eq!(est.uncalibrated, 1);
        let zero = estimate_force(&comp, &Frame::zeros(1, 3), &cal);
        assert_eq!(zero.newtons, 0.0);
    }

    #[test]
    fn csv_export_header() {
        let e = ContactEvent {
            id: 3,
            taxels: vec![(0, 0), (0, 1)],
            centroid_mm: [1.5, 2.5],
            force_n: 4.0,
            peak_reading: 10,
            total_reading: 20,
            ghost: true,
            t_us: 12.0,
        };
        let mut buf = Vec::new();
        write_events_csv(&[e], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t_us,id,centroid_x_mm,centroid_y_mm,force_n,ghost,n_taxels\n12.0,3,1.5,2.5,4.0,true,2\n"
        );
    }
}
