//! Mechanical contact model: indenter footprints, per-taxel force
//! distribution and the force-to-resistance transfer.

use crate::config::SensorConfig;
use crate::error::{Result, SensorError};
use crate::grid::Grid;
use crate::readout::{Resistance, ResistanceMatrix};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Per-taxel normal force in newtons.
pub type ForceGrid = Grid<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContactShape {
    Disk { radius_mm: f64 },
    Square { side_mm: f64 },
    Sphere { radius_mm: f64 },
    Point,
}

impl ContactShape {
    /// Radius of the smallest circle around the centre enclosing the shape.
    pub fn extent_mm(&self) -> f64 {
        match *self {
            ContactShape::Disk { radius_mm } | ContactShape::Sphere { radius_mm } => radius_mm,
            ContactShape::Square { side_mm } => side_mm / 2.0,
            ContactShape::Point => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPatch {
    #[serde(default)]
    pub id: String,
    pub shape: ContactShape,
    /// Centre on the sensor surface, `[x, y]` in millimetres.
    pub center_mm: [f64; 2],
    pub force_n: f64,
}

impl ContactPatch {
    pub fn disk(id: impl Into<String>, x: f64, y: f64, radius_mm: f64, force_n: f64) -> Self {
        Self {
            id: id.into(),
            shape: ContactShape::Disk { radius_mm },
            center_mm: [x, y],
            force_n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.force_n >= 0.0) || !self.force_n.is_finite() {
            return Err(SensorError::InvalidParameter(format!(
                "patch `{}` force must be non-negative",
                self.id
            )));
        }
        let ok = match self.shape {
            ContactShape::Disk { radius_mm } | ContactShape::Sphere { radius_mm } => radius_mm > 0.0,
            ContactShape::Square { side_mm } => side_mm > 0.0,
            ContactShape::Point => true,
        };
        if !ok || !self.center_mm.iter().all(|v| v.is_finite()) {
            return Err(SensorError::InvalidParameter(format!(
                "patch `{}` has invalid geometry",
                self.id
            )));
        }
        Ok(())
    }
}

/// The set of contacts acting on the sensor at one instant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PressureField {
    #[serde(default)]
    pub patches: Vec<ContactPatch>,
    #[serde(default)]
    pub t_us: f64,
}

impl PressureField {
    pub fn new(patches: Vec<ContactPatch>) -> Self {
        Self { patches, t_us: 0.0 }
    }

    /// Checks every patch, and that centres lie within the sensor bounds
    /// extended by the patch extent.
    pub fn validate(&self, config: &SensorConfig) -> Result<()> {
        for p in &self.patches {
            p.validate()?;
            let e = p.shape.extent_mm();
            let [x, y] = p.center_mm;
            if x < -e || y < -e || x > config.width_mm() + e || y > config.height_mm() + e {
                return Err(SensorError::InvalidParameter(format!(
                    "patch `{}` centre ({x}, {y}) lies off the sensor",
                    p.id
                )));
            }
        }
        Ok(())
    }

    pub fn total_force(&self) -> f64 {
        self.patches.iter().map(|p| p.force_n).sum()
    }
}

/// Parameters of the force-to-resistance transfer `R = k / (F - f_offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferParams {
    /// Force below which the insulating mesh keeps the layers apart.
    pub f_contact_n: f64,
    /// Inverse-law gain in ohm-newtons.
    pub k_ohm_n: f64,
    pub f_offset_n: f64,
    /// Footprint radius shrink for spherical indenters.
    pub sphere_concentration: f64,
}

impl Default for TransferParams {
    fn default() -> Self {
        // The offset keeps 10 N at 50 kOhm while making the readout linear
        // (R^2 >= 0.95) over 5-30 N on every preset.
        Self {
            f_contact_n: 2.5,
            k_ohm_n: 1.0e6,
            f_offset_n: -10.0,
            sphere_concentration: 0.5,
        }
    }
}

impl TransferParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_contact_n > 0.0) || !(self.k_ohm_n > 0.0) {
            return Err(SensorError::InvalidParameter(
                "f_contact_n and k_ohm_n must be positive".into(),
            ));
        }
        if !(self.f_offset_n < self.f_contact_n) {
            return Err(SensorError::InvalidParameter(
                "f_offset_n must be below the contact threshold".into(),
            ));
        }
        if !(self.sphere_concentration > 0.0 && self.sphere_concentration <= 1.0) {
            return Err(SensorError::InvalidParameter(
                "sphere_concentration must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Resistance of one taxel under a normal force.
pub fn taxel_resistance(force_n: f64, params: &TransferParams) -> Resistance {
    if !(force_n >= params.f_contact_n) {
        return Resistance::Open;
    }
    Resistance::Ohms(params.k_ohm_n / (force_n - params.f_offset_n))
}

/// Area of the intersection of a disk with an axis-aligned rectangle.
pub fn disk_rect_overlap(cx: f64, cy: f64, r: f64, rect: (f64, f64, f64, f64)) -> f64 {
    let (x0, y0, x1, y1) = (rect.0 - cx, rect.1 - cy, rect.2 - cx, rect.3 - cy);
    let a = x0.max(-r);
    let b = x1.min(r);
    if a >= b || y0 >= y1 || y0 >= r || y1 <= -r {
        return 0.0;
    }
    let mut breaks = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let s = (r * r - y * y).sqrt();
            breaks.extend([-s, s].into_iter().filter(|&p| p > a && p < b));
        }
    }
    breaks.sort_by(f64::total_cmp);

    let half_chord = |x: f64| (r * r - x * x).max(0.0).sqrt();
    // Antiderivative of the half chord length.
    let g = |x: f64| 0.5 * (x * half_chord(x) + r * r * (x / r).clamp(-1.0, 1.0).asin());

    let mut area = 0.0;
    for w in breaks.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q - p <= 0.0 {
            continue;
        }
        let h = half_chord(0.5 * (p + q));
        let upper_is_arc = h < y1;
        let lower_is_arc = -h > y0;
        if h.min(y1) <= (-h).max(y0) {
            continue;
        }
        let arc = g(q) - g(p);
        let upper = if upper_is_arc { arc } else { y1 * (q - p) };
        let lower = if lower_is_arc { -arc } else { y0 * (q - p) };
        area += upper - lower;
    }
    area
}

fn rect_overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let w = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
    let h = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
    w * h
}

enum Footprint {
    Disk { cx: f64, cy: f64, r: f64 },
    Rect((f64, f64, f64, f64)),
    Point { x: f64, y: f64 },
}

impl Footprint {
    fn of(patch: &ContactPatch, params: &TransferParams) -> Self {
        let [cx, cy] = patch.center_mm;
        match patch.shape {
            ContactShape::Disk { radius_mm } => Footprint::Disk { cx, cy, r: radius_mm },
            ContactShape::Sphere { radius_mm } => Footprint::Disk {
                cx,
                cy,
                r: radius_mm * params.sphere_concentration,
            },
            ContactShape::Square { side_mm } => {
                let h = side_mm / 2.0;
                Footprint::Rect((cx - h, cy - h, cx + h, cy + h))
            }
            ContactShape::Point => Footprint::Point { x: cx, y: cy },
        }
    }

    fn area(&self) -> f64 {
        match *self {
            Footprint::Disk { r, .. } => PI * r * r,
            Footprint::Rect(rc) => (rc.2 - rc.0) * (rc.3 - rc.1),
            Footprint::Point { .. } => 0.0,
        }
    }

    fn overlap(&self, rect: (f64, f64, f64, f64)) -> f64 {
        match *self {
            Footprint::Disk { cx, cy, r } => disk_rect_overlap(cx, cy, r, rect),
            Footprint::Rect(rc) => rect_overlap(rc, rect),
            Footprint::Point { .. } => 0.0,
        }
    }
}

/// Distributes every patch's force over the taxels.
///
/// The share of a patch's force that lands on the sensor surface is split
/// among taxels in proportion to footprint overlap with each sensing area;
/// insulating margins carry none of it. A footprint that only touches
/// margins loads its nearest taxel. Forces of several patches add.
pub fn rasterize(field: &PressureField, config: &SensorConfig, params: &TransferParams) -> ForceGrid {
    let mut grid = Grid::filled(config.rows, config.cols, 0.0);
    let surface = (0.0, 0.0, config.width_mm(), config.height_mm());

    for patch in &field.patches {
        if patch.force_n <= 0.0 {
            continue;
        }
        let fp = Footprint::of(patch, params);
        if let Footprint::Point { x, y } = fp {
            if let Some(cell) = config.taxel_at(x, y) {
                grid[cell] += patch.force_n;
            }
            continue;
        }
        let on_surface = fp.overlap(surface) / fp.area();
        if on_surface <= 0.0 {
            continue;
        }
        let sensed = patch.force_n * on_surface.min(1.0);

        let mut shares = Vec::new();
        let mut total = 0.0;
        for r in 0..config.rows {
            for c in 0..config.cols {
                let a = fp.overlap(config.taxel_rect(r, c));
                if a > 0.0 {
                    shares.push(((r, c), a));
                    total += a;
                }
            }
        }
        if total > 0.0 {
            for (cell, a) in shares {
                grid[cell] += sensed * a / total;
            }
        } else {
            let [x, y] = patch.center_mm;
            grid[config.nearest_taxel(x, y)] += sensed;
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisParams {
    /// Unloading-branch scale factor.
    pub factor: f64,
    /// Asymptotic drift in equivalent newtons under sustained load.
    pub drift_n: f64,
    pub tau_s: f64,
    pub drift_cap_n: f64,
}

impl Default for HysteresisParams {
    fn default() -> Self {
        Self {
            factor: 1.1,
            drift_n: 0.3,
            tau_s: 60.0,
            drift_cap_n: 0.3,
        }
    }
}

/// Per-taxel loading history for the optional hysteresis/drift filter.
#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisState {
    params: HysteresisParams,
    prev: ForceGrid,
    peak: ForceGrid,
    loaded_us: Grid<f64>,
    unloading: Grid<bool>,
}

impl HysteresisState {
    pub fn new(rows: usize, cols: usize, params: HysteresisParams) -> Self {
        Self {
            params,
            prev: Grid::filled(rows, cols, 0.0),
            peak: Grid::filled(rows, cols, 0.0),
            loaded_us: Grid::filled(rows, cols, 0.0),
            unloading: Grid::filled(rows, cols, false),
        }
    }

    pub fn params(&self) -> &HysteresisParams {
        &self.params
    }

    /// Current drift of one taxel in equivalent newtons.
    pub fn drift(&self, row: usize, col: usize) -> f64 {
        let p = &self.params;
        let t_s = self.loaded_us[(row, col)] * 1e-6;
        (p.drift_n * (1.0 - (-t_s / p.tau_s).exp())).min(p.drift_cap_n)
    }

    pub fn is_unloading(&self, row: usize, col: usize) -> bool {
        self.unloading[(row, col)]
    }
}

/// Applies hysteresis and drift to a force grid covering `dt_us` of time.
///
/// Rising force passes through. Falling force is scaled up by the
/// hysteresis factor but never above the peak of the preceding load. Time
/// spent under load accumulates into a permanent drift that is added to
/// every loaded taxel.
pub fn apply_hysteresis_drift(state: &mut HysteresisState, grid: &ForceGrid, dt_us: f64) -> ForceGrid {
    let dt_us = dt_us.max(0.0);
    let h = state.params.factor;
    Grid::from_fn(grid.rows(), grid.cols(), |r, c| {
        let f = grid[(r, c)].max(0.0);
        let cell = (r, c);
        if f > 0.0 {
            state.loaded_us[cell] += dt_us;
        }
        if f > state.prev[cell] {
            state.unloading[cell] = false;
        } else if f < state.prev[cell] {
            state.unloading[cell] = true;
        }
        if !state.unloading[cell] {
            state.peak[cell] = state.peak[cell].max(f);
        }
        let mut out = if state.unloading[cell] {
            (f * h).min(state.peak[cell])
        } else {
            f
        };
        if f == 0.0 {
            state.peak[cell] = 0.0;
            state.unloading[cell] = false;
        } else {
            out += state.drift(r, c);
        }
        state.prev[cell] = f;
        out
    })
}

/// Pressure field to per-taxel resistance, optionally through the
/// hysteresis filter.
pub fn field_to_resistance(
    field: &PressureField,
    config: &SensorConfig,
    params: &TransferParams,
    hysteresis: Option<(&mut HysteresisState, f64)>,
) -> ResistanceMatrix {
    let mut forces = rasterize(field, config, params);
    if let Some((state, dt_us)) = hysteresis {
        forces = apply_hysteresis_drift(state, &forces, dt_us);
    }
    force_grid_to_resistance(&forces, params)
}

pub fn force_grid_to_resistance(forces: &ForceGrid, params: &TransferParams) -> ResistanceMatrix {
    ResistanceMatrix::new(forces.map(|&f| taxel_resistance(f, params)))
        .expect("transfer law yields positive resistances")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> SensorConfig {
        SensorConfig::preset("4x4").unwrap()
    }

    #[test]
    fn transfer_examples() {
        let p = TransferParams::default();
        assert_eq!(taxel_resistance(0.0, &p), Resistance::Open);
        assert_eq!(taxel_resistance(2.4, &p), Resistance::Open);
        assert_eq!(taxel_resistance(10.0, &p), Resistance::Ohms(50_000.0));
        assert!(taxel_resistance(2.5, &p).ohms().is_some());
    }

    #[test]
    fn transfer_params_validation() {
        assert!(TransferParams::default().validate().is_ok());
        let bad = TransferParams {
            sphere_concentration: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TransferParams {
            f_offset_n: 3.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn disk_overlap_full_and_half() {
        let full = disk_rect_overlap(0.0, 0.0, 2.0, (-5.0, -5.0, 5.0, 5.0));
        assert_relative_eq!(full, PI * 4.0, max_relative = 1e-12);
        let half = disk_rect_overlap(0.0, 0.0, 2.0, (0.0, -5.0, 5.0, 5.0));
        assert_relative_eq!(half, PI * 2.0, max_relative = 1e-12);
        let quarter = disk_rect_overlap(0.0, 0.0, 2.0, (0.0, 0.0, 5.0, 5.0));
        assert_relative_eq!(quarter, PI, max_relative = 1e-12);
        assert_eq!(disk_rect_overlap(0.0, 0.0, 1.0, (2.0, 2.0, 3.0, 3.0)), 0.0);
        // Rectangle strictly inside the disk.
        let inner = disk_rect_overlap(0.0, 0.0, 10.0, (-1.0, -2.0, 1.0, 2.0));
        assert_relative_eq!(inner, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn contained_disk_loads_one_taxel() {
        let c = cfg();
        let field = PressureField::new(vec![ContactPatch::disk("a", 37.5, 62.5, 10.0, 10.0)]);
        let g = rasterize(&field, &c, &TransferParams::default());
        for ((r, col), &f) in g.indexed() {
            if (r, col) == (2, 1) {
                assert_relative_eq!(f, 10.0, max_relative = 1e-12);
            } else {
                assert_eq!(f, 0.0);
            }
        }
    }

    #[test]
    fn straddling_disk_splits_evenly() {
        let c = cfg();
        // Centred on the margin between (0, 0) and (0, 1).
        let field = PressureField::new(vec![ContactPatch::disk("a", 25.0, 12.5, 10.0, 10.0)]);
        let g = rasterize(&field, &c, &TransferParams::default());
        assert_relative_eq!(g[(0, 0)], 5.0, max_relative = 1e-12);
        assert_relative_eq!(g[(0, 1)], 5.0, max_relative = 1e-12);
    }

    #[test]
    fn traverse_alternates_between_one_and_two_taxels() {
        let c = cfg();
        let p = TransferParams::default();
        let mut counts = Vec::new();
        let mut x = 12.5;
        while x <= c.width_mm() - 12.5 {
            let field = PressureField::new(vec![ContactPatch::disk("t", x, 12.5, 10.0, 20.0)]);
            let m = field_to_resistance(&field, &c, &p, None);
            counts.push(m.finite_count());
            x += 6.0;
        }
        assert!(counts.iter().all(|&n| n == 1 || n == 2), "{counts:?}");
        assert!(counts.contains(&1) && counts.contains(&2), "{counts:?}");
    }

    #[test]
    fn point_and_off_sensor_patches() {
        let c = cfg();
        let p = TransferParams::default();
        let point = ContactPatch {
            id: "p".into(),
            shape: ContactShape::Point,
            center_mm: [24.0, 3.0],
            force_n: 4.0,
        };
        let off = ContactPatch::disk("off", -50.0, -50.0, 5.0, 9.0);
        let g = rasterize(&PressureField::new(vec![point, off]), &c, &p);
        assert_eq!(g[(0, 0)], 4.0);
        assert_relative_eq!(g.as_slice().iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn margin_only_footprint_loads_nearest_taxel() {
        let c = cfg();
        let p = ContactPatch::disk("m", 25.2, 12.5, 1.0, 6.0);
        let g = rasterize(&PressureField::new(vec![p]), &c, &TransferParams::default());
        assert_eq!(g[(0, 1)], 6.0);
    }

    #[test]
    fn field_to_resistance_examples() {
        let c = cfg();
        let p = TransferParams::default();
        let empty = field_to_resistance(&PressureField::default(), &c, &p, None);
        assert_eq!(empty.finite_count(), 0);

        let one = PressureField::new(vec![ContactPatch::disk("a", 62.5, 62.5, 10.0, 10.0)]);
        let m = field_to_resistance(&one, &c, &p, None);
        assert_eq!(m.finite_count(), 1);
        assert_eq!(m.get(2, 2), Resistance::Ohms(50_000.0));

        let cells = [(0, 0), (0, 3), (2, 1), (3, 3)];
        let patches = cells
            .iter()
            .map(|&(r, col)| {
                let (x, y) = c.taxel_center(r, col);
                ContactPatch::disk(format!("w{r}{col}"), x, y, 8.0, 6.0)
            })
            .collect();
        let m = field_to_resistance(&PressureField::new(patches), &c, &p, None);
        assert_eq!(m.finite_count(), 4);
        for (r, col) in cells {
            assert!(!m.get(r, col).is_open());
        }
    }

    #[test]
    fn hysteresis_zero_input_is_inert() {
        let mut s = HysteresisState::new(2, 2, HysteresisParams::default());
        let before = s.clone();
        let out = apply_hysteresis_drift(&mut s, &Grid::filled(2, 2, 0.0), 1e6);
        assert!(out.as_slice().iter().all(|&f| f == 0.0));
        assert_eq!(s, before);
    }

    #[test]
    fn hysteresis_loop_is_non_negative() {
        let mut s = HysteresisState::new(1, 1, HysteresisParams::default());
        let ramp: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let dt = 100_000.0;
        let loading: Vec<f64> = ramp
            .iter()
            .map(|&f| apply_hysteresis_drift(&mut s, &Grid::filled(1, 1, f), dt)[(0, 0)])
            .collect();
        let unloading: Vec<f64> = ramp
            .iter()
            .rev()
            .map(|&f| apply_hysteresis_drift(&mut s, &Grid::filled(1, 1, f), dt)[(0, 0)])
            .collect();
        let mut area = 0.0;
        for (i, &f) in ramp.iter().enumerate() {
            let up = loading[i];
            let down = unloading[ramp.len() - 1 - i];
            if f > 0.0 {
                assert!(down >= up, "f={f} up={up} down={down}");
            }
            area += down - up;
        }
        assert!(area >= 0.0);
    }
}
