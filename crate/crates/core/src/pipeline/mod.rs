//! Frame processing: activation, segmentation, localization, deghosting,
//! force estimation and gesture classification.

mod calibration;
mod contacts;

pub use calibration::{
    calibrate, default_ramp_forces, fit_line, simulate_ramp, CalibrationSample, CalibrationTable, TaxelCalibration,
};
pub use contacts::{
    deghost, detect_active, estimate_force, is_ghost_taxel, localize, segment, write_events_csv, Component,
    ContactEvent, ForceEstimate,
};

use crate::config::SensorConfig;
use crate::error::Result;
use crate::readout::Frame;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Minimum ADC code of an active taxel.
    pub threshold: u16,
    /// Ghost ratio against the weakest corner of the completing trio.
    pub alpha: f64,
    pub grab_min_taxels: usize,
    /// Fraction of the grid that, covered jointly, counts as a grab.
    pub grab_coverage: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            threshold: 10,
            alpha: 0.5,
            grab_min_taxels: 6,
            grab_coverage: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gesture {
    None,
    Push { event: usize, centroid_mm: [f64; 2], force_n: f64 },
    Grab,
}

/// Classifies the non-ghost events of one frame.
///
/// A large single contact or broad joint coverage is a grab; otherwise the
/// strongest contact is a push.
pub fn classify_gesture(events: &[ContactEvent], config: &SensorConfig, params: &PipelineParams) -> Gesture {
    let real: Vec<&ContactEvent> = events.iter().filter(|e| !e.ghost).collect();
    if real.is_empty() {
        return Gesture::None;
    }
    let covered: usize = real.iter().map(|e| e.taxels.len()).sum();
    if real.iter().any(|e| e.taxels.len() >= params.grab_min_taxels)
        || covered as f64 >= params.grab_coverage * config.taxel_count() as f64
    {
        return Gesture::Grab;
    }
    let strongest = strongest_event(&real).expect("non-empty");
    Gesture::Push {
        event: strongest.id,
        centroid_mm: strongest.centroid_mm,
        force_n: strongest.force_n,
    }
}

/// Strongest event by calibrated force, then by summed reading.
pub fn strongest_event<'a>(events: &[&'a ContactEvent]) -> Option<&'a ContactEvent> {
    events.iter().copied().max_by(|a, b| {
        a.force_n
            .total_cmp(&b.force_n)
            .then(a.total_reading.cmp(&b.total_reading))
            .then(b.id.cmp(&a.id))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    pub events: Vec<ContactEvent>,
    pub gesture: Gesture,
    /// Uncalibrated member taxels skipped during force estimation.
    pub uncalibrated: usize,
}

/// Complete per-frame processing chain.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: SensorConfig,
    pub params: PipelineParams,
    pub calibration: Option<CalibrationTable>,
}

impl Pipeline {
    pub fn new(config: SensorConfig, params: PipelineParams, calibration: Option<CalibrationTable>) -> Self {
        Self {
            config,
            params,
            calibration,
        }
    }

    pub fn process(&self, frame: &Frame) -> Result<FrameAnalysis> {
        let active = detect_active(frame, self.params.threshold)?;
        let components = deghost(segment(&active), frame, self.params.alpha)?;
        let mut uncalibrated = 0;
        let events: Vec<ContactEvent> = components
            .iter()
            .map(|c| {
                let (e, skipped) = ContactEvent::from_component(c, frame, &self.config, self.calibration.as_ref());
                uncalibrated += skipped;
                e
            })
            .collect();
        let gesture = classify_gesture(&events, &self.config, &self.params);
        Ok(FrameAnalysis {
            events,
            gesture,
            uncalibrated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(id: usize, taxels: Vec<(usize, usize)>, force: f64, ghost: bool) -> ContactEvent {
        ContactEvent {
            id,
            taxels,
            centroid_mm: [0.0, 0.0],
            force_n: force,
            peak_reading: 100,
            total_reading: 100,
            ghost,
            t_us: 0.0,
        }
    }

    #[test]
    fn gesture_classes() {
        let c = SensorConfig::preset("8x8").unwrap();
        let p = PipelineParams::default();
        assert_eq!(classify_gesture(&[], &c, &p), Gesture::None);
        let push = classify_gesture(&[event(0, vec![(1, 1)], 3.0, false)], &c, &p);
        assert!(matches!(push, Gesture::Push { event: 0, .. }));
        let big: Vec<_> = (0..6).map(|i| (2, i)).collect();
        assert_eq!(classify_gesture(&[event(0, big, 9.0, false)], &c, &p), Gesture::Grab);
        // Ghost events are ignored.
        assert_eq!(classify_gesture(&[event(0, vec![(0, 0)], 5.0, true)], &c, &p), Gesture::None);
        let strongest = classify_gesture(
            &[event(0, vec![(0, 0)], 3.0, false), event(1, vec![(5, 5)], 8.0, false)],
            &c,
            &p,
        );
        assert!(matches!(strongest, Gesture::Push { event: 1, .. }));
    }

    #[test]
    fn joint_coverage_is_a_grab() {
        let c = SensorConfig::preset("4x4").unwrap();
        let p = PipelineParams::default();
        // Five separate single-taxel contacts cover 5/16 > 30% of the grid.
        let events: Vec<_> = [(0, 0), (0, 2), (2, 0), (2, 2), (3, 3)]
            .iter()
            .enumerate()
            .map(|(i, &t)| event(i, vec![t], 1.0, false))
            .collect();
        assert_eq!(classify_gesture(&events, &c, &p), Gesture::Grab);
    }
}
