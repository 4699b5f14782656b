//! Timed contact scripts.

use crossknit_core::{ContactPatch, PressureField, SensorConfig, SensorError};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sensor(#[from] SensorError),
}

/// Contacts present from `t_us` until the next keyframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub t_us: f64,
    #[serde(default)]
    pub patches: Vec<ContactPatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub preset: String,
    pub duration_us: f64,
    pub keyframes: Vec<Keyframe>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Structural checks that do not need the sensor geometry.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_us > 0.0) || !self.duration_us.is_finite() {
            return Err(ScenarioError::Invalid("duration_us must be positive".into()));
        }
        for w in self.keyframes.windows(2) {
            if !(w[1].t_us > w[0].t_us) {
                return Err(ScenarioError::Invalid(format!(
                    "keyframe times must strictly increase ({} then {})",
                    w[0].t_us, w[1].t_us
                )));
            }
        }
        if let Some(k) = self.keyframes.iter().find(|k| !(k.t_us >= 0.0) || !k.t_us.is_finite()) {
            return Err(ScenarioError::Invalid(format!("keyframe time {} is negative", k.t_us)));
        }
        Ok(())
    }

    /// The preset configuration named by the scenario, with every keyframe
    /// checked against its geometry.
    pub fn config(&self) -> Result<SensorConfig, ScenarioError> {
        let config = SensorConfig::preset(&self.preset)?;
        self.check_geometry(&config)?;
        Ok(config)
    }

    pub fn check_geometry(&self, config: &SensorConfig) -> Result<(), ScenarioError> {
        for k in &self.keyframes {
            PressureField::new(k.patches.clone()).validate(config)?;
        }
        Ok(())
    }

    /// Index of the keyframe in force at `t_us` under zero-order hold, or
    /// `None` before the first keyframe.
    pub fn keyframe_at(&self, t_us: f64) -> Option<usize> {
        self.keyframes.partition_point(|k| k.t_us <= t_us).checked_sub(1)
    }

    pub fn field_at(&self, t_us: f64) -> PressureField {
        match self.keyframe_at(t_us) {
            Some(i) => PressureField {
                patches: self.keyframes[i].patches.clone(),
                t_us,
            },
            None => PressureField {
                patches: Vec::new(),
                t_us,
            },
        }
    }

    /// Press-and-release of one disk per entry: `(t_on, t_off, patch)`.
    /// Overlapping presses are merged into shared keyframes.
    pub fn from_presses(preset: &str, duration_us: f64, presses: &[(f64, f64, ContactPatch)]) -> Self {
        let mut times: Vec<f64> = presses.iter().flat_map(|(on, off, _)| [*on, *off]).collect();
        times.push(0.0);
        times.sort_by(f64::total_cmp);
        times.dedup();
        let keyframes = times
            .into_iter()
            .filter(|&t| t < duration_us)
            .map(|t| Keyframe {
                t_us: t,
                patches: presses
                    .iter()
                    .filter(|(on, off, _)| *on <= t && t < *off)
                    .map(|(_, _, p)| p.clone())
                    .collect(),
            })
            .collect();
        Self {
            preset: preset.to_string(),
            duration_us,
            keyframes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "preset": "4x4",
        "duration_us": 50000,
        "keyframes": [
            {"t_us": 0, "patches": []},
            {"t_us": 10000, "patches": [
                {"id": "finger", "shape": {"kind": "disk", "radius_mm": 8}, "center_mm": [37.5, 12.5], "force_n": 12}
            ]},
            {"t_us": 30000}
        ]
    }"#;

    #[test]
    fn parses_and_holds() {
        let s = Scenario::from_json(SAMPLE).unwrap();
        assert_eq!(s.config().unwrap().rows, 4);
        assert!(s.field_at(9_999.0).patches.is_empty());
        assert_eq!(s.field_at(10_000.0).patches.len(), 1);
        assert_eq!(s.field_at(29_999.0).patches[0].id, "finger");
        assert!(s.field_at(40_000.0).patches.is_empty());
        assert_eq!(s.keyframe_at(-1.0), None);
    }

    #[test]
    fn rejects_bad_scripts() {
        let unordered = SAMPLE.replace("\"t_us\": 30000", "\"t_us\": 10000");
        assert!(matches!(Scenario::from_json(&unordered), Err(ScenarioError::Invalid(_))));
        let unknown = SAMPLE.replace("4x4", "5x5");
        assert!(matches!(
            Scenario::from_json(&unknown).unwrap().config(),
            Err(ScenarioError::Sensor(SensorError::UnknownPreset(_)))
        ));
        let off = SAMPLE.replace("[37.5, 12.5]", "[500, 12.5]");
        assert!(Scenario::from_json(&off).unwrap().config().is_err());
    }

    #[test]
    fn presses_become_keyframes() {
        let p = ContactPatch::disk("a", 10.0, 10.0, 5.0, 8.0);
        let q = ContactPatch::disk("b", 60.0, 60.0, 5.0, 8.0);
        let s = Scenario::from_presses("4x4", 100.0, &[(10.0, 50.0, p), (30.0, 70.0, q)]);
        let counts: Vec<(f64, usize)> = s.keyframes.iter().map(|k| (k.t_us, k.patches.len())).collect();
        assert_eq!(counts, vec![(0.0, 0), (10.0, 1), (30.0, 2), (50.0, 1), (70.0, 0)]);
        s.validate().unwrap();
    }
}
