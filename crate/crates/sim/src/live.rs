//! Interactive simulation state: a scan engine over an editable contact
//! set, the processing pipeline and one robot controller.

use crate::engine::{EngineOptions, FieldSource, ScanEngine};
use crate::protocol::{
    ClientCommand, ClientMessage, FrameMessage, RobotKind, RobotSnapshot, RobotStateMessage, ServerCommand,
    ServerMessage,
};
use crossknit_core::pipeline::{calibrate, simulate_ramp, CalibrationTable, FrameAnalysis, Pipeline, PipelineParams};
use crossknit_core::robot::{ArmController, ArmParams, BaseParams, BaseState, CylinderMount, KuriController, Sector};
use crossknit_core::{ContactPatch, Frame, PressureField, Result, ScanTiming, SensorConfig, TransferParams};
use nalgebra::Vector3;

/// Forces of the quick calibration ramp used by live sessions and demos.
pub const QUICK_RAMP_N: [f64; 6] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0];

pub const ARM_START_MM: [f64; 3] = [0.0, 0.0, 400.0];

/// Indenter calibration of every taxel over the quick ramp.
pub fn quick_calibration(config: &SensorConfig, transfer: &TransferParams) -> Result<CalibrationTable> {
    let samples = simulate_ramp(config, transfer, &QUICK_RAMP_N)?;
    Ok(calibrate(config.rows, config.cols, &samples))
}

/// Sleeve mount for arm sessions: the axis runs along world X and the seam
/// faces up.
pub fn arm_mount(config: &SensorConfig) -> Result<CylinderMount> {
    CylinderMount::wrapping(config, Vector3::from(ARM_START_MM), Vector3::x(), Vector3::z())
}

pub fn default_robot(preset: &str) -> RobotKind {
    match preset {
        "8x8" => RobotKind::Arm,
        "3x16" => RobotKind::Kuri,
        _ => RobotKind::None,
    }
}

/// Contacts injected by clients, keyed by patch id.
#[derive(Debug, Clone, Default)]
pub struct LiveField {
    patches: Vec<ContactPatch>,
    version: u64,
}

impl LiveField {
    pub fn patches(&self) -> &[ContactPatch] {
        &self.patches
    }

    pub fn edit(&mut self, patches: Vec<ContactPatch>, remove: &[String], replace: bool) {
        if replace {
            self.patches.clear();
        }
        self.patches.retain(|p| !remove.contains(&p.id));
        for p in patches {
            match self.patches.iter_mut().find(|q| q.id == p.id) {
                Some(slot) => *slot = p,
                None => self.patches.push(p),
            }
        }
        self.version += 1;
    }

    pub fn clear(&mut self) {
        self.edit(Vec::new(), &[], true);
    }
}

impl FieldSource for LiveField {
    fn version_at(&self, _t_us: f64) -> u64 {
        self.version
    }

    fn field_at(&self, t_us: f64) -> PressureField {
        PressureField {
            patches: self.patches.clone(),
            t_us,
        }
    }
}

#[derive(Debug, Clone)]
pub enum RobotRuntime {
    Arm(Box<ArmController>),
    Kuri(Box<KuriController>, Option<Sector>),
    None,
}

impl RobotRuntime {
    pub fn new(kind: RobotKind, config: &SensorConfig) -> Result<Self> {
        Ok(match kind {
            RobotKind::Arm => RobotRuntime::Arm(Box::new(ArmController::new(
                arm_mount(config)?,
                ArmParams::default(),
                Vector3::from(ARM_START_MM),
            ))),
            RobotKind::Kuri => RobotRuntime::Kuri(
                Box::new(KuriController::new(config.clone(), BaseParams::default(), BaseState::default())),
                None,
            ),
            RobotKind::None => RobotRuntime::None,
        })
    }

    pub fn kind(&self) -> RobotKind {
        match self {
            RobotRuntime::Arm(_) => RobotKind::Arm,
            RobotRuntime::Kuri(..) => RobotKind::Kuri,
            RobotRuntime::None => RobotKind::None,
        }
    }

    pub fn update(&mut self, analysis: &FrameAnalysis, t_us: f64, dt_s: f64) {
        match self {
            RobotRuntime::Arm(ctl) => {
                ctl.update(analysis, t_us, dt_s);
            }
            RobotRuntime::Kuri(ctl, last) => {
                *last = ctl.update(analysis, dt_s).1;
            }
            RobotRuntime::None => {}
        }
    }

    pub fn snapshot(&self) -> Option<RobotSnapshot> {
        match self {
            RobotRuntime::Arm(ctl) => Some(RobotSnapshot::arm(&ctl.state)),
            RobotRuntime::Kuri(ctl, sector) => Some(RobotSnapshot::Kuri {
                base: ctl.state,
                sector: *sector,
            }),
            RobotRuntime::None => None,
        }
    }
}

/// Result of one scan step.
#[derive(Debug, Clone)]
pub struct Tick {
    pub frame: Frame,
    pub analysis: FrameAnalysis,
    pub frame_message: FrameMessage,
    pub robot_message: Option<RobotStateMessage>,
}

pub struct LiveSim {
    preset: String,
    engine: ScanEngine,
    field: LiveField,
    pipeline: Pipeline,
    robot: RobotRuntime,
    seq: u64,
}

impl LiveSim {
    pub fn new(preset: &str, robot: Option<RobotKind>) -> Result<Self> {
        let config = SensorConfig::preset(preset)?;
        let options = EngineOptions::for_config(&config);
        Self::with_options(preset, config, options, robot.unwrap_or_else(|| default_robot(preset)))
    }

    pub fn with_options(preset: &str, config: SensorConfig, options: EngineOptions, robot: RobotKind) -> Result<Self> {
        let calibration = quick_calibration(&config, &options.transfer)?;
        Ok(Self {
            preset: preset.to_string(),
            robot: RobotRuntime::new(robot, &config)?,
            pipeline: Pipeline::new(config.clone(), PipelineParams::default(), Some(calibration)),
            engine: ScanEngine::new(config, options)?,
            field: LiveField::default(),
            seq: 0,
        })
    }

    pub fn config(&self) -> &SensorConfig {
        self.engine.config()
    }

    pub fn engine(&self) -> &ScanEngine {
        &self.engine
    }

    pub fn field(&self) -> &LiveField {
        &self.field
    }

    pub fn robot(&self) -> &RobotRuntime {
        &self.robot
    }

    pub fn frame_period_us(&self) -> f64 {
        self.engine.frame_period_us()
    }

    pub fn session_message(&self) -> ServerMessage {
        let c = self.config();
        ServerMessage::Command(ServerCommand::Session {
            preset: self.preset.clone(),
            rows: c.rows,
            cols: c.cols,
            taxel_pitch_mm: c.taxel_pitch_mm,
            taxel_size_mm: c.taxel_size_mm,
            frame_period_us: self.frame_period_us(),
            robot: self.robot.kind(),
            sampling: self.engine.options().sampling,
        })
    }

    fn rebuild_engine(&mut self, options: EngineOptions) -> Result<()> {
        self.engine = ScanEngine::new(self.config().clone(), options)?;
        Ok(())
    }

    /// Applies a client message. Returns `Ok(true)` when the session
    /// description changed.
    pub fn apply(&mut self, msg: ClientMessage) -> Result<bool> {
        match msg {
            ClientMessage::InjectContact { patches, remove, replace } => {
                let config = self.config().clone();
                PressureField::new(patches.clone()).validate(&config)?;
                self.field.edit(patches, &remove, replace);
                Ok(false)
            }
            ClientMessage::Command(cmd) => match cmd {
                ClientCommand::ClearContacts => {
                    self.field.clear();
                    Ok(false)
                }
                ClientCommand::SetPreset { preset } => {
                    let robot = if self.robot.kind() == default_robot(&self.preset) {
                        default_robot(&preset)
                    } else {
                        self.robot.kind()
                    };
                    *self = LiveSim::new(&preset, Some(robot))?;
                    Ok(true)
                }
                ClientCommand::SetRobot { robot } => {
                    self.robot = RobotRuntime::new(robot, self.config())?;
                    Ok(true)
                }
                ClientCommand::ResetRobot => {
                    self.robot = RobotRuntime::new(self.robot.kind(), self.config())?;
                    Ok(false)
                }
                ClientCommand::SetSampling { sampling } => {
                    let mut o = *self.engine.options();
                    o.sampling = sampling;
                    self.rebuild_engine(o)?;
                    Ok(true)
                }
                ClientCommand::SetTiming { t_write_us, t_read_us } => {
                    let mut o = *self.engine.options();
                    o.timing = ScanTiming { t_write_us, t_read_us };
                    self.rebuild_engine(o)?;
                    Ok(true)
                }
                // Stream format is a per-connection choice.
                ClientCommand::SetStream { .. } => Ok(false),
            },
        }
    }

    /// Scans the next frame, processes it and advances the robot.
    pub fn step(&mut self) -> Result<Tick> {
        let frame = self.engine.next_frame(&self.field)?;
        let analysis = self.pipeline.process(&frame)?;
        let dt_s = self.frame_period_us() * 1e-6;
        self.robot.update(&analysis, frame.t_start_us, dt_s);
        let seq = self.seq;
        self.seq += 1;
        let robot_message = self.robot.snapshot().map(|robot| RobotStateMessage {
            seq,
            t_us: frame.t_start_us,
            robot,
        });
        Ok(Tick {
            frame_message: FrameMessage::new(seq, &frame, &analysis),
            frame,
            analysis,
            robot_message,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edits_upsert_and_remove_by_id() {
        let mut f = LiveField::default();
        f.edit(vec![ContactPatch::disk("a", 1.0, 1.0, 5.0, 3.0)], &[], false);
        f.edit(vec![ContactPatch::disk("a", 2.0, 2.0, 5.0, 4.0), ContactPatch::disk("b", 9.0, 9.0, 5.0, 4.0)], &[], false);
        assert_eq!(f.patches().len(), 2);
        assert_eq!(f.patches()[0].center_mm, [2.0, 2.0]);
        f.edit(Vec::new(), &["a".to_string()], false);
        assert_eq!(f.patches().len(), 1);
        assert_eq!(f.version_at(0.0), 3);
        f.clear();
        assert!(f.patches().is_empty());
    }

    #[test]
    fn injected_touch_shows_up_in_next_frame() {
        let mut sim = LiveSim::new("4x4", None).unwrap();
        assert!(sim.step().unwrap().frame.counts.as_slice().iter().all(|&c| c == 0));
        let (x, y) = sim.config().taxel_center(2, 3);
        sim.apply(ClientMessage::InjectContact {
            patches: vec![ContactPatch::disk("f", x, y, 8.0, 15.0)],
            remove: vec![],
            replace: false,
        })
        .unwrap();
        let t = sim.step().unwrap();
        assert!(t.frame.reading(2, 3) > 0);
        assert_eq!(t.analysis.events.len(), 1);
        assert!(t.robot_message.is_none());
        assert!(sim
            .apply(ClientMessage::InjectContact {
                patches: vec![ContactPatch::disk("bad", 900.0, 0.0, 8.0, 15.0)],
                remove: vec![],
                replace: false
            })
            .is_err());
    }

    #[test]
    fn preset_switch_resets_session() {
        let mut sim = LiveSim::new("4x4", None).unwrap();
        assert!(sim
            .apply(ClientMessage::Command(ClientCommand::SetPreset { preset: "3x16".into() }))
            .unwrap());
        assert_eq!(sim.robot().kind(), RobotKind::Kuri);
        assert_eq!(sim.config().cols, 16);
        assert!(sim
            .apply(ClientMessage::Command(ClientCommand::SetPreset { preset: "9x9".into() }))
            .is_err());
        assert_eq!(sim.config().cols, 16);
    }
}
