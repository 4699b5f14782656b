//! JSON messages of the control/UI channel. Every message is an object with
//! a `type` field; see `docs/protocol.md` for the full schema.

use crate::engine::Sampling;
use crossknit_core::pipeline::{ContactEvent, FrameAnalysis, Gesture};
use crossknit_core::robot::{ArmState, BaseState, GripperState, Sector};
use crossknit_core::{ContactPatch, Frame};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotKind {
    Arm,
    Kuri,
    None,
}

/// Messages sent by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// Edits the live contact set: `remove` drops patches by id, then each
    /// of `patches` is inserted or replaces the patch with the same id.
    /// `replace` clears every patch first.
    InjectContact {
        #[serde(default)]
        patches: Vec<ContactPatch>,
        #[serde(default)]
        remove: Vec<String>,
        #[serde(default)]
        replace: bool,
    },
    Command(ClientCommand),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum ClientCommand {
    ClearContacts,
    /// Switches the sensor preset; the scan clock, contacts and robot reset.
    SetPreset { preset: String },
    SetRobot { robot: RobotKind },
    ResetRobot,
    SetSampling { sampling: Sampling },
    SetTiming { t_write_us: f64, t_read_us: f64 },
    /// Binary frames use the wire format instead of `frame` messages.
    SetStream { binary: bool },
}

/// Messages sent by the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Frame(FrameMessage),
    RobotState(RobotStateMessage),
    Command(ServerCommand),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMessage {
    pub seq: u64,
    pub t_start_us: f64,
    pub rows: usize,
    pub cols: usize,
    /// Row-major ADC codes.
    pub counts: Vec<u16>,
    pub events: Vec<ContactEvent>,
    pub gesture: Gesture,
}

impl FrameMessage {
    pub fn new(seq: u64, frame: &Frame, analysis: &FrameAnalysis) -> Self {
        Self {
            seq,
            t_start_us: frame.t_start_us,
            rows: frame.rows(),
            cols: frame.cols(),
            counts: frame.counts.as_slice().to_vec(),
            events: analysis.events.clone(),
            gesture: analysis.gesture.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotStateMessage {
    pub seq: u64,
    pub t_us: f64,
    pub robot: RobotSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotSnapshot {
    Arm {
        position_mm: [f64; 3],
        velocity_mm_s: [f64; 3],
        gripper: GripperState,
    },
    Kuri {
        base: BaseState,
        sector: Option<Sector>,
    },
}

impl RobotSnapshot {
    pub fn arm(state: &ArmState) -> Self {
        RobotSnapshot::Arm {
            position_mm: state.position_mm.into(),
            velocity_mm_s: state.velocity_mm_s.into(),
            gripper: state.gripper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum ServerCommand {
    /// Sent on connect and after every configuration change.
    Session {
        preset: String,
        rows: usize,
        cols: usize,
        taxel_pitch_mm: f64,
        taxel_size_mm: f64,
        frame_period_us: f64,
        robot: RobotKind,
        sampling: Sampling,
    },
    Error { message: String },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

impl ClientMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("client messages serialize")
    }
}
