//! Mapping contact events onto robot commands, and the kinematic models the
//! commands drive.

mod arm;
mod kuri;

pub use arm::{
    arm_velocity_command, gripper_command, step_arm, ArmParams, ArmState, CylinderMount, GripperDebounce,
    GripperState,
};
pub use kuri::{
    apply_base_command, kuri_base_command, kuri_head_command, step_base, BaseCommand, BaseParams, BaseState,
    HeadPitch, HeadPose, Sector, SectorMap,
};

use crate::config::SensorConfig;
use crate::pipeline::{strongest_event, ContactEvent, FrameAnalysis, Gesture};
use nalgebra::Vector3;

fn strongest(analysis: &FrameAnalysis) -> Option<&ContactEvent> {
    let real: Vec<&ContactEvent> = analysis.events.iter().filter(|e| !e.ghost).collect();
    strongest_event(&real)
}

/// Arm control loop state: grab gestures drive the gripper, the strongest
/// push drives the end-effector velocity.
#[derive(Debug, Clone)]
pub struct ArmController {
    pub mount: CylinderMount,
    pub params: ArmParams,
    pub state: ArmState,
    pub debounce: GripperDebounce,
}

impl ArmController {
    pub fn new(mount: CylinderMount, params: ArmParams, start_mm: Vector3<f64>) -> Self {
        Self {
            debounce: GripperDebounce::new(params.gripper_refractory_us),
            mount,
            params,
            state: ArmState::at(start_mm),
        }
    }

    pub fn update(&mut self, analysis: &FrameAnalysis, t_us: f64, dt_s: f64) -> &ArmState {
        let gripper = gripper_command(&analysis.gesture, self.state.gripper, &mut self.debounce, t_us);
        let velocity = match analysis.gesture {
            Gesture::Push { .. } => strongest(analysis)
                .and_then(|e| arm_velocity_command(e, &self.mount, &self.params))
                .unwrap_or_else(Vector3::zeros),
            Gesture::Grab | Gesture::None => Vector3::zeros(),
        };
        self.state = step_arm(&self.state, velocity, dt_s, &self.params);
        self.state.gripper = gripper;
        &self.state
    }
}

/// Mobile-base control loop state. A back push raises the speed once per
/// touch rather than once per frame.
#[derive(Debug, Clone)]
pub struct KuriController {
    pub config: SensorConfig,
    pub sectors: SectorMap,
    pub params: BaseParams,
    pub state: BaseState,
    back_held: bool,
}

impl KuriController {
    pub fn new(config: SensorConfig, params: BaseParams, state: BaseState) -> Self {
        Self {
            sectors: SectorMap::symmetric(config.cols),
            config,
            params,
            state,
            back_held: false,
        }
    }

    pub fn update(&mut self, analysis: &FrameAnalysis, dt_s: f64) -> (&BaseState, Option<Sector>) {
        let event = strongest(analysis);
        self.state.head = kuri_head_command(event, &self.config, self.state.head);
        let mut cmd = kuri_base_command(event, &self.config, &self.sectors, &self.params, &self.state);
        if cmd.sector == Some(Sector::Back) {
            if self.back_held {
                cmd.linear_delta = 0.0;
            }
            self.back_held = true;
        } else {
            self.back_held = false;
        }
        self.state = apply_base_command(&self.state, &cmd, &self.params);
        self.state = step_base(&self.state, dt_s);
        (&self.state, cmd.sector)
    }
}
