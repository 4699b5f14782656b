//! Lead-through control of an arm end-effector through a cylindrical
//! tactile sleeve.

use crate::config::SensorConfig;
use crate::error::{Result, SensorError};
use crate::pipeline::{ContactEvent, Gesture};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Placement of a sensor wrapped around a cylinder.
///
/// Sensor columns wrap around the circumference starting at the seam
/// (surface `x = 0`, direction `seam_dir` from the axis); rows run along the
/// axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderMount {
    pub radius_mm: f64,
    pub origin: Vector3<f64>,
    pub axis: Vector3<f64>,
    pub seam_dir: Vector3<f64>,
}

impl CylinderMount {
    /// Mount whose circumference equals the sensor width.
    pub fn wrapping(config: &SensorConfig, origin: Vector3<f64>, axis: Vector3<f64>, seam_dir: Vector3<f64>) -> Result<Self> {
        let mount = Self {
            radius_mm: config.width_mm() / (2.0 * PI),
            origin,
            axis: axis.normalize(),
            seam_dir: seam_dir.normalize(),
        };
        mount.validate(config)?;
        Ok(mount)
    }

    pub fn validate(&self, config: &SensorConfig) -> Result<()> {
        if !(self.radius_mm > 0.0) {
            return Err(SensorError::InvalidParameter("cylinder radius must be positive".into()));
        }
        if config.width_mm() > 2.0 * PI * self.radius_mm + 1e-9 {
            return Err(SensorError::InvalidParameter(
                "sensor width exceeds the cylinder circumference".into(),
            ));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-9
            || (self.seam_dir.norm() - 1.0).abs() > 1e-9
            || self.axis.dot(&self.seam_dir).abs() > 1e-9
        {
            return Err(SensorError::InvalidParameter(
                "axis and seam direction must be orthonormal".into(),
            ));
        }
        Ok(())
    }

    /// Outward unit normal at surface coordinate `u` (mm along the columns).
    pub fn radial(&self, u_mm: f64) -> Vector3<f64> {
        let theta = u_mm / self.radius_mm;
        let side = self.axis.cross(&self.seam_dir);
        self.seam_dir * theta.cos() + side * theta.sin()
    }

    /// World point of the sensor surface coordinate `(u, v)`.
    pub fn surface_point(&self, u_mm: f64, v_mm: f64) -> Vector3<f64> {
        self.origin + self.axis * v_mm + self.radial(u_mm) * self.radius_mm
    }

    /// Foot of the perpendicular from `p` onto the axis.
    pub fn axis_foot(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.origin + self.axis * (p - self.origin).dot(&self.axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmParams {
    /// End-effector speed per newton of contact force, mm/s/N.
    pub gain_mm_s_per_n: f64,
    pub v_max_mm_s: f64,
    pub workspace_min: [f64; 3],
    pub workspace_max: [f64; 3],
    pub gripper_refractory_us: f64,
}

impl Default for ArmParams {
    fn default() -> Self {
        Self {
            gain_mm_s_per_n: 8.0,
            v_max_mm_s: 150.0,
            workspace_min: [-600.0, -600.0, 0.0],
            workspace_max: [600.0, 600.0, 900.0],
            gripper_refractory_us: 1.0e6,
        }
    }
}

/// End-effector velocity commanded by a push: toward the cylinder axis from
/// the contact point, with speed proportional to force up to `v_max`.
/// Ghost events command nothing.
pub fn arm_velocity_command(event: &ContactEvent, mount: &CylinderMount, params: &ArmParams) -> Option<Vector3<f64>> {
    if event.ghost {
        return None;
    }
    let p = mount.surface_point(event.centroid_mm[0], event.centroid_mm[1]);
    let dir = (mount.axis_foot(&p) - p).normalize();
    let speed = (params.gain_mm_s_per_n * event.force_n.max(0.0)).min(params.v_max_mm_s);
    Some(dir * speed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GripperState {
    Open,
    Closed,
}

impl GripperState {
    pub fn toggled(self) -> Self {
        match self {
            GripperState::Open => GripperState::Closed,
            GripperState::Closed => GripperState::Open,
        }
    }
}

/// Debounces grab gestures: at most one toggle per refractory window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperDebounce {
    pub refractory_us: f64,
    pub last_toggle_us: Option<f64>,
}

impl GripperDebounce {
    pub fn new(refractory_us: f64) -> Self {
        Self {
            refractory_us,
            last_toggle_us: None,
        }
    }
}

pub fn gripper_command(gesture: &Gesture, state: GripperState, debounce: &mut GripperDebounce, t_us: f64) -> GripperState {
    if !matches!(gesture, Gesture::Grab) {
        return state;
    }
    if let Some(last) = debounce.last_toggle_us {
        if t_us - last < debounce.refractory_us {
            return state;
        }
    }
    debounce.last_toggle_us = Some(t_us);
    state.toggled()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub position_mm: Vector3<f64>,
    pub gripper: GripperState,
    pub velocity_mm_s: Vector3<f64>,
}

impl ArmState {
    pub fn at(position_mm: Vector3<f64>) -> Self {
        Self {
            position_mm,
            gripper: GripperState::Open,
            velocity_mm_s: Vector3::zeros(),
        }
    }
}

/// Forward-Euler step of the end-effector point, saturating speed and
/// clamping to the workspace box.
pub fn step_arm(state: &ArmState, velocity: Vector3<f64>, dt_s: f64, params: &ArmParams) -> ArmState {
    let speed = velocity.norm();
    let v = if speed > params.v_max_mm_s {
        velocity * (params.v_max_mm_s / speed)
    } else {
        velocity
    };
    let mut p = state.position_mm + v * dt_s;
    for i in 0..3 {
        p[i] = p[i].clamp(params.workspace_min[i], params.workspace_max[i]);
    }
    ArmState {
        position_mm: p,
        gripper: state.gripper,
        velocity_mm_s: v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mount() -> CylinderMount {
        let c = SensorConfig::preset("8x8").unwrap();
        CylinderMount::wrapping(&c, Vector3::zeros(), Vector3::z(), Vector3::x()).unwrap()
    }

    fn push_at(u: f64, v: f64, force: f64) -> ContactEvent {
        ContactEvent {
            id: 0,
            taxels: vec![(0, 0)],
            centroid_mm: [u, v],
            force_n: force,
            peak_reading: 300,
            total_reading: 300,
            ghost: false,
            t_us: 0.0,
        }
    }

    #[test]
    fn push_on_positive_x_moves_toward_negative_x() {
        let v = arm_velocity_command(&push_at(0.0, 40.0, 5.0), &mount(), &ArmParams::default()).unwrap();
        assert_relative_eq!(v.normalize(), -Vector3::x(), epsilon = 1e-12);
        assert_relative_eq!(v.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn speed_is_linear_then_saturates() {
        let m = mount();
        let p = ArmParams::default();
        let zero = arm_velocity_command(&push_at(10.0, 10.0, 0.0), &m, &p).unwrap();
        assert_eq!(zero.norm(), 0.0);
        let a = arm_velocity_command(&push_at(10.0, 10.0, 4.0), &m, &p).unwrap().norm();
        let b = arm_velocity_command(&push_at(10.0, 10.0, 8.0), &m, &p).unwrap().norm();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
        let sat = arm_velocity_command(&push_at(10.0, 10.0, 500.0), &m, &p).unwrap().norm();
        assert_relative_eq!(sat, p.v_max_mm_s, max_relative = 1e-12);
    }

    #[test]
    fn ghost_push_is_ignored() {
        let mut e = push_at(0.0, 0.0, 5.0);
        e.ghost = true;
        assert!(arm_velocity_command(&e, &mount(), &ArmParams::default()).is_none());
    }

    #[test]
    fn sleeve_must_fit_circumference() {
        let c = SensorConfig::preset("8x8").unwrap();
        let mut m = mount();
        m.radius_mm = 10.0;
        assert!(m.validate(&c).is_err());
    }

    #[test]
    fn gripper_debounce() {
        let mut d = GripperDebounce::new(1e6);
        let s = gripper_command(&Gesture::Grab, GripperState::Open, &mut d, 0.0);
        assert_eq!(s, GripperState::Closed);
        let s = gripper_command(&Gesture::Grab, s, &mut d, 0.5e6);
        assert_eq!(s, GripperState::Closed);
        let push = Gesture::Push {
            event: 0,
            centroid_mm: [0.0, 0.0],
            force_n: 1.0,
        };
        assert_eq!(gripper_command(&push, s, &mut d, 5e6), GripperState::Closed);
        assert_eq!(gripper_command(&Gesture::Grab, s, &mut d, 1.2e6), GripperState::Open);
    }

    #[test]
    fn euler_step() {
        let p = ArmParams::default();
        let s = ArmState::at(Vector3::new(0.0, 0.0, 300.0));
        assert_eq!(step_arm(&s, Vector3::zeros(), 1.0, &p).position_mm, s.position_mm);
        let v = Vector3::new(10.0, -20.0, 5.0);
        let mut cur = s.clone();
        for _ in 0..100 {
            cur = step_arm(&cur, v, 0.01, &p);
        }
        assert_relative_eq!(cur.position_mm, s.position_mm + v, epsilon = 1e-9);
        let far = step_arm(&s, Vector3::new(0.0, 0.0, -1e4), 10.0, &p);
        assert!(far.position_mm.z >= p.workspace_min[2]);
        assert_relative_eq!(far.velocity_mm_s.norm(), p.v_max_mm_s, max_relative = 1e-12);
    }
}
