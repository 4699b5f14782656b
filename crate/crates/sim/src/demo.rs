//! Scripted end-to-end runs: scenario, scan, pipeline, controller and
//! kinematics in one loop.

use crate::engine::{EngineOptions, ScanEngine};
use crate::live::{arm_mount, quick_calibration, ARM_START_MM};
use crate::scenario::{Scenario, ScenarioError};
use crossknit_core::pipeline::{Gesture, Pipeline, PipelineParams};
use crossknit_core::robot::{ArmController, ArmParams, BaseParams, BaseState, GripperState, HeadPitch, KuriController, Sector};
use crossknit_core::{ContactPatch, SensorConfig};
use nalgebra::Vector3;
use serde::Serialize;
use std::io::Write;
use std::time::{Duration, Instant};

fn gesture_name(g: &Gesture) -> &'static str {
    match g {
        Gesture::None => "none",
        Gesture::Push { .. } => "push",
        Gesture::Grab => "grab",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSample {
    pub t_us: f64,
    pub x_mm: f64,
    pub y_mm: f64,
    pub z_mm: f64,
    pub vx_mm_s: f64,
    pub vy_mm_s: f64,
    pub vz_mm_s: f64,
    pub gripper: GripperState,
    pub gesture: &'static str,
}

#[derive(Debug, Clone)]
pub struct ArmDemoReport {
    pub target_mm: [f64; 3],
    pub tolerance_mm: f64,
    pub trajectory: Vec<ArmSample>,
    pub elapsed: Duration,
}

impl ArmDemoReport {
    pub fn final_position(&self) -> Vector3<f64> {
        let s = self.trajectory.last().expect("demo produced frames");
        Vector3::new(s.x_mm, s.y_mm, s.z_mm)
    }

    pub fn final_gripper(&self) -> GripperState {
        self.trajectory.last().expect("demo produced frames").gripper
    }

    pub fn reached(&self) -> bool {
        (self.final_position() - Vector3::from(self.target_mm)).norm() <= self.tolerance_mm
    }
}

/// Target of the arm demo and the radius of the region counted as reached.
pub const ARM_TARGET_MM: [f64; 3] = [0.0, 100.0, 500.0];
pub const ARM_TOLERANCE_MM: f64 = 25.0;

/// Touch script for the arm sleeve: a press on the underside lifts the
/// end-effector, a press on the side moves it sideways, and a palm press
/// closes the gripper once it has arrived.
pub fn arm_scenario(config: &SensorConfig) -> Scenario {
    let w = config.width_mm();
    let v = config.taxel_center(3, 0).1;
    // Column boundaries at half and quarter circumference face straight
    // down and sideways; straddling presses centre the contact on them.
    let lift = ContactPatch::disk("lift", w / 2.0, v, 10.0, 16.0);
    let side = ContactPatch::disk("side", w / 4.0, v, 10.0, 16.0);
    let palm = ContactPatch::disk("palm", w / 2.0, config.height_mm() / 2.0, 30.0, 80.0);
    Scenario::from_presses(
        &config.name,
        3.6e6,
        &[(0.1e6, 0.95e6, lift), (1.3e6, 2.15e6, side), (2.8e6, 3.2e6, palm)],
    )
}

pub fn run_arm_demo() -> Result<ArmDemoReport, ScenarioError> {
    let started = Instant::now();
    let config = SensorConfig::preset("8x8")?;
    let options = EngineOptions::for_config(&config);
    let scenario = arm_scenario(&config);
    scenario.check_geometry(&config)?;
    let pipeline = Pipeline::new(
        config.clone(),
        PipelineParams::default(),
        Some(quick_calibration(&config, &options.transfer)?),
    );
    let mut engine = ScanEngine::new(config.clone(), options)?;
    let mut arm = ArmController::new(arm_mount(&config)?, ArmParams::default(), Vector3::from(ARM_START_MM));
    let dt_s = engine.frame_period_us() * 1e-6;
    let mut trajectory = Vec::new();
    while engine.clock_us() < scenario.duration_us {
        let frame = engine.next_frame(&scenario)?;
        let analysis = pipeline.process(&frame)?;
        let s = arm.update(&analysis, frame.t_start_us, dt_s);
        trajectory.push(ArmSample {
            t_us: frame.t_start_us,
            x_mm: s.position_mm.x,
            y_mm: s.position_mm.y,
            z_mm: s.position_mm.z,
            vx_mm_s: s.velocity_mm_s.x,
            vy_mm_s: s.velocity_mm_s.y,
            vz_mm_s: s.velocity_mm_s.z,
            gripper: s.gripper,
            gesture: gesture_name(&analysis.gesture),
        });
    }
    Ok(ArmDemoReport {
        target_mm: ARM_TARGET_MM,
        tolerance_mm: ARM_TOLERANCE_MM,
        trajectory,
        elapsed: started.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KuriSample {
    pub t_us: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
    pub linear_m_s: f64,
    pub angular_rad_s: f64,
    pub head_pitch: HeadPitch,
    pub head_yaw: u8,
    pub sector: Option<Sector>,
}

#[derive(Debug, Clone)]
pub struct KuriDemoReport {
    pub trajectory: Vec<KuriSample>,
    pub elapsed: Duration,
}

impl KuriDemoReport {
    /// Last sample at or before `t_us`.
    pub fn at(&self, t_us: f64) -> &KuriSample {
        let i = self.trajectory.partition_point(|s| s.t_us <= t_us);
        &self.trajectory[i.saturating_sub(1)]
    }
}

/// Press times of the band tour, in seconds.
pub const KURI_TOUR: [(&str, f64, f64, usize, usize); 6] = [
    ("back-1", 0.2, 0.5, 1, 7),
    ("back-2", 0.8, 1.1, 1, 8),
    ("back-3", 1.4, 1.7, 1, 7),
    ("left", 2.2, 2.6, 1, 3),
    ("right", 3.2, 3.6, 1, 12),
    ("front", 4.2, 4.5, 0, 0),
];

pub fn kuri_scenario(config: &SensorConfig) -> Scenario {
    let presses: Vec<_> = KURI_TOUR
        .iter()
        .map(|&(id, on, off, row, col)| {
            let (x, y) = config.taxel_center(row, col);
            (on * 1e6, off * 1e6, ContactPatch::disk(id, x, y, 15.0, 10.0))
        })
        .collect();
    Scenario::from_presses(&config.name, 5.0e6, &presses)
}

pub fn run_kuri_demo() -> Result<KuriDemoReport, ScenarioError> {
    let started = Instant::now();
    let config = SensorConfig::preset("3x16")?;
    let options = EngineOptions::for_config(&config);
    let scenario = kuri_scenario(&config);
    scenario.check_geometry(&config)?;
    let pipeline = Pipeline::new(config.clone(), PipelineParams::default(), None);
    let mut engine = ScanEngine::new(config.clone(), options)?;
    let mut kuri = KuriController::new(config.clone(), BaseParams::default(), BaseState::default());
    let dt_s = engine.frame_period_us() * 1e-6;
    let mut trajectory = Vec::new();
    while engine.clock_us() < scenario.duration_us {
        let frame = engine.next_frame(&scenario)?;
        let analysis = pipeline.process(&frame)?;
        let (s, sector) = kuri.update(&analysis, dt_s);
        trajectory.push(KuriSample {
            t_us: frame.t_start_us,
            x_m: s.x_m,
            y_m: s.y_m,
            heading_rad: s.heading_rad,
            linear_m_s: s.linear_m_s,
            angular_rad_s: s.angular_rad_s,
            head_pitch: s.head.pitch,
            head_yaw: s.head.yaw_index,
            sector,
        });
    }
    Ok(KuriDemoReport {
        trajectory,
        elapsed: started.elapsed(),
    })
}

pub fn write_trajectory_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
