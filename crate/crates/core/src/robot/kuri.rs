//! Head and base control of a mobile robot wearing a tactile band.

use crate::config::SensorConfig;
use crate::pipeline::ContactEvent;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadPitch {
    Up,
    Forward,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadPose {
    pub pitch: HeadPitch,
    pub yaw_index: u8,
}

impl Default for HeadPose {
    fn default() -> Self {
        Self {
            pitch: HeadPitch::Forward,
            yaw_index: 0,
        }
    }
}

/// Taxel row and column under the event centroid.
fn centroid_cell(event: &ContactEvent, config: &SensorConfig) -> (usize, usize) {
    config.nearest_taxel(event.centroid_mm[0], event.centroid_mm[1])
}

/// Head pose for a touch: band rows map to pitch (top row looks up), band
/// columns to one of the yaw angles. No touch holds the current pose.
pub fn kuri_head_command(event: Option<&ContactEvent>, config: &SensorConfig, current: HeadPose) -> HeadPose {
    let Some(event) = event.filter(|e| !e.ghost) else {
        return current;
    };
    let (row, col) = centroid_cell(event, config);
    let band = row * 3 / config.rows;
    let pitch = match band {
        0 => HeadPitch::Up,
        1 => HeadPitch::Forward,
        _ => HeadPitch::Down,
    };
    HeadPose {
        pitch,
        yaw_index: col.min(u8::MAX as usize) as u8,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Front,
    LeftSide,
    RightSide,
    Back,
}

/// Partition of the band's columns into body sectors.
///
/// Column `j` faces azimuth `(j + 0.5) * 360 / cols` degrees, counter-clockwise
/// from the seam seen from above; `ahead_deg` is the azimuth the robot drives
/// toward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorMap {
    pub cols: usize,
    pub ahead_deg: f64,
    pub front_cols: usize,
    pub back_cols: usize,
}

impl SectorMap {
    /// Four front columns centred ahead, four at the back, four per side.
    pub fn symmetric(cols: usize) -> Self {
        Self {
            cols,
            ahead_deg: 0.0,
            front_cols: cols / 4,
            back_cols: cols / 4,
        }
    }

    pub fn sector(&self, col: usize) -> Sector {
        let step = 360.0 / self.cols as f64;
        let mut a = (col as f64 + 0.5) * step - self.ahead_deg;
        a = (a + 180.0).rem_euclid(360.0) - 180.0;
        let front_half = self.front_cols as f64 * step / 2.0;
        let back_half = self.back_cols as f64 * step / 2.0;
        if a.abs() < front_half {
            Sector::Front
        } else if a.abs() > 180.0 - back_half {
            Sector::Back
        } else if a > 0.0 {
            Sector::LeftSide
        } else {
            Sector::RightSide
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    pub speed_step_m_s: f64,
    pub max_speed_m_s: f64,
    pub turn_rate_rad_s: f64,
    pub max_turn_rate_rad_s: f64,
}

impl Default for BaseParams {
    fn default() -> Self {
        Self {
            speed_step_m_s: 0.1,
            max_speed_m_s: 0.5,
            turn_rate_rad_s: 0.8,
            max_turn_rate_rad_s: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseState {
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
    pub linear_m_s: f64,
    /// Positive turns counter-clockwise (to the left).
    pub angular_rad_s: f64,
    pub head: HeadPose,
}

impl Default for BaseState {
    fn default() -> Self {
        Self {
            x_m: 0.0,
            y_m: 0.0,
            heading_rad: 0.0,
            linear_m_s: 0.0,
            angular_rad_s: 0.0,
            head: HeadPose::default(),
        }
    }
}

/// Change in base speeds requested by one touch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseCommand {
    pub linear_delta: f64,
    pub angular_delta: f64,
    pub sector: Option<Sector>,
}

/// Front touch stops the base, a side touch turns away from it, a back touch
/// speeds up by one step (saturating). Without a touch the base keeps its
/// speed and stops turning.
pub fn kuri_base_command(
    event: Option<&ContactEvent>,
    config: &SensorConfig,
    sectors: &SectorMap,
    params: &BaseParams,
    state: &BaseState,
) -> BaseCommand {
    let Some(event) = event.filter(|e| !e.ghost) else {
        return BaseCommand {
            linear_delta: 0.0,
            angular_delta: -state.angular_rad_s,
            sector: None,
        };
    };
    let (_, col) = centroid_cell(event, config);
    let sector = sectors.sector(col);
    let (linear_delta, angular_delta) = match sector {
        Sector::Front => (-state.linear_m_s, -state.angular_rad_s),
        Sector::Back => {
            let target = (state.linear_m_s + params.speed_step_m_s).min(params.max_speed_m_s);
            (target - state.linear_m_s, -state.angular_rad_s)
        }
        Sector::LeftSide => (0.0, -params.turn_rate_rad_s - state.angular_rad_s),
        Sector::RightSide => (0.0, params.turn_rate_rad_s - state.angular_rad_s),
    };
    BaseCommand {
        linear_delta,
        angular_delta,
        sector: Some(sector),
    }
}

pub fn apply_base_command(state: &BaseState, cmd: &BaseCommand, params: &BaseParams) -> BaseState {
    BaseState {
        linear_m_s: (state.linear_m_s + cmd.linear_delta).clamp(0.0, params.max_speed_m_s),
        angular_rad_s: (state.angular_rad_s + cmd.angular_delta)
            .clamp(-params.max_turn_rate_rad_s, params.max_turn_rate_rad_s),
        ..*state
    }
}

/// Forward-Euler unicycle step.
pub fn step_base(state: &BaseState, dt_s: f64) -> BaseState {
    BaseState {
        x_m: state.x_m + state.linear_m_s * state.heading_rad.cos() * dt_s,
        y_m: state.y_m + state.linear_m_s * state.heading_rad.sin() * dt_s,
        heading_rad: state.heading_rad + state.angular_rad_s * dt_s,
        ..*state
    }
}
