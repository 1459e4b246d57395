//! Deterministic discrete-time flight controller and vehicle surrogate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Lifecycle, Mode, Task, Throttle};

mod geofence;
mod log;
mod world;

pub use geofence::{check_geofence, distance_outside, inside, Breach, GeofenceConfig};
pub use log::{Event, EventKind, FlightLog, LogParseError, Sample, FORMAT_VERSION};
pub use world::{run_mission, wind_vector, Phase, Termination, World};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("rejected input: {0}")]
    RejectedInput(String),
}

/// Physical and autopilot constants. Defaults are the shipped calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    /// Velocity tracking time constant.
    pub tau: f64,
    pub cruise_speed: f64,
    pub climb_speed: f64,
    pub land_speed: f64,
    /// Descent rate per unit of negative throttle in STABILIZED.
    pub stabilized_descent_speed: f64,
    pub gravity: f64,
    pub k_vertical: f64,
    pub k_horizontal: f64,
    pub stabilized_drift_tau: f64,
    pub altctl_drift_tau: f64,
    pub waypoint_radius: f64,
    pub takeoff_tolerance: f64,
    pub arm_time: f64,
    pub takeoff_time: f64,
    pub disarm_delay: f64,
    pub idle_disarm_delay: f64,
    pub freefall_speed: f64,
    pub freefall_duration: f64,
    pub hard_landing_speed: f64,
    pub flyaway_distance: f64,
    pub max_time: f64,
    pub kill_delay: f64,
    pub t_pred: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt: 0.1,
            tau: 0.5,
            cruise_speed: 5.0,
            climb_speed: 2.0,
            land_speed: 1.0,
            stabilized_descent_speed: 4.0,
            gravity: 9.81,
            k_vertical: 0.5,
            k_horizontal: 1.0,
            stabilized_drift_tau: 10.0,
            altctl_drift_tau: 4.0,
            waypoint_radius: 1.0,
            takeoff_tolerance: 0.5,
            arm_time: 2.0,
            takeoff_time: 3.0,
            disarm_delay: 2.0,
            idle_disarm_delay: 10.0,
            freefall_speed: 4.0,
            freefall_duration: 0.3,
            hard_landing_speed: 2.0,
            flyaway_distance: 1000.0,
            max_time: 600.0,
            kill_delay: 0.0,
            t_pred: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Local frame: x east, y north, z altitude above ground.
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub mode: Mode,
    pub lifecycle: Lifecycle,
    pub armed: bool,
    pub motors_on: bool,
    pub throttle: Throttle,
    /// (pitch, roll), each in [-1, 1].
    pub stick: (f64, f64),
    pub time: f64,
}

/// A manual-control message from the RC transmitter or ground station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ControlKind {
    SetMode { mode: Mode },
    SetThrottle { level: Throttle },
    SetStick { pitch: f64, roll: f64 },
    KillMotors,
}

impl ControlKind {
    /// Control the proxy human performs for a task.
    pub fn for_task(task: Task) -> ControlKind {
        match task {
            Task::ChangeMode(mode) => ControlKind::SetMode { mode },
            Task::PressRtl => ControlKind::SetMode { mode: Mode::AutoRtl },
            Task::PressLand => ControlKind::SetMode { mode: Mode::AutoLand },
            Task::MoveThrottle(level) => ControlKind::SetThrottle { level },
            Task::KillMotors => ControlKind::KillMotors,
        }
    }
}

impl fmt::Display for ControlKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlKind::SetMode { mode } => write!(f, "SetMode {mode}"),
            ControlKind::SetThrottle { level } => write!(f, "SetThrottle {level}"),
            ControlKind::SetStick { pitch, roll } => write!(f, "SetStick {pitch} {roll}"),
            ControlKind::KillMotors => f.write_str("KillMotors"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub kind: ControlKind,
    pub issue_time: f64,
}

impl ControlInput {
    pub fn at(issue_time: f64, kind: ControlKind) -> Self {
        ControlInput { kind, issue_time }
    }
}
