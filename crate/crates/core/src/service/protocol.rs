//! Console wire protocol: one JSON object per line, `{"seq","dir","ts","kind","payload"}`.

use serde::{Deserialize, Serialize};

use crate::model::{FuzzSpace, FuzzTest, Lifecycle, Mode, Task};
use crate::oracle::{ProfileRow, TestOutcomeKind};
use crate::runner::TestExecution;
use crate::simulator::{ControlKind, Event, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToConsole,
    FromConsole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMessage {
    /// Strictly increasing per direction, starting at 1.
    pub seq: u64,
    pub dir: Direction,
    /// Simulation time of the current test, 0 outside a test.
    pub ts: f64,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Body {
    Precheck(Precheck),
    RoleAck(RoleAck),
    Plan(Prompt),
    Go(Prompt),
    NoMoreTasks(RoleNotice),
    AwarenessQuestion(Question),
    AwarenessAnswer(Answer),
    Control(ControlMsg),
    Telemetry(Telemetry),
    TestResult(TestResult),
    Heartbeat(Heartbeat),
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Precheck(_) => "Precheck",
            Body::RoleAck(_) => "RoleAck",
            Body::Plan(_) => "Plan",
            Body::Go(_) => "Go",
            Body::NoMoreTasks(_) => "NoMoreTasks",
            Body::AwarenessQuestion(_) => "AwarenessQuestion",
            Body::AwarenessAnswer(_) => "AwarenessAnswer",
            Body::Control(_) => "Control",
            Body::Telemetry(_) => "Telemetry",
            Body::TestResult(_) => "TestResult",
            Body::Heartbeat(_) => "Heartbeat",
        }
    }

    /// Direction this kind travels in; heartbeats travel both ways.
    pub fn direction(&self) -> Option<Direction> {
        match self {
            Body::RoleAck(_) | Body::AwarenessAnswer(_) | Body::Control(_) => Some(Direction::FromConsole),
            Body::Heartbeat(_) => None,
            _ => Some(Direction::ToConsole),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSummary {
    pub id: String,
    pub takeoff_altitude: f64,
    pub waypoints: Vec<[f64; 3]>,
    pub rtl_altitude: f64,
    pub fence_polygon: Vec<[f64; 2]>,
    pub fence_max_altitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub hit_id: String,
    pub task: Task,
    pub precondition_mode: Mode,
    pub precondition_state: Lifecycle,
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleTasks {
    pub role: String,
    pub device: String,
    pub tasks: Vec<TaskSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precheck {
    pub test_id: String,
    /// Position of the test in the session's queue, from 0.
    pub index: usize,
    pub total: usize,
    pub mission: Option<MissionSummary>,
    pub wind: String,
    pub geofence: String,
    pub throttle: String,
    pub safety_notes: Vec<String>,
    pub roles: Vec<RoleTasks>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleAck {
    pub test_id: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub test_id: String,
    pub role: String,
    pub hit_id: String,
    /// Position of the HIT in its role's list.
    pub index: usize,
    pub task: Task,
    pub precondition_mode: Mode,
    pub precondition_state: Lifecycle,
    /// The control that performs the task exactly.
    pub expected: ControlKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleNotice {
    pub test_id: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub test_id: String,
    pub question_id: String,
    pub text: String,
    pub choices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub test_id: String,
    pub question_id: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlMsg {
    pub role: String,
    pub control: ControlKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventNote {
    pub t: f64,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub test_id: String,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub mode: Mode,
    pub lifecycle: Lifecycle,
    pub armed: bool,
    pub motors_on: bool,
    pub distance_home: f64,
    /// Events since the previous telemetry message.
    pub events: Vec<EventNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitOutcome {
    pub role: String,
    pub hit_id: String,
    pub status: String,
    pub stale_precondition: bool,
    pub performed: Option<ControlKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_id: String,
    pub outcome: TestOutcomeKind,
    pub max_deviation: f64,
    pub max_altitude: f64,
    pub duration: f64,
    pub landed: bool,
    pub mission_complete: bool,
    pub freefall: bool,
    pub hits: Vec<HitOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Heartbeat {}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("{kind} cannot travel {dir:?}")]
    WrongDirection { kind: &'static str, dir: Direction },
    #[error("sequence {got} does not follow {last}")]
    Sequence { last: u64, got: u64 },
}

impl SessionMessage {
    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("message serializes")
    }

    pub fn decode(line: &str) -> Result<SessionMessage, ProtocolError> {
        let m: SessionMessage = serde_json::from_str(line).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
        if m.body.direction().is_some_and(|d| d != m.dir) {
            return Err(ProtocolError::WrongDirection {
                kind: m.body.kind(),
                dir: m.dir,
            });
        }
        Ok(m)
    }
}

impl Precheck {
    pub fn for_test(test: &FuzzTest, space: &FuzzSpace, index: usize, total: usize) -> Precheck {
        let cfg = test.primary_config();
        let mission = space.mission(&test.mission).map(|m| MissionSummary {
            id: m.id.clone(),
            takeoff_altitude: m.takeoff_altitude,
            waypoints: m.waypoints.iter().map(|w| [w.x, w.y, w.z]).collect(),
            rtl_altitude: m.rtl_altitude,
            fence_polygon: m.geofence.polygon.clone(),
            fence_max_altitude: m.geofence.max_altitude,
        });
        let mut notes = vec![
            "Simulation only: no aircraft will fly.".to_string(),
            "Perform each task only after its GO prompt.".to_string(),
        ];
        if cfg.geofence_status == crate::model::Switch::On && cfg.geofence_action == crate::model::GeofenceAction::None {
            notes.push("Geofence is on with no breach action set.".to_string());
        }
        Precheck {
            test_id: test.test_id.clone(),
            index,
            total,
            mission,
            wind: test.environment.wind_or_calm().label(),
            geofence: format!(
                "status={} prediction={} action={}",
                cfg.geofence_status, cfg.geofence_prediction, cfg.geofence_action
            ),
            throttle: cfg.throttle.to_string(),
            safety_notes: notes,
            roles: test
                .roles
                .iter()
                .map(|r| RoleTasks {
                    role: r.role.clone(),
                    device: r.interaction_device.clone(),
                    tasks: r
                        .hits
                        .iter()
                        .map(|h| TaskSummary {
                            hit_id: h.id.clone(),
                            task: h.task,
                            precondition_mode: h.precondition_mode,
                            precondition_state: h.precondition_state,
                            delay_s: h.delay_s,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl Telemetry {
    pub fn from_sample(test_id: &str, s: &Sample, events: &[Event]) -> Telemetry {
        Telemetry {
            test_id: test_id.to_string(),
            position: s.pos,
            velocity: s.vel,
            mode: s.mode,
            lifecycle: s.lifecycle,
            armed: s.armed,
            motors_on: s.motors_on,
            distance_home: (s.pos[0] * s.pos[0] + s.pos[1] * s.pos[1]).sqrt(),
            events: events
                .iter()
                .map(|e| EventNote {
                    t: e.t,
                    kind: e.kind.to_string(),
                    detail: e.detail.clone(),
                })
                .collect(),
        }
    }
}

impl TestResult {
    pub fn new(row: &ProfileRow, exec: &TestExecution) -> TestResult {
        let r = &row.record;
        TestResult {
            test_id: r.test_id.clone(),
            outcome: r.label,
            max_deviation: r.max_deviation,
            max_altitude: r.max_altitude,
            duration: r.duration,
            landed: r.landed,
            mission_complete: r.mission_complete,
            freefall: r.freefall,
            hits: exec
                .hits
                .iter()
                .map(|h| HitOutcome {
                    role: h.role.clone(),
                    hit_id: h.hit_id.clone(),
                    status: h.status.label().to_string(),
                    stale_precondition: h.stale_precondition,
                    performed: h.performed,
                })
                .collect(),
        }
    }
}
