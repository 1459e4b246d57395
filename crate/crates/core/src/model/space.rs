use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::vocab::{GeofenceAction, Lifecycle, Mode, Switch, Task, TaskKind, Throttle, Wind};
use super::ModelError;

/// The declared human-interaction feature space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzSpace {
    #[serde(rename = "Roles")]
    pub roles: Vec<String>,
    #[serde(rename = "Interaction_Devices")]
    pub interaction_devices: Vec<String>,
    #[serde(rename = "Drones")]
    pub drones: Vec<DroneSpec>,
    #[serde(rename = "Parameters")]
    pub parameters: ParameterSpace,
    #[serde(rename = "Environment")]
    pub environment: EnvironmentSpace,
    #[serde(rename = "Missions")]
    pub missions: Vec<Mission>,
    #[serde(rename = "Modes")]
    pub modes: Vec<Mode>,
    #[serde(rename = "States")]
    pub states: Vec<Lifecycle>,
    #[serde(rename = "Tasks")]
    pub tasks: Vec<TaskTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneSpec {
    #[serde(rename = "ID")]
    pub id: String,
    #[serde(rename = "RTL_Alt", default, skip_serializing_if = "Option::is_none")]
    pub rtl_altitude: Option<f64>,
    #[serde(rename = "Arm_Neutral_Throttle", default, skip_serializing_if = "std::ops::Not::not")]
    pub arm_neutral_throttle: bool,
}

/// Operator-facing parameters and their allowed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpace {
    #[serde(rename = "Geofence_Stat")]
    pub geofence_status: Vec<Switch>,
    #[serde(rename = "Geofence_Pred")]
    pub geofence_prediction: Vec<Switch>,
    #[serde(rename = "Geofence_Act")]
    pub geofence_action: Vec<GeofenceAction>,
    #[serde(rename = "Throttle")]
    pub throttle: Vec<Throttle>,
}

impl ParameterSpace {
    pub const NAMES: [&'static str; 4] = ["Geofence_Stat", "Geofence_Pred", "Geofence_Act", "Throttle"];

    /// Canonical allowed values for a named parameter.
    pub fn allowed(&self, name: &str) -> Option<Vec<String>> {
        let render = |v: Vec<&'static str>| Some(v.into_iter().map(String::from).collect());
        match name {
            "Geofence_Stat" => render(self.geofence_status.iter().map(|v| v.as_str()).collect()),
            "Geofence_Pred" => render(self.geofence_prediction.iter().map(|v| v.as_str()).collect()),
            "Geofence_Act" => render(self.geofence_action.iter().map(|v| v.as_str()).collect()),
            "Throttle" => render(self.throttle.iter().map(|v| v.as_str()).collect()),
            _ => None,
        }
    }

    /// All legal (status, prediction, action) triples in declaration order.
    pub fn legal_geofences(&self) -> Vec<(Switch, Switch, GeofenceAction)> {
        let mut out = Vec::new();
        for &s in &self.geofence_status {
            for &p in &self.geofence_prediction {
                for &a in &self.geofence_action {
                    if geofence_legal(s, p, a) {
                        out.push((s, p, a));
                    }
                }
            }
        }
        out
    }
}

/// Prediction or a breach action both require the fence to be enabled.
pub fn geofence_legal(status: Switch, prediction: Switch, action: GeofenceAction) -> bool {
    let needs_fence = prediction.is_on() || action != GeofenceAction::None;
    !needs_fence || status.is_on()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpace {
    #[serde(rename = "Wind", with = "wind_labels")]
    pub wind: Vec<Wind>,
}

mod wind_labels {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::model::Wind;

    pub fn serialize<S: Serializer>(winds: &[Wind], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(winds.iter().map(|w| w.label()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Wind>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|r| r.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "Dwell_S", default)]
    pub dwell_s: f64,
}

/// Convex fence polygon in the local x-y plane plus an altitude ceiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FenceBoundary {
    #[serde(rename = "Polygon")]
    pub polygon: Vec<[f64; 2]>,
    #[serde(rename = "Max_Alt")]
    pub max_altitude: f64,
}

impl FenceBoundary {
    /// Axis-aligned square centred on home.
    pub fn square(half_width: f64, max_altitude: f64) -> Self {
        let h = half_width;
        FenceBoundary {
            polygon: vec![[-h, -h], [h, -h], [h, h], [-h, h]],
            max_altitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mission {
    #[serde(rename = "ID")]
    pub id: String,
    #[serde(rename = "Takeoff_Alt")]
    pub takeoff_altitude: f64,
    #[serde(rename = "Waypoints")]
    pub waypoints: Vec<Waypoint>,
    #[serde(rename = "RTL_Alt", default = "default_rtl_altitude")]
    pub rtl_altitude: f64,
    #[serde(rename = "Geofence")]
    pub geofence: FenceBoundary,
}

fn default_rtl_altitude() -> f64 {
    30.0
}

impl Mission {
    pub fn has_hover(&self) -> bool {
        self.waypoints.iter().any(|w| w.dwell_s > 0.0)
    }

    fn check(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::Schema(format!("mission {}: {what}", self.id)));
        if !(self.takeoff_altitude > 0.0) {
            return bad("takeoff altitude must be positive");
        }
        if self.waypoints.is_empty() {
            return bad("at least one waypoint is required");
        }
        if self.waypoints.iter().any(|w| w.dwell_s < 0.0 || !w.dwell_s.is_finite()) {
            return bad("waypoint dwell must be non-negative");
        }
        if !(self.rtl_altitude > 0.0) {
            return bad("RTL altitude must be positive");
        }
        if !is_convex_ccw(&self.geofence.polygon) {
            return bad("geofence polygon must be convex with counter-clockwise vertices");
        }
        if !(self.geofence.max_altitude > 0.0) {
            return bad("geofence ceiling must be positive");
        }
        Ok(())
    }
}

fn is_convex_ccw(poly: &[[f64; 2]]) -> bool {
    if poly.len() < 3 {
        return false;
    }
    (0..poly.len()).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let c = poly[(i + 2) % poly.len()];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        cross > 0.0
    })
}

/// Allowed argument values of a task template.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskArguments {
    None,
    Modes(Vec<Mode>),
    Throttle(Vec<Throttle>),
}

/// A HIT template: task kind, its argument domain and the preconditions it may carry.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskTemplate {
    pub kind: TaskKind,
    pub arguments: TaskArguments,
    pub modes: Vec<Mode>,
    pub states: Vec<Lifecycle>,
}

impl TaskTemplate {
    pub fn argument_count(&self) -> usize {
        match &self.arguments {
            TaskArguments::None => 0,
            TaskArguments::Modes(v) => v.len(),
            TaskArguments::Throttle(v) => v.len(),
        }
    }

    /// Concrete task for an argument index. Argument-free tasks accept any index.
    pub fn task(&self, index: usize) -> Option<Task> {
        match &self.arguments {
            TaskArguments::None => Some(match self.kind {
                TaskKind::KillMotors => Task::KillMotors,
                TaskKind::PressRtl => Task::PressRtl,
                TaskKind::PressLand => Task::PressLand,
                TaskKind::ChangeMode | TaskKind::MoveThrottle => return None,
            }),
            TaskArguments::Modes(v) => v.get(index).map(|&m| Task::ChangeMode(m)),
            TaskArguments::Throttle(v) => v.get(index).map(|&t| Task::MoveThrottle(t)),
        }
    }

    pub fn admits(&self, task: Task) -> bool {
        if task.kind() != self.kind {
            return false;
        }
        match (&self.arguments, task) {
            (TaskArguments::None, _) => true,
            (TaskArguments::Modes(v), Task::ChangeMode(m)) => v.contains(&m),
            (TaskArguments::Throttle(v), Task::MoveThrottle(t)) => v.contains(&t),
            _ => false,
        }
    }
}

impl Serialize for TaskTemplate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let args = match &self.arguments {
            TaskArguments::None => None,
            TaskArguments::Modes(v) => Some(v.iter().map(|m| m.as_str().to_string()).collect()),
            TaskArguments::Throttle(v) => Some(v.iter().map(|t| t.as_str().to_string()).collect()),
        };
        RawTaskTemplate {
            kind: self.kind.as_str().to_string(),
            arguments: args,
            modes: Some(self.modes.iter().map(|m| m.as_str().to_string()).collect()),
            states: Some(self.states.iter().map(|m| m.as_str().to_string()).collect()),
        }
        .serialize(s)
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTaskTemplate {
    #[serde(rename = "Kind")]
    kind: String,
    #[serde(rename = "Arguments", default, skip_serializing_if = "Option::is_none")]
    arguments: Option<Vec<String>>,
    #[serde(rename = "Modes", default, skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<String>>,
    #[serde(rename = "States", default, skip_serializing_if = "Option::is_none")]
    states: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    #[serde(rename = "Roles")]
    roles: Vec<String>,
    #[serde(rename = "Interaction_Devices")]
    interaction_devices: Vec<String>,
    #[serde(rename = "Drones")]
    drones: Vec<DroneSpec>,
    #[serde(rename = "Parameters")]
    parameters: ParameterSpace,
    #[serde(rename = "Environment")]
    environment: EnvironmentSpace,
    #[serde(rename = "Missions")]
    missions: Vec<Mission>,
    #[serde(rename = "Modes")]
    modes: Vec<Mode>,
    #[serde(rename = "States")]
    states: Vec<Lifecycle>,
    #[serde(rename = "Tasks")]
    tasks: Vec<RawTaskTemplate>,
}

fn check_set<T: Ord + std::fmt::Debug>(name: &str, items: &[T]) -> Result<(), ModelError> {
    if items.is_empty() {
        return Err(ModelError::Consistency(format!("{name} must not be empty")));
    }
    let mut seen = BTreeSet::new();
    for item in items {
        if !seen.insert(item) {
            return Err(ModelError::Consistency(format!("{name} lists {item:?} more than once")));
        }
    }
    Ok(())
}

/// Resolves a reference against a declared list; undeclared or unknown names are consistency errors.
fn resolve<T: std::str::FromStr + PartialEq + Copy>(
    declared: &[T],
    raw: &str,
    what: &str,
) -> Result<T, ModelError> {
    match raw.parse::<T>() {
        Ok(v) if declared.contains(&v) => Ok(v),
        _ => Err(ModelError::Consistency(format!("{what} `{raw}` is not declared in the space"))),
    }
}

/// Parses and validates a fuzz-space document (JSON).
pub fn parse_fuzz_space(document: &str) -> Result<FuzzSpace, ModelError> {
    let raw: RawSpace = serde_json::from_str(document).map_err(|e| ModelError::Schema(e.to_string()))?;

    check_set("Roles", &raw.roles)?;
    check_set("Interaction_Devices", &raw.interaction_devices)?;
    let drone_ids: Vec<&String> = raw.drones.iter().map(|d| &d.id).collect();
    check_set("Drones", &drone_ids)?;
    check_set("Geofence_Stat", &raw.parameters.geofence_status)?;
    check_set("Geofence_Pred", &raw.parameters.geofence_prediction)?;
    check_set("Geofence_Act", &raw.parameters.geofence_action)?;
    check_set("Throttle", &raw.parameters.throttle)?;
    let wind_labels: Vec<String> = raw.environment.wind.iter().map(|w| w.label()).collect();
    check_set("Environment.Wind", &wind_labels)?;
    let mission_ids: Vec<&String> = raw.missions.iter().map(|m| &m.id).collect();
    check_set("Missions", &mission_ids)?;
    check_set("Modes", &raw.modes)?;
    check_set("States", &raw.states)?;
    let task_kinds: Vec<String> = raw.tasks.iter().map(|t| t.kind.to_uppercase()).collect();
    check_set("Tasks", &task_kinds)?;

    for d in &raw.drones {
        if let Some(alt) = d.rtl_altitude {
            if !(alt > 0.0) {
                return Err(ModelError::Schema(format!("drone {}: RTL altitude must be positive", d.id)));
            }
        }
    }
    for m in &raw.missions {
        m.check()?;
    }
    if raw.parameters.legal_geofences().is_empty() {
        return Err(ModelError::Consistency("no legal geofence configuration".into()));
    }

    let mut tasks = Vec::with_capacity(raw.tasks.len());
    for t in raw.tasks {
        let kind: TaskKind = t.kind.parse().map_err(|e| ModelError::Schema(format!("{e}")))?;
        let args = t.arguments.unwrap_or_default();
        let arguments = match kind {
            TaskKind::ChangeMode | TaskKind::MoveThrottle if args.is_empty() => {
                return Err(ModelError::Consistency(format!("task {kind} needs a non-empty argument list")));
            }
            TaskKind::ChangeMode => TaskArguments::Modes(
                args.iter()
                    .map(|a| resolve(&raw.modes, a, "mode"))
                    .collect::<Result<_, _>>()?,
            ),
            TaskKind::MoveThrottle => TaskArguments::Throttle(
                args.iter()
                    .map(|a| resolve(&raw.parameters.throttle, a, "throttle position"))
                    .collect::<Result<_, _>>()?,
            ),
            _ if !args.is_empty() => {
                return Err(ModelError::Consistency(format!("task {kind} takes no arguments")));
            }
            _ => TaskArguments::None,
        };
        if let TaskArguments::Modes(v) = &arguments {
            check_set(&format!("{kind} arguments"), v)?;
        }
        if let TaskArguments::Throttle(v) = &arguments {
            check_set(&format!("{kind} arguments"), v)?;
        }
        let modes = match t.modes {
            None => raw.modes.clone(),
            Some(list) => list
                .iter()
                .map(|m| resolve(&raw.modes, m, "precondition mode"))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let states = match t.states {
            None => raw.states.clone(),
            Some(list) => list
                .iter()
                .map(|s| resolve(&raw.states, s, "precondition state"))
                .collect::<Result<Vec<_>, _>>()?,
        };
        check_set(&format!("{kind} precondition modes"), &modes)?;
        check_set(&format!("{kind} precondition states"), &states)?;
        tasks.push(TaskTemplate {
            kind,
            arguments,
            modes,
            states,
        });
    }

    Ok(FuzzSpace {
        roles: raw.roles,
        interaction_devices: raw.interaction_devices,
        drones: raw.drones,
        parameters: raw.parameters,
        environment: raw.environment,
        missions: raw.missions,
        modes: raw.modes,
        states: raw.states,
        tasks,
    })
}

const DEFAULT_SPACE: &str = include_str!("../../fixtures/default_space.json");

impl FuzzSpace {
    /// The shipped experiment space: 7 modes, 6 states, 7 throttle positions,
    /// geofence status/prediction/action, two wind classes and three tasks.
    pub fn default_space() -> FuzzSpace {
        parse_fuzz_space(DEFAULT_SPACE).expect("shipped space fixture is valid")
    }

    pub fn default_document() -> &'static str {
        DEFAULT_SPACE
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }

    /// Hex SHA-256 over the canonical serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("space serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn mission(&self, id: &str) -> Option<&Mission> {
        self.missions.iter().find(|m| m.id == id)
    }

    pub fn drone(&self, id: &str) -> Option<&DroneSpec> {
        self.drones.iter().find(|d| d.id == id)
    }

    pub fn task_template(&self, kind: TaskKind) -> Option<&TaskTemplate> {
        self.tasks.iter().find(|t| t.kind == kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_doc() -> serde_json::Value {
        serde_json::from_str(DEFAULT_SPACE).unwrap()
    }

    #[test]
    fn default_fixture_has_experiment_dimensions() {
        let space = FuzzSpace::default_space();
        assert_eq!(space.modes.len(), 7);
        assert_eq!(space.states.len(), 6);
        assert_eq!(space.parameters.throttle.len(), 7);
        assert_eq!(space.tasks.len(), 3);
        assert_eq!(space.drones.len(), 3);
        assert_eq!(space.roles.len(), 3);
        assert_eq!(space.environment.wind.len(), 2);
        assert_eq!(space.parameters.legal_geofences().len(), 13);
    }

    #[test]
    fn empty_modes_is_a_consistency_error() {
        let mut doc = default_doc();
        doc["Modes"] = serde_json::json!([]);
        let err = parse_fuzz_space(&doc.to_string()).unwrap_err();
        assert!(matches!(err, ModelError::Consistency(_)), "{err}");
    }

    #[test]
    fn undeclared_template_state_is_a_consistency_error() {
        let mut doc = default_doc();
        doc["Tasks"][0]["States"] = serde_json::json!(["FLY", "CRUISE"]);
        let err = parse_fuzz_space(&doc.to_string()).unwrap_err();
        assert!(matches!(err, ModelError::Consistency(ref m) if m.contains("CRUISE")), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut doc = default_doc();
        doc["Battery"] = serde_json::json!(["LOW"]);
        assert!(matches!(parse_fuzz_space(&doc.to_string()), Err(ModelError::Schema(_))));
    }

    #[test]
    fn duplicate_identifiers_are_rejected() {
        let mut doc = default_doc();
        doc["Roles"] = serde_json::json!(["RPIC", "RPIC"]);
        assert!(matches!(parse_fuzz_space(&doc.to_string()), Err(ModelError::Consistency(_))));
    }

    #[test]
    fn move_throttle_without_arguments_is_rejected() {
        let mut doc = default_doc();
        doc["Tasks"][1]["Arguments"] = serde_json::json!([]);
        assert!(matches!(parse_fuzz_space(&doc.to_string()), Err(ModelError::Consistency(_))));
    }

    #[test]
    fn serialized_space_parses_to_the_same_value() {
        let space = FuzzSpace::default_space();
        let again = parse_fuzz_space(&space.to_json()).unwrap();
        assert_eq!(space, again);
        assert_eq!(space.hash(), again.hash());
    }

    #[test]
    fn exactly_thirteen_of_twenty_four_geofence_triples_are_legal() {
        let mut legal = 0;
        for s in Switch::ALL {
            for p in Switch::ALL {
                for a in GeofenceAction::ALL {
                    legal += geofence_legal(*s, *p, *a) as usize;
                }
            }
        }
        assert_eq!(Switch::ALL.len() * Switch::ALL.len() * GeofenceAction::ALL.len(), 24);
        assert_eq!(legal, 13);
    }
}
