use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::space::geofence_legal;
use super::vocab::{Compass, GeofenceAction, Lifecycle, Mode, Switch, Task, Throttle, Wind, WindSpeed};
use super::ModelError;

/// One human interaction task with its mandatory mode/state precondition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hit {
    #[serde(rename = "ID")]
    pub id: String,
    #[serde(rename = "Drones")]
    pub drones: Vec<String>,
    #[serde(rename = "Task")]
    pub task: Task,
    #[serde(rename = "Mode")]
    pub precondition_mode: Mode,
    #[serde(rename = "State")]
    pub precondition_state: Lifecycle,
    #[serde(rename = "Params", default, skip_serializing_if = "BTreeMap::is_empty")]
    pub precondition_params: BTreeMap<String, String>,
    /// Seconds to wait after the precondition first holds.
    #[serde(rename = "Delay_S", default, skip_serializing_if = "is_zero")]
    pub delay_s: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleAssignment {
    #[serde(rename = "Role")]
    pub role: String,
    #[serde(rename = "HITS")]
    pub hits: Vec<Hit>,
    #[serde(rename = "Interaction_Device")]
    pub interaction_device: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindDoc {
    #[serde(rename = "SPEED", with = "display_fromstr")]
    speed: WindSpeed,
    #[serde(rename = "DIRECTION")]
    direction: Compass,
}

mod display_fromstr {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    #[serde(rename = "Wind", default, skip_serializing_if = "Option::is_none", with = "wind_doc")]
    pub wind: Option<Wind>,
}

impl Environment {
    pub fn with_wind(wind: Wind) -> Self {
        Environment {
            wind: if wind.is_calm() { None } else { Some(wind) },
        }
    }

    pub fn wind_or_calm(&self) -> Wind {
        self.wind.unwrap_or(Wind::CALM)
    }
}

mod wind_doc {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::WindDoc;
    use crate::model::Wind;

    pub fn serialize<S: Serializer>(w: &Option<Wind>, s: S) -> Result<S::Ok, S::Error> {
        w.map(|w| WindDoc {
            speed: w.speed,
            direction: w.direction,
        })
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Wind>, D::Error> {
        let doc = Option::<WindDoc>::deserialize(d)?;
        Ok(doc.and_then(|d| {
            let w = Wind {
                speed: d.speed,
                direction: d.direction,
            };
            if w.is_calm() {
                None
            } else {
                Some(w)
            }
        }))
    }
}

/// Per-drone operator configuration for one test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneConfig {
    #[serde(rename = "Geofence_Stat", default)]
    pub geofence_status: Switch,
    #[serde(rename = "Geofence_Pred", default)]
    pub geofence_prediction: Switch,
    #[serde(rename = "Geofence_Act", default)]
    pub geofence_action: GeofenceAction,
    /// Throttle position the pilot leaves the stick at after the takeoff routine.
    #[serde(rename = "Throttle", default = "neutral")]
    pub throttle: Throttle,
    #[serde(rename = "Arm_Neutral_Throttle", default, skip_serializing_if = "std::ops::Not::not")]
    pub arm_neutral_throttle: bool,
}

fn neutral() -> Throttle {
    Throttle::Neutral
}

impl Default for DroneConfig {
    fn default() -> Self {
        DroneConfig {
            geofence_status: Switch::Off,
            geofence_prediction: Switch::Off,
            geofence_action: GeofenceAction::None,
            throttle: Throttle::Neutral,
            arm_neutral_throttle: false,
        }
    }
}

impl DroneConfig {
    pub fn geofence_is_legal(&self) -> bool {
        geofence_legal(self.geofence_status, self.geofence_prediction, self.geofence_action)
    }

    /// Canonical value of a named parameter, used for precondition matching.
    pub fn param_value(&self, name: &str) -> Option<&'static str> {
        match name {
            "Geofence_Stat" => Some(self.geofence_status.as_str()),
            "Geofence_Pred" => Some(self.geofence_prediction.as_str()),
            "Geofence_Act" => Some(self.geofence_action.as_str()),
            "Throttle" => Some(self.throttle.as_str()),
            _ => None,
        }
    }

    /// Whether the named parameter currently has the given (raw) value.
    /// `None` when the name is unknown or the value does not parse.
    pub fn param_equals(&self, name: &str, raw: &str) -> Option<bool> {
        match name {
            "Geofence_Stat" => raw.parse::<Switch>().ok().map(|v| v == self.geofence_status),
            "Geofence_Pred" => raw.parse::<Switch>().ok().map(|v| v == self.geofence_prediction),
            "Geofence_Act" => raw.parse::<GeofenceAction>().ok().map(|v| v == self.geofence_action),
            "Throttle" => raw.parse::<Throttle>().ok().map(|v| v == self.throttle),
            _ => None,
        }
    }
}

/// Parses a raw parameter value into its canonical token.
pub fn canonical_param(name: &str, raw: &str) -> Option<&'static str> {
    match name {
        "Geofence_Stat" | "Geofence_Pred" => raw.parse::<Switch>().ok().map(Switch::as_str),
        "Geofence_Act" => raw.parse::<GeofenceAction>().ok().map(GeofenceAction::as_str),
        "Throttle" => raw.parse::<Throttle>().ok().map(Throttle::as_str),
        _ => None,
    }
}

/// Provenance recorded by the generators.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestMetadata {
    #[serde(rename = "Generator", default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(rename = "Seed", default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "Index", default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    /// Differs from another emitted test only in an argument its task ignores.
    #[serde(rename = "Semantic_Duplicate", default, skip_serializing_if = "std::ops::Not::not")]
    pub semantic_duplicate: bool,
    #[serde(rename = "Timing_Seed", default, skip_serializing_if = "Option::is_none")]
    pub timing_seed: Option<u64>,
}

/// One executable test: mission, environment, drone configuration and per-role HIT sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzTest {
    #[serde(rename = "Test_ID", default, skip_serializing_if = "String::is_empty")]
    pub test_id: String,
    #[serde(rename = "Mission")]
    pub mission: String,
    #[serde(rename = "Environment", default)]
    pub environment: Environment,
    #[serde(rename = "Drone_Config", default, skip_serializing_if = "BTreeMap::is_empty")]
    pub drone_config: BTreeMap<String, DroneConfig>,
    #[serde(rename = "Roles")]
    pub roles: Vec<RoleAssignment>,
    #[serde(rename = "Metadata", default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<TestMetadata>,
}

impl FuzzTest {
    /// A test with no human interaction: the nominal mission run.
    pub fn nominal(test_id: impl Into<String>, mission: impl Into<String>, wind: Wind) -> Self {
        FuzzTest {
            test_id: test_id.into(),
            mission: mission.into(),
            environment: Environment::with_wind(wind),
            drone_config: BTreeMap::new(),
            roles: Vec::new(),
            metadata: None,
        }
    }

    pub fn hit_count(&self) -> usize {
        self.roles.iter().map(|r| r.hits.len()).sum()
    }

    pub fn hits(&self) -> impl Iterator<Item = (&RoleAssignment, &Hit)> {
        self.roles.iter().flat_map(|r| r.hits.iter().map(move |h| (r, h)))
    }

    /// The drone flown in this test: the first HIT target, else the first configured drone.
    pub fn primary_drone(&self) -> Option<&str> {
        self.hits()
            .find_map(|(_, h)| h.drones.first())
            .map(String::as_str)
            .or_else(|| self.drone_config.keys().next().map(String::as_str))
    }

    /// Configuration of the primary drone, or the default configuration.
    pub fn primary_config(&self) -> DroneConfig {
        self.primary_drone()
            .and_then(|d| self.drone_config.get(d))
            .copied()
            .unwrap_or_default()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("test serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("test serializes")
    }

    pub(crate) fn check_constraints(&self) -> Result<(), ModelError> {
        for (drone, cfg) in &self.drone_config {
            if !cfg.geofence_is_legal() {
                return Err(ModelError::Constraint(format!(
                    "drone {drone}: geofence prediction or action requires Geofence_Stat=On (got stat={}, pred={}, act={})",
                    cfg.geofence_status, cfg.geofence_prediction, cfg.geofence_action
                )));
            }
        }
        for (role, hit) in self.hits() {
            if !(hit.delay_s >= 0.0) || !hit.delay_s.is_finite() {
                return Err(ModelError::Schema(format!(
                    "role {} HIT {}: Delay_S must be a non-negative number",
                    role.role, hit.id
                )));
            }
        }
        Ok(())
    }
}

/// Parses a test document (JSON with capitalized field names such as `Mission`, `Roles` and `HITS`).
pub fn parse_test(document: &str) -> Result<FuzzTest, ModelError> {
    let test: FuzzTest = serde_json::from_str(document).map_err(|e| ModelError::Schema(e.to_string()))?;
    test.check_constraints()?;
    Ok(test)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TWO_ROLE_TEST: &str = include_str!("../../fixtures/two_role_test.json");

    #[test]
    fn two_role_test_parses() {
        let t = parse_test(TWO_ROLE_TEST).unwrap();
        assert_eq!(t.mission, "BASIC-WAYPOINTS");
        let wind = t.environment.wind.unwrap();
        assert_eq!(wind.speed, WindSpeed::Knots(20));
        assert_eq!(wind.direction, Compass::North);
        assert_eq!(t.roles.len(), 2);
        let rpic = &t.roles[0];
        assert_eq!((rpic.role.as_str(), rpic.interaction_device.as_str()), ("RPIC", "RC TRANSMITTER"));
        assert_eq!(rpic.hits.len(), 2);
        assert_eq!(rpic.hits[0].task, Task::MoveThrottle(Throttle::MaxHigh));
        assert_eq!(rpic.hits[0].precondition_state, Lifecycle::Takeoff);
        assert_eq!(rpic.hits[1].task, Task::ChangeMode(Mode::Stabilized));
        let mc = &t.roles[1];
        assert_eq!((mc.role.as_str(), mc.interaction_device.as_str()), ("MC", "GUI"));
        assert_eq!(mc.hits.len(), 1);
        assert_eq!(mc.hits[0].task, Task::PressRtl);
    }

    #[test]
    fn empty_hit_lists_are_a_valid_nominal_test() {
        let mut doc: serde_json::Value = serde_json::from_str(TWO_ROLE_TEST).unwrap();
        for role in doc["Roles"].as_array_mut().unwrap() {
            role["HITS"] = serde_json::json!([]);
        }
        let t = parse_test(&doc.to_string()).unwrap();
        assert_eq!(t.hit_count(), 0);
    }

    #[test]
    fn land_action_with_fence_off_violates_the_constraint() {
        let mut doc: serde_json::Value = serde_json::from_str(TWO_ROLE_TEST).unwrap();
        doc["Drone_Config"] = serde_json::json!({
            "GREEN": {"Geofence_Stat": "Off", "Geofence_Pred": "Off", "Geofence_Act": "LAND"}
        });
        assert!(matches!(parse_test(&doc.to_string()), Err(ModelError::Constraint(_))));
    }

    #[test]
    fn parse_test_constraint_agrees_with_enumerated_legal_triples() {
        // All 24 raw triples; exactly the 13 legal ones parse.
        let mut accepted = 0;
        for s in Switch::ALL {
            for p in Switch::ALL {
                for a in GeofenceAction::ALL {
                    let mut doc: serde_json::Value = serde_json::from_str(TWO_ROLE_TEST).unwrap();
                    doc["Drone_Config"] = serde_json::json!({
                        "GREEN": {"Geofence_Stat": s.as_str(), "Geofence_Pred": p.as_str(), "Geofence_Act": a.as_str()}
                    });
                    let parsed = parse_test(&doc.to_string());
                    let expect_ok = !(p.is_on() || *a != GeofenceAction::None) || s.is_on();
                    assert_eq!(parsed.is_ok(), expect_ok, "{s} {p} {a}");
                    accepted += parsed.is_ok() as usize;
                }
            }
        }
        assert_eq!(accepted, 13);
    }

    #[test]
    fn unknown_fields_fail_loudly() {
        let mut doc: serde_json::Value = serde_json::from_str(TWO_ROLE_TEST).unwrap();
        doc["Roles"][0]["HITS"][0]["Priority"] = serde_json::json!(1);
        assert!(matches!(parse_test(&doc.to_string()), Err(ModelError::Schema(_))));
    }

    #[test]
    fn negative_delay_is_rejected() {
        let mut doc: serde_json::Value = serde_json::from_str(TWO_ROLE_TEST).unwrap();
        doc["Roles"][0]["HITS"][0]["Delay_S"] = serde_json::json!(-1.0);
        assert!(parse_test(&doc.to_string()).is_err());
    }
}
