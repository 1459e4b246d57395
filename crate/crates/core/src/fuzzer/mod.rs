//! Test generation: scenario enumeration, seeded random sampling and timing fuzz.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    DroneConfig, Environment, FuzzSpace, FuzzTest, GeofenceAction, Hit, Lifecycle, Mode, RoleAssignment, Switch,
    Task, TaskKind, TestMetadata, Throttle, Wind,
};

mod corpus;

pub use corpus::{read_corpus, space_digest, write_corpus, write_corpus_header, CorpusError, CorpusHeader};

pub const RANDOM_GENERATOR: &str = "chacha8";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FuzzError {
    #[error("constraint error: {0}")]
    Constraint(String),
}

/// Pins and per-dimension subsets restricting the generated space. `None` means the whole declared set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConstraint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mission: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drone: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub device: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<Mode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<Lifecycle>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub throttle: Option<Vec<Throttle>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geofence_status: Option<Vec<Switch>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geofence_prediction: Option<Vec<Switch>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geofence_action: Option<Vec<GeofenceAction>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wind: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tasks: Option<Vec<TaskKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_targets: Option<Vec<Mode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub throttle_targets: Option<Vec<Throttle>>,
    /// Width of the task-argument dimension. Defaults to the longest argument list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argument_slots: Option<usize>,
    /// Drop combinations that differ from another only in an argument the task ignores.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub skip_semantic_duplicates: bool,
}

impl ScenarioConstraint {
    pub fn parse(document: &str) -> Result<ScenarioConstraint, FuzzError> {
        serde_json::from_str(document).map_err(|e| FuzzError::Constraint(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("constraint serializes")
    }

    /// The ~700-test L1 sub-grid shipped as a fixture.
    pub fn l1_subgrid() -> ScenarioConstraint {
        ScenarioConstraint::parse(include_str!("../../fixtures/subgrid_l1.json")).expect("fixture parses")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TaskVariant {
    task: Task,
    argument: usize,
    semantic_duplicate: bool,
}

/// Resolved dimensions of a constrained space.
#[derive(Debug, Clone)]
pub struct Scenario {
    mission: String,
    role: String,
    drone: String,
    device: String,
    modes: Vec<Mode>,
    states: Vec<Lifecycle>,
    throttle: Vec<Throttle>,
    geofences: Vec<(Switch, Switch, GeofenceAction)>,
    winds: Vec<Wind>,
    tasks: Vec<TaskVariant>,
}

fn subset<T: Copy + PartialEq + std::fmt::Display>(
    name: &str,
    declared: &[T],
    requested: &Option<Vec<T>>,
) -> Result<Vec<T>, FuzzError> {
    match requested {
        None => Ok(declared.to_vec()),
        Some(v) if v.is_empty() => Err(FuzzError::Constraint(format!("{name} subset is empty"))),
        Some(v) => {
            let mut out: Vec<T> = Vec::with_capacity(v.len());
            for x in v {
                if !declared.contains(x) {
                    return Err(FuzzError::Constraint(format!("{name} value {x} is not in the space")));
                }
                if !out.contains(x) {
                    out.push(*x);
                }
            }
            // Keep declaration order so enumeration is a pure function of the space.
            Ok(declared.iter().copied().filter(|d| out.contains(d)).collect())
        }
    }
}

fn pick(name: &str, declared: &[String], requested: &Option<String>, default: Option<&str>) -> Result<String, FuzzError> {
    match requested {
        Some(v) if declared.contains(v) => Ok(v.clone()),
        Some(v) => Err(FuzzError::Constraint(format!("{name} {v} is not in the space"))),
        None => default
            .filter(|d| declared.iter().any(|x| x == d))
            .or_else(|| declared.first().map(String::as_str))
            .map(str::to_string)
            .ok_or_else(|| FuzzError::Constraint(format!("space declares no {name}"))),
    }
}

impl Scenario {
    pub fn new(space: &FuzzSpace, c: &ScenarioConstraint) -> Result<Scenario, FuzzError> {
        let missions: Vec<String> = space.missions.iter().map(|m| m.id.clone()).collect();
        let drones: Vec<String> = space.drones.iter().map(|d| d.id.clone()).collect();
        let mission = pick("mission", &missions, &c.mission, None)?;
        let role = pick("role", &space.roles, &c.role, Some("RPIC"))?;
        let drone = pick("drone", &drones, &c.drone, Some("BLUE"))?;
        let device = pick("interaction device", &space.interaction_devices, &c.device, Some("RC TRANSMITTER"))?;

        let modes = subset("mode", &space.modes, &c.modes)?;
        let states = subset("state", &space.states, &c.states)?;
        let throttle = subset("throttle", &space.parameters.throttle, &c.throttle)?;
        let gs = subset("Geofence_Stat", &space.parameters.geofence_status, &c.geofence_status)?;
        let gp = subset("Geofence_Pred", &space.parameters.geofence_prediction, &c.geofence_prediction)?;
        let ga = subset("Geofence_Act", &space.parameters.geofence_action, &c.geofence_action)?;
        let mut geofences = Vec::new();
        for &s in &gs {
            for &p in &gp {
                for &a in &ga {
                    if crate::model::geofence_legal(s, p, a) {
                        geofences.push((s, p, a));
                    }
                }
            }
        }
        if geofences.is_empty() {
            return Err(FuzzError::Constraint("no legal geofence configuration in the constraint".into()));
        }
        let winds = match &c.wind {
            None => space.environment.wind.clone(),
            Some(v) if v.is_empty() => return Err(FuzzError::Constraint("wind subset is empty".into())),
            Some(v) => {
                let mut out = Vec::new();
                for raw in v {
                    let w: Wind = raw.parse().map_err(|e| FuzzError::Constraint(format!("{e}")))?;
                    if !w.is_calm() && !space.environment.wind.contains(&w) {
                        return Err(FuzzError::Constraint(format!("wind {raw} is not in the space")));
                    }
                    if !out.contains(&w) {
                        out.push(w);
                    }
                }
                out
            }
        };

        let kinds: Vec<TaskKind> = space.tasks.iter().map(|t| t.kind).collect();
        let kinds = subset("task", &kinds, &c.tasks)?;
        let mut per_kind: Vec<(TaskKind, Vec<Task>)> = Vec::new();
        for kind in &kinds {
            let template = space.task_template(*kind).expect("kind taken from the space");
            let all: Vec<Task> = (0..template.argument_count()).filter_map(|i| template.task(i)).collect();
            let args: Vec<Task> = match kind {
                TaskKind::ChangeMode if c.mode_targets.is_some() => {
                    let allowed: Vec<Mode> = all.iter().filter_map(|t| t.induced_mode()).collect();
                    subset("mode target", &allowed, &c.mode_targets)?
                        .into_iter()
                        .map(Task::ChangeMode)
                        .collect()
                }
                TaskKind::MoveThrottle if c.throttle_targets.is_some() => {
                    let allowed: Vec<Throttle> = all
                        .iter()
                        .filter_map(|t| match t {
                            Task::MoveThrottle(p) => Some(*p),
                            _ => None,
                        })
                        .collect();
                    subset("throttle target", &allowed, &c.throttle_targets)?
                        .into_iter()
                        .map(Task::MoveThrottle)
                        .collect()
                }
                _ => all,
            };
            per_kind.push((*kind, args));
        }
        let slots = match c.argument_slots {
            Some(0) => return Err(FuzzError::Constraint("argument_slots must be at least 1".into())),
            Some(n) => n,
            None => per_kind.iter().map(|(_, a)| a.len()).max().unwrap_or(0).max(1),
        };
        let mut tasks = Vec::new();
        for (kind, args) in &per_kind {
            let template = space.task_template(*kind).expect("kind taken from the space");
            for argument in 0..slots {
                let variant = if args.is_empty() {
                    TaskVariant {
                        task: template.task(0).expect("argument-free task"),
                        argument,
                        semantic_duplicate: argument > 0,
                    }
                } else if argument < args.len() {
                    TaskVariant {
                        task: args[argument],
                        argument,
                        semantic_duplicate: false,
                    }
                } else {
                    continue;
                };
                if c.skip_semantic_duplicates && variant.semantic_duplicate {
                    continue;
                }
                tasks.push(variant);
            }
        }
        if tasks.is_empty() {
            return Err(FuzzError::Constraint("no task variants remain".into()));
        }
        Ok(Scenario {
            mission,
            role,
            drone,
            device,
            modes,
            states,
            throttle,
            geofences,
            winds,
            tasks,
        })
    }

    fn radices(&self) -> [usize; 6] {
        [
            self.modes.len(),
            self.states.len(),
            self.throttle.len(),
            self.geofences.len(),
            self.winds.len(),
            self.tasks.len(),
        ]
    }

    /// Number of legal tests.
    pub fn count(&self) -> u64 {
        self.radices().iter().map(|&r| r as u64).product()
    }

    /// Number of distinct legal geofence configurations.
    pub fn geofence_count(&self) -> usize {
        self.geofences.len()
    }

    /// The `index`-th test in lexicographic order (mode, state, throttle, geofence, wind, task, argument).
    pub fn test_at(&self, index: u64) -> Option<FuzzTest> {
        if index >= self.count() {
            return None;
        }
        let mut rest = index;
        let mut digits = [0usize; 6];
        for (i, &r) in self.radices().iter().enumerate().rev() {
            digits[i] = (rest % r as u64) as usize;
            rest /= r as u64;
        }
        let mode = self.modes[digits[0]];
        let state = self.states[digits[1]];
        let throttle = self.throttle[digits[2]];
        let (gs, gp, ga) = self.geofences[digits[3]];
        let wind = self.winds[digits[4]];
        let variant = self.tasks[digits[5]];

        let mut drone_config = BTreeMap::new();
        drone_config.insert(
            self.drone.clone(),
            DroneConfig {
                geofence_status: gs,
                geofence_prediction: gp,
                geofence_action: ga,
                throttle,
                arm_neutral_throttle: false,
            },
        );
        Some(FuzzTest {
            test_id: format!("S{index:06}"),
            mission: self.mission.clone(),
            environment: Environment::with_wind(wind),
            drone_config,
            roles: vec![RoleAssignment {
                role: self.role.clone(),
                interaction_device: self.device.clone(),
                hits: vec![Hit {
                    id: "1".into(),
                    drones: vec![self.drone.clone()],
                    task: variant.task,
                    precondition_mode: mode,
                    precondition_state: state,
                    precondition_params: BTreeMap::new(),
                    delay_s: 0.0,
                }],
            }],
            metadata: Some(TestMetadata {
                generator: Some("scenario".into()),
                index: Some(index),
                semantic_duplicate: variant.semantic_duplicate,
                ..Default::default()
            }),
        })
    }

    pub fn iter(&self) -> ScenarioIter<'_> {
        ScenarioIter {
            scenario: self,
            next: 0,
            end: self.count(),
        }
    }

    /// Tests with indices in `range`, for splitting work across consumers.
    pub fn range(&self, range: std::ops::Range<u64>) -> ScenarioIter<'_> {
        ScenarioIter {
            scenario: self,
            next: range.start.min(self.count()),
            end: range.end.min(self.count()),
        }
    }
}

pub struct ScenarioIter<'a> {
    scenario: &'a Scenario,
    next: u64,
    end: u64,
}

impl Iterator for ScenarioIter<'_> {
    type Item = FuzzTest;

    fn next(&mut self) -> Option<FuzzTest> {
        if self.next >= self.end {
            return None;
        }
        let t = self.scenario.test_at(self.next);
        self.next += 1;
        t
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for ScenarioIter<'_> {}

/// Deterministic lexicographic enumeration of every legal test in the constrained space.
pub fn enumerate_scenario(space: &FuzzSpace, constraint: &ScenarioConstraint) -> Result<Scenario, FuzzError> {
    Scenario::new(space, constraint)
}

/// `n` tests drawn uniformly (with replacement) from the constrained legal space.
pub fn sample_random(
    space: &FuzzSpace,
    constraint: &ScenarioConstraint,
    seed: u64,
    n: usize,
) -> Result<Vec<FuzzTest>, FuzzError> {
    let scenario = Scenario::new(space, constraint)?;
    let total = scenario.count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| {
            let idx = rng.random_range(0..total);
            let mut t = scenario.test_at(idx).expect("index in range");
            t.test_id = format!("R{seed}-{i:06}");
            let meta = t.metadata.get_or_insert_with(TestMetadata::default);
            meta.generator = Some(RANDOM_GENERATOR.into());
            meta.seed = Some(seed);
            t
        })
        .collect())
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Sets every HIT's delay to a seeded uniform draw in `[0, max_delay_s]`.
pub fn fuzz_timing(test: &FuzzTest, seed: u64, max_delay_s: f64) -> FuzzTest {
    let mut out = test.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&test.test_id));
    for role in &mut out.roles {
        for hit in &mut role.hits {
            hit.delay_s = if max_delay_s > 0.0 {
                rng.random_range(0.0..=max_delay_s)
            } else {
                0.0
            };
        }
    }
    out.metadata.get_or_insert_with(TestMetadata::default).timing_seed = Some(seed);
    out
}
