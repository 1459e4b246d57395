//! Static legality and precondition-reachability checks for a test.
//!
//! Reachability is an over-approximation over abstract (mode, lifecycle)
//! pairs: the nominal mission trajectory, geofence failsafe mode changes, and
//! the mode changes induced by HITs that can fire earlier in the same test.
//! Any pair the simulator can visit at a decision point is in the abstract set.

use std::collections::BTreeSet;

use super::space::{FuzzSpace, Mission};
use super::test_doc::{canonical_param, DroneConfig, FuzzTest, Hit};
use super::vocab::{GeofenceAction, Lifecycle, Mode};

pub type ModeState = (Mode, Lifecycle);

#[derive(Debug, Clone, PartialEq)]
pub struct HitReachability {
    pub role: String,
    pub hit_id: String,
    pub precondition: ModeState,
    pub reachable: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidityReport {
    /// References to values that are not members of the space.
    pub issues: Vec<String>,
    pub hits: Vec<HitReachability>,
}

impl ValidityReport {
    pub fn is_legal(&self) -> bool {
        self.issues.is_empty()
    }

    /// Some HIT can never have its precondition satisfied.
    pub fn potentially_invalid(&self) -> bool {
        self.hits.iter().any(|h| !h.reachable)
    }

    pub fn reachable(&self, role: &str, hit_id: &str) -> Option<bool> {
        self.hits
            .iter()
            .find(|h| h.role == role && h.hit_id == hit_id)
            .map(|h| h.reachable)
    }
}

fn airborne(s: Lifecycle) -> bool {
    matches!(s, Lifecycle::Takeoff | Lifecycle::Fly | Lifecycle::Hover | Lifecycle::Land)
}

/// Pairs reachable after the vehicle is put into `mode` while in lifecycle `state`.
pub fn mode_closure(mode: Mode, state: Lifecycle, mission_has_hover: bool) -> BTreeSet<ModeState> {
    let mut out = BTreeSet::new();
    if state == Lifecycle::PreArm {
        out.insert((mode, Lifecycle::PreArm));
    }
    out.insert((mode, Lifecycle::Arm));
    let air = airborne(state);
    match mode {
        Mode::Offboard => {
            out.insert((Mode::Offboard, Lifecycle::Takeoff));
            out.insert((Mode::Offboard, Lifecycle::Fly));
            if mission_has_hover {
                out.insert((Mode::Offboard, Lifecycle::Hover));
            }
            out.insert((Mode::AutoLand, Lifecycle::Land));
            out.insert((Mode::AutoLand, Lifecycle::Arm));
        }
        Mode::Stabilized | Mode::Altctl | Mode::Posctl => {
            out.insert((mode, Lifecycle::Fly));
        }
        Mode::AutoLoiter => {
            if air {
                out.insert((mode, Lifecycle::Hover));
            }
        }
        Mode::AutoRtl => {
            if air {
                out.insert((mode, Lifecycle::Fly));
                out.insert((mode, Lifecycle::Land));
            }
        }
        Mode::AutoLand => {
            if air {
                out.insert((mode, Lifecycle::Land));
            }
        }
    }
    out
}

/// Mode changes the geofence failsafe may force while airborne.
fn failsafe_mode(cfg: &DroneConfig) -> Option<Mode> {
    if !cfg.geofence_status.is_on() {
        return None;
    }
    match cfg.geofence_action {
        GeofenceAction::Hold => Some(Mode::AutoLoiter),
        GeofenceAction::Return => Some(Mode::AutoRtl),
        GeofenceAction::Land => Some(Mode::AutoLand),
        GeofenceAction::None | GeofenceAction::Warning | GeofenceAction::Terminate => None,
    }
}

fn saturate_failsafe(set: &mut BTreeSet<ModeState>, failsafe: Option<Mode>, hover: bool) {
    if let Some(m) = failsafe {
        if set.iter().any(|&(_, s)| airborne(s)) {
            set.extend(mode_closure(m, Lifecycle::Fly, hover));
        }
        // Failsafe targets can themselves trigger again; closure is idempotent.
    }
}

fn params_match(hit: &Hit, cfg: &DroneConfig) -> bool {
    hit.precondition_params
        .iter()
        .all(|(k, v)| cfg.param_equals(k, v) == Some(true))
}

fn membership_issues(test: &FuzzTest, space: &FuzzSpace) -> Vec<String> {
    let mut issues = Vec::new();
    if space.mission(&test.mission).is_none() {
        issues.push(format!("mission {} is not declared", test.mission));
    }
    if let Some(w) = test.environment.wind {
        if !space.environment.wind.contains(&w) {
            issues.push(format!("wind {} is not declared", w.label()));
        }
    }
    let p = &space.parameters;
    for (drone, cfg) in &test.drone_config {
        if space.drone(drone).is_none() {
            issues.push(format!("drone {drone} is not declared"));
        }
        if !p.geofence_status.contains(&cfg.geofence_status) {
            issues.push(format!("Geofence_Stat {} is not allowed", cfg.geofence_status));
        }
        if !p.geofence_prediction.contains(&cfg.geofence_prediction) {
            issues.push(format!("Geofence_Pred {} is not allowed", cfg.geofence_prediction));
        }
        if !p.geofence_action.contains(&cfg.geofence_action) {
            issues.push(format!("Geofence_Act {} is not allowed", cfg.geofence_action));
        }
        if !p.throttle.contains(&cfg.throttle) {
            issues.push(format!("Throttle {} is not allowed", cfg.throttle));
        }
        if !cfg.geofence_is_legal() {
            issues.push(format!("drone {drone}: geofence prediction/action set while the fence is off"));
        }
    }
    for role in &test.roles {
        if !space.roles.contains(&role.role) {
            issues.push(format!("role {} is not declared", role.role));
        }
        if !space.interaction_devices.contains(&role.interaction_device) {
            issues.push(format!("interaction device {} is not declared", role.interaction_device));
        }
        let mut ids = BTreeSet::new();
        for hit in &role.hits {
            let tag = format!("role {} HIT {}", role.role, hit.id);
            if !ids.insert(&hit.id) {
                issues.push(format!("{tag}: duplicate HIT id"));
            }
            for d in &hit.drones {
                if space.drone(d).is_none() {
                    issues.push(format!("{tag}: drone {d} is not declared"));
                }
            }
            if !space.modes.contains(&hit.precondition_mode) {
                issues.push(format!("{tag}: mode {} is not declared", hit.precondition_mode));
            }
            if !space.states.contains(&hit.precondition_state) {
                issues.push(format!("{tag}: state {} is not declared", hit.precondition_state));
            }
            match space.task_template(hit.task.kind()) {
                None => issues.push(format!("{tag}: task kind {} is not declared", hit.task.kind())),
                Some(t) => {
                    if !t.admits(hit.task) {
                        issues.push(format!("{tag}: task `{}` is outside the template arguments", hit.task));
                    }
                    if !t.modes.contains(&hit.precondition_mode) || !t.states.contains(&hit.precondition_state) {
                        issues.push(format!("{tag}: precondition not permitted for task {}", t.kind));
                    }
                }
            }
            for (k, v) in &hit.precondition_params {
                match (p.allowed(k), canonical_param(k, v)) {
                    (None, _) => issues.push(format!("{tag}: parameter {k} is not declared")),
                    (Some(allowed), Some(c)) if allowed.iter().any(|a| a == c) => {}
                    _ => issues.push(format!("{tag}: parameter {k}={v} is not allowed")),
                }
            }
        }
    }
    issues
}

fn reachability(test: &FuzzTest, mission: Option<&Mission>) -> Vec<HitReachability> {
    let hover = mission.map(Mission::has_hover).unwrap_or(true);
    let cfg = test.primary_config();
    let failsafe = failsafe_mode(&cfg);

    let mut reached: BTreeSet<ModeState> = mode_closure(Mode::Offboard, Lifecycle::PreArm, hover);
    saturate_failsafe(&mut reached, failsafe, hover);

    let mut fired: Vec<Vec<bool>> = test.roles.iter().map(|r| vec![false; r.hits.len()]).collect();
    loop {
        let mut changed = false;
        for (ri, role) in test.roles.iter().enumerate() {
            for (hi, hit) in role.hits.iter().enumerate() {
                if fired[ri][hi] {
                    continue;
                }
                let pair = (hit.precondition_mode, hit.precondition_state);
                let hit_cfg = hit
                    .drones
                    .first()
                    .and_then(|d| test.drone_config.get(d))
                    .copied()
                    .unwrap_or(cfg);
                if !reached.contains(&pair) || !params_match(hit, &hit_cfg) {
                    // Later HITs of this role wait for this one.
                    break;
                }
                fired[ri][hi] = true;
                changed = true;
                if let Some(m) = hit.task.induced_mode() {
                    reached.extend(mode_closure(m, hit.precondition_state, hover));
                    if hit.delay_s > 0.0 {
                        // The vehicle keeps moving while the delay runs.
                        let later: Vec<Lifecycle> = reached
                            .iter()
                            .filter(|(pm, _)| *pm == hit.precondition_mode)
                            .map(|&(_, s)| s)
                            .collect();
                        for s in later {
                            reached.extend(mode_closure(m, s, hover));
                        }
                    }
                }
                saturate_failsafe(&mut reached, failsafe, hover);
            }
        }
        if !changed {
            break;
        }
    }

    test.roles
        .iter()
        .zip(&fired)
        .flat_map(|(role, flags)| {
            role.hits.iter().zip(flags).map(move |(hit, &ok)| HitReachability {
                role: role.role.clone(),
                hit_id: hit.id.clone(),
                precondition: (hit.precondition_mode, hit.precondition_state),
                reachable: ok,
            })
        })
        .collect()
}

/// Checks space membership of every reference and static reachability of every HIT precondition.
pub fn validate_test(test: &FuzzTest, space: &FuzzSpace) -> ValidityReport {
    ValidityReport {
        issues: membership_issues(test, space),
        hits: reachability(test, space.mission(&test.mission)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_test, RoleAssignment, Task, Wind};

    fn single_hit(task: Task, mode: Mode, state: Lifecycle) -> FuzzTest {
        let mut t = FuzzTest::nominal("t", "BASIC-WAYPOINTS", Wind::CALM);
        t.roles.push(RoleAssignment {
            role: "RPIC".into(),
            interaction_device: "RC TRANSMITTER".into(),
            hits: vec![Hit {
                id: "1".into(),
                drones: vec!["BLUE".into()],
                task,
                precondition_mode: mode,
                precondition_state: state,
                precondition_params: Default::default(),
                delay_s: 0.0,
            }],
        });
        t
    }

    #[test]
    fn offboard_fly_is_reachable_on_the_nominal_mission() {
        let space = FuzzSpace::default_space();
        let t = single_hit(Task::ChangeMode(Mode::Posctl), Mode::Offboard, Lifecycle::Fly);
        let r = validate_test(&t, &space);
        assert!(r.is_legal(), "{:?}", r.issues);
        assert_eq!(r.reachable("RPIC", "1"), Some(true));
        assert!(!r.potentially_invalid());
    }

    #[test]
    fn stabilized_prearm_is_unreachable_without_an_earlier_mode_change() {
        let space = FuzzSpace::default_space();
        let t = single_hit(Task::KillMotors, Mode::Stabilized, Lifecycle::PreArm);
        let r = validate_test(&t, &space);
        assert_eq!(r.reachable("RPIC", "1"), Some(false));
        assert!(r.potentially_invalid());
    }

    #[test]
    fn earlier_mode_change_makes_a_later_precondition_reachable() {
        let space = FuzzSpace::default_space();
        let mut t = single_hit(Task::ChangeMode(Mode::Stabilized), Mode::Offboard, Lifecycle::Fly);
        let mut second = t.roles[0].hits[0].clone();
        second.id = "2".into();
        second.task = Task::MoveThrottle(crate::model::Throttle::Neutral);
        second.precondition_mode = Mode::Stabilized;
        second.precondition_state = Lifecycle::Fly;
        t.roles[0].hits.push(second.clone());
        assert_eq!(validate_test(&t, &space).reachable("RPIC", "2"), Some(true));

        // Same HIT alone is unreachable.
        t.roles[0].hits.remove(0);
        assert_eq!(validate_test(&t, &space).reachable("RPIC", "2"), Some(false));
    }

    #[test]
    fn geofence_failsafe_opens_loiter_hover() {
        let space = FuzzSpace::default_space();
        let mut t = single_hit(Task::KillMotors, Mode::AutoLoiter, Lifecycle::Hover);
        assert_eq!(validate_test(&t, &space).reachable("RPIC", "1"), Some(false));
        t.drone_config.insert(
            "BLUE".into(),
            DroneConfig {
                geofence_status: crate::model::Switch::On,
                geofence_action: GeofenceAction::Hold,
                ..Default::default()
            },
        );
        assert_eq!(validate_test(&t, &space).reachable("RPIC", "1"), Some(true));
    }

    #[test]
    fn two_role_test_references_outside_the_default_space_are_reported() {
        let space = FuzzSpace::default_space();
        let t = parse_test(include_str!("../../fixtures/two_role_test.json")).unwrap();
        let r = validate_test(&t, &space);
        assert!(r.issues.iter().any(|i| i.contains("GREEN")));
        assert!(r.issues.iter().any(|i| i.contains("wind")));
        // Both RPIC HITs and the MC HIT are reachable.
        assert!(!r.potentially_invalid(), "{:?}", r.hits);
    }

    #[test]
    fn mismatched_parameter_precondition_is_unreachable() {
        let space = FuzzSpace::default_space();
        let mut t = single_hit(Task::KillMotors, Mode::Offboard, Lifecycle::Fly);
        t.roles[0].hits[0].precondition_params.insert("Geofence_Stat".into(), "On".into());
        let r = validate_test(&t, &space);
        assert!(r.is_legal(), "{:?}", r.issues);
        assert_eq!(r.reachable("RPIC", "1"), Some(false));
    }
}
