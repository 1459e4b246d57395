use crate::model::{DroneConfig, GeofenceAction, Lifecycle, Mission, Mode, Throttle, Wind, WindSpeed};

use super::geofence::{check_geofence, GeofenceConfig};
use super::log::{Event, EventKind, FlightLog, Sample};
use super::{ControlInput, ControlKind, SimError, SimParams, VehicleState};

const EPS: f64 = 1e-9;

/// Autonomous-pilot mission phase. Advances only while the vehicle is in OFFBOARD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    PreArm,
    Arming,
    Takeoff,
    Leg(usize),
    Dwell(usize),
    ReturnHome,
    Landing,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RtlStage {
    Climb(f64),
    Return(f64),
    Descend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MissionComplete,
    Disarmed,
    ArmDenied,
    FlyAway,
    Timeout,
}

/// Air-mass velocity (east, north) in m/s.
pub fn wind_vector(wind: Wind) -> [f64; 2] {
    let speed = match wind.speed {
        WindSpeed::Calm => 0.0,
        WindSpeed::Medium => 5.0,
        WindSpeed::High => 10.0,
        WindSpeed::Knots(k) => f64::from(k) * 0.5144,
    };
    let (e, n) = wind.direction.downwind();
    [e * speed, n * speed]
}

fn horizontal_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    horizontal_distance(a, b).hypot(a[2] - b[2])
}

/// One simulated vehicle with its autopilot, failsafes and log.
#[derive(Debug, Clone)]
pub struct World {
    params: SimParams,
    mission: Mission,
    config: DroneConfig,
    fence: GeofenceConfig,
    wind: [f64; 2],
    rtl_altitude: f64,
    allowed_modes: Vec<Mode>,

    state: VehicleState,
    tick: u64,
    phase: Phase,
    phase_since: f64,
    hold: [f64; 3],
    rtl: RtlStage,

    throttle_touched: bool,
    throttle_routine_done: bool,
    kill_engaged: bool,
    kill_at: Option<f64>,

    ever_airborne: bool,
    touched_down: bool,
    ground_timer: f64,
    freefall_timer: f64,
    freefall_logged: bool,
    breach_active: bool,
    finished: Option<Termination>,
    log: FlightLog,
}

impl World {
    pub fn new(mission: &Mission, config: &DroneConfig, wind: Wind, params: SimParams) -> World {
        assert!(params.dt > 0.0, "dt must be positive");
        let mut fence = GeofenceConfig::new(config, mission.geofence.clone());
        fence.t_pred = params.t_pred;
        let initial_throttle = if config.arm_neutral_throttle {
            config.throttle
        } else {
            Throttle::MaxLow
        };
        let state = VehicleState {
            position: [0.0; 3],
            velocity: [0.0; 3],
            mode: Mode::Offboard,
            lifecycle: Lifecycle::PreArm,
            armed: false,
            motors_on: false,
            throttle: initial_throttle,
            stick: (0.0, 0.0),
            time: 0.0,
        };
        let mut world = World {
            log: FlightLog::new(mission.id.clone(), wind.label(), params.dt),
            params,
            rtl_altitude: mission.rtl_altitude,
            mission: mission.clone(),
            config: *config,
            fence,
            wind: wind_vector(wind),
            allowed_modes: Mode::ALL.to_vec(),
            state,
            tick: 0,
            phase: Phase::PreArm,
            phase_since: 0.0,
            hold: [0.0; 3],
            rtl: RtlStage::Descend,
            throttle_touched: false,
            throttle_routine_done: false,
            kill_engaged: false,
            kill_at: None,
            ever_airborne: false,
            touched_down: false,
            ground_timer: 0.0,
            freefall_timer: 0.0,
            freefall_logged: false,
            breach_active: false,
            finished: None,
        };
        world.push_sample();
        world
    }

    pub fn with_allowed_modes(mut self, modes: &[Mode]) -> World {
        self.allowed_modes = modes.to_vec();
        self
    }

    pub fn with_rtl_altitude(mut self, altitude: f64) -> World {
        self.rtl_altitude = altitude;
        self
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn config(&self) -> &DroneConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn finished(&self) -> Option<Termination> {
        self.finished
    }

    pub fn is_finished(&self) -> bool {
        self.finished.is_some()
    }

    pub fn log(&self) -> &FlightLog {
        &self.log
    }

    pub fn into_log(self) -> FlightLog {
        self.log
    }

    /// Test hook: place the vehicle in an arbitrary kinematic state.
    pub fn set_kinematics(&mut self, position: [f64; 3], velocity: [f64; 3]) {
        self.state.position = position;
        self.state.velocity = velocity;
        if position[2] > 0.0 {
            self.ever_airborne = true;
        }
    }

    /// Test hook: arm immediately and enter the given phase.
    pub fn force_armed(&mut self, phase: Phase) {
        self.state.armed = true;
        self.state.motors_on = true;
        self.throttle_routine_done = true;
        self.phase = phase;
        self.phase_since = self.state.time;
        self.hold = self.state.position;
    }

    fn event(&mut self, kind: EventKind, detail: impl Into<String>) {
        self.log.events.push(Event {
            t: self.state.time,
            kind,
            detail: detail.into(),
        });
    }

    fn finish(&mut self, why: Termination) {
        if self.finished.is_none() {
            self.finished = Some(why);
        }
    }

    fn set_mode(&mut self, mode: Mode, source: &str) {
        if mode == self.state.mode {
            return;
        }
        let old = self.state.mode;
        self.event(EventKind::ModeChange, format!("{old}->{mode} by {source}"));
        self.state.mode = mode;
        self.hold = self.state.position;
        let z = self.state.position[2];
        self.rtl = if z <= 0.0 {
            RtlStage::Descend
        } else {
            RtlStage::Climb(z.max(self.rtl_altitude))
        };
    }

    /// Applies a human control at the current tick boundary.
    pub fn apply_manual_control(&mut self, input: &ControlInput) -> Result<(), SimError> {
        if let ControlKind::SetMode { mode: m } = input.kind {
            if !self.allowed_modes.contains(&m) {
                return Err(SimError::RejectedInput(format!("mode {m} is not in the space")));
            }
        }
        self.event(EventKind::ManualControl, input.kind.to_string());
        match input.kind {
            ControlKind::SetMode { mode } => self.set_mode(mode, "pilot"),
            ControlKind::SetThrottle { level: t } => {
                self.state.throttle = t;
                self.throttle_touched = true;
            }
            ControlKind::SetStick { pitch, roll } => {
                self.state.stick = (pitch.clamp(-1.0, 1.0), roll.clamp(-1.0, 1.0));
            }
            ControlKind::KillMotors => {
                self.kill_engaged = true;
                if self.params.kill_delay <= 0.0 {
                    self.state.motors_on = false;
                } else if self.kill_at.is_none() {
                    self.kill_at = Some(self.state.time + self.params.kill_delay);
                }
            }
        }
        Ok(())
    }

    fn try_arm(&mut self) {
        let throttle_ok = self.config.arm_neutral_throttle || self.state.throttle == Throttle::MaxLow;
        if self.kill_engaged {
            self.event(EventKind::ArmDenied, "kill switch engaged");
            self.finish(Termination::ArmDenied);
        } else if !throttle_ok {
            self.event(EventKind::ArmDenied, format!("throttle at {} not MAX-LOW", self.state.throttle));
            self.finish(Termination::ArmDenied);
        } else {
            self.state.armed = true;
            self.state.motors_on = true;
            self.phase = Phase::Arming;
            self.phase_since = self.state.time;
            self.event(EventKind::Armed, "");
        }
    }

    fn goto(&self, target: [f64; 3]) -> [f64; 3] {
        let p = self.state.position;
        let [hx, hy] = self.toward_xy(target);
        let vz = (self.params.k_vertical * (target[2] - p[2])).clamp(-self.params.climb_speed, self.params.climb_speed);
        [hx, hy, vz]
    }

    fn toward_xy(&self, target: [f64; 3]) -> [f64; 2] {
        let p = self.state.position;
        let (dx, dy) = (target[0] - p[0], target[1] - p[1]);
        let d = dx.hypot(dy);
        if d < 1e-12 {
            return [0.0, 0.0];
        }
        let speed = (self.params.k_horizontal * d).min(self.params.cruise_speed);
        [dx / d * speed, dy / d * speed]
    }

    fn home_at(&self, z: f64) -> [f64; 3] {
        [0.0, 0.0, z]
    }

    /// Commanded velocity and horizontal tracking time constant for the current mode.
    fn command(&self) -> ([f64; 3], f64) {
        let p = &self.params;
        let tau = p.tau;
        match self.state.mode {
            Mode::Offboard => {
                let target = match self.phase {
                    Phase::PreArm | Phase::Arming | Phase::Done | Phase::Landing => return ([0.0; 3], tau),
                    Phase::Takeoff => self.home_at(self.mission.takeoff_altitude),
                    Phase::Leg(i) | Phase::Dwell(i) => {
                        let w = self.mission.waypoints[i];
                        [w.x, w.y, w.z]
                    }
                    Phase::ReturnHome => self.home_at(self.mission.takeoff_altitude),
                };
                (self.goto(target), tau)
            }
            Mode::AutoLoiter => (self.goto(self.hold), tau),
            Mode::AutoLand => {
                let [hx, hy] = self.toward_xy(self.hold);
                ([hx, hy, -p.land_speed], tau)
            }
            Mode::AutoRtl => match self.rtl {
                RtlStage::Climb(z) => {
                    let [hx, hy] = self.toward_xy(self.hold);
                    let vz = (p.k_vertical * (z - self.state.position[2])).clamp(-p.climb_speed, p.climb_speed);
                    ([hx, hy, vz], tau)
                }
                RtlStage::Return(z) => (self.goto(self.home_at(z)), tau),
                RtlStage::Descend => {
                    let [hx, hy] = self.toward_xy(self.home_at(0.0));
                    ([hx, hy, -p.land_speed], tau)
                }
            },
            Mode::Stabilized | Mode::Altctl | Mode::Posctl => {
                let level = self.state.throttle.level();
                let vz = if self.state.mode == Mode::Stabilized && level < 0.0 {
                    level * p.stabilized_descent_speed
                } else {
                    level * p.climb_speed
                };
                let (pitch, roll) = self.state.stick;
                let stick = [roll * p.cruise_speed, pitch * p.cruise_speed];
                match self.state.mode {
                    Mode::Stabilized => ([self.wind[0] + stick[0], self.wind[1] + stick[1], vz], p.stabilized_drift_tau),
                    Mode::Altctl => ([self.wind[0] + stick[0], self.wind[1] + stick[1], vz], p.altctl_drift_tau),
                    _ => {
                        if pitch.abs() > 0.05 || roll.abs() > 0.05 {
                            ([stick[0], stick[1], vz], tau)
                        } else {
                            let [hx, hy] = self.toward_xy(self.hold);
                            ([hx, hy, vz], tau)
                        }
                    }
                }
            }
        }
    }

    /// Advances one fixed tick and appends a log sample.
    pub fn step(&mut self) {
        if self.finished.is_some() {
            return;
        }
        let dt = self.params.dt;
        let t0 = self.state.time;

        if let Some(at) = self.kill_at {
            if t0 + EPS >= at {
                self.kill_at = None;
                self.state.motors_on = false;
            }
        }
        if self.phase == Phase::PreArm && t0 + EPS >= self.params.arm_time {
            self.try_arm();
        }
        if !self.throttle_routine_done && t0 + EPS >= self.params.takeoff_time {
            self.throttle_routine_done = true;
            if !self.throttle_touched && self.state.throttle != self.config.throttle {
                self.state.throttle = self.config.throttle;
            }
        }
        if self.state.mode == Mode::Offboard {
            if self.phase == Phase::Arming && t0 + EPS >= self.params.takeoff_time {
                self.phase = Phase::Takeoff;
                self.phase_since = t0;
            }
            if self.phase == Phase::Landing && self.state.motors_on {
                self.set_mode(Mode::AutoLand, "autopilot");
            }
        }
        if self.state.motors_on && self.state.mode == Mode::AutoRtl {
            self.advance_rtl();
        }

        let on_ground = self.state.position[2] <= 0.0;
        let mut lifting = false;
        let powered = self.state.armed && self.state.motors_on;
        let (cmd, tau_h) = if powered { self.command() } else { ([0.0; 3], self.params.tau) };
        let v = &mut self.state.velocity;
        if powered {
            lifting = cmd[2] > 0.0;
            if on_ground && !lifting {
                *v = [0.0; 3];
            } else {
                let a_h = 1.0 - (-dt / tau_h).exp();
                let a_v = 1.0 - (-dt / self.params.tau).exp();
                v[0] += (cmd[0] - v[0]) * a_h;
                v[1] += (cmd[1] - v[1]) * a_h;
                v[2] += (cmd[2] - v[2]) * a_v;
            }
        } else if !on_ground {
            v[2] -= self.params.gravity * dt;
        } else {
            *v = [0.0; 3];
        }

        let was_airborne = !on_ground;
        for i in 0..3 {
            self.state.position[i] += self.state.velocity[i] * dt;
        }
        self.tick += 1;
        self.state.time = (self.tick as f64 * dt * 1e9).round() / 1e9;

        if self.state.position[2] > 0.0 {
            self.ever_airborne = true;
        } else {
            self.state.position[2] = 0.0;
            if was_airborne {
                self.touchdown();
            }
        }

        if !self.state.motors_on && self.state.velocity[2] < -self.params.freefall_speed {
            self.freefall_timer += dt;
            if !self.freefall_logged && self.freefall_timer + EPS >= self.params.freefall_duration {
                self.freefall_logged = true;
                let z = self.state.position[2];
                self.event(EventKind::Freefall, format!("z={z:.2}"));
            }
        } else {
            self.freefall_timer = 0.0;
        }

        if self.state.motors_on && self.state.mode == Mode::Offboard {
            self.advance_mission();
        }

        if self.state.armed && self.state.position[2] > 0.0 {
            self.check_fence();
        } else {
            self.breach_active = false;
        }

        if self.state.armed && self.state.position[2] <= 0.0 {
            if !self.state.motors_on {
                self.disarm();
            } else if lifting {
                self.ground_timer = 0.0;
            } else {
                self.ground_timer += dt;
                let limit = if self.ever_airborne {
                    self.params.disarm_delay
                } else {
                    self.params.idle_disarm_delay
                };
                if self.ground_timer + EPS >= limit {
                    self.disarm();
                }
            }
        } else {
            self.ground_timer = 0.0;
        }

        if self.finished.is_none() {
            let p = self.state.position;
            if distance(p, [0.0; 3]) > self.params.flyaway_distance {
                self.event(EventKind::FlyAway, format!("{:.1} m from home", distance(p, [0.0; 3])));
                self.finish(Termination::FlyAway);
            } else if self.state.time + EPS >= self.params.max_time {
                self.event(EventKind::Timeout, format!("{} s", self.params.max_time));
                self.finish(Termination::Timeout);
            }
        }
        self.push_sample();
    }

    fn touchdown(&mut self) {
        let speed = -self.state.velocity[2];
        self.state.velocity = [0.0; 3];
        self.touched_down = true;
        self.ground_timer = 0.0;
        self.event(EventKind::Touchdown, format!("{speed}"));
        if speed > self.params.hard_landing_speed {
            self.event(EventKind::HardLanding, format!("{speed:.2} m/s"));
        }
        if self.phase != Phase::Landing {
            self.event(EventKind::EarlyLanding, format!("{:?}", self.phase));
        }
    }

    fn disarm(&mut self) {
        self.state.armed = false;
        self.state.motors_on = false;
        self.event(EventKind::Disarmed, "");
        if self.phase == Phase::Landing && self.touched_down {
            self.phase = Phase::Done;
            self.event(EventKind::MissionComplete, "");
            self.finish(Termination::MissionComplete);
        } else {
            self.finish(Termination::Disarmed);
        }
    }

    fn advance_rtl(&mut self) {
        let p = self.state.position;
        match self.rtl {
            RtlStage::Climb(z) if (z - p[2]).abs() < self.params.takeoff_tolerance => self.rtl = RtlStage::Return(z),
            RtlStage::Return(z) if horizontal_distance(p, self.home_at(z)) < self.params.waypoint_radius => {
                self.rtl = RtlStage::Descend
            }
            _ => {}
        }
    }

    fn next_after(&self, i: usize) -> Phase {
        if i + 1 < self.mission.waypoints.len() {
            Phase::Leg(i + 1)
        } else {
            Phase::ReturnHome
        }
    }

    fn advance_mission(&mut self) {
        let p = self.state.position;
        let now = self.state.time;
        let next = match self.phase {
            Phase::Takeoff if (self.mission.takeoff_altitude - p[2]).abs() < self.params.takeoff_tolerance => {
                self.event(EventKind::TakeoffComplete, "");
                Some(Phase::Leg(0))
            }
            Phase::Leg(i) => {
                let w = self.mission.waypoints[i];
                if distance(p, [w.x, w.y, w.z]) < self.params.waypoint_radius {
                    self.event(EventKind::WaypointReached, format!("{}", i + 1));
                    Some(if w.dwell_s > 0.0 { Phase::Dwell(i) } else { self.next_after(i) })
                } else {
                    None
                }
            }
            Phase::Dwell(i) if now - self.phase_since + EPS >= self.mission.waypoints[i].dwell_s => Some(self.next_after(i)),
            Phase::ReturnHome if distance(p, self.home_at(self.mission.takeoff_altitude)) < self.params.waypoint_radius => {
                Some(Phase::Landing)
            }
            _ => None,
        };
        if let Some(phase) = next {
            self.phase = phase;
            self.phase_since = now;
            if phase == Phase::Landing {
                self.set_mode(Mode::AutoLand, "autopilot");
            }
        }
    }

    fn check_fence(&mut self) {
        let breach = check_geofence(&self.state, &self.fence);
        let rising = breach.is_some() && !self.breach_active;
        self.breach_active = breach.is_some();
        let Some(b) = breach.filter(|_| rising) else {
            return;
        };
        let what = if b.predicted { "predicted" } else { "position" };
        self.event(EventKind::Breach, format!("{what} action={}", b.action));
        match b.action {
            GeofenceAction::None => {}
            GeofenceAction::Warning => self.event(EventKind::FailsafeAction, "WARNING"),
            GeofenceAction::Hold => {
                self.event(EventKind::FailsafeAction, "HOLD");
                self.set_mode(Mode::AutoLoiter, "geofence");
            }
            GeofenceAction::Return => {
                self.event(EventKind::FailsafeAction, "RETURN");
                self.set_mode(Mode::AutoRtl, "geofence");
            }
            GeofenceAction::Land => {
                self.event(EventKind::FailsafeAction, "LAND");
                self.set_mode(Mode::AutoLand, "geofence");
            }
            GeofenceAction::Terminate => {
                self.event(EventKind::FailsafeAction, "TERMINATE");
                self.state.motors_on = false;
            }
        }
    }

    fn derive_lifecycle(&self) -> Lifecycle {
        if !self.state.armed {
            return Lifecycle::PreArm;
        }
        let grounded = self.state.position[2] <= 0.0;
        if grounded && !(self.state.mode == Mode::Offboard && self.phase == Phase::Takeoff) {
            return Lifecycle::Arm;
        }
        match self.state.mode {
            Mode::Offboard => match self.phase {
                Phase::Takeoff => Lifecycle::Takeoff,
                Phase::Dwell(_) => Lifecycle::Hover,
                _ => Lifecycle::Fly,
            },
            Mode::AutoLand => Lifecycle::Land,
            Mode::AutoLoiter => Lifecycle::Hover,
            Mode::AutoRtl => match self.rtl {
                RtlStage::Descend => Lifecycle::Land,
                _ => Lifecycle::Fly,
            },
            Mode::Stabilized | Mode::Altctl | Mode::Posctl => Lifecycle::Fly,
        }
    }

    fn push_sample(&mut self) {
        self.state.lifecycle = self.derive_lifecycle();
        let s = &self.state;
        self.log.samples.push(Sample {
            t: s.time,
            pos: s.position,
            vel: s.velocity,
            mode: s.mode,
            lifecycle: s.lifecycle,
            armed: s.armed,
            motors_on: s.motors_on,
        });
    }
}

/// Runs one mission from a fresh world with a time-scheduled control list.
pub fn run_mission(
    mission: &Mission,
    config: &DroneConfig,
    wind: Wind,
    controls: &[ControlInput],
    params: SimParams,
) -> FlightLog {
    let mut world = World::new(mission, config, wind, params);
    let mut schedule: Vec<&ControlInput> = controls.iter().collect();
    schedule.sort_by(|a, b| a.issue_time.total_cmp(&b.issue_time));
    let mut next = 0;
    while !world.is_finished() {
        while next < schedule.len() && schedule[next].issue_time <= world.time() + EPS {
            let _ = world.apply_manual_control(schedule[next]);
            next += 1;
        }
        world.step();
    }
    world.into_log()
}
