//! Test orchestration: precondition monitoring, HIT dispatch and corpus execution.

use crate::model::{DroneConfig, FuzzSpace, FuzzTest, Hit, Task};
use crate::simulator::{ControlInput, ControlKind, FlightLog, SimParams, VehicleState, World};

mod agent;
mod clock;
mod corpus;

pub use agent::{Agent, AgentControl, AgentError, HitPrompt, ProxyHuman};
pub use clock::{Pacer, RealTime, Unpaced};
pub use corpus::{blueprint_for, evaluate, log_file_name, run_corpus, Blueprints, CorpusOptions, CorpusResult};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("mission {0} is not declared in the space")]
    UnknownMission(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HitStatus {
    Pending,
    PreconditionMet { met: f64 },
    Dispatched { met: f64, dispatched: f64 },
    Performed { met: f64, dispatched: f64, performed: f64 },
    /// The precondition never held before the mission ended.
    NeverMet,
    /// The precondition held but the HIT was not performed before the mission ended.
    Expired { met: f64, dispatched: Option<f64> },
}

impl HitStatus {
    pub fn is_performed(&self) -> bool {
        matches!(self, HitStatus::Performed { .. })
    }

    pub fn untested(&self) -> bool {
        matches!(self, HitStatus::NeverMet | HitStatus::Expired { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            HitStatus::Pending => "PENDING",
            HitStatus::PreconditionMet { .. } => "PRECONDITION-MET",
            HitStatus::Dispatched { .. } => "DISPATCHED",
            HitStatus::Performed { .. } => "PERFORMED",
            HitStatus::NeverMet => "NEVER-MET",
            HitStatus::Expired { .. } => "EXPIRED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitRecord {
    pub role: String,
    pub hit_id: String,
    pub task: Task,
    pub status: HitStatus,
    /// Performed after the precondition had stopped holding.
    pub stale_precondition: bool,
    /// What the agent actually did, which may differ from the task.
    pub performed: Option<ControlKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestExecution {
    pub test_id: String,
    pub hits: Vec<HitRecord>,
    /// Controls received while no HIT of that role was dispatched.
    pub unsolicited: Vec<(f64, AgentControl)>,
    pub log: FlightLog,
    pub aborted: Option<String>,
}

impl TestExecution {
    /// Some HIT was never performed.
    pub fn untested(&self) -> bool {
        self.hits.iter().any(|h| h.status.untested())
    }

    pub fn all_performed(&self) -> bool {
        self.hits.iter().all(|h| h.status.is_performed())
    }
}

/// Mode, lifecycle and parameter precondition check.
pub fn precondition_met(hit: &Hit, state: &VehicleState, config: &DroneConfig) -> bool {
    state.mode == hit.precondition_mode
        && state.lifecycle == hit.precondition_state
        && hit
            .precondition_params
            .iter()
            .all(|(k, v)| config.param_equals(k, v) == Some(true))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecOptions {
    pub params: SimParams,
    /// Telemetry is offered to the agent every this many ticks.
    pub telemetry_every: u64,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            params: SimParams::default(),
            telemetry_every: 2,
        }
    }
}

/// Fresh world configured for `test`.
pub fn world_for(test: &FuzzTest, space: &FuzzSpace, params: SimParams) -> Result<World, RunError> {
    let mission = space
        .mission(&test.mission)
        .ok_or_else(|| RunError::UnknownMission(test.mission.clone()))?;
    let mut world = World::new(mission, &test.primary_config(), test.environment.wind_or_calm(), params)
        .with_allowed_modes(&space.modes);
    if let Some(alt) = test.primary_drone().and_then(|d| space.drone(d)).and_then(|d| d.rtl_altitude) {
        world = world.with_rtl_altitude(alt);
    }
    Ok(world)
}

/// Runs one test in a fresh world, delegating HITs to `agent`.
pub fn execute_test(
    test: &FuzzTest,
    space: &FuzzSpace,
    agent: &mut dyn Agent,
    pacer: &mut dyn Pacer,
    opts: &ExecOptions,
) -> Result<TestExecution, RunError> {
    let mut world = world_for(test, space, opts.params)?;
    let mut exec = TestExecution {
        test_id: test.test_id.clone(),
        hits: test
            .hits()
            .map(|(r, h)| HitRecord {
                role: r.role.clone(),
                hit_id: h.id.clone(),
                task: h.task,
                status: HitStatus::Pending,
                stale_precondition: false,
                performed: None,
            })
            .collect(),
        unsolicited: Vec::new(),
        log: FlightLog::default(),
        aborted: None,
    };
    // Index of each role's first HIT in `exec.hits`.
    let mut offsets = Vec::with_capacity(test.roles.len());
    let mut acc = 0;
    for r in &test.roles {
        offsets.push(acc);
        acc += r.hits.len();
    }
    let mut heads = vec![0usize; test.roles.len()];

    let result = drive(test, &mut world, agent, pacer, opts, &mut exec, &offsets, &mut heads);
    if let Err(AgentError::Unavailable(why)) = result {
        exec.aborted = Some(why);
    }
    for h in &mut exec.hits {
        h.status = match h.status {
            HitStatus::Pending => HitStatus::NeverMet,
            HitStatus::PreconditionMet { met } => HitStatus::Expired { met, dispatched: None },
            HitStatus::Dispatched { met, dispatched } => HitStatus::Expired {
                met,
                dispatched: Some(dispatched),
            },
            s => s,
        };
    }
    exec.log = world.into_log();
    if exec.aborted.is_none() {
        if let Err(AgentError::Unavailable(why)) = agent.finish(&exec) {
            exec.aborted = Some(why);
        }
    }
    Ok(exec)
}

#[allow(clippy::too_many_arguments)]
fn drive(
    test: &FuzzTest,
    world: &mut World,
    agent: &mut dyn Agent,
    pacer: &mut dyn Pacer,
    opts: &ExecOptions,
    exec: &mut TestExecution,
    offsets: &[usize],
    heads: &mut [usize],
) -> Result<(), AgentError> {
    agent.begin(test)?;
    for role in test.roles.iter().filter(|r| r.hits.is_empty()) {
        agent.no_more_tasks(&role.role, 0.0)?;
    }
    let mut tick: u64 = 0;
    let mut events_sent = 0;
    while !world.is_finished() {
        let now = world.time();
        let state = *world.state();
        let config = *world.config();

        for (ri, role) in test.roles.iter().enumerate() {
            let Some(hit) = role.hits.get(heads[ri]) else {
                continue;
            };
            let slot = offsets[ri] + heads[ri];
            let prompt = HitPrompt {
                role: &role.role,
                hit,
                index: heads[ri],
                time: now,
            };
            if exec.hits[slot].status == HitStatus::Pending && precondition_met(hit, &state, &config) {
                exec.hits[slot].status = HitStatus::PreconditionMet { met: now };
                agent.plan(&prompt)?;
            }
            if let HitStatus::PreconditionMet { met } = exec.hits[slot].status {
                if now + 1e-9 >= met + hit.delay_s {
                    exec.hits[slot].status = HitStatus::Dispatched { met, dispatched: now };
                    agent.go(&prompt)?;
                }
            }
        }

        for ctl in agent.poll(now)? {
            let _ = world.apply_manual_control(&ControlInput::at(now, ctl.control));
            let Some(ri) = test.roles.iter().position(|r| r.role == ctl.role) else {
                exec.unsolicited.push((now, ctl));
                continue;
            };
            let slot = offsets[ri] + heads[ri];
            let head = test.roles[ri].hits.get(heads[ri]);
            match (head, exec.hits.get(slot).map(|h| h.status)) {
                (Some(hit), Some(HitStatus::Dispatched { met, dispatched })) => {
                    let rec = &mut exec.hits[slot];
                    rec.status = HitStatus::Performed {
                        met,
                        dispatched,
                        performed: now,
                    };
                    rec.stale_precondition = !precondition_met(hit, &state, &config);
                    rec.performed = Some(ctl.control);
                    heads[ri] += 1;
                    if heads[ri] == test.roles[ri].hits.len() {
                        agent.no_more_tasks(&ctl.role, now)?;
                    }
                }
                _ => exec.unsolicited.push((now, ctl)),
            }
        }

        if opts.telemetry_every > 0 && tick % opts.telemetry_every == 0 {
            let log = world.log();
            if let Some(s) = log.last() {
                agent.telemetry(s, &log.events[events_sent..])?;
                events_sent = log.events.len();
            }
        }
        world.step();
        tick += 1;
        pacer.wait_until(world.time());
    }
    Ok(())
}
