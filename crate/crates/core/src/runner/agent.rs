use crate::model::{FuzzTest, Hit};
use crate::simulator::{ControlKind, Event, Sample};

use super::TestExecution;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error("agent unavailable: {0}")]
    Unavailable(String),
}

/// The HIT an agent is being prompted for.
#[derive(Debug, Clone, Copy)]
pub struct HitPrompt<'a> {
    pub role: &'a str,
    pub hit: &'a Hit,
    /// Position of the HIT in its role's list.
    pub index: usize,
    pub time: f64,
}

/// A control an agent actually performed, attributed to a role.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentControl {
    pub role: String,
    pub control: ControlKind,
}

/// Whoever performs HITs: the proxy human at L1, a live console session at L2.
pub trait Agent {
    /// Called once before the mission starts. Live agents run the precheck here.
    fn begin(&mut self, _test: &FuzzTest) -> Result<(), AgentError> {
        Ok(())
    }

    /// Precondition first holds.
    fn plan(&mut self, _prompt: &HitPrompt<'_>) -> Result<(), AgentError> {
        Ok(())
    }

    /// Delay elapsed; the HIT should be performed now.
    fn go(&mut self, prompt: &HitPrompt<'_>) -> Result<(), AgentError>;

    /// Controls performed since the last poll, in order.
    fn poll(&mut self, now: f64) -> Result<Vec<AgentControl>, AgentError>;

    fn no_more_tasks(&mut self, _role: &str, _time: f64) -> Result<(), AgentError> {
        Ok(())
    }

    /// Latest sample plus the events logged since the previous call.
    fn telemetry(&mut self, _sample: &Sample, _events: &[Event]) -> Result<(), AgentError> {
        Ok(())
    }

    /// Mission over. Live agents ask awareness questions here.
    fn finish(&mut self, _execution: &TestExecution) -> Result<(), AgentError> {
        Ok(())
    }
}

/// Software stand-in for the human: performs exactly the dispatched task after `latency` seconds.
#[derive(Debug, Clone, Default)]
pub struct ProxyHuman {
    pub latency: f64,
    queue: Vec<(f64, AgentControl)>,
}

impl ProxyHuman {
    pub fn new() -> Self {
        ProxyHuman::default()
    }

    pub fn with_latency(latency: f64) -> Self {
        ProxyHuman {
            latency: latency.max(0.0),
            queue: Vec::new(),
        }
    }
}

impl Agent for ProxyHuman {
    fn begin(&mut self, _test: &FuzzTest) -> Result<(), AgentError> {
        self.queue.clear();
        Ok(())
    }

    fn go(&mut self, prompt: &HitPrompt<'_>) -> Result<(), AgentError> {
        self.queue.push((
            prompt.time + self.latency,
            AgentControl {
                role: prompt.role.to_string(),
                control: ControlKind::for_task(prompt.hit.task),
            },
        ));
        Ok(())
    }

    fn poll(&mut self, now: f64) -> Result<Vec<AgentControl>, AgentError> {
        let due = self.queue.iter().take_while(|(t, _)| *t <= now + 1e-9).count();
        Ok(self.queue.drain(..due).map(|(_, c)| c).collect())
    }
}
