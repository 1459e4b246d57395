use std::collections::VecDeque;
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use crate::model::{FuzzSpace, FuzzTest};
use crate::oracle::{ProfileRow, Thresholds};
use crate::runner::{blueprint_for, evaluate, execute_test, Blueprints, ExecOptions, Pacer, RealTime, TestExecution, Unpaced};

use super::protocol::{Answer, Body, TestResult};
use super::session::{Connection, LiveSession, Timing, Transcript};
use super::ServiceError;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Simulation waits for the console after every Go instead of running in real time.
    pub lockstep: bool,
    /// Wall-clock speedup when not in lockstep.
    pub speedup: f64,
    pub timing: Timing,
    pub transcript: Option<PathBuf>,
    /// Stop accepting connections after this many sessions.
    pub max_sessions: Option<usize>,
    pub exec: ExecOptions,
    pub thresholds: Thresholds,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            lockstep: false,
            speedup: 1.0,
            timing: Timing::default(),
            transcript: None,
            max_sessions: None,
            exec: ExecOptions::default(),
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub row: ProfileRow,
    pub execution: TestExecution,
    pub answers: Vec<Answer>,
}

#[derive(Debug, Clone, Default)]
pub struct ServeReport {
    pub completed: Vec<SessionOutcome>,
    /// Tests interrupted by a dropped session. Each was put back on the queue.
    pub aborted: Vec<SessionOutcome>,
    /// Tests still queued when the service stopped.
    pub pending: Vec<String>,
    pub sessions: usize,
    pub protocol_errors: Vec<String>,
}

/// Runs the corpus against live console sessions, one connection at a time.
pub fn serve_l2(
    listener: TcpListener,
    corpus: &[FuzzTest],
    space: &FuzzSpace,
    opts: &ServeOptions,
) -> Result<ServeReport, ServiceError> {
    if corpus.is_empty() {
        return Err(ServiceError::EmptyCorpus);
    }
    let mut blueprints = Blueprints::default();
    for t in corpus {
        let wind = t.environment.wind_or_calm();
        if blueprints.get(&t.mission, wind).is_none() {
            blueprints.insert(blueprint_for(space, &t.mission, wind, opts.exec.params)?);
        }
    }
    let transcript: Option<Transcript> = match &opts.transcript {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| ServiceError::Io(e.to_string()))?;
            Some(Arc::new(Mutex::new(Box::new(std::io::BufWriter::new(f)))))
        }
        None => None,
    };

    let mut report = ServeReport::default();
    let mut queue: VecDeque<usize> = (0..corpus.len()).collect();
    while !queue.is_empty() {
        if opts.max_sessions.is_some_and(|m| report.sessions >= m) {
            break;
        }
        let (stream, _) = listener.accept().map_err(|e| ServiceError::Io(e.to_string()))?;
        report.sessions += 1;
        let mut conn =
            Connection::new(stream, opts.timing, transcript.clone()).map_err(|e| ServiceError::Io(e.to_string()))?;
        while let Some(&idx) = queue.front() {
            let test = &corpus[idx];
            let position = corpus.len() - queue.len();
            let mut pacer: Box<dyn Pacer> = if opts.lockstep {
                Box::new(Unpaced)
            } else {
                Box::new(RealTime::new(opts.speedup))
            };
            let (exec, answers) = {
                let mut agent = LiveSession::new(&mut conn, space, position, corpus.len(), opts.lockstep);
                let exec = execute_test(test, space, &mut agent, pacer.as_mut(), &opts.exec)?;
                (exec, std::mem::take(&mut agent.answers))
            };
            let bp = blueprints
                .get(&test.mission, test.environment.wind_or_calm())
                .expect("blueprint computed above");
            let row = evaluate(test, &exec, bp, &opts.thresholds);
            let outcome = SessionOutcome {
                row,
                execution: exec,
                answers,
            };
            if outcome.execution.aborted.is_some() {
                report.aborted.push(outcome);
                break;
            }
            let result = TestResult::new(&outcome.row, &outcome.execution);
            let ts = outcome.execution.log.duration();
            report.completed.push(outcome);
            queue.pop_front();
            if conn.send(Body::TestResult(result), ts).is_err() {
                break;
            }
        }
        report.protocol_errors.append(&mut conn.protocol_errors);
        conn.close();
    }
    report.pending = queue.iter().map(|&i| corpus[i].test_id.clone()).collect();
    if let Some(t) = &transcript {
        if let Ok(mut w) = t.lock() {
            let _ = w.flush();
        }
    }
    Ok(report)
}
