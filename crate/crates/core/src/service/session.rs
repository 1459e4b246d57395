use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::model::{FuzzSpace, FuzzTest};
use crate::runner::{Agent, AgentControl, AgentError, HitPrompt, TestExecution};
use crate::simulator::{ControlKind, Event, Sample};

use super::protocol::{
    Answer, Body, ControlMsg, Direction, Heartbeat, Precheck, Prompt, Question, RoleNotice, SessionMessage, Telemetry,
};

/// Shared transcript sink; every message in either direction is appended as one line.
pub type Transcript = Arc<Mutex<Box<dyn Write + Send>>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    /// The server sends a heartbeat this often.
    pub heartbeat_interval: Duration,
    /// The session is dropped after this long without hearing from the console.
    pub heartbeat_timeout: Duration,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            heartbeat_interval: Duration::from_secs(5),
            heartbeat_timeout: Duration::from_secs(30),
        }
    }
}

enum Inbound {
    Line(String),
    Closed,
}

/// One console connection: framed writes, a reader thread, sequence and liveness tracking.
pub struct Connection {
    stream: TcpStream,
    inbox: Receiver<Inbound>,
    out_seq: u64,
    in_seq: u64,
    last_heard: Instant,
    last_sent: Instant,
    timing: Timing,
    transcript: Option<Transcript>,
    closed: bool,
    pub protocol_errors: Vec<String>,
}

impl Connection {
    pub fn new(stream: TcpStream, timing: Timing, transcript: Option<Transcript>) -> std::io::Result<Connection> {
        let read_half = stream.try_clone()?;
        stream.set_nodelay(true)?;
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(read_half);
            for line in reader.lines() {
                match line {
                    Ok(l) => {
                        if tx.send(Inbound::Line(l)).is_err() {
                            return;
                        }
                    }
                    Err(_) => break,
                }
            }
            let _ = tx.send(Inbound::Closed);
        });
        let now = Instant::now();
        Ok(Connection {
            stream,
            inbox: rx,
            out_seq: 0,
            in_seq: 0,
            last_heard: now,
            last_sent: now,
            timing,
            transcript,
            closed: false,
            protocol_errors: Vec::new(),
        })
    }

    fn record(&self, line: &str) {
        if let Some(t) = &self.transcript {
            if let Ok(mut w) = t.lock() {
                let _ = writeln!(w, "{line}");
                let _ = w.flush();
            }
        }
    }

    fn dropped(&mut self, why: &str) -> AgentError {
        self.closed = true;
        let _ = self.stream.shutdown(Shutdown::Both);
        AgentError::Unavailable(why.to_string())
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn send(&mut self, body: Body, ts: f64) -> Result<(), AgentError> {
        if self.closed {
            return Err(AgentError::Unavailable("session closed".into()));
        }
        self.out_seq += 1;
        let line = SessionMessage {
            seq: self.out_seq,
            dir: Direction::ToConsole,
            ts,
            body,
        }
        .encode();
        let ok = self.stream.write_all(line.as_bytes()).and_then(|_| self.stream.write_all(b"\n"));
        if ok.is_err() {
            return Err(self.dropped("connection lost while sending"));
        }
        self.record(&line);
        self.last_sent = Instant::now();
        Ok(())
    }

    fn accept_line(&mut self, line: &str) -> Option<SessionMessage> {
        match SessionMessage::decode(line) {
            Ok(m) if m.dir != Direction::FromConsole => {
                self.protocol_errors.push(format!("message {} has direction to_console", m.seq));
                None
            }
            Ok(m) if m.seq <= self.in_seq => {
                self.protocol_errors.push(format!("sequence {} does not follow {}", m.seq, self.in_seq));
                None
            }
            Ok(m) => {
                self.in_seq = m.seq;
                self.record(&m.encode());
                Some(m)
            }
            Err(e) => {
                self.protocol_errors.push(e.to_string());
                None
            }
        }
    }

    /// Next valid message from the console. With `block` false, returns `None` when nothing is queued.
    pub fn recv(&mut self, ts: f64, block: bool) -> Result<Option<SessionMessage>, AgentError> {
        loop {
            if self.closed {
                return Err(AgentError::Unavailable("session closed".into()));
            }
            if self.last_sent.elapsed() >= self.timing.heartbeat_interval {
                self.send(Body::Heartbeat(Heartbeat {}), ts)?;
            }
            let silent = self.last_heard.elapsed();
            if silent >= self.timing.heartbeat_timeout {
                return Err(self.dropped("heartbeat timeout"));
            }
            let item = if block {
                let wait = (self.timing.heartbeat_timeout - silent)
                    .min(self.timing.heartbeat_interval.saturating_sub(self.last_sent.elapsed()))
                    .max(Duration::from_millis(1));
                match self.inbox.recv_timeout(wait) {
                    Ok(i) => i,
                    Err(RecvTimeoutError::Timeout) => continue,
                    Err(RecvTimeoutError::Disconnected) => Inbound::Closed,
                }
            } else {
                match self.inbox.try_recv() {
                    Ok(i) => i,
                    Err(mpsc::TryRecvError::Empty) => return Ok(None),
                    Err(mpsc::TryRecvError::Disconnected) => Inbound::Closed,
                }
            };
            match item {
                Inbound::Closed => return Err(self.dropped("connection closed by console")),
                Inbound::Line(l) if l.trim().is_empty() => continue,
                Inbound::Line(l) => {
                    if let Some(m) = self.accept_line(&l) {
                        self.last_heard = Instant::now();
                        return Ok(Some(m));
                    }
                }
            }
        }
    }

    pub fn close(&mut self) {
        self.closed = true;
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}

/// Questions asked at the end of every live test.
pub fn awareness_questions(test_id: &str, space: &FuzzSpace) -> Vec<Question> {
    vec![
        Question {
            test_id: test_id.to_string(),
            question_id: "final_mode".into(),
            text: "Which flight mode was the vehicle in when the test ended?".into(),
            choices: space.modes.iter().map(|m| m.to_string()).collect(),
        },
        Question {
            test_id: test_id.to_string(),
            question_id: "anomaly".into(),
            text: "Did you notice anything unexpected during the flight?".into(),
            choices: vec!["no".into(), "yes".into()],
        },
    ]
}

/// Agent backed by a live console: prompts go out as messages, whatever the human does comes back as controls.
pub struct LiveSession<'c> {
    conn: &'c mut Connection,
    space: &'c FuzzSpace,
    test_id: String,
    index: usize,
    total: usize,
    /// Each Go is answered by exactly one Control or Heartbeat before the tick proceeds.
    lockstep: bool,
    awaiting: usize,
    time: f64,
    pending: VecDeque<AgentControl>,
    pub answers: Vec<Answer>,
}

impl<'c> LiveSession<'c> {
    pub fn new(conn: &'c mut Connection, space: &'c FuzzSpace, index: usize, total: usize, lockstep: bool) -> Self {
        LiveSession {
            conn,
            space,
            test_id: String::new(),
            index,
            total,
            lockstep,
            awaiting: 0,
            time: 0.0,
            pending: VecDeque::new(),
            answers: Vec::new(),
        }
    }

    fn prompt(&self, p: &HitPrompt<'_>) -> Prompt {
        Prompt {
            test_id: self.test_id.clone(),
            role: p.role.to_string(),
            hit_id: p.hit.id.clone(),
            index: p.index,
            task: p.hit.task,
            precondition_mode: p.hit.precondition_mode,
            precondition_state: p.hit.precondition_state,
            expected: ControlKind::for_task(p.hit.task),
        }
    }

    /// Handles a message that arrived mid-test. Returns true for a Go reply.
    fn absorb(&mut self, m: SessionMessage) -> bool {
        match m.body {
            Body::Control(ControlMsg { role, control }) => {
                self.pending.push_back(AgentControl { role, control });
                true
            }
            Body::Heartbeat(_) => true,
            _ => false,
        }
    }
}

impl Agent for LiveSession<'_> {
    fn begin(&mut self, test: &FuzzTest) -> Result<(), AgentError> {
        self.test_id = test.test_id.clone();
        self.time = 0.0;
        self.pending.clear();
        self.answers.clear();
        let precheck = Precheck::for_test(test, self.space, self.index, self.total);
        self.conn.send(Body::Precheck(precheck), 0.0)?;
        let mut waiting: Vec<&str> = test.roles.iter().map(|r| r.role.as_str()).collect();
        while !waiting.is_empty() {
            let Some(m) = self.conn.recv(0.0, true)? else {
                continue;
            };
            match m.body {
                Body::RoleAck(a) if a.test_id == self.test_id => waiting.retain(|r| *r != a.role),
                Body::Control(ControlMsg { role, control }) => self.pending.push_back(AgentControl { role, control }),
                _ => {}
            }
        }
        Ok(())
    }

    fn plan(&mut self, p: &HitPrompt<'_>) -> Result<(), AgentError> {
        let prompt = self.prompt(p);
        self.conn.send(Body::Plan(prompt), p.time)
    }

    fn go(&mut self, p: &HitPrompt<'_>) -> Result<(), AgentError> {
        let prompt = self.prompt(p);
        self.conn.send(Body::Go(prompt), p.time)?;
        if self.lockstep {
            self.awaiting += 1;
        }
        Ok(())
    }

    fn poll(&mut self, now: f64) -> Result<Vec<AgentControl>, AgentError> {
        self.time = now;
        while let Some(m) = self.conn.recv(now, false)? {
            if self.absorb(m) && self.awaiting > 0 {
                self.awaiting -= 1;
            }
        }
        while self.awaiting > 0 {
            if let Some(m) = self.conn.recv(now, true)? {
                if self.absorb(m) {
                    self.awaiting -= 1;
                }
            }
        }
        Ok(self.pending.drain(..).collect())
    }

    fn no_more_tasks(&mut self, role: &str, time: f64) -> Result<(), AgentError> {
        let notice = RoleNotice {
            test_id: self.test_id.clone(),
            role: role.to_string(),
        };
        self.conn.send(Body::NoMoreTasks(notice), time)
    }

    fn telemetry(&mut self, sample: &Sample, events: &[Event]) -> Result<(), AgentError> {
        self.time = sample.t;
        let t = Telemetry::from_sample(&self.test_id, sample, events);
        self.conn.send(Body::Telemetry(t), sample.t)
    }

    fn finish(&mut self, exec: &TestExecution) -> Result<(), AgentError> {
        let ts = exec.log.duration();
        let questions = awareness_questions(&self.test_id, self.space);
        let mut open: Vec<String> = questions.iter().map(|q| q.question_id.clone()).collect();
        for q in questions {
            self.conn.send(Body::AwarenessQuestion(q), ts)?;
        }
        while !open.is_empty() {
            let Some(m) = self.conn.recv(ts, true)? else {
                continue;
            };
            if let Body::AwarenessAnswer(a) = m.body {
                if a.test_id == self.test_id && open.contains(&a.question_id) {
                    open.retain(|q| *q != a.question_id);
                    self.answers.push(a);
                }
            }
        }
        Ok(())
    }
}
