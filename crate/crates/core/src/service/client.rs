use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};

use crate::model::Mode;
use crate::simulator::ControlKind;

use super::protocol::{Answer, Body, ControlMsg, Direction, Heartbeat, Prompt, RoleAck, SessionMessage};

/// A console stand-in for tests: acknowledges prechecks, answers every Go and every awareness question.
pub struct ScriptedClient {
    /// Acknowledge prechecks and heartbeats. A client that does not is silent.
    pub ack: bool,
    /// Disconnect on receiving this many Go prompts (counted from 1).
    pub drop_after_go: Option<usize>,
    /// Control performed for a Go; `None` replies with a heartbeat instead.
    pub respond: fn(&Prompt) -> Option<ControlKind>,
}

fn exact(p: &Prompt) -> Option<ControlKind> {
    Some(p.expected)
}

impl Default for ScriptedClient {
    fn default() -> Self {
        ScriptedClient::exact()
    }
}

/// Everything a client saw and said, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClientLog {
    pub received: Vec<SessionMessage>,
    pub sent: Vec<SessionMessage>,
}

impl ClientLog {
    pub fn kinds(&self) -> Vec<&'static str> {
        self.received.iter().map(|m| m.body.kind()).collect()
    }
}

struct Sender {
    stream: TcpStream,
    seq: u64,
}

impl Sender {
    fn send(&mut self, body: Body, ts: f64, log: &mut ClientLog) -> std::io::Result<()> {
        self.seq += 1;
        let m = SessionMessage {
            seq: self.seq,
            dir: Direction::FromConsole,
            ts,
            body,
        };
        self.stream.write_all(m.encode().as_bytes())?;
        self.stream.write_all(b"\n")?;
        log.sent.push(m);
        Ok(())
    }
}

impl ScriptedClient {
    /// Performs exactly the dispatched control, immediately.
    pub fn exact() -> Self {
        ScriptedClient {
            ack: true,
            drop_after_go: None,
            respond: exact,
        }
    }

    /// Connects and talks until the server closes the connection.
    pub fn run<A: ToSocketAddrs>(&self, addr: A) -> std::io::Result<ClientLog> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        let mut tx = Sender { stream, seq: 0 };
        let mut log = ClientLog::default();
        let mut gos = 0;
        let mut last_mode: Option<Mode> = None;
        for line in reader.lines() {
            let Ok(line) = line else { break };
            let Ok(m) = SessionMessage::decode(&line) else {
                continue;
            };
            let ts = m.ts;
            log.received.push(m.clone());
            match m.body {
                Body::Precheck(p) if self.ack => {
                    for r in &p.roles {
                        let ack = RoleAck {
                            test_id: p.test_id.clone(),
                            role: r.role.clone(),
                        };
                        tx.send(Body::RoleAck(ack), ts, &mut log)?;
                    }
                }
                Body::Go(p) => {
                    gos += 1;
                    if self.drop_after_go == Some(gos) {
                        let _ = tx.stream.shutdown(Shutdown::Both);
                        return Ok(log);
                    }
                    let body = match (self.respond)(&p) {
                        Some(control) => Body::Control(ControlMsg { role: p.role, control }),
                        None => Body::Heartbeat(Heartbeat {}),
                    };
                    tx.send(body, ts, &mut log)?;
                }
                Body::Telemetry(t) => last_mode = Some(t.mode),
                Body::AwarenessQuestion(q) if self.ack => {
                    let answer = last_mode
                        .map(|m| m.to_string())
                        .filter(|m| q.choices.contains(m))
                        .or_else(|| q.choices.first().cloned())
                        .unwrap_or_default();
                    let a = Answer {
                        test_id: q.test_id,
                        question_id: q.question_id,
                        answer,
                    };
                    tx.send(Body::AwarenessAnswer(a), ts, &mut log)?;
                }
                Body::Heartbeat(_) if self.ack => tx.send(Body::Heartbeat(Heartbeat {}), ts, &mut log)?,
                _ => {}
            }
        }
        Ok(log)
    }
}
