//! FlightLog record format.
//!
//! Tab-separated, one record per line, stable field order:
//!
//! ```text
//! #FLIGHTLOG  1  mission=<id>  wind=<label>  dt=<seconds>
//! S  t  x  y  z  vx  vy  vz  mode  lifecycle  armed  motors_on
//! E  t  KIND  detail
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing a
//! written log yields bit-identical values. Events are written before the
//! sample of the same tick.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::model::{Lifecycle, Mode};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub pos: [f64; 3],
    pub vel: [f64; 3],
    pub mode: Mode,
    pub lifecycle: Lifecycle,
    pub armed: bool,
    pub motors_on: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    ManualControl,
    ModeChange,
    Armed,
    ArmDenied,
    Disarmed,
    TakeoffComplete,
    WaypointReached,
    Breach,
    FailsafeAction,
    Freefall,
    Touchdown,
    HardLanding,
    EarlyLanding,
    MissionComplete,
    FlyAway,
    Timeout,
}

impl EventKind {
    pub const ALL: [EventKind; 16] = [
        EventKind::ManualControl,
        EventKind::ModeChange,
        EventKind::Armed,
        EventKind::ArmDenied,
        EventKind::Disarmed,
        EventKind::TakeoffComplete,
        EventKind::WaypointReached,
        EventKind::Breach,
        EventKind::FailsafeAction,
        EventKind::Freefall,
        EventKind::Touchdown,
        EventKind::HardLanding,
        EventKind::EarlyLanding,
        EventKind::MissionComplete,
        EventKind::FlyAway,
        EventKind::Timeout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ManualControl => "ManualControl",
            EventKind::ModeChange => "ModeChange",
            EventKind::Armed => "Armed",
            EventKind::ArmDenied => "ArmDenied",
            EventKind::Disarmed => "Disarmed",
            EventKind::TakeoffComplete => "TakeoffComplete",
            EventKind::WaypointReached => "WaypointReached",
            EventKind::Breach => "Breach",
            EventKind::FailsafeAction => "FailsafeAction",
            EventKind::Freefall => "Freefall",
            EventKind::Touchdown => "Touchdown",
            EventKind::HardLanding => "HardLanding",
            EventKind::EarlyLanding => "EarlyLanding",
            EventKind::MissionComplete => "MissionComplete",
            EventKind::FlyAway => "FlyAway",
            EventKind::Timeout => "Timeout",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = LogParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| LogParseError::new(0, format!("unknown event kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("flight log line {line}: {message}")]
pub struct LogParseError {
    pub line: usize,
    pub message: String,
}

impl LogParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        LogParseError {
            line,
            message: message.into(),
        }
    }
}

/// Timestamped trajectory plus event stream of one simulated mission.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlightLog {
    pub mission: String,
    pub wind: String,
    pub dt: f64,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

impl FlightLog {
    pub fn new(mission: impl Into<String>, wind: impl Into<String>, dt: f64) -> Self {
        FlightLog {
            mission: mission.into(),
            wind: wind.into(),
            dt,
            samples: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        self.samples.iter().map(|s| s.pos).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn max_altitude(&self) -> f64 {
        self.samples.iter().map(|s| s.pos[2]).fold(0.0, f64::max)
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn write_to(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "#FLIGHTLOG\t{FORMAT_VERSION}\tmission={}\twind={}\tdt={}",
            self.mission, self.wind, self.dt
        );
        let mut events = self.events.iter().peekable();
        for s in &self.samples {
            while let Some(e) = events.next_if(|e| e.t <= s.t) {
                write_event(out, e);
            }
            let _ = writeln!(
                out,
                "S\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                s.t,
                s.pos[0],
                s.pos[1],
                s.pos[2],
                s.vel[0],
                s.vel[1],
                s.vel[2],
                s.mode,
                s.lifecycle,
                s.armed as u8,
                s.motors_on as u8
            );
        }
        for e in events {
            write_event(out, e);
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.samples.len() * 96);
        self.write_to(&mut s);
        s
    }

    pub fn parse(text: &str) -> Result<FlightLog, LogParseError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| LogParseError::new(1, "empty log"))?;
        let mut fields = header.split('\t');
        if fields.next() != Some("#FLIGHTLOG") {
            return Err(LogParseError::new(1, "missing #FLIGHTLOG header"));
        }
        match fields.next().map(str::parse::<u32>) {
            Some(Ok(FORMAT_VERSION)) => {}
            _ => return Err(LogParseError::new(1, "unsupported format version")),
        }
        let mut log = FlightLog::default();
        for f in fields {
            match f.split_once('=') {
                Some(("mission", v)) => log.mission = v.to_string(),
                Some(("wind", v)) => log.wind = v.to_string(),
                Some(("dt", v)) => log.dt = v.parse().map_err(|_| LogParseError::new(1, "bad dt"))?,
                _ => return Err(LogParseError::new(1, format!("unknown header field `{f}`"))),
            }
        }
        for (i, line) in lines {
            let n = i + 1;
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| LogParseError::new(n, format!("bad number `{s}`")));
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(LogParseError::new(n, format!("bad flag `{s}`"))),
            };
            match cols[0] {
                "S" if cols.len() == 12 => log.samples.push(Sample {
                    t: num(cols[1])?,
                    pos: [num(cols[2])?, num(cols[3])?, num(cols[4])?],
                    vel: [num(cols[5])?, num(cols[6])?, num(cols[7])?],
                    mode: cols[8].parse().map_err(|e| LogParseError::new(n, format!("{e}")))?,
                    lifecycle: cols[9].parse().map_err(|e| LogParseError::new(n, format!("{e}")))?,
                    armed: flag(cols[10])?,
                    motors_on: flag(cols[11])?,
                }),
                "E" if cols.len() >= 3 => log.events.push(Event {
                    t: num(cols[1])?,
                    kind: cols[2].parse().map_err(|e: LogParseError| LogParseError::new(n, e.message))?,
                    detail: cols.get(3).copied().unwrap_or("").to_string(),
                }),
                _ => return Err(LogParseError::new(n, "malformed record")),
            }
        }
        Ok(log)
    }
}

fn write_event(out: &mut String, e: &Event) {
    let _ = writeln!(out, "E\t{}\t{}\t{}", e.t, e.kind, e.detail.replace(['\t', '\n'], " "));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, z: f64) -> Sample {
        Sample {
            t,
            pos: [0.1 + 0.2, -3.0e-17, z],
            vel: [1.0 / 3.0, 0.0, -9.81],
            mode: Mode::AutoRtl,
            lifecycle: Lifecycle::Fly,
            armed: true,
            motors_on: false,
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut log = FlightLog::new("BASIC-WAYPOINTS", "MEDIUM NORTH", 0.1);
        log.samples.push(sample(0.0, 0.0));
        log.events.push(Event {
            t: 0.1,
            kind: EventKind::Breach,
            detail: "predicted".into(),
        });
        log.samples.push(sample(0.1, 12.345678901234567));
        log.events.push(Event {
            t: 0.2,
            kind: EventKind::Timeout,
            detail: String::new(),
        });
        let text = log.to_text();
        let back = FlightLog::parse(&text).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.to_text(), text);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[2].starts_with("E\t0.1\tBreach"));
        assert!(lines[3].starts_with("S\t0.1\t"));
    }

    #[test]
    fn malformed_lines_are_rejected_with_line_numbers() {
        let text = "#FLIGHTLOG\t1\tmission=M\twind=NONE\tdt=0.1\nS\t0\t1\n";
        let err = FlightLog::parse(text).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(FlightLog::parse("hello").is_err());
    }
}
