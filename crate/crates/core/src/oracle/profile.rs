//! Result profile CSV: one row per executed test.

use std::io::{Read, Write};

use crate::model::{FuzzTest, Task};

use super::{OutcomeRecord, TestOutcomeKind};

pub const HEADER: [&str; 21] = [
    "test_id",
    "mode",
    "msn_state",
    "gf",
    "gf_pred",
    "gf_act",
    "wind",
    "switch_mode",
    "kill_switch",
    "throttle_pos",
    "throttle_move",
    "max_dev",
    "max_alt",
    "duration_s",
    "landed",
    "msn_comp",
    "freefall",
    "final_disarm",
    "touchdown_speed",
    "outcome",
    "cluster",
];

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("profile csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("profile row {row}: {message}")]
    Field { row: usize, message: String },
}

/// Test parameters (preconditions, configuration, actions) plus outcome features.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub mode: String,
    pub msn_state: String,
    pub gf: String,
    pub gf_pred: String,
    pub gf_act: String,
    pub wind: String,
    pub switch_mode: String,
    pub kill_switch: bool,
    pub throttle_pos: String,
    pub throttle_move: String,
    pub record: OutcomeRecord,
    pub cluster: Option<usize>,
}

fn joined<I: Iterator<Item = String>>(items: I) -> String {
    let v: Vec<String> = items.collect();
    if v.is_empty() {
        "-".to_string()
    } else {
        v.join("|")
    }
}

impl ProfileRow {
    pub fn from_test(test: &FuzzTest, record: OutcomeRecord) -> ProfileRow {
        let cfg = test.primary_config();
        let first = test.hits().next().map(|(_, h)| h);
        let tasks: Vec<Task> = test.hits().map(|(_, h)| h.task).collect();
        ProfileRow {
            mode: first.map_or("-".into(), |h| h.precondition_mode.to_string()),
            msn_state: first.map_or("-".into(), |h| h.precondition_state.to_string()),
            gf: cfg.geofence_status.to_string(),
            gf_pred: cfg.geofence_prediction.to_string(),
            gf_act: cfg.geofence_action.to_string(),
            wind: test.environment.wind_or_calm().label(),
            switch_mode: joined(tasks.iter().filter_map(|t| t.induced_mode()).map(|m| m.to_string())),
            kill_switch: tasks.contains(&Task::KillMotors),
            throttle_pos: cfg.throttle.to_string(),
            throttle_move: joined(tasks.iter().filter_map(|t| match t {
                Task::MoveThrottle(p) => Some(p.to_string()),
                _ => None,
            })),
            record,
            cluster: None,
        }
    }

    pub fn test_id(&self) -> &str {
        &self.record.test_id
    }

    pub fn outcome(&self) -> TestOutcomeKind {
        self.record.label
    }

    fn fields(&self) -> Vec<String> {
        let b = |v: bool| if v { "TRUE" } else { "FALSE" }.to_string();
        let r = &self.record;
        vec![
            r.test_id.clone(),
            self.mode.clone(),
            self.msn_state.clone(),
            self.gf.clone(),
            self.gf_pred.clone(),
            self.gf_act.clone(),
            self.wind.clone(),
            self.switch_mode.clone(),
            b(self.kill_switch),
            self.throttle_pos.clone(),
            self.throttle_move.clone(),
            r.max_deviation.to_string(),
            r.max_altitude.to_string(),
            r.duration.to_string(),
            b(r.landed),
            b(r.mission_complete),
            b(r.freefall),
            b(r.final_disarm),
            r.touchdown_speed.to_string(),
            r.label.to_string(),
            self.cluster.map_or(String::new(), |c| c.to_string()),
        ]
    }

    fn from_fields(row: usize, f: &csv::StringRecord) -> Result<ProfileRow, ProfileError> {
        let err = |message: String| ProfileError::Field { row, message };
        if f.len() != HEADER.len() {
            return Err(err(format!("expected {} columns, found {}", HEADER.len(), f.len())));
        }
        let num = |i: usize| {
            f[i].parse::<f64>()
                .map_err(|_| err(format!("{} is not a number: `{}`", HEADER[i], &f[i])))
        };
        let flag = |i: usize| match &f[i] {
            "TRUE" => Ok(true),
            "FALSE" => Ok(false),
            other => Err(err(format!("{} must be TRUE or FALSE, got `{other}`", HEADER[i]))),
        };
        let label: TestOutcomeKind = f[19].parse().map_err(err)?;
        let cluster = match &f[20] {
            "" => None,
            c => Some(c.parse().map_err(|_| err(format!("bad cluster `{c}`")))?),
        };
        Ok(ProfileRow {
            mode: f[1].to_string(),
            msn_state: f[2].to_string(),
            gf: f[3].to_string(),
            gf_pred: f[4].to_string(),
            gf_act: f[5].to_string(),
            wind: f[6].to_string(),
            switch_mode: f[7].to_string(),
            kill_switch: flag(8)?,
            throttle_pos: f[9].to_string(),
            throttle_move: f[10].to_string(),
            record: OutcomeRecord {
                test_id: f[0].to_string(),
                max_deviation: num(11)?,
                max_altitude: num(12)?,
                duration: num(13)?,
                landed: flag(14)?,
                mission_complete: flag(15)?,
                freefall: flag(16)?,
                final_disarm: flag(17)?,
                touchdown_speed: num(18)?,
                untested: label == TestOutcomeKind::InvalidUntested,
                label,
            },
            cluster,
        })
    }
}

pub fn write_profile<W: Write>(out: W, rows: &[ProfileRow]) -> Result<(), ProfileError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_profile<R: Read>(input: R) -> Result<Vec<ProfileRow>, ProfileError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(ProfileError::Field {
            row: 0,
            message: format!("unexpected header, expected {}", HEADER.join(",")),
        });
    }
    rd.records()
        .enumerate()
        .map(|(i, rec)| ProfileRow::from_fields(i + 1, &rec?))
        .collect()
}
