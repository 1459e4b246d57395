//! Flight-log assessment: blueprint deviation, feature extraction and labeling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::simulator::{EventKind, FlightLog};

mod profile;

pub use profile::{read_profile, write_profile, ProfileError, ProfileRow};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("empty flight log")]
    EmptyLog,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestOutcomeKind {
    ValidNominal,
    ValidAbnormal,
    InvalidUntested,
    /// Live session lost mid-test; excluded from clustering.
    Aborted,
}

impl TestOutcomeKind {
    pub const ALL: [TestOutcomeKind; 4] = [
        TestOutcomeKind::ValidNominal,
        TestOutcomeKind::ValidAbnormal,
        TestOutcomeKind::InvalidUntested,
        TestOutcomeKind::Aborted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TestOutcomeKind::ValidNominal => "VALID-NOMINAL",
            TestOutcomeKind::ValidAbnormal => "VALID-ABNORMAL",
            TestOutcomeKind::InvalidUntested => "INVALID-UNTESTED",
            TestOutcomeKind::Aborted => "ABORTED",
        }
    }

    pub fn is_valid(self) -> bool {
        matches!(self, TestOutcomeKind::ValidNominal | TestOutcomeKind::ValidAbnormal)
    }
}

impl fmt::Display for TestOutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestOutcomeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TestOutcomeKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown outcome `{s}`"))
    }
}

impl Serialize for TestOutcomeKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for TestOutcomeKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub deviation_limit: f64,
    pub altitude_limit: f64,
    pub duration_factor: f64,
    pub hard_landing_speed: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            deviation_limit: 5.0,
            altitude_limit: 20.0,
            duration_factor: 2.0,
            hard_landing_speed: 2.0,
        }
    }
}

impl Thresholds {
    pub fn check(&self) -> Result<(), OracleError> {
        let all = [
            ("deviation_limit", self.deviation_limit),
            ("altitude_limit", self.altitude_limit),
            ("duration_factor", self.duration_factor),
            ("hard_landing_speed", self.hard_landing_speed),
        ];
        match all.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            Some((name, v)) => Err(OracleError::InvalidThresholds(format!("{name} must be positive, got {v}"))),
            None => Ok(()),
        }
    }
}

/// Per-test features extracted from a flight log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub test_id: String,
    pub max_deviation: f64,
    pub max_altitude: f64,
    pub duration: f64,
    pub landed: bool,
    pub freefall: bool,
    pub mission_complete: bool,
    pub final_disarm: bool,
    /// Largest vertical speed at ground contact, zero if the vehicle never touched down.
    pub touchdown_speed: f64,
    /// The runner could not perform every HIT.
    pub untested: bool,
    pub label: TestOutcomeKind,
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    dx * dx + dy * dy + dz * dz
}

/// Directed Hausdorff distance: max over `from` of the distance to the nearest point of `to`.
///
/// `to` is sorted by x and scanned outward from each query's x position; a query
/// stops as soon as it finds a point closer than the running maximum.
pub fn directed_hausdorff(from: &[[f64; 3]], to: &[[f64; 3]]) -> f64 {
    if from.is_empty() || to.is_empty() {
        return 0.0;
    }
    let mut sorted: Vec<[f64; 3]> = to.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut cmax2 = 0.0_f64;
    for a in from {
        let start = sorted.partition_point(|p| p[0] < a[0]);
        let mut cmin2 = f64::INFINITY;
        let (mut lo, mut hi) = (start, start);
        loop {
            let left = (lo > 0).then(|| a[0] - sorted[lo - 1][0]);
            let right = (hi < sorted.len()).then(|| sorted[hi][0] - a[0]);
            let (idx, dx) = match (left, right) {
                (None, None) => break,
                (Some(l), Some(r)) if l <= r => (lo - 1, l),
                (Some(l), None) => (lo - 1, l),
                (_, Some(r)) => (hi, r),
            };
            if dx * dx >= cmin2 {
                break;
            }
            if idx < lo {
                lo -= 1;
            } else {
                hi += 1;
            }
            let d2 = dist2(a, &sorted[idx]);
            if d2 < cmin2 {
                cmin2 = d2;
                if cmin2 < cmax2 {
                    break;
                }
            }
        }
        if cmin2 > cmax2 {
            cmax2 = cmin2;
        }
    }
    cmax2.sqrt()
}

/// Largest distance from any blueprint position to the nearest position of `log`.
pub fn max_deviation(blueprint: &FlightLog, log: &FlightLog) -> Result<f64, OracleError> {
    if blueprint.samples.is_empty() || log.samples.is_empty() {
        return Err(OracleError::EmptyLog);
    }
    Ok(directed_hausdorff(&blueprint.positions(), &log.positions()))
}

/// Fills every feature of an OutcomeRecord. The label is provisional (`ValidNominal`)
/// until [`classify`] runs.
pub fn extract_features(test_id: &str, log: &FlightLog, blueprint: &FlightLog) -> Result<OutcomeRecord, OracleError> {
    let max_deviation = max_deviation(blueprint, log)?;
    let last = log.last().ok_or(OracleError::EmptyLog)?;
    let touchdown_speed = log
        .events_of(EventKind::Touchdown)
        .filter_map(|e| e.detail.parse::<f64>().ok())
        .fold(0.0, f64::max);
    Ok(OutcomeRecord {
        test_id: test_id.to_string(),
        max_deviation,
        max_altitude: log.max_altitude(),
        duration: log.duration(),
        landed: log.has_event(EventKind::Touchdown) && last.pos[2] <= 0.0,
        freefall: log.has_event(EventKind::Freefall),
        mission_complete: log.has_event(EventKind::MissionComplete),
        final_disarm: log.has_event(EventKind::Disarmed) && !last.armed,
        touchdown_speed,
        untested: false,
        label: TestOutcomeKind::ValidNominal,
    })
}

/// Labels a record. Untested takes precedence over every feature.
pub fn classify(record: &OutcomeRecord, thresholds: &Thresholds, blueprint_duration: f64) -> TestOutcomeKind {
    if record.label == TestOutcomeKind::Aborted {
        return TestOutcomeKind::Aborted;
    }
    if record.untested {
        return TestOutcomeKind::InvalidUntested;
    }
    let abnormal = !record.mission_complete
        || !record.final_disarm
        || record.max_altitude > thresholds.altitude_limit
        || record.duration > thresholds.duration_factor * blueprint_duration
        || record.freefall
        || record.touchdown_speed > thresholds.hard_landing_speed
        || record.max_deviation > thresholds.deviation_limit;
    if abnormal {
        TestOutcomeKind::ValidAbnormal
    } else {
        TestOutcomeKind::ValidNominal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_directed_distance() {
        let blueprint = [[0.0, 0.0, 0.0], [0.0, 0.0, 10.0]];
        let log = [[3.0, 4.0, 0.0]];
        assert!((directed_hausdorff(&blueprint, &log) - 125f64.sqrt()).abs() < 1e-12);
        assert_eq!(directed_hausdorff(&log, &log), 0.0);
    }

    #[test]
    fn untested_overrides_nominal_features() {
        let mut r = OutcomeRecord {
            test_id: "t".into(),
            max_deviation: 0.0,
            max_altitude: 12.5,
            duration: 71.0,
            landed: true,
            freefall: false,
            mission_complete: true,
            final_disarm: true,
            touchdown_speed: 1.0,
            untested: false,
            label: TestOutcomeKind::ValidNominal,
        };
        let th = Thresholds::default();
        assert_eq!(classify(&r, &th, 71.0), TestOutcomeKind::ValidNominal);
        r.untested = true;
        assert_eq!(classify(&r, &th, 71.0), TestOutcomeKind::InvalidUntested);
    }

    #[test]
    fn thresholds_must_be_positive() {
        assert!(Thresholds::default().check().is_ok());
        let bad = Thresholds {
            altitude_limit: 0.0,
            ..Default::default()
        };
        assert!(bad.check().is_err());
    }
}
