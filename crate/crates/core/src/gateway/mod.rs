//! Gateways between test levels: clustering and downselection of L1 results, and the safety ledger that gates field testing.

use std::collections::BTreeMap;

use crate::oracle::{OutcomeRecord, ProfileRow, TestOutcomeKind};

mod cluster;
mod ledger;
mod select;

pub use cluster::{choose_k_elbow, group_by_key, kmeans, kmeans_nested, seed_centroids, ClusterModel, MAX_ITERATIONS};
pub use ledger::{
    ledger_gate, parse_entry, Criticality, GateReport, GateVerdict, LedgerEntry, LedgerError, Mitigation,
    MitigationKind, MitigationStatus, RootCause,
};
pub use select::{edge_eligible, percentile, zscore_select, Budget, Candidate, Selection};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("no records to cluster")]
    Empty,
    #[error("k must be between 1 and {n}, got {k}")]
    BadK { k: usize, n: usize },
    #[error("bad k range {0}")]
    Range(String),
    #[error("budget {max} is below the {clusters} non-empty clusters")]
    BudgetInfeasible { max: usize, clusters: usize },
    #[error("budget {0} is not of the form N or MIN:MAX")]
    BadBudget(String),
    #[error("only {available} tests available for a minimum budget of {min}")]
    NotEnoughTests { available: usize, min: usize },
}

/// Profiles smaller than this are grouped by test type instead of clustered.
pub const SMALL_CORPUS: usize = 40;

pub const FEATURE_NAMES: [&str; 7] = [
    "max_dev",
    "max_alt",
    "duration_s",
    "landed",
    "freefall",
    "msn_comp",
    "final_disarm",
];

/// Raw outcome features with booleans as 0/1.
pub fn feature_vector(r: &OutcomeRecord) -> Vec<f64> {
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    vec![
        r.max_deviation,
        r.max_altitude,
        r.duration,
        b(r.landed),
        b(r.freefall),
        b(r.mission_complete),
        b(r.final_disarm),
    ]
}

/// Per-column z-score transform fitted on a data set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; constant columns use 1.
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Standardizer {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; d];
        for r in rows {
            for ((s, x), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if !(*s > 1e-12) {
                *s = 1.0;
            }
        }
        Standardizer { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

/// How many clusters to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    /// Elbow over 1..=max.
    Auto { max: usize },
    Fixed(usize),
}

impl std::str::FromStr for KChoice {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KChoice::Auto { max: 12 });
        }
        s.parse::<usize>()
            .ok()
            .filter(|&k| k >= 1)
            .map(KChoice::Fixed)
            .ok_or_else(|| GatewayError::Range(s.to_string()))
    }
}

/// Clustering of a profile plus the data it was fitted on.
#[derive(Debug, Clone)]
pub struct ProfileModel {
    pub scaling: Standardizer,
    pub points: Vec<Vec<f64>>,
    pub model: ClusterModel,
    /// Grouped by test type because the profile was small.
    pub grouped: bool,
}

fn task_type(row: &ProfileRow) -> &'static str {
    if row.kill_switch {
        "KILL-MOTORS"
    } else if row.switch_mode != "-" {
        "CHANGE-MODE"
    } else if row.throttle_move != "-" {
        "MOVE-THROTTLE"
    } else {
        "NONE"
    }
}

/// Clusters a profile's outcomes; small profiles are grouped by (task kind, geofence status).
pub fn cluster_profile(rows: &[ProfileRow], k: KChoice, seed: u64) -> Result<ProfileModel, GatewayError> {
    if rows.is_empty() {
        return Err(GatewayError::Empty);
    }
    let raw: Vec<Vec<f64>> = rows.iter().map(|r| feature_vector(&r.record)).collect();
    let scaling = Standardizer::fit(&raw);
    let points = scaling.apply_all(&raw);
    if rows.len() < SMALL_CORPUS {
        let keys: Vec<String> = rows.iter().map(|r| format!("{}/{}", task_type(r), r.gf)).collect();
        let model = group_by_key(&points, &keys);
        return Ok(ProfileModel {
            scaling,
            points,
            model,
            grouped: true,
        });
    }
    let model = match k {
        KChoice::Fixed(k) => kmeans_nested(&points, k, seed)?.pop().expect("k >= 1"),
        KChoice::Auto { max } => {
            let max = max.clamp(1, rows.len());
            let mut models = kmeans_nested(&points, max, seed)?;
            let wcss: Vec<f64> = models.iter().map(|m| m.wcss).collect();
            let k = cluster::elbow_from_curve(1, &wcss);
            models.swap_remove(k - 1)
        }
    };
    Ok(ProfileModel {
        scaling,
        points,
        model,
        grouped: false,
    })
}

/// Writes cluster indices into the profile rows.
pub fn assign_clusters(rows: &mut [ProfileRow], model: &ClusterModel) {
    for (r, &c) in rows.iter_mut().zip(&model.assignments) {
        r.cluster = Some(c);
    }
}

/// Clusters, labels and downselects a profile in one pass.
pub fn downselect(
    rows: &mut [ProfileRow],
    k: KChoice,
    seed: u64,
    budget: Budget,
) -> Result<(ProfileModel, Selection), GatewayError> {
    let pm = cluster_profile(rows, k, seed)?;
    assign_clusters(rows, &pm.model);
    let candidates: Vec<Candidate> = rows
        .iter()
        .map(|r| Candidate {
            test_id: r.record.test_id.clone(),
            abnormal: r.record.label == TestOutcomeKind::ValidAbnormal,
        })
        .collect();
    let selection = zscore_select(&pm.model, &pm.points, &candidates, budget)?;
    Ok((pm, selection))
}

/// Count of rows per outcome label.
pub fn outcome_counts(rows: &[ProfileRow]) -> BTreeMap<TestOutcomeKind, usize> {
    let mut out = BTreeMap::new();
    for r in rows {
        *out.entry(r.record.label).or_insert(0) += 1;
    }
    out
}
