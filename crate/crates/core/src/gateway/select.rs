use std::collections::BTreeSet;

use super::cluster::{dist2, ClusterModel};
use super::GatewayError;

/// Inclusive range of how many tests to pass on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub min: usize,
    pub max: usize,
}

impl Budget {
    pub fn new(min: usize, max: usize) -> Result<Budget, GatewayError> {
        if min == 0 || min > max {
            return Err(GatewayError::BadBudget(format!("{min}:{max}")));
        }
        Ok(Budget { min, max })
    }

    pub fn exact(n: usize) -> Result<Budget, GatewayError> {
        Budget::new(n, n)
    }
}

impl std::str::FromStr for Budget {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GatewayError::BadBudget(s.to_string());
        match s.split_once(':') {
            Some((a, b)) => Budget::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
            None => Budget::exact(s.trim().parse().map_err(|_| bad())?),
        }
        .map_err(|_| bad())
    }
}

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub test_id: String,
    pub abnormal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Selected ids in pick order.
    pub ids: Vec<String>,
    /// Cluster of each selected id.
    pub clusters: Vec<usize>,
    /// Per-point distance to its centroid and z-score within its cluster.
    pub distance: Vec<f64>,
    pub zscore: Vec<f64>,
    /// Points in the outer percentile bands of their cluster.
    pub eligible: Vec<bool>,
}

/// Linearly interpolated percentile of `values` (numpy's default rule). `p` is in [0, 100].
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Strictly below the 15th or strictly above the 85th percentile of `distances`.
pub fn edge_eligible(distances: &[f64]) -> Vec<bool> {
    let lo = percentile(distances, 15.0);
    let hi = percentile(distances, 85.0);
    distances.iter().map(|&d| d < lo || d > hi).collect()
}

/// Per-cluster picks: nearest Abnormal tests first, then outer-band members round robin, within `budget`.
pub fn zscore_select(
    model: &ClusterModel,
    points: &[Vec<f64>],
    candidates: &[Candidate],
    budget: Budget,
) -> Result<Selection, GatewayError> {
    let n = points.len();
    let distance: Vec<f64> = (0..n)
        .map(|i| dist2(&points[i], &model.centroids[model.assignments[i]]).sqrt())
        .collect();
    let mut zscore = vec![0.0; n];
    let mut eligible = vec![false; n];
    // Members per cluster sorted by (distance, id).
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); model.k];
    for i in 0..n {
        members[model.assignments[i]].push(i);
    }
    for m in &mut members {
        m.sort_by(|&a, &b| {
            distance[a]
                .total_cmp(&distance[b])
                .then_with(|| candidates[a].test_id.cmp(&candidates[b].test_id))
        });
        let d: Vec<f64> = m.iter().map(|&i| distance[i]).collect();
        if d.is_empty() {
            continue;
        }
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d.len() as f64).sqrt();
        for (&i, e) in m.iter().zip(edge_eligible(&d)) {
            zscore[i] = if sd > 0.0 { (distance[i] - mean) / sd } else { 0.0 };
            eligible[i] = e;
        }
    }

    let nonempty = members.iter().filter(|m| !m.is_empty()).count();
    if budget.max < nonempty {
        return Err(GatewayError::BudgetInfeasible {
            max: budget.max,
            clusters: nonempty,
        });
    }
    if n < budget.min {
        return Err(GatewayError::NotEnoughTests {
            available: n,
            min: budget.min,
        });
    }

    let mut picked: Vec<usize> = Vec::new();
    let mut taken: BTreeSet<usize> = BTreeSet::new();
    let mut take = |i: usize, picked: &mut Vec<usize>| {
        if taken.insert(i) {
            picked.push(i);
        }
    };

    // One representative per cluster, preferring the Abnormal test nearest the centroid.
    for m in members.iter().filter(|m| !m.is_empty()) {
        let i = m.iter().copied().find(|&i| candidates[i].abnormal).unwrap_or(m[0]);
        take(i, &mut picked);
    }
    // A second Abnormal test per cluster while room remains.
    for m in &members {
        if picked.len() >= budget.max {
            break;
        }
        if let Some(i) = m.iter().copied().filter(|&i| candidates[i].abnormal).nth(1) {
            take(i, &mut picked);
        }
    }
    // Outer-band members, most extreme first, one cluster at a time.
    let mut queues: Vec<Vec<usize>> = members
        .iter()
        .map(|m| {
            let mut q: Vec<usize> = m.iter().copied().filter(|&i| eligible[i]).collect();
            q.sort_by(|&a, &b| {
                zscore[b]
                    .abs()
                    .total_cmp(&zscore[a].abs())
                    .then_with(|| candidates[a].test_id.cmp(&candidates[b].test_id))
            });
            q.reverse();
            q
        })
        .collect();
    round_robin(&mut queues, &mut picked, budget.max, &mut take);
    if picked.len() < budget.min {
        let mut rest: Vec<Vec<usize>> = members
            .iter()
            .map(|m| m.iter().rev().copied().collect())
            .collect();
        round_robin(&mut rest, &mut picked, budget.min, &mut take);
    }

    Ok(Selection {
        ids: picked.iter().map(|&i| candidates[i].test_id.clone()).collect(),
        clusters: picked.iter().map(|&i| model.assignments[i]).collect(),
        distance,
        zscore,
        eligible,
    })
}

/// Pops from the back of each queue in turn until `limit` picks or every queue is empty.
fn round_robin(
    queues: &mut [Vec<usize>],
    picked: &mut Vec<usize>,
    limit: usize,
    take: &mut impl FnMut(usize, &mut Vec<usize>),
) {
    loop {
        let mut progressed = false;
        for q in queues.iter_mut() {
            if picked.len() >= limit {
                return;
            }
            while let Some(i) = q.pop() {
                let before = picked.len();
                take(i, picked);
                if picked.len() > before {
                    progressed = true;
                    break;
                }
            }
        }
        if !progressed {
            return;
        }
    }
}
