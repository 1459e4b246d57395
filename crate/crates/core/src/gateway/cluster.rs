use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GatewayError;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    pub wcss: f64,
    /// WCSS after each update step.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: Option<u64>,
    /// Fewer distinct centroids than clusters.
    pub degenerate: bool,
    /// Group keys when the model came from grouping rather than k-means.
    pub group_keys: Option<Vec<String>>,
}

impl ClusterModel {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &c in &self.assignments {
            s[c] += 1;
        }
        s
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn check_k(points: &[Vec<f64>], k: usize) -> Result<(), GatewayError> {
    if points.is_empty() {
        return Err(GatewayError::Empty);
    }
    if k == 0 || k > points.len() {
        return Err(GatewayError::BadK { k, n: points.len() });
    }
    Ok(())
}

/// Draws one more centroid with probability proportional to squared distance from the chosen ones.
/// The first draw, and any draw where every point coincides with a centroid, is uniform over points.
fn draw_centroid(points: &[Vec<f64>], chosen: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    if chosen.is_empty() {
        return points[rng.random_range(0..points.len())].clone();
    }
    let d: Vec<f64> = points
        .iter()
        .map(|p| chosen.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min))
        .collect();
    let total: f64 = d.iter().sum();
    if !(total > 0.0) {
        return points[rng.random_range(0..points.len())].clone();
    }
    let r = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, di) in d.iter().enumerate() {
        if *di > 0.0 {
            last_positive = i;
        }
        acc += di;
        if acc > r {
            return points[i].clone();
        }
    }
    points[last_positive].clone()
}

/// k-means++ initial centroids from a ChaCha8 stream seeded with `seed`.
pub fn seed_centroids(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<f64>>, GatewayError> {
    check_k(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Vec::with_capacity(k);
    for _ in 0..k {
        let next = draw_centroid(points, &c, &mut rng);
        c.push(next);
    }
    Ok(c)
}

fn wcss_of(points: &[Vec<f64>], assign: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points.iter().zip(assign).map(|(p, &a)| dist2(p, &centroids[a])).sum()
}

fn update(points: &[Vec<f64>], assign: &[usize], centroids: &mut [Vec<f64>]) {
    let d = points[0].len();
    let mut sums = vec![vec![0.0; d]; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    for (p, &a) in points.iter().zip(assign) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    for ((c, s), n) in centroids.iter_mut().zip(sums).zip(counts) {
        // Empty clusters keep their previous centroid.
        if n > 0 {
            *c = s.into_iter().map(|x| x / n as f64).collect();
        }
    }
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, seed: u64) -> ClusterModel {
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        update(points, &assign, &mut centroids);
        history.push(wcss_of(points, &assign, &centroids));
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assign {
            converged = true;
            break;
        }
        assign = next;
    }
    if !converged {
        update(points, &assign, &mut centroids);
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for c in &centroids {
        if !distinct.iter().any(|d| dist2(d, c) == 0.0) {
            distinct.push(c);
        }
    }
    ClusterModel {
        k: centroids.len(),
        wcss: wcss_of(points, &assign, &centroids),
        degenerate: distinct.len() < centroids.len(),
        centroids,
        assignments: assign,
        wcss_history: history,
        iterations,
        converged,
        seed: Some(seed),
        group_keys: None,
    }
}

/// Lloyd iteration from k-means++ seeding; stops when assignments are stable or after 300 iterations.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterModel, GatewayError> {
    let init = seed_centroids(points, k, seed)?;
    Ok(lloyd(points, init, seed))
}

/// Models for k = 1..=k_max where each run starts from the previous run's centroids plus one k-means++ draw.
/// WCSS is non-increasing across the returned models.
pub fn kmeans_nested(points: &[Vec<f64>], k_max: usize, seed: u64) -> Result<Vec<ClusterModel>, GatewayError> {
    check_k(points, k_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<ClusterModel> = Vec::with_capacity(k_max);
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    for _ in 0..k_max {
        let next = draw_centroid(points, &centroids, &mut rng);
        centroids.push(next);
        let m = lloyd(points, centroids.clone(), seed);
        centroids = m.centroids.clone();
        out.push(m);
    }
    Ok(out)
}

/// Knee of a WCSS curve whose first entry is for `k_start`: the k maximizing the second difference.
pub(crate) fn elbow_from_curve(k_start: usize, wcss: &[f64]) -> usize {
    let scale = wcss.first().copied().unwrap_or(0.0).abs().max(1e-300);
    let mut best = k_start;
    let mut best_sd = 1e-12 * scale;
    for i in 1..wcss.len().saturating_sub(1) {
        let sd = wcss[i - 1] - 2.0 * wcss[i] + wcss[i + 1];
        if sd > best_sd {
            best_sd = sd;
            best = k_start + i;
        }
    }
    best
}

/// Elbow choice of k over nested seeded runs. Ties go to the smallest k.
pub fn choose_k_elbow(points: &[Vec<f64>], k_range: RangeInclusive<usize>, seed: u64) -> Result<usize, GatewayError> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo == 0 || lo > hi || hi > points.len() {
        return Err(GatewayError::Range(format!("{lo}..={hi} for {} records", points.len())));
    }
    let models = kmeans_nested(points, hi, seed)?;
    let curve: Vec<f64> = models[lo - 1..].iter().map(|m| m.wcss).collect();
    Ok(elbow_from_curve(lo, &curve))
}

/// One cluster per distinct key, numbered in key order.
pub fn group_by_key(points: &[Vec<f64>], keys: &[String]) -> ClusterModel {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for k in keys {
        index.entry(k.as_str()).or_insert(0);
    }
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let assign: Vec<usize> = keys.iter().map(|k| index[k.as_str()]).collect();
    let d = points.first().map_or(0, Vec::len);
    let mut centroids = vec![vec![0.0; d]; index.len()];
    if !points.is_empty() {
        update(points, &assign, &mut centroids);
    }
    let wcss = wcss_of(points, &assign, &centroids);
    ClusterModel {
        k: index.len(),
        centroids,
        assignments: assign,
        wcss,
        wcss_history: vec![wcss],
        iterations: 0,
        converged: true,
        seed: None,
        degenerate: false,
        group_keys: Some(index.keys().map(|s| s.to_string()).collect()),
    }
}
