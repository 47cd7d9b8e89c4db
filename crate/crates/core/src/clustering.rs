//! Turning a settled network into clusters, and scoring them.

use std::collections::BTreeMap;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::network::PlayerGraph;

/// The neighbour each player keeps when only its strongest link survives.
///
/// Strength ties go to the lowest index. A self-loop wins only when the player
/// has no other neighbour.
pub fn strongest_links(graph: &PlayerGraph) -> Vec<usize> {
    (0..graph.n())
        .map(|i| {
            let pick = |allow_self: bool| {
                graph
                    .neighbors(i)
                    .iter()
                    .zip(graph.strengths(i))
                    .filter(|(&j, _)| allow_self || j != i)
                    .max_by(|(a, sa), (b, sb)| sa.total_cmp(sb).then(b.cmp(a)))
                    .map(|(&j, _)| j)
            };
            pick(false).or_else(|| pick(true)).unwrap_or(i)
        })
        .collect()
}

/// Weakly connected components of the strongest-link graph. Labels are
/// numbered `0..c` in order of each component's lowest member.
pub fn strongest_link_partition(graph: &PlayerGraph) -> Vec<usize> {
    let n = graph.n();
    let mut uf = UnionFind::<usize>::new(n);
    for (i, j) in strongest_links(graph).into_iter().enumerate() {
        uf.union(i, j);
    }
    canonical_labels(&uf.into_labeling())
}

/// Renumbers arbitrary labels to `0..c` by first appearance.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut seen = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = seen.len();
            *seen.entry(l).or_insert(next)
        })
        .collect()
}

pub fn cluster_count(labels: &[usize]) -> usize {
    let mut ids = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

/// How many players receive `d` strongest links, indexed by `d`.
pub fn strongest_link_in_degree_histogram(graph: &PlayerGraph) -> Vec<usize> {
    let mut incoming = vec![0usize; graph.n()];
    for (i, j) in strongest_links(graph).into_iter().enumerate() {
        if i != j {
            incoming[j] += 1;
        }
    }
    let max = incoming.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0; max + 1];
    for d in incoming {
        hist[d] += 1;
    }
    hist
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub labels: Vec<usize>,
    pub merges: usize,
    /// Set when fewer clusters than requested existed to begin with.
    pub underfull: bool,
}

fn centroid(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let dim = points[members[0]].len();
    let mut c = vec![0.0; dim];
    for &m in members {
        for (acc, v) in c.iter_mut().zip(&points[m]) {
            *acc += v;
        }
    }
    c.iter_mut().for_each(|v| *v /= members.len() as f64);
    c
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Repeatedly folds the smallest cluster into the cluster with the nearest
/// centroid until `target` clusters remain. The absorbing cluster keeps its id.
pub fn merge_to_k(labels: &[usize], points: &[Vec<f64>], target: usize) -> Result<MergeOutcome> {
    if target == 0 {
        return Err(Error::domain("preset cluster count must be at least 1"));
    }
    if labels.len() != points.len() {
        return Err(Error::domain(format!(
            "{} labels for {} points",
            labels.len(),
            points.len()
        )));
    }
    let mut labels = labels.to_vec();
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (p, &l) in labels.iter().enumerate() {
        clusters.entry(l).or_default().push(p);
    }
    let underfull = clusters.len() < target;
    let mut merges = 0;
    while clusters.len() > target {
        // BTreeMap iterates ids ascending, and min_by_key keeps the first minimum.
        let (&small, _) = clusters.iter().min_by_key(|(_, m)| m.len()).expect("nonempty");
        let members = clusters.remove(&small).expect("present");
        let from = centroid(points, &members);
        let mut best: Option<(usize, f64)> = None;
        for (&id, m) in &clusters {
            let d = sq_dist(&from, &centroid(points, m));
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((id, d));
            }
        }
        let (into, _) = best.expect("at least one cluster remains");
        for &p in &members {
            labels[p] = into;
        }
        clusters.get_mut(&into).expect("present").extend(members);
        merges += 1;
    }
    Ok(MergeOutcome { labels, merges, underfull })
}

/// Fraction of points whose predicted cluster, under the best one-to-one
/// mapping of clusters onto classes, equals the true class.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::domain(format!(
            "label length mismatch: {} predicted vs {} true",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::domain("no labels to score"));
    }
    let p_ids = canonical_labels(pred);
    let t_ids = canonical_labels(truth);
    let rows = cluster_count(&p_ids);
    let cols = cluster_count(&t_ids);
    let mut table = vec![vec![0i64; cols]; rows];
    for (&p, &t) in p_ids.iter().zip(&t_ids) {
        table[p][t] += 1;
    }
    // The solver wants no more rows than columns.
    let weights = if rows <= cols {
        Matrix::from_rows(table).map_err(|e| Error::domain(e.to_string()))?
    } else {
        let transposed: Vec<Vec<i64>> = (0..cols).map(|c| (0..rows).map(|r| table[r][c]).collect()).collect();
        Matrix::from_rows(transposed).map_err(|e| Error::domain(e.to_string()))?
    };
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / pred.len() as f64)
}
