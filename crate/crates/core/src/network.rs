//! Weighted, directed k-nearest-neighbour player network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the per-player strength sum.
pub const STRENGTH_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    sigma: f64,
}

impl DistanceConfig {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(DistanceConfig { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig { sigma: 1.0 }
    }
}

fn euclidean(xi: &[f64], xj: &[f64]) -> Result<f64> {
    if xi.len() != xj.len() {
        return Err(Error::domain(format!(
            "dimension mismatch: {} vs {}",
            xi.len(),
            xj.len()
        )));
    }
    Ok(xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

fn distance_from_norm(norm: f64, cfg: &DistanceConfig) -> f64 {
    (norm / (2.0 * cfg.sigma * cfg.sigma)).exp()
}

/// `exp(||xi - xj|| / (2 sigma^2))`; always `>= 1`, equal to 1 for identical points.
pub fn distance(xi: &[f64], xj: &[f64], cfg: &DistanceConfig) -> Result<f64> {
    Ok(distance_from_norm(euclidean(xi, xj)?, cfg))
}

/// Directed knn graph with per-edge link strengths.
///
/// Neighbour lists are kept in ascending player order; `strengths[i][p]` is the
/// strength of the edge `i -> neighbors[i][p]`. Edges absent from a list have
/// strength zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerGraph {
    k: usize,
    n: usize,
    distances: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    strengths: Vec<Vec<f64>>,
}

impl PlayerGraph {
    /// Builds a graph from explicit neighbour lists and a distance table.
    /// Strengths start uniform over each list. Mostly useful for hand-built
    /// instances; datasets go through [`build_knn`].
    pub fn from_parts(distances: Vec<f64>, neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        if distances.len() != n * n {
            return Err(Error::domain(format!(
                "distance table has {} entries, expected {}",
                distances.len(),
                n * n
            )));
        }
        if distances.iter().any(|&d| !(d >= 1.0)) {
            return Err(Error::domain("distances must be >= 1"));
        }
        let k = neighbors.first().map_or(0, Vec::len);
        let mut normalized = Vec::with_capacity(n);
        for (i, list) in neighbors.into_iter().enumerate() {
            let mut list = list;
            list.sort_unstable();
            list.dedup();
            if list.is_empty() {
                return Err(Error::domain(format!("player {i} has no neighbours")));
            }
            if let Some(&bad) = list.iter().find(|&&j| j >= n) {
                return Err(Error::domain(format!("player {i} points at unknown player {bad}")));
            }
            normalized.push(list);
        }
        let mut g = PlayerGraph {
            k,
            n,
            distances,
            neighbors: normalized,
            strengths: Vec::new(),
        };
        g.reset_strengths();
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Neighbour count chosen at construction.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.n + j]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn strengths(&self, i: usize) -> &[f64] {
        &self.strengths[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Strength of `i -> j`, zero when `j` is not a neighbour of `i`.
    pub fn strength(&self, i: usize, j: usize) -> f64 {
        match self.neighbors[i].binary_search(&j) {
            Ok(p) => self.strengths[i][p],
            Err(_) => 0.0,
        }
    }

    /// Number of players holding `j` in their neighbour set (self-loops count).
    pub fn in_degree(&self, j: usize) -> usize {
        self.neighbors.iter().filter(|list| list.binary_search(&j).is_ok()).count()
    }

    /// In-degree of every player, in one pass.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for list in &self.neighbors {
            for &j in list {
                deg[j] += 1;
            }
        }
        deg
    }

    /// Largest `|sum_j rho(i, j) - 1|` over all players.
    pub fn max_strength_sum_error(&self) -> f64 {
        self.strengths
            .iter()
            .map(|s| (s.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn reset_strengths(&mut self) {
        self.strengths = self
            .neighbors
            .iter()
            .map(|list| vec![1.0 / list.len() as f64; list.len()])
            .collect();
    }

    /// Replaces player `i`'s neighbour list and strengths. `neighbors` must be
    /// sorted ascending and aligned with `strengths`.
    pub(crate) fn set_player(&mut self, i: usize, neighbors: Vec<usize>, strengths: Vec<f64>) {
        debug_assert_eq!(neighbors.len(), strengths.len());
        debug_assert!(neighbors.windows(2).all(|w| w[0] < w[1]));
        self.neighbors[i] = neighbors;
        self.strengths[i] = strengths;
    }
}

/// Builds the knn graph: each player points at its `k` nearest players,
/// itself included. A player always ranks first among points at distance
/// zero from it; other ties resolve by ascending player index. Strengths are
/// initialised uniformly to `1/k`.
pub fn build_knn(points: &[Vec<f64>], k: usize, cfg: &DistanceConfig) -> Result<PlayerGraph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::domain(format!("k must satisfy 1 <= k < n (k = {k}, n = {n})")));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain("points contain missing or non-finite values"));
    }
    let mut norms = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&points[i], &points[j])?;
            norms[i * n + j] = d;
            norms[j * n + i] = d;
        }
    }
    // exp() is monotone, so ranking by the norm matches ranking by distance and
    // stays exact where the distance would overflow.
    let neighbors = (0..n)
        .map(|i| {
            let row = &norms[i * n..(i + 1) * n];
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                row[a]
                    .total_cmp(&row[b])
                    .then((a != i).cmp(&(b != i)))
                    .then(a.cmp(&b))
            });
            let mut nearest = order[..k].to_vec();
            nearest.sort_unstable();
            nearest
        })
        .collect();
    let distances = norms.iter().map(|&x| distance_from_norm(x, cfg)).collect();
    let mut g = PlayerGraph {
        k,
        n,
        distances,
        neighbors,
        strengths: Vec::new(),
    };
    g.reset_strengths();
    Ok(g)
}

/// Resets every strength to `1/|neighbours(i)|`.
pub fn init_strengths(mut graph: PlayerGraph) -> PlayerGraph {
    graph.reset_strengths();
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn distance_examples() {
        let cfg = DistanceConfig::default();
        assert_eq!(distance(&[1.0, 2.0], &[1.0, 2.0], &cfg).unwrap(), 1.0);
        assert!((distance(&[0.0, 0.0], &[2.0, 0.0], &cfg).unwrap() - E).abs() < 1e-12);
        let wide = DistanceConfig::new(2.0).unwrap();
        assert!((distance(&[0.0], &[8.0], &wide).unwrap() - E).abs() < 1e-12);
        assert!(distance(&[0.0], &[1.0, 2.0], &cfg).is_err());
        assert!(DistanceConfig::new(0.0).is_err());
    }

    #[test]
    fn knn_collinear() {
        let g = build_knn(&line(&[0.0, 1.0, 10.0]), 2, &DistanceConfig::default()).unwrap();
        assert_eq!(g.neighbors(0), &[0, 1]);
        assert_eq!(g.neighbors(2), &[1, 2]);
        assert_eq!(g.distance(1, 1), 1.0);
    }

    #[test]
    fn knn_k1_is_self_only() {
        let g = build_knn(&line(&[3.0, 1.0, 4.0, 1.5]), 1, &DistanceConfig::default()).unwrap();
        for i in 0..4 {
            assert_eq!(g.neighbors(i), &[i]);
            assert_eq!(g.strength(i, i), 1.0);
            assert_eq!(g.in_degree(i), 1);
        }
    }

    #[test]
    fn knn_duplicate_points_break_ties_by_index() {
        // Players 1 and 2 coincide and are equidistant from player 0.
        let pts = line(&[0.0, 1.0, 1.0, 5.0]);
        let g = build_knn(&pts, 2, &DistanceConfig::default()).unwrap();
        assert_eq!(g.neighbors(0), &[0, 1]);
        // For player 2, itself and player 1 both sit at distance 0.
        assert_eq!(g.neighbors(2), &[1, 2]);
        assert_eq!(g.neighbors(1), &[1, 2]);
        let solo = build_knn(&pts, 1, &DistanceConfig::default()).unwrap();
        assert_eq!(solo.neighbors(2), &[2]);
        let again = build_knn(&pts, 2, &DistanceConfig::default()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn knn_rejects_bad_k() {
        let pts = line(&[0.0, 1.0, 2.0]);
        assert!(build_knn(&pts, 3, &DistanceConfig::default()).is_err());
        assert!(build_knn(&pts, 0, &DistanceConfig::default()).is_err());
        assert!(build_knn(&line(&[0.0, f64::NAN]), 1, &DistanceConfig::default()).is_err());
    }

    #[test]
    fn uniform_initial_strengths() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let g = init_strengths(build_knn(&pts, 4, &DistanceConfig::default()).unwrap());
        for i in 0..10 {
            assert!(g.strengths(i).iter().all(|&s| s == 0.25));
            assert!(g.contains(i, i));
        }
        assert!(g.max_strength_sum_error() < 1e-12);
        assert_eq!(g.strength(0, 9), 0.0);
    }

    #[test]
    fn in_degree_counts() {
        let g = build_knn(&line(&[0.0, 1.0]), 1, &DistanceConfig::default()).unwrap();
        assert_eq!(g.in_degrees(), vec![1, 1]);
        let pair = PlayerGraph::from_parts(vec![1.0, 2.0, 2.0, 1.0], vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(pair.in_degrees(), vec![2, 2]);
        let g = build_knn(&line(&[0.0, 1.0, 100.0]), 2, &DistanceConfig::default()).unwrap();
        assert_eq!(g.in_degree(0), 2);
        assert_eq!(g.in_degree(1), 3);
        let total: usize = g.in_degrees().iter().sum();
        let out: usize = (0..g.n()).map(|i| g.neighbors(i).len()).sum();
        assert_eq!(total, out);
    }

    #[test]
    fn from_parts_validates() {
        assert!(PlayerGraph::from_parts(vec![1.0; 4], vec![vec![0, 1], vec![0, 1]]).is_ok());
        assert!(PlayerGraph::from_parts(vec![1.0; 3], vec![vec![0], vec![1]]).is_err());
        assert!(PlayerGraph::from_parts(vec![0.5; 4], vec![vec![0], vec![1]]).is_err());
        assert!(PlayerGraph::from_parts(vec![1.0; 4], vec![vec![0, 2], vec![1]]).is_err());
        assert!(PlayerGraph::from_parts(vec![1.0; 4], vec![vec![], vec![1]]).is_err());
    }
}
