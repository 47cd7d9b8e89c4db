//! One iteration of the game: pay off, rewire, re-weight.
//!
//! Every step reads a frozen snapshot of the graph and the payoffs computed
//! from it, derives each player's new neighbour list and strengths
//! independently, then commits all of them at once.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{player_payoff_with_degrees, PayoffMatrixSpec, StrategyCase};
use crate::network::PlayerGraph;

/// Link-removing-and-rewiring rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrrKind {
    /// Threshold at the `floor(|Γ|/2)`-th largest neighbour payoff.
    L1,
    /// Threshold at the mean neighbour payoff.
    L2,
}

impl fmt::Display for LrrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LrrKind::L1 => "L1",
            LrrKind::L2 => "L2",
        })
    }
}

/// The fixed rules a run plays by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameRules {
    pub payoff: PayoffMatrixSpec,
    pub case: StrategyCase,
    pub lrr: LrrKind,
}

impl GameRules {
    /// Name in the `QGC<case><PD|SD><L1|L2>` scheme, e.g. `QGC1PDL1`.
    pub fn algorithm_name(&self) -> String {
        format!("QGC{}{}{}", self.case.number(), self.payoff.kind(), self.lrr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub max_iters: usize,
    /// Relative change in total payoff counted as "no change".
    pub eps: f64,
    /// Consecutive calm steps required.
    pub window: usize,
    /// Compare `Z_t` against `Z_{t-lag}`. The strength update has a period-2
    /// cycle once the neighbour sets freeze, so `lag = 2` detects that regime.
    pub lag: usize,
}

impl ConvergenceConfig {
    pub fn new(max_iters: usize, eps: f64, window: usize) -> Result<Self> {
        if !(eps > 0.0) || window == 0 {
            return Err(Error::domain(format!(
                "convergence needs eps > 0 and window >= 1 (eps = {eps}, window = {window})"
            )));
        }
        Ok(ConvergenceConfig { max_iters, eps, window, lag: 1 })
    }

    pub fn with_lag(mut self, lag: usize) -> Result<Self> {
        if lag == 0 {
            return Err(Error::domain("convergence lag must be at least 1"));
        }
        self.lag = lag;
        Ok(self)
    }
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig { max_iters: 100, eps: 1e-3, window: 5, lag: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct IterationState {
    pub graph: PlayerGraph,
    /// Payoffs from the most recent sweep (empty before the first step).
    pub payoffs: Vec<f64>,
    pub total_payoff_history: Vec<f64>,
    pub t: usize,
}

impl IterationState {
    pub fn new(graph: PlayerGraph) -> Self {
        IterationState {
            graph,
            payoffs: Vec::new(),
            total_payoff_history: Vec::new(),
            t: 0,
        }
    }
}

/// Bookkeeping for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    /// Step index, starting at 1.
    pub t: usize,
    /// Sum of payoffs on the graph the step started from.
    pub total_payoff: f64,
    /// Players whose neighbour set changed.
    pub rewired: usize,
    /// Mean Shannon entropy (nats) of the per-player strength distributions after the step.
    pub strength_entropy: f64,
}

/// Payoff of every player on `graph`.
pub fn payoff_sweep(graph: &PlayerGraph, spec: &PayoffMatrixSpec, case: StrategyCase) -> Vec<f64> {
    let deg = graph.in_degrees();
    (0..graph.n())
        .into_par_iter()
        .map(|i| player_payoff_with_degrees(i, graph, &deg, spec, case))
        .collect()
}

fn desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// Payoff threshold of player `i` over its current neighbours.
pub fn threshold(i: usize, graph: &PlayerGraph, payoffs: &[f64], kind: LrrKind) -> f64 {
    let mut z: Vec<f64> = graph.neighbors(i).iter().map(|&j| payoffs[j]).collect();
    match kind {
        LrrKind::L1 => {
            let alpha = (z.len() / 2).max(1);
            z.sort_by(|a, b| desc(*a, *b));
            z[alpha - 1]
        }
        LrrKind::L2 => z.iter().sum::<f64>() / z.len() as f64,
    }
}

/// Neighbours of `i` whose payoff reaches `theta`.
pub fn strong_neighbors(i: usize, graph: &PlayerGraph, payoffs: &[f64], theta: f64) -> Vec<usize> {
    graph.neighbors(i).iter().copied().filter(|&j| payoffs[j] >= theta).collect()
}

/// Union of the neighbour sets of `i`'s neighbours with payoff `>= theta`,
/// sorted ascending.
pub fn extended_set(i: usize, graph: &PlayerGraph, payoffs: &[f64], theta: f64) -> Vec<usize> {
    let mut out: Vec<usize> = strong_neighbors(i, graph, payoffs, theta)
        .into_iter()
        .flat_map(|j| graph.neighbors(j).iter().copied())
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// New neighbour set of player `i`, sorted ascending, same size as the old one.
pub fn lrr_apply(i: usize, graph: &PlayerGraph, payoffs: &[f64], kind: LrrKind) -> Vec<usize> {
    let current = graph.neighbors(i);
    let unchanged = || current.to_vec();

    let first = payoffs[current[0]];
    if kind == LrrKind::L2 && current.iter().all(|&j| payoffs[j] == first) {
        return unchanged();
    }

    let theta = threshold(i, graph, payoffs, kind);
    let extended = extended_set(i, graph, payoffs, theta);
    let outsiders: Vec<usize> = extended
        .iter()
        .copied()
        .filter(|j| current.binary_search(j).is_err())
        .collect();
    if outsiders.is_empty() {
        return unchanged();
    }
    let min_current = current.iter().map(|&j| payoffs[j]).fold(f64::INFINITY, f64::min);
    let max_extended = extended.iter().map(|&j| payoffs[j]).fold(f64::NEG_INFINITY, f64::max);
    if min_current >= max_extended {
        return unchanged();
    }

    let mut candidates: Vec<(usize, bool)> = current.iter().map(|&j| (j, true)).collect();
    candidates.extend(outsiders.into_iter().map(|j| (j, false)));
    candidates.sort_by(|&(a, a_kept), &(b, b_kept)| {
        desc(payoffs[a], payoffs[b])
            .then(b_kept.cmp(&a_kept))
            .then(a.cmp(&b))
    });
    let mut chosen: Vec<usize> = candidates[..current.len()].iter().map(|&(j, _)| j).collect();
    chosen.sort_unstable();
    chosen
}

/// Carries strengths across a rewiring: kept links keep their strength and
/// the strength of dropped links is shared equally among added ones.
///
/// Returns strengths aligned with `new_neighbors`.
pub fn redistribute_strengths(
    old_neighbors: &[usize],
    old_strengths: &[f64],
    new_neighbors: &[usize],
) -> Vec<f64> {
    let released: f64 = old_neighbors
        .iter()
        .zip(old_strengths)
        .filter(|(j, _)| new_neighbors.binary_search(j).is_err())
        .map(|(_, s)| s)
        .sum();
    let added = new_neighbors
        .iter()
        .filter(|j| old_neighbors.binary_search(j).is_err())
        .count();
    new_neighbors
        .iter()
        .map(|j| match old_neighbors.binary_search(j) {
            Ok(p) => old_strengths[p],
            Err(_) => released / added as f64,
        })
        .collect()
}

/// Inversion about the average on square-root strengths, with the sign of the
/// best-paid neighbour's amplitude flipped first.
///
/// `neighbors` and `strengths` are aligned; `payoffs` is indexed by player.
pub fn grover_adjust(neighbors: &[usize], strengths: &[f64], payoffs: &[f64]) -> Vec<f64> {
    let best = neighbors
        .iter()
        .enumerate()
        .max_by(|&(_, &a), &(_, &b)| payoffs[a].total_cmp(&payoffs[b]).then(b.cmp(&a)))
        .map(|(p, _)| p);
    let amps: Vec<f64> = strengths
        .iter()
        .enumerate()
        .map(|(p, s)| if Some(p) == best { -s.sqrt() } else { s.sqrt() })
        .collect();
    let avg = amps.iter().sum::<f64>() / amps.len() as f64;
    amps.iter().map(|a| (2.0 * avg - a).powi(2).min(1.0)).collect()
}

/// What player `i` will commit at the end of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerUpdate {
    pub neighbors: Vec<usize>,
    pub strengths: Vec<f64>,
}

/// Computes player `i`'s update from the frozen `graph` and its `payoffs`.
pub fn player_update(i: usize, graph: &PlayerGraph, payoffs: &[f64], kind: LrrKind) -> PlayerUpdate {
    let neighbors = lrr_apply(i, graph, payoffs, kind);
    let carried = redistribute_strengths(graph.neighbors(i), graph.strengths(i), &neighbors);
    let strengths = grover_adjust(&neighbors, &carried, payoffs);
    PlayerUpdate { neighbors, strengths }
}

fn mean_entropy(graph: &PlayerGraph) -> f64 {
    let total: f64 = (0..graph.n())
        .map(|i| {
            graph
                .strengths(i)
                .iter()
                .filter(|&&s| s > 0.0)
                .map(|&s| -s * s.ln())
                .sum::<f64>()
        })
        .sum();
    total / graph.n() as f64
}

/// Advances `state` by one synchronous iteration.
pub fn step(state: &mut IterationState, rules: &GameRules) -> StepStats {
    let payoffs = payoff_sweep(&state.graph, &rules.payoff, rules.case);
    let total: f64 = payoffs.iter().sum();
    let snapshot = &state.graph;
    let updates: Vec<PlayerUpdate> = (0..snapshot.n())
        .into_par_iter()
        .map(|i| player_update(i, snapshot, &payoffs, rules.lrr))
        .collect();
    let mut rewired = 0;
    for (i, u) in updates.into_iter().enumerate() {
        if u.neighbors != state.graph.neighbors(i) {
            rewired += 1;
        }
        state.graph.set_player(i, u.neighbors, u.strengths);
    }
    state.payoffs = payoffs;
    state.total_payoff_history.push(total);
    state.t += 1;
    StepStats {
        t: state.t,
        total_payoff: total,
        rewired,
        strength_entropy: mean_entropy(&state.graph),
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: IterationState,
    pub steps: Vec<StepStats>,
    pub converged: bool,
}

impl Trajectory {
    pub fn iterations(&self) -> usize {
        self.state.t
    }

    pub fn history(&self) -> &[f64] {
        &self.state.total_payoff_history
    }

    pub fn final_total_payoff(&self) -> Option<f64> {
        self.history().last().copied()
    }
}

/// Iterates until the total payoff has stayed within `eps` relative change
/// (against the value `lag` steps back) for `window` consecutive steps, or `max_iters` steps have run.
pub fn run(graph: PlayerGraph, rules: &GameRules, cfg: &ConvergenceConfig) -> Trajectory {
    run_with(graph, rules, cfg, |_, _| {})
}

/// [`run`] with a callback invoked after every step.
pub fn run_with<F>(graph: PlayerGraph, rules: &GameRules, cfg: &ConvergenceConfig, mut on_step: F) -> Trajectory
where
    F: FnMut(&IterationState, &StepStats),
{
    let mut state = IterationState::new(graph);
    let mut steps = Vec::new();
    let mut calm = 0;
    let mut converged = false;
    while state.t < cfg.max_iters {
        let stats = step(&mut state, rules);
        on_step(&state, &stats);
        steps.push(stats);
        let h = &state.total_payoff_history;
        if cfg.lag >= 1 && h.len() > cfg.lag {
            let (prev, cur) = (h[h.len() - 1 - cfg.lag], h[h.len() - 1]);
            let rel = (cur - prev).abs() / prev.abs().max(1e-12);
            calm = if rel < cfg.eps { calm + 1 } else { 0 };
        }
        if calm >= cfg.window {
            converged = true;
            break;
        }
    }
    Trajectory { state, steps, converged }
}
