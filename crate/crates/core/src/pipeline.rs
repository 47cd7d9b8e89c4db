//! End-to-end clustering runs and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{accuracy, cluster_count, merge_to_k, strongest_link_in_degree_histogram, strongest_link_partition};
use crate::data::{impute_missing, standardize, Dataset};
use crate::dynamics::{run_with, ConvergenceConfig, GameRules, IterationState, LrrKind, StepStats, Trajectory};
use crate::error::{Error, Result};
use crate::game::{PayoffKind, PayoffMatrixSpec, StrategyCase};
use crate::network::{build_knn, DistanceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub case: StrategyCase,
    pub payoff: PayoffKind,
    /// Snowdrift cost factor; ignored for `Pd`.
    pub beta: f64,
    pub lrr: LrrKind,
    pub sigma: f64,
    pub convergence: ConvergenceConfig,
    pub seed: u64,
    /// Cluster count to merge down to; defaults to the dataset's class count.
    pub clusters: Option<usize>,
    pub standardize: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 10,
            case: StrategyCase::Case1,
            payoff: PayoffKind::Pd,
            beta: 0.2,
            lrr: LrrKind::L1,
            sigma: 1.0,
            convergence: ConvergenceConfig::default(),
            seed: 0,
            clusters: None,
            standardize: false,
        }
    }
}

impl RunConfig {
    pub fn rules(&self) -> Result<GameRules> {
        Ok(GameRules {
            payoff: PayoffMatrixSpec::new(self.payoff, self.beta)?,
            case: self.case,
            lrr: self.lrr,
        })
    }

    pub fn algorithm_name(&self) -> Result<String> {
        Ok(self.rules()?.algorithm_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub algorithm: String,
    pub dataset: String,
    pub n: usize,
    pub config: RunConfig,
    pub total_payoff_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub raw_cluster_count: usize,
    pub cluster_count: usize,
    pub merge_rounds: usize,
    /// Labels after merging.
    pub labels: Vec<usize>,
    /// Labels straight from the strongest-link partition.
    pub raw_labels: Vec<usize>,
    /// Merged accuracy, when the dataset carries labels.
    pub accuracy: Option<f64>,
    /// Accuracy of the unmerged partition.
    pub raw_accuracy: Option<f64>,
    /// `hist[d]` = players receiving `d` strongest links.
    pub degree_histogram: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

/// Fills missing cells and optionally standardises, as configured.
pub fn prepare(ds: &Dataset, cfg: &RunConfig) -> Result<Dataset> {
    let filled = impute_missing(ds, cfg.seed)?;
    Ok(if cfg.standardize { standardize(&filled) } else { filled })
}

/// Runs the game on an already prepared dataset, calling `on_step` after each iteration.
pub fn simulate<F>(ds: &Dataset, cfg: &RunConfig, on_step: F) -> Result<Trajectory>
where
    F: FnMut(&IterationState, &StepStats),
{
    let rules = cfg.rules()?;
    let graph = build_knn(&ds.points, cfg.k, &DistanceConfig::new(cfg.sigma)?)?;
    Ok(run_with(graph, &rules, &cfg.convergence, on_step))
}

/// Full pipeline: preprocess, play, partition, merge, score.
pub fn cluster(ds: &Dataset, cfg: &RunConfig) -> Result<RunReport> {
    let target = cfg.clusters.unwrap_or(ds.preset_clusters);
    if target == 0 {
        return Err(Error::domain("preset cluster count must be at least 1"));
    }
    let prepared = prepare(ds, cfg)?;
    let trajectory = simulate(&prepared, cfg, |_, _| {})?;
    let graph = &trajectory.state.graph;
    let raw_labels = strongest_link_partition(graph);
    let merged = merge_to_k(&raw_labels, &prepared.points, target)?;
    let score = |pred: &[usize]| -> Result<Option<f64>> {
        ds.labels.as_deref().map(|truth| accuracy(pred, truth)).transpose()
    };
    Ok(RunReport {
        algorithm: cfg.algorithm_name()?,
        dataset: ds.name.clone(),
        n: ds.n(),
        config: *cfg,
        total_payoff_history: trajectory.history().to_vec(),
        iterations: trajectory.iterations(),
        converged: trajectory.converged,
        raw_cluster_count: cluster_count(&raw_labels),
        cluster_count: cluster_count(&merged.labels),
        merge_rounds: merged.merges,
        accuracy: score(&merged.labels)?,
        raw_accuracy: score(&raw_labels)?,
        labels: merged.labels,
        raw_labels,
        degree_histogram: strongest_link_in_degree_histogram(graph),
        wall_time_ms: None,
    })
}

/// One line of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub k: usize,
    pub case: u8,
    pub payoff: String,
    pub beta: f64,
    pub lrr: String,
    pub accuracy: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub raw_clusters: usize,
}

impl SweepRow {
    fn from_report(r: &RunReport) -> Self {
        SweepRow {
            algorithm: r.algorithm.clone(),
            k: r.config.k,
            case: r.config.case.number(),
            payoff: r.config.payoff.to_string(),
            beta: r.config.beta,
            lrr: r.config.lrr.to_string(),
            accuracy: r.accuracy,
            iterations: r.iterations,
            converged: r.converged,
            raw_clusters: r.raw_cluster_count,
        }
    }
}

/// Runs every configuration (in parallel) and returns rows in input order.
/// Configurations whose `k` does not fit the dataset are an error.
pub fn sweep(ds: &Dataset, configs: &[RunConfig]) -> Result<Vec<SweepRow>> {
    if configs.is_empty() {
        return Err(Error::domain("empty sweep"));
    }
    configs
        .par_iter()
        .map(|cfg| cluster(ds, cfg).map(|r| SweepRow::from_report(&r)))
        .collect()
}

/// Best accuracy over a sweep, with the row that produced it (first on ties).
pub fn best_row(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.accuracy.is_some())
        .fold(None, |best: Option<&SweepRow>, r| match best {
            Some(b) if b.accuracy >= r.accuracy => Some(b),
            _ => Some(r),
        })
}
