//! Simulation-based tests of a pooling and hyperparameter selection.
//!
//! A pooling is scored on the training votes (`train_loss`) and on `b`
//! synthetic label sets drawn from a sampler. Each synthetic item is scored
//! against the refined distribution it was drawn from (or, for bootstrap
//! draws, the refined distribution of its source item), using the pooled
//! counts of the original pooling. The standardized difference
//! `(mean(synthetic) - train) / std(synthetic)` then measures how far the
//! training loss sits from what the pooling itself would produce.

pub mod elbow;
pub mod loss;
pub mod stats;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{fit_median_of_trials, ClusterModelKind, FitConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nbp::{NbpConfig, NeighborhoodGraph};
use crate::pooling::Pooling;
use crate::rng::{derive_seed, Stream};
use crate::samplers::{bootstrap_sampler, cluster_sampler, nbp_sampler, MixingWeights, SamplerKind, SyntheticLabelSet};

pub use elbow::{fit_elbow, ElbowFit};
pub use loss::{loss_mean_kl, loss_multinomial_loglik, multinomial_log_pmf, Loss, LossKind, DEFAULT_LOSS_ALPHA};
pub use stats::{pvalue_fraction, standardized_difference};

/// Scores `b` synthetic label sets against `pooling`.
///
/// Replicate `r` is generated with seed `derive_seed(seed, Replicate, r)`;
/// replicates run in parallel and the result order is by `r`.
pub fn run_replicates<G>(generator: G, pooling: &Pooling, loss: &Loss, b: usize, seed: u64) -> Result<Vec<f64>>
where
    G: Fn(u64) -> Result<SyntheticLabelSet> + Sync,
{
    if b == 0 {
        return Err(Error::InvalidConfig("number of replicates b must be >= 1".into()));
    }
    (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let synthetic = generator(derive_seed(seed, Stream::Replicate, r))?;
            loss.evaluate_pairs(pooling, synthetic.scoring_pairs(pooling)?)
        })
        .collect()
}

/// Replicate statistics of one sampler at one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateStats {
    pub synth_mean: f64,
    pub synth_std: f64,
    pub std_diff: f64,
    pub pvalue_fraction: f64,
}

impl ReplicateStats {
    pub fn from_losses(losses: &[f64], train_loss: f64) -> Result<Self> {
        Ok(Self {
            synth_mean: stats::mean(losses),
            synth_std: stats::sample_std(losses),
            std_diff: standardized_difference(losses, train_loss)?,
            pvalue_fraction: pvalue_fraction(losses, train_loss)?,
        })
    }
}

/// How candidates are ranked by their standardized difference `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Smallest `|z|`: the training loss is closest to a typical synthetic
    /// loss.
    #[default]
    #[value(name = "abs", alias = "abs_std_diff")]
    AbsStdDiff,
    /// Smallest signed `z`.
    #[value(name = "signed", alias = "std_diff")]
    StdDiff,
}

impl Criterion {
    fn score(self, z: f64) -> f64 {
        match self {
            Criterion::AbsStdDiff => z.abs(),
            Criterion::StdDiff => z,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::AbsStdDiff => "abs",
            Criterion::StdDiff => "signed",
        })
    }
}

/// One evaluated candidate hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub param: f64,
    pub train_loss: f64,
    #[serde(flatten)]
    pub stats: ReplicateStats,
    /// Median and maximum neighborhood size (radius selection only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_median: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// The same pooling tested with the bootstrap sampler (cluster
    /// selection only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<ReplicateStats>,
}

/// A candidate that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCandidate {
    pub param: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// `clusters` or `radius`.
    pub method: String,
    /// Cluster model for `clusters`, divergence for `radius`.
    pub model: String,
    pub sampler: SamplerKind,
    pub loss: Loss,
    pub b: usize,
    pub seed: u64,
    pub criterion: Criterion,
    pub rows: Vec<CandidateRow>,
    pub failed: Vec<FailedCandidate>,
    pub chosen: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elbow: Option<ElbowFit>,
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

impl SelectionReport {
    /// The candidate table as CSV with six decimals. `preamble` lines are
    /// written first, each prefixed with `# `.
    pub fn to_csv(&self, preamble: &[String]) -> Result<String> {
        let mut out = String::new();
        for line in preamble {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "param",
            "train_loss",
            "synth_mean",
            "synth_std",
            "std_diff",
            "pvalue_fraction",
        ];
        let radius = self.rows.iter().any(|r| r.n_median.is_some());
        let boot = self.rows.iter().any(|r| r.bootstrap.is_some());
        if radius {
            header.extend(["n_median", "n_max"]);
        }
        if boot {
            header.extend([
                "boot_synth_mean",
                "boot_synth_std",
                "boot_std_diff",
                "boot_pvalue_fraction",
            ]);
        }
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                fmt6(r.param),
                fmt6(r.train_loss),
                fmt6(r.stats.synth_mean),
                fmt6(r.stats.synth_std),
                fmt6(r.stats.std_diff),
                fmt6(r.stats.pvalue_fraction),
            ];
            if radius {
                rec.push(r.n_median.map(fmt6).unwrap_or_default());
                rec.push(r.n_max.map(|v| v.to_string()).unwrap_or_default());
            }
            if boot {
                match &r.bootstrap {
                    Some(s) => rec.extend([
                        fmt6(s.synth_mean),
                        fmt6(s.synth_std),
                        fmt6(s.std_diff),
                        fmt6(s.pvalue_fraction),
                    ]),
                    None => rec.extend(std::iter::repeat_n(String::new(), 4)),
                }
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }
}

/// Settings for [`select_cluster_count`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSelection {
    pub p_grid: Vec<usize>,
    pub trials: usize,
    pub loss: Loss,
    pub b: usize,
    pub seed: u64,
    /// Template for every fit; `p` and `seed` are overwritten.
    pub fit: FitConfig,
    pub weights: MixingWeights,
    pub criterion: Criterion,
    /// Also test each pooling with the bootstrap sampler.
    pub bootstrap_comparison: bool,
}

impl ClusterSelection {
    pub fn new(p_grid: Vec<usize>, seed: u64) -> Self {
        Self {
            p_grid,
            trials: 100,
            loss: Loss::mean_kl(),
            b: 1000,
            seed,
            fit: FitConfig::new(1, seed),
            weights: MixingWeights::Empirical,
            criterion: Criterion::default(),
            bootstrap_comparison: true,
        }
    }
}

fn choose(rows: &[CandidateRow], criterion: Criterion) -> Result<f64> {
    // rows are in grid order, so strict < keeps the smaller parameter on ties
    let mut best: Option<(f64, f64)> = None;
    for r in rows {
        let s = criterion.score(r.stats.std_diff);
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((r.param, s));
        }
    }
    best.map(|b| b.0)
        .ok_or_else(|| Error::Validation("no candidate could be evaluated".into()))
}

/// Picks the cluster count whose pooling makes the training loss look most
/// like a draw from the pooling's own cluster sampler.
pub fn select_cluster_count(
    dataset: &Dataset,
    kind: ClusterModelKind,
    config: &ClusterSelection,
) -> Result<SelectionReport> {
    if config.p_grid.is_empty() {
        return Err(Error::InvalidConfig("cluster grid is empty".into()));
    }
    let mut grid = config.p_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let votes = dataset.votes();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for &p in &grid {
        let evaluated = (|| -> Result<CandidateRow> {
            let mut fc = config.fit;
            fc.p = p;
            fc.seed = derive_seed(config.seed, Stream::Candidate, p as u64);
            let fit = fit_median_of_trials(dataset, kind, &fc, config.trials, &config.loss)?;
            let pooling = fit.pooling(dataset, 0.0)?;
            let train_loss = config.loss.evaluate(&pooling, dataset)?;
            let rep_seed = derive_seed(config.seed, Stream::Replicate, p as u64);
            let losses = run_replicates(
                |s| cluster_sampler(&fit, &pooling, &votes, s, config.weights),
                &pooling,
                &config.loss,
                config.b,
                rep_seed,
            )?;
            let bootstrap = if config.bootstrap_comparison {
                let cmp_seed = derive_seed(config.seed, Stream::Comparison, p as u64);
                let losses = run_replicates(
                    |s| bootstrap_sampler(dataset, &votes, s),
                    &pooling,
                    &config.loss,
                    config.b,
                    cmp_seed,
                )?;
                ReplicateStats::from_losses(&losses, train_loss).ok()
            } else {
                None
            };
            Ok(CandidateRow {
                param: p as f64,
                train_loss,
                stats: ReplicateStats::from_losses(&losses, train_loss)?,
                n_median: None,
                n_max: None,
                bootstrap,
            })
        })();
        match evaluated {
            Ok(row) => rows.push(row),
            Err(e) => failed.push(FailedCandidate {
                param: p as f64,
                error: e.to_string(),
            }),
        }
    }
    let chosen = choose(&rows, config.criterion)?;
    Ok(SelectionReport {
        method: "clusters".into(),
        model: kind.to_string(),
        sampler: SamplerKind::Cluster,
        loss: config.loss,
        b: config.b,
        seed: config.seed,
        criterion: config.criterion,
        rows,
        failed,
        chosen,
        elbow: None,
    })
}

/// Settings for [`select_radius`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSelection {
    pub r_grid: Vec<f64>,
    pub sampler: SamplerKind,
    pub loss: Loss,
    pub b: usize,
    pub seed: u64,
    /// Measure and smoothing; the radius is overwritten.
    pub nbp: NbpConfig,
}

impl RadiusSelection {
    pub fn new(r_grid: Vec<f64>, sampler: SamplerKind, seed: u64) -> Self {
        Self {
            r_grid,
            sampler,
            loss: Loss::mean_kl(),
            b: 1000,
            seed,
            nbp: NbpConfig::new(0.0),
        }
    }
}

/// Tests the NBP pooling at each radius and picks the elbow of the
/// standardized-difference curve.
pub fn select_radius(dataset: &Dataset, config: &RadiusSelection) -> Result<SelectionReport> {
    if config.r_grid.len() < 4 {
        return Err(Error::InvalidConfig(
            "radius grid needs at least 4 points (2 per segment)".into(),
        ));
    }
    if config.r_grid.windows(2).any(|w| !(w[0] < w[1])) || config.r_grid.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidConfig(
            "radius grid must be non-negative and strictly ascending".into(),
        ));
    }
    if !matches!(config.sampler, SamplerKind::Nbp | SamplerKind::Bootstrap) {
        return Err(Error::InvalidConfig(format!(
            "radius selection uses the nbp or bootstrap sampler, not {}",
            config.sampler
        )));
    }
    let graph = NeighborhoodGraph::new(dataset, config.nbp.measure, config.nbp.comparison_alpha)?;
    let votes = dataset.votes();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (k, &r) in config.r_grid.iter().enumerate() {
        let evaluated = (|| -> Result<CandidateRow> {
            let (pooling, nstats) = graph.pooling(dataset, r, config.nbp.alpha)?;
            let train_loss = config.loss.evaluate(&pooling, dataset)?;
            let seed = derive_seed(config.seed, Stream::Replicate, k as u64);
            let losses = match config.sampler {
                SamplerKind::Nbp => run_replicates(
                    |s| nbp_sampler(&pooling, &votes, s),
                    &pooling,
                    &config.loss,
                    config.b,
                    seed,
                )?,
                _ => run_replicates(
                    |s| bootstrap_sampler(dataset, &votes, s),
                    &pooling,
                    &config.loss,
                    config.b,
                    seed,
                )?,
            };
            Ok(CandidateRow {
                param: r,
                train_loss,
                stats: ReplicateStats::from_losses(&losses, train_loss)?,
                n_median: Some(nstats.median),
                n_max: Some(nstats.maximum),
                bootstrap: None,
            })
        })();
        match evaluated {
            Ok(row) => rows.push(row),
            Err(e) => failed.push(FailedCandidate {
                param: r,
                error: e.to_string(),
            }),
        }
    }
    let x: Vec<f64> = rows.iter().map(|r| r.param).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.stats.std_diff).collect();
    let elbow = fit_elbow(&x, &y)?;
    Ok(SelectionReport {
        method: "radius".into(),
        model: config.nbp.measure.to_string(),
        sampler: config.sampler,
        loss: config.loss,
        b: config.b,
        seed: config.seed,
        criterion: Criterion::default(),
        rows,
        failed,
        chosen: elbow.breakpoint,
        elbow: Some(elbow),
    })
}
