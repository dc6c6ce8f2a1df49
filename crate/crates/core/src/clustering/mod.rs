//! Cluster-based pooling in label space.
//!
//! Four models produce a hard assignment of items to `p` clusters:
//!
//! | kind | fitted on | algorithm |
//! |------|-----------|-----------|
//! | [`ClusterModelKind::Fmm`] | vote counts | MAP-EM for a multinomial mixture with Dirichlet priors |
//! | [`ClusterModelKind::Gmm`] | empirical distributions | EM, diagonal covariance, variance floor |
//! | [`ClusterModelKind::Kmeans`] | empirical distributions | Lloyd with k-means++ seeding |
//! | [`ClusterModelKind::Lda`] | votes as token bags | collapsed Gibbs sampling |
//!
//! The pools are the preimages of the assignment; refined distributions
//! always come from the pooled votes, never from the fitted parameters.

mod fmm;
mod gmm;
mod kmeans;
mod lda;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::pooling::Pooling;
use crate::selection::loss::Loss;

pub use fmm::fit_fmm;
pub use gmm::fit_gmm;
pub use kmeans::fit_kmeans;
pub use lda::fit_lda;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClusterModelKind {
    Fmm,
    Gmm,
    Kmeans,
    Lda,
}

impl fmt::Display for ClusterModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterModelKind::Fmm => "fmm",
            ClusterModelKind::Gmm => "gmm",
            ClusterModelKind::Kmeans => "kmeans",
            ClusterModelKind::Lda => "lda",
        })
    }
}

/// Symmetric Dirichlet concentrations of the multinomial mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmmPriors {
    /// Concentration on the mixing weights.
    pub gamma_pi: f64,
    /// Concentration on each component's label distribution.
    pub gamma_phi: f64,
}

impl Default for FmmPriors {
    fn default() -> Self {
        Self {
            gamma_pi: 75.0,
            gamma_phi: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    /// Document-topic concentration; `None` means `50 / p`.
    pub alpha: Option<f64>,
    /// Topic-label concentration.
    pub beta: f64,
    /// Total Gibbs sweeps.
    pub sweeps: usize,
    /// Sweeps discarded before estimates are averaged.
    pub burn_in: usize,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 0.1,
            sweeps: 1000,
            burn_in: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of clusters.
    pub p: usize,
    pub max_iter: usize,
    /// Stop once the objective improves by less than `tol * max(1, |objective|)`.
    pub tol: f64,
    pub seed: u64,
    pub fmm: FmmPriors,
    pub lda: LdaParams,
    pub variance_floor: f64,
}

impl FitConfig {
    pub fn new(p: usize, seed: u64) -> Self {
        Self {
            p,
            max_iter: 500,
            tol: 1e-10,
            seed,
            fmm: FmmPriors::default(),
            lda: LdaParams::default(),
            variance_floor: 1e-6,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidConfig("cluster count p must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be > 0".into()));
        }
        if !(self.variance_floor > 0.0) {
            return Err(Error::InvalidConfig("variance floor must be > 0".into()));
        }
        if self.fmm.gamma_pi < 0.0 || self.fmm.gamma_phi < 0.0 {
            return Err(Error::InvalidConfig("Dirichlet concentrations must be >= 0".into()));
        }
        if self.lda.beta <= 0.0 || self.lda.alpha.is_some_and(|a| a <= 0.0) {
            return Err(Error::InvalidConfig("LDA concentrations must be > 0".into()));
        }
        if self.lda.burn_in > self.lda.sweeps || self.lda.sweeps == 0 {
            return Err(Error::InvalidConfig(
                "LDA needs sweeps >= 1 and burn_in <= sweeps".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn converged(&self, prev: f64, next: f64) -> bool {
        (next - prev).abs() <= self.tol * prev.abs().max(1.0)
    }
}

/// Fitted component parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Components {
    /// One label distribution per component (fmm, lda).
    Multinomial { phi: Vec<Vec<f64>> },
    /// Diagonal Gaussians over distribution vectors (gmm).
    Gaussian {
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
    /// Centroids in distribution space (kmeans).
    Centroids { centroids: Vec<Vec<f64>> },
}

/// Result of fitting one clustering model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFit {
    pub kind: ClusterModelKind,
    pub p: usize,
    /// Mixing weights `pi`; for kmeans the empirical cluster proportions,
    /// for lda the mean topic proportions.
    pub weights: Vec<f64>,
    pub components: Components,
    pub assignment: Vec<usize>,
    /// Final objective: log posterior (fmm), log-likelihood (gmm, lda) or
    /// inertia (kmeans).
    pub objective: f64,
    /// Objective after every iteration, starting from the initial state.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iter` was reached before the tolerance was met.
    pub converged: bool,
    pub seed: u64,
}

impl ClusterFit {
    /// Partition pooling over the assignment preimages.
    pub fn pooling(&self, dataset: &Dataset, alpha: f64) -> Result<Pooling> {
        Pooling::from_assignment(dataset, self.assignment.clone(), self.p, alpha)
    }
}

pub fn fit(dataset: &Dataset, kind: ClusterModelKind, config: &FitConfig) -> Result<ClusterFit> {
    config.validate()?;
    match kind {
        ClusterModelKind::Fmm => fit_fmm(dataset, config),
        ClusterModelKind::Gmm => fit_gmm(dataset, config),
        ClusterModelKind::Kmeans => fit_kmeans(dataset, config),
        ClusterModelKind::Lda => fit_lda(dataset, config),
    }
}

/// Runs `trials` fits with seeds `seed, seed+1, ...`, scores each by `loss`
/// on the pooling it induces, and returns the fit with the median loss
/// (lower median for an even count).
pub fn fit_median_of_trials(
    dataset: &Dataset,
    kind: ClusterModelKind,
    config: &FitConfig,
    trials: usize,
    loss: &Loss,
) -> Result<ClusterFit> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    config.validate()?;
    let outcomes: Vec<Result<(f64, ClusterFit)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut cfg = *config;
            cfg.seed = config.seed.wrapping_add(t);
            let fit = fit(dataset, kind, &cfg)?;
            let score = loss.evaluate(&fit.pooling(dataset, 0.0)?, dataset)?;
            Ok((score, fit))
        })
        .collect();
    let mut last_err = None;
    let mut scored = Vec::new();
    for o in outcomes {
        match o {
            Ok(s) => scored.push(s),
            Err(e) => last_err = Some(e),
        }
    }
    if scored.is_empty() {
        return Err(Error::AllTrialsFailed(
            trials,
            last_err.map(|e| e.to_string()).unwrap_or_default(),
        ));
    }
    Ok(median_by_score(scored))
}

/// Element with the (lower) median score; ties keep input order.
pub(crate) fn median_by_score<T>(mut scored: Vec<(f64, T)>) -> T {
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mid = (scored.len() - 1) / 2;
    scored.swap_remove(mid).1
}

/// Hard assignment from per-item scores (ties to the lowest index).
pub(crate) fn argmax_rows(rows: &[Vec<f64>]) -> Vec<usize> {
    rows.iter().map(|r| crate::labels::argmax(r)).collect()
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
