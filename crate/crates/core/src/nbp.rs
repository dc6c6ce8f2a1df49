//! Neighborhood-based pooling.
//!
//! Every item `i` gets its own pool `K_i = { x : D(Y_x || Y_i) <= r }`, so a
//! pooling over `n` items has exactly `n` pools and `k(i) = i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::divergence::{distance, DivergenceKind};
use crate::error::{Error, Result};
use crate::labels::LabelDistribution;
use crate::pooling::Pooling;
use crate::selection::loss::loss_mean_kl;

/// Smoothing applied to the distributions being compared when the measure
/// is KL.
pub const DEFAULT_COMPARISON_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbpConfig {
    /// Neighborhood radius `r >= 0`.
    pub radius: f64,
    pub measure: DivergenceKind,
    /// Smoothing for compared distributions; only used with KL.
    pub comparison_alpha: f64,
    /// Smoothing for the refined output distributions.
    pub alpha: f64,
}

impl NbpConfig {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            measure: DivergenceKind::Kl,
            comparison_alpha: DEFAULT_COMPARISON_ALPHA,
            alpha: 0.0,
        }
    }

    pub fn with_measure(mut self, measure: DivergenceKind) -> Self {
        self.measure = measure;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "neighborhood radius must be >= 0, got {}",
                self.radius
            )));
        }
        Ok(())
    }
}

/// Pool sizes of a neighborhood pooling with their median and maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodStats {
    pub sizes: Vec<usize>,
    pub median: f64,
    pub maximum: usize,
}

impl NeighborhoodStats {
    pub fn from_sizes(sizes: Vec<usize>) -> Self {
        let mut sorted = sizes.clone();
        sorted.sort_unstable();
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        };
        Self {
            maximum: sorted[n - 1],
            median,
            sizes,
        }
    }
}

/// Dense matrix of divergences between all item pairs, reusable across
/// radii.
#[derive(Debug, Clone)]
pub struct NeighborhoodGraph {
    // columns[i][x] = D(Y_x || Y_i)
    columns: Vec<Vec<f64>>,
    measure: DivergenceKind,
}

impl NeighborhoodGraph {
    pub fn new(dataset: &Dataset, measure: DivergenceKind, comparison_alpha: f64) -> Result<Self> {
        let alpha = match measure {
            DivergenceKind::Kl => comparison_alpha,
            _ => 0.0,
        };
        let dists = dataset.distributions(alpha)?;
        let columns = dists
            .par_iter()
            .map(|center| {
                dists
                    .iter()
                    .map(|x| distance(x, center, measure))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::UndefinedDivergence { .. } => {
                    Error::InvalidConfig(format!("{e}; set the comparison alpha > 0 for KL neighborhoods"))
                }
                e => e,
            })?;
        Ok(Self { columns, measure })
    }

    pub fn measure(&self) -> DivergenceKind {
        self.measure
    }

    /// `D(Y_x || Y_center)`.
    pub fn divergence(&self, x: usize, center: usize) -> f64 {
        self.columns[center][x]
    }

    /// Members of the pool centred on `center`, in ascending index order.
    pub fn neighborhood(&self, center: usize, radius: f64) -> Vec<usize> {
        self.columns[center]
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= radius)
            .map(|(x, _)| x)
            .collect()
    }

    pub fn pooling(&self, dataset: &Dataset, radius: f64, alpha: f64) -> Result<(Pooling, NeighborhoodStats)> {
        let n = self.columns.len();
        if dataset.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: dataset.len(),
            });
        }
        let pools: Vec<Vec<usize>> = (0..n).into_par_iter().map(|i| self.neighborhood(i, radius)).collect();
        let stats = NeighborhoodStats::from_sizes(pools.iter().map(Vec::len).collect());
        let pooling = Pooling::from_pools(dataset, pools, (0..n).collect(), alpha)?;
        Ok((pooling, stats))
    }
}

pub fn build_nbp_pooling(dataset: &Dataset, config: &NbpConfig) -> Result<(Pooling, NeighborhoodStats)> {
    config.validate()?;
    NeighborhoodGraph::new(dataset, config.measure, config.comparison_alpha)?.pooling(
        dataset,
        config.radius,
        config.alpha,
    )
}

/// One row of a radius profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub r: f64,
    pub mean_kl: f64,
    pub n_median: f64,
    pub n_max: usize,
}

/// Mean pooled-vs-empirical KL and neighborhood sizes at each radius.
///
/// `config.radius` is ignored; `loss_alpha` is the smoothing used by the
/// KL loss.
pub fn neighborhood_profile(
    dataset: &Dataset,
    r_grid: &[f64],
    config: &NbpConfig,
    loss_alpha: f64,
) -> Result<Vec<ProfileRow>> {
    if r_grid.is_empty() {
        return Err(Error::InvalidConfig("radius grid is empty".into()));
    }
    if r_grid.windows(2).any(|w| w[0] > w[1]) || r_grid.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidConfig(
            "radius grid must be non-negative and ascending".into(),
        ));
    }
    let graph = NeighborhoodGraph::new(dataset, config.measure, config.comparison_alpha)?;
    r_grid
        .iter()
        .map(|&r| {
            let (pooling, stats) = graph.pooling(dataset, r, config.alpha)?;
            Ok(ProfileRow {
                r,
                mean_kl: loss_mean_kl(&pooling, dataset, loss_alpha)?,
                n_median: stats.median,
                n_max: stats.maximum,
            })
        })
        .collect()
}

/// Comparison distributions as used by [`NeighborhoodGraph`].
pub fn comparison_distributions(dataset: &Dataset, config: &NbpConfig) -> Result<Vec<LabelDistribution>> {
    dataset.distributions(match config.measure {
        DivergenceKind::Kl => config.comparison_alpha,
        _ => 0.0,
    })
}
