//! Poolings: covers of the item set whose merged votes give each item a
//! refined label distribution.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::labels::LabelDistribution;

/// Element-wise sum of the votes of the pool members.
pub fn pooled_counts(pool: &[usize], dataset: &Dataset) -> Result<Vec<u64>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut sum = vec![0u64; dataset.num_labels()];
    for &i in pool {
        for (s, c) in sum.iter_mut().zip(dataset.counts(i).iter()) {
            *s += c;
        }
    }
    Ok(sum)
}

/// Distribution of the merged votes of `pool`, smoothed by `alpha`.
pub fn pooled_distribution(pool: &[usize], dataset: &Dataset, alpha: f64) -> Result<LabelDistribution> {
    LabelDistribution::from_counts(&pooled_counts(pool, dataset)?, alpha)
}

/// A pooling `(p, K_1..K_p, k)` together with the merged counts and refined
/// distribution of every non-empty pool.
///
/// Pools are indexed from zero. Clustering poolings may hold empty pools;
/// those have no refined distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pooling {
    item_ids: Vec<String>,
    pools: Vec<Vec<usize>>,
    assignment: Vec<usize>,
    pooled_counts: Vec<Option<Vec<u64>>>,
    refined: Vec<Option<LabelDistribution>>,
    smoothing: f64,
}

impl Pooling {
    /// Builds a pooling from explicit pools and an assignment.
    ///
    /// The pools must cover every item and each item must be assigned to a
    /// non-empty pool.
    pub fn from_pools(dataset: &Dataset, pools: Vec<Vec<usize>>, assignment: Vec<usize>, alpha: f64) -> Result<Self> {
        let n = dataset.len();
        if assignment.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: assignment.len(),
            });
        }
        let mut covered = vec![false; n];
        for pool in &pools {
            for &i in pool {
                if i >= n {
                    return Err(Error::Validation(format!("pool member {i} out of range")));
                }
                covered[i] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::Validation(format!("item {i} is not covered by any pool")));
        }
        for (i, &k) in assignment.iter().enumerate() {
            if k >= pools.len() || pools[k].is_empty() {
                return Err(Error::Validation(format!(
                    "item {i} is assigned to missing or empty pool {k}"
                )));
            }
        }
        let pooled_counts: Vec<Option<Vec<u64>>> = pools
            .iter()
            .map(|p| (!p.is_empty()).then(|| pooled_counts(p, dataset)).transpose())
            .collect::<Result<_>>()?;
        let refined = pooled_counts
            .iter()
            .map(|c| c.as_ref().map(|c| LabelDistribution::from_counts(c, alpha)).transpose())
            .collect::<Result<_>>()?;
        Ok(Self {
            item_ids: dataset.items().iter().map(|it| it.id.clone()).collect(),
            pools,
            assignment,
            pooled_counts,
            refined,
            smoothing: alpha,
        })
    }

    /// Builds the partition pooling whose pools are the preimages of a hard
    /// assignment into `p` groups.
    pub fn from_assignment(dataset: &Dataset, assignment: Vec<usize>, p: usize, alpha: f64) -> Result<Self> {
        let mut pools = vec![Vec::new(); p];
        for (i, &k) in assignment.iter().enumerate() {
            if k >= p {
                return Err(Error::Validation(format!("assignment {k} of item {i} exceeds p = {p}")));
            }
            pools[k].push(i);
        }
        Self::from_pools(dataset, pools, assignment, alpha)
    }

    /// Number of pools `p`.
    pub fn num_pools(&self) -> usize {
        self.pools.len()
    }

    pub fn num_items(&self) -> usize {
        self.assignment.len()
    }

    pub fn pools(&self) -> &[Vec<usize>] {
        &self.pools
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    /// Smoothing used for the stored refined distributions.
    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn pool_sizes(&self) -> Vec<usize> {
        self.pools.iter().map(Vec::len).collect()
    }

    pub fn pooled_counts(&self, pool: usize) -> Option<&[u64]> {
        self.pooled_counts[pool].as_deref()
    }

    pub fn refined(&self, pool: usize) -> Option<&LabelDistribution> {
        self.refined[pool].as_ref()
    }

    /// Refined distribution of the pool an item is assigned to.
    pub fn refined_for_item(&self, item: usize) -> &LabelDistribution {
        self.refined[self.assignment[item]]
            .as_ref()
            .expect("assigned pools are non-empty")
    }

    /// Refined distribution of `pool` recomputed from its merged counts
    /// under a different smoothing.
    pub fn refined_with(&self, pool: usize, alpha: f64) -> Result<LabelDistribution> {
        let counts = self.pooled_counts[pool].as_ref().ok_or(Error::EmptyPool)?;
        LabelDistribution::from_counts(counts, alpha)
    }

    /// Empirical pool weights `|K_j| / sum |K_j|`.
    pub fn empirical_weights(&self) -> Vec<f64> {
        let total: usize = self.pools.iter().map(Vec::len).sum();
        self.pools.iter().map(|p| p.len() as f64 / total as f64).collect()
    }

    /// Item -> position lookup by id.
    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.item_ids.iter().position(|x| x == id)
    }
}
