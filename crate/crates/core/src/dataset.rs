//! Annotated items and datasets.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{LabelCounts, LabelDistribution, LabelSpace};
use crate::rng::seeded;

/// One annotated item: its votes, and optionally a feature vector and the
/// identities of the annotators that produced the votes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataItem {
    pub id: String,
    pub counts: LabelCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
    #[serde(default, rename = "annotators", skip_serializing_if = "Option::is_none")]
    pub annotator_ids: Option<Vec<String>>,
}

impl DataItem {
    pub fn new(id: impl Into<String>, counts: LabelCounts) -> Self {
        Self {
            id: id.into(),
            counts,
            features: None,
            annotator_ids: None,
        }
    }

    pub fn with_features(mut self, features: Vec<f64>) -> Self {
        self.features = Some(features);
        self
    }

    /// Number of votes `m` for this item.
    pub fn votes(&self) -> u64 {
        self.counts.total()
    }
}

/// A validated, immutable collection of items over one label space.
///
/// Item order is load order and serves as the canonical item index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    label_space: LabelSpace,
    items: Vec<DataItem>,
}

impl Dataset {
    pub fn new(label_space: LabelSpace, items: Vec<DataItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Validation("dataset must contain at least one item".into()));
        }
        let d = label_space.len();
        let feature_dim = items[0].features.as_ref().map(Vec::len);
        for item in &items {
            if item.counts.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: item.counts.len(),
                });
            }
            if item.features.as_ref().map(Vec::len) != feature_dim {
                return Err(Error::Validation(format!(
                    "item {:?}: features must be present on all items with equal length",
                    item.id
                )));
            }
            if let Some(f) = &item.features {
                if f.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Validation(format!(
                        "item {:?}: non-finite feature value",
                        item.id
                    )));
                }
            }
        }
        Ok(Self { label_space, items })
    }

    /// Builds a dataset from raw count rows, naming items by their index.
    pub fn from_counts(label_space: LabelSpace, rows: Vec<Vec<u64>>) -> Result<Self> {
        let items = rows
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                LabelCounts::new(c)
                    .map(|c| DataItem::new(i.to_string(), c))
                    .map_err(|_| Error::ZeroTotal { id: i.to_string() })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(label_space, items)
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn items(&self) -> &[DataItem] {
        &self.items
    }

    pub fn item(&self, i: usize) -> &DataItem {
        &self.items[i]
    }

    /// Number of items `n`.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of labels `d`.
    pub fn num_labels(&self) -> usize {
        self.label_space.len()
    }

    pub fn counts(&self, i: usize) -> &LabelCounts {
        &self.items[i].counts
    }

    /// Per-item vote totals.
    pub fn votes(&self) -> Vec<u64> {
        self.items.iter().map(DataItem::votes).collect()
    }

    /// The common vote count when every item has the same number of votes.
    pub fn uniform_votes(&self) -> Option<u64> {
        let m = self.items[0].votes();
        self.items.iter().all(|it| it.votes() == m).then_some(m)
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.items[0].features.as_ref().map(Vec::len)
    }

    /// Empirical distribution of every item under smoothing `alpha`.
    pub fn distributions(&self, alpha: f64) -> Result<Vec<LabelDistribution>> {
        self.items
            .iter()
            .map(|it| LabelDistribution::from_counts(&it.counts, alpha))
            .collect()
    }

    /// Total votes per label over the whole dataset.
    pub fn label_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.num_labels()];
        for it in &self.items {
            for (t, c) in totals.iter_mut().zip(it.counts.iter()) {
                *t += c;
            }
        }
        totals
    }

    /// New dataset holding the given items, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.label_space.clone(),
            indices.iter().map(|&i| self.items[i].clone()).collect(),
        )
    }

    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|it| it.id == id)
    }
}

/// Split ratios for train/dev/test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.5,
            dev: 0.25,
            test: 0.25,
        }
    }
}

/// Uniformly permutes the items under `seed` and cuts the permutation into
/// train/dev/test parts of (rounded) proportional size.
pub fn split_dataset(dataset: &Dataset, ratios: SplitRatios, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let SplitRatios { train, dev, test } = ratios;
    if [train, dev, test].iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::InvalidConfig("split ratios must lie in [0, 1]".into()));
    }
    if (train + dev + test - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "split ratios must sum to 1, got {}",
            train + dev + test
        )));
    }
    let n = dataset.len();
    let n_train = ((n as f64 * train).round() as usize).min(n);
    let n_dev = ((n as f64 * dev).round() as usize).min(n - n_train);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let (a, rest) = order.split_at(n_train);
    let (b, c) = rest.split_at(n_dev);
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "split of {n} items leaves an empty part ({}/{}/{})",
            a.len(),
            b.len(),
            c.len()
        )));
    }
    Ok((dataset.subset(a)?, dataset.subset(b)?, dataset.subset(c)?))
}
