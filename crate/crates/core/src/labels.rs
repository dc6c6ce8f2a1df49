//! Label space, vote counts and normalized label distributions.

use std::collections::HashSet;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a probability vector sums to one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Ordered set of label names. The order fixes vector indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSpace {
    labels: Vec<String>,
}

impl LabelSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::Validation(format!(
                "label space needs at least 2 labels, got {}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Validation(format!("duplicate label name {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// Labels named `0`, `1`, ... `d-1`.
    pub fn anonymous(d: usize) -> Result<Self> {
        Self::new((0..d).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }
}

impl TryFrom<Vec<String>> for LabelSpace {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::new(labels)
    }
}

impl From<LabelSpace> for Vec<String> {
    fn from(space: LabelSpace) -> Self {
        space.labels
    }
}

/// Integer vote counts of one item. Always has at least one vote.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct LabelCounts(Vec<u64>);

impl LabelCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::EmptyCounts);
        }
        Ok(Self(counts))
    }

    /// Total number of votes.
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }
}

impl Deref for LabelCounts {
    type Target = [u64];

    fn deref(&self) -> &[u64] {
        &self.0
    }
}

impl TryFrom<Vec<u64>> for LabelCounts {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LabelCounts> for Vec<u64> {
    fn from(c: LabelCounts) -> Self {
        c.0
    }
}

/// A probability vector over the label space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LabelDistribution(Vec<f64>);

impl LabelDistribution {
    /// Validates non-negativity and unit sum (within [`SIMPLEX_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    /// Smoothed relative frequencies `(c + alpha) / (m + alpha * d)`.
    pub fn from_counts(counts: &[u64], alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "smoothing alpha must be >= 0, got {alpha}"
            )));
        }
        let m: u64 = counts.iter().sum();
        if m == 0 {
            return Err(Error::EmptyCounts);
        }
        let denom = m as f64 + alpha * counts.len() as f64;
        Ok(Self(counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl Deref for LabelDistribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for LabelDistribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for LabelDistribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LabelDistribution> for Vec<f64> {
    fn from(d: LabelDistribution) -> Self {
        d.0
    }
}

/// Converts vote counts into a (smoothed) label distribution.
pub fn normalize(counts: &LabelCounts, alpha: f64) -> Result<LabelDistribution> {
    LabelDistribution::from_counts(counts, alpha)
}

/// First index of the maximum value.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
