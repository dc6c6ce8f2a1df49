//! Synthetic label sets.
//!
//! [`generate_population_sample`] simulates annotators labelling items drawn
//! from a known population. The cluster, NBP and bootstrap samplers produce
//! label sets with the same shape as a reference dataset; they are the
//! generators behind the selection tests.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterFit;
use crate::dataset::{DataItem, Dataset};
use crate::error::{Error, Result};
use crate::labels::{LabelCounts, LabelDistribution, LabelSpace, SIMPLEX_TOL};
use crate::pooling::Pooling;
use crate::rng::{categorical, multinomial, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Cluster,
    Nbp,
    Bootstrap,
    Population,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Cluster => "cluster",
            SamplerKind::Nbp => "nbp",
            SamplerKind::Bootstrap => "bootstrap",
            SamplerKind::Population => "population",
        })
    }
}

/// Where a synthetic item's votes were drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// The refined distribution of a pool.
    Pool(usize),
    /// The empirical distribution of a reference item.
    Item(usize),
    /// A population draw with no reference object.
    Population,
}

/// Votes of `n` synthetic items plus the source of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLabelSet {
    pub counts: Vec<Vec<u64>>,
    pub sources: Vec<Source>,
    pub generator: SamplerKind,
    pub seed: u64,
}

impl SyntheticLabelSet {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Pairs each synthetic item with the pool of `pooling` it is scored
    /// against: the source pool, or the pool of the source item.
    pub fn scoring_pairs<'a>(&'a self, pooling: &'a Pooling) -> Result<Vec<(&'a [u64], usize)>> {
        self.counts
            .iter()
            .zip(&self.sources)
            .map(|(c, s)| {
                let pool = match *s {
                    Source::Pool(j) => j,
                    Source::Item(j) => *pooling
                        .assignment()
                        .get(j)
                        .ok_or_else(|| Error::Validation(format!("source item {j} out of range")))?,
                    Source::Population => {
                        return Err(Error::Validation(
                            "population draws have no pool to score against".into(),
                        ))
                    }
                };
                Ok((c.as_slice(), pool))
            })
            .collect()
    }

    /// The label set as a dataset with ids `s0`, `s1`, ...
    pub fn to_dataset(&self, label_space: LabelSpace) -> Result<Dataset> {
        let items = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, c)| Ok(DataItem::new(format!("s{i}"), LabelCounts::new(c.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(label_space, items)
    }
}

fn check_votes(votes: &[u64]) -> Result<()> {
    if votes.is_empty() {
        return Err(Error::InvalidConfig("synthetic set needs n >= 1 items".into()));
    }
    if votes.contains(&0) {
        return Err(Error::InvalidConfig("every synthetic item needs m >= 1 votes".into()));
    }
    Ok(())
}

/// Mixing weights used by [`cluster_sampler`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MixingWeights {
    /// Pool sizes over `n`; defined for every model kind.
    #[default]
    Empirical,
    /// The fitted weights; a draw that lands on an empty pool is redrawn.
    Model,
}

impl fmt::Display for MixingWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixingWeights::Empirical => "empirical",
            MixingWeights::Model => "model",
        })
    }
}

/// For each output item: draw a pool `j`, then `m` votes from its refined
/// distribution.
pub fn cluster_sampler(
    fit: &ClusterFit,
    pooling: &Pooling,
    votes: &[u64],
    seed: u64,
    weights: MixingWeights,
) -> Result<SyntheticLabelSet> {
    check_votes(votes)?;
    let w = match weights {
        MixingWeights::Empirical => pooling.empirical_weights(),
        MixingWeights::Model => {
            if fit.weights.len() != pooling.num_pools() {
                return Err(Error::DimensionMismatch {
                    expected: pooling.num_pools(),
                    found: fit.weights.len(),
                });
            }
            // zeroing empty pools is the same law as redrawing until a
            // non-empty one comes up
            let w: Vec<f64> = fit
                .weights
                .iter()
                .enumerate()
                .map(|(j, &x)| if pooling.refined(j).is_some() { x } else { 0.0 })
                .collect();
            if !(w.iter().sum::<f64>() > 0.0) {
                return Err(Error::InvalidDistribution(
                    "model weights put no mass on a non-empty pool".into(),
                ));
            }
            w
        }
    };
    let mut rng = seeded(seed);
    let mut counts = Vec::with_capacity(votes.len());
    let mut sources = Vec::with_capacity(votes.len());
    for &m in votes {
        let j = categorical(&w, &mut rng);
        let refined = pooling.refined(j).ok_or(Error::EmptyPool)?;
        counts.push(multinomial(m, refined, &mut rng));
        sources.push(Source::Pool(j));
    }
    Ok(SyntheticLabelSet {
        counts,
        sources,
        generator: SamplerKind::Cluster,
        seed,
    })
}

/// For each output item: draw a pool uniformly, then `m` votes from its
/// refined distribution.
pub fn nbp_sampler(pooling: &Pooling, votes: &[u64], seed: u64) -> Result<SyntheticLabelSet> {
    check_votes(votes)?;
    let n = pooling.num_pools();
    let mut rng = seeded(seed);
    let mut counts = Vec::with_capacity(votes.len());
    let mut sources = Vec::with_capacity(votes.len());
    for &m in votes {
        let j = rng.random_range(0..n);
        let refined = pooling.refined(j).ok_or(Error::EmptyPool)?;
        counts.push(multinomial(m, refined, &mut rng));
        sources.push(Source::Pool(j));
    }
    Ok(SyntheticLabelSet {
        counts,
        sources,
        generator: SamplerKind::Nbp,
        seed,
    })
}

/// For each output item: draw a reference item uniformly, then `m` votes
/// from its unsmoothed empirical distribution.
pub fn bootstrap_sampler(dataset: &Dataset, votes: &[u64], seed: u64) -> Result<SyntheticLabelSet> {
    check_votes(votes)?;
    let empirical = dataset.distributions(0.0)?;
    let mut rng = seeded(seed);
    let mut counts = Vec::with_capacity(votes.len());
    let mut sources = Vec::with_capacity(votes.len());
    for &m in votes {
        let j = rng.random_range(0..empirical.len());
        counts.push(multinomial(m, &empirical[j], &mut rng));
        sources.push(Source::Item(j));
    }
    Ok(SyntheticLabelSet {
        counts,
        sources,
        generator: SamplerKind::Bootstrap,
        seed,
    })
}

/// Votes per item: one value for all items, or one per item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VotesPerItem {
    Uniform(u64),
    PerItem(Vec<u64>),
}

impl VotesPerItem {
    fn get(&self, i: usize) -> u64 {
        match self {
            VotesPerItem::Uniform(m) => *m,
            VotesPerItem::PerItem(v) => v[i],
        }
    }
}

/// True label distribution of each item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PopulationModel {
    /// Item `i` has distribution `distributions[i]`.
    PerItem { distributions: Vec<Vec<f64>> },
    /// Each item first draws a component by `weights`.
    Mixture {
        components: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

/// An annotator answers from the item's true distribution with probability
/// `reliability` and uniformly at random otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotator {
    pub id: String,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeConfig {
    pub labels: LabelSpace,
    pub n: usize,
    pub votes: VotesPerItem,
    pub population: PopulationModel,
    pub annotators: Vec<Annotator>,
    /// When set, each item gets features equal to its true distribution
    /// plus Gaussian noise of this standard deviation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_noise: Option<f64>,
}

impl GenerativeConfig {
    /// `n` items with `m` votes each from `k` fully reliable annotators.
    pub fn new(labels: LabelSpace, n: usize, m: u64, population: PopulationModel, k: usize) -> Self {
        Self {
            labels,
            n,
            votes: VotesPerItem::Uniform(m),
            population,
            annotators: (0..k)
                .map(|a| Annotator {
                    id: format!("a{a}"),
                    reliability: 1.0,
                })
                .collect(),
            feature_noise: None,
        }
    }

    pub fn with_reliability(mut self, reliability: f64) -> Self {
        self.annotators.iter_mut().for_each(|a| a.reliability = reliability);
        self
    }

    pub fn with_feature_noise(mut self, sigma: f64) -> Self {
        self.feature_noise = Some(sigma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.labels.len();
        if self.n == 0 {
            return Err(Error::InvalidConfig("population sample needs n >= 1".into()));
        }
        match &self.votes {
            VotesPerItem::Uniform(0) => return Err(Error::InvalidConfig("votes per item must be >= 1".into())),
            VotesPerItem::PerItem(v) if v.len() != self.n || v.contains(&0) => {
                return Err(Error::InvalidConfig("per-item votes need n entries, each >= 1".into()))
            }
            _ => {}
        }
        let check = |p: &[f64]| -> Result<()> {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
            LabelDistribution::new(p.to_vec()).map(|_| ())
        };
        match &self.population {
            PopulationModel::PerItem { distributions } => {
                if distributions.len() != self.n {
                    return Err(Error::InvalidConfig(format!(
                        "{} per-item distributions for n = {}",
                        distributions.len(),
                        self.n
                    )));
                }
                distributions.iter().try_for_each(|p| check(p))?;
            }
            PopulationModel::Mixture { components, weights } => {
                if components.is_empty() || components.len() != weights.len() {
                    return Err(Error::InvalidConfig("mixture needs one weight per component".into()));
                }
                components.iter().try_for_each(|p| check(p))?;
                let s: f64 = weights.iter().sum();
                if weights.iter().any(|w| *w < 0.0) || (s - 1.0).abs() > SIMPLEX_TOL {
                    return Err(Error::InvalidDistribution("mixture weights".into()));
                }
            }
        }
        if self.annotators.is_empty() {
            return Err(Error::InvalidConfig("annotator pool is empty".into()));
        }
        if let Some(a) = self.annotators.iter().find(|a| !(0.0..=1.0).contains(&a.reliability)) {
            return Err(Error::InvalidConfig(format!(
                "annotator {:?} reliability {} outside [0, 1]",
                a.id, a.reliability
            )));
        }
        if self.feature_noise.is_some_and(|s| !(s >= 0.0)) {
            return Err(Error::InvalidConfig("feature noise must be >= 0".into()));
        }
        Ok(())
    }
}

/// Simulates annotation of `n` items.
///
/// Each item draws its `m` annotators from the pool (without replacement
/// when the pool is large enough), and each annotator emits one label from
/// `reliability * true + (1 - reliability) * uniform`.
pub fn generate_population_sample(config: &GenerativeConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let d = config.labels.len();
    let mut rng = seeded(seed);
    let noise = config
        .feature_noise
        .map(|s| Normal::new(0.0, s).map_err(|e| Error::InvalidConfig(e.to_string())))
        .transpose()?;
    let pool = config.annotators.len();
    let mut items = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let truth: &[f64] = match &config.population {
            PopulationModel::PerItem { distributions } => &distributions[i],
            PopulationModel::Mixture { components, weights } => &components[categorical(weights, &mut rng)],
        };
        let m = config.votes.get(i) as usize;
        let chosen: Vec<usize> = if m <= pool {
            index::sample(&mut rng, pool, m).into_vec()
        } else {
            (0..m).map(|_| rng.random_range(0..pool)).collect()
        };
        let mut counts = vec![0u64; d];
        for &a in &chosen {
            let r = config.annotators[a].reliability;
            let emit: Vec<f64> = truth.iter().map(|t| r * t + (1.0 - r) / d as f64).collect();
            counts[categorical(&emit, &mut rng)] += 1;
        }
        let mut item = DataItem::new(format!("x{i}"), LabelCounts::new(counts)?);
        item.annotator_ids = Some(chosen.iter().map(|&a| config.annotators[a].id.clone()).collect());
        if let Some(normal) = &noise {
            item.features = Some(truth.iter().map(|t| t + normal.sample(&mut rng)).collect());
        }
        items.push(item);
    }
    Dataset::new(config.labels.clone(), items)
}
