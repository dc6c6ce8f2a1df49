//! Pooling losses. Both are oriented so that lower is better.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dataset::Dataset;
use crate::divergence::kl;
use crate::error::{Error, Result};
use crate::labels::LabelDistribution;
use crate::pooling::Pooling;

/// Default smoothing applied inside losses.
pub const DEFAULT_LOSS_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean over items of `KL(refined || empirical)`.
    #[value(name = "kl", alias = "mean_kl")]
    MeanKl,
    /// Negated multinomial log-likelihood of all votes under the refined
    /// distributions.
    #[value(name = "loglik", alias = "multinomial_loglik")]
    MultinomialLoglik,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::MeanKl => "kl",
            LossKind::MultinomialLoglik => "loglik",
        })
    }
}

/// A loss kind plus the smoothing applied to the distributions it compares.
///
/// Refined distributions are recomputed from the pooled counts with
/// `alpha`, and (for KL) so are the empirical ones; a pool of one item
/// therefore scores zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub kind: LossKind,
    pub alpha: f64,
}

impl Loss {
    pub fn new(kind: LossKind, alpha: f64) -> Self {
        Self { kind, alpha }
    }

    pub fn mean_kl() -> Self {
        Self::new(LossKind::MeanKl, DEFAULT_LOSS_ALPHA)
    }

    pub fn multinomial() -> Self {
        Self::new(LossKind::MultinomialLoglik, DEFAULT_LOSS_ALPHA)
    }

    /// Loss of the pooling on the data it was built from.
    pub fn evaluate(&self, pooling: &Pooling, dataset: &Dataset) -> Result<f64> {
        if pooling.num_items() != dataset.len() {
            return Err(Error::DimensionMismatch {
                expected: dataset.len(),
                found: pooling.num_items(),
            });
        }
        self.evaluate_pairs(
            pooling,
            dataset
                .items()
                .iter()
                .zip(pooling.assignment())
                .map(|(it, &k)| (it.counts.as_slice(), k)),
        )
    }

    /// Loss over arbitrary `(counts, pool index)` pairs scored against the
    /// pooling's pooled counts.
    pub fn evaluate_pairs<'a>(
        &self,
        pooling: &Pooling,
        pairs: impl IntoIterator<Item = (&'a [u64], usize)>,
    ) -> Result<f64> {
        let refined = RefinedCache::new(pooling, self.alpha)?;
        match self.kind {
            LossKind::MeanKl => {
                let mut total = 0.0;
                let mut n = 0usize;
                for (counts, pool) in pairs {
                    let empirical = LabelDistribution::from_counts(counts, self.alpha)?;
                    total += kl(refined.get(pool)?, &empirical)?;
                    n += 1;
                }
                if n == 0 {
                    return Err(Error::Validation("loss over zero items".into()));
                }
                Ok(total / n as f64)
            }
            LossKind::MultinomialLoglik => {
                let mut total = 0.0;
                for (counts, pool) in pairs {
                    total -= multinomial_log_pmf(counts, refined.get(pool)?)?;
                }
                Ok(total)
            }
        }
    }
}

struct RefinedCache(Vec<Option<LabelDistribution>>);

impl RefinedCache {
    fn new(pooling: &Pooling, alpha: f64) -> Result<Self> {
        (0..pooling.num_pools())
            .map(|j| {
                pooling
                    .pooled_counts(j)
                    .map(|c| LabelDistribution::from_counts(c, alpha))
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    fn get(&self, pool: usize) -> Result<&[f64]> {
        self.0
            .get(pool)
            .and_then(Option::as_ref)
            .map(|d| d.as_slice())
            .ok_or(Error::EmptyPool)
    }
}

/// `ln( m! / prod_y c_y! * prod_y q_y^c_y )`.
pub fn multinomial_log_pmf(counts: &[u64], probs: &[f64]) -> Result<f64> {
    if counts.len() != probs.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            found: counts.len(),
        });
    }
    let m: u64 = counts.iter().sum();
    let mut lp = ln_gamma(m as f64 + 1.0);
    for (label, (&c, &q)) in counts.iter().zip(probs).enumerate() {
        if c == 0 {
            continue;
        }
        if q <= 0.0 {
            return Err(Error::ZeroProbability { label });
        }
        lp += c as f64 * q.ln() - ln_gamma(c as f64 + 1.0);
    }
    Ok(lp)
}

/// Mean `KL(refined_k(i) || empirical_i)` over the items of `dataset`.
pub fn loss_mean_kl(pooling: &Pooling, dataset: &Dataset, alpha: f64) -> Result<f64> {
    Loss::new(LossKind::MeanKl, alpha).evaluate(pooling, dataset)
}

/// Negated sum over items of the multinomial log-pmf of the item's votes
/// under its refined distribution.
// The printed likelihood leads with a single `log n!` term; the per-item
// `log m_i!` used here is what makes each term a proper log-pmf.
pub fn loss_multinomial_loglik(pooling: &Pooling, dataset: &Dataset, alpha: f64) -> Result<f64> {
    Loss::new(LossKind::MultinomialLoglik, alpha).evaluate(pooling, dataset)
}
