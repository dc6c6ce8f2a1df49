//! Summary statistics of replicate losses.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); zero for one value.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Fraction of replicate losses strictly greater than the training loss,
/// over the number of replicates.
pub fn pvalue_fraction(losses: &[f64], train_loss: f64) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::Validation("no replicate losses".into()));
    }
    Ok(losses.iter().filter(|&&l| l > train_loss).count() as f64 / losses.len() as f64)
}

/// `(mean(losses) - train_loss) / sample_std(losses)`.
pub fn standardized_difference(losses: &[f64], train_loss: f64) -> Result<f64> {
    if losses.len() < 2 {
        return Err(Error::Validation(
            "standardized difference needs at least 2 replicates".into(),
        ));
    }
    let sigma = sample_std(losses);
    // identical losses can still leave rounding residue in sigma
    if losses.iter().all(|&l| l == losses[0]) || !(sigma > 1e-14 * mean(losses).abs()) {
        return Err(Error::DegenerateSynthetic);
    }
    Ok((mean(losses) - train_loss) / sigma)
}
