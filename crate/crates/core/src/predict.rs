//! Linear softmax regression onto label distributions.
//!
//! The model maps a feature vector `x` to `softmax(W^T x + b)` and is
//! trained by full-batch gradient descent on the mean of
//! `KL(target || prediction)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::divergence::kl;
use crate::error::{Error, Result};
use crate::labels::{argmax, LabelDistribution};
use crate::pooling::Pooling;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Recorded with the model. Initialization is all zeros and every step
    /// uses the full batch, so training does not consume randomness.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    /// `feature_dim x d`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub config: TrainConfig,
    /// Training loss before the first step and after every epoch.
    pub loss_history: Vec<f64>,
}

/// Gradient of the mean KL loss with the model's parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

fn softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        s += *v;
    }
    logits.iter_mut().for_each(|v| *v /= s);
}

/// `sum_y t_y ln(t_y / q_y)` that stays finite when `q` underflows on a
/// label with tiny target mass.
fn kl_to(target: &[f64], q: &[f64]) -> f64 {
    target
        .iter()
        .zip(q)
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, &q)| t * (t / q.max(f64::MIN_POSITIVE)).ln())
        .sum::<f64>()
        .max(0.0)
}

impl SoftmaxModel {
    /// All-zero parameters; predicts the uniform distribution.
    pub fn zeros(feature_dim: usize, d: usize, config: TrainConfig) -> Self {
        Self {
            weights: vec![vec![0.0; d]; feature_dim],
            bias: vec![0.0; d],
            config,
            loss_history: Vec::new(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn num_labels(&self) -> usize {
        self.bias.len()
    }

    pub fn logits(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                found: features.len(),
            });
        }
        let mut z = self.bias.clone();
        for (x, row) in features.iter().zip(&self.weights) {
            for (zy, w) in z.iter_mut().zip(row) {
                *zy += x * w;
            }
        }
        Ok(z)
    }

    pub fn predict(&self, features: &[f64]) -> Result<LabelDistribution> {
        let mut z = self.logits(features)?;
        softmax(&mut z);
        LabelDistribution::new(z)
    }

    /// Mean `KL(target || prediction)` and its gradient.
    pub fn loss_and_gradient(&self, features: &[Vec<f64>], targets: &[LabelDistribution]) -> Result<(f64, Gradient)> {
        check_batch(features, targets, self.num_labels())?;
        let n = features.len() as f64;
        let mut grad = Gradient {
            weights: vec![vec![0.0; self.num_labels()]; self.feature_dim()],
            bias: vec![0.0; self.num_labels()],
        };
        let mut loss = 0.0;
        for (x, t) in features.iter().zip(targets) {
            let mut q = self.logits(x)?;
            softmax(&mut q);
            loss += kl_to(t, &q);
            // d KL / d logits = q - t
            for y in 0..q.len() {
                let g = (q[y] - t[y]) / n;
                grad.bias[y] += g;
                for (row, xj) in grad.weights.iter_mut().zip(x) {
                    row[y] += g * xj;
                }
            }
        }
        Ok((loss / n, grad))
    }

    fn stepped(&self, grad: &Gradient, lr: f64) -> Self {
        let mut next = self.clone();
        for (w, g) in next.weights.iter_mut().flatten().zip(grad.weights.iter().flatten()) {
            *w -= lr * g;
        }
        for (b, g) in next.bias.iter_mut().zip(&grad.bias) {
            *b -= lr * g;
        }
        next
    }
}

fn check_batch(features: &[Vec<f64>], targets: &[LabelDistribution], d: usize) -> Result<()> {
    if features.is_empty() {
        return Err(Error::Validation("empty training or evaluation set".into()));
    }
    if features.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            found: targets.len(),
        });
    }
    if let Some(t) = targets.iter().find(|t| t.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: t.len(),
        });
    }
    Ok(())
}

/// Full-batch gradient descent from zero parameters.
///
/// A step that would raise the loss is retried with half the learning
/// rate, so the recorded loss history never increases.
pub fn train(features: &[Vec<f64>], targets: &[LabelDistribution], config: TrainConfig) -> Result<SoftmaxModel> {
    if !(config.learning_rate > 0.0) {
        return Err(Error::InvalidConfig("learning rate must be > 0".into()));
    }
    let d = targets.first().map(|t| t.len()).unwrap_or(0);
    check_batch(features, targets, d)?;
    let dim = features[0].len();
    let mut model = SoftmaxModel::zeros(dim, d, config);
    let (mut loss, mut grad) = model.loss_and_gradient(features, targets)?;
    let mut history = vec![loss];
    let mut lr = config.learning_rate;
    for _ in 0..config.epochs {
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = model.stepped(&grad, lr);
            let (next_loss, next_grad) = candidate.loss_and_gradient(features, targets)?;
            if next_loss <= loss {
                model = candidate;
                loss = next_loss;
                grad = next_grad;
                accepted = true;
                break;
            }
            lr /= 2.0;
        }
        history.push(loss);
        if !accepted {
            // no descent step exists at this precision
            break;
        }
    }
    model.loss_history = history;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mean_kl: f64,
    pub accuracy: f64,
    pub n: usize,
}

/// Mean `KL(target || prediction)` and the fraction of items whose
/// predicted and target argmax agree (ties to the lowest label index).
pub fn evaluate(model: &SoftmaxModel, features: &[Vec<f64>], targets: &[LabelDistribution]) -> Result<Evaluation> {
    check_batch(features, targets, model.num_labels())?;
    let scored: Vec<(f64, bool)> = features
        .par_iter()
        .zip(targets)
        .map(|(x, t)| {
            let q = model.predict(x)?;
            Ok((kl(t, &q)?, argmax(&q) == argmax(t)))
        })
        .collect::<Result<_>>()?;
    let n = scored.len();
    Ok(Evaluation {
        mean_kl: scored.iter().map(|s| s.0).sum::<f64>() / n as f64,
        accuracy: scored.iter().filter(|s| s.1).count() as f64 / n as f64,
        n,
    })
}

/// Feature vectors of all items; errors if any item lacks them.
pub fn features_of(dataset: &Dataset) -> Result<Vec<Vec<f64>>> {
    dataset
        .items()
        .iter()
        .map(|it| {
            it.features
                .clone()
                .ok_or_else(|| Error::Validation(format!("item {:?} has no features", it.id)))
        })
        .collect()
}

/// Refined distribution of every item of `dataset`, looked up by id in a
/// pooling built on a (possibly larger) dataset.
pub fn refined_targets(dataset: &Dataset, pooling: &Pooling) -> Result<Vec<LabelDistribution>> {
    dataset
        .items()
        .iter()
        .map(|it| {
            pooling
                .position_of(&it.id)
                .map(|i| pooling.refined_for_item(i).clone())
                .ok_or_else(|| Error::Validation(format!("item {:?} is not in the pooling", it.id)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn dist(v: &[f64]) -> LabelDistribution {
        LabelDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = SoftmaxModel::zeros(3, 4, TrainConfig::default());
        assert_eq!(m.predict(&[1.0, -2.0, 0.5]).unwrap().as_slice(), &[0.25; 4]);
        let trained = train(
            &[vec![1.0, 2.0]],
            &[dist(&[0.9, 0.1])],
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(trained.predict(&[3.0, 3.0]).unwrap().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn hand_softmax() {
        let mut m = SoftmaxModel::zeros(1, 2, TrainConfig::default());
        m.bias = vec![0.0, 3f64.ln()];
        let q = m.predict(&[0.0]).unwrap();
        assert!((q[0] - 0.25).abs() < 1e-15 && (q[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn shift_invariance() {
        let mut m = SoftmaxModel::zeros(2, 3, TrainConfig::default());
        m.weights = vec![vec![0.3, -1.0, 2.0], vec![0.5, 0.1, -0.4]];
        m.bias = vec![0.2, 0.0, -0.7];
        let a = m.predict(&[0.4, 1.3]).unwrap();
        m.bias.iter_mut().for_each(|b| *b += 17.5);
        let b = m.predict(&[0.4, 1.3]).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded(21);
        let features: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let targets: Vec<LabelDistribution> = (0..6)
            .map(|_| {
                let v: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
                let s: f64 = v.iter().sum();
                dist(&v.iter().map(|x| x / s).collect::<Vec<_>>())
            })
            .collect();
        let mut m = SoftmaxModel::zeros(3, 4, TrainConfig::default());
        m.weights
            .iter_mut()
            .flatten()
            .for_each(|w| *w = rng.random_range(-1.0..1.0));
        m.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        let (_, g) = m.loss_and_gradient(&features, &targets).unwrap();
        let h = 1e-6;
        let loss = |m: &SoftmaxModel| m.loss_and_gradient(&features, &targets).unwrap().0;
        let mut max_err: f64 = 0.0;
        for j in 0..3 {
            for y in 0..4 {
                let (mut up, mut down) = (m.clone(), m.clone());
                up.weights[j][y] += h;
                down.weights[j][y] -= h;
                max_err = max_err.max(((loss(&up) - loss(&down)) / (2.0 * h) - g.weights[j][y]).abs());
            }
        }
        for y in 0..4 {
            let (mut up, mut down) = (m.clone(), m.clone());
            up.bias[y] += h;
            down.bias[y] -= h;
            max_err = max_err.max(((loss(&up) - loss(&down)) / (2.0 * h) - g.bias[y]).abs());
        }
        assert!(max_err < 1e-5, "{max_err}");
    }

    #[test]
    fn overfits_one_item() {
        let target = dist(&[0.6, 0.3, 0.1]);
        let x = vec![vec![0.7, -1.2]];
        let m = train(
            &x,
            std::slice::from_ref(&target),
            TrainConfig {
                epochs: 2000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(kl(&target, &m.predict(&x[0]).unwrap()).unwrap() < 1e-4);
        assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn evaluation_values() {
        let m = SoftmaxModel::zeros(1, 2, TrainConfig::default());
        let e = evaluate(&m, &[vec![0.0]], &[dist(&[0.5, 0.5])]).unwrap();
        assert_eq!((e.mean_kl, e.accuracy), (0.0, 1.0));
        let mut m = SoftmaxModel::zeros(1, 2, TrainConfig::default());
        m.bias = vec![0.0, 3f64.ln()];
        let e = evaluate(&m, &[vec![0.0]], &[dist(&[0.5, 0.5])]).unwrap();
        assert!((e.mean_kl - 0.143_841_036_225_890_2).abs() < 1e-9);
        let e = evaluate(&m, &[vec![0.0], vec![1.0]], &[dist(&[0.2, 0.8]), dist(&[0.9, 0.1])]).unwrap();
        assert_eq!(e.accuracy, 0.5);
    }

    #[test]
    fn dimension_checks() {
        let m = SoftmaxModel::zeros(2, 2, TrainConfig::default());
        assert!(m.predict(&[1.0]).is_err());
        assert!(evaluate(&m, &[], &[]).is_err());
    }
}
