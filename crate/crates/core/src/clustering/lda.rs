//! LDA over vote counts, fitted by collapsed Gibbs sampling.
//!
//! Each item is a document whose tokens are its individual votes; labels
//! are the word types. After burn-in, per-item topic proportions and
//! per-topic label distributions are averaged over the remaining sweeps.

use super::{argmax_rows, ClusterFit, ClusterModelKind, Components, FitConfig};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::rng::{categorical, seeded};

struct Chain {
    doc_topic: Vec<Vec<f64>>,
    topic_word: Vec<Vec<f64>>,
    topic_total: Vec<f64>,
}

impl Chain {
    fn theta(&self, alpha: f64) -> Vec<Vec<f64>> {
        self.doc_topic
            .iter()
            .map(|row| {
                let s: f64 = row.iter().sum::<f64>() + alpha * row.len() as f64;
                row.iter().map(|c| (c + alpha) / s).collect()
            })
            .collect()
    }

    fn phi(&self, beta: f64) -> Vec<Vec<f64>> {
        self.topic_word
            .iter()
            .zip(&self.topic_total)
            .map(|(row, total)| {
                let s = total + beta * row.len() as f64;
                row.iter().map(|c| (c + beta) / s).collect()
            })
            .collect()
    }
}

/// `sum_i sum_y c_iy ln sum_j theta_ij phi_jy`.
fn log_likelihood(counts: &[&[u64]], theta: &[Vec<f64>], phi: &[Vec<f64>]) -> f64 {
    counts
        .iter()
        .zip(theta)
        .map(|(c, th)| {
            c.iter()
                .enumerate()
                .filter(|(_, &cy)| cy > 0)
                .map(|(y, &cy)| {
                    let q: f64 = th.iter().zip(phi).map(|(t, f)| t * f[y]).sum();
                    cy as f64 * q.ln()
                })
                .sum::<f64>()
        })
        .sum()
}

/// Gibbs sampling always runs the configured number of sweeps; the
/// objective trace holds the log-likelihood of the chain state after each
/// sweep and is not monotone.
pub fn fit_lda(dataset: &Dataset, config: &FitConfig) -> Result<ClusterFit> {
    gibbs(dataset, config).map(|(fit, _)| fit)
}

/// The fit plus the averaged per-item topic proportions.
fn gibbs(dataset: &Dataset, config: &FitConfig) -> Result<(ClusterFit, Vec<Vec<f64>>)> {
    config.validate()?;
    let p = config.p;
    let d = dataset.num_labels();
    let params = config.lda;
    let alpha = params.alpha.unwrap_or(50.0 / p as f64);
    let beta = params.beta;
    let counts: Vec<&[u64]> = dataset.items().iter().map(|it| it.counts.as_slice()).collect();

    let mut rng = seeded(config.seed);
    let mut chain = Chain {
        doc_topic: vec![vec![0.0; p]; counts.len()],
        topic_word: vec![vec![0.0; d]; p],
        topic_total: vec![0.0; p],
    };
    // tokens[i] holds (label, topic) for every vote of item i
    let mut tokens: Vec<Vec<(usize, usize)>> = counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut doc = Vec::new();
            for (y, &cy) in c.iter().enumerate() {
                for _ in 0..cy {
                    let z = categorical(&vec![1.0; p], &mut rng);
                    chain.doc_topic[i][z] += 1.0;
                    chain.topic_word[z][y] += 1.0;
                    chain.topic_total[z] += 1.0;
                    doc.push((y, z));
                }
            }
            doc
        })
        .collect();

    let d_beta = d as f64 * beta;
    let mut weights = vec![0.0; p];
    let mut theta_sum = vec![vec![0.0; p]; counts.len()];
    let mut phi_sum = vec![vec![0.0; d]; p];
    let mut kept = 0usize;
    let mut trace = Vec::with_capacity(params.sweeps);

    for sweep in 0..params.sweeps {
        for (i, doc) in tokens.iter_mut().enumerate() {
            for (y, z) in doc.iter_mut() {
                chain.doc_topic[i][*z] -= 1.0;
                chain.topic_word[*z][*y] -= 1.0;
                chain.topic_total[*z] -= 1.0;
                for (j, w) in weights.iter_mut().enumerate() {
                    *w = (chain.doc_topic[i][j] + alpha) * (chain.topic_word[j][*y] + beta)
                        / (chain.topic_total[j] + d_beta);
                }
                *z = categorical(&weights, &mut rng);
                chain.doc_topic[i][*z] += 1.0;
                chain.topic_word[*z][*y] += 1.0;
                chain.topic_total[*z] += 1.0;
            }
        }
        let theta = chain.theta(alpha);
        let phi = chain.phi(beta);
        trace.push(log_likelihood(&counts, &theta, &phi));
        // with burn_in == sweeps the final state alone is the estimate
        if sweep >= params.burn_in || sweep + 1 == params.sweeps && kept == 0 {
            kept += 1;
            for (acc, t) in theta_sum.iter_mut().zip(&theta) {
                acc.iter_mut().zip(t).for_each(|(a, v)| *a += v);
            }
            for (acc, f) in phi_sum.iter_mut().zip(&phi) {
                acc.iter_mut().zip(f).for_each(|(a, v)| *a += v);
            }
        }
    }

    let scale = 1.0 / kept as f64;
    let mut theta: Vec<Vec<f64>> = theta_sum
        .into_iter()
        .map(|r| r.into_iter().map(|v| v * scale).collect())
        .collect();
    let mut phi: Vec<Vec<f64>> = phi_sum
        .into_iter()
        .map(|r| r.into_iter().map(|v| v * scale).collect())
        .collect();
    for row in theta.iter_mut().chain(phi.iter_mut()) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    let mut pi = vec![0.0; p];
    for row in &theta {
        pi.iter_mut().zip(row).for_each(|(a, v)| *a += v / theta.len() as f64);
    }
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);

    let fit = ClusterFit {
        kind: ClusterModelKind::Lda,
        p,
        weights: pi,
        assignment: argmax_rows(&theta),
        objective: log_likelihood(&counts, &theta, &phi),
        components: Components::Multinomial { phi },
        objective_trace: trace,
        iterations: params.sweeps,
        converged: true,
        seed: config.seed,
    };
    Ok((fit, theta))
}
