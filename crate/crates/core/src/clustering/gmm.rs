//! Diagonal-covariance Gaussian mixture over empirical label distributions.

use std::f64::consts::PI;

use super::kmeans::kmeanspp;
use super::{argmax_rows, log_sum_exp, ClusterFit, ClusterModelKind, Components, FitConfig};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::rng::seeded;

struct Params {
    pi: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
}

fn log_density(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    -0.5 * x
        .iter()
        .zip(mean)
        .zip(var)
        .map(|((xi, mi), vi)| (2.0 * PI * vi).ln() + (xi - mi) * (xi - mi) / vi)
        .sum::<f64>()
}

/// EM with variances clamped from below by `config.variance_floor`.
///
/// Clamping is the exact constrained M-step, so the log-likelihood stays
/// monotone. A component that loses all responsibility gets weight zero and
/// keeps its last mean and variance.
pub fn fit_gmm(dataset: &Dataset, config: &FitConfig) -> Result<ClusterFit> {
    config.validate()?;
    let p = config.p;
    let floor = config.variance_floor;
    let points: Vec<Vec<f64>> = dataset
        .distributions(0.0)?
        .into_iter()
        .map(|x| x.into_inner())
        .collect();
    let n = points.len();
    let dim = points[0].len();

    let global_mean: Vec<f64> = (0..dim)
        .map(|y| points.iter().map(|x| x[y]).sum::<f64>() / n as f64)
        .collect();
    let global_var: Vec<f64> = (0..dim)
        .map(|y| {
            let v = points.iter().map(|x| (x[y] - global_mean[y]).powi(2)).sum::<f64>() / n as f64;
            v.max(floor)
        })
        .collect();

    let mut rng = seeded(config.seed);
    let mut params = Params {
        pi: vec![1.0 / p as f64; p],
        means: kmeanspp(&points, p, &mut rng)
            .into_iter()
            .map(|i| points[i].clone())
            .collect(),
        vars: vec![global_var; p],
    };

    let e_step = |params: &Params| -> (Vec<Vec<f64>>, f64) {
        let mut loglik = 0.0;
        let resp = points
            .iter()
            .map(|x| {
                let joint: Vec<f64> = (0..p)
                    .map(|j| {
                        if params.pi[j] == 0.0 {
                            f64::NEG_INFINITY
                        } else {
                            params.pi[j].ln() + log_density(x, &params.means[j], &params.vars[j])
                        }
                    })
                    .collect();
                let total = log_sum_exp(&joint);
                loglik += total;
                joint.iter().map(|l| (l - total).exp()).collect::<Vec<f64>>()
            })
            .collect();
        (resp, loglik)
    };

    let m_step = |resp: &[Vec<f64>], prev: &Params| -> Params {
        let mut next = Params {
            pi: vec![0.0; p],
            means: prev.means.clone(),
            vars: prev.vars.clone(),
        };
        for j in 0..p {
            let mass: f64 = resp.iter().map(|r| r[j]).sum();
            if mass <= 0.0 {
                continue;
            }
            next.pi[j] = mass / n as f64;
            let mean: Vec<f64> = (0..dim)
                .map(|y| resp.iter().zip(&points).map(|(r, x)| r[j] * x[y]).sum::<f64>() / mass)
                .collect();
            next.vars[j] = (0..dim)
                .map(|y| {
                    let v = resp
                        .iter()
                        .zip(&points)
                        .map(|(r, x)| r[j] * (x[y] - mean[y]).powi(2))
                        .sum::<f64>()
                        / mass;
                    v.max(floor)
                })
                .collect();
            next.means[j] = mean;
        }
        next
    };

    let (mut resp, mut objective) = e_step(&params);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        params = m_step(&resp, &params);
        let (r, next) = e_step(&params);
        resp = r;
        trace.push(next);
        let done = config.converged(objective, next);
        objective = next;
        if done {
            converged = true;
            break;
        }
    }

    Ok(ClusterFit {
        kind: ClusterModelKind::Gmm,
        p,
        weights: params.pi,
        components: Components::Gaussian {
            means: params.means,
            variances: params.vars,
        },
        assignment: argmax_rows(&resp),
        objective,
        objective_trace: trace,
        iterations,
        converged,
        seed: config.seed,
    })
}
