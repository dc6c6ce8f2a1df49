//! Finite multinomial mixture fitted by MAP-EM.
//!
//! Priors are symmetric Dirichlets: concentration `gamma_pi` on the mixing
//! weights and `gamma_phi` on each component. The M-step uses pseudocounts
//! `gamma_pi - 1` (floored at zero) for the weights and `gamma_phi` added to
//! the expected label counts of each component, so the quantity EM ascends
//! is
//!
//! ```text
//! sum_i ln sum_j pi_j Mult(c_i | phi_j)
//!   + (gamma_pi - 1) sum_j ln pi_j + gamma_phi sum_j sum_y ln phi_jy
//! ```

use statrs::function::gamma::ln_gamma;

use super::kmeans::kmeanspp;
use super::{argmax_rows, log_sum_exp, ClusterFit, ClusterModelKind, Components, FitConfig};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::rng::seeded;

struct Params {
    pi: Vec<f64>,
    phi: Vec<Vec<f64>>,
}

pub fn fit_fmm(dataset: &Dataset, config: &FitConfig) -> Result<ClusterFit> {
    config.validate()?;
    let p = config.p;
    let d = dataset.num_labels();
    let counts: Vec<Vec<f64>> = dataset
        .items()
        .iter()
        .map(|it| it.counts.iter().map(|&c| c as f64).collect())
        .collect();
    let log_coef: Vec<f64> = dataset
        .items()
        .iter()
        .map(|it| ln_gamma(it.votes() as f64 + 1.0) - it.counts.iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>())
        .collect();
    let points: Vec<Vec<f64>> = dataset
        .distributions(0.0)?
        .into_iter()
        .map(|x| x.into_inner())
        .collect();

    let mut rng = seeded(config.seed);
    let mut params = Params {
        pi: vec![1.0 / p as f64; p],
        phi: kmeanspp(&points, p, &mut rng)
            .into_iter()
            .map(|i| {
                let m: f64 = counts[i].iter().sum();
                counts[i].iter().map(|c| (c + 1.0) / (m + d as f64)).collect()
            })
            .collect(),
    };

    let gamma_pi = config.fmm.gamma_pi;
    let gamma_phi = config.fmm.gamma_phi;
    let log_prior = |params: &Params| -> f64 {
        let w: f64 = params
            .pi
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|x| (gamma_pi - 1.0) * x.ln())
            .sum();
        let c: f64 = if gamma_phi > 0.0 {
            params.phi.iter().flatten().map(|x| gamma_phi * x.ln()).sum()
        } else {
            0.0
        };
        w + c
    };

    // E-step: responsibilities and the objective at the current parameters.
    let e_step = |params: &Params| -> (Vec<Vec<f64>>, f64) {
        let log_pi: Vec<f64> = params.pi.iter().map(|x| x.ln()).collect();
        let log_phi: Vec<Vec<f64>> = params
            .phi
            .iter()
            .map(|row| row.iter().map(|x| x.ln()).collect())
            .collect();
        let mut loglik = 0.0;
        let resp = counts
            .iter()
            .zip(&log_coef)
            .map(|(c, lc)| {
                let joint: Vec<f64> = (0..p)
                    .map(|j| {
                        if params.pi[j] == 0.0 {
                            return f64::NEG_INFINITY;
                        }
                        log_pi[j]
                            + lc
                            + c.iter()
                                .zip(&log_phi[j])
                                .filter(|(&cy, _)| cy > 0.0)
                                .map(|(cy, lp)| cy * lp)
                                .sum::<f64>()
                    })
                    .collect();
                let total = log_sum_exp(&joint);
                loglik += total;
                joint.iter().map(|l| (l - total).exp()).collect()
            })
            .collect();
        (resp, loglik + log_prior(params))
    };

    let m_step = |resp: &[Vec<f64>]| -> Params {
        let mass: Vec<f64> = (0..p).map(|j| resp.iter().map(|r| r[j]).sum()).collect();
        let mut pi: Vec<f64> = mass.iter().map(|nj| (nj + gamma_pi - 1.0).max(0.0)).collect();
        if pi.iter().sum::<f64>() <= 0.0 {
            pi = mass.clone();
        }
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= s);
        let phi = (0..p)
            .map(|j| {
                let mut row = vec![gamma_phi; d];
                for (r, c) in resp.iter().zip(&counts) {
                    for (v, cy) in row.iter_mut().zip(c) {
                        *v += r[j] * cy;
                    }
                }
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    row.iter_mut().for_each(|v| *v /= s);
                } else {
                    row = vec![1.0 / d as f64; d];
                }
                row
            })
            .collect();
        Params { pi, phi }
    };

    let (mut resp, mut objective) = e_step(&params);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        params = m_step(&resp);
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
        kind: ClusterModelKind::Fmm,
        p,
        weights: params.pi,
        components: Components::Multinomial { phi: params.phi },
        assignment: argmax_rows(&resp),
        objective,
        objective_trace: trace,
        iterations,
        converged,
        seed: config.seed,
    })
}
