use rand::Rng;

use super::{ClusterFit, ClusterModelKind, Components, FitConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{categorical, seeded};

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding. Returns indices of the chosen points; when fewer than
/// `k` distinct positions exist, later picks fall back to unused indices.
pub(crate) fn kmeanspp<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = points.iter().map(|x| sq_dist(x, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let next = if nearest.iter().sum::<f64>() > 0.0 {
            categorical(&nearest, rng)
        } else {
            let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            if unused.is_empty() {
                rng.random_range(0..n)
            } else {
                unused[rng.random_range(0..unused.len())]
            }
        };
        chosen.push(next);
        for (d, x) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(x, &points[next]));
        }
    }
    chosen
}

/// Nearest centroid, ties to the lowest index.
pub(crate) fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, sq_dist(x, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub(crate) fn means(points: &[Vec<f64>], assignment: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (x, &j) in points.iter().zip(assignment) {
        sizes[j] += 1;
        for (s, v) in sums[j].iter_mut().zip(x) {
            *s += v;
        }
    }
    for (s, &size) in sums.iter_mut().zip(&sizes) {
        if size > 0 {
            s.iter_mut().for_each(|v| *v /= size as f64);
        }
    }
    (sums, sizes)
}

/// Lloyd's algorithm on empirical distributions.
///
/// A cluster left empty by an update is re-seeded at the point farthest
/// from its current centroid.
pub fn fit_kmeans(dataset: &Dataset, config: &FitConfig) -> Result<ClusterFit> {
    config.validate()?;
    let k = config.p;
    let n = dataset.len();
    if k > n {
        return Err(Error::InvalidConfig(format!("kmeans needs p <= n (p = {k}, n = {n})")));
    }
    let points: Vec<Vec<f64>> = dataset
        .distributions(0.0)?
        .into_iter()
        .map(|d| d.into_inner())
        .collect();
    let mut rng = seeded(config.seed);
    let mut centroids: Vec<Vec<f64>> = kmeanspp(&points, k, &mut rng)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();

    let mut trace = Vec::new();
    let mut assignment: Vec<usize> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let assigned: Vec<(usize, f64)> = points.iter().map(|x| nearest(x, &centroids)).collect();
        let next: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        trace.push(assigned.iter().map(|a| a.1).sum::<f64>());
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
        if iterations == config.max_iter {
            break;
        }
        iterations += 1;

        let (mut new_centroids, sizes) = means(&points, &assignment, k);
        let mut taken = vec![false; n];
        for j in (0..k).filter(|&j| sizes[j] == 0) {
            let far = (0..n)
                .filter(|&i| !taken[i])
                .max_by(|&a, &b| assigned[a].1.total_cmp(&assigned[b].1).then(b.cmp(&a)))
                .expect("p <= n leaves a point to re-seed with");
            taken[far] = true;
            new_centroids[j] = points[far].clone();
            // force another pass even if the assignment looks unchanged
            assignment.clear();
        }
        centroids = new_centroids;
    }

    let sizes = means(&points, &assignment, k).1;
    Ok(ClusterFit {
        kind: ClusterModelKind::Kmeans,
        p: k,
        weights: sizes.iter().map(|&s| s as f64 / n as f64).collect(),
        components: Components::Centroids { centroids },
        assignment,
        objective: *trace.last().expect("at least one assignment pass"),
        objective_trace: trace,
        iterations,
        converged,
        seed: config.seed,
    })
}
