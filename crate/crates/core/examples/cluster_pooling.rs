//! Fit each clustering model and pool votes within clusters.

use pldl::clustering::{fit, fit_median_of_trials, ClusterModelKind, FitConfig};
use pldl::labels::LabelSpace;
use pldl::samplers::{generate_population_sample, GenerativeConfig, PopulationModel};
use pldl::Loss;

fn main() -> pldl::Result<()> {
    let population = PopulationModel::Mixture {
        components: vec![
            vec![0.8, 0.1, 0.05, 0.05],
            vec![0.05, 0.8, 0.1, 0.05],
            vec![0.05, 0.05, 0.1, 0.8],
        ],
        weights: vec![0.4, 0.3, 0.3],
    };
    let config = GenerativeConfig::new(LabelSpace::anonymous(4)?, 240, 10, population, 40);
    let data = generate_population_sample(&config, 3)?;
    let loss = Loss::mean_kl();

    for kind in [
        ClusterModelKind::Fmm,
        ClusterModelKind::Gmm,
        ClusterModelKind::Kmeans,
        ClusterModelKind::Lda,
    ] {
        let mut cfg = FitConfig::new(3, 0);
        cfg.lda.sweeps = 200;
        cfg.lda.burn_in = 100;
        let single = fit(&data, kind, &cfg)?;
        let median = fit_median_of_trials(&data, kind, &cfg, 5, &loss)?;
        let pooling = median.pooling(&data, 0.0)?;
        println!(
            "{kind:>6}: {} iterations, sizes {:?}, weights {:?}, loss {:.4} (single fit {:.4})",
            median.iterations,
            pooling.pool_sizes(),
            median
                .weights
                .iter()
                .map(|w| (w * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            loss.evaluate(&pooling, &data)?,
            loss.evaluate(&single.pooling(&data, 0.0)?, &data)?,
        );
    }
    Ok(())
}
