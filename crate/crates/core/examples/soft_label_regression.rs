//! Train the softmax regressor on raw and on pooled label distributions
//! and compare how close each gets to the true population distribution.

use pldl::clustering::{fit_median_of_trials, ClusterModelKind, FitConfig};
use pldl::dataset::{split_dataset, SplitRatios};
use pldl::labels::{LabelDistribution, LabelSpace};
use pldl::predict::{evaluate, features_of, refined_targets, train, TrainConfig};
use pldl::samplers::{generate_population_sample, GenerativeConfig, PopulationModel};
use pldl::Loss;

fn main() -> pldl::Result<()> {
    let truth = vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.7, 0.2], vec![0.2, 0.1, 0.7]];
    let population = PopulationModel::Mixture {
        components: truth.clone(),
        weights: vec![1.0 / 3.0; 3],
    };
    // features are the true distribution plus noise
    let config = GenerativeConfig::new(LabelSpace::anonymous(3)?, 300, 5, population, 30).with_feature_noise(0.05);
    let data = generate_population_sample(&config, 2)?;
    let (train_set, _, test_set) = split_dataset(&data, SplitRatios::default(), 2)?;

    let fit = fit_median_of_trials(
        &train_set,
        ClusterModelKind::Fmm,
        &FitConfig::new(3, 0),
        10,
        &Loss::mean_kl(),
    )?;
    let pooling = fit.pooling(&train_set, 0.0)?;
    let features = features_of(&train_set)?;
    let cfg = TrainConfig {
        epochs: 300,
        ..TrainConfig::default()
    };

    let raw_model = train(&features, &train_set.distributions(0.0)?, cfg)?;
    let pooled_model = train(&features, &refined_targets(&train_set, &pooling)?, cfg)?;

    // the nearest true component stands in for each test item's population distribution
    let test_features = features_of(&test_set)?;
    let true_targets: Vec<LabelDistribution> = test_features
        .iter()
        .map(|f| {
            let nearest = truth
                .iter()
                .min_by(|a, b| sq_dist(a, f).total_cmp(&sq_dist(b, f)))
                .expect("non-empty");
            LabelDistribution::new(nearest.clone())
        })
        .collect::<pldl::Result<_>>()?;

    for (name, model) in [("raw", &raw_model), ("pooled", &pooled_model)] {
        let e = evaluate(model, &test_features, &true_targets)?;
        println!(
            "{name:>6} targets: KL to truth {:.4}, accuracy {:.3}",
            e.mean_kl, e.accuracy
        );
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
