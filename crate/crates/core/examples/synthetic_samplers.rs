//! Draw same-shape synthetic label sets with each sampler and score them
//! against the pooling they came from.

use pldl::clustering::{fit, ClusterModelKind, FitConfig};
use pldl::labels::LabelSpace;
use pldl::nbp::{build_nbp_pooling, NbpConfig};
use pldl::samplers::{
    bootstrap_sampler, cluster_sampler, generate_population_sample, nbp_sampler, GenerativeConfig, MixingWeights,
    PopulationModel,
};
use pldl::Loss;

fn main() -> pldl::Result<()> {
    let population = PopulationModel::PerItem {
        distributions: vec![vec![0.6, 0.3, 0.1], vec![0.1, 0.3, 0.6], vec![0.34, 0.33, 0.33]],
    };
    let config = GenerativeConfig::new(LabelSpace::anonymous(3)?, 3, 20, population, 50).with_reliability(0.9);
    let data = generate_population_sample(&config, 5)?;
    let votes = data.votes();
    println!(
        "observed: {:?}",
        data.items().iter().map(|x| x.counts.as_slice()).collect::<Vec<_>>()
    );

    let clusters = fit(&data, ClusterModelKind::Fmm, &FitConfig::new(2, 0))?;
    let pooling = clusters.pooling(&data, 0.0)?;
    let synth = cluster_sampler(&clusters, &pooling, &votes, 1, MixingWeights::Empirical)?;
    println!("cluster:   {:?}", synth.counts);

    let (nbp, _) = build_nbp_pooling(&data, &NbpConfig::new(0.3))?;
    println!("nbp:       {:?}", nbp_sampler(&nbp, &votes, 1)?.counts);
    println!("bootstrap: {:?}", bootstrap_sampler(&data, &votes, 1)?.counts);

    let loss = Loss::mean_kl();
    let observed = loss.evaluate(&pooling, &data)?;
    let synthetic = loss.evaluate_pairs(&pooling, synth.scoring_pairs(&pooling)?)?;
    println!("loss of observed {observed:.4}, of cluster sample {synthetic:.4}");
    Ok(())
}
