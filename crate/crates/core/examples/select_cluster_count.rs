//! Pick the number of clusters by comparing the training loss with the
//! loss on synthetic label sets drawn from each fitted model.

use pldl::clustering::ClusterModelKind;
use pldl::labels::LabelSpace;
use pldl::samplers::{generate_population_sample, GenerativeConfig, PopulationModel};
use pldl::selection::{select_cluster_count, ClusterSelection};

fn main() -> pldl::Result<()> {
    let population = PopulationModel::Mixture {
        components: vec![
            vec![0.8, 0.05, 0.05, 0.05, 0.05],
            vec![0.05, 0.8, 0.05, 0.05, 0.05],
            vec![0.05, 0.05, 0.05, 0.05, 0.8],
        ],
        weights: vec![1.0 / 3.0; 3],
    };
    let config = GenerativeConfig::new(LabelSpace::anonymous(5)?, 300, 10, population, 50);
    let data = generate_population_sample(&config, 0)?;

    let mut selection = ClusterSelection::new((1..=6).collect(), 0);
    selection.trials = 10;
    selection.b = 200;
    let report = select_cluster_count(&data, ClusterModelKind::Fmm, &selection)?;

    println!(" p  train loss  synth mean  std diff  boot std diff");
    for row in &report.rows {
        let boot = row.bootstrap.as_ref().map_or(f64::NAN, |b| b.std_diff);
        println!(
            "{:>2}  {:>10.4}  {:>10.4}  {:>8.2}  {:>13.2}",
            row.param, row.train_loss, row.stats.synth_mean, row.stats.std_diff, boot
        );
    }
    println!("chosen p = {} (data drawn from 3 components)", report.chosen);
    Ok(())
}
