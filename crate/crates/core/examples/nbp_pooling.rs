//! Neighborhood-based pooling: each item borrows the votes of items whose
//! label distribution is within a radius of its own.

use pldl::labels::LabelSpace;
use pldl::nbp::{build_nbp_pooling, neighborhood_profile, NbpConfig};
use pldl::samplers::{generate_population_sample, GenerativeConfig, PopulationModel};
use pldl::Dataset;

fn main() -> pldl::Result<()> {
    // three items by hand
    let tiny = Dataset::from_counts(LabelSpace::anonymous(2)?, vec![vec![4, 1], vec![5, 0], vec![0, 5]])?;
    let (pooling, stats) = build_nbp_pooling(&tiny, &NbpConfig::new(0.5))?;
    for (i, pool) in pooling.pools().iter().enumerate() {
        println!(
            "item {i}: pool {pool:?} refined {:?}",
            pooling.refined_for_item(i).as_slice()
        );
    }
    println!("median size {}, max {}", stats.median, stats.maximum);

    // a larger sample from two populations
    let population = PopulationModel::Mixture {
        components: vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]],
        weights: vec![0.5, 0.5],
    };
    let config = GenerativeConfig::new(LabelSpace::anonymous(3)?, 200, 6, population, 30);
    let data = generate_population_sample(&config, 11)?;

    println!("\n     r   mean KL  N_median  N_max");
    let grid: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
    for row in neighborhood_profile(&data, &grid, &NbpConfig::new(0.0), 0.01)? {
        println!(
            "{:>6.2}  {:>8.4}  {:>8.1}  {:>5}",
            row.r, row.mean_kl, row.n_median, row.n_max
        );
    }
    Ok(())
}
