//! Pick the neighborhood radius at the elbow of the standardized
//! difference curve.

use pldl::labels::LabelSpace;
use pldl::samplers::{generate_population_sample, GenerativeConfig, PopulationModel, SamplerKind};
use pldl::selection::{select_radius, RadiusSelection};

fn main() -> pldl::Result<()> {
    let population = PopulationModel::Mixture {
        components: vec![vec![0.7, 0.2, 0.1], vec![0.2, 0.6, 0.2], vec![0.05, 0.15, 0.8]],
        weights: vec![0.3, 0.3, 0.4],
    };
    let config = GenerativeConfig::new(LabelSpace::anonymous(3)?, 150, 8, population, 40);
    let data = generate_population_sample(&config, 9)?;
    let grid: Vec<f64> = (1..=12).map(|i| i as f64 / 10.0).collect();

    for sampler in [SamplerKind::Nbp, SamplerKind::Bootstrap] {
        let mut selection = RadiusSelection::new(grid.clone(), sampler, 1);
        selection.b = 200;
        let report = select_radius(&data, &selection)?;
        println!("{sampler} sampler");
        for row in &report.rows {
            println!(
                "  r={:.1}  loss {:.4}  std diff {:>7.2}  N_median {:>5.1}",
                row.param,
                row.train_loss,
                row.stats.std_diff,
                row.n_median.unwrap_or(f64::NAN)
            );
        }
        match &report.elbow {
            Some(e) if !e.no_elbow => println!("  elbow at r = {}", report.chosen),
            _ => println!("  curve has no elbow; r = {}", report.chosen),
        }
    }
    Ok(())
}
