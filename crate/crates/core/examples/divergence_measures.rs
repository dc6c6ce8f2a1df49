//! Compare the divergence measures on a few label distributions.

use pldl::divergence::{distance, kl, nats_to_bits, DivergenceKind};

fn main() -> pldl::Result<()> {
    let p = [0.5, 0.5];
    let q = [0.25, 0.75];

    let forward = kl(&p, &q)?;
    let backward = kl(&q, &p)?;
    println!("KL(p||q) = {forward:.5} nats ({:.5} bits)", nats_to_bits(forward));
    println!("KL(q||p) = {backward:.5} nats");

    for kind in [
        DivergenceKind::Kl,
        DivergenceKind::Euclidean,
        DivergenceKind::Chebyshev,
        DivergenceKind::Canberra,
    ] {
        println!(
            "{kind:>10}: {:.5}  symmetric: {}",
            distance(&p, &q, kind)?,
            kind.is_symmetric()
        );
    }

    // q misses support of p, so KL is undefined; smooth counts before comparing
    match kl(&[0.5, 0.5], &[1.0, 0.0]) {
        Err(e) => println!("KL(p||[1,0]): {e}"),
        Ok(v) => println!("KL(p||[1,0]) = {v}"),
    }
    Ok(())
}
