//! Exponential and simplex weights, seed-grown proposals and the
//! hyperuniform size adjustment.

use qicd::generate::{generate_planted, PlantedSpec};
use qicd::sampling::{
    default_seed_count, hyperuniform_adjust, propose_partition, sample_haar_weights, sample_pt_weights, substream,
    HyperuniformParams,
};

fn main() -> anyhow::Result<()> {
    let mut rng = substream(7, 0);
    let pt = sample_pt_weights(100_000, &mut rng)?;
    let mean = pt.weights.iter().sum::<f64>() / pt.len() as f64;
    let var = pt.weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / pt.len() as f64;
    println!("PT weights: mean {mean:.4}, variance {var:.4}");
    let haar = sample_haar_weights(4, &mut rng)?;
    println!("Haar weights for 4 nodes: {:.4?} (sum {:.12})", haar.weights, haar.weights.iter().sum::<f64>());

    let (g, _) = generate_planted(&PlantedSpec { n: 500, k: 5, p_in: 0.08, p_out: 0.01, seed: 1 })?;
    let k = default_seed_count(g.node_count());
    let w = sample_haar_weights(g.node_count(), &mut rng)?;
    let p = propose_partition(&g, &w, k)?;
    let mut sizes = p.sizes().to_vec();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    println!("proposal from {k} seeds: {} communities, largest {:?}", p.community_count(), &sizes[..5]);

    let hp = HyperuniformParams { skew_factor: 1.5, reassign_fraction: 0.3 };
    let flat = hyperuniform_adjust(&g, &p, &hp, &mut rng)?;
    let mut sizes = flat.sizes().to_vec();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    println!("after hyperuniform adjust: largest {:?}", &sizes[..5]);
    Ok(())
}
