//! Louvain and Leiden on a ring of cliques and on a noisy planted graph.

use qicd::detect::{communities_connected, leiden, louvain, DetectorConfig};
use qicd::generate::{generate_planted, ring_of_cliques, PlantedSpec};
use qicd::partition::modularity;

fn main() -> anyhow::Result<()> {
    let ring = ring_of_cliques(10, 5)?;
    let cfg = DetectorConfig::default().with_seed(1);
    for (name, p) in [("louvain", louvain(&ring, &cfg)?), ("leiden", leiden(&ring, &cfg)?)] {
        println!("ring  {name:8} {} communities, Q = {:.6}", p.community_count(), modularity(&ring, &p)?);
    }
    println!("analytic optimum      Q = {:.6}", 10.0 / 11.0 - 0.1);

    let (g, truth) = generate_planted(&PlantedSpec { n: 2000, k: 20, p_in: 0.1, p_out: 0.02, seed: 3 })?;
    println!("planted truth         Q = {:.6}", modularity(&g, &truth)?);
    for seed in 0..3 {
        let cfg = DetectorConfig::default().with_seed(seed);
        let a = louvain(&g, &cfg)?;
        let b = leiden(&g, &cfg)?;
        println!(
            "seed {seed}: louvain Q = {:.4} (connected: {}), leiden Q = {:.4} (connected: {})",
            modularity(&g, &a)?,
            communities_connected(&g, &a),
            modularity(&g, &b)?,
            communities_connected(&g, &b)
        );
    }
    Ok(())
}
