//! Is the recovery gap on a graph unusual compared with degree-preserving rewires of it?

use qicd::engine::QicdConfig;
use qicd::experiment::mrg_significance;
use qicd::generate::{generate_planted, PlantedSpec};

fn main() -> anyhow::Result<()> {
    let (g, _) = generate_planted(&PlantedSpec { n: 800, k: 8, p_in: 0.08, p_out: 0.02, seed: 4 })?;
    let cfg = QicdConfig { refine_before_accept: true, ..QicdConfig::default() }.with_seed(1);
    let r = mrg_significance(&g, &cfg, 10, 9)?;
    println!("observed gap {:.5}", r.observed);
    println!("null gaps    {:.5} ± {:.5}", r.null_mean, r.null_std);
    println!("percentile   {:.1}", r.percentile);
    Ok(())
}
