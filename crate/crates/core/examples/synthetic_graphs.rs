//! Planted partitions, calibration to a target Leiden Q, and degree-preserving nulls.

use qicd::detect::{leiden, DetectorConfig};
use qicd::generate::{calibrate_planted, degree_preserving_rewire, generate_planted, CalibrationOptions, PlantedSpec};
use qicd::partition::modularity;

fn main() -> anyhow::Result<()> {
    let spec = PlantedSpec { n: 1000, k: 10, p_in: 0.1, p_out: 0.01, seed: 2 };
    let (g, truth) = generate_planted(&spec)?;
    println!("planted: {} edges, truth Q {:.4}", g.edge_count(), modularity(&g, &truth)?);

    let null = degree_preserving_rewire(&g, 10.0, 3)?;
    let p = leiden(&null, &DetectorConfig::default())?;
    println!("rewired: {} edges, Leiden Q {:.4}", null.edge_count(), modularity(&null, &p)?);

    for target in [0.14, 0.3, 0.6] {
        let cal = calibrate_planted(1000, 10, target, 0.01, &CalibrationOptions::default())?;
        println!(
            "target {target:.2}: ratio {:.3}, degree {:.1}, Leiden Q {:.4}, p_in {:.4}, p_out {:.4}",
            cal.ratio, cal.avg_degree, cal.achieved_q, cal.spec.p_in, cal.spec.p_out
        );
    }
    Ok(())
}
