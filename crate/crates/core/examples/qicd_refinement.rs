//! The refinement loop on a weak planted graph, with its per-iteration trace.

use qicd::engine::{run_qicd, PerturbationKind, QicdConfig};
use qicd::generate::{calibrate_planted, generate_planted, CalibrationOptions};

fn main() -> anyhow::Result<()> {
    let cal = calibrate_planted(2000, 20, 0.14, 0.01, &CalibrationOptions::default())?;
    println!(
        "calibrated: mixing ratio {:.3}, average degree {:.1}, Leiden Q {:.4}",
        cal.ratio, cal.avg_degree, cal.achieved_q
    );
    let (g, _) = generate_planted(&cal.spec)?;

    for kind in [PerturbationKind::Haar, PerturbationKind::Pt, PerturbationKind::HuOnly] {
        let cfg = QicdConfig { kind, refine_before_accept: true, ..QicdConfig::default() }.with_seed(2);
        let r = run_qicd(&g, &cfg)?;
        println!(
            "{:8} Q* = {:.4}  baseline = {:.4}  MRG = {:+.4}  ({} iterations, K = {})",
            kind.name(),
            r.q_star,
            r.q_baseline,
            r.mrg,
            r.trace.len(),
            r.seed_count
        );
        for rec in &r.trace {
            println!(
                "    t={:2} Q_ref={:.4} Q_quant={:.4} {}",
                rec.t,
                rec.q_ref,
                rec.q_quant,
                if rec.accepted { "accepted" } else { "" }
            );
        }
    }
    Ok(())
}
