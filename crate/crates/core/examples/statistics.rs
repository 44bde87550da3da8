//! Confidence intervals and Welch tests from raw samples and from reported moments.

use qicd::stats::{summarize, summarize_moments, welch_from_moments, welch_t_test};

fn main() -> anyhow::Result<()> {
    let base = [0.1421, 0.1435, 0.1419, 0.1440, 0.1427, 0.1426];
    let refined = [0.1612, 0.1840, 0.1795, 0.2011, 0.1702, 0.1936];
    let s = summarize(&refined, 0.95)?;
    println!("refined: mean {:.4} std {:.4} 95% CI ({:.4}, {:.4})", s.mean, s.std, s.ci_low, s.ci_high);
    let w = welch_t_test(&refined, &base)?;
    println!("Welch: t = {:.3}, df = {:.2}, p = {:.4}", w.t, w.df, w.p);

    // the same test when only (mean, std, n) were reported
    let ci = summarize_moments(0.1816, 0.0171, 6, 0.95)?;
    let w = welch_from_moments(0.1816, 0.0171, 6, 0.1428, 0.0011, 6);
    println!("from moments: CI ({:.4}, {:.4}), t = {:.2}, df = {:.2}, p = {:.4}", ci.ci_low, ci.ci_high, w.t, w.df, w.p);
    Ok(())
}
