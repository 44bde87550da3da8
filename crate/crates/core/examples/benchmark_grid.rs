//! A small method grid with Welch tests against Leiden, printed as a table.

use qicd::experiment::{run_experiment, summarize_experiment, ExperimentConfig, MethodSpec};
use qicd::generate::{generate_planted, PlantedSpec};
use qicd::io::render_table;

fn main() -> anyhow::Result<()> {
    let (g, _) = generate_planted(&PlantedSpec { n: 1000, k: 10, p_in: 0.06, p_out: 0.012, seed: 5 })?;
    let methods = MethodSpec::parse_list("louvain,louvain-haar,leiden,leiden-hu,leiden-pt,leiden-haar")?;
    let mut cfg = ExperimentConfig::new(methods, 6, 11);
    cfg.runs_override.insert("louvain".into(), 12);
    cfg.template.refine_before_accept = true;
    let samples = run_experiment(&g, &cfg)?;
    let rows = summarize_experiment(&samples, "leiden", 0.95)?;
    print!("{}", render_table(&rows));
    Ok(())
}
