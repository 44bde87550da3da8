//! Multi-run experiments over the method grid, summaries against a baseline,
//! and significance of the recovery gap under degree-preserving nulls.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_qicd, BaseOptimizer, PerturbationKind, QicdConfig, QicdError};
use crate::generate::{degree_preserving_rewire, generate_planted, GenerateError, PlantedSpec};
use crate::graph::Graph;
use crate::partition::modularity_with_resolution;
use crate::sampling::mix;
use crate::stats::{mean, sample_std, summarize, welch_t_test, StatsError, StatsSummary, TrialSample};

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("method `{method}` needs at least {min} runs, got {runs}")]
    TooFewRuns { method: String, runs: usize, min: usize },
    #[error("baseline `{0}` is not among the methods")]
    MissingBaseline(String),
    #[error("need at least 5 null graphs, got {0}")]
    TooFewNulls(usize),
    #[error("method `{method}` run {run}: {source}")]
    Run {
        method: String,
        run: usize,
        #[source]
        source: QicdError,
    },
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// One row of the method grid: a classical optimizer, optionally wrapped in the refinement loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MethodSpec {
    pub base: BaseOptimizer,
    pub kind: Option<PerturbationKind>,
}

impl MethodSpec {
    /// The twelve methods in table order.
    pub fn all() -> Vec<MethodSpec> {
        let kinds = [
            None,
            Some(PerturbationKind::HuOnly),
            Some(PerturbationKind::Pt),
            Some(PerturbationKind::Haar),
            Some(PerturbationKind::PtHu),
            Some(PerturbationKind::HaarHu),
        ];
        [BaseOptimizer::Louvain, BaseOptimizer::Leiden]
            .into_iter()
            .flat_map(|base| kinds.into_iter().map(move |kind| MethodSpec { base, kind }))
            .collect()
    }

    pub fn parse(name: &str) -> Result<MethodSpec, ExperimentError> {
        let (base, rest) = if let Some(r) = name.strip_prefix("louvain") {
            (BaseOptimizer::Louvain, r)
        } else if let Some(r) = name.strip_prefix("leiden") {
            (BaseOptimizer::Leiden, r)
        } else {
            return Err(ExperimentError::UnknownMethod(name.to_string()));
        };
        let kind = match rest {
            "" => None,
            r => match r.strip_prefix('-').and_then(PerturbationKind::parse) {
                Some(k) => Some(k),
                None => return Err(ExperimentError::UnknownMethod(name.to_string())),
            },
        };
        Ok(MethodSpec { base, kind })
    }

    pub fn parse_list(list: &str) -> Result<Vec<MethodSpec>, ExperimentError> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(MethodSpec::parse)
            .collect()
    }

    /// Position in `MethodSpec::all()`; seeds derive from it so a method's runs
    /// do not depend on which other methods share the experiment.
    pub fn index(self) -> u64 {
        MethodSpec::all().iter().position(|m| *m == self).unwrap_or(0) as u64
    }

    /// Runs the method once and returns its Q.
    pub fn run(self, g: &Graph, template: &QicdConfig, seed: u64) -> Result<f64, QicdError> {
        match self.kind {
            None => {
                let det = template.detector.clone().with_seed(seed);
                let p = self.base.run(g, &det)?;
                Ok(modularity_with_resolution(g, &p, det.resolution).map_err(crate::detect::DetectError::from)?)
            }
            Some(kind) => {
                let cfg = QicdConfig {
                    kind,
                    base: self.base,
                    ..template.clone()
                }
                .with_seed(seed);
                Ok(run_qicd(g, &cfg)?.q_star)
            }
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            None => write!(f, "{}", self.base.name()),
            Some(k) => write!(f, "{}-{}", self.base.name(), k.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<MethodSpec>,
    pub runs: usize,
    /// Per-method run counts, keyed by method name.
    pub runs_override: BTreeMap<String, usize>,
    pub base_seed: u64,
    /// Settings shared by every refinement run; kind, base and seed are set per run.
    pub template: QicdConfig,
    /// Worker threads; `None` uses every logical CPU.
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(methods: Vec<MethodSpec>, runs: usize, base_seed: u64) -> Self {
        ExperimentConfig {
            methods,
            runs,
            runs_override: BTreeMap::new(),
            base_seed,
            template: QicdConfig::default(),
            jobs: None,
        }
    }

    pub fn runs_for(&self, m: MethodSpec) -> usize {
        self.runs_override.get(&m.to_string()).copied().unwrap_or(self.runs)
    }

    pub fn run_seed(&self, m: MethodSpec, run: usize) -> u64 {
        mix(mix(self.base_seed, m.index()), run as u64)
    }

    fn tasks(&self) -> Result<Vec<(MethodSpec, usize)>, ExperimentError> {
        let mut tasks = Vec::new();
        for &m in &self.methods {
            let runs = self.runs_for(m);
            if runs < 1 {
                return Err(ExperimentError::TooFewRuns {
                    method: m.to_string(),
                    runs,
                    min: 1,
                });
            }
            tasks.extend((0..runs).map(|r| (m, r)));
        }
        Ok(tasks)
    }
}

fn collect_samples(
    cfg: &ExperimentConfig,
    run_one: impl Fn(MethodSpec, usize, u64) -> Result<f64, ExperimentError> + Sync,
) -> Result<Vec<TrialSample>, ExperimentError> {
    let tasks = cfg.tasks()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let results: Vec<Result<(u64, f64), ExperimentError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(m, r)| {
                let seed = cfg.run_seed(m, r);
                run_one(m, r, seed).map(|q| (seed, q))
            })
            .collect()
    });

    let mut samples: Vec<TrialSample> = cfg
        .methods
        .iter()
        .map(|m| TrialSample {
            method: m.to_string(),
            values: Vec::new(),
            seeds: Vec::new(),
        })
        .collect();
    for ((m, _), res) in tasks.iter().zip(results) {
        let (seed, q) = res?;
        let slot = cfg.methods.iter().position(|x| x == m).unwrap();
        samples[slot].values.push(q);
        samples[slot].seeds.push(seed);
    }
    Ok(samples)
}

/// Runs every method on `g`, one seed per (method, run).
pub fn run_experiment(g: &Graph, cfg: &ExperimentConfig) -> Result<Vec<TrialSample>, ExperimentError> {
    collect_samples(cfg, |m, r, seed| {
        m.run(g, &cfg.template, seed).map_err(|source| ExperimentError::Run {
            method: m.to_string(),
            run: r,
            source,
        })
    })
}

/// Like `run_experiment`, but each run draws its own graph from `spec`
/// (the spec's seed is replaced by the run seed).
pub fn run_experiment_fresh(spec: &PlantedSpec, cfg: &ExperimentConfig) -> Result<Vec<TrialSample>, ExperimentError> {
    spec.validate()?;
    collect_samples(cfg, |m, r, seed| {
        let (g, _) = generate_planted(&PlantedSpec { seed, ..*spec })?;
        m.run(&g, &cfg.template, seed).map_err(|source| ExperimentError::Run {
            method: m.to_string(),
            run: r,
            source,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub summary: StatsSummary,
    /// Welch p against the baseline; absent for the baseline itself.
    pub p_vs_baseline: Option<f64>,
}

pub fn summarize_experiment(
    samples: &[TrialSample],
    baseline: &str,
    confidence: f64,
) -> Result<Vec<MethodSummary>, ExperimentError> {
    let base = samples
        .iter()
        .find(|s| s.method == baseline)
        .ok_or_else(|| ExperimentError::MissingBaseline(baseline.to_string()))?;
    samples
        .iter()
        .map(|s| {
            if s.values.len() < 2 {
                return Err(ExperimentError::TooFewRuns {
                    method: s.method.clone(),
                    runs: s.values.len(),
                    min: 2,
                });
            }
            let p = if s.method == baseline {
                None
            } else {
                Some(welch_t_test(&s.values, &base.values)?.p)
            };
            Ok(MethodSummary {
                method: s.method.clone(),
                summary: summarize(&s.values, confidence)?,
                p_vs_baseline: p,
            })
        })
        .collect()
}

/// Swap budget per edge for each null graph.
pub const NULL_SWAP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrgReport {
    pub observed: f64,
    pub null_mean: f64,
    pub null_std: f64,
    /// Mid-rank percentile of the observed gap among the null gaps, in [0, 100].
    pub percentile: f64,
    pub null_gaps: Vec<f64>,
}

/// Compares the recovery gap on `g` with gaps on degree-preserving rewires of `g`.
pub fn mrg_significance(g: &Graph, cfg: &QicdConfig, null_count: usize, seed: u64) -> Result<MrgReport, ExperimentError> {
    if null_count < 5 {
        return Err(ExperimentError::TooFewNulls(null_count));
    }
    let gap = |graph: &Graph, run: usize| {
        run_qicd(graph, cfg).map(|r| r.mrg).map_err(|source| ExperimentError::Run {
            method: format!("{}-{}", cfg.base.name(), cfg.kind.name()),
            run,
            source,
        })
    };
    let observed = gap(g, 0)?;
    let null_gaps = (0..null_count)
        .into_par_iter()
        .map(|i| {
            let null = degree_preserving_rewire(g, NULL_SWAP_FACTOR, mix(seed, i as u64))?;
            gap(&null, i + 1)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let below = null_gaps.iter().filter(|&&x| x < observed).count() as f64;
    let ties = null_gaps.iter().filter(|&&x| x == observed).count() as f64;
    Ok(MrgReport {
        observed,
        null_mean: mean(&null_gaps),
        null_std: sample_std(&null_gaps),
        percentile: 100.0 * (below + 0.5 * ties) / null_count as f64,
        null_gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::ring_of_cliques;

    #[test]
    fn method_names_round_trip() {
        let all = MethodSpec::all();
        assert_eq!(all.len(), 12);
        let names: Vec<String> = all.iter().map(|m| m.to_string()).collect();
        assert_eq!(names[0], "louvain");
        assert_eq!(names[11], "leiden-haar-hu");
        for (i, n) in names.iter().enumerate() {
            let m = MethodSpec::parse(n).unwrap();
            assert_eq!(m.index(), i as u64);
        }
        assert!(MethodSpec::parse("leiden-foo").is_err());
        assert!(MethodSpec::parse("leidenhu").is_err());
        assert!(MethodSpec::parse("infomap").is_err());
    }

    #[test]
    fn seeds_ignore_method_selection() {
        let a = ExperimentConfig::new(MethodSpec::parse_list("leiden,leiden-haar").unwrap(), 2, 9);
        let b = ExperimentConfig::new(MethodSpec::parse_list("leiden-haar").unwrap(), 2, 9);
        let m = MethodSpec::parse("leiden-haar").unwrap();
        assert_eq!(a.run_seed(m, 1), b.run_seed(m, 1));
    }

    #[test]
    fn experiment_is_schedule_independent() {
        let g = ring_of_cliques(4, 4).unwrap();
        let mut cfg = ExperimentConfig::new(MethodSpec::parse_list("louvain,leiden,leiden-hu").unwrap(), 3, 4);
        cfg.runs_override.insert("louvain".into(), 2);
        cfg.jobs = Some(1);
        let serial = run_experiment(&g, &cfg).unwrap();
        cfg.jobs = Some(4);
        let parallel = run_experiment(&g, &cfg).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial[0].values.len(), 2);
        assert_eq!(serial[2].values.len(), 3);
    }

    #[test]
    fn baseline_has_no_p() {
        let samples = vec![
            TrialSample { method: "leiden".into(), values: vec![0.1, 0.12], seeds: vec![1, 2] },
            TrialSample { method: "leiden-hu".into(), values: vec![0.2, 0.21], seeds: vec![3, 4] },
        ];
        let s = summarize_experiment(&samples, "leiden", 0.95).unwrap();
        assert_eq!(s[0].p_vs_baseline, None);
        assert!(s[1].p_vs_baseline.unwrap() < 0.05);
        assert_eq!(
            summarize_experiment(&samples, "louvain", 0.95),
            Err(ExperimentError::MissingBaseline("louvain".into()))
        );
    }

    #[test]
    fn too_few_nulls() {
        let g = ring_of_cliques(3, 3).unwrap();
        assert_eq!(
            mrg_significance(&g, &QicdConfig::default(), 4, 0),
            Err(ExperimentError::TooFewNulls(4))
        );
    }
}
