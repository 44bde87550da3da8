//! The refinement loop: alternate local node moves with structured random
//! proposals, keep a proposal only when it beats the locally refined
//! partition, and remember the best partition seen.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{
    leiden, leiden_from, leiden_local_move, leiden_refine, louvain, louvain_from, DetectError,
    DetectorConfig,
};
use crate::graph::Graph;
use crate::partition::{modularity_with_resolution, Partition, PartitionError};
use crate::sampling::{
    default_seed_count, hu_noise, hyperuniform_adjust, mix, propose_partition, sample_haar_weights,
    sample_pt_weights, substream, HyperuniformParams, SamplingError,
};

#[derive(Debug, Error, PartialEq)]
pub enum QicdError {
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("invalid refinement config: {0}")]
    InvalidConfig(&'static str),
}

impl From<PartitionError> for QicdError {
    fn from(e: PartitionError) -> Self {
        QicdError::Detect(DetectError::Partition(e))
    }
}

/// Which proposal generator drives the perturbation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    /// Exponential node weights, seeds grown by BFS.
    Pt,
    /// Simplex-normalized exponential weights, seeds grown by BFS.
    Haar,
    /// Size-flattening noise applied to the refined partition.
    HuOnly,
    PtHu,
    HaarHu,
}

impl PerturbationKind {
    pub fn uses_weights(self) -> bool {
        !matches!(self, PerturbationKind::HuOnly)
    }

    /// Keeps the proposal streams of different kinds independent under one seed.
    fn salt(self) -> u64 {
        self as u64 + 0x51CD
    }

    pub fn uses_hyperuniform(self) -> bool {
        matches!(
            self,
            PerturbationKind::HuOnly | PerturbationKind::PtHu | PerturbationKind::HaarHu
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            PerturbationKind::Pt => "pt",
            PerturbationKind::Haar => "haar",
            PerturbationKind::HuOnly => "hu",
            PerturbationKind::PtHu => "pt-hu",
            PerturbationKind::HaarHu => "haar-hu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pt" => PerturbationKind::Pt,
            "haar" => PerturbationKind::Haar,
            "hu" => PerturbationKind::HuOnly,
            "pt-hu" => PerturbationKind::PtHu,
            "haar-hu" => PerturbationKind::HaarHu,
            _ => return None,
        })
    }
}

/// Classical optimizer underneath the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseOptimizer {
    Louvain,
    Leiden,
}

impl BaseOptimizer {
    pub fn name(self) -> &'static str {
        match self {
            BaseOptimizer::Louvain => "louvain",
            BaseOptimizer::Leiden => "leiden",
        }
    }

    pub fn run(self, g: &Graph, cfg: &DetectorConfig) -> Result<Partition, DetectError> {
        match self {
            BaseOptimizer::Louvain => louvain(g, cfg),
            BaseOptimizer::Leiden => leiden(g, cfg),
        }
    }

    fn run_from(self, g: &Graph, p: &Partition, cfg: &DetectorConfig) -> Result<Partition, DetectError> {
        match self {
            BaseOptimizer::Louvain => louvain_from(g, p, cfg),
            BaseOptimizer::Leiden => leiden_from(g, p, cfg),
        }
    }

    /// Local move step; Leiden also splits disconnected communities.
    fn refine(self, g: &Graph, p: &Partition, cfg: &DetectorConfig) -> Result<Partition, DetectError> {
        let moved = leiden_local_move(g, p, cfg)?;
        Ok(match self {
            BaseOptimizer::Louvain => moved,
            BaseOptimizer::Leiden => leiden_refine(g, &moved),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    Singleton,
    /// Start from the classical baseline partition.
    QuickLeiden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QicdConfig {
    pub iterations: usize,
    /// Stop after this many consecutive iterations without a new best.
    pub stall_limit: usize,
    pub kind: PerturbationKind,
    /// Proposal seed count; `None` means `⌈√n⌉`.
    pub seed_count: Option<usize>,
    pub hu: HyperuniformParams,
    pub detector: DetectorConfig,
    pub base: BaseOptimizer,
    pub init_mode: InitMode,
    /// Polish each proposal with the base optimizer before the acceptance test.
    /// Weight-driven proposals are first intersected with the refined partition,
    /// so the polish starts from fragments of it rather than from scratch.
    pub refine_before_accept: bool,
    pub seed: u64,
}

impl Default for QicdConfig {
    fn default() -> Self {
        QicdConfig {
            iterations: 10,
            stall_limit: 5,
            kind: PerturbationKind::Haar,
            seed_count: None,
            hu: HyperuniformParams::default(),
            detector: DetectorConfig::default(),
            base: BaseOptimizer::Leiden,
            init_mode: InitMode::QuickLeiden,
            refine_before_accept: false,
            seed: 0,
        }
    }
}

impl QicdConfig {
    /// Sets the loop seed and derives the detector seed from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.detector.seed = mix(seed, u64::MAX);
        self
    }

    pub fn validate(&self) -> Result<(), QicdError> {
        if self.iterations < 1 {
            return Err(QicdError::InvalidConfig("iterations must be at least 1"));
        }
        if self.stall_limit < 1 {
            return Err(QicdError::InvalidConfig("stall_limit must be at least 1"));
        }
        if self.seed_count == Some(0) {
            return Err(QicdError::InvalidConfig("seed count must be at least 1"));
        }
        self.hu.validate()?;
        self.detector.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub q_ref: f64,
    pub q_quant: f64,
    pub accepted: bool,
    /// Community count of the proposal.
    pub communities: usize,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QicdResult {
    pub best_partition: Partition,
    pub q_star: f64,
    pub q_baseline: f64,
    /// Q of the starting partition before any refinement.
    pub q_initial: f64,
    pub mrg: f64,
    pub seed_count: usize,
    pub trace: Vec<IterationRecord>,
}

impl QicdResult {
    /// Best Q after each iteration.
    pub fn best_trace(&self) -> Vec<f64> {
        let mut best = self.q_initial;
        self.trace
            .iter()
            .map(|r| {
                let q = if r.accepted { r.q_quant } else { r.q_ref };
                best = best.max(q);
                best
            })
            .collect()
    }
}

/// Common refinement of two partitions: nodes share a community iff they share one in both.
pub fn meet(g: &Graph, a: &Partition, b: &Partition) -> Result<Partition, PartitionError> {
    let mut ids = HashMap::new();
    let labels: Vec<usize> = a
        .labels()
        .iter()
        .zip(b.labels())
        .map(|pair| {
            let next = ids.len();
            *ids.entry(pair).or_insert(next)
        })
        .collect();
    Partition::from_labels(g, &labels)
}

/// Modularity recovery gap; negative gaps are reported as-is.
pub fn mrg(q_star: f64, q_baseline: f64) -> f64 {
    q_star - q_baseline
}

pub fn run_qicd(g: &Graph, cfg: &QicdConfig) -> Result<QicdResult, QicdError> {
    cfg.validate()?;
    let gamma = cfg.detector.resolution;
    let q_of = |p: &Partition| modularity_with_resolution(g, p, gamma);
    let baseline = cfg.base.run(g, &cfg.detector)?;
    let q_baseline = q_of(&baseline)?;
    let initial = match cfg.init_mode {
        InitMode::Singleton => Partition::singletons(g),
        InitMode::QuickLeiden => baseline,
    };
    let q_initial = q_of(&initial)?;
    let n = g.node_count();
    let seed_count = cfg.seed_count.unwrap_or_else(|| default_seed_count(n)).min(n);

    let mut best = initial.clone();
    let mut q_star = q_initial;
    let mut current = initial;
    let mut stall = 0;
    let mut trace = Vec::with_capacity(cfg.iterations);

    for t in 1..=cfg.iterations {
        let started = Instant::now();
        let step_cfg = cfg.detector.clone().with_seed(mix(cfg.seed, 2 * t as u64));
        let refined = cfg.base.refine(g, &current, &step_cfg)?;
        let q_ref = q_of(&refined)?;

        let mut rng = substream(mix(cfg.seed, cfg.kind.salt()), 2 * t as u64 + 1);
        let mut proposal = match cfg.kind {
            PerturbationKind::HuOnly => hu_noise(g, &refined, &cfg.hu, &mut rng)?,
            kind => {
                let weights = match kind {
                    PerturbationKind::Pt | PerturbationKind::PtHu => sample_pt_weights(n, &mut rng)?,
                    _ => sample_haar_weights(n, &mut rng)?,
                };
                let p = propose_partition(g, &weights, seed_count)?;
                if kind.uses_hyperuniform() {
                    hyperuniform_adjust(g, &p, &cfg.hu, &mut rng)?
                } else {
                    p
                }
            }
        };
        if cfg.refine_before_accept {
            if cfg.kind.uses_weights() {
                proposal = meet(g, &refined, &proposal)?;
            }
            proposal = cfg.base.run_from(g, &proposal, &step_cfg)?;
        }
        let q_quant = q_of(&proposal)?;
        let communities = proposal.community_count();

        let accepted = q_quant > q_ref;
        let q_now = if accepted { q_quant } else { q_ref };
        current = if accepted { proposal } else { refined };
        if q_now > q_star {
            q_star = q_now;
            best = current.clone();
            stall = 0;
        } else {
            stall += 1;
        }
        trace.push(IterationRecord {
            t,
            q_ref,
            q_quant,
            accepted,
            communities,
            millis: started.elapsed().as_secs_f64() * 1e3,
        });
        if stall >= cfg.stall_limit {
            break;
        }
    }

    Ok(QicdResult {
        best_partition: best,
        q_star,
        q_baseline,
        q_initial,
        mrg: mrg(q_star, q_baseline),
        seed_count,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::modularity;

    fn two_triangles() -> Graph {
        Graph::from_edges(
            6,
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)],
        )
        .unwrap()
    }

    const KINDS: [PerturbationKind; 5] = [
        PerturbationKind::Pt,
        PerturbationKind::Haar,
        PerturbationKind::HuOnly,
        PerturbationKind::PtHu,
        PerturbationKind::HaarHu,
    ];

    #[test]
    fn triangles_have_no_gap() {
        let g = two_triangles();
        for kind in KINDS {
            let cfg = QicdConfig {
                kind,
                ..QicdConfig::default()
            };
            let r = run_qicd(&g, &cfg).unwrap();
            assert_eq!(r.q_star, 0.5);
            assert_eq!(r.mrg, 0.0);
            assert_eq!(modularity(&g, &r.best_partition).unwrap(), 0.5);
        }
    }

    #[test]
    fn mrg_arithmetic() {
        assert!((mrg(0.182, 0.143) - 0.039).abs() < 1e-15);
        assert_eq!(mrg(0.3, 0.3), 0.0);
        assert!((mrg(0.12, 0.18) + 0.06).abs() < 1e-15);
    }

    #[test]
    fn acceptance_is_strict() {
        let g = two_triangles();
        let r = run_qicd(&g, &QicdConfig::default()).unwrap();
        for rec in &r.trace {
            assert_eq!(rec.accepted, rec.q_quant > rec.q_ref);
        }
    }

    #[test]
    fn stall_limit_stops_early() {
        let g = two_triangles();
        let cfg = QicdConfig {
            iterations: 50,
            stall_limit: 3,
            ..QicdConfig::default()
        };
        assert_eq!(run_qicd(&g, &cfg).unwrap().trace.len(), 3);
    }

    #[test]
    fn singleton_init_climbs() {
        let g = two_triangles();
        let cfg = QicdConfig {
            init_mode: InitMode::Singleton,
            ..QicdConfig::default()
        };
        let r = run_qicd(&g, &cfg).unwrap();
        assert!(r.q_initial < 0.0);
        assert_eq!(r.q_star, 0.5);
    }

    #[test]
    fn invalid_config() {
        let g = two_triangles();
        let cfg = QicdConfig {
            iterations: 0,
            ..QicdConfig::default()
        };
        assert!(matches!(run_qicd(&g, &cfg), Err(QicdError::InvalidConfig(_))));
        let cfg = QicdConfig {
            seed_count: Some(0),
            ..QicdConfig::default()
        };
        assert!(matches!(run_qicd(&g, &cfg), Err(QicdError::InvalidConfig(_))));
    }

    #[test]
    fn edgeless_graph_errors() {
        let g = Graph::from_edges(3, &[]).unwrap();
        assert!(matches!(
            run_qicd(&g, &QicdConfig::default()),
            Err(QicdError::Detect(DetectError::Partition(PartitionError::NoEdges)))
        ));
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in KINDS {
            assert_eq!(PerturbationKind::parse(kind.name()), Some(kind));
        }
        assert_eq!(PerturbationKind::parse("quantum"), None);
    }
}
