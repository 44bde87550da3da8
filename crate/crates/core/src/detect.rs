//! Louvain and Leiden modularity optimizers.
//!
//! Both share the same level loop: greedy single-node moves, then collapse
//! communities into an aggregate network and repeat. Louvain moves in full
//! sweeps until a sweep gains less than `min_gain`; Leiden uses a queue that
//! only revisits neighbours of moved nodes. Leiden also splits every
//! community into its connected components before aggregating, so its
//! output communities are always connected.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::partition::{aggregate, compact_labels, Aggregate, Network, Partition, PartitionError};

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("invalid detector config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub seed: u64,
    pub max_levels: usize,
    pub max_sweeps_per_level: usize,
    /// A level ends once a full sweep improves Q by less than this.
    pub min_gain: f64,
    pub resolution: f64,
    /// Break ties between equally good targets at random instead of by lowest id.
    pub random_tie_break: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            seed: 0,
            max_levels: 20,
            max_sweeps_per_level: 100,
            min_gain: 1e-7,
            resolution: 1.0,
            random_tie_break: false,
        }
    }
}

impl DetectorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        if self.max_levels < 1 {
            return Err(DetectError::InvalidConfig("max_levels must be at least 1"));
        }
        if self.max_sweeps_per_level < 1 {
            return Err(DetectError::InvalidConfig("max_sweeps_per_level must be at least 1"));
        }
        if self.min_gain.is_nan() || self.min_gain < 0.0 {
            return Err(DetectError::InvalidConfig("min_gain must be non-negative"));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(DetectError::InvalidConfig("resolution must be positive"));
        }
        Ok(())
    }
}

/// Mutable community state used while moving nodes.
struct MoveState {
    labels: Vec<usize>,
    strength: Vec<f64>,
    size: Vec<usize>,
    free: Vec<usize>,
}

impl MoveState {
    fn new<N: Network + ?Sized>(net: &N, labels: &[usize]) -> Self {
        let n = net.node_count();
        let mut strength = vec![0.0; n];
        let mut size = vec![0usize; n];
        for (u, &c) in labels.iter().enumerate() {
            strength[c] += net.node_strength(u);
            size[c] += 1;
        }
        let free = (0..n).rev().filter(|&c| size[c] == 0).collect();
        MoveState {
            labels: labels.to_vec(),
            strength,
            size,
            free,
        }
    }
}

/// Scratch buffers for evaluating one node's neighbourhood.
struct Scratch {
    weight_to: Vec<f64>,
    touched: Vec<usize>,
    ties: Vec<usize>,
}

/// Moves `u` to its best community (staying put unless something is
/// strictly better). Returns the modularity gain if it moved.
fn move_one<N: Network + ?Sized>(
    net: &N,
    u: usize,
    state: &mut MoveState,
    scratch: &mut Scratch,
    cfg: &DetectorConfig,
    rng: &mut ChaCha8Rng,
) -> Option<f64> {
    let m = net.total_weight();
    let gamma = cfg.resolution;
    let Scratch {
        weight_to,
        touched,
        ties,
    } = scratch;
    let s = net.node_strength(u);
    let from = state.labels[u];
    for (v, w) in net.graph().neighbors(u) {
        let c = state.labels[v];
        if weight_to[c] == 0.0 {
            touched.push(c);
        }
        weight_to[c] += w;
    }
    state.strength[from] -= s;
    state.size[from] -= 1;

    let gain = |c: usize, k: f64| k - gamma * s * state.strength[c] / (2.0 * m);
    let stay = gain(from, weight_to[from]);
    let mut best = stay;
    let mut best_c = from;
    ties.clear();
    touched.sort_unstable();
    let fresh = if state.size[from] > 0 { state.free.last().copied() } else { None };
    for c in touched.iter().copied().chain(fresh) {
        if c == from {
            continue;
        }
        let gc = gain(c, weight_to[c]);
        if gc > best {
            best = gc;
            best_c = c;
            ties.clear();
            ties.push(c);
        } else if gc == best && best_c != from {
            if c < best_c && !cfg.random_tie_break {
                best_c = c;
            }
            ties.push(c);
        }
    }
    if cfg.random_tie_break && ties.len() > 1 {
        best_c = ties[rng.gen_range(0..ties.len())];
    }

    state.strength[best_c] += s;
    state.size[best_c] += 1;
    for &c in touched.iter() {
        weight_to[c] = 0.0;
    }
    touched.clear();
    if best_c == from {
        return None;
    }
    if Some(best_c) == fresh {
        state.free.pop();
    }
    if state.size[from] == 0 {
        state.free.push(from);
    }
    state.labels[u] = best_c;
    Some((best - stay) / m)
}

/// Greedy single-node moves from `labels`; returns dense labels and the
/// total modularity gain.
///
/// Sweep mode visits every node in a fresh random order per sweep until a
/// sweep gains less than `min_gain`. Queue mode visits nodes once in random
/// order and re-queues the neighbours of every node that moves, stopping when
/// the queue drains; its work budget is `max_sweeps_per_level` node visits
/// per node.
fn move_nodes<N: Network + ?Sized>(
    net: &N,
    labels: &[usize],
    cfg: &DetectorConfig,
    queued: bool,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let n = net.node_count();
    let mut state = MoveState::new(net, labels);
    let mut order: Vec<usize> = (0..n).collect();
    let mut scratch = Scratch {
        weight_to: vec![0.0; n],
        touched: Vec::new(),
        ties: Vec::new(),
    };
    let mut total_gain = 0.0;

    if queued {
        order.shuffle(rng);
        let mut queue = VecDeque::from(order);
        let mut queued_flag = vec![true; n];
        let mut budget = cfg.max_sweeps_per_level.saturating_mul(n);
        while let Some(u) = queue.pop_front() {
            queued_flag[u] = false;
            if budget == 0 {
                break;
            }
            budget -= 1;
            if let Some(g) = move_one(net, u, &mut state, &mut scratch, cfg, rng) {
                total_gain += g;
                let c = state.labels[u];
                for (v, _) in net.graph().neighbors(u) {
                    if !queued_flag[v] && state.labels[v] != c {
                        queued_flag[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
    } else {
        for _ in 0..cfg.max_sweeps_per_level {
            order.shuffle(rng);
            let mut sweep_gain = 0.0;
            for &u in &order {
                if let Some(g) = move_one(net, u, &mut state, &mut scratch, cfg, rng) {
                    sweep_gain += g;
                }
            }
            total_gain += sweep_gain;
            if sweep_gain < cfg.min_gain {
                break;
            }
        }
    }
    let (labels, _) = compact_labels(&state.labels);
    (labels, total_gain)
}

/// Splits every community into the connected components of its induced
/// subgraph. Output labels are dense.
fn split_components<N: Network + ?Sized>(net: &N, labels: &[usize]) -> (Vec<usize>, usize) {
    let n = net.node_count();
    let g = net.graph();
    let mut out = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if out[start] != usize::MAX {
            continue;
        }
        out[start] = next;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for (v, _) in g.neighbors(u) {
                if out[v] == usize::MAX && labels[v] == labels[start] {
                    out[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    (out, next)
}

fn check_edges(g: &Graph) -> Result<(), DetectError> {
    if g.total_weight() <= 0.0 {
        return Err(DetectError::Partition(PartitionError::NoEdges));
    }
    Ok(())
}

/// Shared level loop. `initial` seeds the level-0 labels. With `split`,
/// each level aggregates the connected pieces of its communities and the
/// next level starts from the communities those pieces came from;
/// otherwise it aggregates whole communities and starts from singletons.
fn multilevel(
    g: &Graph,
    initial: Option<&Partition>,
    cfg: &DetectorConfig,
    split: bool,
) -> Result<Partition, DetectError> {
    cfg.validate()?;
    check_edges(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = g.node_count();
    let mut start: Vec<usize> = match initial {
        Some(p) => {
            if p.node_count() != n {
                return Err(PartitionError::LengthMismatch {
                    labels: p.node_count(),
                    nodes: n,
                }
                .into());
            }
            p.labels().to_vec()
        }
        None => (0..n).collect(),
    };
    // original node -> node of the current level
    let mut membership: Vec<usize> = (0..n).collect();
    let mut communities = start.clone();
    let mut level_net: Option<Aggregate> = None;

    for _ in 0..cfg.max_levels {
        let net: &dyn Network = match &level_net {
            None => g,
            Some(agg) => agg,
        };
        let level_nodes = net.node_count();
        let (labels, _) = move_nodes(net, &start, cfg, split, &mut rng);
        communities = membership.iter().map(|&v| labels[v]).collect();
        let (pieces, count) = if split {
            split_components(net, &labels)
        } else {
            let count = labels.iter().copied().max().map_or(0, |c| c + 1);
            (labels.clone(), count)
        };
        if count == level_nodes {
            break;
        }
        start = if split {
            let mut parent = vec![0; count];
            for (v, &piece) in pieces.iter().enumerate() {
                parent[piece] = labels[v];
            }
            parent
        } else {
            (0..count).collect()
        };
        let next = aggregate(net, &Partition::from_dense(net, pieces.clone(), count));
        membership = membership.iter().map(|&v| pieces[v]).collect();
        level_net = Some(next);
    }
    let p = Partition::from_labels(g, &communities)?;
    Ok(if split { leiden_refine(g, &p) } else { p })
}

/// Classic Louvain: local moves then aggregation, level after level.
pub fn louvain(g: &Graph, cfg: &DetectorConfig) -> Result<Partition, DetectError> {
    multilevel(g, None, cfg, false)
}

/// Leiden-style optimizer whose communities are always internally connected.
pub fn leiden(g: &Graph, cfg: &DetectorConfig) -> Result<Partition, DetectError> {
    multilevel(g, None, cfg, true)
}

/// Leiden started from an existing partition instead of singletons.
pub fn leiden_from(g: &Graph, initial: &Partition, cfg: &DetectorConfig) -> Result<Partition, DetectError> {
    multilevel(g, Some(initial), cfg, true)
}

/// Louvain started from an existing partition instead of singletons.
pub fn louvain_from(g: &Graph, initial: &Partition, cfg: &DetectorConfig) -> Result<Partition, DetectError> {
    multilevel(g, Some(initial), cfg, false)
}

/// Greedy node moves on the original graph without aggregation.
///
/// Q of the output is never below Q of the input.
pub fn leiden_local_move(g: &Graph, p: &Partition, cfg: &DetectorConfig) -> Result<Partition, DetectError> {
    cfg.validate()?;
    check_edges(g)?;
    if p.node_count() != g.node_count() {
        return Err(PartitionError::LengthMismatch {
            labels: p.node_count(),
            nodes: g.node_count(),
        }
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (labels, gain) = move_nodes(g, p.labels(), cfg, true, &mut rng);
    if gain <= 0.0 {
        return Ok(p.clone());
    }
    Ok(Partition::from_labels(g, &labels)?)
}

/// Splits communities that induce disconnected subgraphs into their components.
pub fn leiden_refine(g: &Graph, p: &Partition) -> Partition {
    let (labels, count) = split_components(g, p.labels());
    if count == p.community_count() {
        return p.clone();
    }
    Partition::from_dense(g, labels, count)
}

/// True when every community of `p` induces a connected subgraph.
pub fn communities_connected(g: &Graph, p: &Partition) -> bool {
    split_components(g, p.labels()).1 == p.community_count()
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

    #[test]
    fn both_detectors_find_the_triangles() {
        let g = two_triangles();
        for seed in 0..5 {
            let cfg = DetectorConfig::default().with_seed(seed);
            for p in [louvain(&g, &cfg).unwrap(), leiden(&g, &cfg).unwrap()] {
                assert_eq!(modularity(&g, &p).unwrap(), 0.5);
                assert_eq!(p.community_count(), 2);
            }
        }
    }

    #[test]
    fn edgeless_graph_errors() {
        let g = Graph::from_edges(4, &[]).unwrap();
        assert_eq!(
            leiden(&g, &DetectorConfig::default()),
            Err(DetectError::Partition(PartitionError::NoEdges))
        );
    }

    #[test]
    fn config_validation() {
        let g = two_triangles();
        let bad = DetectorConfig {
            resolution: 0.0,
            ..DetectorConfig::default()
        };
        assert!(matches!(louvain(&g, &bad), Err(DetectError::InvalidConfig(_))));
        let bad = DetectorConfig {
            max_levels: 0,
            ..DetectorConfig::default()
        };
        assert!(matches!(leiden(&g, &bad), Err(DetectError::InvalidConfig(_))));
    }

    #[test]
    fn local_move_fixes_misassigned_node() {
        let g = two_triangles();
        let p = Partition::from_labels(&g, &[0, 0, 1, 1, 1, 1]).unwrap();
        let out = leiden_local_move(&g, &p, &DetectorConfig::default()).unwrap();
        assert_eq!(modularity(&g, &out).unwrap(), 0.5);
        assert_eq!(out.labels(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn local_move_fixed_point() {
        let g = two_triangles();
        let p = Partition::from_labels(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        let out = leiden_local_move(&g, &p, &DetectorConfig::default()).unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn refine_splits_disconnected_community() {
        let g = two_triangles();
        let p = Partition::whole(&g);
        let out = leiden_refine(&g, &p);
        assert_eq!(out.community_count(), 2);
        assert!(communities_connected(&g, &out));
        let natural = Partition::from_labels(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert_eq!(leiden_refine(&g, &natural), natural);
    }

    #[test]
    fn deterministic_under_seed() {
        let mut edges = Vec::new();
        for i in 0..40usize {
            for j in [1usize, 3, 7] {
                edges.push((i, (i + j) % 40, 1.0));
            }
        }
        let g = Graph::build(40, &edges, crate::graph::DuplicatePolicy::Merge).unwrap();
        let cfg = DetectorConfig::default().with_seed(11);
        assert_eq!(leiden(&g, &cfg).unwrap(), leiden(&g, &cfg).unwrap());
        assert_eq!(louvain(&g, &cfg).unwrap(), louvain(&g, &cfg).unwrap());
    }

    #[test]
    fn random_tie_break_still_optimizes() {
        let g = two_triangles();
        let cfg = DetectorConfig {
            random_tie_break: true,
            ..DetectorConfig::default()
        };
        assert_eq!(modularity(&g, &leiden(&g, &cfg).unwrap()).unwrap(), 0.5);
    }
}
