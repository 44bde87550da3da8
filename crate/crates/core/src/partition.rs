//! Partitions, modularity, single-node move gains and community aggregation.

use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("modularity undefined: graph has no edges")]
    NoEdges,
    #[error("partition has {labels} labels but the graph has {nodes} nodes")]
    LengthMismatch { labels: usize, nodes: usize },
    #[error("node {node} out of range for {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("community {community} does not exist (partition has {count})")]
    InvalidCommunity { community: usize, count: usize },
}

/// A weighted network that may carry per-node self weight.
///
/// Plain graphs have none; aggregated graphs record the weight of edges
/// collapsed inside each community node.
pub trait Network {
    fn graph(&self) -> &Graph;

    fn self_weight(&self, _node: usize) -> f64 {
        0.0
    }

    /// Strength including twice the self weight.
    fn node_strength(&self, node: usize) -> f64 {
        self.graph().strength(node) + 2.0 * self.self_weight(node)
    }

    /// Total weight including self weight.
    fn total_weight(&self) -> f64;

    fn node_count(&self) -> usize {
        self.graph().node_count()
    }
}

impl Network for Graph {
    fn graph(&self) -> &Graph {
        self
    }

    fn total_weight(&self) -> f64 {
        Graph::total_weight(self)
    }
}

/// Community-collapsed graph with its self-weight ledger.
#[derive(Debug, Clone)]
pub struct Aggregate {
    graph: Graph,
    self_weight: Vec<f64>,
    total: f64,
}

impl Aggregate {
    pub fn new(graph: Graph, self_weight: Vec<f64>) -> Self {
        assert_eq!(graph.node_count(), self_weight.len());
        let total = graph.total_weight() + self_weight.iter().sum::<f64>();
        Aggregate {
            graph,
            self_weight,
            total,
        }
    }

    pub fn self_weights(&self) -> &[f64] {
        &self.self_weight
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }
}

impl Network for Aggregate {
    fn graph(&self) -> &Graph {
        &self.graph
    }

    fn self_weight(&self, node: usize) -> f64 {
        self.self_weight[node]
    }

    fn total_weight(&self) -> f64 {
        self.total
    }
}

/// Hard assignment of nodes to dense community ids with cached aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    labels: Vec<usize>,
    internal: Vec<f64>,
    strength: Vec<f64>,
    sizes: Vec<usize>,
}

/// Destination of a single-node move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Community(usize),
    NewSingleton,
}

/// Relabels to dense ids, preserving the relative order of the ids in use.
pub fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let bound = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut remap = vec![usize::MAX; bound];
    for &c in labels {
        remap[c] = 0;
    }
    let mut next = 0;
    for slot in remap.iter_mut().filter(|r| **r == 0) {
        *slot = next;
        next += 1;
    }
    (labels.iter().map(|&c| remap[c]).collect(), next)
}

impl Partition {
    /// Builds a partition from arbitrary labels; ids are compacted.
    pub fn from_labels<N: Network + ?Sized>(net: &N, labels: &[usize]) -> Result<Self, PartitionError> {
        let n = net.node_count();
        if labels.len() != n {
            return Err(PartitionError::LengthMismatch {
                labels: labels.len(),
                nodes: n,
            });
        }
        let (labels, count) = compact_labels(labels);
        Ok(Self::from_dense(net, labels, count))
    }

    pub(crate) fn from_dense<N: Network + ?Sized>(net: &N, labels: Vec<usize>, count: usize) -> Self {
        let g = net.graph();
        let mut internal = vec![0.0; count];
        let mut strength = vec![0.0; count];
        let mut sizes = vec![0usize; count];
        for u in 0..labels.len() {
            let c = labels[u];
            sizes[c] += 1;
            strength[c] += net.node_strength(u);
            internal[c] += net.self_weight(u);
            for (v, w) in g.neighbors(u) {
                if u < v && labels[v] == c {
                    internal[c] += w;
                }
            }
        }
        Partition {
            labels,
            internal,
            strength,
            sizes,
        }
    }

    pub fn singletons<N: Network + ?Sized>(net: &N) -> Self {
        let n = net.node_count();
        Self::from_dense(net, (0..n).collect(), n)
    }

    /// All nodes in one community (no communities for an empty graph).
    pub fn whole<N: Network + ?Sized>(net: &N) -> Self {
        let n = net.node_count();
        Self::from_dense(net, vec![0; n], usize::from(n > 0))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn community_count(&self) -> usize {
        self.sizes.len()
    }

    /// Per-community weight of edges with both endpoints inside, each counted once.
    pub fn internal_weight(&self) -> &[f64] {
        &self.internal
    }

    /// Per-community sum of member strengths.
    pub fn community_strength(&self) -> &[f64] {
        &self.strength
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Member lists per community, each sorted ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (u, &c) in self.labels.iter().enumerate() {
            out[c].push(u);
        }
        out
    }

    /// Copy of this partition with `node` moved, aggregates recomputed.
    pub fn with_move<N: Network + ?Sized>(
        &self,
        net: &N,
        node: usize,
        target: Target,
    ) -> Result<Self, PartitionError> {
        self.check_move(node, target)?;
        let mut labels = self.labels.clone();
        labels[node] = match target {
            Target::Community(c) => c,
            Target::NewSingleton => self.community_count(),
        };
        Self::from_labels(net, &labels)
    }

    fn check_move(&self, node: usize, target: Target) -> Result<(), PartitionError> {
        if node >= self.labels.len() {
            return Err(PartitionError::NodeOutOfRange {
                node,
                nodes: self.labels.len(),
            });
        }
        if let Target::Community(c) = target {
            if c >= self.community_count() {
                return Err(PartitionError::InvalidCommunity {
                    community: c,
                    count: self.community_count(),
                });
            }
        }
        Ok(())
    }

    fn check_cover<N: Network + ?Sized>(&self, net: &N) -> Result<(), PartitionError> {
        if self.labels.len() != net.node_count() {
            return Err(PartitionError::LengthMismatch {
                labels: self.labels.len(),
                nodes: net.node_count(),
            });
        }
        Ok(())
    }
}

/// Modularity with the standard null model (resolution 1).
pub fn modularity<N: Network + ?Sized>(net: &N, p: &Partition) -> Result<f64, PartitionError> {
    modularity_with_resolution(net, p, 1.0)
}

/// `Q = Σ_c [ e_c / m − γ (a_c / 2m)² ]`.
pub fn modularity_with_resolution<N: Network + ?Sized>(
    net: &N,
    p: &Partition,
    resolution: f64,
) -> Result<f64, PartitionError> {
    p.check_cover(net)?;
    let m = net.total_weight();
    if m <= 0.0 {
        return Err(PartitionError::NoEdges);
    }
    let two_m = 2.0 * m;
    let mut q = 0.0;
    for (e, a) in p.internal.iter().zip(&p.strength) {
        let frac = a / two_m;
        q += e / m - resolution * frac * frac;
    }
    Ok(q)
}

/// Modularity change from moving `node` to `target`, in `O(deg(node))`.
pub fn delta_q_move<N: Network + ?Sized>(
    net: &N,
    p: &Partition,
    node: usize,
    target: Target,
) -> Result<f64, PartitionError> {
    delta_q_move_with_resolution(net, p, node, target, 1.0)
}

pub fn delta_q_move_with_resolution<N: Network + ?Sized>(
    net: &N,
    p: &Partition,
    node: usize,
    target: Target,
    resolution: f64,
) -> Result<f64, PartitionError> {
    p.check_cover(net)?;
    p.check_move(node, target)?;
    let m = net.total_weight();
    if m <= 0.0 {
        return Err(PartitionError::NoEdges);
    }
    let from = p.labels[node];
    let to = match target {
        Target::Community(c) if c == from => return Ok(0.0),
        Target::Community(c) => Some(c),
        Target::NewSingleton => None,
    };
    let mut to_from = 0.0;
    let mut to_target = 0.0;
    for (v, w) in net.graph().neighbors(node) {
        let c = p.labels[v];
        if c == from {
            to_from += w;
        } else if Some(c) == to {
            to_target += w;
        }
    }
    let s = net.node_strength(node);
    let target_strength = to.map_or(0.0, |c| p.strength[c]);
    Ok((to_target - to_from) / m
        - resolution * s * (target_strength - p.strength[from] + s) / (2.0 * m * m))
}

/// Collapses each community into one node.
///
/// Cross-community weight becomes edge weight; weight inside a community
/// (including members' own self weight) goes to the self-weight ledger.
pub fn aggregate<N: Network + ?Sized>(net: &N, p: &Partition) -> Aggregate {
    let g = net.graph();
    let count = p.community_count();
    let members = p.members();
    // internal weight already includes members' own self weight
    let self_weight = p.internal.clone();
    let mut scratch = vec![0.0f64; count];
    let mut touched: Vec<usize> = Vec::new();
    let mut edges = Vec::new();
    for (c, nodes) in members.iter().enumerate() {
        for &u in nodes {
            for (v, w) in g.neighbors(u) {
                let d = p.labels[v];
                if d > c {
                    if scratch[d] == 0.0 {
                        touched.push(d);
                    }
                    scratch[d] += w;
                }
            }
        }
        touched.sort_unstable();
        for &d in &touched {
            edges.push((c, d, scratch[d]));
            scratch[d] = 0.0;
        }
        touched.clear();
    }
    Aggregate::new(Graph::from_unique_edges(count, &edges), self_weight)
}

/// Maps a partition of an aggregate's nodes back onto the nodes of the
/// network it was built from.
pub fn expand_labels(fine: &[usize], coarse: &[usize]) -> Vec<usize> {
    fine.iter().map(|&c| coarse[c]).collect()
}
