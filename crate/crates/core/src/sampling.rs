//! Structured random perturbations: exponential (Porter–Thomas) node
//! weights, simplex-normalized (Haar) weights, seed-and-grow partition
//! proposals and size-flattening (hyperuniform) reassignment.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::partition::Partition;

/// Name of the generator behind every seeded stream, recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8";

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("cannot sample weights for zero nodes")]
    Empty,
    #[error("seed count {seeds} exceeds node count {nodes}")]
    TooManySeeds { seeds: usize, nodes: usize },
    #[error("seed count must be at least 1")]
    NoSeeds,
    #[error("weight vector has {weights} entries but the graph has {nodes} nodes")]
    LengthMismatch { weights: usize, nodes: usize },
    #[error("invalid hyperuniform parameters: {0}")]
    InvalidParams(&'static str),
}

/// SplitMix64 finalizer over `base ^ golden * (index + 1)`.
pub fn mix(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(base, index)`.
pub fn substream(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(base, index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    /// Set when the weights sum to one.
    pub normalized: bool,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Inverse-transform Exp(1) draw from `u` in `(0, 1]`.
pub fn exp_from_uniform(u: f64) -> f64 {
    // adding +0.0 turns -ln(1) = -0.0 into 0.0
    -u.ln() + 0.0
}

/// `n` i.i.d. unit-mean exponential weights.
pub fn sample_pt_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<WeightVector, SamplingError> {
    if n == 0 {
        return Err(SamplingError::Empty);
    }
    let weights = (0..n)
        // gen::<f64>() is in [0, 1); flip it onto (0, 1]
        .map(|_| exp_from_uniform(1.0 - rng.gen::<f64>()))
        .collect();
    Ok(WeightVector {
        weights,
        normalized: false,
    })
}

/// Exponential weights rescaled onto the probability simplex, i.e. a flat
/// Dirichlet draw.
pub fn sample_haar_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<WeightVector, SamplingError> {
    loop {
        let mut w = sample_pt_weights(n, rng)?;
        let total: f64 = w.weights.iter().sum();
        if total > 0.0 {
            for x in w.weights.iter_mut() {
                *x /= total;
            }
            w.normalized = true;
            return Ok(w);
        }
    }
}

/// Default proposal seed count, `⌈√n⌉`.
pub fn default_seed_count(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, n.max(1))
}

/// Seeds the `k` heaviest nodes and grows them by simultaneous breadth-first
/// search. A node reached by several seeds in the same round joins the
/// heavier seed (lower id on equal weight). Unreached nodes stay alone.
pub fn propose_partition(g: &Graph, w: &WeightVector, k: usize) -> Result<Partition, SamplingError> {
    let n = g.node_count();
    if w.len() != n {
        return Err(SamplingError::LengthMismatch {
            weights: w.len(),
            nodes: n,
        });
    }
    if k == 0 {
        return Err(SamplingError::NoSeeds);
    }
    if k > n {
        return Err(SamplingError::TooManySeeds { seeds: k, nodes: n });
    }
    let weights = &w.weights;
    let heavier = |a: usize, b: usize| weights[a] > weights[b] || (weights[a] == weights[b] && a < b);

    let mut order: Vec<usize> = (0..n).collect();
    order.select_nth_unstable_by(k - 1, |&a, &b| {
        weights[b].total_cmp(&weights[a]).then(a.cmp(&b))
    });
    let mut seeds = order[..k].to_vec();
    seeds.sort_unstable();

    const UNSEEN: usize = usize::MAX;
    let mut owner = vec![UNSEEN; n];
    let mut depth = vec![usize::MAX; n];
    let mut frontier: Vec<usize> = Vec::with_capacity(k);
    for &s in &seeds {
        owner[s] = s;
        depth[s] = 0;
        frontier.push(s);
    }
    let mut d = 0;
    let mut next = Vec::new();
    while !frontier.is_empty() {
        for &u in &frontier {
            let o = owner[u];
            for (v, _) in g.neighbors(u) {
                if depth[v] == usize::MAX {
                    depth[v] = d + 1;
                    owner[v] = o;
                    next.push(v);
                } else if depth[v] == d + 1 && heavier(o, owner[v]) {
                    owner[v] = o;
                }
            }
        }
        frontier.clear();
        std::mem::swap(&mut frontier, &mut next);
        d += 1;
    }
    let labels: Vec<usize> = (0..n).map(|u| if owner[u] == UNSEEN { u } else { owner[u] }).collect();
    Ok(Partition::from_labels(g, &labels).expect("labels cover the graph"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperuniformParams {
    /// A community is oversized when larger than `skew_factor · n / C`.
    pub skew_factor: f64,
    /// Share of an oversized community's members to relocate.
    pub reassign_fraction: f64,
}

impl Default for HyperuniformParams {
    fn default() -> Self {
        HyperuniformParams {
            skew_factor: 2.0,
            reassign_fraction: 0.1,
        }
    }
}

impl HyperuniformParams {
    pub fn validate(&self) -> Result<(), SamplingError> {
        if !(self.skew_factor > 1.0 && self.skew_factor.is_finite()) {
            return Err(SamplingError::InvalidParams("skew factor must exceed 1"));
        }
        // a zero fraction is accepted and makes every adjustment a no-op
        if !(0.0..=1.0).contains(&self.reassign_fraction) {
            return Err(SamplingError::InvalidParams("reassign fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Moves `⌈f · size⌉` random members out of every oversized community into
/// uniformly chosen communities that were not oversized.
pub fn hyperuniform_adjust<R: Rng + ?Sized>(
    g: &Graph,
    p: &Partition,
    hp: &HyperuniformParams,
    rng: &mut R,
) -> Result<Partition, SamplingError> {
    hp.validate()?;
    let labels = hyperuniform_labels(p, hp, rng);
    Ok(Partition::from_labels(g, &labels).expect("labels cover the graph"))
}

fn hyperuniform_labels<R: Rng + ?Sized>(p: &Partition, hp: &HyperuniformParams, rng: &mut R) -> Vec<usize> {
    let mut labels = p.labels().to_vec();
    let count = p.community_count();
    if count < 2 || hp.reassign_fraction == 0.0 {
        return labels;
    }
    let threshold = hp.skew_factor * p.node_count() as f64 / count as f64;
    let oversized: Vec<bool> = p.sizes().iter().map(|&s| s as f64 > threshold).collect();
    let receivers: Vec<usize> = (0..count).filter(|&c| !oversized[c]).collect();
    if receivers.is_empty() {
        return labels;
    }
    for (c, members) in p.members().into_iter().enumerate() {
        if !oversized[c] {
            continue;
        }
        let size = members.len();
        let moving = ((hp.reassign_fraction * size as f64).ceil() as usize).min(size - 1);
        for i in sample(rng, size, moving).into_iter() {
            labels[members[i]] = receivers[rng.gen_range(0..receivers.len())];
        }
    }
    labels
}

/// Reassigns `⌈f · n⌉` random nodes, apportioned across communities by size,
/// each to a uniformly random other community.
pub fn hu_noise<R: Rng + ?Sized>(
    g: &Graph,
    p: &Partition,
    hp: &HyperuniformParams,
    rng: &mut R,
) -> Result<Partition, SamplingError> {
    hp.validate()?;
    let labels = hu_noise_labels(p, hp.reassign_fraction, rng);
    Ok(Partition::from_labels(g, &labels).expect("labels cover the graph"))
}

fn hu_noise_labels<R: Rng + ?Sized>(p: &Partition, fraction: f64, rng: &mut R) -> Vec<usize> {
    let mut labels = p.labels().to_vec();
    let n = p.node_count();
    let count = p.community_count();
    let total = (fraction * n as f64).ceil() as usize;
    if count < 2 || total == 0 {
        return labels;
    }
    // largest-remainder apportionment of `total` by community size
    let sizes = p.sizes();
    let mut quota: Vec<usize> = sizes.iter().map(|&s| total * s / n).collect();
    let assigned: usize = quota.iter().sum();
    let mut by_remainder: Vec<usize> = (0..count).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = (total * sizes[a]) % n;
        let rb = (total * sizes[b]) % n;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for &c in by_remainder.iter().take(total - assigned) {
        quota[c] += 1;
    }
    for (c, members) in p.members().into_iter().enumerate() {
        let take = quota[c].min(members.len());
        for i in sample(rng, members.len(), take).into_iter() {
            // uniform over the other count - 1 communities
            let mut target = rng.gen_range(0..count - 1);
            if target >= c {
                target += 1;
            }
            labels[members[i]] = target;
        }
    }
    labels
}
