//! Benchmark graphs: planted partitions, rings of cliques and
//! degree-preserving rewiring for null models.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{leiden, DetectError, DetectorConfig};
use crate::graph::Graph;
use crate::partition::{modularity, Partition};
use crate::sampling::{mix, substream};

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("invalid planted spec: {0}")]
    InvalidSpec(&'static str),
    #[error("expected edge count {0} is below 1")]
    ExpectedEmpty(f64),
    #[error("ring of cliques needs at least 3 cliques of size 3 (got {cliques} x {size})")]
    RingTooSmall { cliques: usize, size: usize },
    #[error("rewiring needs at least 2 edges and a positive swap factor")]
    RewireTooSmall,
    #[error("target modularity {0} outside [0, 0.9)")]
    BadTarget(f64),
    #[error("calibration did not reach Q = {target} within {steps} bisection steps (last {last})")]
    NotBracketed { target: f64, steps: usize, last: f64 },
    #[error(transparent)]
    Detect(#[from] DetectError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n: usize,
    pub k: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<(), GenerateError> {
        if self.k < 1 || self.k > self.n {
            return Err(GenerateError::InvalidSpec("need 1 <= k <= n"));
        }
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.p_in) || !ok(self.p_out) || self.p_out > self.p_in {
            return Err(GenerateError::InvalidSpec("need 0 <= p_out <= p_in <= 1"));
        }
        Ok(())
    }

    /// Community sizes: equal, with the remainder spread one per community.
    pub fn sizes(&self) -> Vec<usize> {
        let base = self.n / self.k;
        let extra = self.n % self.k;
        (0..self.k).map(|c| base + usize::from(c < extra)).collect()
    }

    pub fn expected_edges(&self) -> f64 {
        let sizes = self.sizes();
        let intra: f64 = sizes.iter().map(|&s| (s * s.saturating_sub(1) / 2) as f64).sum();
        let all = (self.n * (self.n - 1) / 2) as f64;
        self.p_in * intra + self.p_out * (all - intra)
    }
}

/// Visits each index in `0..total` independently with probability `p`,
/// skipping geometrically between hits.
fn bernoulli_indices<R: Rng + ?Sized>(total: usize, p: f64, rng: &mut R, mut hit: impl FnMut(usize)) {
    if p <= 0.0 || total == 0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(hit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut idx: usize = 0;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (total - idx) as f64 {
            return;
        }
        idx += skip as usize;
        hit(idx);
        idx += 1;
        if idx >= total {
            return;
        }
    }
}

/// Unweighted planted-partition graph plus its ground-truth partition.
pub fn generate_planted(spec: &PlantedSpec) -> Result<(Graph, Partition), GenerateError> {
    spec.validate()?;
    let expected = spec.expected_edges();
    if expected < 1.0 {
        return Err(GenerateError::ExpectedEmpty(expected));
    }
    let sizes = spec.sizes();
    let mut starts = Vec::with_capacity(sizes.len());
    let mut labels = Vec::with_capacity(spec.n);
    let mut acc = 0;
    for (c, &s) in sizes.iter().enumerate() {
        starts.push(acc);
        acc += s;
        labels.extend(std::iter::repeat_n(c, s));
    }
    let mut rng = substream(spec.seed, 0);
    let mut edges = Vec::with_capacity(expected.ceil() as usize);
    for a in 0..sizes.len() {
        // pairs inside block a, row-major over the strict lower triangle
        let sa = sizes[a];
        let base = starts[a];
        bernoulli_indices(sa * sa.saturating_sub(1) / 2, spec.p_in, &mut rng, |t| {
            // row r holds indices r(r-1)/2 .. r(r+1)/2
            let mut r = (((8.0 * t as f64 + 1.0).sqrt() + 1.0) / 2.0).floor() as usize;
            while r * (r - 1) / 2 > t {
                r -= 1;
            }
            while (r + 1) * r / 2 <= t {
                r += 1;
            }
            let col = t - r * (r - 1) / 2;
            edges.push((base + col, base + r, 1.0));
        });
        for b in a + 1..sizes.len() {
            let sb = sizes[b];
            bernoulli_indices(sa * sb, spec.p_out, &mut rng, |t| {
                edges.push((base + t / sb, starts[b] + t % sb, 1.0));
            });
        }
    }
    let g = Graph::from_unique_edges(spec.n, &edges);
    let truth = Partition::from_labels(&g, &labels).expect("labels cover the graph");
    Ok((g, truth))
}

/// `cliques` copies of K_size joined in a ring by single bridge edges.
pub fn ring_of_cliques(cliques: usize, size: usize) -> Result<Graph, GenerateError> {
    if cliques < 3 || size < 3 {
        return Err(GenerateError::RingTooSmall { cliques, size });
    }
    let mut edges = Vec::new();
    for c in 0..cliques {
        let base = c * size;
        for i in 0..size {
            for j in i + 1..size {
                edges.push((base + i, base + j, 1.0));
            }
        }
        let next = ((c + 1) % cliques) * size;
        edges.push((base + size - 1, next, 1.0));
    }
    Ok(Graph::from_edges(cliques * size, &edges).expect("ring edges are valid"))
}

/// Labels of the natural clique partition of `ring_of_cliques(cliques, size)`.
pub fn ring_of_cliques_truth(cliques: usize, size: usize) -> Vec<usize> {
    (0..cliques * size).map(|u| u / size).collect()
}

/// Attempts `⌈swap_factor · m⌉` double-edge swaps, rejecting any that would
/// create a self-loop or a parallel edge. Edge weights travel with the
/// swapped edge, so the degree sequence is unchanged.
pub fn degree_preserving_rewire(g: &Graph, swap_factor: f64, seed: u64) -> Result<Graph, GenerateError> {
    let mut edges: Vec<(usize, usize, f64)> = g.edges().collect();
    if edges.len() < 2 || swap_factor.is_nan() || swap_factor <= 0.0 {
        return Err(GenerateError::RewireTooSmall);
    }
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut present: HashSet<(usize, usize)> = edges.iter().map(|&(u, v, _)| (u, v)).collect();
    let mut rng = substream(seed, 0);
    let attempts = (swap_factor * edges.len() as f64).ceil() as usize;
    for _ in 0..attempts {
        let i = rng.gen_range(0..edges.len());
        let j = rng.gen_range(0..edges.len());
        if i == j {
            continue;
        }
        let (a, b, wi) = edges[i];
        let (c, d, wj) = edges[j];
        let (x, y) = if rng.gen::<bool>() { (c, d) } else { (d, c) };
        // (a, b), (x, y) -> (a, y), (x, b)
        if a == y || x == b {
            continue;
        }
        let e1 = key(a, y);
        let e2 = key(x, b);
        if e1 == e2 || present.contains(&e1) || present.contains(&e2) {
            continue;
        }
        present.remove(&key(a, b));
        present.remove(&key(c, d));
        present.insert(e1);
        present.insert(e2);
        edges[i] = (e1.0, e1.1, wi);
        edges[j] = (e2.0, e2.1, wj);
    }
    edges.sort_by_key(|p| (p.0, p.1));
    Ok(Graph::from_unique_edges(g.node_count(), &edges))
}

/// Knobs for `calibrate_planted`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub avg_degree: f64,
    /// Leiden runs averaged per evaluation.
    pub runs: usize,
    pub max_steps: usize,
    /// Raise the average degree when even a fully mixed graph (ratio 1)
    /// scores above the target.
    pub escalate_degree: bool,
    pub seed: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            avg_degree: 20.0,
            runs: 3,
            max_steps: 30,
            escalate_degree: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub spec: PlantedSpec,
    pub achieved_q: f64,
    /// Mixing ratio `p_out / p_in`.
    pub ratio: f64,
    pub avg_degree: f64,
    /// False when the target lies outside what the mixing ratio can reach
    /// and the nearest endpoint was returned.
    pub within_tolerance: bool,
}

/// Planted spec for `n` nodes in `k` blocks with the given mixing ratio and
/// expected average degree.
pub fn planted_for_ratio(n: usize, k: usize, ratio: f64, avg_degree: f64, seed: u64) -> PlantedSpec {
    let block = n as f64 / k as f64;
    let p_in = (avg_degree / ((block - 1.0) + ratio * (n as f64 - block))).min(1.0);
    PlantedSpec {
        n,
        k,
        p_in,
        p_out: (ratio * p_in).min(p_in),
        seed,
    }
}

fn mean_leiden_q(spec: &PlantedSpec, runs: usize) -> Result<f64, GenerateError> {
    let (g, _) = generate_planted(spec)?;
    let mut total = 0.0;
    for r in 0..runs {
        let cfg = DetectorConfig::default().with_seed(mix(spec.seed, r as u64));
        let p = leiden(&g, &cfg)?;
        total += modularity(&g, &p).map_err(DetectError::from)?;
    }
    Ok(total / runs as f64)
}

/// Bisects the mixing ratio until the mean Leiden Q of the generated graph
/// is within `tolerance` of `target_q`.
pub fn calibrate_planted(
    n: usize,
    k: usize,
    target_q: f64,
    tolerance: f64,
    opts: &CalibrationOptions,
) -> Result<Calibration, GenerateError> {
    if !(0.0..0.9).contains(&target_q) {
        return Err(GenerateError::BadTarget(target_q));
    }
    let runs = opts.runs.max(1);
    let eval = |ratio: f64, degree: f64| -> Result<(PlantedSpec, f64), GenerateError> {
        let spec = planted_for_ratio(n, k, ratio, degree, opts.seed);
        Ok((spec, mean_leiden_q(&spec, runs)?))
    };
    let done = |spec: PlantedSpec, q: f64, ratio: f64, degree: f64, within: bool| Calibration {
        spec,
        achieved_q: q,
        ratio,
        avg_degree: degree,
        within_tolerance: within,
    };

    let mut degree = opts.avg_degree.min((n - 1) as f64);
    let (mut mixed_spec, mut mixed_q) = eval(1.0, degree)?;
    // escalate until the fully mixed graph scores below the band, so the
    // result keeps some planted signal
    while mixed_q > target_q - tolerance && opts.escalate_degree && degree * 1.5 <= (n - 1) as f64 / 4.0 {
        degree *= 1.5;
        (mixed_spec, mixed_q) = eval(1.0, degree)?;
    }
    if (mixed_q - target_q).abs() <= tolerance {
        return Ok(done(mixed_spec, mixed_q, 1.0, degree, true));
    }
    if mixed_q > target_q {
        return Ok(done(mixed_spec, mixed_q, 1.0, degree, false));
    }
    let (sep_spec, sep_q) = eval(0.0, degree)?;
    if (sep_q - target_q).abs() <= tolerance {
        return Ok(done(sep_spec, sep_q, 0.0, degree, true));
    }
    if sep_q < target_q {
        return Ok(done(sep_spec, sep_q, 0.0, degree, false));
    }
    // Q falls as the ratio rises
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut last = sep_q;
    for _ in 0..opts.max_steps {
        let mid = 0.5 * (lo + hi);
        let (spec, q) = eval(mid, degree)?;
        if (q - target_q).abs() <= tolerance {
            return Ok(done(spec, q, mid, degree, true));
        }
        if q > target_q {
            lo = mid;
        } else {
            hi = mid;
        }
        last = q;
    }
    Err(GenerateError::NotBracketed {
        target: target_q,
        steps: opts.max_steps,
        last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_degrees(g: &Graph) -> Vec<usize> {
        let mut d: Vec<usize> = (0..g.node_count()).map(|u| g.degree(u)).collect();
        d.sort_unstable();
        d
    }

    #[test]
    fn two_disjoint_cliques() {
        let spec = PlantedSpec {
            n: 6,
            k: 2,
            p_in: 1.0,
            p_out: 0.0,
            seed: 3,
        };
        let (g, truth) = generate_planted(&spec).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert_eq!(modularity(&g, &truth).unwrap(), 0.5);
    }

    #[test]
    fn planted_is_reproducible_and_edge_rate_matches() {
        let spec = PlantedSpec {
            n: 600,
            k: 6,
            p_in: 0.1,
            p_out: 0.01,
            seed: 5,
        };
        let (a, _) = generate_planted(&spec).unwrap();
        let (b, _) = generate_planted(&spec).unwrap();
        assert_eq!(a, b);
        let expected = spec.expected_edges();
        let sd = expected.sqrt();
        assert!((a.edge_count() as f64 - expected).abs() < 5.0 * sd);
    }

    #[test]
    fn planted_spec_validation() {
        let bad = PlantedSpec {
            n: 10,
            k: 2,
            p_in: 0.1,
            p_out: 0.2,
            seed: 0,
        };
        assert!(matches!(generate_planted(&bad), Err(GenerateError::InvalidSpec(_))));
        let empty = PlantedSpec {
            n: 10,
            k: 2,
            p_in: 0.0,
            p_out: 0.0,
            seed: 0,
        };
        assert!(matches!(generate_planted(&empty), Err(GenerateError::ExpectedEmpty(_))));
    }

    #[test]
    fn remainder_spread_one_per_community() {
        let spec = PlantedSpec {
            n: 11,
            k: 3,
            p_in: 0.5,
            p_out: 0.1,
            seed: 0,
        };
        assert_eq!(spec.sizes(), vec![4, 4, 3]);
    }

    #[test]
    fn ring_shapes() {
        let g = ring_of_cliques(10, 5).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (50, 110));
        let g = ring_of_cliques(3, 3).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (9, 12));
        let p = Partition::from_labels(&g, &ring_of_cliques_truth(3, 3)).unwrap();
        let q = modularity(&g, &p).unwrap();
        assert!((q - 3.0 * (3.0 / 12.0 - (8.0f64 / 24.0).powi(2))).abs() < 1e-12);
        assert!(matches!(ring_of_cliques(2, 5), Err(GenerateError::RingTooSmall { .. })));
    }

    #[test]
    fn rewire_keeps_degrees() {
        let g = ring_of_cliques(10, 5).unwrap();
        for seed in 0..5 {
            let r = degree_preserving_rewire(&g, 10.0, seed).unwrap();
            assert_eq!(sorted_degrees(&r), sorted_degrees(&g));
            assert_eq!(r.edge_count(), g.edge_count());
            assert_ne!(r, g);
        }
    }

    #[test]
    fn star_cannot_be_rewired() {
        let edges: Vec<_> = (1..8).map(|v| (0, v, 1.0)).collect();
        let g = Graph::from_edges(8, &edges).unwrap();
        assert_eq!(degree_preserving_rewire(&g, 10.0, 1).unwrap(), g);
    }

    #[test]
    fn rewire_preconditions() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(degree_preserving_rewire(&g, 10.0, 0), Err(GenerateError::RewireTooSmall));
    }

    #[test]
    fn ratio_parametrisation_hits_degree() {
        let spec = planted_for_ratio(1000, 10, 0.5, 20.0, 0);
        let expected_degree = 2.0 * spec.expected_edges() / 1000.0;
        assert!((expected_degree - 20.0).abs() < 1e-9);
    }

    #[test]
    fn calibration_limits() {
        let opts = CalibrationOptions {
            avg_degree: 8.0,
            escalate_degree: false,
            ..CalibrationOptions::default()
        };
        let c = calibrate_planted(200, 4, 0.0, 0.01, &opts).unwrap();
        assert_eq!(c.ratio, 1.0);
        assert!(!c.within_tolerance);
        let dense = CalibrationOptions {
            avg_degree: 19.0,
            ..opts
        };
        let c = calibrate_planted(40, 2, 0.5, 0.001, &dense).unwrap();
        assert!(c.ratio < 0.05, "ratio {}", c.ratio);
        assert!(matches!(
            calibrate_planted(200, 2, 0.95, 0.01, &opts),
            Err(GenerateError::BadTarget(_))
        ));
    }
}
