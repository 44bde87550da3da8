//! Immutable weighted undirected graphs in compressed adjacency form.

use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge {index}: endpoint {node} out of range for {node_count} nodes")]
    EndpointOutOfRange {
        index: usize,
        node: usize,
        node_count: usize,
    },
    #[error("edge {index}: self-loop on node {node}")]
    SelfLoop { index: usize, node: usize },
    #[error("edge {index}: weight {weight} is not strictly positive and finite")]
    InvalidWeight { index: usize, weight: f64 },
    #[error("edge {index}: duplicate of edge {first} between {u} and {v}")]
    DuplicateEdge {
        index: usize,
        first: usize,
        u: usize,
        v: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// How `build` treats a second occurrence of the same undirected pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    /// Sum the weights of repeated pairs into one edge.
    Merge,
}

/// Weighted undirected graph over dense node ids `0..n`.
///
/// Every undirected edge is stored twice, once in each endpoint's adjacency
/// run. Strengths and the total weight `m` are cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    strengths: Vec<f64>,
    total_weight: f64,
}

impl Graph {
    /// Builds a graph, rejecting duplicate pairs.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        Self::build(n, edges, DuplicatePolicy::Reject)
    }

    pub fn build(
        n: usize,
        edges: &[(usize, usize, f64)],
        policy: DuplicatePolicy,
    ) -> Result<Self, GraphError> {
        let mut canon: Vec<(usize, usize, f64, usize)> = Vec::with_capacity(edges.len());
        for (index, &(u, v, w)) in edges.iter().enumerate() {
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::EndpointOutOfRange {
                        index,
                        node,
                        node_count: n,
                    });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { index, node: u });
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(GraphError::InvalidWeight { index, weight: w });
            }
            canon.push((u.min(v), u.max(v), w, index));
        }
        // stable sort keeps the first occurrence ahead of its duplicates
        canon.sort_by_key(|a| (a.0, a.1));

        let mut unique: Vec<(usize, usize, f64)> = Vec::with_capacity(canon.len());
        let mut first_index = Vec::with_capacity(canon.len());
        for &(u, v, w, index) in &canon {
            match unique.last_mut() {
                Some(last) if last.0 == u && last.1 == v => match policy {
                    DuplicatePolicy::Reject => {
                        let first = *first_index.last().unwrap();
                        return Err(GraphError::DuplicateEdge {
                            index: index.max(first),
                            first: index.min(first),
                            u,
                            v,
                        });
                    }
                    DuplicatePolicy::Merge => last.2 += w,
                },
                _ => {
                    unique.push((u, v, w));
                    first_index.push(index);
                }
            }
        }
        Ok(Self::from_unique_edges(n, &unique))
    }

    /// Assembles the CSR arrays from edges already known to be valid and unique.
    pub(crate) fn from_unique_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v, _) in edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = offsets[n];
        let mut targets = vec![0usize; total];
        let mut weights = vec![0.0f64; total];
        let mut cursor = offsets[..n].to_vec();
        for &(u, v, w) in edges {
            targets[cursor[u]] = v;
            weights[cursor[u]] = w;
            cursor[u] += 1;
            targets[cursor[v]] = u;
            weights[cursor[v]] = w;
            cursor[v] += 1;
        }
        let strengths: Vec<f64> = (0..n)
            .map(|u| weights[offsets[u]..offsets[u + 1]].iter().sum())
            .collect();
        let total_weight = edges.iter().map(|e| e.2).sum();
        Graph {
            offsets,
            targets,
            weights,
            strengths,
            total_weight,
        }
    }

    pub fn node_count(&self) -> usize {
        self.strengths.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Total edge weight `m`.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn strength(&self, node: usize) -> f64 {
        self.strengths[node]
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`, ordered by `(u, v)` within `u`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// True when every edge weight equals 1.
    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// Serializes to the edge-list text format with a `# nodes:` header.
    pub fn to_edge_list(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "# nodes: {}", self.node_count());
        let unweighted = self.is_unweighted();
        for (u, v, w) in self.edges() {
            if unweighted {
                let _ = writeln!(out, "{u} {v}");
            } else {
                let _ = writeln!(out, "{u} {v} {w}");
            }
        }
        out
    }
}

/// Result of reading an edge list whose node tokens are arbitrary labels.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub graph: Graph,
    /// `labels[id]` is the token that was mapped to dense id `id`.
    pub labels: Vec<String>,
}

struct RawLine<'a> {
    line: usize,
    u: &'a str,
    v: &'a str,
    weight: f64,
}

enum Parsed<'a> {
    Skip,
    Header(usize),
    Edge(RawLine<'a>),
}

fn parse_line(line_no: usize, raw: &str) -> Result<Parsed<'_>, GraphError> {
    let line = raw.strip_suffix('\r').unwrap_or(raw);
    let trimmed = line.trim_matches(|c| c == ' ' || c == '\t');
    if trimmed.is_empty() {
        return Ok(Parsed::Skip);
    }
    if let Some(comment) = trimmed.strip_prefix('#') {
        if let Some(rest) = comment.trim().strip_prefix("nodes:") {
            let n = rest.trim().parse::<usize>().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("bad node count header '{trimmed}'"),
            })?;
            return Ok(Parsed::Header(n));
        }
        return Ok(Parsed::Skip);
    }
    let fields: Vec<&str> = trimmed
        .split([' ', '\t'])
        .filter(|f| !f.is_empty())
        .collect();
    if fields.len() != 2 && fields.len() != 3 {
        return Err(GraphError::Parse {
            line: line_no,
            message: format!("expected 'u v' or 'u v w', found {} fields", fields.len()),
        });
    }
    let weight = match fields.get(2) {
        Some(f) => f.parse::<f64>().map_err(|_| GraphError::Parse {
            line: line_no,
            message: format!("bad weight '{f}'"),
        })?,
        None => 1.0,
    };
    Ok(Parsed::Edge(RawLine {
        line: line_no,
        u: fields[0],
        v: fields[1],
        weight,
    }))
}

fn read_lines<R: BufRead>(reader: R) -> Result<Vec<String>, GraphError> {
    reader
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| GraphError::Io(e.to_string()))
}

/// Reads an edge list with non-negative integer node ids.
pub fn load_edge_list<R: BufRead>(reader: R, policy: DuplicatePolicy) -> Result<Graph, GraphError> {
    let lines = read_lines(reader)?;
    let mut header: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    for (i, raw) in lines.iter().enumerate() {
        match parse_line(i + 1, raw)? {
            Parsed::Skip => {}
            Parsed::Header(n) => header = Some(n),
            Parsed::Edge(e) => {
                let parse_id = |tok: &str| {
                    tok.parse::<usize>().map_err(|_| GraphError::Parse {
                        line: e.line,
                        message: format!("bad node id '{tok}'"),
                    })
                };
                let u = parse_id(e.u)?;
                let v = parse_id(e.v)?;
                max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
                edges.push((u, v, e.weight));
            }
        }
    }
    let n = header.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    Graph::build(n, &edges, policy)
}

/// Reads an edge list whose node tokens are arbitrary strings, assigning
/// dense ids in order of first appearance.
pub fn load_labeled_edge_list<R: BufRead>(
    reader: R,
    policy: DuplicatePolicy,
) -> Result<LabeledGraph, GraphError> {
    let lines = read_lines(reader)?;
    let mut ids = std::collections::HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in lines.iter().enumerate() {
        if let Parsed::Edge(e) = parse_line(i + 1, raw)? {
            let mut id_of = |tok: &str| {
                *ids.entry(tok.to_string()).or_insert_with(|| {
                    labels.push(tok.to_string());
                    labels.len() - 1
                })
            };
            let u = id_of(e.u);
            let v = id_of(e.v);
            edges.push((u, v, e.weight));
        }
    }
    let graph = Graph::build(labels.len(), &edges, policy)?;
    Ok(LabeledGraph { graph, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Graph, GraphError> {
        load_edge_list(text.as_bytes(), DuplicatePolicy::Reject)
    }

    #[test]
    fn single_edge() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(g.total_weight(), 1.0);
        assert_eq!(g.strengths(), &[1.0, 1.0]);
    }

    #[test]
    fn triangle() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(g.total_weight(), 3.0);
        assert_eq!(g.strengths(), &[2.0, 2.0, 2.0]);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            Graph::from_edges(3, &[(0, 0, 1.0)]),
            Err(GraphError::SelfLoop { index: 0, node: 0 })
        );
        assert!(matches!(
            Graph::from_edges(3, &[(0, 1, 1.0), (1, 3, 1.0)]),
            Err(GraphError::EndpointOutOfRange { index: 1, node: 3, .. })
        ));
        assert!(matches!(
            Graph::from_edges(3, &[(0, 1, 0.0)]),
            Err(GraphError::InvalidWeight { index: 0, .. })
        ));
        assert!(matches!(
            Graph::from_edges(3, &[(0, 1, f64::NAN)]),
            Err(GraphError::InvalidWeight { .. })
        ));
        assert_eq!(
            Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (1, 0, 2.0)]),
            Err(GraphError::DuplicateEdge {
                index: 2,
                first: 0,
                u: 0,
                v: 1
            })
        );
    }

    #[test]
    fn merge_duplicates_sums_weights() {
        let g = Graph::build(2, &[(0, 1, 1.0), (1, 0, 2.5)], DuplicatePolicy::Merge).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.total_weight(), 3.5);
    }

    #[test]
    fn loads_path_with_default_weights() {
        let g = load("0 1\n1 2\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.total_weight(), 2.0);
    }

    #[test]
    fn header_sets_node_count() {
        let g = load("# nodes: 5\n0 1 2.5\n").unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.total_weight(), 2.5);
        assert_eq!(g.degree(4), 0);
    }

    #[test]
    fn parse_error_reports_line() {
        assert!(matches!(load("0 x\n"), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(load("# c\n0 1\n1 2 abc\n"), Err(GraphError::Parse { line: 3, .. })));
        assert!(matches!(load("0 1 2 3\n"), Err(GraphError::Parse { line: 1, .. })));
    }

    #[test]
    fn tolerates_crlf_tabs_and_runs_of_spaces() {
        let g = load("# a comment\r\n0\t1\r\n1    2\t 0.5\r\n\n").unwrap();
        assert_eq!(g.total_weight(), 1.5);
    }

    #[test]
    fn loader_propagates_build_errors() {
        assert!(matches!(load("1 1\n"), Err(GraphError::SelfLoop { index: 0, .. })));
        assert!(matches!(load("# nodes: 2\n0 5\n"), Err(GraphError::EndpointOutOfRange { .. })));
    }

    #[test]
    fn labeled_ids_are_dense_in_first_appearance_order() {
        let lg = load_labeled_edge_list("alice bob\nbob 17\n".as_bytes(), DuplicatePolicy::Reject)
            .unwrap();
        assert_eq!(lg.labels, vec!["alice", "bob", "17"]);
        assert_eq!(lg.graph.node_count(), 3);
        assert_eq!(lg.graph.degree(1), 2);
    }

    #[test]
    fn unweighted_strengths_are_integer_degrees() {
        let g = load("0 1\n0 2\n0 3\n2 3\n").unwrap();
        for u in 0..g.node_count() {
            assert_eq!(g.strength(u), g.degree(u) as f64);
        }
    }
}
