//! Conflict graphs and total per-vertex maps.
//!
//! Vertices are numbered 1..=n to match the usual presentation of the
//! problem; edges are unordered, irreflexive pairs. Disconnected graphs are
//! accepted (every invariant holds componentwise) but flagged so callers
//! can warn.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::philosopher::Code;
use crate::rng::SplitMix64;

/// 1-based vertex identifier.
pub type VertexId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph needs at least one vertex")]
    Empty,
    #[error("self-loop on vertex {0}: the adjacency relation is irreflexive")]
    SelfLoop(VertexId),
    #[error("vertex {vertex} out of range 1..={count}")]
    VertexOutOfRange { vertex: VertexId, count: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphParseError {
    #[error("missing header line \"n <count>\"")]
    MissingHeader,
    #[error("line {line}: expected \"n <count>\", got {text:?}")]
    BadHeader { line: usize, text: String },
    #[error("line {line}: expected \"j k\", got {text:?}")]
    BadEdgeLine { line: usize, text: String },
    #[error("line {line}: {source}")]
    BadEdge {
        line: usize,
        #[source]
        source: GraphError,
    },
}

/// An undirected, irreflexive conflict graph over vertices 1..=n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    vertex_count: usize,
    edges: BTreeSet<(VertexId, VertexId)>,
    adjacency: Vec<BTreeSet<VertexId>>,
}

impl ConflictGraph {
    /// Build a graph. Self-loops and out-of-range endpoints are rejected;
    /// duplicate edges collapse silently.
    pub fn new(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, GraphError> {
        if vertex_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut normalised = BTreeSet::new();
        let mut adjacency = vec![BTreeSet::new(); vertex_count + 1];
        for (j, k) in edges {
            for v in [j, k] {
                if v == 0 || v > vertex_count {
                    return Err(GraphError::VertexOutOfRange {
                        vertex: v,
                        count: vertex_count,
                    });
                }
            }
            if j == k {
                return Err(GraphError::SelfLoop(j));
            }
            normalised.insert((j.min(k), j.max(k)));
            adjacency[j].insert(k);
            adjacency[k].insert(j);
        }
        Ok(ConflictGraph {
            vertex_count,
            edges: normalised,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        1..=self.vertex_count
    }

    /// Edges as (lower, higher) pairs.
    pub fn edges(&self) -> &BTreeSet<(VertexId, VertexId)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, j: VertexId, k: VertexId) -> bool {
        self.edges.contains(&(j.min(k), j.max(k)))
    }

    pub fn neighbours(&self, j: VertexId) -> &BTreeSet<VertexId> {
        &self.adjacency[j]
    }

    pub fn degree(&self, j: VertexId) -> usize {
        self.adjacency[j].len()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.vertex_count + 1];
        let mut stack = vec![1];
        seen[1] = true;
        let mut count = 1;
        while let Some(j) = stack.pop() {
            for &k in &self.adjacency[j] {
                if !seen[k] {
                    seen[k] = true;
                    count += 1;
                    stack.push(k);
                }
            }
        }
        count == self.vertex_count
    }

    /// The classic cycle layout: vertex j conflicts with its two table
    /// neighbours.
    pub fn ring(n: usize) -> Result<Self, GraphError> {
        if n == 1 {
            return ConflictGraph::new(1, []);
        }
        if n == 2 {
            return ConflictGraph::new(2, [(1, 2)]);
        }
        ConflictGraph::new(n, (1..=n).map(|j| (j, j % n + 1)))
    }

    /// A seeded random connected graph: a random spanning tree plus each
    /// remaining pair with probability `extra_edge_prob`.
    pub fn random_connected(n: usize, extra_edge_prob: f64, seed: u64) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut rng = SplitMix64::new(seed);
        let mut order: Vec<VertexId> = (1..=n).collect();
        rng.shuffle(&mut order);
        let mut edges = Vec::new();
        for i in 1..n {
            let parent = order[rng.below(i as u64) as usize];
            edges.push((order[i], parent));
        }
        for j in 1..=n {
            for k in (j + 1)..=n {
                if rng.chance(extra_edge_prob) {
                    edges.push((j, k));
                }
            }
        }
        ConflictGraph::new(n, edges)
    }
}

/// A parsed graph plus non-fatal observations about the input.
#[derive(Debug, Clone)]
pub struct ParsedGraph {
    pub graph: ConflictGraph,
    pub warnings: Vec<String>,
}

/// Parse the edge-list format: a header `n <count>`, then one `j k` pair
/// per line. Blank lines and `#` comments are skipped. Duplicate edges and
/// disconnected graphs produce warnings, not errors.
pub fn parse_graph(text: &str) -> Result<ParsedGraph, GraphParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or(GraphParseError::MissingHeader)?;
    let vertex_count = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["n", count] => count.parse::<usize>().map_err(|_| GraphParseError::BadHeader {
            line: header_line,
            text: header.to_string(),
        })?,
        _ => {
            return Err(GraphParseError::BadHeader {
                line: header_line,
                text: header.to_string(),
            })
        }
    };

    let mut warnings = Vec::new();
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for (line, text) in lines {
        let parts: Vec<&str> = text.split_whitespace().collect();
        let (j, k) = match parts[..] {
            [a, b] => match (a.parse::<VertexId>(), b.parse::<VertexId>()) {
                (Ok(j), Ok(k)) => (j, k),
                _ => {
                    return Err(GraphParseError::BadEdgeLine {
                        line,
                        text: text.to_string(),
                    })
                }
            },
            _ => {
                return Err(GraphParseError::BadEdgeLine {
                    line,
                    text: text.to_string(),
                })
            }
        };
        if j != k && !seen.insert((j.min(k), j.max(k))) {
            warnings.push(format!("line {line}: duplicate edge {{{j}, {k}}} ignored"));
            continue;
        }
        // Range and self-loop errors surface with the offending line.
        if j == k {
            return Err(GraphParseError::BadEdge {
                line,
                source: GraphError::SelfLoop(j),
            });
        }
        if j == 0 || j > vertex_count || k == 0 || k > vertex_count {
            let vertex = if j == 0 || j > vertex_count { j } else { k };
            return Err(GraphParseError::BadEdge {
                line,
                source: GraphError::VertexOutOfRange {
                    vertex,
                    count: vertex_count,
                },
            });
        }
        edges.push((j, k));
    }

    let graph = ConflictGraph::new(vertex_count, edges).map_err(|source| GraphParseError::BadEdge {
        line: header_line,
        source,
    })?;
    if !graph.is_connected() {
        warnings.push("graph is disconnected; invariants hold componentwise".to_string());
    }
    Ok(ParsedGraph { graph, warnings })
}

/// Render a graph in the same edge-list format accepted by [`parse_graph`].
pub fn format_graph(g: &ConflictGraph) -> String {
    let mut out = format!("n {}\n", g.vertex_count());
    for (j, k) in g.edges() {
        out.push_str(&format!("{j} {k}\n"));
    }
    out
}

/// A total map from vertices 1..=n to values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexMap<T> {
    values: Vec<T>,
}

impl<T: Clone> VertexMap<T> {
    pub fn uniform(vertex_count: usize, value: T) -> Self {
        VertexMap {
            values: vec![value; vertex_count],
        }
    }

    pub fn from_fn(vertex_count: usize, mut f: impl FnMut(VertexId) -> T) -> Self {
        VertexMap {
            values: (1..=vertex_count).map(&mut f).collect(),
        }
    }

    pub fn from_values(values: Vec<T>) -> Self {
        VertexMap { values }
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, j: VertexId) -> &T {
        &self.values[j - 1]
    }

    pub fn set(&mut self, j: VertexId, value: T) {
        self.values[j - 1] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &T)> {
        self.values.iter().enumerate().map(|(i, v)| (i + 1, v))
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

impl<T: Code> VertexMap<T> {
    /// One character per vertex, in vertex order.
    pub fn code_string(&self) -> String {
        self.values.iter().map(|v| v.code()).collect()
    }

    /// Parse a code string; `None` on any unknown character.
    pub fn from_code_string(text: &str) -> Option<Self> {
        text.chars()
            .map(T::from_code)
            .collect::<Option<Vec<T>>>()
            .map(|values| VertexMap { values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::philosopher::Activity;

    #[test]
    fn rejects_self_loops_and_range() {
        assert_eq!(
            ConflictGraph::new(3, [(1, 1)]),
            Err(GraphError::SelfLoop(1))
        );
        assert_eq!(
            ConflictGraph::new(2, [(1, 3)]),
            Err(GraphError::VertexOutOfRange { vertex: 3, count: 2 })
        );
    }

    #[test]
    fn parses_single_edge() {
        let parsed = parse_graph("n 2\n1 2\n").unwrap();
        assert_eq!(parsed.graph.vertex_count(), 2);
        assert_eq!(parsed.graph.edges().len(), 1);
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn parses_classic_five_ring() {
        let parsed = parse_graph("n 5\n1 2\n2 3\n3 4\n4 5\n5 1\n").unwrap();
        assert_eq!(parsed.graph.edge_count(), 5);
        assert!(parsed.graph.is_connected());
        for j in 1..=5 {
            assert_eq!(parsed.graph.degree(j), 2);
        }
        assert_eq!(parsed.graph, ConflictGraph::ring(5).unwrap());
    }

    #[test]
    fn parse_reports_self_loop_with_line() {
        let err = parse_graph("n 3\n1 1\n").unwrap_err();
        match err {
            GraphParseError::BadEdge { line, source } => {
                assert_eq!(line, 2);
                assert_eq!(source, GraphError::SelfLoop(1));
                assert!(source.to_string().contains("irreflexive"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_warns_on_duplicates_and_disconnection() {
        let parsed = parse_graph("n 4\n1 2\n2 1\n").unwrap();
        assert_eq!(parsed.graph.edge_count(), 1);
        assert_eq!(parsed.warnings.len(), 2);
        assert!(parsed.warnings[0].contains("duplicate"));
        assert!(parsed.warnings[1].contains("disconnected"));
    }

    #[test]
    fn parse_round_trips_format() {
        let g = ConflictGraph::random_connected(7, 0.3, 11).unwrap();
        let parsed = parse_graph(&format_graph(&g)).unwrap();
        assert_eq!(parsed.graph, g);
    }

    #[test]
    fn random_connected_is_connected_and_reproducible() {
        for seed in 0..20 {
            let g = ConflictGraph::random_connected(8, 0.2, seed).unwrap();
            assert!(g.is_connected(), "seed {seed}");
            assert_eq!(g, ConflictGraph::random_connected(8, 0.2, seed).unwrap());
        }
    }

    #[test]
    fn vertex_map_codes_round_trip() {
        let map = VertexMap::from_values(vec![
            Activity::Thinking,
            Activity::Hungry,
            Activity::Eating,
        ]);
        assert_eq!(map.code_string(), "the");
        assert_eq!(
            VertexMap::<Activity>::from_code_string("the").unwrap(),
            map
        );
        assert!(VertexMap::<Activity>::from_code_string("txe").is_none());
    }
}
