//! Directed weighted graph over dense node ids, with edge-list ingestion
//! and symmetrization for community detection.

use std::collections::HashMap;
use std::io::BufRead;

use crate::{Error, Result};

/// Dense node handle; contiguous `0..n`. External string ids are kept in a
/// side table on the graph.
pub type NodeId = u32;

/// Direction of adjacency traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

/// Edge-list file format: one edge per line, `src dst [weight]`,
/// `#`-prefixed comment lines ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListFormat {
    Tsv,
    Csv,
}

impl EdgeListFormat {
    fn separator(self) -> char {
        match self {
            EdgeListFormat::Tsv => '\t',
            EdgeListFormat::Csv => ',',
        }
    }
}

impl std::str::FromStr for EdgeListFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tsv" => Ok(EdgeListFormat::Tsv),
            "csv" => Ok(EdgeListFormat::Csv),
            other => Err(format!("unknown edge list format {other:?}")),
        }
    }
}

/// Immutable weighted directed graph. Self-loops are dropped at build
/// time and duplicate `(src, dst)` edges are aggregated by weight sum.
/// Both adjacency directions are stored, sorted by target id.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    ids: Vec<String>,
    index: HashMap<String, NodeId>,
    out_adj: Vec<Vec<(NodeId, f64)>>,
    in_adj: Vec<Vec<(NodeId, f64)>>,
    edge_count: usize,
}

impl DirectedGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// External string id for a node handle.
    pub fn external_id(&self, v: NodeId) -> &str {
        &self.ids[v as usize]
    }

    /// Resolve an external id back to its handle.
    pub fn resolve(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count() as NodeId).into_iter()
    }

    /// Adjacency of `v` in the given direction, sorted by node id.
    pub fn neighbors(&self, v: NodeId, direction: Direction) -> Result<&[(NodeId, f64)]> {
        if (v as usize) >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                node: v,
                count: self.node_count(),
            });
        }
        Ok(match direction {
            Direction::Out => &self.out_adj[v as usize],
            Direction::In => &self.in_adj[v as usize],
        })
    }

    /// Out-adjacency without the bounds check, for hot loops that iterate
    /// `0..n`.
    pub fn out(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.out_adj[v as usize]
    }

    pub fn incoming(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.in_adj[v as usize]
    }

    /// Weight of the edge `u -> v`, if present.
    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        let adj = &self.out_adj[u as usize];
        adj.binary_search_by_key(&v, |&(t, _)| t)
            .ok()
            .map(|i| adj[i].1)
    }

    /// Symmetric view for community detection: weight of `{u, v}` is
    /// `w(u,v) + w(v,u)`.
    pub fn symmetrize(&self) -> UndirectedView {
        let n = self.node_count();
        let mut adj: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
        for u in 0..n as NodeId {
            for &(v, w) in &self.out_adj[u as usize] {
                adj[u as usize].push((v, w));
                adj[v as usize].push((u, w));
            }
        }
        let mut total_weight = 0.0;
        let mut edge_count = 0;
        for (u, row) in adj.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(t, _)| t);
            // merge the two directions of each pair
            let mut merged: Vec<(NodeId, f64)> = Vec::with_capacity(row.len());
            for &(t, w) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == t => last.1 += w,
                    _ => merged.push((t, w)),
                }
            }
            for &(t, w) in &merged {
                if (t as usize) > u {
                    total_weight += w;
                    edge_count += 1;
                }
            }
            *row = merged;
        }
        UndirectedView {
            adj,
            total_weight,
            edge_count,
        }
    }
}

/// Symmetric adjacency derived from a [`DirectedGraph`]. Node set is
/// identical to the source graph.
#[derive(Debug, Clone)]
pub struct UndirectedView {
    adj: Vec<Vec<(NodeId, f64)>>,
    total_weight: f64,
    edge_count: usize,
}

impl UndirectedView {
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sum of undirected edge weights (each pair counted once).
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.adj[v as usize]
    }

    /// Weighted degree of `v`.
    pub fn degree(&self, v: NodeId) -> f64 {
        self.adj[v as usize].iter().map(|&(_, w)| w).sum()
    }
}

/// Incremental graph construction with id interning in first-seen order.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    ids: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: HashMap<(NodeId, NodeId), f64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, id: &str) -> NodeId {
        if let Some(&v) = self.index.get(id) {
            return v;
        }
        let v = self.ids.len() as NodeId;
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), v);
        v
    }

    /// Add a directed edge. Self-loops are dropped (the endpoints are
    /// still interned); duplicate edges accumulate their weights.
    pub fn add_edge(&mut self, src: &str, dst: &str, weight: f64) -> Result<()> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidWeight {
                src: src.to_string(),
                dst: dst.to_string(),
                weight,
            });
        }
        let u = self.intern(src);
        let v = self.intern(dst);
        if u == v {
            return Ok(());
        }
        *self.edges.entry((u, v)).or_insert(0.0) += weight;
        Ok(())
    }

    pub fn build(self) -> DirectedGraph {
        let n = self.ids.len();
        let mut out_adj: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
        let mut in_adj: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
        let edge_count = self.edges.len();
        for (&(u, v), &w) in &self.edges {
            out_adj[u as usize].push((v, w));
            in_adj[v as usize].push((u, w));
        }
        for row in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            row.sort_unstable_by_key(|&(t, _)| t);
        }
        DirectedGraph {
            ids: self.ids,
            index: self.index,
            out_adj,
            in_adj,
            edge_count,
        }
    }
}

/// Build a graph from in-memory edge tuples; a missing weight defaults
/// to 1.0.
pub fn build_graph<S, I>(edges: I) -> Result<DirectedGraph>
where
    S: AsRef<str>,
    I: IntoIterator<Item = (S, S, Option<f64>)>,
{
    let mut b = GraphBuilder::new();
    for (src, dst, w) in edges {
        b.add_edge(src.as_ref(), dst.as_ref(), w.unwrap_or(1.0))?;
    }
    Ok(b.build())
}

/// Parse an edge-list stream. Empty input yields an empty graph.
pub fn load_edge_list<R: BufRead>(reader: R, format: EdgeListFormat) -> Result<DirectedGraph> {
    let sep = format.separator();
    let mut b = GraphBuilder::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(sep).collect();
        let (src, dst, weight) = match fields.as_slice() {
            [s, d] => (*s, *d, 1.0),
            [s, d, w] => {
                let w: f64 = w.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("invalid weight {w:?}"),
                })?;
                (*s, *d, w)
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected 2 or 3 fields, got {}", fields.len()),
                })
            }
        };
        if src.is_empty() || dst.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty node id".to_string(),
            });
        }
        b.add_edge(src, dst, weight).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(edges: &[(&str, &str)]) -> DirectedGraph {
        build_graph(edges.iter().map(|&(s, d)| (s, d, None))).unwrap()
    }

    #[test]
    fn two_node_cycle() {
        let g = g(&[("a", "b"), ("b", "a")]);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edge_weight(0, 1), Some(1.0));
        assert_eq!(g.edge_weight(1, 0), Some(1.0));
    }

    #[test]
    fn self_loop_dropped() {
        let g = g(&[("a", "a")]);
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn duplicate_edges_aggregate() {
        let g = build_graph([("a", "b", Some(2.0)), ("a", "b", Some(3.0))]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_weight(0, 1), Some(5.0));
    }

    #[test]
    fn rejects_bad_weight() {
        for w in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(build_graph([("a", "b", Some(w))]).is_err());
        }
    }

    #[test]
    fn neighbors_sorted_and_checked() {
        let g = g(&[("a", "c"), ("a", "b"), ("d", "a")]);
        let a = g.resolve("a").unwrap();
        let out: Vec<NodeId> = g
            .neighbors(a, Direction::Out)
            .unwrap()
            .iter()
            .map(|&(t, _)| t)
            .collect();
        let mut expected = vec![g.resolve("b").unwrap(), g.resolve("c").unwrap()];
        expected.sort_unstable();
        assert_eq!(out, expected);
        assert!(out.windows(2).all(|w| w[0] < w[1]));
        let b = g.resolve("b").unwrap();
        assert_eq!(g.neighbors(b, Direction::In).unwrap(), &[(a, 1.0)]);
        assert!(g.neighbors(99, Direction::Out).is_err());
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let g = g(&[("a", "a")]);
        assert!(g.neighbors(0, Direction::Out).unwrap().is_empty());
        assert!(g.neighbors(0, Direction::In).unwrap().is_empty());
    }

    #[test]
    fn load_tsv() {
        let g = load_edge_list("a\tb\nb\tc\n".as_bytes(), EdgeListFormat::Tsv).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn load_csv_with_comment_and_weight() {
        let g = load_edge_list("# comment\na,b,2.5\n".as_bytes(), EdgeListFormat::Csv).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_weight(0, 1), Some(2.5));
    }

    #[test]
    fn malformed_weight_reports_line() {
        let err = load_edge_list("a\tb\tx\n".as_bytes(), EdgeListFormat::Tsv).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_empty_graph() {
        let g = load_edge_list("".as_bytes(), EdgeListFormat::Tsv).unwrap();
        assert_eq!(g.node_count(), 0);
        let view = g.symmetrize();
        assert_eq!(view.node_count(), 0);
        assert_eq!(view.edge_count(), 0);
    }

    #[test]
    fn symmetrize_sums_directions() {
        let g = g(&[("a", "b"), ("b", "a")]);
        let view = g.symmetrize();
        assert_eq!(view.neighbors(0), &[(1, 2.0)]);
        assert_eq!(view.neighbors(1), &[(0, 2.0)]);
        assert_eq!(view.total_weight(), 2.0);

        let g1 = build_graph([("a", "b", Some(1.0))]).unwrap();
        let view = g1.symmetrize();
        assert_eq!(view.neighbors(0), &[(1, 1.0)]);
    }

    #[test]
    fn adjacency_directions_describe_same_edges() {
        let g = g(&[("a", "b"), ("b", "c"), ("c", "a"), ("a", "c")]);
        let mut from_out = Vec::new();
        let mut from_in = Vec::new();
        for u in g.nodes() {
            for &(v, w) in g.out(u) {
                from_out.push((u, v, w.to_bits()));
            }
            for &(v, w) in g.incoming(u) {
                from_in.push((v, u, w.to_bits()));
            }
        }
        from_out.sort_unstable();
        from_in.sort_unstable();
        assert_eq!(from_out, from_in);
        assert_eq!(from_out.len(), g.edge_count());
    }
}
