//! Disjoint community detection (Louvain, label propagation), modularity,
//! and loading of externally produced assignments.
//!
//! Detection runs on the symmetrized view of the directed graph. All
//! randomness comes from a caller-provided seed, so identical inputs give
//! byte-identical assignments.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{DirectedGraph, NodeId, UndirectedView};
use crate::{Error, Result};

/// Disjoint node -> community labeling with labels compacted to `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityAssignment {
    labels: Vec<u32>,
    count: u32,
}

impl CommunityAssignment {
    /// Build from arbitrary labels; compacts them to `0..k` in order of
    /// first appearance over the node index.
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> Self {
        let mut map: HashMap<L, u32> = HashMap::new();
        let mut compact = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = map.len() as u32;
            compact.push(*map.entry(l).or_insert(next));
        }
        CommunityAssignment {
            labels: compact,
            count: map.len() as u32,
        }
    }

    pub fn singletons(n: usize) -> Self {
        CommunityAssignment {
            labels: (0..n as u32).collect(),
            count: n as u32,
        }
    }

    pub fn label(&self, v: NodeId) -> u32 {
        self.labels[v as usize]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn community_count(&self) -> u32 {
        self.count
    }

    /// Members of every community, each list sorted by node id.
    pub fn members(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.count as usize];
        for (v, &c) in self.labels.iter().enumerate() {
            out[c as usize].push(v as NodeId);
        }
        out
    }

    /// Dump `node_id<TAB>label` rows.
    pub fn write_tsv<W: Write>(&self, g: &DirectedGraph, mut out: W) -> Result<()> {
        for v in g.nodes() {
            writeln!(out, "{}\t{}", g.external_id(v), self.label(v))?;
        }
        Ok(())
    }
}

/// Newman-Girvan modularity of an assignment over the symmetric view:
/// `Q = sum_c [ in_c/(2m) - (tot_c/(2m))^2 ]` with weighted degrees.
pub fn modularity(g: &UndirectedView, a: &CommunityAssignment) -> Result<f64> {
    if a.node_count() != g.node_count() {
        return Err(Error::InconsistentUniverse {
            message: format!(
                "assignment covers {} nodes, graph has {}",
                a.node_count(),
                g.node_count()
            ),
        });
    }
    let two_m = 2.0 * g.total_weight();
    if two_m == 0.0 {
        return Err(Error::ZeroWeight);
    }
    let k = a.community_count() as usize;
    let mut internal = vec![0.0; k]; // sum of A_ij over members, both directions
    let mut tot = vec![0.0; k]; // sum of weighted degrees
    for v in 0..g.node_count() as NodeId {
        let c = a.label(v) as usize;
        for &(u, w) in g.neighbors(v) {
            tot[c] += w;
            if a.label(u) as usize == c {
                internal[c] += w;
            }
        }
    }
    let mut q = 0.0;
    for c in 0..k {
        q += internal[c] / two_m - (tot[c] / two_m).powi(2);
    }
    Ok(q)
}

// ---------------------------------------------------------------------------
// Louvain

struct LouvainLevel {
    adj: Vec<Vec<(u32, f64)>>,
    self_loops: Vec<f64>,
    two_m: f64,
}

impl LouvainLevel {
    fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn degree(&self, v: usize) -> f64 {
        self.self_loops[v] + self.adj[v].iter().map(|&(_, w)| w).sum::<f64>()
    }
}

/// Greedy two-phase Louvain. Local moving runs until no single-node move
/// improves modularity, then the partition is collapsed into an aggregate
/// graph; the two phases repeat until an outer pass makes no move. Node
/// visit order is shuffled by the seeded generator.
pub fn louvain(g: &UndirectedView, seed: u64, resolution: f64) -> Result<CommunityAssignment> {
    louvain_with_trace(g, seed, resolution).map(|(a, _)| a)
}

/// Louvain variant that also reports the modularity of the partition
/// after every outer pass (the sequence is non-decreasing).
pub fn louvain_with_trace(
    g: &UndirectedView,
    seed: u64,
    resolution: f64,
) -> Result<(CommunityAssignment, Vec<f64>)> {
    if g.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidParams {
            message: format!("resolution must be positive, got {resolution}"),
        });
    }
    if g.total_weight() == 0.0 {
        // no edge ever makes a move profitable
        return Ok((CommunityAssignment::singletons(g.node_count()), Vec::new()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = LouvainLevel {
        adj: (0..g.node_count() as NodeId)
            .map(|v| g.neighbors(v).to_vec())
            .collect(),
        self_loops: vec![0.0; g.node_count()],
        two_m: 2.0 * g.total_weight(),
    };
    // node -> community of the original graph, refined across levels
    let mut membership: Vec<u32> = (0..g.node_count() as u32).collect();
    let mut q_trace = Vec::new();

    loop {
        let (local, moved) = local_moving(&level, resolution, &mut rng);
        for m in membership.iter_mut() {
            *m = local[*m as usize];
        }
        let compacted = CommunityAssignment::from_labels(&membership);
        q_trace.push(modularity(g, &compacted)?);
        if !moved {
            return Ok((compacted, q_trace));
        }
        level = aggregate(&level, &local);
    }
}

/// One local-moving phase; returns the (compacted) community of each
/// level node and whether any node moved.
fn local_moving(level: &LouvainLevel, resolution: f64, rng: &mut ChaCha8Rng) -> (Vec<u32>, bool) {
    let n = level.node_count();
    let mut community: Vec<u32> = (0..n as u32).collect();
    let degree: Vec<f64> = (0..n).map(|v| level.degree(v)).collect();
    let mut tot: Vec<f64> = degree.clone();
    let two_m = level.two_m;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut any_moved = false;
    let mut weight_to: HashMap<u32, f64> = HashMap::new();
    loop {
        let mut moved_this_pass = false;
        for &v in &order {
            let old = community[v];
            weight_to.clear();
            for &(u, w) in &level.adj[v] {
                *weight_to.entry(community[u as usize]).or_insert(0.0) += w;
            }
            tot[old as usize] -= degree[v];
            let base = weight_to.get(&old).copied().unwrap_or(0.0)
                - resolution * tot[old as usize] * degree[v] / two_m;
            // best strictly-improving target; ties broken by smallest label
            let mut best = old;
            let mut best_gain = base;
            let mut candidates: Vec<u32> = weight_to.keys().copied().collect();
            candidates.sort_unstable();
            for c in candidates {
                if c == old {
                    continue;
                }
                let gain = weight_to[&c] - resolution * tot[c as usize] * degree[v] / two_m;
                if gain > best_gain {
                    best_gain = gain;
                    best = c;
                }
            }
            tot[best as usize] += degree[v];
            if best != old {
                community[v] = best;
                moved_this_pass = true;
                any_moved = true;
            }
        }
        if !moved_this_pass {
            break;
        }
    }
    let compact = CommunityAssignment::from_labels(&community);
    (compact.labels().to_vec(), any_moved)
}

/// Collapse communities of one level into the nodes of the next.
fn aggregate(level: &LouvainLevel, community: &[u32]) -> LouvainLevel {
    let k = community.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut self_loops = vec![0.0; k];
    let mut edge_maps: Vec<HashMap<u32, f64>> = vec![HashMap::new(); k];
    for v in 0..level.node_count() {
        let cv = community[v] as usize;
        self_loops[cv] += level.self_loops[v];
        for &(u, w) in &level.adj[v] {
            let cu = community[u as usize] as usize;
            if cu == cv {
                // internal edges are visited from both endpoints, so this
                // accumulates 2 * internal weight, matching the degree
                // convention for self-loops
                self_loops[cv] += w;
            } else {
                *edge_maps[cv].entry(cu as u32).or_insert(0.0) += w;
            }
        }
    }
    let adj: Vec<Vec<(u32, f64)>> = edge_maps
        .into_iter()
        .map(|m| {
            let mut v: Vec<(u32, f64)> = m.into_iter().collect();
            v.sort_unstable_by_key(|&(t, _)| t);
            v
        })
        .collect();
    LouvainLevel {
        adj,
        self_loops,
        two_m: level.two_m,
    }
}

// ---------------------------------------------------------------------------
// Label propagation

/// Asynchronous label propagation. Every node starts with a unique label
/// and adopts the weight-summed most common label among its neighbors,
/// ties broken by the smallest label. Stops when a sweep changes nothing
/// or after `max_sweeps`.
pub fn label_propagation(
    g: &UndirectedView,
    seed: u64,
    max_sweeps: u32,
) -> Result<CommunityAssignment> {
    if g.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if max_sweeps == 0 {
        return Err(Error::InvalidParams {
            message: "max_sweeps must be >= 1".into(),
        });
    }
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u32> = (0..n as u32).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut weight_of: HashMap<u32, f64> = HashMap::new();

    for _ in 0..max_sweeps {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &v in &order {
            let neigh = g.neighbors(v as NodeId);
            if neigh.is_empty() {
                continue;
            }
            weight_of.clear();
            for &(u, w) in neigh {
                *weight_of.entry(labels[u as usize]).or_insert(0.0) += w;
            }
            let mut best_label = labels[v];
            let mut best_weight = f64::NEG_INFINITY;
            let mut cands: Vec<u32> = weight_of.keys().copied().collect();
            cands.sort_unstable();
            for l in cands {
                let w = weight_of[&l];
                if w > best_weight {
                    best_weight = w;
                    best_label = l;
                }
            }
            if best_label != labels[v] {
                labels[v] = best_label;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(CommunityAssignment::from_labels(&labels))
}

// ---------------------------------------------------------------------------
// External assignments

/// Load a `node_id<TAB>community_label` stream covering every graph node.
pub fn load_assignment<R: BufRead>(reader: R, g: &DirectedGraph) -> Result<CommunityAssignment> {
    let mut raw: Vec<Option<u64>> = vec![None; g.node_count()];
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, label) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected node_id<TAB>community_label".into(),
        })?;
        let label: u64 = label.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid community label {label:?}"),
        })?;
        let v = g.resolve(id).ok_or_else(|| Error::UnknownNode { id: id.to_string() })?;
        if raw[v as usize].is_some() {
            return Err(Error::DuplicateAssignment { id: id.to_string() });
        }
        raw[v as usize] = Some(label);
    }
    let mut labels = Vec::with_capacity(g.node_count());
    for v in g.nodes() {
        match raw[v as usize] {
            Some(l) => labels.push(l),
            None => {
                return Err(Error::MissingAssignment {
                    id: g.external_id(v).to_string(),
                })
            }
        }
    }
    Ok(CommunityAssignment::from_labels(&labels))
}

/// Normalized mutual information between two partitions of the same node
/// set, in `[0, 1]`; used to compare detected against planted partitions.
pub fn normalized_mutual_information(a: &CommunityAssignment, b: &CommunityAssignment) -> f64 {
    assert_eq!(a.node_count(), b.node_count());
    let n = a.node_count() as f64;
    if n == 0.0 {
        return 1.0;
    }
    let ka = a.community_count() as usize;
    let kb = b.community_count() as usize;
    let mut joint = vec![vec![0usize; kb]; ka];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for v in 0..a.node_count() {
        let (i, j) = (a.labels()[v] as usize, b.labels()[v] as usize);
        joint[i][j] += 1;
        ca[i] += 1;
        cb[j] += 1;
    }
    let entropy = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&ca);
    let hb = entropy(&cb);
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            if joint[i][j] > 0 {
                let pij = joint[i][j] as f64 / n;
                mi += pij * (pij / (ca[i] as f64 / n * cb[j] as f64 / n)).ln();
            }
        }
    }
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    2.0 * mi / (ha + hb)
}
