//! Seeded synthetic networks (stochastic block model) and spreader
//! plantings for reproducible desk-scale experiments.
//!
//! All randomness flows through ChaCha8 seeded from the caller, so a
//! given parameter set always produces the same graph and spreader set.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::community::CommunityAssignment;
use crate::evaluation::SpreaderSet;
use crate::graph::{DirectedGraph, GraphBuilder, NodeId};
use crate::trust::TrustScores;
use crate::vulnerability::node_vulnerability;
use crate::{Error, Result};

/// Planted-partition stochastic block model parameters.
#[derive(Debug, Clone)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
    /// Directed: every ordered pair sampled independently. Undirected:
    /// each unordered pair sampled once and realized as two opposing
    /// edges.
    pub directed: bool,
}

impl SbmParams {
    fn validate(&self) -> Result<()> {
        let n: usize = self.block_sizes.iter().sum();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if self.block_sizes.iter().any(|&b| b == 0) {
            return Err(Error::InvalidParams {
                message: "block sizes must be positive".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return Err(Error::InvalidParams {
                message: "edge probabilities must lie in [0, 1]".into(),
            });
        }
        if self.p_out >= self.p_in {
            return Err(Error::InvalidParams {
                message: format!(
                    "planted partition needs p_out < p_in, got {} >= {}",
                    self.p_out, self.p_in
                ),
            });
        }
        Ok(())
    }
}

/// Emit the sampled indices of a Bernoulli(p) scan over `[lo, hi)`,
/// skipping `exclude`. Geometric jumps keep this linear in the number of
/// successes.
fn sample_segment<F: FnMut(usize)>(
    rng: &mut ChaCha8Rng,
    lo: usize,
    hi: usize,
    p: f64,
    exclude: usize,
    mut emit: F,
) {
    if p <= 0.0 || lo >= hi {
        return;
    }
    if p >= 1.0 {
        for v in lo..hi {
            if v != exclude {
                emit(v);
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut pos = lo;
    loop {
        let u: f64 = rng.gen();
        let skip = if u > 0.0 { (u.ln() / log_q).floor() as usize } else { hi };
        pos = pos.saturating_add(skip);
        if pos >= hi {
            return;
        }
        if pos != exclude {
            emit(pos);
        }
        pos += 1;
    }
}

/// Generate a seeded stochastic block model together with its planted
/// assignment.
pub fn generate_sbm(p: &SbmParams) -> Result<(DirectedGraph, CommunityAssignment)> {
    p.validate()?;
    let n: usize = p.block_sizes.iter().sum();
    let mut block_of = vec![0u32; n];
    let mut block_start = vec![0usize; p.block_sizes.len()];
    let mut offset = 0;
    for (b, &size) in p.block_sizes.iter().enumerate() {
        block_start[b] = offset;
        for v in offset..offset + size {
            block_of[v] = b as u32;
        }
        offset += size;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut builder = GraphBuilder::new();
    let ids: Vec<String> = (0..n).map(|v| v.to_string()).collect();
    // intern every node so isolated nodes survive
    for id in &ids {
        builder.add_edge(id, id, 1.0)?;
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for u in 0..n {
        let b = block_of[u] as usize;
        let (bs, be) = (block_start[b], block_start[b] + p.block_sizes[b]);
        let row_lo = if p.directed { 0 } else { u + 1 };
        // three contiguous segments per row: before the block (p_out),
        // the block itself (p_in), after the block (p_out)
        let segments = [
            (0usize, bs, p.p_out),
            (bs, be, p.p_in),
            (be, n, p.p_out),
        ];
        for &(lo, hi, prob) in &segments {
            let lo = lo.max(row_lo);
            if lo >= hi {
                continue;
            }
            sample_segment(&mut rng, lo, hi, prob, u, |v| edges.push((u, v)));
        }
    }
    for (u, v) in edges {
        builder.add_edge(&ids[u], &ids[v], 1.0)?;
        if !p.directed {
            builder.add_edge(&ids[v], &ids[u], 1.0)?;
        }
    }
    let graph = builder.build();
    let assignment = CommunityAssignment::from_labels(&block_of);
    Ok((graph, assignment))
}

/// How ground-truth spreaders are planted into a synthetic network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantingStrategy {
    /// Every node flagged independently with probability `rate`.
    UniformRandom { rate: f64 },
    /// Node `v` flagged with probability `rate * n * V(v) / sum V`,
    /// clamped to 1, where `V(v)` is its vulnerability over its full
    /// out-neighborhood. Same expected count as uniform planting.
    TrustWeighted { rate: f64 },
    /// Only boundary nodes eligible, flagged uniformly with `rate`.
    BoundaryBiased { rate: f64 },
}

impl PlantingStrategy {
    fn rate(&self) -> f64 {
        match *self {
            PlantingStrategy::UniformRandom { rate }
            | PlantingStrategy::TrustWeighted { rate }
            | PlantingStrategy::BoundaryBiased { rate } => rate,
        }
    }

    fn validate(&self) -> Result<()> {
        let rate = self.rate();
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidParams {
                message: format!("planting rate must lie in (0, 1], got {rate}"),
            });
        }
        Ok(())
    }
}

/// Full-out-neighborhood vulnerability of every node; the generalized
/// per-node score used by trust-weighted planting.
pub fn full_node_vulnerabilities(g: &DirectedGraph, ts: &TrustScores) -> Vec<f64> {
    g.nodes()
        .map(|v| {
            let neighbors: Vec<NodeId> = g.out(v).iter().map(|&(t, _)| t).collect();
            node_vulnerability(ts, v, &neighbors)
        })
        .collect()
}

/// Draw a seeded, deterministic spreader set. `boundary` supplies the
/// eligible nodes for the boundary-biased strategy.
pub fn plant_spreaders(
    g: &DirectedGraph,
    ts: &TrustScores,
    strategy: PlantingStrategy,
    seed: u64,
    boundary: Option<&[NodeId]>,
) -> Result<SpreaderSet> {
    strategy.validate()?;
    if ts.len() != g.node_count() {
        return Err(Error::InconsistentUniverse {
            message: format!(
                "graph has {} nodes, trust scores {}",
                g.node_count(),
                ts.len()
            ),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = BTreeSet::new();
    match strategy {
        PlantingStrategy::UniformRandom { rate } => {
            for v in g.nodes() {
                if rng.gen::<f64>() < rate {
                    set.insert(v);
                }
            }
        }
        PlantingStrategy::TrustWeighted { rate } => {
            let scores = full_node_vulnerabilities(g, ts);
            let total: f64 = scores.iter().sum();
            let n = g.node_count() as f64;
            for v in g.nodes() {
                let p = if total > 0.0 {
                    (rate * n * scores[v as usize] / total).min(1.0)
                } else {
                    rate
                };
                if rng.gen::<f64>() < p {
                    set.insert(v);
                }
            }
        }
        PlantingStrategy::BoundaryBiased { rate } => {
            let boundary = boundary.ok_or_else(|| Error::InvalidParams {
                message: "boundary-biased planting needs the boundary node set".into(),
            })?;
            for &b in boundary {
                if rng.gen::<f64>() < rate {
                    set.insert(b);
                }
            }
        }
    }
    Ok(SpreaderSet::new(set))
}
