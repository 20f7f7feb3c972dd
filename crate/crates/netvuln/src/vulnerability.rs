//! Believability-based vulnerability of boundary nodes and communities,
//! with deterministic ranked reports.
//!
//! A boundary node's vulnerability is the probability that it believes at
//! least one of its neighbors, treating per-edge believabilities as
//! independent: `V(b) = 1 - prod(1 - tw(n) * ti(b))`. A community's
//! vulnerability lifts the same complement product over its boundary set.
//! Products run over ascending node ids so results are bit-exact.

use std::collections::BTreeSet;
use std::io::Write;

use serde_json::json;

use crate::community::CommunityAssignment;
use crate::graph::{DirectedGraph, NodeId};
use crate::roles::{EdgeSemantics, RoleSet};
use crate::trust::TrustScores;
use crate::util::fmt_f64;
use crate::{Error, Result};

/// Vulnerability of one node with respect to its community.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeVulnerability {
    pub node: NodeId,
    pub community: u32,
    pub score: f64,
}

/// Vulnerability of one community.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityVulnerability {
    pub community: u32,
    pub score: f64,
    pub boundary_count: usize,
    /// Filled by evaluation when a ground-truth spreader set is known.
    pub spreader_boundary_count: Option<usize>,
}

/// Parameters echoed into the report for reproducibility.
#[derive(Debug, Clone)]
pub struct AssessParams {
    pub involvement: f64,
    pub edge_semantics: EdgeSemantics,
    pub detector: String,
    /// When set, each boundary node's neighbor set is intersected with
    /// this set of known spreaders before the product.
    pub infected_only: Option<BTreeSet<NodeId>>,
}

impl Default for AssessParams {
    fn default() -> Self {
        Self {
            involvement: 1.0,
            edge_semantics: EdgeSemantics::FollowOut,
            detector: "louvain".to_string(),
            infected_only: None,
        }
    }
}

/// Full assessment output. Rankings are strictly ordered by
/// (score descending, node/community id ascending).
#[derive(Debug, Clone)]
pub struct VulnerabilityReport {
    /// Ranked boundary-node scores, indexed by community label.
    pub node_scores: Vec<Vec<NodeVulnerability>>,
    /// All communities, ranked.
    pub community_scores: Vec<CommunityVulnerability>,
    pub params: AssessParams,
}

/// `1 - prod(1 - tw(n) * ti(b))` over the given neighbors of `b`, taken
/// in ascending node-id order. Empty set yields 0.
pub fn node_vulnerability(ts: &TrustScores, b: NodeId, neighbors: &[NodeId]) -> f64 {
    debug_assert!(neighbors.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(!neighbors.contains(&b));
    let ti_b = ts.ti(b);
    let mut product = 1.0f64;
    let mut underflow = false;
    for &n in neighbors {
        let factor = 1.0 - ts.tw(n) * ti_b;
        product *= factor;
        if factor < 1e-12 || product < 1e-300 {
            underflow = true;
            break;
        }
    }
    if !underflow {
        return 1.0 - product;
    }
    // log-space accumulation; exp of the log1p sum cannot underflow to a
    // wrong sign
    let log_sum: f64 = neighbors
        .iter()
        .map(|&n| (-(ts.tw(n) * ti_b)).ln_1p())
        .sum();
    1.0 - log_sum.exp()
}

/// `1 - prod(1 - V(b))` over boundary-node scores, in the given order.
/// Empty boundary yields 0.
pub fn community_vulnerability(node_scores: &[f64]) -> Result<f64> {
    let mut product = 1.0f64;
    let mut underflow = false;
    for &v in node_scores {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ScoreOutOfRange { value: v });
        }
        let factor = 1.0 - v;
        product *= factor;
        if factor < 1e-12 || product < 1e-300 {
            underflow = true;
        }
    }
    if !underflow {
        return Ok(1.0 - product);
    }
    let log_sum: f64 = node_scores.iter().map(|&v| (-v).ln_1p()).sum();
    Ok(1.0 - log_sum.exp())
}

/// Assess every community: per boundary node the believability product
/// over its neighbor set, then the community-level complement product.
pub fn assess(
    g: &DirectedGraph,
    ts: &TrustScores,
    a: &CommunityAssignment,
    roles: &[RoleSet],
    params: &AssessParams,
) -> Result<VulnerabilityReport> {
    if ts.len() != g.node_count() || a.node_count() != g.node_count() {
        return Err(Error::InconsistentUniverse {
            message: format!(
                "graph has {} nodes, trust scores {}, assignment {}",
                g.node_count(),
                ts.len(),
                a.node_count()
            ),
        });
    }
    if roles.len() != a.community_count() as usize {
        return Err(Error::InconsistentUniverse {
            message: format!(
                "{} role sets for {} communities",
                roles.len(),
                a.community_count()
            ),
        });
    }

    let mut node_scores = Vec::with_capacity(roles.len());
    let mut community_scores = Vec::with_capacity(roles.len());
    let mut restricted = Vec::new();
    for role in roles {
        let mut scores = Vec::with_capacity(role.boundary.len());
        let mut flat = Vec::with_capacity(role.boundary.len());
        for (i, &b) in role.boundary.iter().enumerate() {
            let neighbors = match &params.infected_only {
                None => role.boundary_neighbors[i].as_slice(),
                Some(infected) => {
                    restricted.clear();
                    restricted.extend(
                        role.boundary_neighbors[i]
                            .iter()
                            .copied()
                            .filter(|n| infected.contains(n)),
                    );
                    restricted.as_slice()
                }
            };
            let v = node_vulnerability(ts, b, neighbors);
            flat.push(v);
            scores.push(NodeVulnerability {
                node: b,
                community: role.community,
                score: v,
            });
        }
        let v_tilde = community_vulnerability(&flat)?;
        scores.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap()
                .then(a.node.cmp(&b.node))
        });
        node_scores.push(scores);
        community_scores.push(CommunityVulnerability {
            community: role.community,
            score: v_tilde,
            boundary_count: role.boundary.len(),
            spreader_boundary_count: None,
        });
    }
    community_scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.community.cmp(&b.community))
    });
    Ok(VulnerabilityReport {
        node_scores,
        community_scores,
        params: params.clone(),
    })
}

impl VulnerabilityReport {
    /// Nested per-community JSON document.
    pub fn write_json<W: Write>(&self, g: &DirectedGraph, mut out: W) -> Result<()> {
        let communities: Vec<_> = self
            .community_scores
            .iter()
            .map(|c| {
                let nodes: Vec<_> = self.node_scores[c.community as usize]
                    .iter()
                    .map(|nv| {
                        json!({
                            "node": g.external_id(nv.node),
                            "v": nv.score,
                        })
                    })
                    .collect();
                json!({
                    "community": c.community,
                    "v_tilde": c.score,
                    "boundary_count": c.boundary_count,
                    "spreader_boundary_count": c.spreader_boundary_count,
                    "boundary_nodes": nodes,
                })
            })
            .collect();
        let doc = json!({
            "params": {
                "involvement": self.params.involvement,
                "edge_semantics": self.params.edge_semantics.to_string(),
                "detector": self.params.detector,
                "infected_only": self.params.infected_only.is_some(),
            },
            "communities": communities,
        });
        serde_json::to_writer_pretty(&mut out, &doc).map_err(std::io::Error::other)?;
        writeln!(out)?;
        Ok(())
    }

    /// Flat `community,node,V` rows, communities and nodes in rank order.
    pub fn write_nodes_csv<W: Write>(&self, g: &DirectedGraph, mut out: W) -> Result<()> {
        writeln!(out, "community,node,V")?;
        for c in &self.community_scores {
            for nv in &self.node_scores[c.community as usize] {
                writeln!(
                    out,
                    "{},{},{}",
                    nv.community,
                    g.external_id(nv.node),
                    fmt_f64(nv.score)
                )?;
            }
        }
        Ok(())
    }

    /// Flat `community,V_tilde` rows in rank order.
    pub fn write_communities_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "community,V_tilde")?;
        for c in &self.community_scores {
            writeln!(out, "{},{}", c.community, fmt_f64(c.score))?;
        }
        Ok(())
    }
}
