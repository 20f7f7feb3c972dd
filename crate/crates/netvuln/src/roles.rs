//! Per-community classification of nodes into neighbor, boundary, and
//! core sets, plus boundary-edge enumeration.

use std::collections::BTreeSet;
use std::io::Write;

use crate::community::CommunityAssignment;
use crate::graph::{DirectedGraph, NodeId};
use crate::{Error, Result};

/// Which edges connect a community member to the outside.
///
/// `FollowOut` treats only out-edges `b -> n` as boundary contacts (b
/// follows n, so information flows from n to b, matching the direction
/// of the believability score). `AnyAdjacency` counts edges in either
/// direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSemantics {
    FollowOut,
    AnyAdjacency,
}

impl std::str::FromStr for EdgeSemantics {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "follow-out" => Ok(EdgeSemantics::FollowOut),
            "any" | "any-adjacency" => Ok(EdgeSemantics::AnyAdjacency),
            other => Err(format!("unknown edge semantics {other:?}")),
        }
    }
}

impl std::fmt::Display for EdgeSemantics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeSemantics::FollowOut => write!(f, "follow-out"),
            EdgeSemantics::AnyAdjacency => write!(f, "any-adjacency"),
        }
    }
}

/// Role decomposition of one community: boundary and core partition the
/// members; the neighbor set is disjoint from them.
#[derive(Debug, Clone)]
pub struct RoleSet {
    pub community: u32,
    /// External nodes adjacent to some member, sorted.
    pub neighbor_set: Vec<NodeId>,
    /// Members with at least one external contact, sorted.
    pub boundary: Vec<NodeId>,
    /// Members with no external contact, sorted.
    pub core: Vec<NodeId>,
    /// Per-boundary-node neighbor sets, parallel to `boundary`; each is
    /// sorted and nonempty.
    pub boundary_neighbors: Vec<Vec<NodeId>>,
    /// All (boundary node, neighbor node) pairs.
    pub boundary_edges: Vec<(NodeId, NodeId)>,
}

impl RoleSet {
    pub fn member_count(&self) -> usize {
        self.boundary.len() + self.core.len()
    }

    /// Neighbor set of a specific boundary node, if it is one.
    pub fn neighbors_of(&self, b: NodeId) -> Option<&[NodeId]> {
        self.boundary
            .binary_search(&b)
            .ok()
            .map(|i| self.boundary_neighbors[i].as_slice())
    }
}

/// Classify every node of every community. Returns one [`RoleSet`] per
/// community, ordered by label.
pub fn classify_roles(
    g: &DirectedGraph,
    a: &CommunityAssignment,
    semantics: EdgeSemantics,
) -> Result<Vec<RoleSet>> {
    if a.node_count() != g.node_count() {
        return Err(Error::InconsistentUniverse {
            message: format!(
                "assignment covers {} nodes, graph has {}",
                a.node_count(),
                g.node_count()
            ),
        });
    }
    let k = a.community_count() as usize;
    let mut roles: Vec<RoleSet> = (0..k as u32)
        .map(|c| RoleSet {
            community: c,
            neighbor_set: Vec::new(),
            boundary: Vec::new(),
            core: Vec::new(),
            boundary_neighbors: Vec::new(),
            boundary_edges: Vec::new(),
        })
        .collect();

    let mut neighbor_sets: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); k];
    for b in g.nodes() {
        let c = a.label(b);
        let mut external: BTreeSet<NodeId> = BTreeSet::new();
        for &(n, _) in g.out(b) {
            if a.label(n) != c {
                external.insert(n);
            }
        }
        if semantics == EdgeSemantics::AnyAdjacency {
            for &(n, _) in g.incoming(b) {
                if a.label(n) != c {
                    external.insert(n);
                }
            }
        }
        let role = &mut roles[c as usize];
        if external.is_empty() {
            role.core.push(b);
        } else {
            neighbor_sets[c as usize].extend(external.iter().copied());
            for &n in &external {
                role.boundary_edges.push((b, n));
            }
            role.boundary.push(b);
            role.boundary_neighbors.push(external.into_iter().collect());
        }
    }
    for (role, ns) in roles.iter_mut().zip(neighbor_sets) {
        role.neighbor_set = ns.into_iter().collect();
    }
    Ok(roles)
}

/// Dump `community,node,role` rows with role in {boundary, core}.
pub fn write_roles_csv<W: Write>(roles: &[RoleSet], g: &DirectedGraph, mut out: W) -> Result<()> {
    writeln!(out, "community,node,role")?;
    for role in roles {
        for &b in &role.boundary {
            writeln!(out, "{},{},boundary", role.community, g.external_id(b))?;
        }
        for &c in &role.core {
            writeln!(out, "{},{},core", role.community, g.external_id(c))?;
        }
    }
    Ok(())
}

/// Dump `community,boundary_node,neighbor_node` rows.
pub fn write_neighbors_csv<W: Write>(
    roles: &[RoleSet],
    g: &DirectedGraph,
    mut out: W,
) -> Result<()> {
    writeln!(out, "community,boundary_node,neighbor_node")?;
    for role in roles {
        for &(b, n) in &role.boundary_edges {
            writeln!(
                out,
                "{},{},{}",
                role.community,
                g.external_id(b),
                g.external_id(n)
            )?;
        }
    }
    Ok(())
}
