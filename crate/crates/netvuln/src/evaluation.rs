//! Ranking evaluation: ground-truth spreader sets, Precision@k, AP@k,
//! MAP over communities, and tie-aware Kendall's tau between the
//! metric-based and ground-truth community rankings.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde_json::json;

use crate::graph::{DirectedGraph, NodeId};
use crate::roles::RoleSet;
use crate::util::fmt_f64;
use crate::vulnerability::VulnerabilityReport;
use crate::{Error, Result};

/// Ground-truth set of spreader nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpreaderSet {
    set: BTreeSet<NodeId>,
}

impl SpreaderSet {
    pub fn new(set: BTreeSet<NodeId>) -> Self {
        Self { set }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.set.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.set.iter().copied()
    }

    pub fn as_set(&self) -> &BTreeSet<NodeId> {
        &self.set
    }

    /// Parse one external node id per line; `#` comments allowed. Every
    /// id must resolve against the graph.
    pub fn from_reader<R: BufRead>(reader: R, g: &DirectedGraph) -> Result<Self> {
        let mut set = BTreeSet::new();
        for line in reader.lines() {
            let line = line?;
            let id = line.trim();
            if id.is_empty() || id.starts_with('#') {
                continue;
            }
            let v = g.resolve(id).ok_or_else(|| Error::UnknownNode { id: id.to_string() })?;
            set.insert(v);
        }
        Ok(Self { set })
    }

    pub fn write<W: Write>(&self, g: &DirectedGraph, mut out: W) -> Result<()> {
        for v in self.iter() {
            writeln!(out, "{}", g.external_id(v))?;
        }
        Ok(())
    }
}

/// Strictly ordered (score desc, id asc) list of scored items without
/// duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    entries: Vec<(u32, f64)>,
}

impl RankedList {
    pub fn from_scores(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        debug_assert!(entries.windows(2).all(|w| w[0].0 != w[1].0 || w[0].1 != w[1].1));
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }
}

/// Fraction of ground-truth items among the first `min(k, len)` entries.
pub fn precision_at_k(ranked: &RankedList, truth: &BTreeSet<u32>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if ranked.is_empty() {
        return Err(Error::InvalidParams {
            message: "ranked list is empty".into(),
        });
    }
    let cutoff = k.min(ranked.len());
    let hits = ranked
        .items()
        .take(cutoff)
        .filter(|i| truth.contains(i))
        .count();
    Ok(hits as f64 / cutoff as f64)
}

fn relevant_count(ranked: &RankedList, truth: &BTreeSet<u32>) -> usize {
    ranked.items().filter(|i| truth.contains(i)).count()
}

/// Mean of Precision@k over communities that contain at least one
/// ground-truth item; communities without any are excluded.
pub fn ap_at_k(per_community: &[(RankedList, BTreeSet<u32>)], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (ranked, truth) in per_community {
        if ranked.is_empty() || relevant_count(ranked, truth) == 0 {
            continue;
        }
        sum += precision_at_k(ranked, truth, k)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::NoGroundTruth);
    }
    Ok(sum / count as f64)
}

/// Standard truncated average precision of one list:
/// `sum_{i <= k_max} P@i * rel(i) / min(k_max, R)` where `R` is the
/// number of relevant items in the list. `None` when `R = 0`.
pub fn average_precision(ranked: &RankedList, truth: &BTreeSet<u32>, k_max: usize) -> Option<f64> {
    let relevant = relevant_count(ranked, truth);
    if relevant == 0 || ranked.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, item) in ranked.items().take(k_max).enumerate() {
        if truth.contains(&item) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / k_max.min(relevant) as f64)
}

/// Mean of per-community truncated average precision over eligible
/// communities.
pub fn mean_average_precision(
    per_community: &[(RankedList, BTreeSet<u32>)],
    k_max: usize,
) -> Result<f64> {
    if k_max == 0 {
        return Err(Error::InvalidK);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (ranked, truth) in per_community {
        if let Some(ap) = average_precision(ranked, truth, k_max) {
            sum += ap;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoGroundTruth);
    }
    Ok(sum / count as f64)
}

/// Literal reading of the MAP formula as a mean of AP@k over
/// `k = 1..=k_max`.
pub fn mean_average_precision_literal(
    per_community: &[(RankedList, BTreeSet<u32>)],
    k_max: usize,
) -> Result<f64> {
    if k_max == 0 {
        return Err(Error::InvalidK);
    }
    let mut sum = 0.0;
    for k in 1..=k_max {
        sum += ap_at_k(per_community, k)?;
    }
    Ok(sum / k_max as f64)
}

/// Which MAP definition to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MapVariant {
    /// Per-community truncated AP averaged over communities.
    #[default]
    Standard,
    /// Mean of AP@k over k = 1..=k_max.
    Literal,
}

impl std::str::FromStr for MapVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "standard" => Ok(MapVariant::Standard),
            "literal" => Ok(MapVariant::Literal),
            other => Err(format!("unknown map variant {other:?}")),
        }
    }
}

/// Pair counts behind a Kendall's tau value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TauCounts {
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied only in the ground-truth list.
    pub ties_rel: u64,
    /// Pairs tied only in the metric list.
    pub ties_ret: u64,
}

/// Kendall's tau, or a distinct undefined state when the denominator is
/// zero (for example one list entirely tied). Never coerced to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauOutcome {
    Defined { tau: f64, counts: TauCounts },
    Undefined { counts: TauCounts },
}

impl TauOutcome {
    pub fn counts(&self) -> TauCounts {
        match *self {
            TauOutcome::Defined { counts, .. } | TauOutcome::Undefined { counts } => counts,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            TauOutcome::Defined { tau, .. } => Some(tau),
            TauOutcome::Undefined { .. } => None,
        }
    }
}

/// Tie-aware Kendall's tau by exact pair enumeration:
/// `tau = (P - Q) / sqrt((P + Q + T) * (P + Q + U))`, where pairs tied in
/// both lists count toward neither `T` nor `U`.
pub fn kendall_tau(rel: &[f64], ret: &[f64]) -> Result<TauOutcome> {
    if rel.len() != ret.len() {
        return Err(Error::InconsistentUniverse {
            message: format!("rel has {} entries, ret has {}", rel.len(), ret.len()),
        });
    }
    if rel.len() < 2 {
        return Err(Error::InvalidParams {
            message: "need at least 2 aligned ranks".into(),
        });
    }
    let mut counts = TauCounts::default();
    let n = rel.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = rel[i].partial_cmp(&rel[j]).ok_or(Error::InvalidParams {
                message: "NaN rank".into(),
            })?;
            let b = ret[i].partial_cmp(&ret[j]).ok_or(Error::InvalidParams {
                message: "NaN rank".into(),
            })?;
            use std::cmp::Ordering::Equal;
            match (a, b) {
                (Equal, Equal) => {}
                (Equal, _) => counts.ties_rel += 1,
                (_, Equal) => counts.ties_ret += 1,
                (a, b) if a == b => counts.concordant += 1,
                _ => counts.discordant += 1,
            }
        }
    }
    let p = counts.concordant as f64;
    let q = counts.discordant as f64;
    let denom =
        ((p + q + counts.ties_rel as f64) * (p + q + counts.ties_ret as f64)).sqrt();
    if denom == 0.0 {
        return Ok(TauOutcome::Undefined { counts });
    }
    Ok(TauOutcome::Defined {
        tau: (p - q) / denom,
        counts,
    })
}

/// Ground-truth community ranking by the fraction of boundary nodes that
/// are spreaders (0 for an empty boundary).
pub fn ground_truth_community_ranking(roles: &[RoleSet], truth: &SpreaderSet) -> RankedList {
    let entries = roles
        .iter()
        .map(|r| {
            let score = if r.boundary.is_empty() {
                0.0
            } else {
                let spreaders = r.boundary.iter().filter(|&&b| truth.contains(b)).count();
                spreaders as f64 / r.boundary.len() as f64
            };
            (r.community, score)
        })
        .collect();
    RankedList::from_scores(entries)
}

/// Per-community precision row of the evaluation report.
#[derive(Debug, Clone)]
pub struct CommunityPrecision {
    pub community: u32,
    pub boundary_count: usize,
    pub spreader_boundary_count: usize,
    /// (k, P@k) for each requested k; empty when the community was
    /// skipped.
    pub precision_at: Vec<(usize, f64)>,
    pub average_precision: Option<f64>,
}

/// Full evaluation output for one network.
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// (k, AP@k) for every requested k.
    pub ap: Vec<(usize, f64)>,
    pub map: f64,
    pub map_variant: MapVariant,
    pub map_k: usize,
    pub tau: TauOutcome,
    pub per_community: Vec<CommunityPrecision>,
    pub eligible_communities: usize,
    pub skipped_communities: usize,
}

/// Run the full evaluation protocol: node-level AP@k and MAP ranking
/// boundary nodes by V(b) within each community, and community-level
/// Kendall's tau between the vulnerability ranking and the ground-truth
/// spreader-fraction ranking.
pub fn evaluate(
    report: &VulnerabilityReport,
    roles: &[RoleSet],
    truth: &SpreaderSet,
    ks: &[usize],
    map_k: usize,
    variant: MapVariant,
) -> Result<EvalReport> {
    if report.node_scores.len() != roles.len() {
        return Err(Error::InconsistentUniverse {
            message: format!(
                "report covers {} communities, roles {}",
                report.node_scores.len(),
                roles.len()
            ),
        });
    }
    if ks.is_empty() || ks.contains(&0) || map_k == 0 {
        return Err(Error::InvalidK);
    }

    // per-community ranked boundary lists aligned with their truth sets
    let per_community: Vec<(RankedList, BTreeSet<u32>)> = report
        .node_scores
        .iter()
        .map(|nodes| {
            let ranked = RankedList::from_scores(
                nodes.iter().map(|nv| (nv.node, nv.score)).collect(),
            );
            let truth_items: BTreeSet<u32> =
                nodes.iter().map(|nv| nv.node).filter(|&v| truth.contains(v)).collect();
            (ranked, truth_items)
        })
        .collect();

    let mut ap = Vec::with_capacity(ks.len());
    for &k in ks {
        ap.push((k, ap_at_k(&per_community, k)?));
    }
    let map = match variant {
        MapVariant::Standard => mean_average_precision(&per_community, map_k)?,
        MapVariant::Literal => mean_average_precision_literal(&per_community, map_k)?,
    };

    let mut per_rows = Vec::with_capacity(roles.len());
    let mut eligible = 0usize;
    let mut skipped = 0usize;
    for (role, (ranked, truth_items)) in roles.iter().zip(&per_community) {
        let is_eligible = !ranked.is_empty() && !truth_items.is_empty();
        if is_eligible {
            eligible += 1;
        } else {
            skipped += 1;
        }
        let precision_at = if is_eligible {
            ks.iter()
                .map(|&k| Ok((k, precision_at_k(ranked, truth_items, k)?)))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        per_rows.push(CommunityPrecision {
            community: role.community,
            boundary_count: role.boundary.len(),
            spreader_boundary_count: truth_items.len(),
            precision_at,
            average_precision: average_precision(ranked, truth_items, map_k),
        });
    }

    // community-level tau on score vectors aligned by community label
    let mut rel = vec![0.0; roles.len()];
    for &(c, s) in ground_truth_community_ranking(roles, truth).entries() {
        rel[c as usize] = s;
    }
    let mut ret = vec![0.0; roles.len()];
    for c in &report.community_scores {
        ret[c.community as usize] = c.score;
    }
    let tau = kendall_tau(&rel, &ret)?;

    Ok(EvalReport {
        ap,
        map,
        map_variant: variant,
        map_k,
        tau,
        per_community: per_rows,
        eligible_communities: eligible,
        skipped_communities: skipped,
    })
}

impl EvalReport {
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        let counts = self.tau.counts();
        let tau_value = match self.tau.value() {
            Some(t) => json!(t),
            None => json!("undefined"),
        };
        let per_community: Vec<_> = self
            .per_community
            .iter()
            .map(|row| {
                json!({
                    "community": row.community,
                    "boundary_count": row.boundary_count,
                    "spreader_boundary_count": row.spreader_boundary_count,
                    "precision_at": row.precision_at
                        .iter()
                        .map(|&(k, p)| json!({"k": k, "precision": p}))
                        .collect::<Vec<_>>(),
                    "average_precision": row.average_precision,
                })
            })
            .collect();
        let doc = json!({
            "ap": self.ap.iter().map(|&(k, v)| (k.to_string(), v)).collect::<std::collections::BTreeMap<_, _>>(),
            "map": self.map,
            "map_k": self.map_k,
            "map_variant": match self.map_variant {
                MapVariant::Standard => "standard",
                MapVariant::Literal => "literal",
            },
            "tau": {
                "value": tau_value,
                "P": counts.concordant,
                "Q": counts.discordant,
                "T": counts.ties_rel,
                "U": counts.ties_ret,
            },
            "eligible_communities": self.eligible_communities,
            "skipped_communities": self.skipped_communities,
            "per_community": per_community,
        });
        serde_json::to_writer_pretty(&mut out, &doc).map_err(std::io::Error::other)?;
        writeln!(out)?;
        Ok(())
    }

    /// One summary row: `network,ap@k...,map,tau`.
    pub fn write_csv_summary<W: Write>(&self, network: &str, mut out: W) -> Result<()> {
        let mut header = String::from("network");
        let mut row = String::from(network);
        for &(k, v) in &self.ap {
            header.push_str(&format!(",ap@{k}"));
            row.push_str(&format!(",{}", fmt_f64(v)));
        }
        header.push_str(",map,tau");
        row.push_str(&format!(",{}", fmt_f64(self.map)));
        match self.tau.value() {
            Some(t) => row.push_str(&format!(",{}", fmt_f64(t))),
            None => row.push_str(",undefined"),
        }
        writeln!(out, "{header}")?;
        writeln!(out, "{row}")?;
        Ok(())
    }
}
