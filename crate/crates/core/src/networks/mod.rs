//! Dynamic network models of the ecosystem.
//!
//! The mashup-API network is a dynamic bipartite graph whose edges carry the
//! interval during which the invocation was live. Snapshots at a time `t`
//! (half-open interval convention) project down to an API-API co-occurrence
//! snapshot — one edge per unordered API pair per witnessing mashup — and
//! aggregate further into a category-category snapshot whose edge weights
//! count co-invocations.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::correction::CorrectedDataset;
use crate::dataset::EntityKind;
use crate::date::{active_at, cadence_boundaries, Cadence, Day};

/// A node's active interval and category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLife {
    pub id: String,
    pub start: Day,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Day>,
    pub category: String,
}

/// One mashup-API invocation with its live interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaEdge {
    pub mashup_id: String,
    pub api_id: String,
    pub start: Day,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Day>,
}

#[derive(Debug, Clone, Default)]
pub struct MaNetwork {
    pub api_nodes: BTreeMap<String, NodeLife>,
    pub mashup_nodes: BTreeMap<String, NodeLife>,
    pub edges: Vec<MaEdge>,
    /// Composition entries skipped because the API had no lifecycle.
    pub skipped: Vec<(String, String)>,
}

fn intersect(
    a: (Day, Option<Day>),
    b: (Day, Option<Day>),
) -> Option<(Day, Option<Day>)> {
    let start = a.0.max(b.0);
    let end = match (a.1, b.1) {
        (None, None) => None,
        (Some(x), None) => Some(x),
        (None, Some(y)) => Some(y),
        (Some(x), Some(y)) => Some(x.min(y)),
    };
    match end {
        Some(e) if e <= start => None,
        _ => Some((start, end)),
    }
}

/// Build the mashup-API network from corrected lifecycles and composition
/// timelines: one edge per (mashup, API, timeline segment), clipped to both
/// endpoints' active intervals.
pub fn build_ma(corrected: &CorrectedDataset) -> MaNetwork {
    let mut net = MaNetwork::default();
    for entity in corrected.entities.values() {
        let node = NodeLife {
            id: entity.id.clone(),
            start: entity.start,
            end: entity.end,
            category: entity.category.clone(),
        };
        match entity.kind {
            EntityKind::Api => {
                net.api_nodes.insert(entity.id.clone(), node);
            }
            EntityKind::Mashup => {
                if corrected.timelines.contains_key(&entity.id) {
                    net.mashup_nodes.insert(entity.id.clone(), node);
                }
            }
        }
    }
    for timeline in corrected.timelines.values() {
        let Some(mashup) = net.mashup_nodes.get(&timeline.mashup_id) else {
            continue;
        };
        let mashup_interval = (mashup.start, mashup.end);
        for segment in &timeline.segments {
            for api_id in &segment.api_ids {
                let Some(api) = net.api_nodes.get(api_id) else {
                    net.skipped
                        .push((timeline.mashup_id.clone(), api_id.clone()));
                    continue;
                };
                let seg_interval = (segment.from, segment.to);
                let Some(clipped) = intersect(seg_interval, mashup_interval)
                    .and_then(|i| intersect(i, (api.start, api.end)))
                else {
                    continue;
                };
                net.edges.push(MaEdge {
                    mashup_id: timeline.mashup_id.clone(),
                    api_id: api_id.clone(),
                    start: clipped.0,
                    end: clipped.1,
                });
            }
        }
    }
    net
}

/// The sub-bipartite-graph active at `t`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaSnapshot {
    pub t: Day,
    pub apis: BTreeSet<String>,
    pub mashups: BTreeSet<String>,
    /// Active (mashup, api) pairs.
    pub edges: Vec<(String, String)>,
}

impl MaSnapshot {
    pub fn is_empty(&self) -> bool {
        self.apis.is_empty() && self.mashups.is_empty()
    }

    /// No edge may connect two nodes of the same stratum; with typed edge
    /// endpoints this reduces to every endpoint existing on its own side.
    pub fn is_bipartite(&self) -> bool {
        self.edges
            .iter()
            .all(|(m, a)| self.mashups.contains(m) && self.apis.contains(a))
    }
}

pub fn snapshot_active(net: &MaNetwork, t: Day) -> MaSnapshot {
    let apis: BTreeSet<String> = net
        .api_nodes
        .values()
        .filter(|n| active_at(n.start, n.end, t))
        .map(|n| n.id.clone())
        .collect();
    let mashups: BTreeSet<String> = net
        .mashup_nodes
        .values()
        .filter(|n| active_at(n.start, n.end, t))
        .map(|n| n.id.clone())
        .collect();
    let mut edges: Vec<(String, String)> = net
        .edges
        .iter()
        .filter(|e| active_at(e.start, e.end, t))
        .filter(|e| mashups.contains(&e.mashup_id) && apis.contains(&e.api_id))
        .map(|e| (e.mashup_id.clone(), e.api_id.clone()))
        .collect();
    edges.sort();
    edges.dedup();
    MaSnapshot {
        t,
        apis,
        mashups,
        edges,
    }
}

/// One API co-occurrence edge: APIs `u < v` invoked together by witness `w`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AaEdge {
    pub api_u: String,
    pub api_v: String,
    pub witness: String,
}

/// API-API co-occurrence snapshot: node set plus witness-multiset of edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AaSnapshot {
    pub t: Day,
    /// Every API active at `t`, co-occurring or not.
    pub nodes: BTreeSet<String>,
    pub edges: Vec<AaEdge>,
}

/// Project a bipartite snapshot onto APIs: for each active mashup with
/// active API set S, emit one edge per unordered pair of S, witnessed by
/// that mashup. Edge count is sum over mashups of C(|S|, 2).
pub fn project_aa(snap: &MaSnapshot) -> AaSnapshot {
    let mut by_mashup: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (mashup, api) in &snap.edges {
        by_mashup
            .entry(mashup.as_str())
            .or_default()
            .insert(api.as_str());
    }
    let mut edges = Vec::new();
    for (mashup, apis) in &by_mashup {
        let apis: Vec<&str> = apis.iter().copied().collect();
        for i in 0..apis.len() {
            for j in (i + 1)..apis.len() {
                edges.push(AaEdge {
                    api_u: apis[i].to_string(),
                    api_v: apis[j].to_string(),
                    witness: mashup.to_string(),
                });
            }
        }
    }
    edges.sort();
    AaSnapshot {
        t: snap.t,
        nodes: snap.apis.clone(),
        edges,
    }
}

/// Category co-invocation snapshot: canonical (category, category) pairs
/// mapped to co-invocation counts. Self-loops are legal (two same-category
/// APIs in one mashup).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CcSnapshot {
    pub t: Day,
    pub weights: BTreeMap<(String, String), u64>,
}

impl CcSnapshot {
    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    /// Distinct categories appearing on any edge.
    pub fn node_count(&self) -> usize {
        let mut cats = BTreeSet::new();
        for (u, v) in self.weights.keys() {
            cats.insert(u);
            cats.insert(v);
        }
        cats.len()
    }
}

pub const UNKNOWN_CATEGORY: &str = "unknown";

/// Aggregate an API-API snapshot into categories. APIs missing from
/// `category_of` count under "unknown" and are reported back.
pub fn aggregate_cc(
    aa: &AaSnapshot,
    category_of: &BTreeMap<String, String>,
) -> (CcSnapshot, Vec<String>) {
    let mut weights: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut missing = BTreeSet::new();
    for edge in &aa.edges {
        let cu = category_of.get(&edge.api_u).cloned().unwrap_or_else(|| {
            missing.insert(edge.api_u.clone());
            UNKNOWN_CATEGORY.to_string()
        });
        let cv = category_of.get(&edge.api_v).cloned().unwrap_or_else(|| {
            missing.insert(edge.api_v.clone());
            UNKNOWN_CATEGORY.to_string()
        });
        let key = if cu <= cv { (cu, cv) } else { (cv, cu) };
        *weights.entry(key).or_insert(0) += 1;
    }
    (
        CcSnapshot { t: aa.t, weights },
        missing.into_iter().collect(),
    )
}

#[derive(Debug, Clone)]
pub struct SnapshotTriple {
    pub t: Day,
    pub aa: AaSnapshot,
    pub cc: CcSnapshot,
}

/// Snapshots at every cadence boundary in `[from, to]`.
pub fn snapshot_series(
    net: &MaNetwork,
    cadence: Cadence,
    from: Day,
    to: Day,
) -> Vec<SnapshotTriple> {
    let category_of: BTreeMap<String, String> = net
        .api_nodes
        .values()
        .map(|n| (n.id.clone(), n.category.clone()))
        .collect();
    cadence_boundaries(from, to, cadence)
        .into_iter()
        .map(|t| {
            let ma = snapshot_active(net, t);
            let aa = project_aa(&ma);
            let (cc, _) = aggregate_cc(&aa, &category_of);
            SnapshotTriple { t, aa, cc }
        })
        .collect()
}

/// Edge-list export, one line per edge: `u v w t`.
pub fn write_aa_edge_list<W: Write>(aa: &AaSnapshot, mut writer: W) -> std::io::Result<()> {
    for edge in &aa.edges {
        writeln!(writer, "{} {} {} {}", edge.api_u, edge.api_v, edge.witness, aa.t)?;
    }
    Ok(())
}

/// Edge-list export with a weight column: `u v t weight`.
pub fn write_cc_edge_list<W: Write>(cc: &CcSnapshot, mut writer: W) -> std::io::Result<()> {
    for ((u, v), weight) in &cc.weights {
        writeln!(writer, "{u} {v} {} {weight}", cc.t)?;
    }
    Ok(())
}
