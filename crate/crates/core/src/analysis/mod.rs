//! Evolution metrics over the corrected dataset and its derived networks:
//! availability counts under three scenarios, degree distributions with
//! power-law goodness-of-fit, category diversity, connected components,
//! co-occurring-pair survival, and mashup composition sizes.

pub mod components;
pub mod export;
pub mod powerlaw;

pub use powerlaw::{
    fit_power_law, hurwitz_zeta, pvalue_bootstrap, BootstrapResult, DiscretePowerLaw, PowerLawFit,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correction::CorrectedDataset;
use crate::dataset::EntityKind;
use crate::date::{cadence_boundaries, Cadence, Day};
use crate::networks::{AaSnapshot, SnapshotTriple};
use components::UnionFind;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("degrees must be positive integers")]
    NonPositiveDegree,
    #[error("all degrees are equal; no spread to fit")]
    NoSpread,
    #[error("tail too small to fit ({n_tail} < {min})")]
    LowSample { n_tail: usize, min: usize },
    #[error("bootstrap needs at least one replicate")]
    ZeroBootstrap,
    #[error("unknown research question `{0}`")]
    UnknownRq(String),
}

/// Which end dates are honored when counting availability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Nothing ever dies.
    NoDeath,
    /// Only the platform's deathpool labels end an entity.
    Deathpool,
    /// Corrected lifecycle estimates end an entity.
    Corrected,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::NoDeath, Scenario::Deathpool, Scenario::Corrected];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::NoDeath => "no_death",
            Scenario::Deathpool => "deathpool",
            Scenario::Corrected => "corrected",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no_death" | "no-death" => Ok(Scenario::NoDeath),
            "deathpool" => Ok(Scenario::Deathpool),
            "corrected" => Ok(Scenario::Corrected),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    pub points: Vec<(Day, f64)>,
}

impl TimeSeries {
    pub fn strictly_increasing_t(&self) -> bool {
        self.points.windows(2).all(|w| w[0].0 < w[1].0)
    }
}

fn scenario_end(
    entity: &crate::correction::EntityLifecycle,
    scenario: Scenario,
) -> Option<Day> {
    match scenario {
        Scenario::NoDeath => None,
        Scenario::Deathpool => entity.labeled_end,
        Scenario::Corrected => entity.end,
    }
}

/// Count of entities of `kind` active at each cadence boundary under the
/// scenario's end-date rule.
pub fn rq1_counts(
    corrected: &CorrectedDataset,
    kind: EntityKind,
    cadence: Cadence,
    from: Day,
    to: Day,
    scenario: Scenario,
) -> TimeSeries {
    let boundaries = cadence_boundaries(from, to, cadence);
    // Difference array over boundary indices.
    let mut delta = vec![0i64; boundaries.len() + 1];
    for entity in corrected.entities.values().filter(|e| e.kind == kind) {
        let end = scenario_end(entity, scenario);
        let enter = boundaries.partition_point(|&t| t < entity.start);
        let exit = match end {
            Some(e) => boundaries.partition_point(|&t| t < e),
            None => boundaries.len(),
        };
        if enter < exit {
            delta[enter] += 1;
            delta[exit] -= 1;
        }
    }
    let mut points = Vec::with_capacity(boundaries.len());
    let mut running = 0i64;
    for (i, &t) in boundaries.iter().enumerate() {
        running += delta[i];
        points.push((t, running as f64));
    }
    TimeSeries {
        label: format!("{kind}_count"),
        scenario: Some(scenario),
        points,
    }
}

/// Distinct-neighbor degree of each node in the co-occurrence snapshot;
/// isolated nodes count at degree 0. Frequencies sum to the node count.
pub fn degree_distribution(aa: &AaSnapshot) -> BTreeMap<u64, u64> {
    let mut neighbors: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for edge in &aa.edges {
        neighbors
            .entry(edge.api_u.as_str())
            .or_default()
            .insert(edge.api_v.as_str());
        neighbors
            .entry(edge.api_v.as_str())
            .or_default()
            .insert(edge.api_u.as_str());
    }
    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
    for node in &aa.nodes {
        let degree = neighbors.get(node.as_str()).map_or(0, |s| s.len()) as u64;
        *hist.entry(degree).or_insert(0) += 1;
    }
    hist
}

/// Positive degrees (non-isolated nodes) as a fitting sample.
pub fn positive_degrees(aa: &AaSnapshot) -> Vec<u64> {
    degree_distribution(aa)
        .into_iter()
        .filter(|&(d, _)| d > 0)
        .flat_map(|(d, count)| std::iter::repeat(d).take(count as usize))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryPopularity {
    pub t: Day,
    pub category: String,
    /// Distinct non-isolated APIs of this category at t.
    pub api_count: usize,
}

/// Diversity (category-node count per snapshot) and per-snapshot category
/// popularity, ranked by aggregated API count then name.
pub fn rq3_diversity(
    series: &[SnapshotTriple],
    category_of: &BTreeMap<String, String>,
) -> (TimeSeries, Vec<CategoryPopularity>) {
    let mut points = Vec::with_capacity(series.len());
    let mut popularity = Vec::new();
    for triple in series {
        points.push((triple.t, triple.cc.node_count() as f64));
        let mut apis_per_category: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for edge in &triple.aa.edges {
            for api in [&edge.api_u, &edge.api_v] {
                let category = category_of
                    .get(api)
                    .map(String::as_str)
                    .unwrap_or(crate::networks::UNKNOWN_CATEGORY);
                apis_per_category
                    .entry(category)
                    .or_default()
                    .insert(api.as_str());
            }
        }
        let mut rows: Vec<CategoryPopularity> = apis_per_category
            .into_iter()
            .map(|(category, apis)| CategoryPopularity {
                t: triple.t,
                category: category.to_string(),
                api_count: apis.len(),
            })
            .collect();
        rows.sort_by(|a, b| b.api_count.cmp(&a.api_count).then(a.category.cmp(&b.category)));
        popularity.extend(rows);
    }
    (
        TimeSeries {
            label: "diversity".to_string(),
            scenario: Some(Scenario::Corrected),
            points,
        },
        popularity,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub components: usize,
    /// Components with more than 4 nodes.
    pub components_gt4: usize,
    pub largest: usize,
}

/// Connected components of the simple graph underlying the co-occurrence
/// multiset; isolated nodes are singleton components.
pub fn rq4_components(aa: &AaSnapshot) -> ComponentStats {
    let index: BTreeMap<&str, usize> = aa
        .nodes
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut uf = UnionFind::new(aa.nodes.len());
    for edge in &aa.edges {
        if let (Some(&u), Some(&v)) =
            (index.get(edge.api_u.as_str()), index.get(edge.api_v.as_str()))
        {
            uf.union(u, v);
        }
    }
    let sizes = uf.component_sizes();
    ComponentStats {
        components: sizes.len(),
        components_gt4: sizes.iter().filter(|&&s| s > 4).count(),
        largest: sizes.iter().copied().max().unwrap_or(0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSurvivalStat {
    pub api_a: String,
    pub api_b: String,
    /// Mashups still available at the reference date.
    pub active_use: usize,
    /// Distinct mashups that ever co-invoked the pair.
    pub total_use: usize,
    pub survival_rate: f64,
    /// Mean mashup longevity in days, alive mashups clipped at the
    /// reference date.
    pub avg_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalBucket {
    pub lo: u64,
    pub hi: u64,
    pub pairs: usize,
    pub mean_survival_rate: f64,
}

pub const SURVIVAL_BUCKET_WIDTH: u64 = 20;

/// Per-pair survival statistics plus the bucketed survival-vs-frequency
/// curve. Pairs are ordered by total use (descending), then name.
pub fn rq5_pair_survival(
    corrected: &CorrectedDataset,
    reference: Day,
) -> (Vec<PairSurvivalStat>, Vec<SurvivalBucket>) {
    let mut pair_mashups: BTreeMap<(String, String), BTreeSet<&str>> = BTreeMap::new();
    for timeline in corrected.timelines.values() {
        let mut pairs_here: BTreeSet<(&str, &str)> = BTreeSet::new();
        for segment in &timeline.segments {
            let apis: Vec<&str> = segment.api_ids.iter().map(String::as_str).collect();
            for i in 0..apis.len() {
                for j in (i + 1)..apis.len() {
                    pairs_here.insert((apis[i], apis[j]));
                }
            }
        }
        for (a, b) in pairs_here {
            pair_mashups
                .entry((a.to_string(), b.to_string()))
                .or_default()
                .insert(timeline.mashup_id.as_str());
        }
    }

    let mut stats: Vec<PairSurvivalStat> = pair_mashups
        .into_iter()
        .map(|((api_a, api_b), mashups)| {
            let total_use = mashups.len();
            let mut active_use = 0usize;
            let mut day_total = 0.0f64;
            for mashup_id in &mashups {
                let Some(life) = corrected.entities.get(*mashup_id) else {
                    continue;
                };
                if life.active_at(reference) {
                    active_use += 1;
                }
                let effective_end = life.end.map_or(reference, |e| e.min(reference));
                day_total += effective_end.days_since(life.start).max(0) as f64;
            }
            PairSurvivalStat {
                api_a,
                api_b,
                active_use,
                total_use,
                survival_rate: active_use as f64 / total_use as f64,
                avg_days: day_total / total_use as f64,
            }
        })
        .collect();
    stats.sort_by(|a, b| {
        b.total_use
            .cmp(&a.total_use)
            .then_with(|| a.api_a.cmp(&b.api_a))
            .then_with(|| a.api_b.cmp(&b.api_b))
    });

    let mut buckets: BTreeMap<u64, (usize, f64)> = BTreeMap::new();
    for stat in &stats {
        let lo = (stat.total_use as u64 / SURVIVAL_BUCKET_WIDTH) * SURVIVAL_BUCKET_WIDTH;
        let entry = buckets.entry(lo).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += stat.survival_rate;
    }
    let curve = buckets
        .into_iter()
        .map(|(lo, (pairs, rate_sum))| SurvivalBucket {
            lo,
            hi: lo + SURVIVAL_BUCKET_WIDTH,
            pairs,
            mean_survival_rate: rate_sum / pairs as f64,
        })
        .collect();
    (stats, curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub t: Day,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizePopulation {
    /// Mashups bucketed by creation period; size at creation.
    NewOnly,
    /// Every active mashup at each snapshot; current composition size.
    AllActive,
}

impl std::str::FromStr for SizePopulation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "new_only" | "new-only" => Ok(SizePopulation::NewOnly),
            "all_active" | "all-active" => Ok(SizePopulation::AllActive),
            other => Err(format!("unknown population `{other}`")),
        }
    }
}

/// Quantile by linear interpolation between order statistics (the common
/// "R-7" rule: h = (n-1)q).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn size_stats_of(t: Day, mut sizes: Vec<f64>) -> Option<SizeStats> {
    if sizes.is_empty() {
        return None;
    }
    sizes.sort_by(|a, b| a.partial_cmp(b).expect("sizes are finite"));
    let n = sizes.len();
    let mean = sizes.iter().sum::<f64>() / n as f64;
    Some(SizeStats {
        t,
        n,
        min: sizes[0],
        q1: quantile_sorted(&sizes, 0.25),
        median: quantile_sorted(&sizes, 0.5),
        q3: quantile_sorted(&sizes, 0.75),
        max: sizes[n - 1],
        mean,
    })
}

fn cadence_floor(t: Day, cadence: Cadence) -> Day {
    match cadence {
        Cadence::Daily => t,
        Cadence::Monthly => t.month_floor(),
        Cadence::Yearly => t.year_floor(),
    }
}

/// Composition-size statistics per period. Periods with no qualifying
/// mashups are omitted.
pub fn rq6_size_stats(
    corrected: &CorrectedDataset,
    cadence: Cadence,
    from: Day,
    to: Day,
    population: SizePopulation,
) -> Vec<SizeStats> {
    match population {
        SizePopulation::NewOnly => {
            let mut buckets: BTreeMap<Day, Vec<f64>> = BTreeMap::new();
            for timeline in corrected.timelines.values() {
                let Some(life) = corrected.entities.get(&timeline.mashup_id) else {
                    continue;
                };
                if life.start < from || life.start > to {
                    continue;
                }
                let size = timeline.segments[0].api_ids.len() as f64;
                buckets
                    .entry(cadence_floor(life.start, cadence))
                    .or_default()
                    .push(size);
            }
            buckets
                .into_iter()
                .filter_map(|(t, sizes)| size_stats_of(t, sizes))
                .collect()
        }
        SizePopulation::AllActive => cadence_boundaries(from, to, cadence)
            .into_iter()
            .filter_map(|t| {
                let sizes: Vec<f64> = corrected
                    .timelines
                    .values()
                    .filter(|tl| {
                        corrected
                            .entities
                            .get(&tl.mashup_id)
                            .is_some_and(|life| life.active_at(t))
                    })
                    .filter_map(|tl| tl.set_at(t))
                    .filter(|set| !set.is_empty())
                    .map(|set| set.len() as f64)
                    .collect();
                size_stats_of(t, sizes)
            })
            .collect(),
    }
}
