//! Ingestion, validation, and canonicalization of raw API/mashup records.
//!
//! Records that fail a plausibility or referential check are *flagged, never
//! deleted*: the whole point of the downstream correction passes is auditing
//! bad labels, so provenance has to survive ingestion. Downstream modules
//! filter by flag.

pub mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::date::{Day, DateError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate id `{id}` ({first} and {second})")]
    DuplicateId {
        id: String,
        first: String,
        second: String,
    },
    #[error("schema mismatch in `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid window: from {from} is after to {to}")]
    InvalidWindow { from: Day, to: Day },
    #[error(transparent)]
    Date(#[from] DateError),
}

/// Availability status as labeled by the source platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabeledStatus {
    Available,
    Deprecated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Api,
    Mashup,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityKind::Api => f.write_str("api"),
            EntityKind::Mashup => f.write_str("mashup"),
        }
    }
}

/// Validation flag classes. A record can carry several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFlag {
    /// Labeled death time earlier than the creation date.
    ImplausibleDeath,
    /// Mashup references an API id that does not resolve.
    DanglingReference,
    /// Mashup has no resolvable API references at all.
    EmptyComposition,
    /// Primary category is empty.
    MissingCategory,
}

impl RecordFlag {
    pub const ALL: [RecordFlag; 4] = [
        RecordFlag::ImplausibleDeath,
        RecordFlag::DanglingReference,
        RecordFlag::EmptyComposition,
        RecordFlag::MissingCategory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordFlag::ImplausibleDeath => "implausible_death",
            RecordFlag::DanglingReference => "dangling_reference",
            RecordFlag::EmptyComposition => "empty_composition",
            RecordFlag::MissingCategory => "missing_category",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiRecord {
    pub id: String,
    pub name: String,
    pub start: Day,
    pub labeled_status: LabeledStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deathpool_date: Option<Day>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    pub primary_category: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub successor_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MashupRecord {
    pub id: String,
    pub name: String,
    pub start: Day,
    pub labeled_status: LabeledStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deathpool_date: Option<Day>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homepage_url: Option<String>,
    pub primary_category: String,
    #[serde(default)]
    pub description: String,
    pub api_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_date: Option<Day>,
}

/// Immutable, validated collection of API and mashup records.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    apis: BTreeMap<String, ApiRecord>,
    mashups: BTreeMap<String, MashupRecord>,
    metadata: DatasetMetadata,
    flags: BTreeMap<String, BTreeSet<RecordFlag>>,
}

impl Dataset {
    /// Build a dataset from raw records. Duplicate ids are fatal; all other
    /// problems become flags on the offending record.
    pub fn new(
        apis: Vec<ApiRecord>,
        mashups: Vec<MashupRecord>,
        metadata: DatasetMetadata,
    ) -> Result<Dataset, DatasetError> {
        let mut api_map = BTreeMap::new();
        for rec in apis {
            if let Some(prev) = api_map.insert(rec.id.clone(), rec) {
                return Err(DatasetError::DuplicateId {
                    id: prev.id.clone(),
                    first: format!("api `{}`", prev.name),
                    second: "a later api row".to_string(),
                });
            }
        }
        let mut mashup_map = BTreeMap::new();
        for rec in mashups {
            if api_map.contains_key(&rec.id) {
                return Err(DatasetError::DuplicateId {
                    id: rec.id.clone(),
                    first: "an api row".to_string(),
                    second: format!("mashup `{}`", rec.name),
                });
            }
            if let Some(prev) = mashup_map.insert(rec.id.clone(), rec) {
                return Err(DatasetError::DuplicateId {
                    id: prev.id.clone(),
                    first: format!("mashup `{}`", prev.name),
                    second: "a later mashup row".to_string(),
                });
            }
        }
        let mut ds = Dataset {
            apis: api_map,
            mashups: mashup_map,
            metadata,
            flags: BTreeMap::new(),
        };
        ds.flags = ds.compute_flags();
        Ok(ds)
    }

    fn compute_flags(&self) -> BTreeMap<String, BTreeSet<RecordFlag>> {
        let mut flags: BTreeMap<String, BTreeSet<RecordFlag>> = BTreeMap::new();
        let mut add = |id: &str, flag: RecordFlag| {
            flags.entry(id.to_string()).or_default().insert(flag);
        };
        for api in self.apis.values() {
            if let Some(dp) = api.deathpool_date {
                if dp < api.start {
                    add(&api.id, RecordFlag::ImplausibleDeath);
                }
            }
            if api.primary_category.trim().is_empty() {
                add(&api.id, RecordFlag::MissingCategory);
            }
        }
        for mashup in self.mashups.values() {
            if let Some(dp) = mashup.deathpool_date {
                if dp < mashup.start {
                    add(&mashup.id, RecordFlag::ImplausibleDeath);
                }
            }
            if mashup.primary_category.trim().is_empty() {
                add(&mashup.id, RecordFlag::MissingCategory);
            }
            let mut resolvable = 0usize;
            for api_id in &mashup.api_ids {
                if self.apis.contains_key(api_id) {
                    resolvable += 1;
                } else {
                    add(&mashup.id, RecordFlag::DanglingReference);
                }
            }
            if resolvable == 0 {
                add(&mashup.id, RecordFlag::EmptyComposition);
            }
        }
        flags
    }

    pub fn metadata(&self) -> &DatasetMetadata {
        &self.metadata
    }

    pub fn api(&self, id: &str) -> Option<&ApiRecord> {
        self.apis.get(id)
    }

    pub fn mashup(&self, id: &str) -> Option<&MashupRecord> {
        self.mashups.get(id)
    }

    pub fn apis(&self) -> impl Iterator<Item = &ApiRecord> {
        self.apis.values()
    }

    pub fn mashups(&self) -> impl Iterator<Item = &MashupRecord> {
        self.mashups.values()
    }

    pub fn api_count(&self) -> usize {
        self.apis.len()
    }

    pub fn mashup_count(&self) -> usize {
        self.mashups.len()
    }

    pub fn has_flag(&self, id: &str, flag: RecordFlag) -> bool {
        self.flags.get(id).is_some_and(|set| set.contains(&flag))
    }

    pub fn flags_of(&self, id: &str) -> Option<&BTreeSet<RecordFlag>> {
        self.flags.get(id)
    }

    /// The mashup's API references that resolve against the API table,
    /// in declaration order, deduplicated.
    pub fn resolvable_api_ids<'a>(&self, mashup: &'a MashupRecord) -> Vec<&'a str> {
        let mut seen = BTreeSet::new();
        mashup
            .api_ids
            .iter()
            .filter(|id| self.apis.contains_key(*id))
            .filter(|id| seen.insert(id.as_str()))
            .map(|id| id.as_str())
            .collect()
    }
}

/// Per-flag-class counts and offending ids. Counts are flagged-record counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub counts: BTreeMap<RecordFlag, usize>,
    pub ids: BTreeMap<RecordFlag, Vec<String>>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.counts.values().all(|&c| c == 0)
    }

    pub fn count(&self, flag: RecordFlag) -> usize {
        self.counts.get(&flag).copied().unwrap_or(0)
    }
}

/// Summarize the dataset's validation flags. Pure: the dataset is not
/// mutated and the report is deterministic for a given dataset.
pub fn validate(ds: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (id, flags) in &ds.flags {
        for flag in flags {
            *report.counts.entry(*flag).or_insert(0) += 1;
            report.ids.entry(*flag).or_default().push(id.clone());
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindFilter {
    Apis,
    Mashups,
    Pooled,
}

impl KindFilter {
    fn admits(self, kind: EntityKind) -> bool {
        match self {
            KindFilter::Apis => kind == EntityKind::Api,
            KindFilter::Mashups => kind == EntityKind::Mashup,
            KindFilter::Pooled => true,
        }
    }
}

impl std::str::FromStr for KindFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "apis" => Ok(KindFilter::Apis),
            "mashups" => Ok(KindFilter::Mashups),
            "pooled" => Ok(KindFilter::Pooled),
            other => Err(format!("unknown kind filter `{other}` (apis|mashups|pooled)")),
        }
    }
}

/// Longevity samples (days, >= 0) for entities whose deathpool date falls in
/// `[from, to]` and is not flagged implausible.
pub fn deathpool_window(
    ds: &Dataset,
    from: Day,
    to: Day,
    kinds: KindFilter,
) -> Result<Vec<i64>, DatasetError> {
    if from > to {
        return Err(DatasetError::InvalidWindow { from, to });
    }
    let mut samples = Vec::new();
    if kinds.admits(EntityKind::Api) {
        for api in ds.apis.values() {
            push_sample(&mut samples, ds, &api.id, api.start, api.deathpool_date, from, to);
        }
    }
    if kinds.admits(EntityKind::Mashup) {
        for mashup in ds.mashups.values() {
            push_sample(
                &mut samples,
                ds,
                &mashup.id,
                mashup.start,
                mashup.deathpool_date,
                from,
                to,
            );
        }
    }
    Ok(samples)
}

fn push_sample(
    samples: &mut Vec<i64>,
    ds: &Dataset,
    id: &str,
    start: Day,
    deathpool: Option<Day>,
    from: Day,
    to: Day,
) {
    let Some(dp) = deathpool else { return };
    if dp < from || dp > to || ds.has_flag(id, RecordFlag::ImplausibleDeath) {
        return;
    }
    let longevity = dp.days_since(start);
    if longevity >= 0 {
        samples.push(longevity);
    }
}
