//! Batch lifecycle correction over a classified dataset.
//!
//! Every entity gets a corrected `[start, end)` interval: trusted deathpool
//! labels are kept, split/transfer APIs end when their latest successor
//! starts, everything else confirmed unavailable gets a sampled death time,
//! and available entities stay open-ended. Mashup composition timelines are
//! rebuilt by replaying API end events in chronological order.
//!
//! Per-entity sampling derives its generator from (run seed, entity id) so
//! results are independent of worker count and iteration order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, BufReader, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::composition::{CompositionTimeline, DeathPattern, UnavailabilityEvent};
use super::{sample_death_time, successor_end_time, CorrectionError, NormalFit, Provenance};
use crate::dataset::{Dataset, EntityKind, RecordFlag};
use crate::date::Day;
use crate::liveness::{Verdict, VerdictRow};

#[derive(Debug, Clone)]
pub struct CorrectionConfig {
    /// Earliest confirmed-unavailable date; upper clamp for sampled ends.
    pub beta: Day,
    /// Deathpool dates inside this window are trusted as observed ends.
    pub trust_window: (Day, Day),
    /// Run seed; per-entity generators derive from (seed, entity id).
    pub seed: u64,
}

impl CorrectionConfig {
    pub fn new(seed: u64) -> CorrectionConfig {
        CorrectionConfig {
            beta: Day::parse_iso("2020-09-10").expect("valid default beta"),
            trust_window: (
                Day::parse_iso("2018-01-01").expect("valid window start"),
                Day::parse_iso("2020-12-31").expect("valid window end"),
            ),
            seed,
        }
    }
}

/// Corrected lifecycle row for one entity, self-contained enough to drive
/// every downstream analysis (kind, category, and original label included).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLifecycle {
    pub id: String,
    pub kind: EntityKind,
    pub category: String,
    pub start: Day,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Day>,
    pub provenance: Provenance,
    pub beta: Day,
    /// Deathpool date as labeled by the source, trusted or not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeled_end: Option<Day>,
}

impl EntityLifecycle {
    pub fn active_at(&self, t: Day) -> bool {
        crate::date::active_at(self.start, self.end, t)
    }
}

/// Non-fatal problems met while correcting; the batch always completes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CorrectionWarning {
    /// No verdict supplied for this entity; treated as available.
    MissingVerdict { id: String },
    /// Transfer/split successors missing or starting before the entity
    /// itself; fell back to sampling.
    UnusableSuccessors { id: String },
    /// Entity confirmed dead although created on/after beta; left open.
    StartNotBeforeBeta { id: String },
    /// Trusted-window deathpool date not after the start; fell back.
    DegenerateDeathpool { id: String },
    /// Event replay referenced an API with no lifecycle estimate.
    MissingLifecycle { mashup_id: String, api_id: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrectedDataset {
    pub entities: BTreeMap<String, EntityLifecycle>,
    pub timelines: BTreeMap<String, CompositionTimeline>,
}

impl CorrectedDataset {
    pub fn entity(&self, id: &str) -> Option<&EntityLifecycle> {
        self.entities.get(id)
    }

    pub fn apis(&self) -> impl Iterator<Item = &EntityLifecycle> {
        self.entities.values().filter(|e| e.kind == EntityKind::Api)
    }

    pub fn mashups(&self) -> impl Iterator<Item = &EntityLifecycle> {
        self.entities
            .values()
            .filter(|e| e.kind == EntityKind::Mashup)
    }

    /// API id -> primary category, for category aggregation.
    pub fn category_of(&self) -> BTreeMap<String, String> {
        self.apis()
            .map(|e| (e.id.clone(), e.category.clone()))
            .collect()
    }
}

#[derive(Debug)]
pub struct CorrectionOutcome {
    pub corrected: CorrectedDataset,
    pub fit: NormalFit,
    pub warnings: Vec<CorrectionWarning>,
}

fn entity_rng(seed: u64, entity_id: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(entity_id.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

struct EntityView<'a> {
    id: &'a str,
    kind: EntityKind,
    category: &'a str,
    start: Day,
    deathpool_date: Option<Day>,
}

/// Correct every entity's lifecycle and rebuild mashup composition
/// timelines. Per-entity problems become warnings, never batch failures.
pub fn apply_corrections(
    ds: &Dataset,
    verdicts: &BTreeMap<String, VerdictRow>,
    fit: &NormalFit,
    config: &CorrectionConfig,
) -> Result<CorrectionOutcome, CorrectionError> {
    let mut warnings = Vec::new();
    let mut entities = BTreeMap::new();

    let views: Vec<EntityView> = ds
        .apis()
        .map(|a| EntityView {
            id: &a.id,
            kind: EntityKind::Api,
            category: &a.primary_category,
            start: a.start,
            deathpool_date: a.deathpool_date,
        })
        .chain(ds.mashups().map(|m| EntityView {
            id: &m.id,
            kind: EntityKind::Mashup,
            category: &m.primary_category,
            start: m.start,
            deathpool_date: m.deathpool_date,
        }))
        .collect();

    for view in &views {
        let verdict = verdicts.get(view.id);
        if verdict.is_none() {
            warnings.push(CorrectionWarning::MissingVerdict {
                id: view.id.to_string(),
            });
        }
        let (end, provenance) =
            correct_entity(ds, view, verdict, fit, config, &mut warnings);
        entities.insert(
            view.id.to_string(),
            EntityLifecycle {
                id: view.id.to_string(),
                kind: view.kind,
                category: view.category.to_string(),
                start: view.start,
                end,
                provenance,
                beta: config.beta,
                labeled_end: view.deathpool_date,
            },
        );
    }

    let corrected_stub = CorrectedDataset {
        entities,
        timelines: BTreeMap::new(),
    };
    let timelines = rebuild_timelines(ds, verdicts, &corrected_stub, &mut warnings);

    Ok(CorrectionOutcome {
        corrected: CorrectedDataset {
            entities: corrected_stub.entities,
            timelines,
        },
        fit: *fit,
        warnings,
    })
}

fn correct_entity(
    ds: &Dataset,
    view: &EntityView,
    verdict: Option<&VerdictRow>,
    fit: &NormalFit,
    config: &CorrectionConfig,
    warnings: &mut Vec<CorrectionWarning>,
) -> (Option<Day>, Provenance) {
    let (from, to) = config.trust_window;
    // Trusted deathpool label wins outright.
    if let Some(dp) = view.deathpool_date {
        let implausible = ds.has_flag(view.id, RecordFlag::ImplausibleDeath);
        if !implausible && dp >= from && dp <= to {
            if dp > view.start {
                return (Some(dp), Provenance::ObservedDeathpool);
            }
            warnings.push(CorrectionWarning::DegenerateDeathpool {
                id: view.id.to_string(),
            });
        }
    }
    let verdict_kind = verdict.map(|v| v.verdict).unwrap_or(Verdict::Available);
    if verdict_kind.is_available() {
        return (None, Provenance::Alive);
    }
    // Split/transfer APIs end when their latest successor starts.
    if matches!(verdict_kind, Verdict::Transfer | Verdict::Split) {
        let successor_starts: Vec<Day> = verdict
            .map(|v| v.successors.as_slice())
            .unwrap_or(&[])
            .iter()
            .filter_map(|succ| ds.api(succ).map(|rec| rec.start))
            .collect();
        match successor_end_time(&successor_starts) {
            Ok(end) if end > view.start => return (Some(end), Provenance::DerivedSuccessor),
            _ => warnings.push(CorrectionWarning::UnusableSuccessors {
                id: view.id.to_string(),
            }),
        }
    }
    // Everything else confirmed unavailable gets a sampled death time.
    if view.start >= config.beta {
        warnings.push(CorrectionWarning::StartNotBeforeBeta {
            id: view.id.to_string(),
        });
        return (None, Provenance::Alive);
    }
    let mut rng = entity_rng(config.seed, view.id);
    match sample_death_time(view.id, view.start, config.beta, fit, &mut rng) {
        Ok(sampled) => (sampled.estimate.end, Provenance::Sampled),
        Err(_) => (None, Provenance::Alive),
    }
}

/// Replay API end events through each mashup's composition.
fn rebuild_timelines(
    ds: &Dataset,
    verdicts: &BTreeMap<String, VerdictRow>,
    corrected: &CorrectedDataset,
    warnings: &mut Vec<CorrectionWarning>,
) -> BTreeMap<String, CompositionTimeline> {
    let mut timelines = BTreeMap::new();
    for mashup in ds.mashups() {
        if ds.has_flag(&mashup.id, RecordFlag::EmptyComposition) {
            continue;
        }
        let initial: BTreeSet<String> = ds
            .resolvable_api_ids(mashup)
            .into_iter()
            .map(str::to_string)
            .collect();
        let mashup_life = corrected
            .entities
            .get(&mashup.id)
            .expect("every mashup has a lifecycle");
        let mashup_end = mashup_life.end;

        // Closure of APIs that can ever enter this composition, following
        // successor chains through split/transfer events.
        let mut events: Vec<(Day, String, UnavailabilityEvent)> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut queue: VecDeque<String> = initial.iter().cloned().collect();
        while let Some(api_id) = queue.pop_front() {
            if !seen.insert(api_id.clone()) {
                continue;
            }
            let Some(life) = corrected.entities.get(&api_id) else {
                warnings.push(CorrectionWarning::MissingLifecycle {
                    mashup_id: mashup.id.clone(),
                    api_id: api_id.clone(),
                });
                continue;
            };
            let Some(end) = life.end else { continue };
            let pattern = match verdicts.get(&api_id).map(|v| v.verdict) {
                Some(Verdict::Transfer) => {
                    let succ = verdicts[&api_id].successors.first().cloned();
                    match succ {
                        Some(s) => {
                            queue.push_back(s.clone());
                            DeathPattern::Transfer { successor: s }
                        }
                        None => DeathPattern::Death,
                    }
                }
                Some(Verdict::Split) => {
                    let succs = verdicts[&api_id].successors.clone();
                    for s in &succs {
                        queue.push_back(s.clone());
                    }
                    DeathPattern::Split { successors: succs }
                }
                _ => DeathPattern::Death,
            };
            events.push((
                end,
                api_id.clone(),
                UnavailabilityEvent { api_id, pattern },
            ));
        }
        events.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

        let mut timeline = CompositionTimeline::new(&mashup.id, mashup.start, initial);
        for (t, _, event) in events {
            if mashup_end.is_some_and(|end| t >= end) {
                break;
            }
            let t = t.max(mashup.start);
            timeline.apply_event(&event, t);
            // A successor may already be dead when it joins; prune it at the
            // same instant so the composition never carries a dead API.
            prune_dead_joiners(&mut timeline, corrected, verdicts, t);
        }
        if let Some(end) = mashup_end {
            timeline.close(end);
        }
        timelines.insert(mashup.id.clone(), timeline);
    }
    timelines
}

fn prune_dead_joiners(
    timeline: &mut CompositionTimeline,
    corrected: &CorrectedDataset,
    verdicts: &BTreeMap<String, VerdictRow>,
    t: Day,
) {
    loop {
        let Some(dead_now) = timeline
            .current()
            .api_ids
            .iter()
            .find(|id| {
                corrected
                    .entities
                    .get(*id)
                    .and_then(|life| life.end)
                    .is_some_and(|end| end <= t)
            })
            .cloned()
        else {
            return;
        };
        let pattern = match verdicts.get(&dead_now).map(|v| v.verdict) {
            Some(Verdict::Transfer) => verdicts[&dead_now]
                .successors
                .first()
                .cloned()
                .map(|s| DeathPattern::Transfer { successor: s })
                .unwrap_or(DeathPattern::Death),
            Some(Verdict::Split) => DeathPattern::Split {
                successors: verdicts[&dead_now].successors.clone(),
            },
            _ => DeathPattern::Death,
        };
        timeline.apply_event(
            &UnavailabilityEvent {
                api_id: dead_now,
                pattern,
            },
            t,
        );
    }
}

enum CorrectedLine {
    Entity(EntityLifecycle),
    Timeline(CompositionTimeline),
}

fn parse_corrected_line(line: &str) -> Result<CorrectedLine, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    if value.get("segments").is_some() {
        serde_json::from_value(value)
            .map(CorrectedLine::Timeline)
            .map_err(|e| format!("invalid timeline row: {e}"))
    } else {
        serde_json::from_value(value)
            .map(CorrectedLine::Entity)
            .map_err(|e| format!("invalid entity row: {e}"))
    }
}

/// Write the corrected dataset as JSON-lines: entity rows first, then
/// timeline rows, each in id order.
pub fn write_corrected_jsonl<W: Write>(
    corrected: &CorrectedDataset,
    mut writer: W,
) -> std::io::Result<()> {
    for entity in corrected.entities.values() {
        serde_json::to_writer(&mut writer, entity)?;
        writer.write_all(b"\n")?;
    }
    for timeline in corrected.timelines.values() {
        serde_json::to_writer(&mut writer, timeline)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a corrected-dataset JSON-lines file. A row is a timeline iff it
/// has a `segments` key.
pub fn parse_corrected_jsonl<R: Read>(
    reader: BufReader<R>,
) -> Result<CorrectedDataset, CorrectionError> {
    let mut corrected = CorrectedDataset::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorrectionError::CorruptedFile(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_corrected_line(&line) {
            Ok(CorrectedLine::Entity(e)) => {
                corrected.entities.insert(e.id.clone(), e);
            }
            Ok(CorrectedLine::Timeline(t)) => {
                corrected.timelines.insert(t.mashup_id.clone(), t);
            }
            Err(message) => {
                return Err(CorrectionError::CorruptedFile(format!(
                    "line {}: {message}",
                    idx + 1
                )))
            }
        }
    }
    Ok(corrected)
}

pub fn parse_corrected_jsonl_str(input: &str) -> Result<CorrectedDataset, CorrectionError> {
    parse_corrected_jsonl(BufReader::new(input.as_bytes()))
}
