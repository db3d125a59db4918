//! True-availability classification for APIs and mashups.
//!
//! APIs die in three patterns — death, transfer (one successor), split
//! (several successors) — and an API is only treated as obsolete when its
//! descriptive text says so or its endpoint is unreachable / answers 404.
//! Mashups die in two patterns: unreachable (homepage gone) and replaced
//! (homepage no longer describes the mashup).

pub mod fixture;
pub mod probe;

pub use fixture::{url_key, FixtureEntry, FixtureStore, MemoryStore};
pub use probe::{
    merge_captures, LiveProber, ProbeCapture, ProbeOutcome, ProbePolicy, ProbeResult, ProbeSource,
};

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ApiRecord, Dataset, EntityKind, MashupRecord};

#[derive(Debug, Error)]
pub enum LivenessError {
    #[error("invalid url `{url}`: {message}")]
    InvalidUrl { url: String, message: String },
    #[error("no fixture entry for `{url}` (expected {path})")]
    MissingFixture { url: String, path: String },
    #[error("malformed fixture entry: {0}")]
    FixtureFormat(String),
    #[error("malformed verdict row: {0}")]
    VerdictFormat(String),
    #[error("http client: {0}")]
    Client(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Available,
    Dead,
    Transfer,
    Split,
    Unreachable,
    Replaced,
}

impl Verdict {
    pub fn is_available(self) -> bool {
        self == Verdict::Available
    }

    /// Which verdicts are legal for which entity kind.
    pub fn legal_for(self, kind: EntityKind) -> bool {
        match kind {
            EntityKind::Api => matches!(
                self,
                Verdict::Available | Verdict::Dead | Verdict::Transfer | Verdict::Split
            ),
            EntityKind::Mashup => matches!(
                self,
                Verdict::Available | Verdict::Unreachable | Verdict::Replaced
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Evidence {
    Probe { result: ProbeResult },
    TextRule { phrase: String },
    Note { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LivenessVerdict {
    pub entity_id: String,
    pub kind: EntityKind,
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub successor_ids: Vec<String>,
}

impl LivenessVerdict {
    /// Kind-compatibility plus the successor-count rules for transfer/split.
    pub fn invariants_hold(&self) -> bool {
        if !self.verdict.legal_for(self.kind) {
            return false;
        }
        match self.verdict {
            Verdict::Transfer => self.successor_ids.len() == 1,
            Verdict::Split => self.successor_ids.len() >= 2,
            _ => self.successor_ids.is_empty(),
        }
    }
}

/// Unavailability phrases for the text rule, versioned so reports can state
/// exactly which rule set produced a verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseList {
    pub version: String,
    pub phrases: Vec<String>,
}

impl Default for PhraseList {
    fn default() -> Self {
        PhraseList {
            version: "v1".to_string(),
            phrases: vec![
                "no longer available".to_string(),
                "no longer exists".to_string(),
                "has been discontinued".to_string(),
                "deprecated".to_string(),
            ],
        }
    }
}

/// Curated transfer/split successor table, keyed by the dead API's id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuccessorTable(pub BTreeMap<String, Vec<String>>);

impl SuccessorTable {
    pub fn from_json_str(input: &str) -> Result<SuccessorTable, LivenessError> {
        serde_json::from_str(input).map_err(|e| LivenessError::FixtureFormat(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<SuccessorTable, LivenessError> {
        let raw = std::fs::read_to_string(path)?;
        SuccessorTable::from_json_str(&raw)
    }

    pub fn get(&self, id: &str) -> Option<&Vec<String>> {
        self.0.get(id)
    }
}

/// Text rule: the description declares the API dead when it contains any of
/// the phrases, case-insensitively. Returns the matched phrase.
pub fn classify_api_text(description: &str, phrases: &PhraseList) -> Option<String> {
    let lowered = description.to_lowercase();
    phrases
        .phrases
        .iter()
        .find(|p| lowered.contains(&p.to_lowercase()))
        .cloned()
}

/// Classify one API. The text rule fires first; otherwise the API is
/// obsolete iff the probe outcome is a dead signal (unreachable/404).
/// Obsolete APIs with exactly one successor are transfers, with two or more
/// splits, otherwise deaths.
pub fn classify_api(
    record: &ApiRecord,
    probe_result: Option<&ProbeResult>,
    successors: &SuccessorTable,
    phrases: &PhraseList,
) -> LivenessVerdict {
    let mut evidence = Vec::new();
    let text_hit = classify_api_text(&record.description, phrases);
    if let Some(phrase) = &text_hit {
        evidence.push(Evidence::TextRule {
            phrase: phrase.clone(),
        });
    }
    if let Some(probe) = probe_result {
        evidence.push(Evidence::Probe {
            result: probe.clone(),
        });
    }
    let obsolete =
        text_hit.is_some() || probe_result.map_or(false, |p| p.outcome.is_dead_signal());
    if !obsolete {
        if record.endpoint_url.is_none() && text_hit.is_none() {
            evidence.push(Evidence::Note {
                message: "no endpoint url; not probed".to_string(),
            });
        }
        return LivenessVerdict {
            entity_id: record.id.clone(),
            kind: EntityKind::Api,
            verdict: Verdict::Available,
            evidence,
            successor_ids: Vec::new(),
        };
    }
    let successor_ids = successors
        .get(&record.id)
        .cloned()
        .unwrap_or_else(|| record.successor_ids.clone());
    let verdict = match successor_ids.len() {
        0 => Verdict::Dead,
        1 => Verdict::Transfer,
        _ => Verdict::Split,
    };
    LivenessVerdict {
        entity_id: record.id.clone(),
        kind: EntityKind::Api,
        verdict,
        evidence,
        successor_ids,
    }
}

const MIN_TOKEN_LEN: usize = 4;

/// Identifying tokens of a mashup name: lowercase, punctuation stripped,
/// tokens of length >= 4 preferred, all tokens as a fallback.
fn name_tokens(name: &str) -> Vec<String> {
    let all: Vec<String> = name
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect();
    let long: Vec<String> = all
        .iter()
        .filter(|t| t.len() >= MIN_TOKEN_LEN)
        .cloned()
        .collect();
    if long.is_empty() {
        all
    } else {
        long
    }
}

/// Classify one mashup from its homepage probe and HTML.
///
/// No homepage URL (probe `None`) means the mashup's service cannot be
/// located at all: unreachable. A reachable homepage whose HTML contains
/// none of the name tokens has been replaced by unrelated content.
pub fn classify_mashup(
    record: &MashupRecord,
    homepage_probe: Option<&ProbeResult>,
    homepage_html: Option<&str>,
) -> LivenessVerdict {
    let mut evidence = Vec::new();
    let verdict = match homepage_probe {
        None => {
            evidence.push(Evidence::Note {
                message: "no homepage".to_string(),
            });
            Verdict::Unreachable
        }
        Some(probe) => {
            evidence.push(Evidence::Probe {
                result: probe.clone(),
            });
            if probe.outcome.is_dead_signal() {
                Verdict::Unreachable
            } else {
                match homepage_html {
                    None => {
                        evidence.push(Evidence::Note {
                            message: "homepage reachable; no content captured".to_string(),
                        });
                        Verdict::Available
                    }
                    Some(html) => {
                        let lowered = html.to_lowercase();
                        let tokens = name_tokens(&record.name);
                        if tokens.is_empty() || tokens.iter().any(|t| lowered.contains(t)) {
                            Verdict::Available
                        } else {
                            evidence.push(Evidence::Note {
                                message: format!(
                                    "homepage content matches none of the name tokens {tokens:?}"
                                ),
                            });
                            Verdict::Replaced
                        }
                    }
                }
            }
        }
    };
    LivenessVerdict {
        entity_id: record.id.clone(),
        kind: EntityKind::Mashup,
        verdict,
        evidence,
        successor_ids: Vec::new(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct LivenessConfig {
    pub phrases: PhraseList,
    pub successors: SuccessorTable,
}

/// Classify every record in the dataset.
///
/// With a fixture store this is a pure function of (dataset, store): a
/// missing fixture entry aborts with an error (the store must cover all
/// URLs). Recoverable per-entity probe errors (invalid URLs, live network
/// failures) degrade to unreachable evidence and never abort the batch.
pub fn classify_all(
    ds: &Dataset,
    source: &dyn ProbeSource,
    config: &LivenessConfig,
) -> Result<BTreeMap<String, LivenessVerdict>, LivenessError> {
    let api_results: Result<Vec<(String, LivenessVerdict)>, LivenessError> = ds
        .apis()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|record| {
            let capture = match &record.endpoint_url {
                Some(url) => Some(capture_or_degrade(source, url)?),
                None => None,
            };
            let verdict = classify_api(
                record,
                capture.as_ref().map(|c| &c.result),
                &config.successors,
                &config.phrases,
            );
            Ok((record.id.clone(), verdict))
        })
        .collect();
    let mashup_results: Result<Vec<(String, LivenessVerdict)>, LivenessError> = ds
        .mashups()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|record| {
            let capture = match &record.homepage_url {
                Some(url) => Some(capture_or_degrade(source, url)?),
                None => None,
            };
            let verdict = classify_mashup(
                record,
                capture.as_ref().map(|c| &c.result),
                capture.as_ref().and_then(|c| c.body.as_deref()),
            );
            Ok((record.id.clone(), verdict))
        })
        .collect();
    let mut map = BTreeMap::new();
    for (id, verdict) in api_results?.into_iter().chain(mashup_results?) {
        map.insert(id, verdict);
    }
    Ok(map)
}

/// Missing fixture entries are contract violations and abort; anything else
/// degrades to an unreachable capture so live batches always complete.
fn capture_or_degrade(
    source: &dyn ProbeSource,
    url: &str,
) -> Result<ProbeCapture, LivenessError> {
    match source.capture(url) {
        Ok(capture) => Ok(capture),
        Err(e @ LivenessError::MissingFixture { .. }) => Err(e),
        Err(other) => Ok(ProbeCapture {
            result: ProbeResult {
                url: url.to_string(),
                outcome: ProbeOutcome::Unreachable,
                fetched_body_excerpt: Some(format!("probe error: {other}")),
                probe_time: 0,
                attempt: 1,
            },
            body: None,
        }),
    }
}

/// One verdict row in the exported JSON-lines format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRow {
    pub id: String,
    pub kind: EntityKind,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub successors: Vec<String>,
    pub evidence_summary: String,
}

fn summarize_evidence(evidence: &[Evidence]) -> String {
    let parts: Vec<String> = evidence
        .iter()
        .map(|e| match e {
            Evidence::Probe { result } => {
                let outcome = match result.outcome {
                    ProbeOutcome::Ok => "ok".to_string(),
                    ProbeOutcome::NotFound404 => "404".to_string(),
                    ProbeOutcome::Unreachable => "unreachable".to_string(),
                    ProbeOutcome::OtherStatus(code) => format!("status {code}"),
                };
                format!("probe {} -> {outcome} (attempt {})", result.url, result.attempt)
            }
            Evidence::TextRule { phrase } => format!("text rule hit `{phrase}`"),
            Evidence::Note { message } => message.clone(),
        })
        .collect();
    parts.join("; ")
}

impl VerdictRow {
    pub fn from_verdict(v: &LivenessVerdict) -> VerdictRow {
        VerdictRow {
            id: v.entity_id.clone(),
            kind: v.kind,
            verdict: v.verdict,
            successors: v.successor_ids.clone(),
            evidence_summary: summarize_evidence(&v.evidence),
        }
    }
}

/// Write the verdict map as JSON-lines, one row per entity, id order.
pub fn write_verdicts_jsonl<W: Write>(
    verdicts: &BTreeMap<String, LivenessVerdict>,
    mut writer: W,
) -> std::io::Result<()> {
    for verdict in verdicts.values() {
        serde_json::to_writer(&mut writer, &VerdictRow::from_verdict(verdict))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a verdict JSON-lines file back into rows, keyed by id.
pub fn parse_verdicts_jsonl<R: Read>(
    reader: BufReader<R>,
) -> Result<BTreeMap<String, VerdictRow>, LivenessError> {
    let mut map = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: VerdictRow = serde_json::from_str(&line)
            .map_err(|e| LivenessError::VerdictFormat(format!("line {}: {e}", idx + 1)))?;
        map.insert(row.id.clone(), row);
    }
    Ok(map)
}

pub fn parse_verdicts_jsonl_str(
    input: &str,
) -> Result<BTreeMap<String, VerdictRow>, LivenessError> {
    parse_verdicts_jsonl(BufReader::new(input.as_bytes()))
}
