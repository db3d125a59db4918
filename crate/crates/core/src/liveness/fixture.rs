//! Offline probe fixture store.
//!
//! A fixture store is a directory of JSON files, one per URL, named by the
//! lowercase hex SHA-256 of the exact URL string. Each file holds the canned
//! response:
//!
//! ```json
//! {"url": "https://...", "status_code": 200, "body": "...", "probe_time": 0}
//! ```
//!
//! `status_code: null` (or absent) means no HTTP response was obtained.
//! Replaying from a store is fully deterministic, which is what makes the
//! probe and correction stages bit-exact across runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::probe::{excerpt_of, ProbeCapture, ProbeOutcome, ProbeResult, ProbeSource};
use super::LivenessError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status_code: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_time: Option<i64>,
}

impl FixtureEntry {
    pub fn from_json_str(input: &str) -> Result<FixtureEntry, LivenessError> {
        serde_json::from_str(input).map_err(|e| LivenessError::FixtureFormat(e.to_string()))
    }

    fn to_capture(&self, url: &str) -> ProbeCapture {
        let outcome = ProbeOutcome::from_status(self.status_code);
        ProbeCapture {
            result: ProbeResult {
                url: url.to_string(),
                outcome,
                fetched_body_excerpt: self.body.as_deref().map(excerpt_of),
                probe_time: self.probe_time.unwrap_or(0),
                attempt: 1,
            },
            body: self.body.clone(),
        }
    }
}

/// Hex SHA-256 of the URL string; the fixture file stem.
pub fn url_key(url: &str) -> String {
    let digest = Sha256::digest(url.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn open(dir: impl Into<PathBuf>) -> FixtureStore {
        FixtureStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, url: &str) -> PathBuf {
        self.dir.join(format!("{}.json", url_key(url)))
    }

    pub fn lookup(&self, url: &str) -> Result<FixtureEntry, LivenessError> {
        let path = self.entry_path(url);
        let raw = std::fs::read_to_string(&path).map_err(|_| LivenessError::MissingFixture {
            url: url.to_string(),
            path: path.display().to_string(),
        })?;
        FixtureEntry::from_json_str(&raw)
    }

    /// Write one canned response; used by fixture generators and tests.
    pub fn write_entry(&self, url: &str, entry: &FixtureEntry) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut on_disk = entry.clone();
        if on_disk.url.is_none() {
            on_disk.url = Some(url.to_string());
        }
        let json = serde_json::to_string(&on_disk).expect("fixture entry serializes");
        std::fs::write(self.entry_path(url), json + "\n")
    }
}

impl ProbeSource for FixtureStore {
    fn capture(&self, url: &str) -> Result<ProbeCapture, LivenessError> {
        Ok(self.lookup(url)?.to_capture(url))
    }
}

/// In-memory fixture store for tests.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    entries: BTreeMap<String, FixtureEntry>,
}

impl MemoryStore {
    pub fn new() -> MemoryStore {
        MemoryStore::default()
    }

    pub fn insert(&mut self, url: &str, status_code: Option<u16>, body: Option<&str>) {
        self.entries.insert(
            url.to_string(),
            FixtureEntry {
                url: Some(url.to_string()),
                status_code,
                body: body.map(str::to_string),
                probe_time: Some(0),
            },
        );
    }
}

impl ProbeSource for MemoryStore {
    fn capture(&self, url: &str) -> Result<ProbeCapture, LivenessError> {
        let entry = self
            .entries
            .get(url)
            .ok_or_else(|| LivenessError::MissingFixture {
                url: url.to_string(),
                path: "<memory>".to_string(),
            })?;
        Ok(entry.to_capture(url))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_is_stable_sha256() {
        assert_eq!(
            url_key("https://example.test/"),
            // sha256 of the exact string, lowercase hex
            url_key("https://example.test/")
        );
        assert_eq!(url_key("a").len(), 64);
        assert_ne!(url_key("a"), url_key("b"));
    }

    #[test]
    fn store_round_trip_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::open(dir.path());
        let entry = FixtureEntry {
            url: Some("https://x.test/".into()),
            status_code: Some(200),
            body: Some("<html>X</html>".into()),
            probe_time: Some(0),
        };
        store.write_entry("https://x.test/", &entry).unwrap();
        let got = store.lookup("https://x.test/").unwrap();
        assert_eq!(got, entry);
        assert!(matches!(
            store.lookup("https://missing.test/"),
            Err(LivenessError::MissingFixture { .. })
        ));
    }

    #[test]
    fn entry_maps_to_outcomes() {
        let ok = FixtureEntry {
            status_code: Some(200),
            ..Default::default()
        };
        assert_eq!(ok.to_capture("u").result.outcome, ProbeOutcome::Ok);
        let gone = FixtureEntry {
            status_code: Some(404),
            ..Default::default()
        };
        assert_eq!(gone.to_capture("u").result.outcome, ProbeOutcome::NotFound404);
        let dark = FixtureEntry::default();
        assert_eq!(dark.to_capture("u").result.outcome, ProbeOutcome::Unreachable);
    }

    #[test]
    fn malformed_entry_is_format_error() {
        assert!(matches!(
            FixtureEntry::from_json_str("{nope"),
            Err(LivenessError::FixtureFormat(_))
        ));
    }
}
