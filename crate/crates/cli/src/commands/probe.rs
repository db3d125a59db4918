use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Duration;

use clap::Args;

use ecolife::dataset::io::parse_dataset;
use ecolife::liveness::{
    classify_all, merge_captures, write_verdicts_jsonl, FixtureStore, LiveProber, LivenessConfig,
    LivenessError, PhraseList, ProbeCapture, ProbePolicy, ProbeSource, SuccessorTable,
};

use super::ensure_parent;
use crate::config::{RunConfig, FIXTURE_STORE_ENV};
use crate::CliError;

/// Transfer/split successor table identified for the studied snapshot era,
/// shipped with the toolkit; override with --successors.
const BUILTIN_SUCCESSORS: &str = include_str!("../../data/successors.json");

#[derive(Args, Debug)]
pub struct ProbeArgs {
    /// Canonical dataset (JSON-lines), as produced by `ingest`.
    #[arg(long)]
    dataset: PathBuf,
    /// `fixture` replays canned responses; `live` sends HTTP requests.
    #[arg(long, default_value = "fixture")]
    mode: String,
    /// Fixture store directory (falls back to config, then $ECOLIFE_FIXTURE_STORE).
    #[arg(long)]
    fixture_store: Option<PathBuf>,
    /// Merge N probe passes with best-of semantics.
    #[arg(long)]
    repeat: Option<u32>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    retries: Option<u32>,
    /// Successor table JSON (id -> successor ids).
    #[arg(long)]
    successors: Option<PathBuf>,
    /// Verdict JSON-lines output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

struct RepeatSource<'a> {
    inner: &'a dyn ProbeSource,
    passes: u32,
}

impl ProbeSource for RepeatSource<'_> {
    fn capture(&self, url: &str) -> Result<ProbeCapture, LivenessError> {
        let mut captures = Vec::with_capacity(self.passes as usize);
        for _ in 0..self.passes.max(1) {
            captures.push(self.inner.capture(url)?);
        }
        Ok(merge_captures(captures).expect("at least one pass"))
    }
}

impl ProbeArgs {
    pub fn config_path(&self) -> Option<&PathBuf> {
        self.config.as_ref()
    }
}

pub fn run(args: ProbeArgs) -> Result<(), CliError> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let outcome = parse_dataset(&args.dataset, ecolife::dataset::io::DatasetFormat::JsonLines)?;
    let ds = outcome.dataset;

    let successors = match args.successors.or(config.probe.successors.clone()) {
        Some(path) => SuccessorTable::from_path(&path)?,
        None => SuccessorTable::from_json_str(BUILTIN_SUCCESSORS)
            .expect("builtin successor table is valid"),
    };
    let mut phrases = PhraseList::default();
    if let Some(custom) = config.probe.phrases.clone() {
        phrases = PhraseList {
            version: config
                .probe
                .phrases_version
                .clone()
                .unwrap_or_else(|| "custom".to_string()),
            phrases: custom,
        };
    }
    let liveness_config = LivenessConfig {
        phrases,
        successors,
    };

    let mode = args.mode.as_str();
    let repeat = args.repeat.or(config.probe.repeat).unwrap_or(1);
    let verdicts = match mode {
        "fixture" => {
            let dir = args
                .fixture_store
                .or(config.probe.fixture_store.clone())
                .or_else(|| std::env::var_os(FIXTURE_STORE_ENV).map(PathBuf::from))
                .ok_or_else(|| {
                    CliError::usage(
                        "fixture mode needs --fixture-store, [probe].fixture_store, \
                         or $ECOLIFE_FIXTURE_STORE",
                    )
                })?;
            if !dir.is_dir() {
                return Err(CliError::usage(format!(
                    "fixture store `{}` is not a directory",
                    dir.display()
                )));
            }
            let store = FixtureStore::open(dir);
            let source = RepeatSource {
                inner: &store,
                passes: repeat,
            };
            classify_all(&ds, &source, &liveness_config)?
        }
        "live" => {
            let policy = ProbePolicy {
                timeout: Duration::from_secs(
                    args.timeout_secs.or(config.probe.timeout_secs).unwrap_or(10),
                ),
                retries: args.retries.or(config.probe.retries).unwrap_or(3),
                ..ProbePolicy::default()
            };
            let prober = LiveProber::new(policy)?;
            let source = RepeatSource {
                inner: &prober,
                passes: repeat,
            };
            classify_all(&ds, &source, &liveness_config)?
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown probe mode `{other}` (expected fixture|live)"
            )))
        }
    };

    ensure_parent(&args.out)?;
    let file = std::fs::File::create(&args.out)?;
    write_verdicts_jsonl(&verdicts, BufWriter::new(file))?;

    let degraded = verdicts
        .values()
        .flat_map(|v| &v.evidence)
        .filter(|e| matches!(e, ecolife::liveness::Evidence::Probe { result }
            if result.fetched_body_excerpt.as_deref().is_some_and(|s| s.starts_with("probe error:"))))
        .count();
    println!(
        "classified {} entities ({} probe warnings)",
        verdicts.len(),
        degraded
    );
    Ok(())
}

/// Used by `report` to re-run probing from a config alone.
pub fn run_from_parts(
    dataset: PathBuf,
    out: PathBuf,
    mode: String,
    config_path: Option<PathBuf>,
) -> Result<(), CliError> {
    run(ProbeArgs {
        dataset,
        mode,
        fixture_store: None,
        repeat: None,
        timeout_secs: None,
        retries: None,
        successors: None,
        out,
        config: config_path,
    })
}
