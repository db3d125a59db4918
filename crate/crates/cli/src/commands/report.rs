use std::path::PathBuf;

use clap::Args;

use ecolife::dataset::io::DatasetFormat;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Run configuration; needs [paths] input/format/out_dir, a seed, and
    /// probe settings.
    #[arg(long)]
    config: PathBuf,
}

impl ReportArgs {
    pub fn config_path(&self) -> &PathBuf {
        &self.config
    }
}

/// Full pipeline: ingest -> probe -> correct -> analyze, all artifacts under
/// the configured output directory.
pub fn run(args: ReportArgs) -> Result<(), CliError> {
    let config = RunConfig::load(&args.config)?;
    let input = config
        .paths
        .input
        .clone()
        .ok_or_else(|| CliError::usage("report needs [paths].input"))?;
    let out_dir = config
        .paths
        .out_dir
        .clone()
        .ok_or_else(|| CliError::usage("report needs [paths].out_dir"))?;
    let format = config.paths.format.unwrap_or(DatasetFormat::JsonLines);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::usage(format!("cannot create `{}`: {e}", out_dir.display())))?;

    let dataset_path = out_dir.join("dataset.jsonl");
    let report_path = out_dir.join("validation_report.json");
    let verdicts_path = out_dir.join("verdicts.jsonl");
    let corrected_path = out_dir.join("corrected.jsonl");
    let summary_path = out_dir.join("correct_summary.json");
    let analysis_dir = out_dir.join("analysis");

    super::ingest::run(super::ingest::IngestArgs::from_parts(
        input,
        format,
        dataset_path.clone(),
        report_path,
    ))?;
    let mode = config.probe.mode.clone().unwrap_or_else(|| "fixture".to_string());
    super::probe::run_from_parts(
        dataset_path.clone(),
        verdicts_path.clone(),
        mode,
        Some(args.config.clone()),
    )?;
    super::correct::run_from_parts(
        dataset_path,
        verdicts_path,
        corrected_path.clone(),
        summary_path,
        Some(args.config.clone()),
    )?;
    super::analyze::run_from_parts(corrected_path, analysis_dir, Some(args.config.clone()))?;

    println!("pipeline complete -> {}", out_dir.display());
    Ok(())
}
