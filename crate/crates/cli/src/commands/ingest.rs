use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;

use ecolife::dataset::io::{parse_dataset, write_dataset_jsonl, DatasetFormat, IngestReport};
use ecolife::dataset::validate;

use super::ensure_parent;
use crate::CliError;

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Raw dataset: a JSON-lines file, or for csv-pair a directory holding
    /// apis.csv and mashups.csv.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "json-lines")]
    format: DatasetFormat,
    /// Canonical JSON-lines dataset output.
    #[arg(long)]
    out_dataset: PathBuf,
    /// Validation report (JSON) output.
    #[arg(long)]
    out_report: PathBuf,
}

impl IngestArgs {
    pub fn from_parts(
        input: PathBuf,
        format: DatasetFormat,
        out_dataset: PathBuf,
        out_report: PathBuf,
    ) -> IngestArgs {
        IngestArgs {
            input,
            format,
            out_dataset,
            out_report,
        }
    }
}

pub fn run(args: IngestArgs) -> Result<(), CliError> {
    if !args.input.exists() {
        return Err(CliError::usage(format!(
            "input `{}` does not exist",
            args.input.display()
        )));
    }
    let outcome = parse_dataset(&args.input, args.format)?;
    let report = IngestReport {
        api_count: outcome.dataset.api_count(),
        mashup_count: outcome.dataset.mashup_count(),
        flags: validate(&outcome.dataset),
        malformed: outcome.malformed,
    };

    ensure_parent(&args.out_dataset)?;
    let file = std::fs::File::create(&args.out_dataset)?;
    write_dataset_jsonl(&outcome.dataset, BufWriter::new(file))?;

    ensure_parent(&args.out_report)?;
    let file = std::fs::File::create(&args.out_report)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &report)
        .map_err(|e| CliError::data(e.to_string()))?;

    println!(
        "ingested {} apis, {} mashups ({} malformed rows, {} flagged records)",
        report.api_count,
        report.mashup_count,
        report.malformed.len(),
        report.flags.ids.values().flatten().count()
    );
    Ok(())
}
