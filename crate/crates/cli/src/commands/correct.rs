use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use ecolife::correction::{
    apply_corrections, fit_normal_mle_days, write_corrected_jsonl, CorrectionConfig,
    CorrectionWarning, NormalFit, ZBand,
};
use ecolife::correction::z_test;
use ecolife::dataset::io::parse_dataset;
use ecolife::dataset::{deathpool_window, KindFilter};
use ecolife::date::Day;
use ecolife::liveness::parse_verdicts_jsonl;

use super::ensure_parent;
use crate::config::{parse_window, RunConfig};
use crate::CliError;

#[derive(Args, Debug)]
pub struct CorrectArgs {
    /// Canonical dataset (JSON-lines).
    #[arg(long)]
    dataset: PathBuf,
    /// Verdict file from `probe`.
    #[arg(long)]
    verdicts: PathBuf,
    /// Run seed; every sampled death time derives from (seed, entity id).
    #[arg(long)]
    seed: Option<u64>,
    /// Earliest confirmed-unavailable date (upper clamp for sampled ends).
    #[arg(long)]
    beta: Option<Day>,
    /// Deathpool trust window as FROM:TO.
    #[arg(long, value_parser = parse_window)]
    trust_window: Option<(Day, Day)>,
    /// Which entities feed the longevity fit.
    #[arg(long)]
    kind_filter: Option<KindFilter>,
    /// Optional reference longevity sample (JSON array of day counts) to
    /// Z-test the fitted distribution against.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Corrected dataset (JSON-lines) output.
    #[arg(long)]
    out: PathBuf,
    /// Fit summary (JSON) output.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ZSummary {
    z: f64,
    band: ZBand,
    reference_mu_hat: f64,
    reference_sigma2_hat: f64,
    reference_n: usize,
}

#[derive(Debug, Serialize)]
struct CorrectSummary {
    seed: u64,
    beta: Day,
    trust_window: (Day, Day),
    kind_filter: KindFilter,
    n_samples: usize,
    mu_hat: f64,
    sigma2_hat: f64,
    sigma_hat: f64,
    degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_test: Option<ZSummary>,
    warnings: Vec<CorrectionWarning>,
}

impl CorrectArgs {
    pub fn config_path(&self) -> Option<&PathBuf> {
        self.config.as_ref()
    }
}

pub fn run(args: CorrectArgs) -> Result<(), CliError> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let seed = args
        .seed
        .or(config.seed)
        .ok_or_else(|| CliError::usage("--seed is required (sampling must be reproducible)"))?;

    let mut correction_config = CorrectionConfig::new(seed);
    if let Some(beta) = args.beta.or(config.beta) {
        correction_config.beta = beta;
    }
    if let Some(window) = args
        .trust_window
        .or(config.trust_window.map(|w| (w.from, w.to)))
    {
        correction_config.trust_window = window;
    }
    let kind_filter = args
        .kind_filter
        .or(config.correct.kind_filter)
        .unwrap_or(KindFilter::Pooled);

    let ds = parse_dataset(&args.dataset, ecolife::dataset::io::DatasetFormat::JsonLines)?.dataset;
    let verdict_file = std::fs::File::open(&args.verdicts).map_err(|e| {
        CliError::usage(format!("cannot read `{}`: {e}", args.verdicts.display()))
    })?;
    let verdicts = parse_verdicts_jsonl(BufReader::new(verdict_file))?;

    let samples = deathpool_window(
        &ds,
        correction_config.trust_window.0,
        correction_config.trust_window.1,
        kind_filter,
    )?;
    let fit = fit_normal_mle_days(&samples).map_err(|e| {
        CliError::data(format!(
            "trust window {}..{} yields unusable longevity sample: {e}",
            correction_config.trust_window.0, correction_config.trust_window.1
        ))
    })?;

    let z_summary = match args.reference.or(config.correct.reference.clone()) {
        Some(path) => {
            let raw = std::fs::read_to_string(&path)
                .map_err(|e| CliError::usage(format!("cannot read `{}`: {e}", path.display())))?;
            let reference_samples: Vec<i64> = serde_json::from_str(&raw).map_err(|e| {
                CliError::data(format!("reference sample `{}`: {e}", path.display()))
            })?;
            let reference_fit = fit_normal_mle_days(&reference_samples)?;
            let (z, band) = z_test(&fit, &reference_fit);
            Some(ZSummary {
                z,
                band,
                reference_mu_hat: reference_fit.mu_hat,
                reference_sigma2_hat: reference_fit.sigma2_hat,
                reference_n: reference_fit.n,
            })
        }
        None => None,
    };

    let outcome = apply_corrections(&ds, &verdicts, &fit, &correction_config)?;

    ensure_parent(&args.out)?;
    let file = std::fs::File::create(&args.out)?;
    write_corrected_jsonl(&outcome.corrected, BufWriter::new(file))?;

    let summary = CorrectSummary {
        seed,
        beta: correction_config.beta,
        trust_window: correction_config.trust_window,
        kind_filter,
        n_samples: fit.n,
        mu_hat: fit.mu_hat,
        sigma2_hat: fit.sigma2_hat,
        sigma_hat: fit.sigma_hat(),
        degenerate: fit.is_degenerate(),
        z_test: z_summary,
        warnings: outcome.warnings,
    };
    if let Some(path) = &args.summary {
        ensure_parent(path)?;
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), &summary)
            .map_err(|e| CliError::data(e.to_string()))?;
    }

    print_fit_line(&fit, &summary);
    Ok(())
}

fn print_fit_line(fit: &NormalFit, summary: &CorrectSummary) {
    match &summary.z_test {
        Some(z) => println!(
            "fit n={} mu={:.2} sigma2={:.2}; z={:.4} ({:?})",
            fit.n, fit.mu_hat, fit.sigma2_hat, z.z, z.band
        ),
        None => println!("fit n={} mu={:.2} sigma2={:.2}", fit.n, fit.mu_hat, fit.sigma2_hat),
    }
}

/// Used by `report` to run correction from a config alone.
pub fn run_from_parts(
    dataset: PathBuf,
    verdicts: PathBuf,
    out: PathBuf,
    summary: PathBuf,
    config_path: Option<PathBuf>,
) -> Result<(), CliError> {
    run(CorrectArgs {
        dataset,
        verdicts,
        seed: None,
        beta: None,
        trust_window: None,
        kind_filter: None,
        reference: None,
        out,
        summary: Some(summary),
        config: config_path,
    })
}
