use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::Args;

use ecolife::analysis::export::{
    write_rq1_csv, write_rq2_csv, write_rq2_degrees_csv, write_rq3_categories_csv, write_rq3_csv,
    write_rq4_csv, write_rq5_curve_csv, write_rq5_pairs_csv, write_rq6_csv, EvolutionReport,
    Rq2Snapshot, Rq4Row,
};
use ecolife::analysis::{
    degree_distribution, fit_power_law, positive_degrees, pvalue_bootstrap, rq1_counts,
    rq3_diversity, rq4_components, rq5_pair_survival, rq6_size_stats, AnalysisError, Scenario,
    SizePopulation, TimeSeries,
};
use ecolife::correction::{parse_corrected_jsonl, CorrectedDataset};
use ecolife::dataset::EntityKind;
use ecolife::date::{Cadence, Day};
use ecolife::networks::{
    build_ma, snapshot_series, write_aa_edge_list, write_cc_edge_list, SnapshotTriple,
};

use super::ensure_parent;
use crate::config::{parse_window, RunConfig};
use crate::CliError;

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Corrected dataset (JSON-lines), as produced by `correct`.
    #[arg(long)]
    corrected: PathBuf,
    /// Which analyses to run: `all` or comma-separated rq1..rq6.
    #[arg(long, default_value = "all")]
    which: String,
    /// Run seed for the bootstrap.
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot cadence for rq2/rq3/rq4/rq6 (default yearly) and, when
    /// given explicitly, rq1 too.
    #[arg(long)]
    cadence: Option<Cadence>,
    /// Analysis range as FROM:TO (default: derived from the data).
    #[arg(long, value_parser = parse_window)]
    range: Option<(Day, Day)>,
    /// Restrict rq1 to one scenario (default: all three).
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Reference date for rq5 survival (default: beta).
    #[arg(long)]
    reference_date: Option<Day>,
    /// Bootstrap replicates for rq2 (default 1000).
    #[arg(long)]
    n_boot: Option<usize>,
    /// Also write per-snapshot AA/CC edge lists into this directory.
    #[arg(long)]
    export_edges: Option<PathBuf>,
    /// Output directory (one CSV per research question + report.json).
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_which(raw: &str) -> Result<BTreeSet<u8>, CliError> {
    if raw == "all" {
        return Ok((1..=6).collect());
    }
    let mut set = BTreeSet::new();
    for part in raw.split(',') {
        match part.trim() {
            "rq1" => set.insert(1),
            "rq2" => set.insert(2),
            "rq3" => set.insert(3),
            "rq4" => set.insert(4),
            "rq5" => set.insert(5),
            "rq6" => set.insert(6),
            other => {
                return Err(CliError::usage(
                    AnalysisError::UnknownRq(other.to_string()).to_string(),
                ))
            }
        };
    }
    Ok(set)
}

/// Range fallback: earliest start to the latest of (beta, any end date).
fn derive_range(corrected: &CorrectedDataset) -> Option<(Day, Day)> {
    let mut min_start: Option<Day> = None;
    let mut max_end: Option<Day> = None;
    for entity in corrected.entities.values() {
        min_start = Some(min_start.map_or(entity.start, |m| m.min(entity.start)));
        let hi = entity.end.unwrap_or(entity.beta).max(entity.beta);
        max_end = Some(max_end.map_or(hi, |m| m.max(hi)));
    }
    Some((min_start?, max_end?))
}

impl AnalyzeArgs {
    pub fn config_path(&self) -> Option<&PathBuf> {
        self.config.as_ref()
    }
}

pub fn run(args: AnalyzeArgs) -> Result<(), CliError> {
    let config = RunConfig::load_opt(args.config.as_ref())?;
    let which = parse_which(&args.which)?;
    let seed = args
        .seed
        .or(config.seed)
        .ok_or_else(|| CliError::usage("--seed is required (bootstrap must be reproducible)"))?;

    let file = File::open(&args.corrected).map_err(|e| {
        CliError::usage(format!("cannot read `{}`: {e}", args.corrected.display()))
    })?;
    let corrected = parse_corrected_jsonl(BufReader::new(file))?;

    let range = args
        .range
        .or(config.analyze.range.map(|w| (w.from, w.to)))
        .or_else(|| derive_range(&corrected));
    let cadence = args.cadence.or(config.analyze.cadence).unwrap_or(Cadence::Yearly);
    // rq1 is daily by default (its whole point is the fine-grained shape);
    // an explicit --cadence overrides that too.
    let rq1_cadence = args
        .cadence
        .or(config.analyze.rq1_cadence)
        .unwrap_or(Cadence::Daily);
    let n_boot = args.n_boot.or(config.analyze.n_boot).unwrap_or(1000);
    let beta = corrected
        .entities
        .values()
        .next()
        .map(|e| e.beta)
        .unwrap_or_else(|| Day::parse_iso("2020-09-10").expect("valid date"));
    let reference_date = args
        .reference_date
        .or(config.analyze.reference_date)
        .unwrap_or(beta);
    let scenario_filter: Option<Scenario> = match (&args.scenario, &config.analyze.scenario) {
        (Some(s), _) => Some(*s),
        (None, Some(raw)) => Some(raw.parse().map_err(CliError::usage)?),
        (None, None) => None,
    };

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::usage(format!("cannot create `{}`: {e}", args.out_dir.display())))?;

    let mut report = EvolutionReport {
        seed,
        range,
        ..EvolutionReport::default()
    };
    report.notes.push(
        "rq5.avg_days measures mashup longevity clipped at the reference date; the source \
         data does not distinguish pair-co-usage duration"
            .to_string(),
    );
    report.notes.push(
        "rq3 diversity counts categories of non-isolated APIs only (isolated APIs removed \
         before aggregation)"
            .to_string(),
    );

    // Snapshot series shared by rq2/rq3/rq4.
    let needs_series = which.intersection(&[2u8, 3, 4].into()).next().is_some();
    let series: Vec<SnapshotTriple> = match (needs_series, range) {
        (true, Some((from, to))) => {
            let net = build_ma(&corrected);
            snapshot_series(&net, cadence, from, to)
        }
        _ => Vec::new(),
    };

    if let Some(dir) = &args.export_edges {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::usage(format!("cannot create `{}`: {e}", dir.display())))?;
        for triple in &series {
            let aa_path = dir.join(format!("aa_{}.txt", triple.t));
            write_aa_edge_list(&triple.aa, BufWriter::new(File::create(aa_path)?))?;
            let cc_path = dir.join(format!("cc_{}.txt", triple.t));
            write_cc_edge_list(&triple.cc, BufWriter::new(File::create(cc_path)?))?;
        }
    }

    if which.contains(&1) {
        if let Some((from, to)) = range {
            let scenarios: Vec<Scenario> = match scenario_filter {
                Some(s) => vec![s],
                None => Scenario::ALL.to_vec(),
            };
            let mut table: Vec<(EntityKind, TimeSeries)> = Vec::new();
            for kind in [EntityKind::Api, EntityKind::Mashup] {
                for &scenario in &scenarios {
                    table.push((
                        kind,
                        rq1_counts(&corrected, kind, rq1_cadence, from, to, scenario),
                    ));
                }
            }
            let refs: Vec<(EntityKind, &TimeSeries)> =
                table.iter().map(|(k, ts)| (*k, ts)).collect();
            write_rq1_csv(&refs, file_at(&args.out_dir, "rq1.csv")?)
                .map_err(|e| CliError::data(e.to_string()))?;
            report.rq1 = table.into_iter().map(|(_, ts)| ts).collect();
        }
    }

    if which.contains(&2) {
        let rows: Vec<Rq2Snapshot> = series
            .iter()
            .enumerate()
            .map(|(i, triple)| {
                let histogram = degree_distribution(&triple.aa);
                let degrees = positive_degrees(&triple.aa);
                let mut row = Rq2Snapshot {
                    t: triple.t,
                    node_count: triple.aa.nodes.len(),
                    positive_count: degrees.len(),
                    status: "ok".to_string(),
                    alpha: None,
                    xmin: None,
                    ks: None,
                    p_value: None,
                    n_tail: None,
                    low_confidence: false,
                    histogram,
                };
                match fit_power_law(&degrees) {
                    Ok(fit) => {
                        row.alpha = Some(fit.alpha);
                        row.xmin = Some(fit.xmin);
                        row.ks = Some(fit.ks);
                        row.n_tail = Some(fit.n_tail);
                        row.low_confidence = fit.low_confidence;
                        // Replicate seed derives from (run seed, snapshot
                        // index) so worker count cannot matter.
                        match pvalue_bootstrap(&fit, &degrees, n_boot, seed ^ (i as u64) << 17) {
                            Ok(boot) => row.p_value = Some(boot.p_value),
                            Err(e) => row.status = e.to_string(),
                        }
                    }
                    Err(e) => row.status = error_tag(&e),
                }
                row
            })
            .collect();
        write_rq2_csv(&rows, file_at(&args.out_dir, "rq2.csv")?)
            .map_err(|e| CliError::data(e.to_string()))?;
        write_rq2_degrees_csv(&rows, file_at(&args.out_dir, "rq2_degrees.csv")?)
            .map_err(|e| CliError::data(e.to_string()))?;
        report.rq2 = rows;
    }

    if which.contains(&3) {
        let category_of = corrected.category_of();
        let (diversity, popularity) = rq3_diversity(&series, &category_of);
        write_rq3_csv(&diversity, file_at(&args.out_dir, "rq3.csv")?)
            .map_err(|e| CliError::data(e.to_string()))?;
        write_rq3_categories_csv(&popularity, file_at(&args.out_dir, "rq3_categories.csv")?)
            .map_err(|e| CliError::data(e.to_string()))?;
        report.rq3_diversity = Some(diversity);
        report.rq3_popularity = popularity;
    }

    if which.contains(&4) {
        let rows: Vec<Rq4Row> = series
            .iter()
            .map(|triple| Rq4Row {
                t: triple.t,
                stats: rq4_components(&triple.aa),
            })
            .collect();
        write_rq4_csv(&rows, file_at(&args.out_dir, "rq4.csv")?)
            .map_err(|e| CliError::data(e.to_string()))?;
        report.rq4 = rows;
    }

    if which.contains(&5) {
        let (pairs, curve) = rq5_pair_survival(&corrected, reference_date);
        write_rq5_pairs_csv(&pairs, file_at(&args.out_dir, "rq5_pairs.csv")?)
            .map_err(|e| CliError::data(e.to_string()))?;
        write_rq5_curve_csv(&curve, file_at(&args.out_dir, "rq5_curve.csv")?)
            .map_err(|e| CliError::data(e.to_string()))?;
        report.rq5_pairs = pairs;
        report.rq5_curve = curve;
    }

    if which.contains(&6) {
        if let Some((from, to)) = range {
            let new_only =
                rq6_size_stats(&corrected, cadence, from, to, SizePopulation::NewOnly);
            let all_active =
                rq6_size_stats(&corrected, cadence, from, to, SizePopulation::AllActive);
            write_rq6_csv(
                &[("new_only", new_only.as_slice()), ("all_active", all_active.as_slice())],
                file_at(&args.out_dir, "rq6.csv")?,
            )
            .map_err(|e| CliError::data(e.to_string()))?;
            report.rq6_new_only = new_only;
            report.rq6_all_active = all_active;
        } else {
            // Preserve well-formed outputs for an empty corrected set.
            write_rq6_csv(&[("new_only", &[]), ("all_active", &[])], file_at(&args.out_dir, "rq6.csv")?)
                .map_err(|e| CliError::data(e.to_string()))?;
        }
    }

    report
        .write_json(file_at(&args.out_dir, "report.json")?)
        .map_err(|e| CliError::data(e.to_string()))?;
    println!(
        "analyzed rq {:?} over {} entities -> {}",
        which,
        corrected.entities.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn error_tag(e: &AnalysisError) -> String {
    match e {
        AnalysisError::NoSpread => "no_spread".to_string(),
        AnalysisError::LowSample { .. } => "low_sample".to_string(),
        AnalysisError::NonPositiveDegree => "non_positive_degree".to_string(),
        other => other.to_string(),
    }
}

fn file_at(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    ensure_parent(&path)?;
    Ok(BufWriter::new(File::create(path)?))
}

/// Used by `report` to run analysis from a config alone.
pub fn run_from_parts(
    corrected: PathBuf,
    out_dir: PathBuf,
    config_path: Option<PathBuf>,
) -> Result<(), CliError> {
    run(AnalyzeArgs {
        corrected,
        which: "all".to_string(),
        seed: None,
        cadence: None,
        range: None,
        scenario: None,
        reference_date: None,
        n_boot: None,
        export_edges: None,
        out_dir,
        config: config_path,
    })
}
