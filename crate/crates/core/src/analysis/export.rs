//! Plot-ready exports: one CSV per research question, long format, plus a
//! combined JSON report.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    CategoryPopularity, ComponentStats, PairSurvivalStat, SizeStats, SurvivalBucket, TimeSeries,
};
use crate::dataset::EntityKind;
use crate::date::Day;

/// Power-law fit outcome for one snapshot, flattened for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq2Snapshot {
    pub t: Day,
    /// Nodes in the co-occurrence snapshot (isolated included).
    pub node_count: usize,
    /// Non-isolated nodes (the fitting sample size).
    pub positive_count: usize,
    /// "ok" or the fit error kind.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xmin: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_tail: Option<usize>,
    #[serde(default)]
    pub low_confidence: bool,
    pub histogram: BTreeMap<u64, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq4Row {
    pub t: Day,
    #[serde(flatten)]
    pub stats: ComponentStats,
}

/// The combined analysis report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(Day, Day)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rq1: Vec<TimeSeries>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rq2: Vec<Rq2Snapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rq3_diversity: Option<TimeSeries>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rq3_popularity: Vec<CategoryPopularity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rq4: Vec<Rq4Row>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rq5_pairs: Vec<PairSurvivalStat>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rq5_curve: Vec<SurvivalBucket>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rq6_new_only: Vec<SizeStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rq6_all_active: Vec<SizeStats>,
    /// Explicit assumptions and flags the numbers were produced under.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EvolutionReport {
    pub fn write_json<W: Write>(&self, writer: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

type CsvResult = Result<(), csv::Error>;

/// `kind,scenario,t,count`
pub fn write_rq1_csv<W: Write>(series: &[(EntityKind, &TimeSeries)], writer: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["kind", "scenario", "t", "count"])?;
    for (kind, ts) in series {
        let scenario = ts.scenario.map(|s| s.as_str()).unwrap_or("corrected");
        for (t, value) in &ts.points {
            w.write_record([
                kind.to_string(),
                scenario.to_string(),
                t.to_string(),
                format!("{value}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t,node_count,positive_count,status,alpha,xmin,ks,p_value,n_tail,low_confidence`
pub fn write_rq2_csv<W: Write>(rows: &[Rq2Snapshot], writer: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "t",
        "node_count",
        "positive_count",
        "status",
        "alpha",
        "xmin",
        "ks",
        "p_value",
        "n_tail",
        "low_confidence",
    ])?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for row in rows {
        w.write_record([
            row.t.to_string(),
            row.node_count.to_string(),
            row.positive_count.to_string(),
            row.status.clone(),
            opt(row.alpha.map(|v| format!("{v}"))),
            opt(row.xmin.map(|v| v.to_string())),
            opt(row.ks.map(|v| format!("{v}"))),
            opt(row.p_value.map(|v| format!("{v}"))),
            opt(row.n_tail.map(|v| v.to_string())),
            row.low_confidence.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,degree,frequency`
pub fn write_rq2_degrees_csv<W: Write>(rows: &[Rq2Snapshot], writer: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "degree", "frequency"])?;
    for row in rows {
        for (degree, frequency) in &row.histogram {
            w.write_record([
                row.t.to_string(),
                degree.to_string(),
                frequency.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t,diversity`
pub fn write_rq3_csv<W: Write>(diversity: &TimeSeries, writer: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "diversity"])?;
    for (t, value) in &diversity.points {
        w.write_record([t.to_string(), format!("{value}")])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,category,api_count`
pub fn write_rq3_categories_csv<W: Write>(
    rows: &[CategoryPopularity],
    writer: W,
) -> CsvResult {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "category", "api_count"])?;
    for row in rows {
        w.write_record([
            row.t.to_string(),
            row.category.clone(),
            row.api_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,components,components_gt4,largest`
pub fn write_rq4_csv<W: Write>(rows: &[Rq4Row], writer: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "components", "components_gt4", "largest"])?;
    for row in rows {
        w.write_record([
            row.t.to_string(),
            row.stats.components.to_string(),
            row.stats.components_gt4.to_string(),
            row.stats.largest.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `api_a,api_b,active_use,total_use,survival_rate,avg_days`
pub fn write_rq5_pairs_csv<W: Write>(rows: &[PairSurvivalStat], writer: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "api_a",
        "api_b",
        "active_use",
        "total_use",
        "survival_rate",
        "avg_days",
    ])?;
    for row in rows {
        w.write_record([
            row.api_a.clone(),
            row.api_b.clone(),
            row.active_use.to_string(),
            row.total_use.to_string(),
            format!("{}", row.survival_rate),
            format!("{}", row.avg_days),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `bucket_lo,bucket_hi,pairs,mean_survival_rate`
pub fn write_rq5_curve_csv<W: Write>(rows: &[SurvivalBucket], writer: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bucket_lo", "bucket_hi", "pairs", "mean_survival_rate"])?;
    for row in rows {
        w.write_record([
            row.lo.to_string(),
            row.hi.to_string(),
            row.pairs.to_string(),
            format!("{}", row.mean_survival_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `population,t,n,min,q1,median,q3,max,mean`
pub fn write_rq6_csv<W: Write>(
    sections: &[(&str, &[SizeStats])],
    writer: W,
) -> CsvResult {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["population", "t", "n", "min", "q1", "median", "q3", "max", "mean"])?;
    for (population, rows) in sections {
        for row in *rows {
            w.write_record([
                population.to_string(),
                row.t.to_string(),
                row.n.to_string(),
                format!("{}", row.min),
                format!("{}", row.q1),
                format!("{}", row.median),
                format!("{}", row.q3),
                format!("{}", row.max),
                format!("{}", row.mean),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
