//! Dataset file formats.
//!
//! The reference format is JSON-lines: one object per line, API rows and
//! mashup rows mixed in one file. A row is a mashup iff it has an `api_ids`
//! key. CSV input is a pair of files (`apis.csv`, `mashups.csv`) with the
//! documented headers; `api_ids` and `successor_ids` are `;`-separated.
//!
//! Malformed rows are collected into the parse outcome, never silently
//! dropped. Duplicate ids are fatal and reported with both rows.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    ApiRecord, Dataset, DatasetError, DatasetMetadata, LabeledStatus, MashupRecord,
    ValidationReport,
};
use crate::date::Day;

pub const APIS_CSV_HEADER: [&str; 9] = [
    "id",
    "name",
    "start",
    "labeled_status",
    "deathpool_date",
    "endpoint_url",
    "primary_category",
    "description",
    "successor_ids",
];

pub const MASHUPS_CSV_HEADER: [&str; 9] = [
    "id",
    "name",
    "start",
    "labeled_status",
    "deathpool_date",
    "homepage_url",
    "primary_category",
    "description",
    "api_ids",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    JsonLines,
    CsvPair,
}

impl std::str::FromStr for DatasetFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json-lines" | "json_lines" | "jsonl" => Ok(DatasetFormat::JsonLines),
            "csv-pair" | "csv_pair" | "csv" => Ok(DatasetFormat::CsvPair),
            other => Err(format!("unknown dataset format `{other}`")),
        }
    }
}

/// A row that could not be parsed, with enough context to fix it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedRow {
    pub source: String,
    pub line: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct ParseOutcome {
    pub dataset: Dataset,
    pub malformed: Vec<MalformedRow>,
}

/// Report emitted by ingestion: record counts, validation flags, malformed rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestReport {
    pub api_count: usize,
    pub mashup_count: usize,
    pub flags: ValidationReport,
    pub malformed: Vec<MalformedRow>,
}

/// Parse a dataset file. For `CsvPair` the path must be a directory
/// containing `apis.csv` and `mashups.csv`.
pub fn parse_dataset(path: &Path, format: DatasetFormat) -> Result<ParseOutcome, DatasetError> {
    match format {
        DatasetFormat::JsonLines => {
            let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_dataset_jsonl(BufReader::new(file), &path.display().to_string())
        }
        DatasetFormat::CsvPair => {
            let apis_path = path.join("apis.csv");
            let mashups_path = path.join("mashups.csv");
            let apis_file = std::fs::File::open(&apis_path).map_err(|source| DatasetError::Io {
                path: apis_path.display().to_string(),
                source,
            })?;
            let mashups_file =
                std::fs::File::open(&mashups_path).map_err(|source| DatasetError::Io {
                    path: mashups_path.display().to_string(),
                    source,
                })?;
            let (apis, mut malformed) =
                parse_apis_csv(apis_file, &apis_path.display().to_string())?;
            let (mashups, mashup_malformed) =
                parse_mashups_csv(mashups_file, &mashups_path.display().to_string())?;
            malformed.extend(mashup_malformed);
            let dataset = build_checked(apis, mashups, path)?;
            Ok(ParseOutcome { dataset, malformed })
        }
    }
}

/// Parse the JSON-lines dataset format from any reader. `source` labels
/// malformed-row entries.
pub fn parse_dataset_jsonl<R: Read>(
    reader: BufReader<R>,
    source: &str,
) -> Result<ParseOutcome, DatasetError> {
    let mut apis: Vec<(usize, ApiRecord)> = Vec::new();
    let mut mashups: Vec<(usize, MashupRecord)> = Vec::new();
    let mut malformed = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: source.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record_line(&line) {
            Ok(RecordLine::Api(rec)) => apis.push((line_no, rec)),
            Ok(RecordLine::Mashup(rec)) => mashups.push((line_no, rec)),
            Err(message) => malformed.push(MalformedRow {
                source: source.to_string(),
                line: line_no,
                message,
            }),
        }
    }
    let dataset = build_checked_with_lines(apis, mashups, source)?;
    Ok(ParseOutcome { dataset, malformed })
}

/// Convenience wrapper over [`parse_dataset_jsonl`] for in-memory input.
pub fn parse_dataset_jsonl_str(input: &str) -> Result<ParseOutcome, DatasetError> {
    parse_dataset_jsonl(BufReader::new(input.as_bytes()), "<memory>")
}

pub enum RecordLine {
    Api(ApiRecord),
    Mashup(MashupRecord),
}

/// Parse one JSON-lines row. The row is a mashup iff it has an `api_ids` key.
pub fn parse_record_line(line: &str) -> Result<RecordLine, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    if !value.is_object() {
        return Err("row is not a JSON object".to_string());
    }
    if value.get("api_ids").is_some() {
        serde_json::from_value::<MashupRecord>(value)
            .map(RecordLine::Mashup)
            .map_err(|e| format!("invalid mashup row: {e}"))
    } else {
        serde_json::from_value::<ApiRecord>(value)
            .map(RecordLine::Api)
            .map_err(|e| format!("invalid api row: {e}"))
    }
}

fn build_checked(
    apis: Vec<(usize, ApiRecord)>,
    mashups: Vec<(usize, MashupRecord)>,
    path: &Path,
) -> Result<Dataset, DatasetError> {
    build_checked_with_lines(apis, mashups, &path.display().to_string())
}

fn build_checked_with_lines(
    apis: Vec<(usize, ApiRecord)>,
    mashups: Vec<(usize, MashupRecord)>,
    source: &str,
) -> Result<Dataset, DatasetError> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (line, id) in apis
        .iter()
        .map(|(l, r)| (*l, &r.id))
        .chain(mashups.iter().map(|(l, r)| (*l, &r.id)))
    {
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(DatasetError::DuplicateId {
                id: id.clone(),
                first: format!("{source}:{first}"),
                second: format!("{source}:{line}"),
            });
        }
    }
    Dataset::new(
        apis.into_iter().map(|(_, r)| r).collect(),
        mashups.into_iter().map(|(_, r)| r).collect(),
        DatasetMetadata {
            source: source.to_string(),
            snapshot_date: None,
        },
    )
}

fn parse_status(raw: &str) -> Result<LabeledStatus, String> {
    match raw.trim() {
        "available" => Ok(LabeledStatus::Available),
        "deprecated" => Ok(LabeledStatus::Deprecated),
        other => Err(format!("unknown labeled_status `{other}`")),
    }
}

fn opt(raw: &str) -> Option<String> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_string())
    }
}

fn split_ids(raw: &str) -> Vec<String> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn check_header(
    headers: &csv::StringRecord,
    expected: &[&str],
    path: &str,
) -> Result<(), DatasetError> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(DatasetError::Schema {
            path: path.to_string(),
            message: format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

/// Parse `apis.csv`. A wrong header is fatal; bad rows are collected.
pub fn parse_apis_csv<R: Read>(
    reader: R,
    source: &str,
) -> Result<(Vec<(usize, ApiRecord)>, Vec<MalformedRow>), DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::Schema {
            path: source.to_string(),
            message: e.to_string(),
        })?
        .clone();
    check_header(&headers, &APIS_CSV_HEADER, source)?;
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2; // header is line 1
        match row {
            Err(e) => malformed.push(MalformedRow {
                source: source.to_string(),
                line,
                message: e.to_string(),
            }),
            Ok(row) => match api_from_csv_row(&row) {
                Ok(rec) => records.push((line, rec)),
                Err(message) => malformed.push(MalformedRow {
                    source: source.to_string(),
                    line,
                    message,
                }),
            },
        }
    }
    Ok((records, malformed))
}

/// Parse `mashups.csv`. A wrong header is fatal; bad rows are collected.
pub fn parse_mashups_csv<R: Read>(
    reader: R,
    source: &str,
) -> Result<(Vec<(usize, MashupRecord)>, Vec<MalformedRow>), DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::Schema {
            path: source.to_string(),
            message: e.to_string(),
        })?
        .clone();
    check_header(&headers, &MASHUPS_CSV_HEADER, source)?;
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2;
        match row {
            Err(e) => malformed.push(MalformedRow {
                source: source.to_string(),
                line,
                message: e.to_string(),
            }),
            Ok(row) => match mashup_from_csv_row(&row) {
                Ok(rec) => records.push((line, rec)),
                Err(message) => malformed.push(MalformedRow {
                    source: source.to_string(),
                    line,
                    message,
                }),
            },
        }
    }
    Ok((records, malformed))
}

fn field<'a>(row: &'a csv::StringRecord, idx: usize, name: &str) -> Result<&'a str, String> {
    row.get(idx).ok_or_else(|| format!("missing column `{name}`"))
}

fn api_from_csv_row(row: &csv::StringRecord) -> Result<ApiRecord, String> {
    Ok(ApiRecord {
        id: field(row, 0, "id")?.trim().to_string(),
        name: field(row, 1, "name")?.trim().to_string(),
        start: Day::parse_iso(field(row, 2, "start")?).map_err(|e| e.to_string())?,
        labeled_status: parse_status(field(row, 3, "labeled_status")?)?,
        deathpool_date: match opt(field(row, 4, "deathpool_date")?) {
            Some(s) => Some(Day::parse_iso(&s).map_err(|e| e.to_string())?),
            None => None,
        },
        endpoint_url: opt(field(row, 5, "endpoint_url")?),
        primary_category: field(row, 6, "primary_category")?.trim().to_string(),
        description: field(row, 7, "description")?.to_string(),
        successor_ids: split_ids(field(row, 8, "successor_ids")?),
    })
}

fn mashup_from_csv_row(row: &csv::StringRecord) -> Result<MashupRecord, String> {
    Ok(MashupRecord {
        id: field(row, 0, "id")?.trim().to_string(),
        name: field(row, 1, "name")?.trim().to_string(),
        start: Day::parse_iso(field(row, 2, "start")?).map_err(|e| e.to_string())?,
        labeled_status: parse_status(field(row, 3, "labeled_status")?)?,
        deathpool_date: match opt(field(row, 4, "deathpool_date")?) {
            Some(s) => Some(Day::parse_iso(&s).map_err(|e| e.to_string())?),
            None => None,
        },
        homepage_url: opt(field(row, 5, "homepage_url")?),
        primary_category: field(row, 6, "primary_category")?.trim().to_string(),
        description: field(row, 7, "description")?.to_string(),
        api_ids: split_ids(field(row, 8, "api_ids")?),
    })
}

/// Write the dataset in the JSON-lines reference format, APIs before
/// mashups, each group in id order.
pub fn write_dataset_jsonl<W: Write>(ds: &Dataset, mut writer: W) -> std::io::Result<()> {
    for api in ds.apis() {
        serde_json::to_writer(&mut writer, api)?;
        writer.write_all(b"\n")?;
    }
    for mashup in ds.mashups() {
        serde_json::to_writer(&mut writer, mashup)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RecordFlag;

    const FIXTURE: &str = r#"{"id":"/api/twitter","name":"Twitter","start":"2005-12-01","labeled_status":"available","endpoint_url":"https://api.twitter.test/","primary_category":"Social","description":"Microblogging"}
{"id":"/api/google-maps","name":"Google Maps","start":"2005-12-05","labeled_status":"available","primary_category":"Mapping","description":"Tiles"}
{"id":"/api/flickr","name":"Flickr","start":"2005-09-15","labeled_status":"deprecated","deathpool_date":"2018-07-01","primary_category":"Photos","description":"Photo sharing"}
{"id":"/mashup/photomap","name":"PhotoMap","start":"2007-03-01","labeled_status":"available","homepage_url":"https://photomap.test/","primary_category":"Mapping","description":"","api_ids":["/api/google-maps","/api/flickr"]}
{"id":"/mashup/tweetwall","name":"TweetWall","start":"2009-05-01","labeled_status":"available","primary_category":"Social","description":"","api_ids":["/api/twitter"]}
"#;

    #[test]
    fn jsonl_fixture_round_trip() {
        let outcome = parse_dataset_jsonl_str(FIXTURE).unwrap();
        assert!(outcome.malformed.is_empty());
        let ds = outcome.dataset;
        assert_eq!((ds.api_count(), ds.mashup_count()), (3, 2));

        let mut buf = Vec::new();
        write_dataset_jsonl(&ds, &mut buf).unwrap();
        let reparsed = parse_dataset_jsonl_str(std::str::from_utf8(&buf).unwrap())
            .unwrap()
            .dataset;
        let orig: Vec<_> = ds.apis().cloned().collect();
        let back: Vec<_> = reparsed.apis().cloned().collect();
        assert_eq!(orig, back);
        let orig: Vec<_> = ds.mashups().cloned().collect();
        let back: Vec<_> = reparsed.mashups().cloned().collect();
        assert_eq!(orig, back);
    }

    #[test]
    fn malformed_rows_collected_not_dropped() {
        let input = format!("{FIXTURE}{{\"id\":\"/api/broken\"\nnot json at all\n");
        let outcome = parse_dataset_jsonl_str(&input).unwrap();
        assert_eq!(outcome.dataset.api_count(), 3);
        assert_eq!(outcome.malformed.len(), 2);
        assert_eq!(outcome.malformed[0].line, 6);
        assert_eq!(outcome.malformed[1].line, 7);
    }

    #[test]
    fn bad_date_is_malformed_row() {
        let input = r#"{"id":"/api/x","name":"X","start":"04/2014","labeled_status":"available","primary_category":"Tools","description":""}"#;
        let outcome = parse_dataset_jsonl_str(input).unwrap();
        assert_eq!(outcome.dataset.api_count(), 0);
        assert_eq!(outcome.malformed.len(), 1);
        assert!(outcome.malformed[0].message.contains("invalid api row"));
    }

    #[test]
    fn duplicate_id_reports_both_rows() {
        let input = r#"{"id":"/api/x","name":"X","start":"2010-01-01","labeled_status":"available","primary_category":"Tools","description":""}
{"id":"/api/x","name":"X again","start":"2011-01-01","labeled_status":"available","primary_category":"Tools","description":""}
"#;
        let err = parse_dataset_jsonl_str(input).unwrap_err();
        match err {
            DatasetError::DuplicateId { id, first, second } => {
                assert_eq!(id, "/api/x");
                assert!(first.ends_with(":1"), "first was {first}");
                assert!(second.ends_with(":2"), "second was {second}");
            }
            other => panic!("expected DuplicateId, got {other:?}"),
        }
    }

    #[test]
    fn implausible_death_flag_from_parse() {
        let input = r#"{"id":"/api/iron-mountain-policy-center","name":"Iron Mountain Policy Center","start":"2020-01-21","labeled_status":"deprecated","deathpool_date":"2014-04-01","primary_category":"Enterprise","description":""}"#;
        let ds = parse_dataset_jsonl_str(input).unwrap().dataset;
        assert!(ds.has_flag("/api/iron-mountain-policy-center", RecordFlag::ImplausibleDeath));
    }

    #[test]
    fn csv_pair_matches_jsonl() {
        let apis_csv = "\
id,name,start,labeled_status,deathpool_date,endpoint_url,primary_category,description,successor_ids
/api/twitter,Twitter,2005-12-01,available,,https://api.twitter.test/,Social,Microblogging,
/api/google-maps,Google Maps,2005-12-05,available,,,Mapping,Tiles,
/api/flickr,Flickr,2005-09-15,deprecated,2018-07-01,,Photos,Photo sharing,
";
        let mashups_csv = "\
id,name,start,labeled_status,deathpool_date,homepage_url,primary_category,description,api_ids
/mashup/photomap,PhotoMap,2007-03-01,available,,https://photomap.test/,Mapping,,/api/google-maps;/api/flickr
/mashup/tweetwall,TweetWall,2009-05-01,available,,,Social,,/api/twitter
";
        let (apis, bad_a) = parse_apis_csv(apis_csv.as_bytes(), "apis.csv").unwrap();
        let (mashups, bad_m) = parse_mashups_csv(mashups_csv.as_bytes(), "mashups.csv").unwrap();
        assert!(bad_a.is_empty() && bad_m.is_empty());

        let from_jsonl = parse_dataset_jsonl_str(FIXTURE).unwrap().dataset;
        let from_csv = Dataset::new(
            apis.into_iter().map(|(_, r)| r).collect(),
            mashups.into_iter().map(|(_, r)| r).collect(),
            DatasetMetadata::default(),
        )
        .unwrap();
        let a: Vec<_> = from_jsonl.apis().cloned().collect();
        let b: Vec<_> = from_csv.apis().cloned().collect();
        assert_eq!(a, b);
        let a: Vec<_> = from_jsonl.mashups().cloned().collect();
        let b: Vec<_> = from_csv.mashups().cloned().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_header_mismatch_is_fatal() {
        let bad = "id,name\n/api/x,X\n";
        assert!(matches!(
            parse_apis_csv(bad.as_bytes(), "apis.csv"),
            Err(DatasetError::Schema { .. })
        ));
    }

    #[test]
    fn csv_bad_row_collected() {
        let apis_csv = "\
id,name,start,labeled_status,deathpool_date,endpoint_url,primary_category,description,successor_ids
/api/ok,OK,2010-01-01,available,,,Tools,,
/api/bad,Bad,not-a-date,available,,,Tools,,
";
        let (apis, bad) = parse_apis_csv(apis_csv.as_bytes(), "apis.csv").unwrap();
        assert_eq!(apis.len(), 1);
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].line, 3);
    }
}
