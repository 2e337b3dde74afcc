//! File ingestion: CSV and JSON readers for prediction datasets.
//!
//! CSV schemas (UTF-8, `.` decimal separator, no thousands separators):
//!
//! - classification, point predictions: `id,group,label,p_0,...,p_{K-1}`
//! - classification, MC samples: `id,group,label,t,p_0,...,p_{K-1}`
//!   with one row per `(id, t)`
//! - regression, MC samples: `id,group,label,t,mu,var`
//!
//! `group` is blank or 0/1. The JSON format is an object with a top-level
//! `task` field and an `examples` array mirroring [`LabeledExample`]; it is
//! exactly what [`dataset_to_json`] emits, so parse/serialize round-trips are
//! lossless.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::dataset::{
    CategoricalDistribution, DataError, Dataset, GaussianComponent, Group, Label, LabeledExample,
    McClassificationSet, McRegressionSet, Prediction, Task,
};

/// Input file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed file: {detail} (line {line})")]
    MalformedFile { line: usize, detail: String },
    #[error("invalid distribution for example {id}: {source}")]
    InvalidDistribution { id: String, source: DataError },
    #[error("invalid example {id}: {source}")]
    InvalidExample { id: String, source: DataError },
    #[error("input contains no examples")]
    EmptyInput,
    #[error("invalid dataset: {0}")]
    InvalidDataset(#[from] DataError),
}

/// A parsed dataset plus any non-fatal warnings raised while reading it
/// (currently: probability rows renormalized within tolerance).
#[derive(Debug)]
pub struct Parsed {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Parse a prediction file into a validated [`Dataset`].
///
/// Row order is preserved. Probability rows failing the sum-to-one check by
/// at most 1e-6 are renormalized and reported in
/// [`Parsed::warnings`]; larger deviations are
/// [`ParseError::InvalidDistribution`] errors naming the offending row.
pub fn parse_predictions(path: &Path, format: Format, task: Task) -> Result<Parsed, ParseError> {
    let raw = fs::read_to_string(path)?;
    parse_predictions_str(&raw, format, task)
}

/// [`parse_predictions`] over an in-memory string.
pub fn parse_predictions_str(
    raw: &str,
    format: Format,
    task: Task,
) -> Result<Parsed, ParseError> {
    match format {
        Format::Csv => parse_csv(raw, task),
        Format::Json => parse_json(raw, task),
    }
}

/// Guess format and task from the file extension and, for CSV, the header
/// row: a `mu` column means regression, anything else classification.
pub fn sniff(path: &Path) -> Result<(Format, Task), ParseError> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    };
    Ok((format, sniff_task(path, format)?))
}

/// Detect the task of a file whose format is already known.
pub fn sniff_task(path: &Path, format: Format) -> Result<Task, ParseError> {
    let raw = fs::read_to_string(path)?;
    Ok(match format {
        Format::Json => {
            let doc: RawDocument =
                serde_json::from_str(&raw).map_err(|e| ParseError::MalformedFile {
                    line: e.line(),
                    detail: e.to_string(),
                })?;
            doc.task
        }
        Format::Csv => {
            let header = raw.lines().next().unwrap_or("");
            if header.split(',').any(|c| c.trim() == "mu") {
                Task::Regression
            } else {
                Task::Classification
            }
        }
    })
}

/// Serialize a dataset to the JSON interchange format.
pub fn dataset_to_json(dataset: &Dataset) -> String {
    #[derive(serde::Serialize)]
    struct Document<'a> {
        task: Task,
        examples: &'a [LabeledExample],
    }
    serde_json::to_string_pretty(&Document { task: dataset.task(), examples: dataset.examples() })
        .expect("dataset serialization cannot fail")
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CsvSchema {
    Point { classes: usize },
    McClassification { classes: usize },
    McRegression,
}

fn parse_csv(raw: &str, task: Task) -> Result<Parsed, ParseError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(raw.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| malformed(1, &e.to_string()))?
        .iter()
        .map(str::trim)
        .map(String::from)
        .collect::<Vec<_>>();
    let schema = classify_header(&header, task)?;

    let mut warnings = Vec::new();
    let mut examples: Vec<LabeledExample> = Vec::new();
    // MC rows for the same id are merged in first-appearance order.
    let mut open_mc: Vec<(String, McRow)> = Vec::new();

    for (index, record) in reader.records().enumerate() {
        let line = index + 2;
        let record = record.map_err(|e| malformed(line, &e.to_string()))?;
        let fields: Vec<&str> = record.iter().map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(malformed(
                line,
                &format!("expected {} fields, got {}", header.len(), fields.len()),
            ));
        }
        match schema {
            CsvSchema::Point { classes } => {
                let common = parse_common(&fields, line)?;
                let probs = parse_probs(&fields[3..3 + classes], line)?;
                let label = parse_class_label(fields[2], &common.id, line)?;
                let dist = build_distribution(probs, &common.id, &mut warnings)?;
                examples.push(LabeledExample {
                    id: common.id,
                    group: common.group,
                    label,
                    prediction: Prediction::Point(dist),
                });
            }
            CsvSchema::McClassification { classes } => {
                let common = parse_common(&fields, line)?;
                let label = parse_class_label(fields[2], &common.id, line)?;
                let t = parse_sample_index(fields[3], line)?;
                let probs = parse_probs(&fields[4..4 + classes], line)?;
                let dist = build_distribution(probs, &common.id, &mut warnings)?;
                push_mc_row(&mut open_mc, common, label, t, McSample::Classification(dist), line)?;
            }
            CsvSchema::McRegression => {
                let common = parse_common(&fields, line)?;
                let label = Label::Value(parse_number(fields[2], line)?);
                let t = parse_sample_index(fields[3], line)?;
                let mean = parse_number(fields[4], line)?;
                let variance = parse_number(fields[5], line)?;
                let component = GaussianComponent::new(mean, variance)
                    .map_err(|source| ParseError::InvalidExample { id: common.id.clone(), source })?;
                push_mc_row(&mut open_mc, common, label, t, McSample::Regression(component), line)?;
            }
        }
    }

    for (id, row) in open_mc {
        examples.push(finish_mc_row(id, row)?);
    }
    if examples.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let dataset = Dataset::new(task, examples)?;
    Ok(Parsed { dataset, warnings })
}

fn classify_header(header: &[String], task: Task) -> Result<CsvSchema, ParseError> {
    let err = |detail: &str| Err(malformed(1, detail));
    if header.len() < 4 || header[0] != "id" || header[1] != "group" || header[2] != "label" {
        return err("header must start with id,group,label");
    }
    match task {
        Task::Regression => {
            if header[3..] == ["t", "mu", "var"][..] {
                Ok(CsvSchema::McRegression)
            } else {
                err("regression header must be id,group,label,t,mu,var")
            }
        }
        Task::Classification => {
            let (probs_start, mc) = if header[3] == "t" { (4, true) } else { (3, false) };
            let prob_cols = &header[probs_start..];
            if prob_cols.len() < 2 {
                return err("need at least two probability columns p_0,p_1");
            }
            for (k, name) in prob_cols.iter().enumerate() {
                if *name != format!("p_{k}") {
                    return err(&format!("expected probability column p_{k}, found {name}"));
                }
            }
            let classes = prob_cols.len();
            Ok(if mc {
                CsvSchema::McClassification { classes }
            } else {
                CsvSchema::Point { classes }
            })
        }
    }
}

struct CommonFields {
    id: String,
    group: Option<Group>,
}

fn parse_common(fields: &[&str], line: usize) -> Result<CommonFields, ParseError> {
    let id = fields[0].to_string();
    if id.is_empty() {
        return Err(malformed(line, "empty id"));
    }
    let group = match fields[1] {
        "" => None,
        "0" => Some(Group::A0),
        "1" => Some(Group::A1),
        other => return Err(malformed(line, &format!("group must be blank, 0, or 1: {other}"))),
    };
    Ok(CommonFields { id, group })
}

fn parse_number(field: &str, line: usize) -> Result<f64, ParseError> {
    field.parse::<f64>().map_err(|_| malformed(line, &format!("not a number: {field}")))
}

fn parse_probs(fields: &[&str], line: usize) -> Result<Vec<f64>, ParseError> {
    fields.iter().map(|f| parse_number(f, line)).collect()
}

fn parse_class_label(field: &str, id: &str, line: usize) -> Result<Label, ParseError> {
    let value: usize = field
        .parse()
        .map_err(|_| malformed(line, &format!("class label for {id} must be an integer: {field}")))?;
    Ok(Label::Class(value))
}

fn parse_sample_index(field: &str, line: usize) -> Result<usize, ParseError> {
    field.parse().map_err(|_| malformed(line, &format!("sample index t must be an integer: {field}")))
}

fn build_distribution(
    probs: Vec<f64>,
    id: &str,
    warnings: &mut Vec<String>,
) -> Result<CategoricalDistribution, ParseError> {
    let (dist, renormalized) = CategoricalDistribution::new_renormalizing(probs)
        .map_err(|source| ParseError::InvalidDistribution { id: id.to_string(), source })?;
    if renormalized {
        warnings.push(format!("example {id}: probabilities renormalized to sum to 1"));
    }
    Ok(dist)
}

enum McSample {
    Classification(CategoricalDistribution),
    Regression(GaussianComponent),
}

struct McRow {
    group: Option<Group>,
    label: Label,
    samples: Vec<(usize, McSample)>,
}

fn push_mc_row(
    open: &mut Vec<(String, McRow)>,
    common: CommonFields,
    label: Label,
    t: usize,
    sample: McSample,
    line: usize,
) -> Result<(), ParseError> {
    if let Some((_, row)) = open.iter_mut().find(|(id, _)| *id == common.id) {
        if row.group != common.group {
            return Err(malformed(line, &format!("group differs across rows of id {}", common.id)));
        }
        if row.label != label {
            return Err(malformed(line, &format!("label differs across rows of id {}", common.id)));
        }
        if row.samples.iter().any(|(existing, _)| *existing == t) {
            return Err(malformed(line, &format!("duplicate sample index t={t} for id {}", common.id)));
        }
        row.samples.push((t, sample));
    } else {
        open.push((common.id, McRow { group: common.group, label, samples: vec![(t, sample)] }));
    }
    Ok(())
}

fn finish_mc_row(id: String, mut row: McRow) -> Result<LabeledExample, ParseError> {
    row.samples.sort_by_key(|(t, _)| *t);
    let prediction = match row.samples.first() {
        Some((_, McSample::Classification(_))) => {
            let samples = row
                .samples
                .into_iter()
                .map(|(_, s)| match s {
                    McSample::Classification(d) => d,
                    McSample::Regression(_) => unreachable!("schema fixes the sample kind"),
                })
                .collect();
            Prediction::McClassification(
                McClassificationSet::new(samples)
                    .map_err(|source| ParseError::InvalidExample { id: id.clone(), source })?,
            )
        }
        Some((_, McSample::Regression(_))) => {
            let components = row
                .samples
                .into_iter()
                .map(|(_, s)| match s {
                    McSample::Regression(c) => c,
                    McSample::Classification(_) => unreachable!("schema fixes the sample kind"),
                })
                .collect();
            Prediction::McRegression(
                McRegressionSet::new(components)
                    .map_err(|source| ParseError::InvalidExample { id: id.clone(), source })?,
            )
        }
        None => return Err(ParseError::EmptyInput),
    };
    Ok(LabeledExample { id, group: row.group, label: row.label, prediction })
}

fn malformed(line: usize, detail: &str) -> ParseError {
    ParseError::MalformedFile { line, detail: detail.to_string() }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct RawDocument {
    task: Task,
    examples: Vec<RawExample>,
}

impl<'de> Deserialize<'de> for Task {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        match s.as_str() {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            other => Err(serde::de::Error::custom(format!("unknown task: {other}"))),
        }
    }
}

#[derive(Deserialize)]
struct RawExample {
    id: String,
    #[serde(default)]
    group: Option<u8>,
    label: serde_json::Value,
    prediction: RawPrediction,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawPrediction {
    Point(Vec<f64>),
    McClassification(Vec<Vec<f64>>),
    McRegression(Vec<RawComponent>),
}

#[derive(Deserialize)]
struct RawComponent {
    mean: f64,
    variance: f64,
}

fn parse_json(raw: &str, task: Task) -> Result<Parsed, ParseError> {
    let doc: RawDocument = serde_json::from_str(raw)
        .map_err(|e| malformed(e.line(), &e.to_string()))?;
    if doc.task != task {
        return Err(malformed(1, &format!("file declares task {}, expected {task}", doc.task)));
    }
    if doc.examples.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let mut warnings = Vec::new();
    let mut examples = Vec::with_capacity(doc.examples.len());
    for raw_example in doc.examples {
        let id = raw_example.id;
        let group = match raw_example.group {
            None => None,
            Some(g) => Some(
                Group::from_u8(g)
                    .map_err(|source| ParseError::InvalidExample { id: id.clone(), source })?,
            ),
        };
        let label = match task {
            Task::Classification => Label::Class(
                raw_example
                    .label
                    .as_u64()
                    .ok_or_else(|| malformed(0, &format!("label of {id} must be a class index")))?
                    as usize,
            ),
            Task::Regression => Label::Value(
                raw_example
                    .label
                    .as_f64()
                    .ok_or_else(|| malformed(0, &format!("label of {id} must be a number")))?,
            ),
        };
        let prediction = match raw_example.prediction {
            RawPrediction::Point(probs) => {
                Prediction::Point(build_distribution(probs, &id, &mut warnings)?)
            }
            RawPrediction::McClassification(rows) => {
                let samples = rows
                    .into_iter()
                    .map(|probs| build_distribution(probs, &id, &mut warnings))
                    .collect::<Result<Vec<_>, _>>()?;
                Prediction::McClassification(
                    McClassificationSet::new(samples)
                        .map_err(|source| ParseError::InvalidExample { id: id.clone(), source })?,
                )
            }
            RawPrediction::McRegression(components) => {
                let components = components
                    .into_iter()
                    .map(|c| {
                        GaussianComponent::new(c.mean, c.variance).map_err(|source| {
                            ParseError::InvalidExample { id: id.clone(), source }
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Prediction::McRegression(
                    McRegressionSet::new(components)
                        .map_err(|source| ParseError::InvalidExample { id: id.clone(), source })?,
                )
            }
        };
        examples.push(LabeledExample { id, group, label, prediction });
    }
    let dataset = Dataset::new(task, examples)?;
    Ok(Parsed { dataset, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_row_binary_csv() {
        let csv = "id,group,label,p_0,p_1\n\
                   a,0,0,0.9,0.1\n\
                   b,1,1,0.2,0.8\n\
                   c,,0,0.6,0.4\n";
        let parsed = parse_predictions_str(csv, Format::Csv, Task::Classification).unwrap();
        assert_eq!(parsed.dataset.len(), 3);
        assert_eq!(parsed.dataset.num_classes(), Some(2));
        assert!(parsed.warnings.is_empty());
        let examples = parsed.dataset.examples();
        assert_eq!(examples[0].id, "a");
        assert_eq!(examples[2].group, None);
        match &examples[1].prediction {
            Prediction::Point(dist) => assert_eq!(dist.probs(), &[0.2, 0.8]),
            other => panic!("unexpected variant {}", other.variant_name()),
        }
    }

    #[test]
    fn sum_violation_names_the_row() {
        let csv = "id,group,label,p_0,p_1\na,0,0,0.6,0.5\n";
        let err = parse_predictions_str(csv, Format::Csv, Task::Classification).unwrap_err();
        match err {
            ParseError::InvalidDistribution { id, .. } => assert_eq!(id, "a"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn near_miss_sum_is_renormalized_with_warning() {
        let csv = format!("id,group,label,p_0,p_1\na,0,0,0.6,{}\n", 0.4 + 1e-7);
        let parsed = parse_predictions_str(&csv, Format::Csv, Task::Classification).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("a"));
        assert!(parsed.dataset.validate().is_empty());
    }

    #[test]
    fn empty_csv_is_empty_input() {
        let csv = "id,group,label,p_0,p_1\n";
        assert!(matches!(
            parse_predictions_str(csv, Format::Csv, Task::Classification).unwrap_err(),
            ParseError::EmptyInput
        ));
    }

    #[test]
    fn bad_arity_is_malformed() {
        let csv = "id,group,label,p_0,p_1\na,0,0,0.6\n";
        assert!(matches!(
            parse_predictions_str(csv, Format::Csv, Task::Classification).unwrap_err(),
            ParseError::MalformedFile { line: 2, .. }
        ));
    }

    #[test]
    fn long_format_mc_csv_round_trips() {
        // Construct a fixture with T=15 samples per id, render it as CSV,
        // parse it back, and compare field by field.
        let ids = ["x", "y", "z"];
        let t_count = 15;
        let mut csv = String::from("id,group,label,t,p_0,p_1\n");
        let mut want: Vec<Vec<Vec<f64>>> = Vec::new();
        for (i, id) in ids.iter().enumerate() {
            let mut rows = Vec::new();
            for t in 0..t_count {
                let p0 = (1 + i + t) as f64 / (t_count + ids.len() + 2) as f64;
                let probs = vec![p0, 1.0 - p0];
                csv.push_str(&format!("{id},{},{},{t},{},{}\n", i % 2, i % 2, probs[0], probs[1]));
                rows.push(probs);
            }
            want.push(rows);
        }
        let parsed = parse_predictions_str(&csv, Format::Csv, Task::Classification).unwrap();
        assert_eq!(parsed.dataset.len(), 3);
        for (example, rows) in parsed.dataset.examples().iter().zip(&want) {
            match &example.prediction {
                Prediction::McClassification(set) => {
                    assert_eq!(set.num_samples(), t_count);
                    for (sample, wanted) in set.samples().iter().zip(rows) {
                        assert_eq!(sample.probs(), wanted.as_slice());
                    }
                }
                other => panic!("unexpected variant {}", other.variant_name()),
            }
        }
    }

    #[test]
    fn mc_rows_sort_by_sample_index() {
        let csv = "id,group,label,t,p_0,p_1\n\
                   a,0,0,1,0.2,0.8\n\
                   a,0,0,0,0.9,0.1\n";
        let parsed = parse_predictions_str(csv, Format::Csv, Task::Classification).unwrap();
        match &parsed.dataset.examples()[0].prediction {
            Prediction::McClassification(set) => {
                assert_eq!(set.samples()[0].probs(), &[0.9, 0.1]);
                assert_eq!(set.samples()[1].probs(), &[0.2, 0.8]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn duplicate_sample_index_is_malformed() {
        let csv = "id,group,label,t,p_0,p_1\n\
                   a,0,0,1,0.2,0.8\n\
                   a,0,0,1,0.9,0.1\n";
        assert!(matches!(
            parse_predictions_str(csv, Format::Csv, Task::Classification).unwrap_err(),
            ParseError::MalformedFile { .. }
        ));
    }

    #[test]
    fn regression_csv_parses() {
        let csv = "id,group,label,t,mu,var\n\
                   r,0,1.5,0,1.0,0.25\n\
                   r,0,1.5,1,2.0,0.5\n";
        let parsed = parse_predictions_str(csv, Format::Csv, Task::Regression).unwrap();
        match &parsed.dataset.examples()[0].prediction {
            Prediction::McRegression(set) => {
                assert_eq!(set.num_samples(), 2);
                assert_eq!(set.components()[1].mean, 2.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let csv = "id,group,label,t,mu,var\n\
                   r,1,1.53920384756e-3,0,1.000000000001,0.25\n\
                   s,0,-2.75,0,2.0,0.5\n";
        let parsed = parse_predictions_str(csv, Format::Csv, Task::Regression).unwrap();
        let json = dataset_to_json(&parsed.dataset);
        let reparsed = parse_predictions_str(&json, Format::Json, Task::Regression).unwrap();
        assert_eq!(parsed.dataset, reparsed.dataset);
    }

    #[test]
    fn json_task_mismatch_is_rejected() {
        let json = r#"{"task":"regression","examples":[]}"#;
        assert!(matches!(
            parse_predictions_str(json, Format::Json, Task::Classification).unwrap_err(),
            ParseError::MalformedFile { .. }
        ));
    }

    mod lossless {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Round-tripping CSV -> Dataset -> JSON -> Dataset preserves
            /// every numeric field bit for bit.
            #[test]
            fn csv_json_round_trip_is_bitwise(
                rows in proptest::collection::vec((0.0f64..1.0, -1e6f64..1e6, 1e-9f64..1e4), 1..20),
            ) {
                let mut csv = String::from("id,group,label,t,mu,var\n");
                for (i, (frac, mu, var)) in rows.iter().enumerate() {
                    // Shortest-round-trip formatting, as a producer would
                    // write it.
                    csv.push_str(&format!("r{i},{},{},0,{mu},{var}\n", i % 2, frac * 10.0));
                }
                let first = parse_predictions_str(&csv, Format::Csv, Task::Regression).unwrap();
                let json = dataset_to_json(&first.dataset);
                let second = parse_predictions_str(&json, Format::Json, Task::Regression).unwrap();
                prop_assert_eq!(first.dataset, second.dataset);
            }
        }
    }
}
