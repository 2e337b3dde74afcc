//! Batch command-line front end.
//!
//! Subcommands: `metrics`, `calibration`, `decide`, `audit`, `train-demo`.
//! Every run writes one JSON [`Report`](crate::report::Report); identical
//! inputs and flags produce byte-identical output. Exit codes: 0 success,
//! 1 invalid input data (details on stderr), 2 invalid arguments.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::calibration::{
    self, normalized_entropies, pavpu, pit, rce, reliability, tce, to_point_dataset,
};
use crate::classification::{entropy_decomposition, predictive_distribution, variation_ratio};
use crate::dataset::{Dataset, Prediction, Task};
use crate::decision::{coverage_curve, reject, DecisionKind, LossMatrix};
use crate::fairness::{contaminate, corrected_dp, disparity, group_rates, FairnessError, NoiseRates};
use crate::io::{self, Format};
use crate::lab::{synth_regression, train_ensemble, HeadKind, McPrediction, TrainConfig};
use crate::regression::mixture_moments;
use crate::report::{digest_bytes, write_atomic, InputStamp, Report};

#[derive(Parser)]
#[command(
    name = "uqkit",
    version,
    about = "Uncertainty metrics, calibration audits, decisions, and fairness audits \
             for probabilistic predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-example uncertainty statistics plus aggregates.
    Metrics(MetricsArgs),
    /// Calibration metrics and reliability-diagram data.
    Calibration(CalibrationArgs),
    /// Expected-loss decisions with a reject option and coverage sweeps.
    Decide(DecideArgs),
    /// Group-fairness audit with optional attribute-noise correction.
    Audit(AuditArgs),
    /// Train the demo ensemble on synthetic data and emit band data.
    TrainDemo(TrainDemoArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Prediction file (see README for the CSV and JSON schemas).
    #[arg(long)]
    input: PathBuf,
    /// Input format; `auto` infers from the file extension.
    #[arg(long, default_value = "auto", value_parser = ["auto", "csv", "json"])]
    format: String,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct CalibrationArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of equal-width calibration bins.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Tail mass for the tail calibration error (regression).
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Certainty cutoff on the normalized-entropy statistic for PAvPU.
    #[arg(long, default_value_t = 0.5)]
    pavpu_threshold: f64,
}

#[derive(Args)]
struct DecideArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Loss matrix JSON: {"actions": [...], "outcomes": [...], "cost": [[...]]}.
    #[arg(long)]
    loss: PathBuf,
    /// Abstain when the error estimate (1 - max probability) exceeds this.
    #[arg(long, default_value_t = 0.05)]
    reject: f64,
    /// Comma-separated thresholds for a coverage/risk sweep.
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Decision threshold on p_1 for the positive prediction.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Assumed flip probability for true group 0.
    #[arg(long)]
    rho0: Option<f64>,
    /// Assumed flip probability for true group 1.
    #[arg(long)]
    rho1: Option<f64>,
    /// Contaminate observed groups with the assumed noise (simulation aid).
    #[arg(long)]
    contaminate_seed: Option<u64>,
}

#[derive(Args)]
struct TrainDemoArgs {
    /// Master seed for data synthesis and member training.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Ensemble size.
    #[arg(long, default_value_t = 15)]
    members: usize,
    /// Training set size.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Full-batch gradient steps per member.
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    /// Gradient-descent step size.
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Entry point behind the binary. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Metrics(args) => run_metrics(args),
        Command::Calibration(args) => run_calibration(args),
        Command::Decide(args) => run_decide(args),
        Command::Audit(args) => run_audit(args),
        Command::TrainDemo(args) => run_train_demo(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    }
}

fn load_input(args: &InputArgs) -> Result<(Dataset, Vec<String>, InputStamp), String> {
    let bytes = std::fs::read(&args.input)
        .map_err(|e| format!("cannot read {}: {e}", args.input.display()))?;
    let format = match args.format.as_str() {
        "csv" => Format::Csv,
        "json" => Format::Json,
        _ => io::sniff(&args.input).map_err(|e| e.to_string())?.0,
    };
    let task = io::sniff_task(&args.input, format).map_err(|e| e.to_string())?;
    let parsed = io::parse_predictions(&args.input, format, task).map_err(|e| e.to_string())?;
    let violations = parsed.dataset.validate();
    if !violations.is_empty() {
        let mut lines = String::new();
        for v in &violations {
            lines.push_str(&format!("{v}\n"));
        }
        return Err(format!("input failed validation:\n{lines}"));
    }
    let stamp = InputStamp {
        path: Some(args.input.display().to_string()),
        digest_sha256: digest_bytes(&bytes),
    };
    Ok((parsed.dataset, parsed.warnings, stamp))
}

fn emit(report: &Report, output: Option<&Path>) -> Result<(), String> {
    let json = report.to_json();
    match output {
        Some(path) => write_atomic(path, &json).map_err(|e| format!("cannot write report: {e}")),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

fn run_metrics(args: MetricsArgs) -> Result<(), String> {
    let (dataset, warnings, stamp) = load_input(&args.input)?;
    let mut report = Report::new(stamp);
    for warning in warnings {
        report.warn(warning);
    }
    report.parameter("task", dataset.task().to_string());

    match dataset.task() {
        Task::Classification => report.metrics_block(
            "metrics_classification",
            classification_metrics_block(&dataset)?,
        ),
        Task::Regression => {
            report.metrics_block("metrics_regression", regression_metrics_block(&dataset)?)
        }
    }
    emit(&report, args.input.output.as_deref())
}

fn classification_metrics_block(dataset: &Dataset) -> Result<Value, String> {
    let mut rows = Vec::with_capacity(dataset.len());
    let mut sums = (0.0, 0.0, 0.0, 0.0); // H, EH, MI, VR
    let mut confidence_sum = 0.0;
    for example in dataset.examples() {
        let row = match &example.prediction {
            Prediction::Point(dist) => {
                let entropy = crate::classification::predictive_entropy(dist);
                sums.0 += entropy;
                sums.1 += entropy;
                confidence_sum += dist.max_prob();
                json!({
                    "id": example.id,
                    "predicted_class": dist.argmax(),
                    "confidence": dist.max_prob(),
                    "predictive_entropy": entropy,
                    "normalized_entropy": crate::classification::normalized_entropy(dist),
                })
            }
            Prediction::McClassification(set) => {
                let mean = predictive_distribution(set);
                let d = entropy_decomposition(set);
                let vr = variation_ratio(set);
                sums.0 += d.predictive_entropy;
                sums.1 += d.expected_entropy;
                sums.2 += d.mutual_information;
                sums.3 += vr;
                confidence_sum += mean.max_prob();
                json!({
                    "id": example.id,
                    "predicted_class": mean.argmax(),
                    "confidence": mean.max_prob(),
                    "predictive_entropy": d.predictive_entropy,
                    "expected_entropy": d.expected_entropy,
                    "mutual_information": d.mutual_information,
                    "variation_ratio": vr,
                })
            }
            Prediction::McRegression(_) => unreachable!("task is classification"),
        };
        rows.push(row);
    }
    let n = dataset.len() as f64;
    let mut aggregates = Map::new();
    aggregates.insert("mean_predictive_entropy".into(), json!(sums.0 / n));
    aggregates.insert("mean_confidence".into(), json!(confidence_sum / n));
    if matches!(dataset.examples()[0].prediction, Prediction::McClassification(_)) {
        aggregates.insert("mean_expected_entropy".into(), json!(sums.1 / n));
        aggregates.insert("mean_mutual_information".into(), json!(sums.2 / n));
        aggregates.insert("mean_variation_ratio".into(), json!(sums.3 / n));
    }
    Ok(json!({
        "examples": rows,
        "aggregates": aggregates,
    }))
}

fn regression_metrics_block(dataset: &Dataset) -> Result<Value, String> {
    let mut rows = Vec::with_capacity(dataset.len());
    let mut sums = (0.0, 0.0, 0.0);
    for example in dataset.examples() {
        match &example.prediction {
            Prediction::McRegression(set) => {
                let moments = mixture_moments(set);
                sums.0 += moments.aleatoric_variance;
                sums.1 += moments.epistemic_variance;
                sums.2 += moments.total_variance;
                rows.push(json!({
                    "id": example.id,
                    "mean": moments.mean,
                    "aleatoric_variance": moments.aleatoric_variance,
                    "epistemic_variance": moments.epistemic_variance,
                    "total_variance": moments.total_variance,
                }));
            }
            _ => unreachable!("task is regression"),
        }
    }
    let n = dataset.len() as f64;
    Ok(json!({
        "examples": rows,
        "aggregates": {
            "mean_aleatoric_variance": sums.0 / n,
            "mean_epistemic_variance": sums.1 / n,
            "mean_total_variance": sums.2 / n,
        },
    }))
}

// ---------------------------------------------------------------------------
// calibration
// ---------------------------------------------------------------------------

fn run_calibration(args: CalibrationArgs) -> Result<(), String> {
    let (dataset, warnings, stamp) = load_input(&args.input)?;
    let mut report = Report::new(stamp);
    for warning in warnings {
        report.warn(warning);
    }
    report.parameter("bins", args.bins as u64);
    report.parameter("task", dataset.task().to_string());

    match dataset.task() {
        Task::Classification => {
            report.parameter("pavpu_threshold", args.pavpu_threshold);
            report.parameter("uncertainty_statistic", "normalized_entropy");
            let point = to_point_dataset(&dataset).map_err(|e| e.to_string())?;
            let nll = match calibration::nll(&point) {
                Ok(value) => Some(value),
                Err(calibration::CalibrationError::InfiniteLoss { id }) => {
                    report.warn(format!(
                        "example {id}: true-class probability is 0; NLL is infinite and omitted"
                    ));
                    None
                }
                Err(other) => return Err(other.to_string()),
            };
            let brier = calibration::brier(&point).map_err(|e| e.to_string())?;
            let (binning, ece) = reliability(&point, args.bins).map_err(|e| e.to_string())?;
            let uncertainties = normalized_entropies(&dataset).map_err(|e| e.to_string())?;
            let (uce_binning, uce_value) =
                calibration::uce(&dataset, &uncertainties, args.bins).map_err(|e| e.to_string())?;
            let pavpu_outcome = pavpu(&dataset, &uncertainties, args.pavpu_threshold)
                .map_err(|e| e.to_string())?;
            report.metrics_block(
                "calibration",
                json!({
                    "nll": nll,
                    "brier": brier,
                    "ece": ece,
                    "reliability": binning,
                    "uce": uce_value,
                    "uce_binning": uce_binning,
                    "pavpu": pavpu_outcome,
                }),
            );
            if let Some(output) = args.input.output.as_deref() {
                let sidecar = sidecar_path(output, "reliability.csv");
                write_atomic(&sidecar, &binning.to_csv())
                    .map_err(|e| format!("cannot write reliability CSV: {e}"))?;
            }
        }
        Task::Regression => {
            report.parameter("tau", args.tau);
            let values = pit(&dataset).map_err(|e| e.to_string())?;
            let rce_value = rce(&values, args.bins).map_err(|e| e.to_string())?;
            let tce_value = match tce(&values, args.tau) {
                Ok(value) => Some(value),
                Err(calibration::CalibrationError::NoTailMass) => {
                    report.warn("no PIT values in either tail; TCE undefined".to_string());
                    None
                }
                Err(other) => return Err(other.to_string()),
            };
            let mut histogram = vec![0usize; args.bins];
            for &v in values.values() {
                let bin = ((v * args.bins as f64).floor() as usize).min(args.bins - 1);
                histogram[bin] += 1;
            }
            report.metrics_block(
                "calibration",
                json!({
                    "rce": rce_value,
                    "tce": tce_value,
                    "pit_histogram": histogram,
                    "n": values.len(),
                }),
            );
        }
    }
    emit(&report, args.input.output.as_deref())
}

fn sidecar_path(output: &Path, suffix: &str) -> PathBuf {
    output.with_extension(suffix)
}

// ---------------------------------------------------------------------------
// decide
// ---------------------------------------------------------------------------

fn run_decide(args: DecideArgs) -> Result<(), String> {
    let (dataset, warnings, stamp) = load_input(&args.input)?;
    let loss_bytes = std::fs::read(&args.loss)
        .map_err(|e| format!("cannot read {}: {e}", args.loss.display()))?;
    let loss: LossMatrix = serde_json::from_slice(&loss_bytes)
        .map_err(|e| format!("invalid loss matrix: {e}"))?;

    let mut report = Report::new(stamp);
    for warning in warnings {
        report.warn(warning);
    }
    report.parameter("reject_threshold", args.reject);
    report.parameter("loss_file", args.loss.display().to_string());
    report.parameter("actions", json!(loss.actions()));

    let point = to_point_dataset(&dataset).map_err(|e| e.to_string())?;
    let mut rows = Vec::with_capacity(point.len());
    let mut abstentions = 0usize;
    for example in point.examples() {
        let dist = match &example.prediction {
            Prediction::Point(dist) => dist,
            _ => unreachable!("to_point_dataset produced point predictions"),
        };
        let decision = reject(dist, &loss, args.reject).map_err(|e| e.to_string())?;
        let action = match &decision.kind {
            DecisionKind::Predict { name, .. } => json!(name),
            DecisionKind::Abstain => {
                abstentions += 1;
                Value::Null
            }
        };
        rows.push(json!({
            "id": example.id,
            "action": action,
            "abstained": matches!(decision.kind, DecisionKind::Abstain),
            "error_estimate": decision.error_estimate,
            "expected_losses": decision.expected_losses,
        }));
    }
    let mut block = Map::new();
    block.insert("decisions".into(), Value::Array(rows));
    block.insert("abstentions".into(), json!(abstentions));
    block.insert(
        "coverage".into(),
        json!((point.len() - abstentions) as f64 / point.len() as f64),
    );
    if !args.thresholds.is_empty() {
        let curve =
            coverage_curve(&point, &loss, &args.thresholds).map_err(|e| e.to_string())?;
        block.insert("coverage_curve".into(), serde_json::to_value(curve).unwrap());
    }
    report.metrics_block("decision", Value::Object(block));
    emit(&report, args.input.output.as_deref())
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

fn run_audit(args: AuditArgs) -> Result<(), String> {
    let (mut dataset, warnings, stamp) = load_input(&args.input)?;
    let mut report = Report::new(stamp);
    for warning in warnings {
        report.warn(warning);
    }
    report.parameter("decision_threshold", args.threshold);

    let noise = match (args.rho0, args.rho1) {
        (Some(rho0), Some(rho1)) => {
            Some(NoiseRates::new(rho0, rho1).map_err(|e| e.to_string())?)
        }
        (None, None) => None,
        _ => return Err("provide both --rho0 and --rho1 or neither".to_string()),
    };
    if let (Some(noise), Some(seed)) = (&noise, args.contaminate_seed) {
        report.parameter("contaminate_seed", seed);
        dataset = contaminate(&dataset, noise, seed);
    }

    let mut audit_warnings: Vec<String> = Vec::new();
    let (rates, gaps) = match group_rates(&dataset, args.threshold) {
        Ok(rates) => {
            let gaps = disparity(&rates).map_err(|e| e.to_string())?;
            (rates, Some(gaps))
        }
        Err(FairnessError::SingleGroupOnly { present, rates }) => {
            audit_warnings
                .push(format!("only group {present} is present; gaps are undefined"));
            (*rates, None)
        }
        Err(other) => return Err(other.to_string()),
    };

    let corrected = match (&noise, &gaps) {
        (Some(noise), Some(gaps)) => {
            audit_warnings.push(
                "EQ and EO gaps are reported uncorrected; only the DP gap has a \
                 noise correction"
                    .to_string(),
            );
            Some(corrected_dp(gaps.dp_gap, noise).map_err(|e| e.to_string())?)
        }
        _ => None,
    };

    let block = json!({
        "rates": rates,
        "gaps": gaps,
        "noise_assumption": noise,
        "corrected_dp": corrected,
        "warnings": audit_warnings,
    });
    for warning in &audit_warnings {
        report.warn(warning.clone());
    }
    report.metrics_block("audit", block);
    emit(&report, args.input.output.as_deref())
}

// ---------------------------------------------------------------------------
// train-demo
// ---------------------------------------------------------------------------

fn run_train_demo(args: TrainDemoArgs) -> Result<(), String> {
    let config = TrainConfig {
        seed: args.seed,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        ..TrainConfig::default()
    };
    let parameters_canonical = format!(
        "train-demo seed={} members={} n={} epochs={} learning_rate={}",
        args.seed, args.members, args.n, args.epochs, args.learning_rate
    );
    let mut report = Report::new(InputStamp {
        path: None,
        digest_sha256: digest_bytes(parameters_canonical.as_bytes()),
    });
    report.parameter("seed", args.seed);
    report.parameter("members", args.members as u64);
    report.parameter("n", args.n as u64);
    report.parameter("epochs", args.epochs as u64);
    report.parameter("learning_rate", args.learning_rate);

    let data = synth_regression(args.n, args.seed).map_err(|e| e.to_string())?;
    let ensemble = train_ensemble(&data, args.members, &config, HeadKind::Homoscedastic)
        .map_err(|e| e.to_string())?;

    let grid_points = 121usize;
    let mut band = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let x = -1.2 + 2.4 * i as f64 / (grid_points - 1) as f64;
        let prediction = ensemble.predict(&[x]).map_err(|e| e.to_string())?;
        let moments = match &prediction {
            McPrediction::Regression(set) => mixture_moments(set),
            McPrediction::Classification(_) => unreachable!("regression head"),
        };
        band.push(json!({
            "x": x,
            "mean": moments.mean,
            "sd_total": moments.total_variance.sqrt(),
            "sd_aleatoric": moments.aleatoric_variance.sqrt(),
            "sd_epistemic": moments.epistemic_variance.sqrt(),
        }));
    }
    let member_losses: Vec<f64> = ensemble
        .members()
        .iter()
        .map(|m| crate::lab::mean_nll(m, &data).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    report.metrics_block(
        "ensemble_lab",
        json!({
            "band": band,
            "member_train_nll": member_losses,
        }),
    );
    emit(&report, args.output.as_deref())
}
