//! Ground-truth scoring of a finished run and its CSV artifacts.
//!
//! Positive class is Sybil; a prediction is positive only for a final
//! Malicious verdict. Scores with a zero denominator are absent, and are
//! written as empty CSV fields.
//!
//! `metrics.csv`: `seed,sybil_fraction,lambda,accuracy,f1,specificity,
//! mean_detection_epochs,fp_rate,tp,fp,tn,fn,alpha,beta,delta`.
//!
//! `summary.csv`: `param,value,runs,accuracy,f1,specificity,
//! mean_detection_epochs,fp_rate`, each score averaged over the runs in
//! which it is defined.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{fmt_sig9, EventKind, EventLog};
use crate::trust_engine::{ClassificationCategory, Pseudonym};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// One verdict per identity, combined across observers.
    #[default]
    Identity,
    /// One verdict per (observer, identity) table entry.
    Observer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Honest,
    Sybil,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, label: Label, verdict: ClassificationCategory) {
        let flagged = verdict == ClassificationCategory::Malicious;
        match (label, flagged) {
            (Label::Sybil, true) => self.tp += 1,
            (Label::Honest, true) => self.fp += 1,
            (Label::Honest, false) => self.tn += 1,
            (Label::Sybil, false) => self.fn_ += 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("verdict for unlabeled identity {0}")]
    Unlabeled(Pseudonym),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub fn confusion(
    ground_truth: &BTreeMap<Pseudonym, Label>,
    verdicts: &BTreeMap<Pseudonym, ClassificationCategory>,
) -> Result<Confusion, MetricsError> {
    let mut c = Confusion::default();
    for (id, v) in verdicts {
        let label = ground_truth.get(id).ok_or(MetricsError::Unlabeled(*id))?;
        c.record(*label, *v);
    }
    Ok(c)
}

pub fn confusion_pairs(pairs: impl IntoIterator<Item = (Label, ClassificationCategory)>) -> Confusion {
    let mut c = Confusion::default();
    for (l, v) in pairs {
        c.record(l, v);
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Scores {
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
    pub fp_rate: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn derive_scores(c: &Confusion) -> Scores {
    Scores {
        accuracy: ratio(c.tp + c.tn, c.total()),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
        fp_rate: ratio(c.fp, c.tn + c.fp),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<u64>,
}

impl Summary {
    pub fn of(values: &[u64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut v = values.to_vec();
        v.sort_unstable();
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        };
        Self {
            count: n,
            mean: Some(v.iter().sum::<u64>() as f64 / n as f64),
            median: Some(median),
            max: v.last().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionStats {
    /// `epoch − first_seen` for every Malicious confirmation.
    pub malicious_epochs: Vec<u64>,
    /// `epoch − first_seen` for every verification as honest.
    pub honest_epochs: Vec<u64>,
    pub malicious: Summary,
    pub honest_resolution: Summary,
}

pub fn detection_time_stats(log: &EventLog) -> DetectionStats {
    let mut malicious_epochs = Vec::new();
    let mut honest_epochs = Vec::new();
    for e in log.events() {
        match e.kind {
            EventKind::Malicious { first_seen, .. } => malicious_epochs.push(e.epoch - first_seen),
            EventKind::Verified { first_seen, .. } => honest_epochs.push(e.epoch - first_seen),
            _ => {}
        }
    }
    DetectionStats {
        malicious: Summary::of(&malicious_epochs),
        honest_resolution: Summary::of(&honest_epochs),
        malicious_epochs,
        honest_epochs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub confusion: Confusion,
    pub scores: Scores,
    pub detection: DetectionStats,
}

impl RunMetrics {
    pub fn new(confusion: Confusion, detection: DetectionStats) -> Self {
        Self {
            scores: derive_scores(&confusion),
            confusion,
            detection,
        }
    }

    pub fn mean_detection_epochs(&self) -> Option<f64> {
        self.detection.malicious.mean
    }
}

pub const METRICS_COLUMNS: [&str; 15] = [
    "seed",
    "sybil_fraction",
    "lambda",
    "accuracy",
    "f1",
    "specificity",
    "mean_detection_epochs",
    "fp_rate",
    "tp",
    "fp",
    "tn",
    "fn",
    "alpha",
    "beta",
    "delta",
];

pub const SUMMARY_COLUMNS: [&str; 8] = [
    "param",
    "value",
    "runs",
    "accuracy",
    "f1",
    "specificity",
    "mean_detection_epochs",
    "fp_rate",
];

/// One run's identifying parameters plus its metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub seed: u64,
    pub sybil_fraction: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub metrics: RunMetrics,
}

impl MetricsRow {
    pub fn new(config: &crate::config::ScenarioConfig, metrics: RunMetrics) -> Self {
        Self {
            seed: config.seed,
            sybil_fraction: config.sybil_fraction,
            lambda: config.trust.lambda,
            alpha: config.trust.alpha,
            beta: config.trust.beta,
            delta: config.trust.delta,
            metrics,
        }
    }

    fn record(&self) -> [String; 15] {
        let s = &self.metrics.scores;
        let c = &self.metrics.confusion;
        [
            self.seed.to_string(),
            fmt_sig9(self.sybil_fraction),
            fmt_sig9(self.lambda),
            opt(s.accuracy),
            opt(s.f1),
            opt(s.specificity),
            opt(self.metrics.mean_detection_epochs()),
            opt(s.fp_rate),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
            fmt_sig9(self.alpha),
            fmt_sig9(self.beta),
            fmt_sig9(self.delta),
        ]
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig9).unwrap_or_default()
}

/// Seed-averaged scores for one swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub param: String,
    pub value: f64,
    pub runs: usize,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
    pub mean_detection_epochs: Option<f64>,
    pub fp_rate: Option<f64>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

impl SummaryRow {
    pub fn aggregate(param: &str, value: f64, rows: &[&MetricsRow]) -> Self {
        let scores = || rows.iter().map(|r| r.metrics.scores);
        Self {
            param: param.to_string(),
            value,
            runs: rows.len(),
            accuracy: mean_defined(scores().map(|s| s.accuracy)),
            f1: mean_defined(scores().map(|s| s.f1)),
            specificity: mean_defined(scores().map(|s| s.specificity)),
            mean_detection_epochs: mean_defined(rows.iter().map(|r| r.metrics.mean_detection_epochs())),
            fp_rate: mean_defined(scores().map(|s| s.fp_rate)),
        }
    }

    fn record(&self) -> [String; 8] {
        [
            self.param.clone(),
            fmt_sig9(self.value),
            self.runs.to_string(),
            opt(self.accuracy),
            opt(self.f1),
            opt(self.specificity),
            opt(self.mean_detection_epochs),
            opt(self.fp_rate),
        ]
    }
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>, MetricsError> {
    let f = File::create(path).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> MetricsError + '_ {
    move |source| MetricsError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> MetricsError + '_ {
    move |source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_metrics_csv(rows: &[MetricsRow], path: &Path) -> Result<(), MetricsError> {
    let mut w = create(path)?;
    w.write_record(METRICS_COLUMNS).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<(), MetricsError> {
    let mut w = create(path)?;
    w.write_record(SUMMARY_COLUMNS).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_events_csv(log: &EventLog, path: &Path) -> Result<(), MetricsError> {
    let f = File::create(path).map_err(io_err(path))?;
    log.write_csv(BufWriter::new(f)).map_err(csv_err(path))
}

/// Writes `metrics.csv` (one row) and `events.csv` into `out_dir`,
/// creating it if needed.
pub fn emit_csv(row: &MetricsRow, log: &EventLog, out_dir: &Path) -> Result<(), MetricsError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_metrics_csv(std::slice::from_ref(row), &out_dir.join("metrics.csv"))?;
    write_events_csv(log, &out_dir.join("events.csv"))
}
