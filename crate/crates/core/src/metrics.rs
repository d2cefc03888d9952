//! Evaluation metrics and report artifacts.
//!
//! Convention, printed on every artifact: confusion-matrix rows are the true
//! class, columns the predicted class, classes ordered (0 non-racism,
//! 1 racism). Zero-denominator metrics are reported as 0 and flagged.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryLabel;
use crate::error::{Error, Result};

pub const MATRIX_ORIENTATION: &str = "rows = true class, columns = predicted class";

/// 2x2 confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// counts[true][predicted]
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_labels(truths: &[BinaryLabel], predictions: &[BinaryLabel]) -> Result<Self> {
        if truths.len() != predictions.len() {
            return Err(Error::Input(format!(
                "{} truths vs {} predictions",
                truths.len(),
                predictions.len()
            )));
        }
        if truths.is_empty() {
            return Err(Error::Input("cannot evaluate zero samples".into()));
        }
        let mut counts = [[0u64; 2]; 2];
        for (t, p) in truths.iter().zip(predictions) {
            counts[t.class_index()][p.class_index()] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    /// (TP, FP, FN) for the given positive class.
    fn tallies(&self, positive: usize) -> (u64, u64, u64) {
        let negative = 1 - positive;
        let tp = self.counts[positive][positive];
        let fp = self.counts[negative][positive];
        let fal_n = self.counts[positive][negative];
        (tp, fp, fal_n)
    }
}

/// Precision/recall/F1 for one class; `degenerate` marks any zero
/// denominator that forced a 0 by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

/// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); zero denominators give 0.
pub fn precision_recall_f1(cm: &ConfusionMatrix, positive: BinaryLabel) -> ClassMetrics {
    let (tp, fp, fal_n) = cm.tallies(positive.class_index());
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fal_n);
    let f1 = if precision + recall == 0.0 {
        degenerate = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        degenerate,
    }
}

/// trace / total.
pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    cm.trace() as f64 / cm.total() as f64
}

/// Everything one evaluation produces, ready to render or persist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_name: String,
    pub embedding_name: String,
    pub accuracy: f64,
    /// Metrics for class 1 (racism).
    pub class_racism: ClassMetrics,
    /// Metrics for class 0 (non-racism).
    pub class_non_racism: ClassMetrics,
    pub confusion: ConfusionMatrix,
    /// Free-form configuration echo for the structured file.
    #[serde(default)]
    pub config_echo: BTreeMap<String, String>,
}

impl MetricsReport {
    pub fn from_confusion(
        model_name: impl Into<String>,
        embedding_name: impl Into<String>,
        confusion: ConfusionMatrix,
    ) -> Self {
        MetricsReport {
            model_name: model_name.into(),
            embedding_name: embedding_name.into(),
            accuracy: accuracy(&confusion),
            class_racism: precision_recall_f1(&confusion, BinaryLabel::Racism),
            class_non_racism: precision_recall_f1(&confusion, BinaryLabel::NonRacism),
            confusion,
        config_echo: BTreeMap::new(),
        }
    }
}

/// Structured per-evaluation file: TOML, key-value, full float precision.
pub fn write_report(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut body = toml::to_string_pretty(report)
        .map_err(|e| Error::Input(format!("cannot serialize report: {e}")))?;
    body.insert_str(0, &format!("# confusion orientation: {MATRIX_ORIENTATION}\n"));
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<MetricsReport> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&body).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Canonical row order within an embedding group.
fn model_rank(name: &str) -> usize {
    match name {
        "Bi-RNN" => 0,
        "Bi-LSTM" => 1,
        "MCNN-LSTM" => 2,
        "Ensemble" => 3,
        _ => 4,
    }
}

fn fmt_metric(value: f64, degenerate: bool) -> String {
    if degenerate {
        format!("{value:.2}*")
    } else {
        format!("{value:.2}")
    }
}

/// Render the combined performance table: rows grouped by embedding, then
/// model, with one class-1 and one class-0 row per model sharing a single
/// accuracy cell. Metrics print at 2 decimals, accuracy as a 2-decimal
/// percentage.
pub fn report_table(reports: &[MetricsReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Input("no reports to tabulate".into()));
    }
    let mut sorted: Vec<&MetricsReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        a.embedding_name
            .cmp(&b.embedding_name)
            .then_with(|| model_rank(&a.model_name).cmp(&model_rank(&b.model_name)))
            .then_with(|| a.model_name.cmp(&b.model_name))
    });

    let headers = ["Word Embeddings", "Model", "Class", "P", "R", "F1", "Acc(%)"];
    let mut rows: Vec<[String; 7]> = Vec::new();
    let mut any_degenerate = false;
    let mut prev_embedding: Option<&str> = None;
    for report in &sorted {
        let embedding_cell = if prev_embedding == Some(report.embedding_name.as_str()) {
            String::new()
        } else {
            report.embedding_name.clone()
        };
        prev_embedding = Some(report.embedding_name.as_str());
        any_degenerate |= report.class_racism.degenerate || report.class_non_racism.degenerate;
        let one = &report.class_racism;
        let zero = &report.class_non_racism;
        rows.push([
            embedding_cell,
            report.model_name.clone(),
            "1".into(),
            fmt_metric(one.precision, one.degenerate),
            fmt_metric(one.recall, one.degenerate),
            fmt_metric(one.f1, one.degenerate),
            format!("{:.2}", report.accuracy * 100.0),
        ]);
        rows.push([
            String::new(),
            String::new(),
            "0".into(),
            fmt_metric(zero.precision, zero.degenerate),
            fmt_metric(zero.recall, zero.degenerate),
            fmt_metric(zero.f1, zero.degenerate),
            String::new(),
        ]);
    }

    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let render = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };

    let mut out = String::new();
    out.push_str(&render(&headers.map(String::from)));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &rows {
        out.push_str(&render(row));
        out.push('\n');
    }
    out.push_str(&format!("\nClasses: 0 = non-racism, 1 = racism. Confusion {MATRIX_ORIENTATION}.\n"));
    if any_degenerate {
        out.push_str("* metric had a zero denominator and is reported as 0 by convention.\n");
    }
    Ok(out)
}
