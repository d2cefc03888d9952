//! Accuracy-loss curves and confusion-matrix heatmaps as SVG files.
//!
//! The writer is deliberately dependency-free: SVG text needs no font files,
//! renders identically everywhere, and stays assertable in tests. The file
//! extension selects the format; only `.svg` is supported.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, MATRIX_ORIENTATION};
use crate::model::EpochStats;

const TRAIN_COLOR: &str = "#1f77b4";
const VAL_COLOR: &str = "#ff7f0e";

fn require_svg(path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("svg") => Ok(()),
        other => Err(Error::Input(format!(
            "unsupported image format '{}' (only .svg output is supported)",
            other.unwrap_or("<none>")
        ))),
    }
}

fn axis_ticks(epochs: usize) -> Vec<usize> {
    let step = epochs.div_ceil(10).max(1);
    let mut ticks: Vec<usize> = (1..=epochs).step_by(step).collect();
    if *ticks.last().unwrap_or(&0) != epochs {
        ticks.push(epochs);
    }
    ticks
}

struct Panel {
    x0: f64,
    y0: f64,
    width: f64,
    height: f64,
}

impl Panel {
    fn x(&self, epoch: usize, epochs: usize) -> f64 {
        if epochs <= 1 {
            return self.x0 + self.width / 2.0;
        }
        self.x0 + (epoch - 1) as f64 / (epochs - 1) as f64 * self.width
    }

    fn y(&self, value: f64, max: f64) -> f64 {
        let clamped = (value / max).clamp(0.0, 1.0);
        self.y0 + self.height - clamped * self.height
    }
}

fn polyline(out: &mut String, panel: &Panel, values: &[f64], max: f64, color: &str) {
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{:.2},{:.2}", panel.x(i + 1, values.len()), panel.y(*v, max)))
        .collect();
    let _ = writeln!(
        out,
        "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
        points.join(" ")
    );
}

fn panel_frame(out: &mut String, panel: &Panel, label: &str, epochs: usize, y_max: f64) {
    let _ = writeln!(
        out,
        "  <rect x=\"{:.0}\" y=\"{:.0}\" width=\"{:.0}\" height=\"{:.0}\" fill=\"none\" stroke=\"#444\"/>",
        panel.x0, panel.y0, panel.width, panel.height
    );
    let _ = writeln!(
        out,
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"14\" text-anchor=\"middle\">{label}</text>",
        panel.x0 + panel.width / 2.0,
        panel.y0 - 10.0
    );
    for tick in axis_ticks(epochs) {
        let x = panel.x(tick, epochs);
        let y = panel.y0 + panel.height;
        let _ = writeln!(
            out,
            "  <line x1=\"{x:.2}\" y1=\"{y:.0}\" x2=\"{x:.2}\" y2=\"{:.0}\" stroke=\"#444\"/>",
            y + 4.0
        );
        let _ = writeln!(
            out,
            "  <text x=\"{x:.2}\" y=\"{:.0}\" font-size=\"10\" text-anchor=\"middle\" class=\"epoch-tick\">{tick}</text>",
            y + 16.0
        );
    }
    for frac in [0.0, 0.5, 1.0] {
        let value = y_max * frac;
        let y = panel.y(value, y_max);
        let _ = writeln!(
            out,
            "  <text x=\"{:.0}\" y=\"{y:.2}\" font-size=\"10\" text-anchor=\"end\">{value:.2}</text>",
            panel.x0 - 6.0
        );
    }
    let _ = writeln!(
        out,
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"11\" text-anchor=\"middle\">epoch</text>",
        panel.x0 + panel.width / 2.0,
        panel.y0 + panel.height + 32.0
    );
}

/// One image per model: accuracy (left panel) and loss (right panel), train
/// and validation curves per panel, x axis spanning the epochs.
pub fn render_accuracy_loss(history: &[EpochStats], title: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    require_svg(path)?;
    if history.is_empty() {
        return Err(Error::Input("history is empty".into()));
    }
    let epochs = history.len();
    let train_acc: Vec<f64> = history.iter().map(|h| h.train_acc).collect();
    let val_acc: Vec<f64> = history.iter().map(|h| h.val_acc).collect();
    let train_loss: Vec<f64> = history.iter().map(|h| h.train_loss).collect();
    let val_loss: Vec<f64> = history.iter().map(|h| h.val_loss).collect();
    let loss_max = train_loss
        .iter()
        .chain(&val_loss)
        .fold(f64::MIN_POSITIVE, |a, b| a.max(*b))
        * 1.05;

    let acc_panel = Panel {
        x0: 60.0,
        y0: 50.0,
        width: 340.0,
        height: 250.0,
    };
    let loss_panel = Panel {
        x0: 480.0,
        y0: 50.0,
        width: 340.0,
        height: 250.0,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"880\" height=\"380\" data-epochs=\"{epochs}\">"
    );
    let _ = writeln!(
        out,
        "  <text x=\"440\" y=\"20\" font-size=\"16\" text-anchor=\"middle\">{title}</text>"
    );
    panel_frame(&mut out, &acc_panel, "accuracy", epochs, 1.0);
    polyline(&mut out, &acc_panel, &train_acc, 1.0, TRAIN_COLOR);
    polyline(&mut out, &acc_panel, &val_acc, 1.0, VAL_COLOR);
    panel_frame(&mut out, &loss_panel, "loss", epochs, loss_max);
    polyline(&mut out, &loss_panel, &train_loss, loss_max, TRAIN_COLOR);
    polyline(&mut out, &loss_panel, &val_loss, loss_max, VAL_COLOR);
    let _ = writeln!(
        out,
        "  <text x=\"60\" y=\"370\" font-size=\"11\"><tspan fill=\"{TRAIN_COLOR}\">—— train</tspan>  <tspan fill=\"{VAL_COLOR}\">—— validation</tspan></text>"
    );
    out.push_str("</svg>\n");
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// 2x2 heatmap with annotated counts; orientation is printed on the image.
pub fn render_confusion(cm: &ConfusionMatrix, title: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    require_svg(path)?;
    let total = cm.total().max(1) as f64;
    let cell = 110.0;
    let x0 = 120.0;
    let y0 = 70.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"420\" height=\"360\">"
    );
    let _ = writeln!(
        out,
        "  <text x=\"210\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{title}</text>"
    );
    let _ = writeln!(
        out,
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\" text-anchor=\"middle\">predicted</text>",
        x0 + cell,
        y0 - 28.0
    );
    let _ = writeln!(
        out,
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 {:.0} {:.0})\">true</text>",
        x0 - 60.0,
        y0 + cell,
        x0 - 60.0,
        y0 + cell
    );
    for class in 0..2 {
        let _ = writeln!(
            out,
            "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\" text-anchor=\"middle\">{class}</text>",
            x0 + cell * (class as f64 + 0.5),
            y0 - 8.0
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\" text-anchor=\"end\">{class}</text>",
            x0 - 10.0,
            y0 + cell * (class as f64 + 0.5) + 4.0
        );
    }
    for (row, row_counts) in cm.counts.iter().enumerate() {
        for (col, count) in row_counts.iter().enumerate() {
            let x = x0 + cell * col as f64;
            let y = y0 + cell * row as f64;
            let intensity = *count as f64 / total;
            let shade = (255.0 - intensity * 175.0) as u8;
            let _ = writeln!(
                out,
                "  <rect x=\"{x:.0}\" y=\"{y:.0}\" width=\"{cell:.0}\" height=\"{cell:.0}\" fill=\"rgb({shade},{shade},255)\" stroke=\"#444\"/>"
            );
            let _ = writeln!(
                out,
                "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"18\" text-anchor=\"middle\" class=\"cell-count\">{count}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 6.0
            );
        }
    }
    let _ = writeln!(
        out,
        "  <text x=\"210\" y=\"340\" font-size=\"11\" text-anchor=\"middle\">{MATRIX_ORIENTATION}</text>"
    );
    out.push_str("</svg>\n");
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history(n: usize) -> Vec<EpochStats> {
        (1..=n)
            .map(|epoch| EpochStats {
                epoch,
                train_loss: 1.0 / epoch as f64,
                train_acc: 0.5 + 0.4 * (epoch as f64 / n as f64),
                val_loss: 1.2 / epoch as f64,
                val_acc: 0.5 + 0.35 * (epoch as f64 / n as f64),
            })
            .collect()
    }

    #[test]
    fn accuracy_loss_curve_spans_the_epochs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.svg");
        render_accuracy_loss(&history(10), "Bi-RNN", &path).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.starts_with("<svg"));
        assert!(body.contains("data-epochs=\"10\""));
        assert!(body.contains(">10</text>"), "final epoch tick rendered");
        assert_eq!(body.matches("<polyline").count(), 4);
    }

    #[test]
    fn confusion_heatmap_has_four_annotated_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cm.svg");
        let cm = ConfusionMatrix {
            counts: [[12, 3], [4, 21]],
        };
        render_confusion(&cm, "Ensemble", &path).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(body.matches("class=\"cell-count\"").count(), 4);
        for count in ["12", "3", "4", "21"] {
            assert!(body.contains(&format!(">{count}</text>")));
        }
        assert!(body.contains("rows = true class"));
    }

    #[test]
    fn non_svg_extensions_are_rejected() {
        let cm = ConfusionMatrix {
            counts: [[1, 0], [0, 1]],
        };
        let err = render_confusion(&cm, "x", "out.png");
        assert!(matches!(err, Err(Error::Input(_))));
        let err = render_accuracy_loss(&history(2), "x", "curves");
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let err = render_accuracy_loss(&history(2), "x", "/nonexistent-dir/curves.svg");
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn single_epoch_history_renders() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.svg");
        render_accuracy_loss(&history(1), "smoke", &path).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().contains("data-epochs=\"1\""));
    }
}
