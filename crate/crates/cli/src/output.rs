//! Metric tables, the JSON record and two-column plot files.

use std::fs;
use std::io::Write;
use std::path::Path;

use ssr_core::{EpochMetrics, ExperimentRecord};

use crate::error::Result;

pub const METRICS_HEADER: [&str; 12] = [
    "epoch",
    "relabelled_fraction",
    "relabel_accuracy",
    "sel_precision",
    "sel_recall",
    "sel_fscore",
    "selected_count",
    "test_acc",
    "t_train_s",
    "t_feat_s",
    "t_select_s",
    "t_relabel_s",
];

// Display for f64 is the shortest round-trip form and never localised.
fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn metrics_row(e: &EpochMetrics) -> [String; 12] {
    [
        e.epoch.to_string(),
        num(e.relabelled_fraction),
        opt(e.relabel_accuracy),
        opt(e.selection_precision),
        opt(e.selection_recall),
        opt(e.selection_fscore),
        e.selected_count.to_string(),
        opt(e.test_accuracy),
        num(e.t_train_s),
        num(e.t_feat_s),
        num(e.t_select_s),
        num(e.t_relabel_s),
    ]
}

pub fn write_metrics_csv(record: &ExperimentRecord, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER)?;
    for e in &record.epochs {
        w.write_record(metrics_row(e))?;
    }
    w.flush()?;
    Ok(())
}

/// Plot series: file stem and the per-epoch value.
type Series = (&'static str, fn(&EpochMetrics) -> Option<f64>);

const SERIES: [Series; 6] = [
    ("relabelled_fraction", |e| Some(e.relabelled_fraction)),
    ("relabel_accuracy", |e| e.relabel_accuracy),
    ("selection_precision", |e| e.selection_precision),
    ("selection_recall", |e| e.selection_recall),
    ("selection_fscore", |e| e.selection_fscore),
    ("test_accuracy", |e| e.test_accuracy),
];

fn write_series(record: &ExperimentRecord, stem: &str, f: fn(&EpochMetrics) -> Option<f64>, dir: &Path) -> Result<()> {
    let mut out = fs::File::create(dir.join(format!("{stem}.dat")))?;
    writeln!(out, "# epoch {stem}")?;
    for e in &record.epochs {
        if let Some(v) = f(e) {
            writeln!(out, "{} {}", e.epoch, num(v))?;
        }
    }
    Ok(())
}

/// Writes `metrics.csv`, `record.json` and one `<metric>.dat` file per
/// plotted curve into `dir`.
pub fn emit_metrics(record: &ExperimentRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_metrics_csv(record, &dir.join("metrics.csv"))?;
    let json = serde_json::to_string_pretty(record).expect("record serializes");
    fs::write(dir.join("record.json"), json)?;
    for (stem, f) in SERIES {
        write_series(record, stem, f, dir)?;
    }
    Ok(())
}
