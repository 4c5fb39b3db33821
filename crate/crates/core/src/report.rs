//! Result tables and run summaries. Classification results go out twice:
//! a CSV view with percentages rounded half-up to two decimals for reading,
//! and a JSON view carrying every number at full precision, so nothing is
//! lost to display rounding. Simulation runs are summarized from the event
//! trace alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{EpochTrace, MetricsReport};
use crate::sim::trace::{EventKind, Trace};

/// Formats a ratio in [0, 1] as a percentage with exactly two decimals,
/// rounding halves up: 1/32 → "3.13".
pub fn percent_2dp(ratio: f64) -> String {
    let scaled = (ratio * 10_000.0).round() as i64;
    format!("{}.{:02}", scaled / 100, scaled % 100)
}

/// The per-class table as CSV: one row per class plus a macro-average row.
/// Metric columns are percentages at two decimals; support is exact.
pub fn metrics_csv_string(report: &MetricsReport) -> String {
    let mut out = String::from("class,precision_pct,recall_pct,f1_pct,support\n");
    for m in &report.per_class {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.class,
            percent_2dp(m.precision),
            percent_2dp(m.recall),
            percent_2dp(m.f1),
            m.support
        ));
    }
    out.push_str(&format!(
        "macro_avg,{},{},{},{}\n",
        percent_2dp(report.macro_precision),
        percent_2dp(report.macro_recall),
        percent_2dp(report.macro_f1),
        report.total
    ));
    out
}

/// Writes `<stem>.csv` (display view) and `<stem>.json` (full precision,
/// including the confusion matrix and accuracy) under `dir`.
pub fn emit_metrics_tables(
    report: &MetricsReport,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, metrics_csv_string(report))?;
    let json_path = dir.join(format!("{stem}.json"));
    fs::write(&json_path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok((csv_path, json_path))
}

/// Learning-curve CSV: one row per epoch, five columns, full precision.
pub fn epoch_csv_string(epochs: &[EpochTrace]) -> String {
    let mut out = String::from("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n");
    for e in epochs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy
        ));
    }
    out
}

pub fn emit_epoch_curves(epochs: &[EpochTrace], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, epoch_csv_string(epochs))?;
    Ok(())
}

pub const SCENARIO_REPORT_VERSION: u32 = 1;

/// Counts of what happened during a simulation run, derived entirely from
/// the event trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub v: u32,
    pub packets_sent: usize,
    pub packets_delivered: usize,
    pub packets_dropped: usize,
    pub ledger_blocks_appended: usize,
    pub block_rules_installed: usize,
    pub tamper_actions: usize,
    pub audits_run: usize,
    /// Audit verdict kind → occurrence count.
    pub verdicts: BTreeMap<String, usize>,
}

impl ScenarioReport {
    pub fn from_trace(trace: &Trace) -> Self {
        let mut report = ScenarioReport { v: SCENARIO_REPORT_VERSION, ..Default::default() };
        for event in trace.events() {
            match &event.kind {
                EventKind::PacketSent { .. } => report.packets_sent += 1,
                EventKind::PacketDelivered { .. } => report.packets_delivered += 1,
                EventKind::PacketDropped { .. } => report.packets_dropped += 1,
                EventKind::LedgerAppend { .. } => report.ledger_blocks_appended += 1,
                EventKind::BlockInstall { .. } => report.block_rules_installed += 1,
                EventKind::Tamper { .. } => report.tamper_actions += 1,
                EventKind::AuditRun { .. } => report.audits_run += 1,
                EventKind::Alert { kind, .. } => {
                    *report.verdicts.entry(kind.clone()).or_insert(0) += 1;
                }
                _ => {}
            }
        }
        report
    }

    /// Count of alerts that are not the all-clear.
    pub fn attack_verdicts(&self) -> usize {
        self.verdicts.iter().filter(|(kind, _)| kind.as_str() != "safe").map(|(_, n)| n).sum()
    }
}

pub fn emit_scenario_report(trace: &Trace, path: &Path) -> Result<ScenarioReport> {
    let report = ScenarioReport::from_trace(trace);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(report)
}

/// One algorithm's accuracy under both labelings, as ratios in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: String,
    pub binary_accuracy: f64,
    pub multiclass_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn new(rows: Vec<ComparisonRow>) -> Result<Self> {
        for row in &rows {
            for (name, v) in
                [("binary", row.binary_accuracy), ("multiclass", row.multiclass_accuracy)]
            {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::data(format!(
                        "{} {name} accuracy {v} outside [0, 1]",
                        row.algorithm
                    )));
                }
            }
        }
        Ok(ComparisonTable { rows })
    }

    pub fn csv_string(&self) -> String {
        let mut out = String::from("algorithm,binary_accuracy_pct,multiclass_accuracy_pct\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                row.algorithm,
                percent_2dp(row.binary_accuracy),
                percent_2dp(row.multiclass_accuracy)
            ));
        }
        out
    }

    /// Writes `comparison.csv` and `comparison.json` under `dir`.
    pub fn emit(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join("comparison.csv");
        fs::write(&csv_path, self.csv_string())?;
        let json_path = dir.join("comparison.json");
        fs::write(&json_path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok((csv_path, json_path))
    }
}
