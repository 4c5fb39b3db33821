//! Confusion-matrix based evaluation: per-class precision/recall/F1, macro
//! averages, and accuracy.

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassLabel4, Sample};
use crate::error::{Error, Result};

use super::model::{CnnModel, TaskKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Actual samples of this class.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub class_names: Vec<String>,
    /// confusion[actual][predicted]
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub total: usize,
}

/// Tallies a confusion matrix indexed [actual][predicted].
pub fn confusion_matrix(
    actual: &[usize],
    predicted: &[usize],
    n_classes: usize,
) -> Result<Vec<Vec<usize>>> {
    if actual.len() != predicted.len() {
        return Err(Error::data(format!(
            "label count mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (&a, &p) in actual.iter().zip(predicted) {
        if a >= n_classes || p >= n_classes {
            return Err(Error::data(format!(
                "label outside 0..{n_classes}: actual {a}, predicted {p}"
            )));
        }
        m[a][p] += 1;
    }
    Ok(m)
}

impl MetricsReport {
    /// Derives every metric from a confusion matrix. Zero-division cases
    /// (a class never predicted, or absent from the data) score 0.
    pub fn from_confusion(confusion: Vec<Vec<usize>>, class_names: Vec<String>) -> Result<Self> {
        let n = class_names.len();
        if confusion.len() != n || confusion.iter().any(|row| row.len() != n) {
            return Err(Error::data(format!(
                "confusion matrix must be {n}x{n} to match {n} class names"
            )));
        }
        let total: usize = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::data("empty confusion matrix"));
        }
        let mut per_class = Vec::with_capacity(n);
        let mut correct = 0usize;
        for c in 0..n {
            let tp = confusion[c][c];
            correct += tp;
            let fp: usize = (0..n).filter(|&a| a != c).map(|a| confusion[a][c]).sum();
            let fn_: usize = (0..n).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
            let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            per_class.push(ClassMetrics {
                class: class_names[c].clone(),
                precision,
                recall,
                f1,
                support: tp + fn_,
            });
        }
        let nf = n as f64;
        Ok(MetricsReport {
            macro_precision: per_class.iter().map(|m| m.precision).sum::<f64>() / nf,
            macro_recall: per_class.iter().map(|m| m.recall).sum::<f64>() / nf,
            macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / nf,
            accuracy: correct as f64 / total as f64,
            class_names,
            confusion,
            per_class,
            total,
        })
    }

    pub fn from_predictions(
        actual: &[usize],
        predicted: &[usize],
        class_names: Vec<String>,
    ) -> Result<Self> {
        let confusion = confusion_matrix(actual, predicted, class_names.len())?;
        Self::from_confusion(confusion, class_names)
    }
}

pub fn binary_class_names() -> Vec<String> {
    vec!["Normal".into(), "Attack".into()]
}

pub fn multiclass_class_names() -> Vec<String> {
    ClassLabel4::ALL.iter().map(|c| c.name().to_string()).collect()
}

/// Runs the model over labeled samples and scores the predictions.
pub fn evaluate(model: &CnnModel, samples: &[Sample]) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(Error::data("cannot evaluate on an empty sample list"));
    }
    let mut actual = Vec::with_capacity(samples.len());
    let mut predicted = Vec::with_capacity(samples.len());
    for s in samples {
        let a = match model.task() {
            TaskKind::Binary => s.binary.id(),
            TaskKind::Multiclass => s.label4.id(),
        };
        actual.push(a);
        predicted.push(model.predict_label(&s.features)?);
    }
    let names = match model.task() {
        TaskKind::Binary => binary_class_names(),
        TaskKind::Multiclass => multiclass_class_names(),
    };
    MetricsReport::from_predictions(&actual, &predicted, names)
}
