//! The five commands. Each one rebuilds its inputs from config + seed, so
//! reruns with the same pair write byte-identical artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use flowsentry_core::attack::PayloadPool;
use flowsentry_core::baselines::{dt_fit, knn_fit};
use flowsentry_core::dataset::{prepare, regroup_label, ClassLabel4, PreparedData, DEFAULT_RATIOS};
use flowsentry_core::error::{Error, Result};
use flowsentry_core::model_io::{ModelEnvelope, TaskLabel, TrainedModel};
use flowsentry_core::nn::{
    binary_class_names, dataset_loss_accuracy, multiclass_class_names, train, MetricsReport,
    ModelConfig,
};
use flowsentry_core::report::{
    emit_epoch_curves, emit_metrics_tables, emit_scenario_report, percent_2dp, ComparisonRow,
    ComparisonTable,
};
use flowsentry_core::scenario::{load_scenario, run_scenario, ScenarioStep};
use flowsentry_core::sim::{Simulation, TopologySpec};

use crate::config::RunConfig;

/// Which labeling a model is trained and scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Binary,
    Multiclass,
}

impl Mode {
    pub fn task(self) -> TaskLabel {
        match self {
            Mode::Binary => TaskLabel::Binary,
            Mode::Multiclass => TaskLabel::Multiclass,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Mode::Binary => "binary",
            Mode::Multiclass => "multiclass",
        }
    }
}

fn prepared_from(config: &RunConfig) -> Result<PreparedData> {
    let records = config.resolve_records()?;
    prepare(&records, DEFAULT_RATIOS, config.seed)
}

fn base_model_config(config: &RunConfig, mode: Mode) -> ModelConfig {
    let base = match mode {
        Mode::Binary => ModelConfig::default_binary(config.seed),
        Mode::Multiclass => ModelConfig::default_multiclass(config.seed),
    };
    config.model.apply(base)
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Splits and normalizes the configured data, then persists the three
/// sample files plus the fitted preprocessing parameters.
pub fn cmd_prepare(config: &RunConfig, out: &Path) -> Result<()> {
    let prepared = prepared_from(config)?;
    let dir = out.join("prepared");
    fs::create_dir_all(&dir)?;
    write_jsonl(&dir.join("train.jsonl"), &prepared.split.train)?;
    write_jsonl(&dir.join("validation.jsonl"), &prepared.split.validation)?;
    write_jsonl(&dir.join("test.jsonl"), &prepared.split.test)?;
    fs::write(
        dir.join("preprocess.json"),
        serde_json::to_string_pretty(&prepared.preprocess)? + "\n",
    )?;
    println!(
        "prepared {} records: train {} / validation {} / test {} ({} features kept)",
        prepared.split.train.len() + prepared.split.validation.len() + prepared.split.test.len(),
        prepared.split.train.len(),
        prepared.split.validation.len(),
        prepared.split.test.len(),
        prepared.preprocess.kept_indices.len(),
    );
    println!("wrote {}", dir.display());
    Ok(())
}

/// Trains the convolutional detector and saves the model plus its
/// learning curve.
pub fn cmd_train(config: &RunConfig, mode: Mode, out: &Path) -> Result<()> {
    let prepared = prepared_from(config)?;
    let model_config = base_model_config(config, mode);
    let (model, epochs) = train(&model_config, &prepared.split)?;
    fs::create_dir_all(out)?;

    let curve_path = out.join(format!("epochs_{}.csv", mode.name()));
    emit_epoch_curves(&epochs, &curve_path)?;

    let envelope =
        ModelEnvelope::new(TrainedModel::Cnn(model), mode.task(), prepared.preprocess.clone());
    let model_path = out.join(format!("model_{}.json", mode.name()));
    envelope.save(&model_path)?;

    let last = epochs.last().expect("training always runs at least one epoch");
    println!(
        "trained {} model: {} epochs, final val accuracy {}%",
        mode.name(),
        epochs.len(),
        percent_2dp(last.val_accuracy),
    );
    println!("wrote {}", model_path.display());
    println!("wrote {}", curve_path.display());
    Ok(())
}

/// Scores a saved model on the held-out test split of the configured data.
pub fn cmd_eval(config: &RunConfig, model_path: &Path, out: &Path) -> Result<MetricsReport> {
    let envelope = ModelEnvelope::load(model_path)?;
    let prepared = prepared_from(config)?;

    let mut actual = Vec::with_capacity(prepared.raw.test.len());
    let mut predicted = Vec::with_capacity(prepared.raw.test.len());
    for record in &prepared.raw.test {
        let class = regroup_label(record.label8);
        actual.push(match envelope.task {
            TaskLabel::Binary => usize::from(class != ClassLabel4::Normal),
            TaskLabel::Multiclass => class.id(),
        });
        predicted.push(envelope.predict_raw(&record.features)?);
    }
    let class_names = match envelope.task {
        TaskLabel::Binary => binary_class_names(),
        TaskLabel::Multiclass => multiclass_class_names(),
    };
    let report = MetricsReport::from_predictions(&actual, &predicted, class_names)?;

    let stem = match envelope.task {
        TaskLabel::Binary => "metrics_binary",
        TaskLabel::Multiclass => "metrics_multiclass",
    };
    let (csv_path, _) = emit_metrics_tables(&report, out, stem)?;
    println!(
        "{} {} on {} test samples: accuracy {}%",
        envelope.model.kind_name(),
        stem.trim_start_matches("metrics_"),
        report.total,
        percent_2dp(report.accuracy),
    );
    println!("wrote {}", csv_path.display());
    Ok(report)
}

fn task_labels(prepared: &PreparedData, mode: Mode) -> (Vec<usize>, Vec<usize>, usize) {
    let pick = |samples: &[flowsentry_core::dataset::Sample]| -> Vec<usize> {
        samples
            .iter()
            .map(|s| match mode {
                Mode::Binary => s.binary.id(),
                Mode::Multiclass => s.label4.id(),
            })
            .collect()
    };
    let n_classes = match mode {
        Mode::Binary => 2,
        Mode::Multiclass => 4,
    };
    (pick(&prepared.split.train), pick(&prepared.split.test), n_classes)
}

/// Trains the detector and both baselines under both labelings and emits
/// the accuracy comparison table.
pub fn cmd_compare(config: &RunConfig, out: &Path) -> Result<ComparisonTable> {
    let prepared = prepared_from(config)?;
    let train_features: Vec<_> =
        prepared.split.train.iter().map(|s| s.features.clone()).collect();
    let test_features: Vec<_> = prepared.split.test.iter().map(|s| s.features.clone()).collect();

    let mut cnn_acc = [0.0f64; 2];
    let mut dt_acc = [0.0f64; 2];
    let mut knn_acc = [0.0f64; 2];
    for (i, mode) in [Mode::Binary, Mode::Multiclass].into_iter().enumerate() {
        let (train_labels, test_labels, n_classes) = task_labels(&prepared, mode);
        let accuracy_of = |predictions: &[usize]| {
            predictions.iter().zip(&test_labels).filter(|(p, a)| p == a).count() as f64
                / test_labels.len() as f64
        };

        let (model, _) = train(&base_model_config(config, mode), &prepared.split)?;
        cnn_acc[i] = dataset_loss_accuracy(&model, &prepared.split.test)?.1;

        let tree = dt_fit(&train_features, &train_labels, n_classes, config.tree_config())?;
        let tree_predictions: Vec<usize> =
            test_features.iter().map(|f| tree.predict(f)).collect::<Result<_>>()?;
        dt_acc[i] = accuracy_of(&tree_predictions);

        let knn =
            knn_fit(&train_features, &train_labels, n_classes, config.knn_config(), config.seed)?;
        let knn_predictions: Vec<usize> =
            test_features.iter().map(|f| knn.predict(f)).collect::<Result<_>>()?;
        knn_acc[i] = accuracy_of(&knn_predictions);
    }

    let table = ComparisonTable::new(vec![
        ComparisonRow {
            algorithm: "cnn".into(),
            binary_accuracy: cnn_acc[0],
            multiclass_accuracy: cnn_acc[1],
        },
        ComparisonRow {
            algorithm: "decision_tree".into(),
            binary_accuracy: dt_acc[0],
            multiclass_accuracy: dt_acc[1],
        },
        ComparisonRow {
            algorithm: "rsl_knn".into(),
            binary_accuracy: knn_acc[0],
            multiclass_accuracy: knn_acc[1],
        },
    ])?;
    let (csv_path, _) = table.emit(out)?;
    print!("{}", table.csv_string());
    println!("wrote {}", csv_path.display());
    Ok(table)
}

const BUNDLED_SCENARIOS: &[(&str, &str)] = &[
    ("normal", include_str!("../scenarios/normal.json")),
    ("command-injection", include_str!("../scenarios/command-injection.json")),
    ("rule-injection", include_str!("../scenarios/rule-injection.json")),
    ("rule-modification", include_str!("../scenarios/rule-modification.json")),
];

pub fn bundled_scenario_names() -> Vec<&'static str> {
    BUNDLED_SCENARIOS.iter().map(|(name, _)| *name).collect()
}

/// A bundled scenario name, or a path to a script file.
pub fn resolve_scenario(name_or_path: &str) -> Result<(String, Vec<ScenarioStep>)> {
    if let Some((name, text)) = BUNDLED_SCENARIOS.iter().find(|(name, _)| *name == name_or_path)
    {
        return Ok((name.to_string(), load_scenario(text)?));
    }
    let path = PathBuf::from(name_or_path);
    if path.exists() {
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| name_or_path.to_string());
        return Ok((label, load_scenario(&fs::read_to_string(&path)?)?));
    }
    Err(Error::data(format!(
        "unknown scenario {name_or_path:?}: not a bundled name ({}) and no such file",
        bundled_scenario_names().join(", "),
    )))
}

/// Trains the detector, stands up the two-switch network with it in the
/// controller loop, replays the scenario, and writes trace, ledger, audit
/// files, and the run summary. Returns the process exit code: 0, or 3 when
/// an audit expectation written in the script did not hold.
pub fn cmd_simulate(config: &RunConfig, scenario: &str, out: &Path) -> Result<i32> {
    let (label, steps) = resolve_scenario(scenario)?;
    let prepared = prepared_from(config)?;
    let (model, _) = train(&base_model_config(config, Mode::Binary), &prepared.split)?;
    let envelope =
        ModelEnvelope::new(TrainedModel::Cnn(model), TaskLabel::Binary, prepared.preprocess.clone());
    let mut pool = PayloadPool::verified(&prepared.raw.test, &envelope, config.seed)?;

    let mut sim = Simulation::new(&TopologySpec::default_two_switch())?;
    sim.set_ids(envelope);
    fs::create_dir_all(out)?;
    let outcome = run_scenario(&mut sim, &steps, &mut pool, Some(out))?;

    sim.trace().save_jsonl(&out.join("trace.jsonl"))?;
    sim.chain().save_jsonl(&out.join("ledger.jsonl"))?;
    let report = emit_scenario_report(sim.trace(), &out.join("scenario_report.json"))?;

    println!(
        "scenario {label}: {} packets sent, {} delivered, {} dropped",
        report.packets_sent, report.packets_delivered, report.packets_dropped
    );
    println!(
        "ledger blocks appended: {}; block rules installed: {}; audits: {}",
        report.ledger_blocks_appended, report.block_rules_installed, report.audits_run
    );
    for (kind, count) in &report.verdicts {
        println!("verdict {kind}: {count}");
    }
    println!("wrote {}", out.display());

    if outcome.expectations_met() {
        Ok(0)
    } else {
        for failure in &outcome.expectation_failures {
            eprintln!("detection assertion failed: {failure}");
        }
        Ok(3)
    }
}
