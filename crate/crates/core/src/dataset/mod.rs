//! Dataset ingestion and preprocessing for the gas-pipeline SCADA traffic corpus.
//!
//! The pipeline is: load raw 27-feature records, drop features that never vary,
//! regroup the 8 source labels into 4 task labels, stratified-split 70/15/15,
//! then min-max normalize with parameters fitted on the training split only.

mod arff;
mod synth;

pub use synth::{synthesize_dataset, SynthConfig};

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of raw features each record carries before preprocessing.
pub const RAW_FEATURE_COUNT: usize = 27;

/// Default train/validation/test proportions.
pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.70, 0.15, 0.15);

/// Source labels as they appear in the dataset: normal traffic plus seven
/// attack categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel8 {
    Normal = 0,
    Nmri = 1,
    Cmri = 2,
    Msci = 3,
    Mpci = 4,
    Mfci = 5,
    Dos = 6,
    Recon = 7,
}

impl ClassLabel8 {
    pub const ALL: [ClassLabel8; 8] = [
        ClassLabel8::Normal,
        ClassLabel8::Nmri,
        ClassLabel8::Cmri,
        ClassLabel8::Msci,
        ClassLabel8::Mpci,
        ClassLabel8::Mfci,
        ClassLabel8::Dos,
        ClassLabel8::Recon,
    ];

    pub fn from_id(id: i64) -> Result<Self> {
        match id {
            0 => Ok(ClassLabel8::Normal),
            1 => Ok(ClassLabel8::Nmri),
            2 => Ok(ClassLabel8::Cmri),
            3 => Ok(ClassLabel8::Msci),
            4 => Ok(ClassLabel8::Mpci),
            5 => Ok(ClassLabel8::Mfci),
            6 => Ok(ClassLabel8::Dos),
            7 => Ok(ClassLabel8::Recon),
            other => Err(Error::data(format!("label {other} outside 0..7"))),
        }
    }

    pub fn id(self) -> usize {
        self as usize
    }
}

/// Task labels after regrouping the five injection subclasses into one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel4 {
    Normal = 0,
    Injection = 1,
    Dos = 2,
    Recon = 3,
}

impl ClassLabel4 {
    pub const ALL: [ClassLabel4; 4] = [
        ClassLabel4::Normal,
        ClassLabel4::Injection,
        ClassLabel4::Dos,
        ClassLabel4::Recon,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Result<Self> {
        match id {
            0 => Ok(ClassLabel4::Normal),
            1 => Ok(ClassLabel4::Injection),
            2 => Ok(ClassLabel4::Dos),
            3 => Ok(ClassLabel4::Recon),
            other => Err(Error::data(format!("class id {other} outside 0..3"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel4::Normal => "Normal",
            ClassLabel4::Injection => "Injection",
            ClassLabel4::Dos => "DoS",
            ClassLabel4::Recon => "Reconnaissance",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "normal" => Ok(ClassLabel4::Normal),
            "injection" => Ok(ClassLabel4::Injection),
            "dos" => Ok(ClassLabel4::Dos),
            "recon" | "reconnaissance" => Ok(ClassLabel4::Recon),
            other => Err(Error::data(format!("unknown class name {other:?}"))),
        }
    }
}

impl fmt::Display for ClassLabel4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Two-way label for anomaly detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryLabel {
    Normal = 0,
    Attack = 1,
}

impl BinaryLabel {
    pub fn id(self) -> usize {
        self as usize
    }
}

/// One unprocessed dataset row: 27 raw feature values plus its source label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub features: Vec<f64>,
    pub label8: ClassLabel8,
}

impl RawRecord {
    pub fn new(features: Vec<f64>, label8: ClassLabel8) -> Result<Self> {
        if features.len() != RAW_FEATURE_COUNT {
            return Err(Error::data(format!(
                "expected {RAW_FEATURE_COUNT} features, got {}",
                features.len()
            )));
        }
        Ok(RawRecord { features, label8 })
    }
}

/// A normalized feature vector; every value lies in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Per-feature min/max fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl NormalizationParams {
    /// Fits per-feature minima and maxima over raw training vectors.
    pub fn fit(train: &[Vec<f64>]) -> Result<Self> {
        let first = train
            .first()
            .ok_or_else(|| Error::data("cannot fit normalization on empty training data"))?;
        let width = first.len();
        let mut mins = vec![f64::INFINITY; width];
        let mut maxs = vec![f64::NEG_INFINITY; width];
        for row in train {
            if row.len() != width {
                return Err(Error::Shape(format!(
                    "normalization fit: row width {} != {}",
                    row.len(),
                    width
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                mins[j] = mins[j].min(x);
                maxs[j] = maxs[j].max(x);
            }
        }
        Ok(NormalizationParams { mins, maxs })
    }

    /// Maps each feature to (x - min) / (max - min), clamped to [0, 1].
    /// Zero-range features map to 0.
    pub fn transform(&self, raw: &[f64]) -> Result<FeatureVector> {
        if raw.len() != self.mins.len() {
            return Err(Error::Shape(format!(
                "transform: got {} features, params cover {}",
                raw.len(),
                self.mins.len()
            )));
        }
        let values = raw
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let range = self.maxs[j] - self.mins[j];
                if range == 0.0 {
                    0.0
                } else {
                    ((x - self.mins[j]) / range).clamp(0.0, 1.0)
                }
            })
            .collect();
        Ok(FeatureVector(values))
    }

    /// Recovers raw values for features with a nonzero range. Zero-range
    /// features come back as their fitted constant.
    pub fn inverse_transform(&self, v: &FeatureVector) -> Result<Vec<f64>> {
        if v.len() != self.mins.len() {
            return Err(Error::Shape(format!(
                "inverse transform: got {} features, params cover {}",
                v.len(),
                self.mins.len()
            )));
        }
        Ok(v.0
            .iter()
            .enumerate()
            .map(|(j, &y)| self.mins[j] + y * (self.maxs[j] - self.mins[j]))
            .collect())
    }

    pub fn width(&self) -> usize {
        self.mins.len()
    }
}

/// Feature selection plus normalization, persisted next to every trained model
/// so inference applies the exact transform the model saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub kept_indices: Vec<usize>,
    #[serde(flatten)]
    pub norm: NormalizationParams,
}

impl Preprocess {
    /// Selects the kept features out of a raw record and normalizes them.
    pub fn apply(&self, raw: &[f64]) -> Result<FeatureVector> {
        let max_idx = self.kept_indices.iter().copied().max().unwrap_or(0);
        if raw.len() <= max_idx {
            return Err(Error::Shape(format!(
                "raw record has {} features but index {} is selected",
                raw.len(),
                max_idx
            )));
        }
        let selected: Vec<f64> = self.kept_indices.iter().map(|&i| raw[i]).collect();
        self.norm.transform(&selected)
    }
}

/// One fully preprocessed sample with both task labelings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: FeatureVector,
    pub label4: ClassLabel4,
    pub binary: BinaryLabel,
}

/// Stratified raw-record partition at the original feature width, before
/// column selection or normalization.
#[derive(Debug, Clone)]
pub struct RawSplit {
    pub train: Vec<RawRecord>,
    pub validation: Vec<RawRecord>,
    pub test: Vec<RawRecord>,
    pub seed: u64,
}

/// Normalized train/validation/test samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
    pub seed: u64,
}

/// Everything `prepare` produces: normalized splits, the raw partition they
/// came from, and the fitted preprocessing parameters.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub split: DatasetSplit,
    pub raw: RawSplit,
    pub preprocess: Preprocess,
}

/// On-disk dataset formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Arff,
}

/// Loads raw records from a CSV or ARFF file.
///
/// CSV rows hold 27 numeric columns followed by an integer label in 0..7; a
/// single header row is tolerated. Malformed rows are reported with their
/// 1-based line number.
pub fn load_records(path: &Path, format: DataFormat) -> Result<Vec<RawRecord>> {
    let file = File::open(path).map_err(|e| {
        Error::data(format!("cannot open {}: {e}", path.display()))
    })?;
    let mut text = String::new();
    BufReader::new(file).read_to_string(&mut text)?;
    match format {
        DataFormat::Csv => parse_csv(&text),
        DataFormat::Arff => arff::parse_arff(&text),
    }
}

/// Guesses the format from the file extension; `.arff` is ARFF, anything else
/// is treated as CSV.
pub fn load_records_auto(path: &Path) -> Result<Vec<RawRecord>> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("arff") => DataFormat::Arff,
        _ => DataFormat::Csv,
    };
    load_records(path, format)
}

fn parse_csv(text: &str) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 1;
        let row = row.map_err(|e| Error::parse(line, e.to_string()))?;
        let fields: Vec<&str> = row.iter().map(|f| f.trim()).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        // A single non-numeric first row is accepted as a header.
        if line == 1 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        records.push(parse_numeric_row(&fields, line)?);
    }
    Ok(records)
}

pub(crate) fn parse_numeric_row(fields: &[&str], line: usize) -> Result<RawRecord> {
    if fields.len() != RAW_FEATURE_COUNT + 1 {
        return Err(Error::parse(
            line,
            format!(
                "expected {} columns (27 features + label), got {}",
                RAW_FEATURE_COUNT + 1,
                fields.len()
            ),
        ));
    }
    let mut features = Vec::with_capacity(RAW_FEATURE_COUNT);
    for (j, field) in fields[..RAW_FEATURE_COUNT].iter().enumerate() {
        let value: f64 = field
            .parse()
            .map_err(|_| Error::parse(line, format!("non-numeric feature in column {}", j + 1)))?;
        if !value.is_finite() {
            return Err(Error::parse(
                line,
                format!("non-finite feature in column {}", j + 1),
            ));
        }
        features.push(value);
    }
    let label_field = fields[RAW_FEATURE_COUNT];
    let label_id: i64 = label_field
        .parse::<f64>()
        .ok()
        .filter(|v| v.fract() == 0.0)
        .map(|v| v as i64)
        .ok_or_else(|| Error::parse(line, format!("non-integer label {label_field:?}")))?;
    let label8 = ClassLabel8::from_id(label_id)
        .map_err(|_| Error::parse(line, format!("label {label_id} outside 0..7")))?;
    Ok(RawRecord { features, label8 })
}

/// Removes every feature that takes exactly one distinct value across all
/// records. Returns the reduced records and the kept column indices, sorted
/// ascending.
pub fn drop_constant_features(records: &[RawRecord]) -> Result<(Vec<RawRecord>, Vec<usize>)> {
    let first = records
        .first()
        .ok_or_else(|| Error::data("cannot drop features from an empty record list"))?;
    let width = first.features.len();
    let mut varies = vec![false; width];
    for record in records.iter().skip(1) {
        for j in 0..width {
            if record.features[j] != first.features[j] {
                varies[j] = true;
            }
        }
    }
    let kept_indices: Vec<usize> = (0..width).filter(|&j| varies[j]).collect();
    // All-constant input would leave zero features; that is still a valid
    // reduction only if at least one column varies.
    if kept_indices.is_empty() {
        return Err(Error::data("every feature is constant; nothing left to keep"));
    }
    let reduced = records
        .iter()
        .map(|r| RawRecord {
            features: kept_indices.iter().map(|&j| r.features[j]).collect(),
            label8: r.label8,
        })
        .collect();
    Ok((reduced, kept_indices))
}

/// Maps a source label to its task group: the five injection subclasses
/// collapse into one class.
pub fn regroup_label(label: ClassLabel8) -> ClassLabel4 {
    match label {
        ClassLabel8::Normal => ClassLabel4::Normal,
        ClassLabel8::Nmri
        | ClassLabel8::Cmri
        | ClassLabel8::Msci
        | ClassLabel8::Mpci
        | ClassLabel8::Mfci => ClassLabel4::Injection,
        ClassLabel8::Dos => ClassLabel4::Dos,
        ClassLabel8::Recon => ClassLabel4::Recon,
    }
}

/// Collapses a source label to normal-vs-attack.
pub fn to_binary(label: ClassLabel8) -> BinaryLabel {
    if label == ClassLabel8::Normal {
        BinaryLabel::Normal
    } else {
        BinaryLabel::Attack
    }
}

/// Stratified split of records into train/validation/test.
///
/// Strata are the regrouped 4-way labels. Within each stratum records are
/// shuffled with a seeded RNG and apportioned by largest remainder; a final
/// rebalance pins the global split sizes to the rounded targets, so per-class
/// counts stay within one sample of exact proportionality.
pub fn split(records: &[RawRecord], ratios: (f64, f64, f64), seed: u64) -> Result<RawSplit> {
    let (r_train, r_val, r_test) = ratios;
    let sum = r_train + r_val + r_test;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::data(format!("split ratios sum to {sum}, expected 1")));
    }
    if records.is_empty() {
        return Err(Error::data("cannot split an empty record list"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = [r_train, r_val, r_test];
    let n = records.len();
    let global_target = largest_remainder(n, &ratio);

    // Stratum order is fixed by class id so the shuffle stream is stable.
    let mut strata: BTreeMap<ClassLabel4, Vec<usize>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        strata.entry(regroup_label(record.label8)).or_default().push(i);
    }

    // buckets[s][class] holds shuffled record indices assigned to split s.
    let mut buckets: [Vec<Vec<usize>>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut ideals: Vec<[f64; 3]> = Vec::new();
    for (_, mut members) in strata {
        members.shuffle(&mut rng);
        let counts = largest_remainder(members.len(), &ratio);
        let ideal = [
            members.len() as f64 * ratio[0],
            members.len() as f64 * ratio[1],
            members.len() as f64 * ratio[2],
        ];
        ideals.push(ideal);
        let mut offset = 0;
        for (s, &count) in counts.iter().enumerate() {
            buckets[s].push(members[offset..offset + count].to_vec());
            offset += count;
        }
    }

    rebalance(&mut buckets, &ideals, &global_target);

    let collect = |bucket: &Vec<Vec<usize>>| -> Vec<RawRecord> {
        bucket
            .iter()
            .flatten()
            .map(|&i| records[i].clone())
            .collect()
    };
    let out = RawSplit {
        train: collect(&buckets[0]),
        validation: collect(&buckets[1]),
        test: collect(&buckets[2]),
        seed,
    };
    if out.train.is_empty() || out.validation.is_empty() || out.test.is_empty() {
        return Err(Error::data(
            "split produced an empty partition; not enough records for these ratios",
        ));
    }
    Ok(out)
}

/// Apportions `n` items to parts proportional to `ratios` using the largest
/// remainder method; ties go to the earlier part.
fn largest_remainder(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let ideal: Vec<f64> = ratios.iter().map(|r| n as f64 * r).collect();
    let mut counts = [0usize; 3];
    let mut assigned = 0;
    for (s, &x) in ideal.iter().enumerate() {
        counts[s] = x.floor() as usize;
        assigned += counts[s];
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &s in order.iter().take(n - assigned) {
        counts[s] += 1;
    }
    counts
}

/// Moves single samples between splits until each split hits its global
/// target count. Donor and receiver classes are chosen by current deviation
/// from per-class ideals, which keeps every class within one sample of
/// proportional.
fn rebalance(buckets: &mut [Vec<Vec<usize>>; 3], ideals: &[[f64; 3]], target: &[usize; 3]) {
    loop {
        let totals: Vec<usize> = buckets.iter().map(|b| b.iter().map(Vec::len).sum()).collect();
        let donor = (0..3).find(|&s| totals[s] > target[s]);
        let receiver = (0..3).find(|&s| totals[s] < target[s]);
        let (Some(from), Some(to)) = (donor, receiver) else {
            return;
        };
        let n_classes = ideals.len();
        let best_class = (0..n_classes)
            .filter(|&c| !buckets[from][c].is_empty())
            .max_by(|&a, &b| {
                let da = deviation(buckets, ideals, from, a) - deviation(buckets, ideals, to, a);
                let db = deviation(buckets, ideals, from, b) - deviation(buckets, ideals, to, b);
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .expect("donor split is non-empty");
        let moved = buckets[from][best_class]
            .pop()
            .expect("filtered to non-empty classes");
        buckets[to][best_class].push(moved);
    }
}

fn deviation(buckets: &[Vec<Vec<usize>>; 3], ideals: &[[f64; 3]], s: usize, class: usize) -> f64 {
    buckets[s][class].len() as f64 - ideals[class][s]
}

/// Full preprocessing pipeline: drop constant features, stratified split,
/// fit normalization on the training portion, transform every split.
pub fn prepare(records: &[RawRecord], ratios: (f64, f64, f64), seed: u64) -> Result<PreparedData> {
    let (_, kept_indices) = drop_constant_features(records)?;
    let raw = split(records, ratios, seed)?;
    let select = |features: &[f64]| -> Vec<f64> {
        kept_indices.iter().map(|&i| features[i]).collect()
    };
    let train_features: Vec<Vec<f64>> =
        raw.train.iter().map(|r| select(&r.features)).collect();
    let norm = NormalizationParams::fit(&train_features)?;
    let preprocess = Preprocess { kept_indices, norm };
    let to_samples = |part: &[RawRecord]| -> Result<Vec<Sample>> {
        part.iter()
            .map(|r| {
                Ok(Sample {
                    features: preprocess.apply(&r.features)?,
                    label4: regroup_label(r.label8),
                    binary: to_binary(r.label8),
                })
            })
            .collect()
    };
    let split = DatasetSplit {
        train: to_samples(&raw.train)?,
        validation: to_samples(&raw.validation)?,
        test: to_samples(&raw.test)?,
        seed,
    };
    Ok(PreparedData { split, raw, preprocess })
}
