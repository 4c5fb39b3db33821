//! Property tests: layer outputs against independent brute-force oracles,
//! normalization round-trips, and split/partition guarantees.

use flowsentry_core::dataset::{
    drop_constant_features, prepare, regroup_label, split, synthesize_dataset, ClassLabel4,
    NormalizationParams, SynthConfig, DEFAULT_RATIOS,
};
use flowsentry_core::nn::layers::{
    avgpool1d_forward, conv1d_forward, dense_forward, maxpool1d_forward, softmax,
};
use flowsentry_core::nn::{MetricsReport, Tensor};
use flowsentry_core::report::{metrics_csv_string, percent_2dp};
use proptest::prelude::*;

/// Naive convolution written independently of the library: explicit loops,
/// no shared helpers.
fn oracle_conv(
    input: &[Vec<f64>],
    kernels: &[Vec<Vec<f64>>],
    biases: &[f64],
) -> Vec<Vec<f64>> {
    let length = input[0].len();
    let k = kernels[0][0].len();
    let out_len = length - k + 1;
    let mut out = vec![vec![0.0; out_len]; kernels.len()];
    for (f, kernel) in kernels.iter().enumerate() {
        for i in 0..out_len {
            let mut acc = biases[f];
            for (c, row) in input.iter().enumerate() {
                for kk in 0..k {
                    acc += row[i + kk] * kernel[c][kk];
                }
            }
            out[f][i] = acc;
        }
    }
    out
}

fn to_tensor2(rows: &[Vec<f64>]) -> Tensor {
    let shape = vec![rows.len(), rows[0].len()];
    Tensor::from_vec(shape, rows.iter().flatten().copied().collect()).unwrap()
}

prop_compose! {
    fn conv_case()(
        channels in 1usize..=4,
        filters in 1usize..=4,
        k in 1usize..=5,
        extra in 0usize..=27,
    )(
        input in prop::collection::vec(
            prop::collection::vec(-10.0..10.0f64, k + extra),
            channels..=channels,
        ),
        kernels in prop::collection::vec(
            prop::collection::vec(prop::collection::vec(-3.0..3.0f64, k), channels..=channels),
            filters..=filters,
        ),
        biases in prop::collection::vec(-2.0..2.0f64, filters..=filters),
    ) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>, Vec<f64>) {
        (input, kernels, biases)
    }
}

proptest! {
    #[test]
    fn conv_matches_brute_force((input, kernels, biases) in conv_case()) {
        let t_in = to_tensor2(&input);
        let filters = kernels.len();
        let channels = input.len();
        let k = kernels[0][0].len();
        let t_kern = Tensor::from_vec(
            vec![filters, channels, k],
            kernels.iter().flatten().flatten().copied().collect(),
        ).unwrap();
        let t_bias = Tensor::from_vec(vec![filters], biases.clone()).unwrap();
        let got = conv1d_forward(&t_in, &t_kern, &t_bias).unwrap();
        let want = oracle_conv(&input, &kernels, &biases);
        for f in 0..filters {
            for i in 0..want[f].len() {
                prop_assert!((got.at2(f, i) - want[f][i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn pools_match_brute_force(
        rows in prop::collection::vec(
            prop::collection::vec(-10.0..10.0f64, 2..=32), 1..=4),
        pool in 2usize..=3,
    ) {
        let width = rows.iter().map(Vec::len).min().unwrap();
        prop_assume!(width >= pool);
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r[..width].to_vec()).collect();
        let t = to_tensor2(&rows);
        let (maxed, _) = maxpool1d_forward(&t, pool).unwrap();
        let averaged = avgpool1d_forward(&t, pool).unwrap();
        for (c, row) in rows.iter().enumerate() {
            for i in 0..width / pool {
                let window = &row[i * pool..(i + 1) * pool];
                let m = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let a = window.iter().sum::<f64>() / pool as f64;
                prop_assert!((maxed.at2(c, i) - m).abs() <= 1e-12);
                prop_assert!((averaged.at2(c, i) - a).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dense_matches_brute_force(
        input in prop::collection::vec(-5.0..5.0f64, 1..=16),
        out_dim in 1usize..=8,
        seed_vals in prop::collection::vec(-2.0..2.0f64, 200),
    ) {
        let in_dim = input.len();
        let weights: Vec<f64> = (0..out_dim * in_dim).map(|i| seed_vals[i % seed_vals.len()]).collect();
        let bias: Vec<f64> = (0..out_dim).map(|i| seed_vals[(7 * i) % seed_vals.len()]).collect();
        let t_in = Tensor::from_vec(vec![in_dim], input.clone()).unwrap();
        let t_w = Tensor::from_vec(vec![out_dim, in_dim], weights.clone()).unwrap();
        let t_b = Tensor::from_vec(vec![out_dim], bias.clone()).unwrap();
        let got = dense_forward(&t_in, &t_w, &t_b).unwrap();
        for o in 0..out_dim {
            let mut acc = bias[o];
            for i in 0..in_dim {
                acc += weights[o * in_dim + i] * input[i];
            }
            prop_assert!((got.values()[o] - acc).abs() <= 1e-12);
        }
    }

    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-50.0..50.0f64, 1..=8)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn minmax_transform_stays_in_unit_interval_and_inverts(
        rows in prop::collection::vec(prop::collection::vec(-100.0..100.0f64, 5), 2..20),
        probe in prop::collection::vec(-150.0..150.0f64, 5),
    ) {
        let params = NormalizationParams::fit(&rows).unwrap();
        for row in &rows {
            let v = params.transform(row).unwrap();
            prop_assert!(v.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
            let back = params.inverse_transform(&v).unwrap();
            for (a, b) in row.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
        // Arbitrary probes stay clamped.
        let v = params.transform(&probe).unwrap();
        prop_assert!(v.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn split_partitions_and_is_deterministic(
        normal in 8usize..40,
        injection in 8usize..40,
        dos in 8usize..20,
        recon in 8usize..20,
        seed in 0u64..1000,
    ) {
        let cfg = SynthConfig::grouped(normal, injection, dos, recon);
        let records = synthesize_dataset(&cfg, seed).unwrap();
        let a = split(&records, DEFAULT_RATIOS, seed).unwrap();
        let b = split(&records, DEFAULT_RATIOS, seed).unwrap();
        prop_assert_eq!(&a.train, &b.train);
        prop_assert_eq!(&a.validation, &b.validation);
        prop_assert_eq!(&a.test, &b.test);

        let n = records.len();
        prop_assert_eq!(a.train.len() + a.validation.len() + a.test.len(), n);
        // Global counts match largest-remainder targets.
        let target_train = (n as f64 * 0.70).round() as usize;
        prop_assert!(a.train.len().abs_diff(target_train) <= 1);
        // Union equals input as multisets.
        let canon = |recs: &[flowsentry_core::dataset::RawRecord]| {
            let mut v: Vec<String> = recs.iter().map(|r| format!("{r:?}")).collect();
            v.sort();
            v
        };
        let mut merged = a.train.clone();
        merged.extend(a.validation.clone());
        merged.extend(a.test.clone());
        prop_assert_eq!(canon(&merged), canon(&records));
        // Per-class train proportion within one sample of global proportion.
        for class in ClassLabel4::ALL {
            let total = records.iter().filter(|r| regroup_label(r.label8) == class).count();
            let in_train = a.train.iter().filter(|r| regroup_label(r.label8) == class).count();
            prop_assert!((in_train as f64 - total as f64 * 0.70).abs() <= 1.0);
        }
    }

    #[test]
    fn drop_constant_features_idempotent_on_synthetic(seed in 0u64..500) {
        let cfg = SynthConfig::grouped(12, 12, 8, 8);
        let records = synthesize_dataset(&cfg, seed).unwrap();
        let (once, kept) = drop_constant_features(&records).unwrap();
        let (twice, kept2) = drop_constant_features(&once).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(kept.len(), kept2.len());
        prop_assert_eq!(kept.len(), 18);
    }

    #[test]
    fn prepared_features_always_unit_interval(seed in 0u64..200) {
        let cfg = SynthConfig::grouped(20, 16, 10, 10);
        let records = synthesize_dataset(&cfg, seed).unwrap();
        let prepared = prepare(&records, DEFAULT_RATIOS, seed ^ 0xabcd).unwrap();
        for s in prepared.split.train.iter()
            .chain(&prepared.split.validation)
            .chain(&prepared.split.test)
        {
            prop_assert_eq!(s.features.len(), 18);
            prop_assert!(s.features.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}

fn confusion_strategy() -> impl Strategy<Value = Vec<Vec<usize>>> {
    (2usize..=4).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0usize..50, n..=n), n..=n)
            .prop_filter("needs at least one tallied sample", |m| {
                m.iter().flatten().sum::<usize>() > 0
            })
    })
}

proptest! {
    // The JSON table is exact; every CSV cell is exactly the half-up
    // two-decimal rendering of the corresponding report number.
    #[test]
    fn metrics_tables_reparse_to_the_report(confusion in confusion_strategy()) {
        let names: Vec<String> = (0..confusion.len()).map(|i| format!("c{i}")).collect();
        let report = MetricsReport::from_confusion(confusion, names).unwrap();

        let json = serde_json::to_string(&report).unwrap();
        let reparsed: MetricsReport = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&reparsed, &report);

        let csv = metrics_csv_string(&report);
        let lines: Vec<&str> = csv.lines().collect();
        prop_assert_eq!(lines.len(), report.per_class.len() + 2);
        for (line, m) in lines[1..lines.len() - 1].iter().zip(&report.per_class) {
            let cells: Vec<&str> = line.split(',').collect();
            prop_assert_eq!(cells[0], m.class.as_str());
            prop_assert_eq!(cells[1].to_string(), percent_2dp(m.precision));
            prop_assert_eq!(cells[2].to_string(), percent_2dp(m.recall));
            prop_assert_eq!(cells[3].to_string(), percent_2dp(m.f1));
            prop_assert_eq!(cells[4].parse::<usize>().unwrap(), m.support);
        }
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        prop_assert_eq!(last[0], "macro_avg");
        prop_assert_eq!(last[1].to_string(), percent_2dp(report.macro_precision));
        prop_assert_eq!(last[2].to_string(), percent_2dp(report.macro_recall));
        prop_assert_eq!(last[3].to_string(), percent_2dp(report.macro_f1));
        prop_assert_eq!(last[4].parse::<usize>().unwrap(), report.total);
    }
}
