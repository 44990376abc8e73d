//! Property checks shared by the granular property suite and the acceptance
//! gate. Every function panics on violation and returns a short detail line
//! on success.

use leaklab_core::{
    balanced_accuracy, group_holdout, kfold_split, knn_fit, leave_one_group_out, rng_from,
    run_segmentation_experiment, run_tuning_experiment, ttest_scores, welch_psd, ConfusionMatrix,
    Error, KnnConfig, Metric, PhantomConfig, SegExpConfig, TuneExpConfig, WelchParams,
};

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn oracle_distance(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .fold(0.0, |s, (x, y)| s + (x - y) * (x - y))
            .sqrt(),
        Metric::Manhattan => a.iter().zip(b).fold(0.0, |s, (x, y)| s + (x - y).abs()),
        Metric::Chebyshev => a.iter().zip(b).fold(0.0, |s, (x, y)| s.max((x - y).abs())),
        Metric::Cosine => {
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for (x, y) in a.iter().zip(b) {
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
            let denom = na.sqrt() * nb.sqrt();
            1.0 - if denom > 0.0 { dot / denom } else { 0.0 }
        }
    }
}

/// Plain-loop kNN: standardize with train statistics, stable-sort neighbors
/// by distance (ascending train index on ties), majority vote, vote ties to
/// the overall nearest neighbor's label.
fn oracle_knn(
    train: &Array2<f64>,
    labels: &[u8],
    queries: &Array2<f64>,
    cfg: &KnnConfig,
) -> Vec<u8> {
    let f = train.ncols();
    let n = train.nrows();
    let (mut tr, mut qu) = (train.clone(), queries.clone());
    if cfg.standardize {
        for j in 0..f {
            let mean = (0..n).map(|r| train[(r, j)]).sum::<f64>() / n as f64;
            if n < 2 {
                continue;
            }
            let ss = (0..n).map(|r| (train[(r, j)] - mean).powi(2)).sum::<f64>();
            let sd = (ss / (n - 1) as f64).sqrt();
            if sd > 0.0 {
                for r in 0..n {
                    tr[(r, j)] = (tr[(r, j)] - mean) / sd;
                }
                for r in 0..qu.nrows() {
                    qu[(r, j)] = (qu[(r, j)] - mean) / sd;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(qu.nrows());
    for q in 0..qu.nrows() {
        let query: Vec<f64> = (0..f).map(|j| qu[(q, j)]).collect();
        let mut order: Vec<(f64, usize)> = (0..n)
            .map(|r| {
                let row: Vec<f64> = (0..f).map(|j| tr[(r, j)]).collect();
                (oracle_distance(cfg.metric, &row, &query), r)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let nearest = &order[..cfg.k];
        let mut counts = [0usize; 256];
        for &(_, r) in nearest {
            counts[labels[r] as usize] += 1;
        }
        let top = *counts.iter().max().unwrap();
        let tied = counts.iter().filter(|&&c| c == top).count();
        let winner = if tied > 1 {
            labels[nearest[0].1]
        } else {
            counts.iter().position(|&c| c == top).unwrap() as u8
        };
        out.push(winner);
    }
    out
}

pub fn check_knn_oracle(cases: usize) -> String {
    let mut rng = rng_from(0xC0FFEE);
    let metrics = [
        Metric::Euclidean,
        Metric::Manhattan,
        Metric::Chebyshev,
        Metric::Cosine,
    ];
    for case in 0..cases {
        let k = rng.gen_range(1..=5usize);
        let n_train = rng.gen_range(k..=50usize);
        let n_test = rng.gen_range(1..=8usize);
        let dims = rng.gen_range(1..=6usize);
        let lattice = rng.gen_bool(0.3);
        let draw = |rng: &mut _| -> f64 {
            if lattice {
                rand::Rng::gen_range(rng, -2i32..=2) as f64
            } else {
                rand::Rng::gen_range(rng, -10.0..10.0)
            }
        };
        let train = Array2::from_shape_fn((n_train, dims), |_| draw(&mut rng));
        let queries = Array2::from_shape_fn((n_test, dims), |_| draw(&mut rng));
        let labels: Vec<u8> = (0..n_train).map(|_| rng.gen_range(0..=1u8)).collect();
        let cfg = KnnConfig {
            k,
            metric: metrics[rng.gen_range(0..metrics.len())],
            standardize: rng.gen_bool(0.5),
        };
        let model = knn_fit(train.view(), &labels, &cfg).unwrap();
        let got = model.predict(queries.view()).unwrap();
        let want = oracle_knn(&train, &labels, &queries, &cfg);
        assert_eq!(
            got, want,
            "case {case}: k={k} n={n_train} dims={dims} lattice={lattice} cfg={cfg:?}"
        );
    }
    format!("{cases} random instances matched the plain-loop oracle")
}

pub fn check_ttest_hand_case() -> String {
    // groups {1,3} and {5,7}: diff 4, pooled variance 2, t = 4/sqrt(2) = 2.828
    let x = Array2::from_shape_vec((4, 1), vec![1.0, 3.0, 5.0, 7.0]).unwrap();
    let scores = ttest_scores(x.view(), &[0, 0, 1, 1], &[0, 1, 2, 3]).unwrap();
    let expect = 2.0 * 2.0f64.sqrt();
    assert!(
        (scores[0] - expect).abs() < 1e-12,
        "|t| = {} but the hand formula gives {expect}",
        scores[0]
    );
    format!(
        "hand-computed |t| = 2.828 reproduced exactly ({:.6})",
        scores[0]
    )
}

pub fn check_welch_parseval_and_sine() -> String {
    let fs = 128.0;
    let params = WelchParams::default();

    let mut rng = rng_from(42);
    let noise: Vec<f64> = (0..4096).map(|_| StandardNormal.sample(&mut rng)).collect();
    let spectrum = welch_psd(&noise, fs, &params).unwrap();
    let integral: f64 = spectrum.psd.iter().sum::<f64>() * spectrum.delta_f;
    let power = noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
    let rel = (integral - power).abs() / power;
    assert!(
        rel < 0.05,
        "Parseval violated: integral {integral} vs mean square {power}"
    );

    let amp = 2.0;
    let f0 = 10.0;
    let sine: Vec<f64> = (0..4096)
        .map(|n| amp * (2.0 * std::f64::consts::PI * f0 * n as f64 / fs).sin())
        .collect();
    let spectrum = welch_psd(&sine, fs, &params).unwrap();
    let band: f64 = spectrum
        .freqs
        .iter()
        .zip(&spectrum.psd)
        .filter(|(f, _)| **f >= 8.0 && **f < 12.0)
        .map(|(_, p)| p * spectrum.delta_f)
        .sum();
    let expect = amp * amp / 2.0;
    let sine_rel = (band - expect).abs() / expect;
    assert!(
        sine_rel < 0.10,
        "sine band power {band} vs A^2/2 = {expect}"
    );

    format!(
        "Parseval within {:.2}%, sine band power within {:.2}%",
        100.0 * rel,
        100.0 * sine_rel
    )
}

pub fn check_balanced_accuracy_oracle() -> String {
    let mut rng = rng_from(7);
    let mut checked = 0;
    for _ in 0..200 {
        let counts = [
            [rng.gen_range(0..20u64), rng.gen_range(0..20u64)],
            [rng.gen_range(0..20u64), rng.gen_range(0..20u64)],
        ];
        let cm = ConfusionMatrix { counts };
        let row0 = counts[0][0] + counts[0][1];
        let row1 = counts[1][0] + counts[1][1];
        let got = balanced_accuracy(&cm);
        if row0 == 0 && row1 == 0 {
            assert!(matches!(got, Err(Error::Degenerate(_))));
            continue;
        }
        let got = got.unwrap();
        let mut recalls = Vec::new();
        if row0 > 0 {
            recalls.push(counts[0][0] as f64 / row0 as f64);
        }
        if row1 > 0 {
            recalls.push(counts[1][1] as f64 / row1 as f64);
        }
        let want = recalls.iter().sum::<f64>() / recalls.len() as f64;
        assert!(
            (got.value - want).abs() < 1e-15,
            "balanced accuracy {} vs counting oracle {want} on {counts:?}",
            got.value
        );
        assert_eq!(got.excluded_classes.len(), 2 - recalls.len());
        checked += 1;
    }
    format!("{checked} random confusion matrices matched the counting oracle")
}

pub fn check_split_properties() -> String {
    let mut rng = rng_from(13);
    for case in 0..300 {
        let n_rows = rng.gen_range(2..=200usize);
        let k = rng.gen_range(2..=n_rows.min(8));
        let seed = rng.gen::<u64>();

        let plan = kfold_split(n_rows, k, seed).unwrap();
        let mut seen = vec![0usize; n_rows];
        for fold in &plan.folds {
            assert!(
                fold.test_rows.windows(2).all(|w| w[0] < w[1]),
                "unsorted test rows"
            );
            for &r in &fold.test_rows {
                seen[r] += 1;
            }
            let mut both = fold.test_rows.clone();
            both.extend_from_slice(&fold.train_rows);
            both.sort_unstable();
            assert_eq!(
                both,
                (0..n_rows).collect::<Vec<_>>(),
                "case {case}: not a partition"
            );
        }
        assert!(
            seen.iter().all(|&c| c == 1),
            "case {case}: a row missed or repeated as test"
        );
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.test_rows.len()).collect();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        assert!(
            hi - lo <= 1,
            "case {case}: fold sizes {sizes:?} differ by more than 1"
        );

        let n_groups = rng.gen_range(2..=10usize);
        let group_ids: Vec<u32> = (0..n_rows)
            .map(|_| rng.gen_range(0..n_groups as u32))
            .collect();
        let distinct: std::collections::BTreeSet<u32> = group_ids.iter().copied().collect();
        if distinct.len() >= 2 {
            let plan = leave_one_group_out(&group_ids).unwrap();
            assert_eq!(plan.folds.len(), distinct.len());
            for fold in &plan.folds {
                let test_groups: std::collections::BTreeSet<u32> =
                    fold.test_rows.iter().map(|&r| group_ids[r]).collect();
                assert_eq!(test_groups.len(), 1, "LOTO fold holds more than one group");
                let g = *test_groups.iter().next().unwrap();
                assert!(
                    fold.train_rows.iter().all(|&r| group_ids[r] != g),
                    "group {g} leaked into its own training side"
                );
            }

            let fraction = rng.gen_range(0.05..0.8);
            let g = distinct.len();
            let want_test = (fraction * g as f64).ceil() as usize;
            let holdout = group_holdout(&group_ids, fraction, seed);
            if want_test >= g {
                assert!(
                    holdout.is_err(),
                    "holdout must refuse to hold out every group"
                );
            } else {
                let plan = holdout.unwrap();
                let fold = &plan.folds[0];
                let test_groups: std::collections::BTreeSet<u32> =
                    fold.test_rows.iter().map(|&r| group_ids[r]).collect();
                let train_groups: std::collections::BTreeSet<u32> =
                    fold.train_rows.iter().map(|&r| group_ids[r]).collect();
                assert_eq!(test_groups.len(), want_test);
                assert!(
                    test_groups.is_disjoint(&train_groups),
                    "a group straddles the holdout"
                );
                assert_eq!(fold.test_rows.len() + fold.train_rows.len(), n_rows);
            }
        }
    }
    "300 random kfold/LOTO/holdout plans partition rows and keep groups intact".into()
}

pub fn tiny_phantom(seed: u64) -> leaklab_core::TrialSet {
    leaklab_core::generate_phantom(&PhantomConfig {
        n_trials: 8,
        trial_seconds: 4.0,
        n_channels: 2,
        master_seed: seed,
        ..PhantomConfig::default()
    })
    .unwrap()
}

pub fn check_report_determinism() -> String {
    let ts = tiny_phantom(21);
    let seg_cfg = SegExpConfig {
        segment_seconds: vec![4.0, 1.0],
        ..SegExpConfig::default()
    };
    let a = run_segmentation_experiment(&ts, &seg_cfg)
        .unwrap()
        .canonical_json()
        .unwrap();
    let b = run_segmentation_experiment(&ts, &seg_cfg)
        .unwrap()
        .canonical_json()
        .unwrap();
    assert_eq!(a, b, "segmentation reports differ between identical runs");

    let ts = leaklab_core::generate_phantom(&PhantomConfig {
        n_trials: 12,
        trial_seconds: 4.0,
        n_channels: 2,
        master_seed: 22,
        ..PhantomConfig::default()
    })
    .unwrap();
    let tune_cfg = TuneExpConfig {
        grid: Some(vec![
            KnnConfig {
                k: 1,
                ..KnnConfig::default()
            },
            KnnConfig {
                k: 3,
                metric: Metric::Manhattan,
                standardize: true,
            },
        ]),
        ..TuneExpConfig::default()
    };
    let c = run_tuning_experiment(&ts, &tune_cfg, 5)
        .unwrap()
        .canonical_json()
        .unwrap();
    let d = run_tuning_experiment(&ts, &tune_cfg, 5)
        .unwrap()
        .canonical_json()
        .unwrap();
    assert_eq!(c, d, "tuning reports differ between identical runs");
    format!(
        "repeated runs byte-identical ({} and {} canonical bytes)",
        a.len(),
        c.len()
    )
}

pub fn check_roundtrip() -> String {
    let ts = tiny_phantom(33);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phantom-rt");
    leaklab_core::save_trialset(&ts, &path).unwrap();
    let back = leaklab_core::load_trialset(&path).unwrap();
    assert_eq!(ts, back, "trial set changed across save/load");
    for (a, b) in ts.trials.iter().zip(&back.trials) {
        let x: &[f32] = a.signal.as_slice().unwrap();
        let y: &[f32] = b.signal.as_slice().unwrap();
        assert_eq!(x.len(), y.len());
        for (u, v) in x.iter().zip(y) {
            assert_eq!(
                u.to_bits(),
                v.to_bits(),
                "sample bits changed across save/load"
            );
        }
    }
    format!("{} trials round-tripped bit-exactly", ts.n_trials())
}

/// A property check: display name plus the assertion-or-panic body.
pub type Check = (&'static str, fn() -> String);

/// Every property check with its display name, for callers that run the
/// whole battery.
#[allow(dead_code)]
pub fn all_checks() -> Vec<Check> {
    vec![
        ("knn oracle", || check_knn_oracle(1000)),
        ("t-statistic hand case", check_ttest_hand_case),
        ("welch parseval and sine", check_welch_parseval_and_sine),
        ("balanced accuracy oracle", check_balanced_accuracy_oracle),
        ("split properties", check_split_properties),
        ("report determinism", check_report_determinism),
        ("save/load round-trip", check_roundtrip),
    ]
}
