use proptest::prelude::*;

use scfraud::dataset::{label_mask_split, stratified_folds, Label, LabelVector, SplitSpec};
use scfraud::eval::{auc_pr, auc_roc, wilcoxon_signed_rank, WilcoxonResult};
use scfraud::iforest::{build_forest, c_factor, candidate_set, score_from_path, ThresholdConfig};
use scfraud::selftrain::{class_threshold, confidence};
use scfraud::svm::{class_weights, rbf_kernel, train_svm, KernelParams, SolverOptions};
use scfraud::FeatureMatrix;

fn labels_strategy() -> impl Strategy<Value = Vec<u8>> {
    (20usize..300, 0.05f64..0.5).prop_flat_map(|(n, rate)| {
        proptest::collection::vec(proptest::bool::weighted(rate), n).prop_map(|v| v.into_iter().map(u8::from).collect())
    })
}

fn rows(n: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, d), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_partition_and_balance(y in labels_strategy(), k in 2usize..8, seed in any::<u64>()) {
        let pos = y.iter().filter(|&&v| v == 1).count();
        prop_assume!(pos >= k && y.len() - pos >= k);
        let labels = LabelVector::from_classes(&y);
        let spec = SplitSpec { labeled_fraction: 0.1, n_folds: k, seed };
        let folds = stratified_folds(&labels, &spec).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
        let per_fold: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| y[i] == 1).count()).collect();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap() <= 1);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(folds, stratified_folds(&labels, &spec).unwrap());
    }

    #[test]
    fn mask_is_stratified_partition(y in labels_strategy(), f in 0.05f64..1.0, seed in any::<u64>()) {
        prop_assume!(y.contains(&0) && y.contains(&1));
        let labels = LabelVector::from_classes(&y);
        let m = label_mask_split(&labels, f, seed).unwrap();
        let n = y.len();
        prop_assert_eq!(m.labeled.len(), (f * n as f64).round() as usize);
        let mut all: Vec<usize> = m.labeled.iter().chain(&m.unlabeled).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        for class in [0u8, 1] {
            let total = y.iter().filter(|&&v| v == class).count() as f64;
            let got = m.labeled.iter().filter(|&&i| y[i] == class).count() as f64;
            let ideal = total * m.labeled.len() as f64 / n as f64;
            prop_assert!((got - ideal).abs() <= 1.0 + 1e-9, "class {} got {} ideal {}", class, got, ideal);
        }
    }

    #[test]
    fn unknown_rows_never_labeled(y in labels_strategy(), seed in any::<u64>()) {
        prop_assume!(y.iter().filter(|&&v| v == 1).count() >= 2 && y.iter().filter(|&&v| v == 0).count() >= 2);
        let mut values: Vec<Label> = y.iter().map(|&v| Label::from_class(v)).collect();
        values.push(Label::Unknown);
        let labels = LabelVector::new(values);
        let m = label_mask_split(&labels, 0.5, seed).unwrap();
        prop_assert!(!m.labeled.contains(&y.len()));
        prop_assert!(m.unlabeled.contains(&y.len()));
    }

    #[test]
    fn auc_roc_matches_pair_counting(y in labels_strategy(), seed in any::<u64>()) {
        prop_assume!(y.contains(&0) && y.contains(&1));
        let scores: Vec<f64> = (0..y.len()).map(|i| ((i as u64).wrapping_mul(seed | 1) % 17) as f64).collect();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    den += 1.0;
                    num += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let auc = auc_roc(&y, &scores).unwrap();
        prop_assert!((auc - num / den).abs() < 1e-9);
        let ap = auc_pr(&y, &scores).unwrap();
        prop_assert!((0.0..=1.0).contains(&ap));
    }

    #[test]
    fn wilcoxon_is_symmetric(a in proptest::collection::vec(-5i32..5, 5..30), b in proptest::collection::vec(-5i32..5, 5..30)) {
        let n = a.len().min(b.len());
        let a: Vec<f64> = a[..n].iter().map(|&v| v as f64).collect();
        let b: Vec<f64> = b[..n].iter().map(|&v| v as f64).collect();
        let ab = wilcoxon_signed_rank(&a, &b).unwrap();
        let ba = wilcoxon_signed_rank(&b, &a).unwrap();
        prop_assert_eq!(ab.p_value(), ba.p_value());
        if let WilcoxonResult::Test(t) = ab {
            prop_assert!(t.p_value > 0.0 && t.p_value <= 1.0);
            prop_assert!((t.w_plus + t.w_minus - (t.n_nonzero * (t.n_nonzero + 1)) as f64 / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rbf_gram_is_psd(pts in rows(2..12, 3), gamma in 0.01f64..5.0, v in proptest::collection::vec(-1.0f64..1.0, 12)) {
        let n = pts.len();
        let k: Vec<Vec<f64>> = pts.iter().map(|a| pts.iter().map(|b| rbf_kernel(a, b, gamma).unwrap()).collect()).collect();
        let mut quad = 0.0;
        for i in 0..n {
            prop_assert_eq!(k[i][i], 1.0);
            for j in 0..n {
                prop_assert_eq!(k[i][j].to_bits(), k[j][i].to_bits());
                prop_assert!(k[i][j] > 0.0 && k[i][j] <= 1.0);
                quad += v[i] * v[j] * k[i][j];
            }
        }
        prop_assert!(quad >= -1e-9);
    }

    #[test]
    fn class_threshold_monotone(a in 0usize..5000, b in 0usize..5000, target in 1usize..2000) {
        let (lo, hi) = (a.min(b), a.max(b));
        let t_lo = class_threshold(lo, target, 0.85, 0.3);
        let t_hi = class_threshold(hi, target, 0.85, 0.3);
        prop_assert!(t_lo <= t_hi);
        prop_assert!((0.0..=0.999).contains(&t_lo) && (0.0..=0.999).contains(&t_hi));
    }

    #[test]
    fn confidence_in_unit_interval(v in proptest::collection::vec(-10.0f64..10.0, 1..50)) {
        let c = confidence(&v).unwrap();
        prop_assert!(c.iter().all(|x| (0.0..=1.0).contains(x)));
        if v.iter().any(|x| *x != 0.0) {
            prop_assert!(c.contains(&1.0));
        }
    }

    #[test]
    fn anomaly_score_decreases_with_path(a in 0.0f64..30.0, b in 0.0f64..30.0, n in 2usize..1000) {
        let c = c_factor(n);
        let (sa, sb) = (score_from_path(a, c), score_from_path(b, c));
        prop_assert!(sa > 0.0 && sa <= 1.0);
        if a < b {
            prop_assert!(sa > sb);
        }
    }

    #[test]
    fn forest_scores_in_range(pts in rows(10..120, 3), seed in any::<u64>()) {
        let x = FeatureMatrix::from_rows(&pts);
        let forest = build_forest(&x, 20, 64, seed).unwrap();
        let scores = forest.score_all(&x).unwrap();
        prop_assert!(scores.iter().all(|s| *s > 0.0 && *s < 1.0));
        let cfg = ThresholdConfig::default();
        let cand = candidate_set(&scores, &cfg).unwrap();
        let floor = (cfg.contamination * scores.len() as f64).ceil() as usize;
        prop_assert!(cand.indices.len() >= floor);
        prop_assert!(cand.indices.windows(2).all(|w| w[0] < w[1]));
        for (i, s) in scores.iter().enumerate() {
            if *s >= cand.threshold {
                prop_assert!(cand.indices.contains(&i));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn svm_respects_dual_constraints(pts in rows(4..40, 2), flips in proptest::collection::vec(any::<bool>(), 40), c in 0.1f64..50.0) {
        let n = pts.len();
        let mut y: Vec<u8> = flips[..n].iter().map(|&b| u8::from(b)).collect();
        y[0] = 0;
        y[1] = 1;
        let params = KernelParams::new(c, 0.5).with_weights(class_weights(&y));
        let out = train_svm(&FeatureMatrix::from_rows(&pts), &y, &params, &SolverOptions::default()).unwrap();
        let mut eq = 0.0;
        for (a, &label) in out.alphas.iter().zip(&y) {
            prop_assert!(*a >= 0.0 && *a <= params.box_bound(label) + 1e-12);
            eq += if label == 1 { *a } else { -*a };
        }
        prop_assert!(eq.abs() < 1e-6);
    }

    #[test]
    fn svm_is_permutation_invariant(pts in rows(6..30, 2), flips in proptest::collection::vec(any::<bool>(), 30), shift in 1usize..29) {
        let n = pts.len();
        let mut y: Vec<u8> = flips[..n].iter().map(|&b| u8::from(b)).collect();
        y[0] = 0;
        y[1] = 1;
        let params = KernelParams::new(1.0, 0.5).with_weights(class_weights(&y));
        let opts = SolverOptions { tol: 1e-9, max_passes: 10_000 };
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let a = train_svm(&FeatureMatrix::from_rows(&pts), &y, &params, &opts).unwrap().model;
        let p_rows: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let p_y: Vec<u8> = perm.iter().map(|&i| y[i]).collect();
        let b = train_svm(&FeatureMatrix::from_rows(&p_rows), &p_y, &params, &opts).unwrap().model;
        for probe in &pts {
            let (da, db) = (a.decision_value(probe).unwrap(), b.decision_value(probe).unwrap());
            prop_assert!((da - db).abs() < 1e-5, "{} vs {}", da, db);
        }
    }
}
