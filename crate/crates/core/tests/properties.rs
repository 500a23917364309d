use std::collections::{BTreeMap, HashSet};
use std::sync::Mutex;

use mindprobe_core::ablation::{
    ablation_matrix, interpret, occlude, AblationMatrix, OcclusionMode,
};
use mindprobe_core::ann::{
    rbf_fit, train, Activation, Centers, MlpNetwork, Optimizer, TrainConfig,
};
use mindprobe_core::cohort::{builtin_survey, sample_cohort, CohortModel};
use mindprobe_core::eval::{cross_validate, k_fold, score, split};
use mindprobe_core::survey::{
    decode_one_hot, encode_dataset, encode_response, AnswerValue, Dataset, Question, Questionnaire,
    ResponseRecord, Scheme,
};
use mindprobe_core::svm::{
    kernel_eval, kkt_report, tally_votes, train_binary_svm, Kernel, PairLearner, SvmParams,
};
use mindprobe_core::{Classifier, Result};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn builtin_record() -> impl Strategy<Value = ResponseRecord> {
    let q = builtin_survey();
    let counts: Vec<usize> = q
        .input_questions()
        .map(|x| x.option_count().unwrap())
        .collect();
    let ids = q.input_ids();
    (
        counts.into_iter().map(|k| 0..k).collect::<Vec<_>>(),
        0usize..4,
    )
        .prop_map(move |(answers, label)| ResponseRecord {
            respondent_id: "R".into(),
            answers: ids
                .iter()
                .cloned()
                .zip(answers.into_iter().map(AnswerValue::Choice))
                .collect(),
            label: Some(label),
        })
}

fn mixed_survey() -> Questionnaire {
    Questionnaire::new(
        "mixed",
        1,
        vec![
            Question::categorical("A", "a", &["x", "y", "z"]),
            Question::degree("D", "d", 10.0, 100.0),
            Question::categorical("B", "b", &["u", "v"]),
            Question::categorical("L", "l", &["p", "q"]).as_label(),
        ],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_hot_decode_recovers_answers(rec in builtin_record()) {
        let q = builtin_survey();
        let data = encode_dataset(std::slice::from_ref(&rec), &q, Scheme::OneHot).unwrap();
        let decoded = decode_one_hot(&data.features[0], &data.column_map);
        let want: BTreeMap<String, usize> = rec
            .answers
            .iter()
            .map(|(k, v)| match v {
                AnswerValue::Choice(i) => (k.clone(), *i),
                AnswerValue::Degree(_) => unreachable!(),
            })
            .collect();
        prop_assert_eq!(decoded, want);
    }

    #[test]
    fn features_in_unit_interval(a in 0usize..3, d in 10.0f64..=100.0, b in 0usize..2, ordinal in any::<bool>()) {
        let q = mixed_survey();
        let rec = ResponseRecord {
            respondent_id: "x".into(),
            answers: [
                ("A".to_string(), AnswerValue::Choice(a)),
                ("D".to_string(), AnswerValue::Degree(d)),
                ("B".to_string(), AnswerValue::Choice(b)),
            ]
            .into_iter()
            .collect(),
            label: Some(0),
        };
        let scheme = if ordinal { Scheme::Ordinal } else { Scheme::OneHot };
        let row = encode_response(&rec, &q, scheme).unwrap();
        prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn dataset_rows_match_single_encoding(seed in any::<u64>(), n in 0usize..20, ordinal in any::<bool>()) {
        let q = builtin_survey();
        let scheme = if ordinal { Scheme::Ordinal } else { Scheme::OneHot };
        let recs = sample_cohort(&q, n, seed, &CohortModel::Independent).unwrap();
        let data = encode_dataset(&recs, &q, scheme).unwrap();
        for (row, rec) in data.features.iter().zip(&recs) {
            prop_assert_eq!(row, &encode_response(rec, &q, scheme).unwrap());
        }
    }

    #[test]
    fn split_is_a_partition(n in 3usize..400, a in 1u32..20, b in 1u32..20, c in 1u32..20, seed in any::<u64>()) {
        let total = f64::from(a + b + c);
        let ratios = [f64::from(a) / total, f64::from(b) / total, 1.0 - f64::from(a + b) / total];
        if let Ok(s) = split(n, ratios, seed) {
            let mut all = [s.train, s.validation, s.test].concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn k_fold_is_a_partition(n in 2usize..300, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = k_fold(n, k, seed).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn score_ignores_pair_order(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60), seed in any::<u64>()) {
        let (p, t): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let perm = mindprobe_core::rng::permutation(pairs.len(), seed);
        let pp: Vec<usize> = perm.iter().map(|&i| p[i]).collect();
        let tp: Vec<usize> = perm.iter().map(|&i| t[i]).collect();
        let (a1, c1) = score(&p, &t, 4).unwrap();
        let (a2, c2) = score(&pp, &tp, 4).unwrap();
        prop_assert_eq!(a1, a2);
        prop_assert_eq!(c1, c2);
    }

    #[test]
    fn occlusion_is_idempotent(seed in any::<u64>(), mask in 1u16..512, zero in any::<bool>()) {
        let q = builtin_survey();
        let recs = sample_cohort(&q, 30, seed, &CohortModel::Independent).unwrap();
        let data = encode_dataset(&recs, &q, Scheme::OneHot).unwrap();
        let ids: Vec<String> = q.input_ids().into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| s).collect();
        let mode = if zero { OcclusionMode::ZeroFill } else { OcclusionMode::MeanImpute };
        let once = occlude(&data, &ids, mode).unwrap();
        let twice = occlude(&once, &ids, mode).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn interpret_is_scale_consistent(cells in prop::collection::vec(0u8..=100, 16), overall in 0u8..=100, frac in 0.0f64..=1.0, k in 1i32..6) {
        // Power-of-two scales keep every comparison exact in floating point.
        let scale = 2f64.powi(-k);
        let ids: Vec<String> = (1..=4).map(|i| format!("Q{i}")).collect();
        let grid: Vec<Vec<f64>> = cells.chunks(4).map(|r| r.iter().map(|v| f64::from(*v)).collect()).collect();
        let scaled: Vec<Vec<f64>> = grid.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        let a = interpret(&AblationMatrix::new(ids.clone(), grid, f64::from(overall)).unwrap(), frac).unwrap();
        let b = interpret(&AblationMatrix::new(ids, scaled, f64::from(overall) * scale).unwrap(), frac).unwrap();
        prop_assert_eq!(a.critical_singletons, b.critical_singletons);
        prop_assert_eq!(a.critical_pairs, b.critical_pairs);
        prop_assert_eq!(a.edges, b.edges);
    }

    #[test]
    fn votes_ignore_positive_rescaling(decisions in prop::collection::vec(-5.0f64..5.0, 6), scale in 1e-3f64..1e3) {
        let learners: Vec<PairLearner> = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
            .iter()
            .map(|&(a, b)| PairLearner {
                class_a: a,
                class_b: b,
                model: mindprobe_core::svm::BinarySvmModel::from_parts(vec![], vec![], vec![], 0.0, Kernel::Linear, 1.0).unwrap(),
            })
            .collect();
        let scaled: Vec<f64> = decisions.iter().map(|d| d * scale).collect();
        prop_assert_eq!(tally_votes(&learners, &decisions, 4), tally_votes(&learners, &scaled, 4));
    }
}

fn random_points(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut r = mindprobe_core::rng::seeded(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn smo_dual_ascends_and_meets_kkt(seed in any::<u64>(), n in 4usize..30, c in 0.1f64..20.0, gaussian in any::<bool>()) {
        let x = random_points(seed, n, 3);
        let mut y: Vec<f64> = x.iter().map(|p| if p[0] + 0.3 * p[1] > 0.0 { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let kernel = if gaussian { Kernel::Gaussian { sigma: 0.8 } } else { Kernel::Linear };
        let params = SvmParams { c, tol: 1e-6, ..SvmParams::default() };
        let m = train_binary_svm(&x, &y, kernel, params).unwrap();
        let obj = &m.stats().dual_objective;
        for w in obj.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0), "objective fell: {:?}", w);
        }
        prop_assert!(kkt_report(&m, &x, &y) <= 1e-6 * 1.01);
    }

    #[test]
    fn gaussian_gram_is_psd(seed in any::<u64>(), n in 2usize..25, sigma in 0.1f64..3.0) {
        let x = random_points(seed, n, 4);
        let k = Kernel::Gaussian { sigma };
        let g = DMatrix::from_fn(n, n, |i, j| kernel_eval(&k, &x[i], &x[j]).unwrap());
        prop_assert_eq!(&g, &g.transpose());
        let jittered = g + DMatrix::identity(n, n) * 1e-10;
        prop_assert!(jittered.cholesky().is_some());
    }

    #[test]
    fn rbf_ridge_always_solves(seed in any::<u64>(), n in 1usize..20, ridge in 1e-6f64..1.0, dup in any::<bool>()) {
        let mut x = random_points(seed, n, 2);
        if dup {
            x.push(x[0].clone());
        }
        let t: Vec<Vec<f64>> = x.iter().map(|p| vec![p[0] - p[1]]).collect();
        prop_assert!(rbf_fit(&x, &t, Centers::TrainingPoints, 0.5, ridge).is_ok());
    }

    #[test]
    fn lm_history_never_rises(seed in any::<u64>()) {
        let x = random_points(seed, 12, 3);
        let t: Vec<Vec<f64>> = x.iter().map(|p| vec![(p[0] * p[1]).tanh(), p[2]]).collect();
        let mut net = MlpNetwork::new(&[3, 5, 2], Activation::Tanh, Activation::Identity).unwrap();
        net.initialize(seed, 0.5);
        let cfg = TrainConfig { optimizer: Optimizer::LevenbergMarquardt, max_epochs: 25, ..TrainConfig::default() };
        let out = train(net, &x, &t, None, &cfg).unwrap();
        for w in out.history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }
}

/// Linear scorer over fixed weights; used to exercise ablation without training.
struct Linear {
    w: Vec<Vec<f64>>,
}

impl Classifier for Linear {
    fn n_features(&self) -> usize {
        self.w[0].len()
    }
    fn n_classes(&self) -> usize {
        self.w.len()
    }
    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .w
            .iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

#[test]
fn generated_matrix_is_exactly_symmetric() {
    let q = builtin_survey();
    let recs = sample_cohort(&q, 200, 11, &CohortModel::Independent).unwrap();
    let data = encode_dataset(&recs, &q, Scheme::OneHot).unwrap();
    let w = random_points(5, 4, data.n_features());
    let m = ablation_matrix(&Linear { w }, &data, OcclusionMode::MeanImpute).unwrap();
    assert_eq!(m.len(), 9);
    assert!(m.is_symmetric(0.0));
}

#[test]
fn ignored_question_keeps_overall_accuracy() {
    let q = builtin_survey();
    let recs = sample_cohort(&q, 200, 12, &CohortModel::Independent).unwrap();
    let data = encode_dataset(&recs, &q, Scheme::OneHot).unwrap();
    let mut w = random_points(6, 4, data.n_features());
    let block = data.block_of("Q3").unwrap();
    for row in &mut w {
        for col in block.clone() {
            row[col] = 0.0;
        }
    }
    let m = ablation_matrix(&Linear { w }, &data, OcclusionMode::MeanImpute).unwrap();
    assert_eq!(m.cell(2, 2), m.overall);
}

#[test]
fn fully_occluded_accuracy_is_constant_class_frequency() {
    let q = builtin_survey();
    let recs = sample_cohort(&q, 300, 13, &CohortModel::Independent).unwrap();
    let data = encode_dataset(&recs, &q, Scheme::OneHot).unwrap();
    let model = Linear {
        w: random_points(7, 4, data.n_features()),
    };
    let blank = occlude(&data, &q.input_ids(), OcclusionMode::MeanImpute).unwrap();
    let preds = model.predict_all(&blank.features).unwrap();
    assert!(preds.windows(2).all(|w| w[0] == w[1]));
    let freq = 100.0 * data.class_counts()[preds[0]] as f64 / data.n_samples() as f64;
    let (acc, _) = score(&preds, &data.labels, 4).unwrap();
    assert!((acc - freq).abs() < 1e-12);
}

/// Remembers the row ids it was trained on and refuses to score any of them.
struct Recorder {
    seen: HashSet<u64>,
    scored: &'static Mutex<Vec<u64>>,
}

impl Classifier for Recorder {
    fn n_features(&self) -> usize {
        1
    }
    fn n_classes(&self) -> usize {
        2
    }
    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let id = x[0] as u64;
        assert!(!self.seen.contains(&id), "scored training row {id}");
        self.scored.lock().unwrap().push(id);
        Ok(vec![1.0, 0.0])
    }
}

#[test]
fn cross_validation_never_scores_training_rows() {
    static SCORED: Mutex<Vec<u64>> = Mutex::new(Vec::new());
    let n = 97;
    let features: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let data = Dataset::from_rows(features, labels, 2).unwrap();
    let report = cross_validate(
        |d: &Dataset| {
            Ok(Recorder {
                seen: d.features.iter().map(|r| r[0] as u64).collect(),
                scored: &SCORED,
            })
        },
        &data,
        10,
        4,
    )
    .unwrap();
    assert_eq!(report.fold_accuracies.len(), 10);
    assert_eq!(report.confusion.total(), n);
    let mut scored = SCORED.lock().unwrap().clone();
    scored.sort_unstable();
    assert_eq!(scored, (0..n as u64).collect::<Vec<_>>());
}

#[test]
fn folds_missing_a_class_are_skipped() {
    // Class 1 has a single member, so the fold holding it trains without class 1.
    let features: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
    let mut labels = vec![0; 10];
    labels[3] = 1;
    let data = Dataset::from_rows(features, labels, 2).unwrap();
    let report = cross_validate(
        |_: &Dataset| {
            Ok(Linear {
                w: vec![vec![1.0], vec![0.0]],
            })
        },
        &data,
        5,
        0,
    )
    .unwrap();
    assert_eq!(report.skipped().len(), 1);
    assert_eq!(report.fold_accuracies.iter().flatten().count(), 4);
}
