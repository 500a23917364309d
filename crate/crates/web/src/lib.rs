//! WebAssembly bindings for the static demo page in `www/`. Every export takes plain
//! numbers and returns a JSON string; the `*_json` functions are the native entry points.

use mindprobe_core::ablation::{
    ablation_matrix, builtin_table3, interpret, AblationMatrix, DependencyReport, OcclusionMode,
};
use mindprobe_core::cohort::{builtin_survey, plant_signal, sample_cohort, CohortModel, Coupling};
use mindprobe_core::rng::{seeded, unit};
use mindprobe_core::survey::{encode_dataset, Scheme};
use mindprobe_core::svm::{train_binary_svm, train_ovo, Kernel, SvmParams};
use mindprobe_core::{Classifier, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Resolution of the decision-function grid on each axis.
pub const GRID: usize = 64;

#[derive(Serialize)]
struct MatrixView<'a> {
    questions: &'a [String],
    cells: &'a [Vec<f64>],
    overall: f64,
    cut: f64,
    flagged: Vec<(usize, usize)>,
    report: &'a DependencyReport,
    text: String,
}

fn matrix_view(m: &AblationMatrix, threshold: f64) -> Result<String> {
    let report = interpret(m, threshold)?;
    let view = MatrixView {
        questions: &m.question_ids,
        cells: &m.cells,
        overall: m.overall,
        cut: report.cut,
        flagged: m.cells_at_or_below(report.cut),
        report: &report,
        text: report.to_string(),
    };
    Ok(serde_json::to_string(&view).expect("serializable"))
}

pub fn table3_json(threshold: f64) -> Result<String> {
    matrix_view(&builtin_table3(), threshold)
}

#[derive(Serialize)]
struct BoundaryView {
    points: Vec<[f64; 2]>,
    labels: Vec<f64>,
    support: Vec<usize>,
    /// Row-major decision values over `[-3, 3]²`, `grid` × `grid`, first row at y = 3.
    decision: Vec<f64>,
    grid: usize,
    accuracy: f64,
    iterations: usize,
}

/// Two overlapping Gaussian blobs; class +1 is centred at `(spread, spread)`.
fn blobs(n: usize, spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = seeded(seed);
    let mut normal = move || {
        let (u, v) = (unit(&mut rng).max(f64::MIN_POSITIVE), unit(&mut rng));
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    };
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        xs.push(vec![
            y * spread + 0.8 * normal(),
            y * spread + 0.8 * normal(),
        ]);
        ys.push(y);
    }
    (xs, ys)
}

pub fn svm_boundary_json(sigma: f64, c: f64, n: usize, seed: u64) -> Result<String> {
    let (xs, ys) = blobs(n.max(2), 0.9, seed);
    let params = SvmParams {
        c,
        ..SvmParams::default()
    };
    let model = train_binary_svm(&xs, &ys, Kernel::Gaussian { sigma }, params)?;
    let mut decision = Vec::with_capacity(GRID * GRID);
    for r in 0..GRID {
        let y = 3.0 - 6.0 * r as f64 / (GRID - 1) as f64;
        for col in 0..GRID {
            let x = -3.0 + 6.0 * col as f64 / (GRID - 1) as f64;
            decision.push(model.decision(&[x, y])?);
        }
    }
    let mut correct = 0;
    for (x, y) in xs.iter().zip(&ys) {
        if model.predict(x)? == *y {
            correct += 1;
        }
    }
    let view = BoundaryView {
        points: xs.iter().map(|p| [p[0], p[1]]).collect(),
        labels: ys,
        support: model.support_indices().to_vec(),
        decision,
        grid: GRID,
        accuracy: 100.0 * correct as f64 / xs.len() as f64,
        iterations: model.stats().iterations,
    };
    Ok(serde_json::to_string(&view).expect("serializable"))
}

/// Samples a cohort driven by Q8 with Q5 echoing it, fits a one-vs-one SVM and returns
/// its ablation matrix interpreted at `threshold`.
pub fn cohort_ablation_json(
    n: usize,
    seed: u64,
    flip: f64,
    p_copy: f64,
    threshold: f64,
) -> Result<String> {
    let q = builtin_survey();
    let echo = Coupling {
        source: "Q8".into(),
        target: "Q5".into(),
        p_copy,
    };
    let model = plant_signal(&q, "Q8", flip, &[echo])?;
    let records = sample_cohort(&q, n, seed, &CohortModel::Planted(model))?;
    let data = encode_dataset(&records, &q, Scheme::OneHot)?;
    let svm = train_ovo(&data, Kernel::Gaussian { sigma: 2.0 }, SvmParams::default())?;
    debug_assert_eq!(svm.n_features(), data.n_features());
    let m = ablation_matrix(&svm, &data, OcclusionMode::MeanImpute)?;
    matrix_view(&m, threshold)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn table3(threshold: f64) -> std::result::Result<String, JsError> {
    js(table3_json(threshold))
}

#[wasm_bindgen]
pub fn svm_boundary(
    sigma: f64,
    c: f64,
    n: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    js(svm_boundary_json(sigma, c, n, seed.into()))
}

#[wasm_bindgen]
pub fn cohort_ablation(
    n: usize,
    seed: u32,
    flip: f64,
    p_copy: f64,
    threshold: f64,
) -> std::result::Result<String, JsError> {
    js(cohort_ablation_json(
        n,
        seed.into(),
        flip,
        p_copy,
        threshold,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn table3_view_matches_report() {
        let v: Value = serde_json::from_str(&table3_json(0.25).unwrap()).unwrap();
        assert_eq!(v["cut"], 63.75);
        assert_eq!(v["flagged"].as_array().unwrap().len(), 15);
        assert_eq!(v["report"]["critical_singletons"][0], "Q8");
        assert!(v["text"].as_str().unwrap().starts_with("overall=85"));
    }

    #[test]
    fn lower_threshold_flags_more() {
        let count = |t| {
            let v: Value = serde_json::from_str(&table3_json(t).unwrap()).unwrap();
            v["flagged"].as_array().unwrap().len()
        };
        assert!(count(0.1) > count(0.25));
        assert_eq!(count(0.9), 0);
    }

    #[test]
    fn boundary_grid_is_complete() {
        let v: Value = serde_json::from_str(&svm_boundary_json(1.0, 1.0, 60, 1).unwrap()).unwrap();
        assert_eq!(v["decision"].as_array().unwrap().len(), GRID * GRID);
        assert_eq!(v["points"].as_array().unwrap().len(), 60);
        assert!(v["accuracy"].as_f64().unwrap() > 70.0);
    }

    #[test]
    fn bad_parameters_are_errors() {
        assert!(svm_boundary_json(0.0, 1.0, 20, 1).is_err());
        assert!(svm_boundary_json(1.0, -1.0, 20, 1).is_err());
        assert!(cohort_ablation_json(100, 1, 1.5, 0.9, 0.25).is_err());
    }

    #[test]
    fn planted_driver_is_critical() {
        let v: Value =
            serde_json::from_str(&cohort_ablation_json(400, 2, 0.05, 0.9, 0.25).unwrap()).unwrap();
        let critical = v["report"]["critical_singletons"].as_array().unwrap();
        assert!(critical.iter().any(|c| c == "Q8"), "{critical:?}");
    }
}
