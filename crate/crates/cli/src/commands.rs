use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mindprobe_core::ablation::{
    ablation_matrix, builtin_table3, interpret, AblationMatrix, OcclusionMode,
};
use mindprobe_core::cohort::{builtin_survey, sample_cohort, CohortModel, SignalConfig};
use mindprobe_core::eval::{cross_validate, evaluate, split, ConfusionMatrix};
use mindprobe_core::survey::{encode_dataset, AnswerValue, Dataset, Questionnaire, ResponseRecord};
use mindprobe_core::Classifier;

use crate::error::{read_file, write_file, CliError, CliResult};
use crate::model::{fit, fit_recipe, ModelArchive, ModelKind, Settings, TrainedModel};
use crate::responses::{read_responses, responses_to_string};

/// `builtin` or the path of a questionnaire JSON file.
pub fn load_survey(source: &str) -> CliResult<Questionnaire> {
    if source == "builtin" {
        return Ok(builtin_survey());
    }
    let path = Path::new(source);
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.line() as u64, e.to_string()))
}

pub fn load_dataset(
    q: &Questionnaire,
    path: &Path,
    scheme: mindprobe_core::survey::Scheme,
) -> CliResult<Dataset> {
    let records = read_responses(q, path)?;
    encode_dataset(&records, q, scheme).map_err(|source| CliError::InFile {
        path: path.to_path_buf(),
        source,
    })
}

/// Archive plus the data it is applied to, checked for compatibility.
pub struct Loaded {
    pub archive: ModelArchive,
    pub survey: Questionnaire,
    pub data: Dataset,
}

pub fn load_model_and_data(model: &Path, data: &Path, survey: &str) -> CliResult<Loaded> {
    let archive = ModelArchive::load(model)?;
    let survey = load_survey(survey)?;
    archive.check_questionnaire(&survey)?;
    let data = load_dataset(&survey, data, archive.scheme)?;
    if data.n_features() != archive.model.n_features() && !data.is_empty() {
        return Err(CliError::SchemaMismatch(format!(
            "model expects {} features, data encodes to {}",
            archive.model.n_features(),
            data.n_features()
        )));
    }
    Ok(Loaded {
        archive,
        survey,
        data,
    })
}

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

pub fn confusion_text(cm: &ConfusionMatrix, names: &[String]) -> String {
    let width = names.iter().map(String::len).max().unwrap_or(0);
    let mut s = String::from("confusion (rows: true class, columns: predicted)\n");
    for (name, row) in names.iter().zip(&cm.counts) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
        let _ = writeln!(s, "  {name:<width$} {}", cells.join(""));
    }
    s
}

pub struct GenerateArgs {
    pub survey: String,
    pub n: usize,
    pub seed: u64,
    pub signal: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn generate(args: &GenerateArgs) -> CliResult<String> {
    let q = load_survey(&args.survey)?;
    let model = match &args.signal {
        None => CohortModel::Independent,
        Some(path) => {
            let text = read_file(path)?;
            let cfg: SignalConfig = toml::from_str(&text).map_err(|e| {
                let line = e
                    .span()
                    .map_or(0, |s| text[..s.start].lines().count().max(1) as u64);
                CliError::parse(path, line, e.message().to_string())
            })?;
            CohortModel::Planted(cfg.to_model(&q).map_err(|source| CliError::InFile {
                path: path.clone(),
                source,
            })?)
        }
    };
    let records = sample_cohort(&q, args.n, args.seed, &model)?;
    write_file(&args.out, responses_to_string(&q, &records)?.as_bytes())?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "survey={} rows={} seed={}",
        q.id(),
        records.len(),
        args.seed
    );
    match &model {
        CohortModel::Independent => s.push_str("signal=none\n"),
        CohortModel::Planted(m) => {
            let _ = writeln!(s, "signal=driver:{}", m.label_rule.driver);
            for c in &m.couplings {
                let _ = writeln!(s, "coupling={}->{} p_copy={}", c.source, c.target, c.p_copy);
            }
        }
    }
    for question in q.questions() {
        let k = question.option_count().unwrap_or(0);
        if k == 0 {
            continue;
        }
        let mut counts = vec![0usize; k];
        for r in &records {
            let answer = if question.is_label {
                r.label
            } else {
                match r.answers.get(&question.id) {
                    Some(AnswerValue::Choice(i)) => Some(*i),
                    _ => None,
                }
            };
            if let Some(i) = answer {
                counts[i] += 1;
            }
        }
        let observed: Vec<String> = counts
            .iter()
            .map(|c| {
                if records.is_empty() {
                    "-".to_string()
                } else {
                    format!("{:.4}", *c as f64 / records.len() as f64)
                }
            })
            .collect();
        let target: Vec<String> = question
            .marginals
            .iter()
            .flatten()
            .map(|p| format!("{p:.4}"))
            .collect();
        let _ = writeln!(
            s,
            "{} observed={} target={}",
            question.id,
            observed.join(","),
            target.join(",")
        );
    }
    let _ = writeln!(s, "out={}", args.out.display());
    Ok(s)
}

fn subset_records(records: &[ResponseRecord], idx: &[usize]) -> Vec<ResponseRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

pub struct TrainArgs {
    pub kind: ModelKind,
    pub data: PathBuf,
    pub survey: String,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn train(args: &TrainArgs) -> CliResult<String> {
    let q = load_survey(&args.survey)?;
    let settings = Settings::load(args.config.as_deref())?;
    let records = read_responses(&q, &args.data)?;
    let encode = |recs: &[ResponseRecord]| {
        encode_dataset(recs, &q, settings.scheme).map_err(|source| CliError::InFile {
            path: args.data.clone(),
            source,
        })
    };
    let data = encode(&records)?;
    if let Some(empty) = data.class_counts().iter().position(|c| *c == 0) {
        if args.kind == ModelKind::SvmOvo {
            return Err(mindprobe_core::Error::EmptyClass(empty).into());
        }
    }

    let mut s = String::new();
    let _ = writeln!(s, "kind={}", args.kind);
    let _ = writeln!(s, "samples={}", data.n_samples());
    let _ = writeln!(s, "features={}", data.n_features());
    let _ = writeln!(s, "scheme={}", settings.scheme);
    let _ = writeln!(s, "seed={}", args.seed);

    let model = match args.kind {
        ModelKind::Mlp => {
            let parts = split(data.n_samples(), settings.mlp.ratios, args.seed)?;
            let train = encode(&subset_records(&records, &parts.train))?;
            let val = encode(&subset_records(&records, &parts.validation))?;
            let test = encode(&subset_records(&records, &parts.test))?;
            let fitted = fit(args.kind, &settings, &train, Some(&val), args.seed)?;
            let out = fitted.mlp.expect("mlp fit reports its outcome");
            if let Some(w) = &out.warning {
                eprintln!("warning: {w}");
            }
            let _ = writeln!(
                s,
                "split={}/{}/{}",
                parts.train.len(),
                parts.validation.len(),
                parts.test.len()
            );
            let _ = writeln!(s, "architecture={}", join(out.net.layer_sizes()));
            let _ = writeln!(s, "optimizer={}", serde_plain(&out.optimizer));
            let _ = writeln!(s, "epochs={}", out.history.len());
            let _ = writeln!(s, "stop={}", serde_plain(&out.stop));
            let _ = writeln!(
                s,
                "final_mse={:.6e}",
                out.net.mse(&train.features, &train.one_hot_targets())?
            );
            let _ = writeln!(s, "train_accuracy={}", pct(evaluate(&out.net, &train)?.0));
            if !val.is_empty() {
                let _ = writeln!(
                    s,
                    "validation_accuracy={}",
                    pct(evaluate(&out.net, &val)?.0)
                );
            }
            if !test.is_empty() {
                let _ = writeln!(s, "test_accuracy={}", pct(evaluate(&out.net, &test)?.0));
            }
            fitted.model
        }
        ModelKind::Rbf | ModelKind::SvmOvo => {
            let model = fit(args.kind, &settings, &data, None, args.seed)?.model;
            match &model {
                TrainedModel::Rbf(net) => {
                    let _ = writeln!(s, "centers={}", net.centers().len());
                    let _ = writeln!(s, "sigma={}", net.sigma());
                }
                TrainedModel::SvmOvo(ovo) => {
                    for l in ovo.learners() {
                        let tag = format!("learner.{}-{}", l.class_a, l.class_b);
                        let st = l.model.stats();
                        let _ = writeln!(
                            s,
                            "{tag}.support_vectors={}",
                            l.model.support_vectors().len()
                        );
                        let _ = writeln!(s, "{tag}.iterations={}", st.iterations);
                        let dual = st.dual_objective.last().copied().unwrap_or(0.0);
                        let _ = writeln!(s, "{tag}.dual_objective={dual:.6e}");
                    }
                }
                TrainedModel::Mlp(_) => unreachable!(),
            }
            if !data.is_empty() {
                let _ = writeln!(s, "train_accuracy={}", pct(evaluate(&model, &data)?.0));
            }
            model
        }
    };
    ModelArchive::new(&q, settings, args.seed, model).save(&args.out)?;
    let _ = writeln!(s, "out={}", args.out.display());
    Ok(s)
}

fn join(v: &[usize]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

/// Enum variant name as it appears in config files.
fn serde_plain<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalMode {
    Holdout,
    Kfold,
}

pub struct EvaluateArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub survey: String,
    pub mode: EvalMode,
    pub ratios: Option<[f64; 3]>,
    pub k: usize,
    pub seed: u64,
}

/// Parses `a,b,c` into proportions summing to one.
pub fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {p:?}"))
        })
        .collect::<Result<_, _>>()?;
    let [a, b, c] = parts[..] else {
        return Err("expected three comma-separated values".into());
    };
    let total = a + b + c;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err("ratios must be positive".into());
    }
    Ok([a / total, b / total, c / total])
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> CliResult<String> {
    let Loaded { archive, data, .. } = load_model_and_data(&args.model, &args.data, &args.survey)?;
    let names = archive.class_names.clone();
    let mut s = String::new();
    let _ = writeln!(s, "kind={}", archive.model_kind);
    let _ = writeln!(s, "samples={}", data.n_samples());
    let (resub, resub_cm) = evaluate(&archive.model, &data)?;
    let _ = writeln!(s, "resubstitution_accuracy={}", pct(resub));
    let recipe = |d: &Dataset| fit_recipe(archive.model_kind, &archive.settings, d, archive.seed);
    match args.mode {
        EvalMode::Holdout => {
            let ratios = args.ratios.unwrap_or(archive.settings.mlp.ratios);
            let parts = split(data.n_samples(), ratios, args.seed)?;
            let train = data.subset(&parts.train);
            let val = data.subset(&parts.validation);
            let test = data.subset(&parts.test);
            let model = fit(
                archive.model_kind,
                &archive.settings,
                &train,
                Some(&val),
                archive.seed,
            )?
            .model;
            let (acc, cm) = evaluate(&model, &test)?;
            let _ = writeln!(s, "mode=holdout");
            let _ = writeln!(
                s,
                "split={}/{}/{}",
                train.n_samples(),
                val.n_samples(),
                test.n_samples()
            );
            let _ = writeln!(s, "holdout_accuracy={}", pct(acc));
            s.push_str(&confusion_text(&cm, &names));
        }
        EvalMode::Kfold => {
            let report = cross_validate(recipe, &data, args.k, args.seed)?;
            let _ = writeln!(s, "mode=kfold");
            let _ = writeln!(s, "k={}", args.k);
            for (i, a) in report.fold_accuracies.iter().enumerate() {
                let v = a.map_or("skipped".to_string(), pct);
                let _ = writeln!(s, "fold.{}={v}", i + 1);
            }
            let _ = writeln!(s, "cv_mean_accuracy={}", pct(report.mean_accuracy));
            s.push_str(&confusion_text(&report.confusion, &names));
        }
    }
    let _ = writeln!(s, "resubstitution_confusion:");
    s.push_str(&confusion_text(&resub_cm, &names));
    Ok(s)
}

pub struct AblateArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub survey: String,
    pub occlusion: OcclusionMode,
    pub out: PathBuf,
}

pub fn ablate(args: &AblateArgs) -> CliResult<String> {
    let Loaded { archive, data, .. } = load_model_and_data(&args.model, &args.data, &args.survey)?;
    let m = ablation_matrix(&archive.model, &data, args.occlusion)?;
    write_file(&args.out, m.to_csv().as_bytes())?;
    let mut s = String::new();
    let _ = writeln!(s, "occlusion={}", args.occlusion);
    let _ = writeln!(s, "overall={}", pct(m.overall));
    for (i, id) in m.question_ids.iter().enumerate() {
        let _ = writeln!(s, "removed.{id}={}", pct(m.cell(i, i)));
    }
    let _ = writeln!(s, "out={}", args.out.display());
    Ok(s)
}

pub fn load_matrix(path: &Path) -> CliResult<AblationMatrix> {
    AblationMatrix::from_csv(&read_file(path)?).map_err(|source| CliError::InFile {
        path: path.to_path_buf(),
        source,
    })
}

/// Report text plus the list of cells at or below the cut.
pub fn interpret_text(matrix: &AblationMatrix, threshold: f64) -> CliResult<String> {
    let report = interpret(matrix, threshold)?;
    let mut s = report.to_string();
    let flagged: Vec<String> = matrix
        .cells_at_or_below(report.cut)
        .into_iter()
        .map(|(i, j)| {
            format!(
                "({},{})={}",
                matrix.question_ids[i],
                matrix.question_ids[j],
                matrix.cell(i, j)
            )
        })
        .collect();
    let _ = writeln!(
        s,
        "FLAGGED: {}",
        if flagged.is_empty() {
            "(none)".to_string()
        } else {
            flagged.join(", ")
        }
    );
    Ok(s)
}

pub fn interpret_cmd(matrix: Option<&Path>, builtin: bool, threshold: f64) -> CliResult<String> {
    let m = match (matrix, builtin) {
        (_, true) => builtin_table3(),
        (Some(path), false) => load_matrix(path)?,
        (None, false) => {
            return Err(CliError::Usage(
                "pass a matrix file or --builtin-table3".into(),
            ))
        }
    };
    interpret_text(&m, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_parsing() {
        let r = parse_ratios("204,44,44").unwrap();
        assert!((r[0] - 204.0 / 292.0).abs() < 1e-15);
        assert!(parse_ratios("1,2").is_err());
        assert!(parse_ratios("1,0,2").is_err());
    }

    #[test]
    fn table3_interpretation_text() {
        let text = interpret_cmd(None, true, 0.25).unwrap();
        assert!(text.starts_with(
            "overall=85 threshold=0.25 cut=63.75\nCRITICAL: Q8\nPAIR-CRITICAL: (Q2,Q4)\n"
        ));
        assert!(text.contains("FLAGGED: (Q1,Q8)=49, (Q2,Q4)=60,"));
    }
}
