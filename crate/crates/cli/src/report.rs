use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mindprobe_core::ablation::{ablation_matrix, interpret, OcclusionMode};
use mindprobe_core::eval::{cross_validate, evaluate};
use mindprobe_core::survey::Dataset;
use mindprobe_core::Classifier;

use crate::commands::{load_model_and_data, Loaded};
use crate::error::{write_file, CliError, CliResult};
use crate::model::fit_recipe;

pub struct ReportArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub survey: String,
    pub out_dir: PathBuf,
    pub k: usize,
    pub seed: u64,
    pub threshold: f64,
    pub occlusion: OcclusionMode,
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n", header.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

/// Setup, Accuracy, Confusion, Ablation Matrix and Dependency Report, in that order.
pub fn render(
    loaded: &Loaded,
    k: usize,
    seed: u64,
    threshold: f64,
    occlusion: OcclusionMode,
) -> CliResult<String> {
    let Loaded {
        archive,
        survey,
        data,
    } = loaded;
    let model = &archive.model;
    let (resub, cm) = evaluate(model, data)?;
    let recipe = |d: &Dataset| fit_recipe(archive.model_kind, &archive.settings, d, archive.seed);
    let cv = cross_validate(recipe, data, k, seed)?;
    let matrix = ablation_matrix(model, data, occlusion)?;
    let deps = interpret(&matrix, threshold)?;

    let mut s = String::from("# Questionnaire model report\n\n## Setup\n\n");
    let kv = |k: &str, v: String| vec![k.to_string(), v];
    s.push_str(&table(
        &["setting".into(), "value".into()],
        &[
            kv("model", archive.model_kind.to_string()),
            kv(
                "questionnaire",
                format!("{} v{}", survey.id(), survey.version()),
            ),
            kv("encoding", archive.scheme.to_string()),
            kv("samples", data.n_samples().to_string()),
            kv("features", model.n_features().to_string()),
            kv("training seed", archive.seed.to_string()),
            kv("folds", k.to_string()),
            kv("fold seed", seed.to_string()),
            kv("occlusion", occlusion.to_string()),
            kv("threshold", threshold.to_string()),
        ],
    ));

    s.push_str("\n## Accuracy\n\n");
    let mut rows = vec![
        kv("resubstitution", format!("{resub:.2}")),
        kv(
            &format!("{k}-fold mean"),
            format!("{:.2}", cv.mean_accuracy),
        ),
    ];
    for (i, a) in cv.fold_accuracies.iter().enumerate() {
        rows.push(kv(
            &format!("fold {}", i + 1),
            a.map_or("skipped".into(), |v| format!("{v:.2}")),
        ));
    }
    s.push_str(&table(&["metric".into(), "accuracy (%)".into()], &rows));

    s.push_str(
        "\n## Confusion\n\nResubstitution counts; rows are true classes, columns predictions.\n\n",
    );
    let mut header = vec![String::new()];
    header.extend(archive.class_names.iter().cloned());
    let rows: Vec<Vec<String>> = archive
        .class_names
        .iter()
        .zip(&cm.counts)
        .map(|(name, r)| {
            std::iter::once(name.clone())
                .chain(r.iter().map(ToString::to_string))
                .collect()
        })
        .collect();
    s.push_str(&table(&header, &rows));

    let _ = write!(
        s,
        "\n## Ablation Matrix\n\nAccuracy (%) with the row and column questions removed; overall {:.2}.\n\n",
        matrix.overall
    );
    let mut header = vec![String::new()];
    header.extend(matrix.question_ids.iter().cloned());
    let rows: Vec<Vec<String>> = matrix
        .question_ids
        .iter()
        .zip(&matrix.cells)
        .map(|(id, r)| {
            std::iter::once(id.clone())
                .chain(r.iter().map(|v| format!("{v:.2}")))
                .collect()
        })
        .collect();
    s.push_str(&table(&header, &rows));

    let _ = write!(s, "\n## Dependency Report\n\n```text\n{deps}```\n");
    Ok(s)
}

pub fn report(args: &ReportArgs) -> CliResult<String> {
    let loaded = load_model_and_data(&args.model, &args.data, &args.survey)?;
    let text = render(&loaded, args.k, args.seed, args.threshold, args.occlusion)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let path = Path::new(&args.out_dir).join("report.md");
    write_file(&path, text.as_bytes())?;
    Ok(format!("out={}\n", path.display()))
}
