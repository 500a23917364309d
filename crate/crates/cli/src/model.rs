//! Training recipes shared by `train`, `evaluate` and `report`, and the model archive.

use std::fmt;
use std::io::Write;
use std::path::Path;

use mindprobe_core::ann::{
    fit_classifier, rbf_fit_dataset, Activation, Centers, MlpNetwork, RbfNetwork, TrainConfig,
    TrainOutcome,
};
use mindprobe_core::rng;
use mindprobe_core::survey::{Dataset, Questionnaire, Scheme};
use mindprobe_core::svm::{train_ovo, Kernel, OvoModel, SvmParams};
use mindprobe_core::Classifier;
use serde::{Deserialize, Serialize};

use crate::error::{read_file, write_file, CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Rbf,
    #[value(name = "svm_ovo")]
    SvmOvo,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Rbf => "rbf",
            ModelKind::SvmOvo => "svm_ovo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSettings {
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    /// Train/validation/test proportions.
    pub ratios: [f64; 3],
    pub train: TrainConfig,
}

impl Default for MlpSettings {
    fn default() -> Self {
        MlpSettings {
            hidden: vec![85],
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Identity,
            ratios: [204.0 / 292.0, 44.0 / 292.0, 44.0 / 292.0],
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfSettings {
    pub sigma: f64,
    pub ridge: f64,
    /// Number of training points drawn as centers; all of them when absent.
    pub centers: Option<usize>,
}

impl Default for RbfSettings {
    fn default() -> Self {
        RbfSettings {
            sigma: 1.0,
            ridge: 1e-3,
            centers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSettings {
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmSettings {
    fn default() -> Self {
        let p = SvmParams::default();
        SvmSettings {
            kernel: Kernel::default(),
            c: p.c,
            tol: p.tol,
            max_iter: p.max_iter,
        }
    }
}

impl SvmSettings {
    pub fn params(&self) -> SvmParams {
        SvmParams {
            c: self.c,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// Contents of a `--config` TOML file; every field is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub scheme: Scheme,
    pub mlp: MlpSettings,
    pub rbf: RbfSettings,
    pub svm: SvmSettings,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = read_file(path)?;
        toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start].lines().count().max(1) as u64);
            CliError::parse(path, line, e.message().to_string())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainedModel {
    Mlp(MlpNetwork),
    Rbf(RbfNetwork),
    SvmOvo(OvoModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Mlp(_) => ModelKind::Mlp,
            TrainedModel::Rbf(_) => ModelKind::Rbf,
            TrainedModel::SvmOvo(_) => ModelKind::SvmOvo,
        }
    }

    fn inner(&self) -> &(dyn Classifier + Sync) {
        match self {
            TrainedModel::Mlp(m) => m,
            TrainedModel::Rbf(m) => m,
            TrainedModel::SvmOvo(m) => m,
        }
    }
}

impl Classifier for TrainedModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn scores(&self, x: &[f64]) -> mindprobe_core::Result<Vec<f64>> {
        self.inner().scores(x)
    }
}

/// Result of one training run, with what the `train` summary reports.
pub struct Fitted {
    pub model: TrainedModel,
    pub mlp: Option<TrainOutcome>,
}

/// Trains `kind` on `train`; `validation` only drives MLP early stopping.
pub fn fit(
    kind: ModelKind,
    settings: &Settings,
    train: &Dataset,
    validation: Option<&Dataset>,
    seed: u64,
) -> mindprobe_core::Result<Fitted> {
    Ok(match kind {
        ModelKind::Mlp => {
            let cfg = TrainConfig {
                init_seed: seed,
                ..settings.mlp.train.clone()
            };
            let s = &settings.mlp;
            let out = fit_classifier(
                train,
                &s.hidden,
                s.hidden_activation,
                s.output_activation,
                validation,
                &cfg,
            )?;
            Fitted {
                model: TrainedModel::Mlp(out.net.clone()),
                mlp: Some(out),
            }
        }
        ModelKind::Rbf => {
            let s = &settings.rbf;
            let centers = match s.centers {
                None => Centers::TrainingPoints,
                Some(k) => {
                    let k = k.min(train.n_samples());
                    let perm = rng::permutation(train.n_samples(), seed);
                    Centers::Explicit(
                        perm[..k]
                            .iter()
                            .map(|&i| train.features[i].clone())
                            .collect(),
                    )
                }
            };
            Fitted {
                model: TrainedModel::Rbf(rbf_fit_dataset(train, centers, s.sigma, s.ridge)?),
                mlp: None,
            }
        }
        ModelKind::SvmOvo => Fitted {
            model: TrainedModel::SvmOvo(train_ovo(
                train,
                settings.svm.kernel,
                settings.svm.params(),
            )?),
            mlp: None,
        },
    })
}

/// Trains with the recipe alone, e.g. inside a cross-validation fold. MLPs hold out the
/// validation share of `mlp.ratios` from `data` for early stopping.
pub fn fit_recipe(
    kind: ModelKind,
    settings: &Settings,
    data: &Dataset,
    seed: u64,
) -> mindprobe_core::Result<TrainedModel> {
    if kind != ModelKind::Mlp {
        return Ok(fit(kind, settings, data, None, seed)?.model);
    }
    let [tr, va, _] = settings.mlp.ratios;
    let n = data.n_samples();
    let n_val = ((n as f64) * va / (tr + va)).round() as usize;
    let perm = rng::permutation(n, seed);
    let (val_idx, train_idx) = perm.split_at(n_val.min(n.saturating_sub(1)));
    let validation = data.subset(val_idx);
    Ok(fit(
        kind,
        settings,
        &data.subset(train_idx),
        Some(&validation),
        seed,
    )?
    .model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub questionnaire_id: String,
    pub questionnaire_version: u32,
    pub scheme: Scheme,
    pub class_names: Vec<String>,
    pub seed: u64,
    pub settings: Settings,
    pub model: TrainedModel,
}

#[derive(Deserialize)]
struct ArchiveHeader {
    format_version: u32,
}

impl ModelArchive {
    pub fn new(q: &Questionnaire, settings: Settings, seed: u64, model: TrainedModel) -> Self {
        ModelArchive {
            format_version: FORMAT_VERSION,
            model_kind: model.kind(),
            questionnaire_id: q.id().to_string(),
            questionnaire_version: q.version(),
            scheme: settings.scheme,
            class_names: q.class_names(),
            seed,
            settings,
            model,
        }
    }

    /// Compact JSON in which every float carries 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
        self.serialize(&mut ser)
            .expect("archive fields are always serializable");
        buf.push(b'\n');
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn from_json(text: &str, path: &Path) -> CliResult<Self> {
        let bad = |e: serde_json::Error| CliError::parse(path, e.line() as u64, e.to_string());
        let header: ArchiveHeader = serde_json::from_str(text).map_err(bad)?;
        if header.format_version != FORMAT_VERSION {
            return Err(CliError::SchemaMismatch(format!(
                "{} has archive format {} but this build reads format {FORMAT_VERSION}",
                path.display(),
                header.format_version
            )));
        }
        let archive: ModelArchive = serde_json::from_str(text).map_err(bad)?;
        if archive.model.kind() != archive.model_kind {
            return Err(CliError::SchemaMismatch(format!(
                "model_kind {} does not match the stored {} model",
                archive.model_kind,
                archive.model.kind()
            )));
        }
        Ok(archive)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_file(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_json(&read_file(path)?, path)
    }

    /// Fails unless `q` is the questionnaire the model was trained on.
    pub fn check_questionnaire(&self, q: &Questionnaire) -> CliResult<()> {
        if self.questionnaire_id != q.id() || self.questionnaire_version != q.version() {
            return Err(CliError::SchemaMismatch(format!(
                "model was trained on questionnaire {} v{}, data uses {} v{}",
                self.questionnaire_id,
                self.questionnaire_version,
                q.id(),
                q.version()
            )));
        }
        Ok(())
    }
}

/// Writes floats as `d.dddddddddddddddde±x` (17 significant digits).
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mindprobe_core::cohort::builtin_survey;

    #[test]
    fn settings_parse_from_toml() {
        let s: Settings = toml::from_str(
            r#"
            scheme = "ordinal"
            [svm]
            kernel = { kind = "gaussian", sigma = 2.0 }
            c = 3.5
            [mlp]
            hidden = [12, 8]
            [mlp.train]
            optimizer = "gradient_descent"
            max_epochs = 7
            "#,
        )
        .unwrap();
        assert_eq!(s.scheme, Scheme::Ordinal);
        assert_eq!(s.svm.kernel, Kernel::Gaussian { sigma: 2.0 });
        assert_eq!(s.svm.c, 3.5);
        assert_eq!(s.mlp.hidden, vec![12, 8]);
        assert_eq!(s.mlp.train.max_epochs, 7);
        assert_eq!(s.rbf, RbfSettings::default());
        assert!(toml::from_str::<Settings>("[svm]\ngamma = 1.0\n").is_err());
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let net = MlpNetwork::new(&[1, 1], Activation::Identity, Activation::Identity)
            .unwrap()
            .with_weights(vec![vec![0.1, -0.0]])
            .unwrap();
        let a = ModelArchive::new(
            &builtin_survey(),
            Settings::default(),
            3,
            TrainedModel::Mlp(net),
        );
        let json = a.to_json();
        assert!(
            json.contains("[1.0000000000000001e-1,-0.0000000000000000e0]"),
            "{json}"
        );
        let back = ModelArchive::from_json(&json, Path::new("a.json")).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn wrong_format_version_rejected() {
        let json = r#"{"format_version": 99}"#;
        assert!(matches!(
            ModelArchive::from_json(json, Path::new("a.json")),
            Err(CliError::SchemaMismatch(_))
        ));
    }
}
