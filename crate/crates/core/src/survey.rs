//! Survey schema, response records and their numeric encoding.
//!
//! A [`Questionnaire`] is an ordered list of questions, exactly one of which is
//! the label question (the respondent's self-assessment). Every other question
//! is an input and owns a contiguous block of feature columns once encoded:
//! one column per option under [`Scheme::OneHot`], a single column under
//! [`Scheme::Ordinal`]. Degree questions always map to one column rescaled
//! affinely to `[0, 1]`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ResponseIssue, Result};

const MARGINAL_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuestionKind {
    Categorical {
        options: Vec<String>,
    },
    /// Numeric intensity answer on a closed interval.
    Degree {
        lower: f64,
        upper: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub prompt: String,
    #[serde(flatten)]
    pub kind: QuestionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<f64>>,
    #[serde(default)]
    pub is_label: bool,
}

impl Question {
    pub fn categorical(id: &str, prompt: &str, options: &[&str]) -> Self {
        Question {
            id: id.to_string(),
            prompt: prompt.to_string(),
            kind: QuestionKind::Categorical {
                options: options.iter().map(|o| o.to_string()).collect(),
            },
            marginals: None,
            is_label: false,
        }
    }

    pub fn degree(id: &str, prompt: &str, lower: f64, upper: f64) -> Self {
        Question {
            id: id.to_string(),
            prompt: prompt.to_string(),
            kind: QuestionKind::Degree { lower, upper },
            marginals: None,
            is_label: false,
        }
    }

    pub fn with_marginals(mut self, marginals: Vec<f64>) -> Self {
        self.marginals = Some(marginals);
        self
    }

    pub fn as_label(mut self) -> Self {
        self.is_label = true;
        self
    }

    /// Number of options for categorical questions, `None` for degree questions.
    pub fn option_count(&self) -> Option<usize> {
        match &self.kind {
            QuestionKind::Categorical { options } => Some(options.len()),
            QuestionKind::Degree { .. } => None,
        }
    }

    pub fn options(&self) -> &[String] {
        match &self.kind {
            QuestionKind::Categorical { options } => options,
            QuestionKind::Degree { .. } => &[],
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidQuestionnaire(format!("{}: {msg}", self.id)));
        match &self.kind {
            QuestionKind::Categorical { options } => {
                if options.len() < 2 {
                    return bad("categorical question needs at least 2 options".into());
                }
                if let Some(m) = &self.marginals {
                    if m.len() != options.len() {
                        return bad(format!(
                            "{} marginals for {} options",
                            m.len(),
                            options.len()
                        ));
                    }
                    if m.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return bad("marginal outside [0, 1]".into());
                    }
                    let sum: f64 = m.iter().sum();
                    if (sum - 1.0).abs() > MARGINAL_SUM_TOL {
                        return bad(format!("marginals sum to {sum}"));
                    }
                }
            }
            QuestionKind::Degree { lower, upper } => {
                if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
                    return bad(format!("degree range [{lower}, {upper}] is empty"));
                }
                if self.is_label {
                    return bad("the label question must be categorical".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct RawQuestionnaire {
    id: String,
    version: u32,
    questions: Vec<Question>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuestionnaire")]
pub struct Questionnaire {
    id: String,
    version: u32,
    questions: Vec<Question>,
    #[serde(skip)]
    label_index: usize,
}

impl TryFrom<RawQuestionnaire> for Questionnaire {
    type Error = Error;

    fn try_from(raw: RawQuestionnaire) -> Result<Self> {
        Questionnaire::new(raw.id, raw.version, raw.questions)
    }
}

impl Questionnaire {
    pub fn new(id: impl Into<String>, version: u32, questions: Vec<Question>) -> Result<Self> {
        let mut seen = HashSet::new();
        for q in &questions {
            if !seen.insert(q.id.as_str()) {
                return Err(Error::InvalidQuestionnaire(format!(
                    "duplicate question id {}",
                    q.id
                )));
            }
            q.check()?;
        }
        let labels: Vec<usize> = questions
            .iter()
            .enumerate()
            .filter(|(_, q)| q.is_label)
            .map(|(i, _)| i)
            .collect();
        if labels.len() != 1 {
            return Err(Error::InvalidQuestionnaire(format!(
                "expected exactly one label question, found {}",
                labels.len()
            )));
        }
        Ok(Questionnaire {
            id: id.into(),
            version,
            questions,
            label_index: labels[0],
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn label_question(&self) -> &Question {
        &self.questions[self.label_index]
    }

    /// Non-label questions in declaration order.
    pub fn input_questions(&self) -> impl Iterator<Item = &Question> {
        self.questions.iter().filter(|q| !q.is_label)
    }

    pub fn input_ids(&self) -> Vec<String> {
        self.input_questions().map(|q| q.id.clone()).collect()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.label_question().options().to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnswerValue {
    /// 0-based option index of a categorical question.
    Choice(usize),
    Degree(f64),
}

impl fmt::Display for AnswerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerValue::Choice(i) => write!(f, "{i}"),
            AnswerValue::Degree(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub respondent_id: String,
    /// Answers to input questions, keyed by question id.
    pub answers: BTreeMap<String, AnswerValue>,
    pub label: Option<usize>,
}

/// Checks `record` against `q`, collecting every issue rather than stopping at the first.
///
/// Answers keyed by the label question (or any id that is not an input question)
/// are reported as `UnknownQuestion`; the label lives in [`ResponseRecord::label`].
pub fn validate_response<'a>(
    record: &'a ResponseRecord,
    q: &Questionnaire,
) -> Result<&'a ResponseRecord> {
    let mut issues = Vec::new();
    for key in record.answers.keys() {
        match q.question(key) {
            Some(question) if !question.is_label => {}
            _ => issues.push(ResponseIssue::UnknownQuestion(key.clone())),
        }
    }
    for question in q.input_questions() {
        match record.answers.get(&question.id) {
            None => issues.push(ResponseIssue::MissingAnswer(question.id.clone())),
            Some(answer) => {
                if !answer_in_range(question, *answer) {
                    issues.push(ResponseIssue::OutOfRange {
                        question: question.id.clone(),
                        value: answer.to_string(),
                    });
                }
            }
        }
    }
    if let Some(label) = record.label {
        let lq = q.label_question();
        if label >= lq.option_count().unwrap_or(0) {
            issues.push(ResponseIssue::OutOfRange {
                question: lq.id.clone(),
                value: label.to_string(),
            });
        }
    }
    if issues.is_empty() {
        Ok(record)
    } else {
        Err(Error::InvalidResponse {
            respondent: record.respondent_id.clone(),
            issues,
        })
    }
}

fn answer_in_range(question: &Question, answer: AnswerValue) -> bool {
    match (&question.kind, answer) {
        (QuestionKind::Categorical { options }, AnswerValue::Choice(i)) => i < options.len(),
        (QuestionKind::Degree { lower, upper }, AnswerValue::Degree(v)) => {
            *lower <= v && v <= *upper
        }
        // Integer-looking degree answers deserialize as choices.
        (QuestionKind::Degree { lower, upper }, AnswerValue::Choice(i)) => {
            let v = i as f64;
            *lower <= v && v <= *upper
        }
        (QuestionKind::Categorical { .. }, AnswerValue::Degree(_)) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    OneHot,
    Ordinal,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_hot" | "one-hot" | "onehot" => Ok(Scheme::OneHot),
            "ordinal" => Ok(Scheme::Ordinal),
            other => Err(Error::InvalidConfig(format!(
                "unknown encoding scheme {other}"
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::OneHot => "one_hot",
            Scheme::Ordinal => "ordinal",
        })
    }
}

/// What a single feature column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnSlot {
    /// One-hot indicator of the given option.
    Option(usize),
    /// Option index scaled to `[0, 1]`.
    Ordinal,
    Degree,
    /// Unstructured numeric feature (synthetic datasets).
    Raw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSource {
    pub question: String,
    pub slot: ColumnSlot,
}

/// Feature column layout of `q` under `scheme`.
pub fn column_layout(q: &Questionnaire, scheme: Scheme) -> Vec<ColumnSource> {
    let mut cols = Vec::new();
    for question in q.input_questions() {
        let slot_cols: Vec<ColumnSlot> = match (&question.kind, scheme) {
            (QuestionKind::Categorical { options }, Scheme::OneHot) => {
                (0..options.len()).map(ColumnSlot::Option).collect()
            }
            (QuestionKind::Categorical { .. }, Scheme::Ordinal) => vec![ColumnSlot::Ordinal],
            (QuestionKind::Degree { .. }, _) => vec![ColumnSlot::Degree],
        };
        cols.extend(slot_cols.into_iter().map(|slot| ColumnSource {
            question: question.id.clone(),
            slot,
        }));
    }
    cols
}

/// Encodes one validated record into a feature vector.
pub fn encode_response(
    record: &ResponseRecord,
    q: &Questionnaire,
    scheme: Scheme,
) -> Result<Vec<f64>> {
    validate_response(record, q)?;
    let mut out = Vec::new();
    for question in q.input_questions() {
        let answer = record.answers[&question.id];
        match (&question.kind, answer) {
            (QuestionKind::Categorical { options }, AnswerValue::Choice(i)) => match scheme {
                Scheme::OneHot => {
                    out.extend((0..options.len()).map(|k| if k == i { 1.0 } else { 0.0 }))
                }
                Scheme::Ordinal => out.push(i as f64 / (options.len() - 1) as f64),
            },
            (QuestionKind::Degree { lower, upper }, value) => {
                let v = match value {
                    AnswerValue::Degree(v) => v,
                    AnswerValue::Choice(i) => i as f64,
                };
                out.push((v - lower) / (upper - lower));
            }
            (QuestionKind::Categorical { .. }, AnswerValue::Degree(_)) => {
                unreachable!("rejected by validation")
            }
        }
    }
    Ok(out)
}

/// Encoded samples with class labels and the column provenance needed for occlusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub column_map: Vec<ColumnSource>,
    pub class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from plain numeric rows; column `i` is attributed to question `X{i+1}`.
    pub fn from_rows(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        let width = features.first().map_or(0, Vec::len);
        let column_map = (0..width)
            .map(|i| ColumnSource {
                question: format!("X{}", i + 1),
                slot: ColumnSlot::Raw,
            })
            .collect();
        let class_names = (0..n_classes).map(|c| format!("class{c}")).collect();
        Dataset::from_parts(features, labels, column_map, class_names)
    }

    pub fn from_parts(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        column_map: Vec<ColumnSource>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch(features.len(), labels.len()));
        }
        for row in &features {
            if row.len() != column_map.len() {
                return Err(Error::DimensionMismatch {
                    expected: column_map.len(),
                    found: row.len(),
                });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::ClassOutOfRange {
                index: bad,
                classes: class_names.len(),
            });
        }
        Ok(Dataset {
            features,
            labels,
            column_map,
            class_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.column_map.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Contiguous column range owned by each question, in column order.
    pub fn question_blocks(&self) -> Vec<(String, Range<usize>)> {
        let mut blocks: Vec<(String, Range<usize>)> = Vec::new();
        for (i, col) in self.column_map.iter().enumerate() {
            match blocks.last_mut() {
                Some((q, range)) if *q == col.question => range.end = i + 1,
                _ => blocks.push((col.question.clone(), i..i + 1)),
            }
        }
        blocks
    }

    pub fn question_ids(&self) -> Vec<String> {
        self.question_blocks().into_iter().map(|(q, _)| q).collect()
    }

    pub fn block_of(&self, question: &str) -> Option<Range<usize>> {
        self.question_blocks()
            .into_iter()
            .find(|(q, _)| q == question)
            .map(|(_, r)| r)
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            column_map: self.column_map.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// One-hot target rows for the labels.
    pub fn one_hot_targets(&self) -> Vec<Vec<f64>> {
        self.labels
            .iter()
            .map(|&l| {
                (0..self.n_classes())
                    .map(|c| if c == l { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

/// Encodes labelled records row by row.
pub fn encode_dataset(
    records: &[ResponseRecord],
    q: &Questionnaire,
    scheme: Scheme,
) -> Result<Dataset> {
    let mut features = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for record in records {
        let row = encode_response(record, q, scheme)?;
        let label = record
            .label
            .ok_or_else(|| Error::UnlabeledRecord(record.respondent_id.clone()))?;
        features.push(row);
        labels.push(label);
    }
    Dataset::from_parts(features, labels, column_layout(q, scheme), q.class_names())
}

/// Recovers option indices from a one-hot encoded row by block-wise argmax.
pub fn decode_one_hot(row: &[f64], column_map: &[ColumnSource]) -> BTreeMap<String, usize> {
    let mut best: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for (value, col) in row.iter().zip(column_map) {
        if let ColumnSlot::Option(k) = col.slot {
            let entry = best.entry(col.question.clone()).or_insert((k, *value));
            if *value > entry.1 {
                *entry = (k, *value);
            }
        }
    }
    best.into_iter().map(|(q, (k, _))| (q, k)).collect()
}
