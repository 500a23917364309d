//! One-shot questionnaire session against a trained model.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use mindprobe_core::survey::{
    encode_response, AnswerValue, Question, QuestionKind, Questionnaire, ResponseRecord,
};
use mindprobe_core::{argmax, Classifier};

use crate::error::{CliError, CliResult};
use crate::model::ModelArchive;
use crate::style;

pub const DISCLAIMER: &str =
    "note: screening aid only; this is not a clinical diagnosis. Please consult a qualified professional.";

fn parse_answer(question: &Question, line: &str) -> Result<AnswerValue, String> {
    let text = line.trim();
    match &question.kind {
        QuestionKind::Categorical { options } => match text.parse::<usize>() {
            Ok(i) if i < options.len() => Ok(AnswerValue::Choice(i)),
            _ => Err(format!(
                "{}: {text:?} is not an option index 0-{}",
                question.id,
                options.len() - 1
            )),
        },
        QuestionKind::Degree { lower, upper } => match text.parse::<f64>() {
            Ok(v) if (*lower..=*upper).contains(&v) => Ok(AnswerValue::Degree(v)),
            _ => Err(format!(
                "{}: {text:?} is not a number in [{lower}, {upper}]",
                question.id
            )),
        },
    }
}

fn prompt<W: Write + ?Sized>(out: &mut W, question: &Question) -> std::io::Result<()> {
    writeln!(out, "{}. {}", question.id, question.prompt)?;
    match &question.kind {
        QuestionKind::Categorical { options } => {
            for (i, o) in options.iter().enumerate() {
                writeln!(out, "  {i}) {o}")?;
            }
        }
        QuestionKind::Degree { lower, upper } => {
            writeln!(out, "  enter a value from {lower} to {upper}")?
        }
    }
    write!(out, "> ")?;
    out.flush()
}

/// Asks every input question on `prompts`, reading one answer per line from `input`.
/// Interactive sessions re-ask after an invalid answer; otherwise the session aborts.
pub fn run<R: BufRead, W: Write, P: Write>(
    archive: &ModelArchive,
    q: &Questionnaire,
    mut input: R,
    out: &mut W,
    prompts: &mut P,
    interactive: bool,
) -> CliResult<usize> {
    archive.check_questionnaire(q)?;
    let io_err = |e| CliError::io(std::path::Path::new("<terminal>"), e);
    let mut answers = BTreeMap::new();
    for question in q.input_questions() {
        loop {
            prompt(prompts, question).map_err(io_err)?;
            let mut line = String::new();
            if input.read_line(&mut line).map_err(io_err)? == 0 {
                return Err(CliError::InvalidAnswer(format!(
                    "input ended before {}",
                    question.id
                )));
            }
            match parse_answer(question, &line) {
                Ok(v) => {
                    answers.insert(question.id.clone(), v);
                    break;
                }
                Err(msg) if interactive => writeln!(prompts, "{msg}; try again").map_err(io_err)?,
                Err(msg) => return Err(CliError::InvalidAnswer(msg)),
            }
        }
    }
    let record = ResponseRecord {
        respondent_id: "session".into(),
        answers,
        label: None,
    };
    let x = encode_response(&record, q, archive.scheme)?;
    let scores = archive.model.scores(&x)?;
    let class = argmax(&scores);
    let name = &archive.class_names[class];
    let shown: Vec<String> = scores
        .iter()
        .map(|v| {
            if v.fract() == 0.0 {
                format!("{v}")
            } else {
                format!("{v:.4}")
            }
        })
        .collect();
    writeln!(out, "{}", style::bold(&format!("class={name}"))).map_err(io_err)?;
    writeln!(out, "scores={}", shown.join(",")).map_err(io_err)?;
    writeln!(out, "classes={}", archive.class_names.join(",")).map_err(io_err)?;
    writeln!(out, "{DISCLAIMER}").map_err(io_err)?;
    Ok(class)
}
