//! Response CSV: header `respondent_id,<question ids>`, categorical answers as 0-based
//! option indices, degree answers as decimals, `?` for a missing label.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use mindprobe_core::survey::{
    validate_response, AnswerValue, QuestionKind, Questionnaire, ResponseRecord,
};

use crate::error::{CliError, CliResult};

pub fn header(q: &Questionnaire) -> Vec<String> {
    std::iter::once("respondent_id".to_string())
        .chain(q.questions().iter().map(|x| x.id.clone()))
        .collect()
}

pub fn write_responses<W: Write>(
    q: &Questionnaire,
    records: &[ResponseRecord],
    out: W,
) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let to_io = |e: csv::Error| CliError::io(Path::new("<output>"), e.into());
    w.write_record(header(q)).map_err(to_io)?;
    for r in records {
        let mut row = vec![r.respondent_id.clone()];
        for question in q.questions() {
            if question.is_label {
                row.push(r.label.map_or("?".to_string(), |l| l.to_string()));
            } else {
                row.push(
                    r.answers
                        .get(&question.id)
                        .map_or(String::new(), ToString::to_string),
                );
            }
        }
        w.write_record(&row).map_err(to_io)?;
    }
    w.flush()
        .map_err(|e| CliError::io(Path::new("<output>"), e))
}

pub fn responses_to_string(q: &Questionnaire, records: &[ResponseRecord]) -> CliResult<String> {
    let mut buf = Vec::new();
    write_responses(q, records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv writer emits UTF-8"))
}

pub fn read_responses(q: &Questionnaire, path: &Path) -> CliResult<Vec<ResponseRecord>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_responses(q, file, path)
}

/// `path` only labels error messages.
pub fn parse_responses<R: Read>(
    q: &Questionnaire,
    input: R,
    path: &Path,
) -> CliResult<Vec<ResponseRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, csv::Position::line);
        CliError::parse(path, line, e.to_string())
    };
    let got: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let want = header(q);
    if got != want {
        return Err(CliError::SchemaMismatch(format!(
            "{} has columns {} but questionnaire {} expects {}",
            path.display(),
            got.join(","),
            q.id(),
            want.join(",")
        )));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, csv::Position::line);
        let mut answers = BTreeMap::new();
        let mut label = None;
        for (question, field) in q.questions().iter().zip(row.iter().skip(1)) {
            let bad = |what: &str| {
                CliError::parse(path, line, format!("{}: {what} {field:?}", question.id))
            };
            if question.is_label {
                if field != "?" {
                    label = Some(
                        field
                            .parse::<usize>()
                            .map_err(|_| bad("expected a class index or `?`, got"))?,
                    );
                }
                continue;
            }
            let value = match question.kind {
                QuestionKind::Categorical { .. } => AnswerValue::Choice(
                    field
                        .parse()
                        .map_err(|_| bad("expected an option index, got"))?,
                ),
                QuestionKind::Degree { .. } => {
                    AnswerValue::Degree(field.parse().map_err(|_| bad("expected a number, got"))?)
                }
            };
            answers.insert(question.id.clone(), value);
        }
        let record = ResponseRecord {
            respondent_id: row[0].to_string(),
            answers,
            label,
        };
        validate_response(&record, q).map_err(|e| CliError::parse(path, line, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mindprobe_core::cohort::{builtin_survey, sample_cohort, CohortModel};
    use mindprobe_core::survey::Question;

    #[test]
    fn builtin_header() {
        let h = header(&builtin_survey()).join(",");
        assert_eq!(h, "respondent_id,Q1,Q2,Q3,Q4,Q5,Q6,Q7,Q8,Q9,Q10");
    }

    #[test]
    fn round_trip_preserves_records() {
        let q = builtin_survey();
        let mut recs = sample_cohort(&q, 25, 3, &CohortModel::Independent).unwrap();
        recs[4].label = None;
        let text = responses_to_string(&q, &recs).unwrap();
        assert!(text.contains(",?\n"));
        assert!(!text.contains('\r'));
        let back = parse_responses(&q, text.as_bytes(), Path::new("mem.csv")).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn degree_answers_round_trip_exactly() {
        let q = Questionnaire::new(
            "deg",
            1,
            vec![
                Question::degree("D", "how much", 10.0, 100.0),
                Question::categorical("L", "label", &["a", "b"]).as_label(),
            ],
        )
        .unwrap();
        let recs: Vec<ResponseRecord> = [10.0, 55.5, 0.1 + 10.2, 100.0]
            .iter()
            .enumerate()
            .map(|(i, v)| ResponseRecord {
                respondent_id: format!("r{i}"),
                answers: [("D".to_string(), AnswerValue::Degree(*v))]
                    .into_iter()
                    .collect(),
                label: Some(i % 2),
            })
            .collect();
        let text = responses_to_string(&q, &recs).unwrap();
        assert_eq!(
            parse_responses(&q, text.as_bytes(), Path::new("d.csv")).unwrap(),
            recs
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let q = builtin_survey();
        let good = "respondent_id,Q1,Q2,Q3,Q4,Q5,Q6,Q7,Q8,Q9,Q10\nR1,0,0,0,0,0,0,0,0,0,1\n";
        let bad_value = format!("{good}R2,0,0,0,0,0,0,0,x,0,1\n");
        match parse_responses(&q, bad_value.as_bytes(), Path::new("c.csv")) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let out_of_range = format!("{good}R2,0,9,0,0,0,0,0,0,0,1\n");
        match parse_responses(&q, out_of_range.as_bytes(), Path::new("c.csv")) {
            Err(e @ CliError::Parse { line: 3, .. }) => assert!(e.to_string().contains("c.csv:3")),
            other => panic!("{other:?}"),
        }
        let wrong_header = "respondent_id,Q1\nR1,0\n";
        assert!(matches!(
            parse_responses(&q, wrong_header.as_bytes(), Path::new("c.csv")),
            Err(CliError::SchemaMismatch(_))
        ));
    }
}
