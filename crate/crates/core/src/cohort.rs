//! The builtin addiction survey and synthetic respondent cohorts.
//!
//! The survey ships with its published answer percentages as marginals. Cohorts are
//! drawn either independently from those marginals or from a [`DependencyModel`]
//! that plants a label-driving question and answer echoes between questions, so
//! that ablation has known structure to recover.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::rng;
use crate::survey::{AnswerValue, Question, QuestionKind, Questionnaire, ResponseRecord};

/// Option counts are 4,3,3,4,4,4,3,3,4 for the inputs and 4 for the label.
pub fn builtin_survey() -> Questionnaire {
    let q = |id: &str, prompt: &str, options: &[(&str, f64)]| {
        let labels: Vec<&str> = options.iter().map(|(o, _)| *o).collect();
        let mut marginals: Vec<f64> = options.iter().map(|(_, pct)| pct / 100.0).collect();
        let last = marginals.len() - 1;
        marginals[last] = 1.0 - marginals[..last].iter().sum::<f64>();
        Question::categorical(id, prompt, &labels).with_marginals(marginals)
    };
    let questions = vec![
        q(
            "Q1",
            "How often do you do this activity?",
            &[("Everyday", 50.3), ("Twice a day", 4.5), ("Once a week", 24.0), ("Twice a week", 21.2)],
        ),
        q(
            "Q2",
            "Do you feel an urge to do it?",
            &[("Yes", 59.2), ("No", 8.6), ("Not really", 32.2)],
        ),
        q(
            "Q3",
            "Does it affect your mood if you do not do this activity on a regular basis?",
            &[("Yes", 43.2), ("No", 42.8), ("Not sure", 14.0)],
        ),
        q(
            "Q4",
            "Do you do this activity alone or with some company?",
            &[("Alone", 50.3), ("Two to three", 23.3), ("More than three", 3.1), ("Does not matter", 23.3)],
        ),
        q(
            "Q5",
            "Besides work or studies, how many other main activities you have in a day besides this activity?",
            &[("Three more", 66.1), ("Five more", 14.0), ("10 more", 1.4), ("Many", 18.5)],
        ),
        q(
            "Q6",
            "How many very close friends and family do you talk to everyday?",
            &[("One or two", 44.5), ("Three to five", 36.0), ("Around 10", 8.2), ("Many", 11.3)],
        ),
        q(
            "Q7",
            "Did you attempt to seek professional help to stop this activity?",
            &[("No", 74.7), ("Yes", 6.8), ("Not really", 18.5)],
        ),
        q(
            "Q8",
            "Do you think you get distracted in your daily work or studies by thinking about this activity?",
            &[("Yes", 25.7), ("No", 48.3), ("Manageable", 26.0)],
        ),
        q(
            "Q9",
            "Have you talked with others about this activity?",
            &[
                ("No, I keep it to myself", 36.3),
                ("Selected few", 32.2),
                ("Close friends and family only", 15.4),
                ("Everybody knows about it", 16.1),
            ],
        ),
        q(
            "Q10",
            "Rate yourself with regard to this activity",
            &[("Addicted", 19.5), ("Not addicted", 23.3), ("Manageable", 44.9), ("I don't know", 12.3)],
        )
        .as_label(),
    ];
    Questionnaire::new("addiction-survey", 1, questions).expect("builtin survey is well formed")
}

/// Target echoes the source's option index with probability `p_copy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub source: String,
    pub target: String,
    pub p_copy: f64,
}

/// Maps each option of the driver question to a distribution over label classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRule {
    pub driver: String,
    /// `table[k]` is the class distribution when the driver answer is option `k`.
    pub table: Vec<Vec<f64>>,
}

/// Planted structure for synthetic cohorts. Base answer distributions are the
/// questionnaire's own marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyModel {
    pub label_rule: LabelRule,
    pub couplings: Vec<Coupling>,
}

impl DependencyModel {
    pub fn validate(&self, q: &Questionnaire) -> Result<()> {
        let n_classes = q.class_names().len();
        let driver = input_categorical(q, &self.label_rule.driver)?;
        let n_driver = driver.option_count().unwrap_or(0);
        if self.label_rule.table.len() != n_driver {
            return Err(Error::InvalidConfig(format!(
                "label rule has {} rows for {} driver options",
                self.label_rule.table.len(),
                n_driver
            )));
        }
        for row in &self.label_rule.table {
            let sum: f64 = row.iter().sum();
            if row.len() != n_classes
                || row.iter().any(|p| !(0.0..=1.0).contains(p))
                || (sum - 1.0).abs() > 1e-9
            {
                return Err(Error::InvalidConfig(format!(
                    "label rule row {row:?} is not a distribution"
                )));
            }
        }
        for c in &self.couplings {
            if !(0.0..=1.0).contains(&c.p_copy) {
                return Err(Error::InvalidConfig(format!(
                    "p_copy {} outside [0, 1]",
                    c.p_copy
                )));
            }
            let src = input_categorical(q, &c.source)?;
            let tgt = input_categorical(q, &c.target)?;
            if c.source == c.target {
                return Err(Error::InvalidConfig(format!(
                    "{} coupled to itself",
                    c.source
                )));
            }
            // Every source option index must be a valid target index.
            if src.option_count() > tgt.option_count() {
                return Err(Error::InvalidConfig(format!(
                    "{} has more options than {}",
                    c.source, c.target
                )));
            }
        }
        Ok(())
    }
}

fn input_categorical<'a>(q: &'a Questionnaire, id: &str) -> Result<&'a Question> {
    match q.question(id) {
        Some(question) if !question.is_label && question.option_count().is_some() => Ok(question),
        _ => Err(Error::InvalidQuestion(id.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum CohortModel {
    /// Every answer, label included, drawn i.i.d. from its marginal.
    #[default]
    Independent,
    Planted(DependencyModel),
}

/// Builds a model whose label is a fixed function of `driver`'s answer, corrupted with
/// probability `flip` to a uniformly chosen other class.
///
/// Driver option `k` maps to class `k mod c`.
pub fn plant_signal(
    q: &Questionnaire,
    driver: &str,
    flip: f64,
    echoes: &[Coupling],
) -> Result<DependencyModel> {
    let driver_q = input_categorical(q, driver)?;
    if !(0.0..=1.0).contains(&flip) {
        return Err(Error::InvalidConfig(format!("flip {flip} outside [0, 1]")));
    }
    let c = q.class_names().len();
    let table = (0..driver_q.option_count().unwrap_or(0))
        .map(|k| {
            (0..c)
                .map(|class| {
                    if class == k % c {
                        1.0 - flip
                    } else {
                        flip / (c - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let model = DependencyModel {
        label_rule: LabelRule {
            driver: driver.to_string(),
            table,
        },
        couplings: echoes.to_vec(),
    };
    model.validate(q)?;
    Ok(model)
}

/// Planted-signal settings as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalConfig {
    pub driver: String,
    #[serde(default)]
    pub flip: f64,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
}

impl SignalConfig {
    pub fn to_model(&self, q: &Questionnaire) -> Result<DependencyModel> {
        plant_signal(q, &self.driver, self.flip, &self.couplings)
    }
}

/// Draws `n` respondents. Record `i` uses random stream `i` of `seed`, so any
/// prefix of a cohort equals the smaller cohort with the same seed.
pub fn sample_cohort(
    q: &Questionnaire,
    n: usize,
    seed: u64,
    model: &CohortModel,
) -> Result<Vec<ResponseRecord>> {
    for question in q.questions() {
        if question.option_count().is_some() && question.marginals.is_none() {
            return Err(Error::MissingMarginals(question.id.clone()));
        }
    }
    if let CohortModel::Planted(m) = model {
        m.validate(q)?;
    }
    Ok(parallel::map_indices(n, |i| {
        sample_record(q, i, seed, model)
    }))
}

fn sample_record(
    q: &Questionnaire,
    index: usize,
    seed: u64,
    model: &CohortModel,
) -> ResponseRecord {
    let mut rng = rng::stream(seed, index as u64);
    let mut answers = std::collections::BTreeMap::new();
    for question in q.input_questions() {
        let u = rng::unit(&mut rng);
        let value = match (&question.kind, &question.marginals) {
            (QuestionKind::Categorical { .. }, Some(m)) => {
                AnswerValue::Choice(rng::categorical(m, u))
            }
            (QuestionKind::Degree { lower, upper }, _) => {
                AnswerValue::Degree(lower + u * (upper - lower))
            }
            (QuestionKind::Categorical { .. }, None) => unreachable!("marginals checked"),
        };
        answers.insert(question.id.clone(), value);
    }
    let label_q = q.label_question();
    let label = match model {
        CohortModel::Independent => {
            let m = label_q.marginals.as_ref().expect("marginals checked");
            rng::categorical(m, rng::unit(&mut rng))
        }
        CohortModel::Planted(dep) => {
            for coupling in &dep.couplings {
                let u = rng::unit(&mut rng);
                if u < coupling.p_copy {
                    let src = answers[&coupling.source];
                    answers.insert(coupling.target.clone(), src);
                }
            }
            let driver = match answers[&dep.label_rule.driver] {
                AnswerValue::Choice(k) => k,
                AnswerValue::Degree(_) => unreachable!("driver is categorical"),
            };
            rng::categorical(&dep.label_rule.table[driver], rng::unit(&mut rng))
        }
    };
    ResponseRecord {
        respondent_id: format!("R{:05}", index + 1),
        answers,
        label: Some(label),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::validate_response;

    #[test]
    fn builtin_marginals_match_published_shares() {
        let q = builtin_survey();
        assert_eq!(q.questions().len(), 10);
        assert_eq!(q.label_question().id, "Q10");
        let q1 = q.question("Q1").unwrap();
        assert_eq!(q1.options()[0], "Everyday");
        assert!((q1.marginals.as_ref().unwrap()[0] - 0.503).abs() < 1e-12);
        let q10 = q.label_question().marginals.clone().unwrap();
        for (got, want) in q10.iter().zip([0.195, 0.233, 0.449, 0.123]) {
            assert!((got - want).abs() < 1e-12);
        }
        for question in q.questions() {
            let sum: f64 = question.marginals.as_ref().unwrap().iter().sum();
            assert!((sum - 1.0).abs() < 0.005, "{}", question.id);
        }
    }

    #[test]
    fn empty_and_deterministic_cohorts() {
        let q = builtin_survey();
        assert!(sample_cohort(&q, 0, 1, &CohortModel::Independent)
            .unwrap()
            .is_empty());
        let a = sample_cohort(&q, 50, 9, &CohortModel::Independent).unwrap();
        let b = sample_cohort(&q, 50, 9, &CohortModel::Independent).unwrap();
        assert_eq!(a, b);
        let prefix = sample_cohort(&q, 20, 9, &CohortModel::Independent).unwrap();
        assert_eq!(&a[..20], &prefix[..]);
        for r in &a {
            validate_response(r, &q).unwrap();
        }
    }

    #[test]
    fn missing_marginals_rejected() {
        let q = Questionnaire::new(
            "m",
            1,
            vec![
                Question::categorical("A", "a", &["y", "n"]),
                Question::categorical("L", "l", &["y", "n"])
                    .with_marginals(vec![0.5, 0.5])
                    .as_label(),
            ],
        )
        .unwrap();
        assert!(matches!(
            sample_cohort(&q, 3, 0, &CohortModel::Independent),
            Err(Error::MissingMarginals(id)) if id == "A"
        ));
    }

    #[test]
    fn q2_yes_frequency() {
        let q = builtin_survey();
        let cohort = sample_cohort(&q, 10_000, 2024, &CohortModel::Independent).unwrap();
        let yes = cohort
            .iter()
            .filter(|r| r.answers["Q2"] == AnswerValue::Choice(0))
            .count() as f64
            / 10_000.0;
        assert!((yes - 0.592).abs() < 0.02, "{yes}");
    }

    #[test]
    fn zero_flip_label_is_function_of_driver() {
        let q = builtin_survey();
        let model = plant_signal(&q, "Q8", 0.0, &[]).unwrap();
        let cohort = sample_cohort(&q, 500, 3, &CohortModel::Planted(model)).unwrap();
        for r in &cohort {
            let AnswerValue::Choice(k) = r.answers["Q8"] else {
                panic!()
            };
            assert_eq!(r.label, Some(k % 4));
        }
    }

    #[test]
    fn full_flip_is_uniform_over_classes() {
        let q = builtin_survey();
        let model = plant_signal(&q, "Q8", 0.75, &[]).unwrap();
        for row in &model.label_rule.table {
            for p in row {
                assert!((p - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn echo_coupling_agreement() {
        let q = builtin_survey();
        let echo = Coupling {
            source: "Q8".into(),
            target: "Q5".into(),
            p_copy: 0.9,
        };
        let model = plant_signal(&q, "Q8", 0.05, &[echo]).unwrap();
        let cohort = sample_cohort(&q, 10_000, 11, &CohortModel::Planted(model)).unwrap();
        let agree = cohort
            .iter()
            .filter(|r| r.answers["Q5"] == r.answers["Q8"])
            .count() as f64
            / 10_000.0;
        assert!(agree >= 0.9, "{agree}");
    }

    #[test]
    fn invalid_signal_configs() {
        let q = builtin_survey();
        assert!(matches!(
            plant_signal(&q, "Q10", 0.1, &[]),
            Err(Error::InvalidQuestion(_))
        ));
        assert!(matches!(
            plant_signal(&q, "Q99", 0.1, &[]),
            Err(Error::InvalidQuestion(_))
        ));
        assert!(plant_signal(&q, "Q8", 1.5, &[]).is_err());
        let wide_to_narrow = Coupling {
            source: "Q1".into(),
            target: "Q2".into(),
            p_copy: 0.5,
        };
        assert!(plant_signal(&q, "Q8", 0.1, &[wide_to_narrow]).is_err());
        let bad_p = Coupling {
            source: "Q2".into(),
            target: "Q3".into(),
            p_copy: 1.5,
        };
        assert!(plant_signal(&q, "Q8", 0.1, &[bad_p]).is_err());
    }
}
