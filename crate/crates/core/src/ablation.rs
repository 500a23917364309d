//! Leave-question-out ablation of a fixed, trained classifier.
//!
//! Questions are "removed" by occluding their feature columns (column mean or zero)
//! and the model is re-scored without retraining. [`ablation_matrix`] tabulates the
//! accuracy with every single question and every pair removed; [`interpret`] turns
//! such a matrix into critical questions, pair-critical sets and directed
//! dependencies using a relative accuracy cut.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::parallel;
use crate::survey::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionMode {
    #[default]
    MeanImpute,
    ZeroFill,
}

impl FromStr for OcclusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" | "mean_impute" | "mean-impute" => Ok(OcclusionMode::MeanImpute),
            "zero" | "zero_fill" | "zero-fill" => Ok(OcclusionMode::ZeroFill),
            other => Err(Error::InvalidConfig(format!(
                "unknown occlusion mode {other}"
            ))),
        }
    }
}

impl fmt::Display for OcclusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OcclusionMode::MeanImpute => "mean_impute",
            OcclusionMode::ZeroFill => "zero_fill",
        })
    }
}

/// Copy of `data` with every column of the listed questions replaced.
pub fn occlude<S: AsRef<str>>(
    data: &Dataset,
    questions: &[S],
    mode: OcclusionMode,
) -> Result<Dataset> {
    let mut out = data.clone();
    for q in questions {
        let q = q.as_ref();
        let block = data
            .block_of(q)
            .ok_or_else(|| Error::UnknownQuestion(q.to_string()))?;
        for col in block {
            let value = match mode {
                OcclusionMode::ZeroFill => 0.0,
                OcclusionMode::MeanImpute if data.is_empty() => 0.0,
                OcclusionMode::MeanImpute => column_mean(data, col),
            };
            for row in &mut out.features {
                row[col] = value;
            }
        }
    }
    Ok(out)
}

/// A constant column is its own mean; returning it unchanged keeps occlusion idempotent.
fn column_mean(data: &Dataset, col: usize) -> f64 {
    let first = data.features[0][col];
    if data.features.iter().all(|r| r[col] == first) {
        return first;
    }
    data.features.iter().map(|r| r[col]).sum::<f64>() / data.n_samples() as f64
}

/// Accuracy (percent) with at most two questions removed.
///
/// `cells[i][i]` is the accuracy with question `i` removed, `cells[i][j]` with `i`
/// removed first and `j` second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationMatrix {
    pub question_ids: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub overall: f64,
}

impl AblationMatrix {
    pub fn new(question_ids: Vec<String>, cells: Vec<Vec<f64>>, overall: f64) -> Result<Self> {
        let m = AblationMatrix {
            question_ids,
            cells,
            overall,
        };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        let q = self.question_ids.len();
        if self.cells.len() != q || self.cells.iter().any(|r| r.len() != q) {
            return Err(Error::MalformedMatrix(format!("expected a {q}×{q} matrix")));
        }
        let in_range = |v: f64| v.is_finite() && (0.0..=100.0).contains(&v);
        if !in_range(self.overall) || !self.cells.iter().flatten().all(|v| in_range(*v)) {
            return Err(Error::MalformedMatrix(
                "accuracies must lie in [0, 100]".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.question_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.question_ids.is_empty()
    }

    pub fn cell(&self, i: usize, j: usize) -> f64 {
        self.cells[i][j]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.len()).all(|i| (0..i).all(|j| (self.cells[i][j] - self.cells[j][i]).abs() <= tol))
    }

    /// Cells whose accuracy is at or below `cut`, row-major.
    pub fn cells_at_or_below(&self, cut: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.cells.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v <= cut {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// `overall,<v>` line, `,Q1,...` header, then one row per question.
    pub fn to_csv(&self) -> String {
        let mut s = format!("overall,{}\n", self.overall);
        s.push(',');
        s.push_str(&self.question_ids.join(","));
        s.push('\n');
        for (id, row) in self.question_ids.iter().zip(&self.cells) {
            s.push_str(id);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::MalformedMatrix(format!("line {line}: {msg}"));
        let parse = |line: usize, s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(line, &format!("not a number: {s:?}")))
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let (n, first) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
        let overall = match first.split(',').collect::<Vec<_>>().as_slice() {
            ["overall", v] => parse(n, v)?,
            _ => return Err(bad(n, "expected `overall,<value>`")),
        };
        let (n, header) = lines.next().ok_or_else(|| bad(2, "missing header"))?;
        let mut cols = header.split(',');
        if cols.next().map(str::trim) != Some("") {
            return Err(bad(n, "header must start with an empty cell"));
        }
        let ids: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
        if ids.is_empty() || ids.iter().any(String::is_empty) {
            return Err(bad(n, "header needs question ids"));
        }
        let mut cells = Vec::with_capacity(ids.len());
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let row = cells.len();
            if row >= ids.len() {
                return Err(bad(n, "more rows than questions"));
            }
            if fields[0].trim() != ids[row] {
                return Err(bad(n, &format!("expected row {}", ids[row])));
            }
            if fields.len() != ids.len() + 1 {
                return Err(bad(n, &format!("expected {} values", ids.len())));
            }
            cells.push(
                fields[1..]
                    .iter()
                    .map(|f| parse(n, f))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        if cells.len() != ids.len() {
            return Err(Error::MalformedMatrix(format!(
                "expected {} rows, found {}",
                ids.len(),
                cells.len()
            )));
        }
        AblationMatrix::new(ids, cells, overall)
    }
}

/// Scores `model` on `data` with each question, and each pair of questions, occluded.
/// Pairs are occluded as a set, so the result is symmetric.
pub fn ablation_matrix<C>(model: &C, data: &Dataset, mode: OcclusionMode) -> Result<AblationMatrix>
where
    C: Classifier + Sync + ?Sized,
{
    let ids = data.question_ids();
    let q = ids.len();
    let (overall, _) = evaluate(model, data)?;
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|i| (i..q).map(move |j| (i, j))).collect();
    let accs = parallel::map_indices(pairs.len(), |p| -> Result<f64> {
        let (i, j) = pairs[p];
        let removed: Vec<&str> = if i == j {
            vec![&ids[i]]
        } else {
            vec![&ids[i], &ids[j]]
        };
        let occluded = occlude(data, &removed, mode)?;
        Ok(evaluate(model, &occluded)?.0)
    });
    let mut cells = vec![vec![0.0; q]; q];
    for ((i, j), acc) in pairs.into_iter().zip(accs) {
        let acc = acc?;
        cells[i][j] = acc;
        cells[j][i] = acc;
    }
    AblationMatrix::new(ids, cells, overall)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    /// Removing the critical question and then the dependent one brings accuracy back.
    Recovery,
    /// Removing the non-critical question first keeps the critical one's removal harmless.
    Masking,
}

impl fmt::Display for EdgeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeRule::Recovery => "recovery",
            EdgeRule::Masking => "masking",
        })
    }
}

/// `dependent` depends on `on`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub dependent: String,
    pub on: String,
    pub rule: EdgeRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyReport {
    pub threshold_frac: f64,
    pub overall: f64,
    /// Accuracy at or below which a cell counts as a drastic drop.
    pub cut: f64,
    pub critical_singletons: Vec<String>,
    pub critical_pairs: Vec<(String, String)>,
    pub edges: Vec<Edge>,
}

impl DependencyReport {
    pub fn is_empty(&self) -> bool {
        self.critical_singletons.is_empty()
            && self.critical_pairs.is_empty()
            && self.edges.is_empty()
    }
}

impl fmt::Display for DependencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "overall={} threshold={} cut={}",
            self.overall, self.threshold_frac, self.cut
        )?;
        let singles = if self.critical_singletons.is_empty() {
            "(none)".to_string()
        } else {
            self.critical_singletons.join(", ")
        };
        writeln!(f, "CRITICAL: {singles}")?;
        let pairs = if self.critical_pairs.is_empty() {
            "(none)".to_string()
        } else {
            self.critical_pairs
                .iter()
                .map(|(a, b)| format!("({a},{b})"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        writeln!(f, "PAIR-CRITICAL: {pairs}")?;
        if self.edges.is_empty() {
            writeln!(f, "EDGES: (none)")
        } else {
            writeln!(f, "EDGES:")?;
            for e in &self.edges {
                writeln!(f, "  {} dep {} [{}]", e.dependent, e.on, e.rule)?;
            }
            Ok(())
        }
    }
}

/// Applies the cut `θ = overall·(1 − threshold_frac)`:
///
/// - `i` is critical when `cell(i,i) ≤ θ`;
/// - `{i,j}` is pair-critical when neither is critical alone but
///   `min(cell(i,j), cell(j,i)) ≤ θ`;
/// - for critical `i`, `j` depends on `i` (recovery) when `cell(i,j) > θ`;
/// - for critical `i` and non-critical `j`, `i` depends on `j` (masking) when `cell(j,i) > θ`.
///
/// Output lists follow question order; recovery edges precede masking edges.
pub fn interpret(matrix: &AblationMatrix, threshold_frac: f64) -> Result<DependencyReport> {
    matrix.check()?;
    if !(0.0..=1.0).contains(&threshold_frac) {
        return Err(Error::MalformedMatrix(format!(
            "threshold {threshold_frac} outside [0, 1]"
        )));
    }
    let cut = matrix.overall * (1.0 - threshold_frac);
    let n = matrix.len();
    let c = |i: usize, j: usize| matrix.cells[i][j];
    let drastic = |v: f64| v <= cut;
    let id = |i: usize| matrix.question_ids[i].clone();

    let critical: Vec<usize> = (0..n).filter(|&i| drastic(c(i, i))).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !drastic(c(i, i)) && !drastic(c(j, j)) && drastic(c(i, j).min(c(j, i))) {
                pairs.push((id(i), id(j)));
            }
        }
    }
    let mut edges: BTreeSet<(EdgeRule, usize, usize)> = BTreeSet::new();
    for &i in &critical {
        for j in (0..n).filter(|&j| j != i) {
            if !drastic(c(i, j)) {
                edges.insert((EdgeRule::Recovery, j, i));
            }
            if !drastic(c(j, j)) && !drastic(c(j, i)) {
                edges.insert((EdgeRule::Masking, i, j));
            }
        }
    }
    Ok(DependencyReport {
        threshold_frac,
        overall: matrix.overall,
        cut,
        critical_singletons: critical.into_iter().map(id).collect(),
        critical_pairs: pairs,
        edges: edges
            .into_iter()
            .map(|(rule, dep, on)| Edge {
                dependent: id(dep),
                on: id(on),
                rule,
            })
            .collect(),
    })
}

/// Published leave-two-out accuracies of the one-vs-one SVM on the addiction survey
/// (rows: question removed first). Order-asymmetric as printed.
pub fn builtin_table3() -> AblationMatrix {
    let cells: [[f64; 9]; 9] = [
        [81.0, 76.0, 80.0, 74.0, 78.0, 66.0, 79.0, 49.0, 70.0],
        [77.0, 82.0, 74.0, 60.0, 80.0, 67.0, 78.0, 58.0, 78.0],
        [80.0, 74.0, 82.0, 76.0, 77.0, 74.0, 75.0, 59.0, 73.0],
        [70.0, 60.0, 76.0, 79.0, 78.0, 74.0, 80.0, 61.0, 72.0],
        [80.0, 80.0, 78.0, 79.0, 83.0, 76.0, 81.0, 73.0, 74.0],
        [66.0, 68.0, 76.0, 75.0, 75.0, 78.0, 74.0, 57.0, 66.0],
        [79.0, 78.0, 75.0, 79.0, 81.0, 68.0, 81.0, 55.0, 81.0],
        [62.0, 71.0, 59.0, 60.0, 76.0, 58.0, 58.0, 45.0, 65.0],
        [74.0, 77.0, 73.0, 73.0, 74.0, 70.0, 78.0, 60.0, 80.0],
    ];
    AblationMatrix {
        question_ids: (1..=9).map(|i| format!("Q{i}")).collect(),
        cells: cells.iter().map(|r| r.to_vec()).collect(),
        overall: 85.0,
    }
}
