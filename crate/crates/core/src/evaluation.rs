//! Accuracy reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::inference::class_scores;
use crate::model::Model;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub classes: Vec<String>,
    pub n_examples: usize,
    pub n_correct: usize,
    /// Percent correct.
    pub accuracy: f64,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub per_class_correct: Vec<usize>,
    /// Examples whose top score was shared by more than one class.
    pub ties: usize,
}

impl Report {
    fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        Report {
            classes,
            n_examples: 0,
            n_correct: 0,
            accuracy: 0.0,
            confusion: vec![vec![0; k]; k],
            per_class_correct: vec![0; k],
            ties: 0,
        }
    }

    fn record(&mut self, truth: usize, predicted: usize, tie: bool) {
        self.n_examples += 1;
        self.confusion[truth][predicted] += 1;
        if truth == predicted {
            self.n_correct += 1;
            self.per_class_correct[truth] += 1;
        }
        if tie {
            self.ties += 1;
        }
        self.accuracy = 100.0 * self.n_correct as f64 / self.n_examples as f64;
    }

    /// Counts in class order followed by the accuracy, e.g. `214, 205 : 96.99 %`.
    pub fn summary_line(&self) -> String {
        let counts: Vec<String> = self.per_class_correct.iter().map(|c| c.to_string()).collect();
        format!("{} : {} %", counts.join(", "), format_accuracy(self.accuracy))
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "examples   {}", self.n_examples);
        let _ = writeln!(out, "correct    {}", self.n_correct);
        let _ = writeln!(out, "accuracy   {:.2} %", self.accuracy);
        let _ = writeln!(out, "per class  {}", self.summary_line());
        if self.ties > 0 {
            let _ = writeln!(out, "ties       {}", self.ties);
        }
        let width = self
            .classes
            .iter()
            .map(String::len)
            .chain(self.confusion.iter().flatten().map(|c| c.to_string().len()))
            .max()
            .unwrap_or(1)
            .max(4);
        let _ = write!(out, "\n{:>width$} ", "true");
        for c in &self.classes {
            let _ = write!(out, " {c:>width$}");
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let _ = write!(out, "{c:>width$} ");
            for n in row {
                let _ = write!(out, " {n:>width$}");
            }
            out.push('\n');
        }
        out
    }

    /// One line of space-separated `key=value` fields.
    pub fn render_machine(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        let confusion: Vec<String> = self.confusion.iter().map(|row| join(row)).collect();
        format!(
            "n_examples={} n_correct={} per_class_correct={} accuracy={:.2} ties={} confusion={}",
            self.n_examples,
            self.n_correct,
            join(&self.per_class_correct),
            self.accuracy,
            self.ties,
            confusion.join("/")
        )
    }
}

/// `100` for whole percentages, two decimals otherwise.
fn format_accuracy(accuracy: f64) -> String {
    let rounded = format!("{accuracy:.2}");
    rounded.strip_suffix(".00").map(str::to_string).unwrap_or(rounded)
}

/// Predicts every example of `data` and tallies the results.
pub fn evaluate(model: &Model, data: &Dataset) -> Result<Report> {
    if let Some(diff) = model.schema.mismatch(&data.schema) {
        return Err(Error::schema(format!("data does not match the model: {diff}")));
    }
    if data.is_empty() {
        return Err(Error::argument("cannot evaluate an empty dataset"));
    }
    let mut report = Report::new(model.schema.classes.clone());
    for ex in &data.examples {
        let scores = class_scores(model, &ex.values)?;
        report.record(ex.label, scores.winner(), scores.is_tie());
    }
    Ok(report)
}
