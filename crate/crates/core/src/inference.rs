//! Weighted, tag-gated class scores and normalized posteriors.

use crate::error::{Error, Result};
use crate::model::Model;

/// Unnormalized class scores, kept as natural logarithms.
///
/// Products of twenty-odd sub-unity likelihoods underflow `f64`, so the
/// scores are only exponentiated relative to the largest one.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassScores {
    pub log: Vec<f64>,
}

impl ClassScores {
    fn top(&self) -> f64 {
        self.log.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-scoring class; exact ties go to the lowest index.
    pub fn winner(&self) -> usize {
        let top = self.top();
        self.log.iter().position(|&s| s == top).unwrap_or(0)
    }

    /// True when more than one class attains the top score.
    pub fn is_tie(&self) -> bool {
        let top = self.top();
        self.log.iter().filter(|&&s| s == top).count() > 1
    }

    /// True when class `k` scores strictly below the winner.
    pub fn is_beaten(&self, k: usize) -> bool {
        self.log[k] < self.top()
    }

    /// `score[a] / score[b]`.
    pub fn ratio(&self, a: usize, b: usize) -> f64 {
        (self.log[a] - self.log[b]).exp()
    }

    /// Scores scaled so that the winner has score 1.
    pub fn relative(&self) -> Vec<f64> {
        let top = self.top();
        self.log.iter().map(|s| (s - top).exp()).collect()
    }

    /// Scores on their original scale. May underflow to zero for long products.
    pub fn absolute(&self) -> Vec<f64> {
        self.log.iter().map(|s| s.exp()).collect()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let rel = self.relative();
        let total: f64 = rel.iter().sum();
        rel.into_iter().map(|s| s / total).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    pub probabilities: Vec<f64>,
    pub winner: usize,
    pub tie: bool,
}

pub(crate) fn check_arity(model: &Model, values: &[f64]) -> Result<()> {
    let m = model.schema.num_attributes();
    if values.len() != m {
        return Err(Error::argument(format!(
            "example has {} attribute values, model expects {m}",
            values.len()
        )));
    }
    Ok(())
}

/// `score_k = prod_m tagged_likelihood(k, m) * W[k][m][bin_m]`, in log space.
pub fn class_scores(model: &Model, values: &[f64]) -> Result<ClassScores> {
    check_arity(model, values)?;
    let bins = model.density.bins_of(values);
    Ok(model.scores_with_bins(values, &bins))
}

pub fn posterior(model: &Model, values: &[f64]) -> Result<Posterior> {
    let scores = class_scores(model, values)?;
    Ok(Posterior {
        probabilities: scores.normalized(),
        winner: scores.winner(),
        tie: scores.is_tie(),
    })
}

/// Label of the winning class.
pub fn predict<'m>(model: &'m Model, values: &[f64]) -> Result<&'m str> {
    let winner = class_scores(model, values)?.winner();
    Ok(&model.schema.classes[winner])
}
