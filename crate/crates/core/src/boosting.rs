//! Connection weights and the training rounds that boost misclassified examples.
//!
//! Every likelihood cell `(class, attribute, bin)` has a weight, initially 1.
//! When an example of class `k` loses to class `w`, each of its `M` cells in
//! the class-`k` plane grows by `alpha * (1 - score_k / score_w)`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::density::{CellLayout, Topology};
use crate::error::{Error, Result};
use crate::inference::ClassScores;
use crate::model::Model;

pub const DEFAULT_ALPHA: f64 = 2.0;
pub const DEFAULT_MAX_ROUNDS: usize = 500;
pub const DEFAULT_TAG_GAIN: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    pub weights: Vec<f64>,
}

impl WeightTable {
    pub fn unity(layout: &CellLayout) -> Self {
        WeightTable {
            weights: vec![1.0; layout.len()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub max_rounds: usize,
    /// Multiplier applied to a likelihood whose tag window rejects the example.
    /// 1 disables gating.
    pub tag_gain: f64,
    /// Likelihood used for empty cells; `None` means `1 / (10 * n_train)`.
    pub epsilon_floor: Option<f64>,
    pub topology: Topology,
}

impl TrainConfig {
    pub fn new(topology: Topology) -> Self {
        TrainConfig {
            alpha: DEFAULT_ALPHA,
            max_rounds: DEFAULT_MAX_ROUNDS,
            tag_gain: DEFAULT_TAG_GAIN,
            epsilon_floor: None,
            topology,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::argument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.max_rounds < 1 {
            return Err(Error::argument("max rounds must be at least 1"));
        }
        if !(self.tag_gain > 0.0 && self.tag_gain <= 1.0) {
            return Err(Error::argument(format!(
                "tag gain must lie in (0, 1], got {}",
                self.tag_gain
            )));
        }
        if let Some(eps) = self.epsilon_floor {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::argument(format!("epsilon floor must be positive, got {eps}")));
            }
        }
        Ok(())
    }

    pub fn epsilon_for(&self, n_train: usize) -> f64 {
        self.epsilon_floor.unwrap_or_else(|| 1.0 / (10.0 * n_train as f64))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Misclassified training examples seen in each epoch.
    pub errors: Vec<usize>,
    /// 1-based epoch that finished with zero errors.
    pub converged_at: Option<usize>,
}

impl TrainTrace {
    pub fn epochs(&self) -> usize {
        self.errors.len()
    }

    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }
}

/// Applies one boosting step for an example of class `true_class` that
/// strictly loses under `scores`. `bins` holds the example's bin per attribute.
///
/// Returns the increment added to each of the `M` touched cells. Fails when
/// the true class is not strictly beaten, since the step would be zero or negative.
pub fn boost_example(
    weights: &mut WeightTable,
    layout: &CellLayout,
    bins: &[usize],
    true_class: usize,
    scores: &ClassScores,
    alpha: f64,
) -> Result<f64> {
    let winner = scores.winner();
    if !scores.is_beaten(true_class) {
        return Err(Error::argument(format!(
            "boost_example called for class {true_class}, which is not beaten"
        )));
    }
    let delta = alpha * (1.0 - scores.ratio(true_class, winner));
    for (m, &b) in bins.iter().enumerate() {
        weights.weights[layout.cell(true_class, m, b)] += delta;
    }
    Ok(delta)
}

/// Tag-gated log likelihoods and bins of every training example. Tags and
/// grids are frozen after fitting, so these stay valid for the whole run.
pub(crate) struct EpochCache {
    bins: Vec<Vec<usize>>,
    /// `log_likelihood[i][k * M + m]`
    log_likelihood: Vec<Vec<f64>>,
}

impl EpochCache {
    pub(crate) fn new(model: &Model, train: &Dataset) -> Self {
        let k_count = model.schema.num_classes();
        let m_count = model.schema.num_attributes();
        let mut bins = Vec::with_capacity(train.len());
        let mut log_likelihood = Vec::with_capacity(train.len());
        for ex in &train.examples {
            let b = model.density.bins_of(&ex.values);
            let mut ll = Vec::with_capacity(k_count * m_count);
            for k in 0..k_count {
                for (m, &bin) in b.iter().enumerate() {
                    ll.push(model.tagged_likelihood_in(&ex.values, k, m, bin).ln());
                }
            }
            bins.push(b);
            log_likelihood.push(ll);
        }
        EpochCache { bins, log_likelihood }
    }

    fn scores(&self, model: &Model, i: usize) -> ClassScores {
        let layout = model.density.layout();
        let bins = &self.bins[i];
        let m_count = bins.len();
        let ll = &self.log_likelihood[i];
        let log = (0..layout.classes)
            .map(|k| {
                bins.iter()
                    .enumerate()
                    .map(|(m, &b)| ll[k * m_count + m] + model.weights.weights[layout.cell(k, m, b)].ln())
                    .sum()
            })
            .collect();
        ClassScores { log }
    }
}

pub(crate) fn epoch_with(model: &mut Model, train: &Dataset, cache: &EpochCache) -> usize {
    let alpha = model.config.alpha;
    let mut errors = 0;
    for (i, ex) in train.examples.iter().enumerate() {
        let scores = cache.scores(model, i);
        if scores.winner() == ex.label {
            continue;
        }
        errors += 1;
        // a tie lost on index order has nothing to amplify
        if scores.is_beaten(ex.label) {
            let layout = &model.density.joint.layout;
            boost_example(&mut model.weights, layout, &cache.bins[i], ex.label, &scores, alpha)
                .expect("strict loss checked above");
        }
    }
    errors
}

/// One pass over `train` in dataset order, updating weights in place after
/// each misclassified example. Returns the number of misclassified examples.
pub fn run_epoch(model: &mut Model, train: &Dataset) -> Result<usize> {
    if let Some(diff) = model.schema.mismatch(&train.schema) {
        return Err(Error::schema(diff));
    }
    let cache = EpochCache::new(model, train);
    Ok(epoch_with(model, train, &cache))
}

/// Fits the density tables, then runs up to `max_rounds` epochs, stopping
/// after the first epoch without errors.
pub fn train(trainset: &Dataset, config: TrainConfig) -> Result<(Model, TrainTrace)> {
    let mut model = Model::fitted(trainset, config)?;
    let cache = EpochCache::new(&model, trainset);
    let mut trace = TrainTrace::default();
    for epoch in 1..=model.config.max_rounds {
        let errors = epoch_with(&mut model, trainset, &cache);
        trace.errors.push(errors);
        if errors == 0 {
            trace.converged_at = Some(epoch);
            break;
        }
    }
    model.trace = trace.clone();
    Ok((model, trace))
}
