//! The trained network and its on-disk form.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boosting::{TrainConfig, TrainTrace, WeightTable};
use crate::dataset::{Dataset, Schema};
use crate::density::{fit_density, DensityModel};
use crate::error::{Error, Result};
use crate::inference::ClassScores;

pub const FORMAT_VERSION: &str = "diffboost-model/1";

/// Everything needed to score new examples: the schema, the fitted density
/// tables and tags, the boosted weights, and how they were produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub schema: Schema,
    pub config: TrainConfig,
    /// Resolved likelihood floor for empty cells.
    pub epsilon: f64,
    pub density: DensityModel,
    pub weights: WeightTable,
    pub trace: TrainTrace,
}

impl Model {
    /// Density tables fitted on `train`, unit weights, no epochs run.
    pub fn fitted(train: &Dataset, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        train.validate()?;
        let density = fit_density(train, &config.topology)?;
        let weights = WeightTable::unity(density.layout());
        Ok(Model {
            schema: train.schema.clone(),
            epsilon: config.epsilon_for(train.len()),
            config,
            density,
            weights,
            trace: TrainTrace::default(),
        })
    }

    pub fn tagged_likelihood(&self, values: &[f64], k: usize, m: usize) -> f64 {
        self.density
            .tagged_likelihood(values, k, m, self.config.tag_gain, self.epsilon)
    }

    pub(crate) fn tagged_likelihood_in(&self, values: &[f64], k: usize, m: usize, bin: usize) -> f64 {
        self.density
            .tagged_likelihood_in(values, k, m, bin, self.config.tag_gain, self.epsilon)
    }

    pub fn weight(&self, k: usize, m: usize, b: usize) -> f64 {
        self.weights.weights[self.density.layout().cell(k, m, b)]
    }

    pub(crate) fn scores_with_bins(&self, values: &[f64], bins: &[usize]) -> ClassScores {
        let log = (0..self.schema.num_classes())
            .map(|k| {
                bins.iter()
                    .enumerate()
                    .map(|(m, &b)| self.tagged_likelihood_in(values, k, m, b).ln() + self.weight(k, m, b).ln())
                    .sum()
            })
            .collect();
        ClassScores { log }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFileRef {
            format: FORMAT_VERSION,
            model: self,
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(format!("cannot encode model: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("cannot decode model: {e}")))?;
        if file.format != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format `{}` (expected `{FORMAT_VERSION}`)",
                file.format
            )));
        }
        let model = file.model;
        model.check_consistency()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check_consistency(&self) -> Result<()> {
        self.schema.validate()?;
        self.config.validate()?;
        self.config.topology.validate(&self.schema)?;
        let layout = self.density.layout();
        let bad = |what: &str| Err(Error::Format(format!("model file is inconsistent: {what}")));
        if layout.classes != self.schema.num_classes()
            || (0..layout.attributes())
                .map(|m| layout.bins(m))
                .ne(self.config.topology.0.iter().copied())
        {
            return bad("cell layout does not match the topology");
        }
        if self.density.bins.len() != self.schema.num_attributes()
            || self.density.joint.counts.len() != layout.len()
            || self.density.tags.windows.len() != layout.len()
            || self.weights.weights.len() != layout.len()
        {
            return bad("table sizes do not match the layout");
        }
        if self.density.joint.n_train == 0 || self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("empty training set");
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    format: &'a str,
    model: &'a Model,
}

#[derive(Deserialize)]
struct ModelFile {
    format: String,
    model: Model,
}
