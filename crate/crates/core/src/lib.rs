//! Difference-boosted naive Bayes classification.
//!
//! Training happens in two stages. [`density::fit_density`] spreads the
//! training examples over per-attribute equal-width bins, producing joint
//! count tables plus a tag window per populated cell. [`boosting::train`] then
//! rereads the training set in rounds and raises the connection weight of
//! every likelihood cell touched by a misclassified example, until an epoch
//! finishes without errors or the round budget is spent.
//!
//! Prediction ([`inference`]) multiplies the tag-gated likelihoods by their
//! weights and normalizes across classes.

pub mod benchmark;
pub mod boosting;
pub mod dataset;
pub mod density;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod model;
pub mod search;

pub use benchmark::{run_benchmark, run_experiment, DataSource, Experiment, Suite, SuiteReport};
pub use boosting::{boost_example, run_epoch, train, TrainConfig, TrainTrace, WeightTable};
pub use dataset::{
    parse_features, parse_table, split_dataset, AttributeKind, AttributeSpec, Dataset, Delimiter, Example,
    ParseOptions, Schema,
};
pub use density::{fit_density, make_bin_spec, BinSpec, DensityModel, Topology};
pub use error::{Error, Result};
pub use evaluation::{evaluate, Report};
pub use inference::{class_scores, posterior, predict, ClassScores, Posterior};
pub use model::Model;
pub use search::{coordinate_search, SearchFile, SearchResult, SearchSpec, Trial};
