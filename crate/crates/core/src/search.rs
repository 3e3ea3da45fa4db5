//! Topology search: per-attribute bin counts chosen by held-out accuracy.
//!
//! Bin-count improvements on different attributes tend to add up, so the
//! default search sweeps one attribute at a time from the incumbent topology,
//! merges the per-attribute winners, and verifies the merged topology with
//! one more training. This repeats until a sweep finds nothing better or the
//! training budget runs out. Every trial is an independent training run, so a
//! sweep is evaluated in parallel.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::{data_dir_from_env, DataSource};
use crate::boosting::{train, TrainConfig, DEFAULT_ALPHA, DEFAULT_MAX_ROUNDS, DEFAULT_TAG_GAIN};
use crate::dataset::{Dataset, Schema};
use crate::density::Topology;
use crate::error::{Error, Result};
use crate::evaluation::evaluate;

pub const DEFAULT_BASELINE_BINS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpec {
    /// Candidate bin counts, one list per attribute.
    pub candidates: Vec<Vec<usize>>,
    /// Maximum number of distinct topologies to train.
    pub budget: usize,
    pub parallelism: usize,
    /// Starting bin count for attributes whose candidates include it.
    pub baseline_bins: usize,
    /// Train every combination instead of sweeping coordinates.
    pub exhaustive: bool,
}

impl SearchSpec {
    pub fn new(candidates: Vec<Vec<usize>>, budget: usize) -> Self {
        SearchSpec {
            candidates,
            budget,
            parallelism: 1,
            baseline_bins: DEFAULT_BASELINE_BINS,
            exhaustive: false,
        }
    }

    pub fn validate(&self, attributes: usize) -> Result<()> {
        if self.candidates.len() != attributes {
            return Err(Error::argument(format!(
                "search lists candidates for {} attributes, data has {attributes}",
                self.candidates.len()
            )));
        }
        if let Some(m) = self.candidates.iter().position(Vec::is_empty) {
            return Err(Error::argument(format!("attribute {m} has no candidate bin counts")));
        }
        if self.budget < 1 {
            return Err(Error::argument("search budget must be at least 1"));
        }
        if self.parallelism < 1 {
            return Err(Error::argument("parallelism must be at least 1"));
        }
        Ok(())
    }

    /// The baseline count where it is a candidate, else the first candidate.
    pub fn baseline(&self) -> Topology {
        Topology(
            self.candidates
                .iter()
                .map(|c| {
                    if c.contains(&self.baseline_bins) {
                        self.baseline_bins
                    } else {
                        c[0]
                    }
                })
                .collect(),
        )
    }
}

/// A search described in TOML. The held-out set (`test`, or the rest of a
/// `train_count` split) is used for validation.
///
/// ```toml
/// schema = "pima-indians-diabetes.schema"
/// data = "pima-indians-diabetes.data"
/// train_count = 512
/// budget = 200
/// candidates = [5, 8, 14, 30]
///
/// [per_attribute]
/// pedigree = [5, 6, 7]
/// ```
///
/// Paths resolve as in benchmark suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchFile {
    #[serde(flatten)]
    pub source: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    pub budget: usize,
    #[serde(default = "one")]
    pub parallelism: usize,
    #[serde(default = "default_baseline")]
    pub baseline: usize,
    #[serde(default)]
    pub exhaustive: bool,
    /// Candidate bin counts for continuous attributes without an override.
    pub candidates: Vec<usize>,
    #[serde(default)]
    pub per_attribute: BTreeMap<String, Vec<usize>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_tag_gain")]
    pub tag_gain: f64,
}

fn one() -> usize {
    1
}

fn default_baseline() -> usize {
    DEFAULT_BASELINE_BINS
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_max_rounds() -> usize {
    DEFAULT_MAX_ROUNDS
}

fn default_tag_gain() -> f64 {
    DEFAULT_TAG_GAIN
}

impl SearchFile {
    pub fn parse(text: &str, spec_dir: &Path, data_dir: Option<&Path>) -> Result<Self> {
        let mut file: SearchFile =
            toml::from_str(text).map_err(|e| Error::Format(format!("invalid search spec: {e}")))?;
        let data_dir = match (data_dir, &file.data_dir) {
            (Some(d), _) => d.to_path_buf(),
            (None, Some(d)) => spec_dir.join(d),
            (None, None) => spec_dir.to_path_buf(),
        };
        file.source.resolve(spec_dir, &data_dir);
        file.data_dir = Some(data_dir);
        Ok(file)
    }

    /// Reads a search spec, taking the data directory from the environment when set.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SearchFile::parse(
            &text,
            path.parent().unwrap_or(Path::new(".")),
            data_dir_from_env().as_deref(),
        )
    }

    /// Per-attribute candidates for `schema`; discrete attributes get their value count.
    pub fn spec(&self, schema: &Schema) -> Result<SearchSpec> {
        for name in self.per_attribute.keys() {
            let known = schema.attributes.iter().any(|a| &a.name == name);
            if !known {
                return Err(Error::argument(format!(
                    "per_attribute names unknown attribute `{name}`"
                )));
            }
        }
        let candidates = schema
            .attributes
            .iter()
            .map(|a| match a.value_count() {
                Some(v) => vec![v],
                None => self.per_attribute.get(&a.name).unwrap_or(&self.candidates).clone(),
            })
            .collect();
        Ok(SearchSpec {
            candidates,
            budget: self.budget,
            parallelism: self.parallelism,
            baseline_bins: self.baseline,
            exhaustive: self.exhaustive,
        })
    }

    /// Training settings shared by every trial; the topology is a placeholder.
    pub fn config(&self, schema: &Schema) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            max_rounds: self.max_rounds,
            tag_gain: self.tag_gain,
            ..TrainConfig::new(Topology::uniform(schema, 1))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub topology: Topology,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub epochs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Topology,
    pub best_accuracy: f64,
    pub trials: Vec<Trial>,
    /// Set when the budget stopped the search before it finished.
    pub truncated: bool,
}

struct Runner<'a, F> {
    train: &'a Dataset,
    validation: &'a Dataset,
    base: &'a TrainConfig,
    pool: rayon::ThreadPool,
    budget: usize,
    trials: Vec<Trial>,
    seen: HashMap<Topology, usize>,
    truncated: bool,
    progress: F,
}

fn run_trial(train_set: &Dataset, validation: &Dataset, base: &TrainConfig, topology: Topology) -> Result<Trial> {
    let config = TrainConfig {
        topology: topology.clone(),
        ..base.clone()
    };
    let (model, trace) = train(train_set, config)?;
    Ok(Trial {
        topology,
        train_accuracy: evaluate(&model, train_set)?.accuracy,
        validation_accuracy: evaluate(&model, validation)?.accuracy,
        epochs: trace.epochs(),
    })
}

impl<F: FnMut(&Trial)> Runner<'_, F> {
    /// Trains the topologies not seen before, in order, as far as the budget
    /// allows. Returns the log index of every requested topology that has one.
    fn run(&mut self, batch: Vec<Topology>) -> Result<Vec<Option<usize>>> {
        let mut fresh = Vec::new();
        for t in &batch {
            if !self.seen.contains_key(t) && !fresh.contains(t) {
                fresh.push(t.clone());
            }
        }
        let room = self.budget - self.trials.len();
        if fresh.len() > room {
            fresh.truncate(room);
            self.truncated = true;
        }
        let (train_set, validation, base) = (self.train, self.validation, self.base);
        let results: Vec<Result<Trial>> = self.pool.install(|| {
            fresh
                .par_iter()
                .map(|t| run_trial(train_set, validation, base, t.clone()))
                .collect()
        });
        for trial in results {
            let trial = trial?;
            (self.progress)(&trial);
            self.seen.insert(trial.topology.clone(), self.trials.len());
            self.trials.push(trial);
        }
        Ok(batch.iter().map(|t| self.seen.get(t).copied()).collect())
    }

    fn accuracy(&self, index: usize) -> f64 {
        self.trials[index].validation_accuracy
    }
}

/// Searches bin counts on `train`, scoring each topology by accuracy on `validation`.
pub fn coordinate_search(
    train: &Dataset,
    validation: &Dataset,
    spec: &SearchSpec,
    base_config: &TrainConfig,
) -> Result<SearchResult> {
    coordinate_search_with_progress(train, validation, spec, base_config, |_| {})
}

/// As [`coordinate_search`], calling `progress` once per finished trial in log order.
pub fn coordinate_search_with_progress(
    train: &Dataset,
    validation: &Dataset,
    spec: &SearchSpec,
    base_config: &TrainConfig,
    progress: impl FnMut(&Trial),
) -> Result<SearchResult> {
    let schema = &train.schema;
    spec.validate(schema.num_attributes())?;
    if let Some(diff) = schema.mismatch(&validation.schema) {
        return Err(Error::schema(format!("validation data does not match: {diff}")));
    }
    base_config.validate()?;
    let baseline = spec.baseline();
    baseline.validate(schema)?;
    for (m, cands) in spec.candidates.iter().enumerate() {
        for &c in cands {
            let mut t = baseline.clone();
            t.0[m] = c;
            t.validate(schema)?;
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::argument(format!("cannot start worker threads: {e}")))?;
    let mut runner = Runner {
        train,
        validation,
        base: base_config,
        pool,
        budget: spec.budget,
        trials: Vec::new(),
        seen: HashMap::new(),
        truncated: false,
        progress,
    };

    if spec.exhaustive {
        runner.run(cartesian(&spec.candidates))?;
    } else {
        sweep(&mut runner, spec, baseline)?;
    }

    let mut best = 0;
    for i in 1..runner.trials.len() {
        if runner.accuracy(i) > runner.accuracy(best) {
            best = i;
        }
    }
    Ok(SearchResult {
        best: runner.trials[best].topology.clone(),
        best_accuracy: runner.accuracy(best),
        trials: runner.trials,
        truncated: runner.truncated,
    })
}

fn sweep<F: FnMut(&Trial)>(runner: &mut Runner<'_, F>, spec: &SearchSpec, baseline: Topology) -> Result<()> {
    let mut incumbent = runner.run(vec![baseline])?[0].expect("budget is at least one");
    loop {
        let current = runner.trials[incumbent].topology.clone();
        let mut variants = Vec::new();
        let mut owner = Vec::new();
        for (m, cands) in spec.candidates.iter().enumerate() {
            for &c in cands.iter().filter(|&&c| c != current.0[m]) {
                let mut t = current.clone();
                t.0[m] = c;
                variants.push(t);
                owner.push(m);
            }
        }
        if variants.is_empty() {
            return Ok(());
        }
        let indices = runner.run(variants)?;

        // best strictly improving variant per attribute, earliest on ties
        let mut winners: Vec<Option<usize>> = vec![None; spec.candidates.len()];
        for (&m, index) in owner.iter().zip(&indices) {
            let Some(i) = *index else { continue };
            let beats_incumbent = runner.accuracy(i) > runner.accuracy(incumbent);
            let beats_winner = winners[m].is_none_or(|w| runner.accuracy(i) > runner.accuracy(w));
            if beats_incumbent && beats_winner {
                winners[m] = Some(i);
            }
        }
        let improved: Vec<usize> = winners.iter().flatten().copied().collect();
        if improved.is_empty() || runner.truncated {
            return Ok(());
        }

        let mut merged = current.clone();
        for (m, w) in winners.iter().enumerate() {
            if let Some(w) = w {
                merged.0[m] = runner.trials[*w].topology.0[m];
            }
        }
        let merged_index = runner.run(vec![merged])?[0];

        let mut next = incumbent;
        for i in merged_index.into_iter().chain(improved) {
            if runner.accuracy(i) > runner.accuracy(next) {
                next = i;
            }
        }
        if next == incumbent || runner.truncated {
            return Ok(());
        }
        incumbent = next;
    }
}

fn cartesian(candidates: &[Vec<usize>]) -> Vec<Topology> {
    let mut out = vec![Vec::new()];
    for cands in candidates {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                cands.iter().map(move |&c| {
                    let mut t = prefix.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    out.into_iter().map(Topology).collect()
}
