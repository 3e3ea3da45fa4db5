//! Benchmark suites: train and evaluate a list of experiments and compare the
//! results against expected ranges.
//!
//! A suite is a TOML file:
//!
//! ```toml
//! data_dir = "../data"
//!
//! [[experiment]]
//! name = "breast-cancer"
//! schema = "breast-cancer-wisconsin.schema"
//! data = "breast-cancer-wisconsin.data"
//! train_count = 341
//! bins = [7]
//!
//! [[experiment.check]]
//! metric = "test_accuracy"
//! min = 96.5
//! reference = 97.95
//! ```
//!
//! Schema paths are relative to the suite file. Data paths are relative to
//! the data directory: `$DIFFBOOST_DATA_DIR` when set, else `data_dir`
//! (relative to the suite file), else the suite file's own directory.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{train, TrainConfig, TrainTrace, DEFAULT_ALPHA, DEFAULT_MAX_ROUNDS, DEFAULT_TAG_GAIN};
use crate::dataset::{parse_table, split_dataset, Dataset, ParseOptions, Schema};
use crate::density::Topology;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, Report};

pub const DATA_DIR_ENV: &str = "DIFFBOOST_DATA_DIR";

const FETCH_HINT: &str = "run scripts/fetch_datasets.py <data dir> or point DIFFBOOST_DATA_DIR at the files";

/// The directory named by `$DIFFBOOST_DATA_DIR`, if set and non-empty.
pub fn data_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Where the examples of an experiment come from: either one file split by
/// `train_count`, or separate `train` and `test` files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub schema: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_count: Option<usize>,
    /// Shuffle seed for `train_count` splits; file order when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
}

impl DataSource {
    /// Makes relative paths absolute: the schema against `spec_dir`, data files against `data_dir`.
    pub fn resolve(&mut self, spec_dir: &Path, data_dir: &Path) {
        self.schema = spec_dir.join(&self.schema);
        for p in [&mut self.data, &mut self.train, &mut self.test].into_iter().flatten() {
            *p = data_dir.join(&*p);
        }
    }

    /// Reads the schema and returns the training and held-out sets.
    pub fn load(&self) -> Result<(Schema, Dataset, Dataset)> {
        let schema = Schema::from_file(&self.schema)?;
        let opts = ParseOptions::default();
        let read = |path: &Path| parse_table(path, &schema, &opts).map_err(missing_data_hint);
        let (train_set, test_set) = match (&self.data, self.train_count, &self.train, &self.test) {
            (Some(data), Some(n), None, None) => split_dataset(&read(data)?, n, self.seed)?,
            (None, None, Some(train), Some(test)) => (read(train)?, read(test)?),
            _ => {
                return Err(Error::argument(
                    "give either `data` with `train_count`, or both `train` and `test`",
                ))
            }
        };
        Ok((schema, train_set, test_set))
    }
}

fn missing_data_hint(e: Error) -> Error {
    match e {
        Error::Io { path, source } if source.kind() == io::ErrorKind::NotFound => Error::Io {
            path: path.clone(),
            source: io::Error::new(io::ErrorKind::NotFound, format!("dataset not found ({FETCH_HINT})")),
        },
        other => other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TrainAccuracy,
    TestAccuracy,
    Epochs,
    Seconds,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::TrainAccuracy => "train_accuracy",
            Metric::TestAccuracy => "test_accuracy",
            Metric::Epochs => "epochs",
            Metric::Seconds => "seconds",
        }
    }
}

/// An expected range for one metric. `reference` is reported but not enforced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub metric: Metric,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub reference: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub name: String,
    #[serde(flatten)]
    pub source: DataSource,
    /// One count per attribute, or a single count for every continuous attribute.
    pub bins: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_tag_gain")]
    pub tag_gain: f64,
    #[serde(default, rename = "check")]
    pub checks: Vec<Check>,
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

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<Experiment>,
}

impl Suite {
    /// Parses a suite and resolves its paths. `data_dir` overrides the
    /// directory named in the file.
    pub fn parse(text: &str, spec_dir: &Path, data_dir: Option<&Path>) -> Result<Self> {
        let mut suite: Suite = toml::from_str(text).map_err(|e| Error::Format(format!("invalid suite: {e}")))?;
        let data_dir = match (data_dir, &suite.data_dir) {
            (Some(d), _) => d.to_path_buf(),
            (None, Some(d)) => spec_dir.join(d),
            (None, None) => spec_dir.to_path_buf(),
        };
        for e in &mut suite.experiments {
            if e.name.is_empty() || e.name.contains(char::is_whitespace) {
                return Err(Error::Format(format!(
                    "experiment name `{}` must be non-empty and free of whitespace",
                    e.name
                )));
            }
            e.source.resolve(spec_dir, &data_dir);
        }
        suite.data_dir = Some(data_dir);
        Ok(suite)
    }

    /// Reads a suite file, taking the data directory from the environment when set.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec_dir = path.parent().unwrap_or(Path::new("."));
        Suite::parse(&text, spec_dir, data_dir_from_env().as_deref())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRun {
    pub topology: Topology,
    pub train: Report,
    pub test: Report,
    pub trace: TrainTrace,
    pub seconds: f64,
    pub checks: Vec<CheckOutcome>,
}

impl ExperimentRun {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::TrainAccuracy => self.train.accuracy,
            Metric::TestAccuracy => self.test.accuracy,
            Metric::Epochs => self.trace.epochs() as f64,
            Metric::Seconds => self.seconds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub name: String,
    /// The run, or the reason it could not happen.
    pub run: std::result::Result<ExperimentRun, String>,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.run.as_ref().is_ok_and(ExperimentRun::passed)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuiteReport {
    pub outcomes: Vec<ExperimentOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(ExperimentOutcome::passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            let _ = writeln!(out, "== {} ==", o.name);
            match &o.run {
                Err(message) => {
                    let _ = writeln!(out, "ERROR  {message}");
                }
                Ok(run) => {
                    let converged = match run.trace.converged_at {
                        Some(e) => format!("converged in {e} epochs"),
                        None => format!("stopped after {} epochs", run.trace.epochs()),
                    };
                    let _ = writeln!(out, "bins   {}", run.topology);
                    let _ = writeln!(out, "train  ({}) {}", run.train.n_examples, run.train.summary_line());
                    let _ = writeln!(out, "test   ({}) {}", run.test.n_examples, run.test.summary_line());
                    let _ = writeln!(out, "{converged}, {:.2} s", run.seconds);
                    for c in &run.checks {
                        let bound = match (c.check.min, c.check.max) {
                            (Some(lo), Some(hi)) => format!("in [{lo}, {hi}]"),
                            (Some(lo), None) => format!(">= {lo}"),
                            (None, Some(hi)) => format!("<= {hi}"),
                            (None, None) => "any".to_string(),
                        };
                        let reference = c
                            .check
                            .reference
                            .map(|r| format!(" (reference {r})"))
                            .unwrap_or_default();
                        let _ = writeln!(
                            out,
                            "{}  {} = {:.2}, expected {bound}{reference}",
                            if c.passed { "PASS" } else { "FAIL" },
                            c.check.metric.name(),
                            c.value
                        );
                    }
                }
            }
            out.push('\n');
        }
        let passed = self.outcomes.iter().filter(|o| o.passed()).count();
        let _ = writeln!(out, "{passed} of {} experiments passed", self.outcomes.len());
        out
    }

    /// Line-oriented `key=value` records; see the README for the grammar.
    pub fn render_machine(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            match &o.run {
                Err(message) => {
                    let _ = writeln!(
                        out,
                        "experiment={} status=error message={}",
                        o.name,
                        message.replace('\n', " ")
                    );
                }
                Ok(run) => {
                    let _ = writeln!(
                        out,
                        "experiment={} status={} bins={} epochs={} converged={} train_accuracy={:.2} test_accuracy={:.2} test_per_class_correct={}",
                        o.name,
                        if run.passed() { "pass" } else { "fail" },
                        run.topology,
                        run.trace.epochs(),
                        run.trace.converged(),
                        run.train.accuracy,
                        run.test.accuracy,
                        run.test.per_class_correct.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
                    );
                    for c in &run.checks {
                        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
                        let _ = writeln!(
                            out,
                            "check={}.{} status={} value={:.2} min={} max={} reference={}",
                            o.name,
                            c.check.metric.name(),
                            if c.passed { "pass" } else { "fail" },
                            c.value,
                            opt(c.check.min),
                            opt(c.check.max),
                            opt(c.check.reference)
                        );
                    }
                }
            }
        }
        let passed = self.outcomes.iter().filter(|o| o.passed()).count();
        let _ = writeln!(
            out,
            "suite experiments={} passed={passed} failed={}",
            self.outcomes.len(),
            self.outcomes.len() - passed
        );
        out
    }
}

/// Trains and evaluates one experiment.
pub fn run_experiment(experiment: &Experiment) -> Result<ExperimentRun> {
    let (schema, train_set, test_set) = experiment.source.load()?;
    let topology = Topology::from_list(&schema, &experiment.bins)?;
    let config = TrainConfig {
        alpha: experiment.alpha,
        max_rounds: experiment.max_rounds,
        tag_gain: experiment.tag_gain,
        ..TrainConfig::new(topology.clone())
    };
    let start = Instant::now();
    let (model, trace) = train(&train_set, config)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut run = ExperimentRun {
        topology,
        train: evaluate(&model, &train_set)?,
        test: evaluate(&model, &test_set)?,
        trace,
        seconds,
        checks: Vec::new(),
    };
    run.checks = experiment
        .checks
        .iter()
        .map(|check| {
            let value = run.metric(check.metric);
            let passed = check.min.is_none_or(|lo| value >= lo) && check.max.is_none_or(|hi| value <= hi);
            CheckOutcome {
                check: check.clone(),
                value,
                passed,
            }
        })
        .collect();
    Ok(run)
}

/// Runs every experiment of `suite` on up to `parallelism` threads. Failures
/// are recorded per experiment; the rest of the suite still runs.
pub fn run_benchmark(suite: &Suite, parallelism: usize) -> Result<SuiteReport> {
    if parallelism < 1 {
        return Err(Error::argument("parallelism must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::argument(format!("cannot start worker threads: {e}")))?;
    let outcomes = pool.install(|| {
        suite
            .experiments
            .par_iter()
            .map(|e| ExperimentOutcome {
                name: e.name.clone(),
                run: run_experiment(e).map_err(|err| err.to_string()),
            })
            .collect()
    });
    Ok(SuiteReport { outcomes })
}
