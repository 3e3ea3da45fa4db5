use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use diffboost::evaluation::Report;
use diffboost::search::coordinate_search_with_progress;
use diffboost::{
    evaluate, parse_features, parse_table, posterior, run_benchmark, split_dataset, Error, Model, ParseOptions, Schema,
    SearchFile, Suite, Topology, TrainConfig,
};

#[derive(Parser)]
#[command(name = "diffboost", version, about = "Difference-boosted naive Bayes classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it to a file.
    Train(TrainArgs),
    /// Score a model on a labelled data file.
    Evaluate(EvaluateArgs),
    /// Print the winning label and class posteriors for each input row.
    Predict(PredictArgs),
    /// Search per-attribute bin counts against a validation set.
    Search(RunArgs),
    /// Run a benchmark suite and compare against its expected ranges.
    Benchmark(RunArgs),
    /// Describe a saved model.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Machine,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Bins per attribute (`8,5,5` or `8-5-5`), or one count for every continuous attribute.
    #[arg(long)]
    bins: String,
    #[arg(long, default_value_t = diffboost::boosting::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = diffboost::boosting::DEFAULT_MAX_ROUNDS)]
    max_rounds: usize,
    /// Likelihood multiplier when a tag window rejects the example; 1 disables gating.
    #[arg(long, default_value_t = diffboost::boosting::DEFAULT_TAG_GAIN)]
    tag_gain: f64,
    /// Train on the first N examples and report accuracy on the rest.
    #[arg(long)]
    train_count: Option<usize>,
    /// Shuffle before splitting off the training examples.
    #[arg(long, requires = "train_count")]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Schema of the data file; defaults to the schema stored in the model.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Rows to classify; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML spec file.
    spec: PathBuf,
    /// Worker threads; overrides the spec.
    #[arg(long)]
    parallel: Option<usize>,
    /// Also write the full result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => 2,
            Error::Argument(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => train(args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::Predict(args) => predict(args),
        Command::Search(args) => search(args),
        Command::Benchmark(args) => benchmark(args),
        Command::Inspect(args) => inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("diffboost: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn machine_report(split: &str, report: &Report) -> String {
    format!("split={split} {}", report.render_machine())
}

fn train(args: TrainArgs) -> CliResult {
    let schema = Schema::from_file(&args.schema)?;
    let data = parse_table(&args.data, &schema, &ParseOptions::default())?;
    let bins: Topology = args.bins.parse()?;
    let topology = Topology::from_list(&schema, &bins.0)?;
    let config = TrainConfig {
        alpha: args.alpha,
        max_rounds: args.max_rounds,
        tag_gain: args.tag_gain,
        ..TrainConfig::new(topology)
    };
    config.validate()?;
    let (train_set, test_set) = match args.train_count {
        Some(n) => {
            let (a, b) = split_dataset(&data, n, args.seed)?;
            (a, Some(b))
        }
        None => (data, None),
    };

    let (model, trace) = diffboost::train(&train_set, config)?;
    let train_report = evaluate(&model, &train_set)?;
    let test_report = test_set.as_ref().map(|t| evaluate(&model, t)).transpose()?;
    model.save(&args.out)?;

    let mut out = io::stdout().lock();
    match args.format {
        Format::Text => {
            for (i, e) in trace.errors.iter().enumerate() {
                writeln!(out, "epoch {:>4}: {e} errors", i + 1)?;
            }
            match trace.converged_at {
                Some(e) => writeln!(out, "converged after {e} epochs")?,
                None => writeln!(out, "stopped after {} epochs without converging", trace.epochs())?,
            }
            writeln!(out, "bins   {}", model.config.topology)?;
            writeln!(
                out,
                "train  ({}) {}",
                train_report.n_examples,
                train_report.summary_line()
            )?;
            if let Some(r) = &test_report {
                writeln!(out, "test   ({}) {}", r.n_examples, r.summary_line())?;
            }
            writeln!(out, "model written to {}", args.out.display())?;
        }
        Format::Machine => {
            for (i, e) in trace.errors.iter().enumerate() {
                writeln!(out, "epoch={} errors={e}", i + 1)?;
            }
            writeln!(
                out,
                "epochs={} converged={} bins={}",
                trace.epochs(),
                trace.converged(),
                model.config.topology
            )?;
            writeln!(out, "{}", machine_report("train", &train_report))?;
            if let Some(r) = &test_report {
                writeln!(out, "{}", machine_report("test", r))?;
            }
        }
    }
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> CliResult {
    let model = Model::load(&args.model)?;
    let schema = match &args.schema {
        Some(path) => Schema::from_file(path)?,
        None => model.schema.clone(),
    };
    let data = parse_table(&args.data, &schema, &ParseOptions::default())?;
    let report = evaluate(&model, &data)?;
    match args.format {
        Format::Text => print!("{}", report.render_text()),
        Format::Machine => println!("{}", report.render_machine()),
    }
    Ok(())
}

fn predict(args: PredictArgs) -> CliResult {
    let model = Model::load(&args.model)?;
    let input: Box<dyn BufRead> = match &args.input {
        Some(path) => Box::new(BufReader::new(fs::File::open(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?)),
        None => Box::new(io::stdin().lock()),
    };
    let opts = ParseOptions::default();
    let mut out = io::stdout().lock();
    let mut bad = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let result = parse_features(&model.schema, &line, &opts).and_then(|v| posterior(&model, &v));
        match result {
            Ok(p) => {
                let probs: Vec<String> = p.probabilities.iter().map(|x| format!("{x:.4}")).collect();
                writeln!(out, "{} p=[{}]", model.schema.classes[p.winner], probs.join(","))?;
            }
            Err(e) => {
                bad += 1;
                writeln!(out, "error line={}: {e}", i + 1)?;
            }
        }
    }
    if bad > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{bad} rows could not be classified"),
        });
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn search(args: RunArgs) -> CliResult {
    let file = SearchFile::load(&args.spec)?;
    let (schema, train_set, validation) = file.source.load()?;
    let mut spec = file.spec(&schema)?;
    if let Some(n) = args.parallel {
        spec.parallelism = n;
    }
    let config = file.config(&schema);
    let mut count = 0;
    let result = coordinate_search_with_progress(&train_set, &validation, &spec, &config, |t| {
        count += 1;
        eprintln!(
            "trial {count:>3}  {}  train {:.2}  validation {:.2}  ({} epochs)",
            t.topology, t.train_accuracy, t.validation_accuracy, t.epochs
        );
    })?;

    let mut out = io::stdout().lock();
    match args.format {
        Format::Text => {
            writeln!(out, "best   {}", result.best)?;
            writeln!(out, "validation accuracy {:.2} %", result.best_accuracy)?;
            writeln!(out, "{} trials", result.trials.len())?;
            if result.truncated {
                writeln!(out, "budget exhausted before the search finished")?;
            }
        }
        Format::Machine => {
            for (i, t) in result.trials.iter().enumerate() {
                writeln!(
                    out,
                    "trial={} bins={} train_accuracy={:.2} validation_accuracy={:.2} epochs={}",
                    i + 1,
                    t.topology,
                    t.train_accuracy,
                    t.validation_accuracy,
                    t.epochs
                )?;
            }
            writeln!(
                out,
                "best={} validation_accuracy={:.2} trials={} truncated={}",
                result.best,
                result.best_accuracy,
                result.trials.len(),
                result.truncated
            )?;
        }
    }
    if let Some(path) = &args.out {
        write_json(path, &result)?;
    }
    Ok(())
}

fn benchmark(args: RunArgs) -> CliResult {
    let suite = Suite::load(&args.spec)?;
    let report = run_benchmark(&suite, args.parallel.unwrap_or(1))?;
    match args.format {
        Format::Text => print!("{}", report.render_text()),
        Format::Machine => print!("{}", report.render_machine()),
    }
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: "benchmark suite failed".into(),
        })
    }
}

fn inspect(args: InspectArgs) -> CliResult {
    let model = Model::load(&args.model)?;
    let mut out = io::stdout().lock();
    let c = &model.config;
    writeln!(out, "format      {}", diffboost::model::FORMAT_VERSION)?;
    writeln!(out, "classes     {}", model.schema.classes.join(" "))?;
    writeln!(out, "bins        {}", c.topology)?;
    writeln!(
        out,
        "config      alpha={} max_rounds={} tag_gain={} epsilon={}",
        c.alpha, c.max_rounds, c.tag_gain, model.epsilon
    )?;
    writeln!(out, "examples    {}", model.density.joint.n_train)?;
    match model.trace.converged_at {
        Some(e) => writeln!(out, "training    converged after {e} epochs")?,
        None => writeln!(out, "training    stopped after {} epochs", model.trace.epochs())?,
    }
    let w = &model.weights.weights;
    let boosted = w.iter().filter(|&&x| x > 1.0).count();
    let max = w.iter().copied().fold(1.0, f64::max);
    writeln!(out, "weights     {boosted} of {} cells boosted, max {max:.4}", w.len())?;
    writeln!(out)?;
    writeln!(out, "{:<28} {:>5} {:>12} {:>12}", "attribute", "bins", "min", "max")?;
    for (a, b) in model.schema.attributes.iter().zip(&model.density.bins) {
        writeln!(out, "{:<28} {:>5} {:>12} {:>12}", a.name, b.count, b.min, b.max)?;
    }
    Ok(())
}
