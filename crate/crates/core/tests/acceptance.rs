//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.
//!
//! The UCI experiments read from `$DIFFBOOST_DATA_DIR`, falling back to the
//! workspace `data/` directory filled by `scripts/fetch_datasets.py`.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{count_oracle, exact_nearest_bin, float_nearest_bins, problem, query, Problem};
use diffboost::benchmark::data_dir_from_env;
use diffboost::{
    boost_example, class_scores, evaluate, fit_density, posterior, run_epoch, train, AttributeSpec, BinSpec,
    DataSource, Dataset, Model, Schema, Topology, TrainConfig,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};

const CASES: u32 = 1000;

type Criterion = fn() -> Outcome;
type Property = fn() -> Result<(), String>;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn data_dir() -> PathBuf {
    data_dir_from_env().unwrap_or_else(|| workspace().join("data"))
}

fn schema_path(name: &str) -> PathBuf {
    workspace().join("datasets").join(name)
}

fn split_source(schema: &str, data: &str, train_count: usize) -> DataSource {
    DataSource {
        schema: schema_path(schema),
        data: Some(data_dir().join(data)),
        train_count: Some(train_count),
        ..Default::default()
    }
}

fn file_source(schema: &str, train: &str, test: &str) -> DataSource {
    DataSource {
        schema: schema_path(schema),
        train: Some(data_dir().join(train)),
        test: Some(data_dir().join(test)),
        ..Default::default()
    }
}

struct Run {
    train_accuracy: f64,
    test_accuracy: f64,
    summary: String,
    epochs: usize,
    converged: bool,
    elapsed: Duration,
}

fn run(schema: &Schema, train_set: &Dataset, test_set: &Dataset, bins: &[usize]) -> Run {
    let topology = Topology::from_list(schema, bins).unwrap();
    let start = Instant::now();
    let (model, trace) = train(train_set, TrainConfig::new(topology)).unwrap();
    let elapsed = start.elapsed();
    let train_report = evaluate(&model, train_set).unwrap();
    let test_report = evaluate(&model, test_set).unwrap();
    Run {
        train_accuracy: train_report.accuracy,
        test_accuracy: test_report.accuracy,
        summary: test_report.summary_line(),
        epochs: trace.epochs(),
        converged: trace.converged(),
        elapsed,
    }
}

fn breast_cancer() -> Outcome {
    let source = split_source("breast-cancer-wisconsin.schema", "breast-cancer-wisconsin.data", 341);
    let (schema, train_set, test_set) = match source.load() {
        Ok(s) => s,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let instances = train_set.len() + test_set.len();
    let r = run(&schema, &train_set, &test_set, &[7]);
    let pass = instances == 683
        && test_set.len() == 342
        && r.test_accuracy >= 96.5
        && r.converged
        && r.epochs <= 200
        && r.elapsed < Duration::from_secs(10);
    Outcome::new(
        pass,
        format!(
            "{instances} instances, test {} (need >= 96.5), converged={} in {} epochs (need <= 200), {:.2?} (need < 10 s)",
            r.summary, r.converged, r.epochs, r.elapsed
        ),
    )
}

fn thyroid() -> Outcome {
    let source = file_source("thyroid.schema", "ann-train.data", "ann-test.data");
    let (schema, train_set, test_set) = match source.load() {
        Ok(s) => s,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let r = run(&schema, &train_set, &test_set, &[9]);
    let pass = train_set.len() == 3772
        && test_set.len() == 3428
        && (r.train_accuracy - 99.06).abs() <= 0.5
        && r.test_accuracy >= 98.0
        && r.elapsed < Duration::from_secs(60);
    Outcome::new(
        pass,
        format!(
            "{}/{} examples, train {:.2} (need 99.06 +- 0.5), test {:.2} (need >= 98.0), {:.2?} (need < 60 s)",
            train_set.len(),
            test_set.len(),
            r.train_accuracy,
            r.test_accuracy,
            r.elapsed
        ),
    )
}

fn pima() -> Outcome {
    let source = split_source("pima-indians-diabetes.schema", "pima-indians-diabetes.data", 512);
    let (schema, train_set, test_set) = match source.load() {
        Ok(s) => s,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let acc = |bins: &[usize]| run(&schema, &train_set, &test_set, bins).test_accuracy;
    let tuned = acc(&[8, 5, 5, 5, 14, 30, 5, 6]);
    let insulin = acc(&[5, 5, 5, 5, 14, 5, 5, 5]);
    let mass = acc(&[5, 5, 5, 5, 5, 30, 5, 5]);
    let both = acc(&[5, 5, 5, 5, 14, 30, 5, 5]);
    let tuned_ok = (tuned - 76.95).abs() <= 2.0;
    let additive = both > insulin && both > mass;
    Outcome::new(
        tuned_ok && additive,
        format!(
            "8-5-5-5-14-30-5-6 test {tuned:.2} (need 76.95 +- 2) {}; \
             14-only {insulin:.2}, 30-only {mass:.2}, 14+30 {both:.2} (need combined above both) {}",
            if tuned_ok { "ok" } else { "MISSED" },
            if additive { "ok" } else { "MISSED" },
        ),
    )
}

fn monks() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (set, lo, hi) in [(1, 95.0, 100.0), (3, 92.0, 100.0), (2, 60.0, 75.0)] {
        let source = file_source(
            "monks.schema",
            &format!("monks-{set}.train"),
            &format!("monks-{set}.test"),
        );
        match source.load() {
            Ok((schema, train_set, test_set)) => {
                let r = run(&schema, &train_set, &test_set, &[4]);
                let ok = r.test_accuracy >= lo && r.test_accuracy <= hi;
                pass &= ok;
                parts.push(format!("set {set} {} (need {lo}..{hi})", r.summary));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("set {set}: {e}"));
            }
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn xor_data() -> Dataset {
    let schema = Schema::new(
        vec![AttributeSpec::continuous("a"), AttributeSpec::continuous("b")],
        vec!["same".into(), "differ".into()],
    )
    .unwrap();
    Dataset::from_rows(
        schema,
        vec![
            (vec![0.0, 0.0], 0),
            (vec![1.0, 1.0], 0),
            (vec![0.0, 1.0], 1),
            (vec![1.0, 0.0], 1),
        ],
    )
    .unwrap()
}

fn xor() -> Outcome {
    let data = xor_data();
    let ungated = TrainConfig {
        tag_gain: 1.0,
        ..TrainConfig::new(Topology(vec![2, 2]))
    };
    let (plain, _) = train(&data, ungated).unwrap();
    let worst = data
        .examples
        .iter()
        .flat_map(|ex| posterior(&plain, &ex.values).unwrap().probabilities)
        .map(|p| (p - 0.5).abs())
        .fold(0.0, f64::max);
    let (gated, trace) = train(&data, TrainConfig::new(Topology(vec![2, 2]))).unwrap();
    let accuracy = evaluate(&gated, &data).unwrap().accuracy;
    Outcome::new(
        worst <= 1e-9 && accuracy == 100.0,
        format!(
            "ungated max |p - 0.5| = {worst:e} (need <= 1e-9); gated training accuracy {accuracy} after {} epochs (need 100)",
            trace.epochs()
        ),
    )
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        max_global_rejects: 20 * cases,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn verdict<T: std::fmt::Debug>(result: Result<(), TestError<T>>) -> Result<(), String> {
    result.map_err(|e| match e {
        TestError::Abort(why) => format!("aborted: {why}"),
        TestError::Fail(why, case) => format!("{why} for {case:?}"),
    })
}

fn oracle_equivalence() -> Outcome {
    let result = runner(CASES).run(&problem(20), |p: Problem| {
        let fitted = fit_density(&p.dataset(), &p.topology()).unwrap();
        let oracle = count_oracle(&p.schema, &p.rows, &p.topology);
        let layout = fitted.layout();
        prop_assert_eq!(fitted.joint.n_train, oracle.n);
        for k in 0..p.schema.classes.len() {
            for m in 0..p.schema.attributes.len() {
                for b in 0..p.topology[m] {
                    let count = oracle.counts[k][m][b];
                    prop_assert_eq!(fitted.joint.count(k, m, b), count, "count ({}, {}, {})", k, m, b);
                    prop_assert_eq!(
                        fitted.joint.probability(k, m, b),
                        count as f64 / oracle.n as f64,
                        "probability ({}, {}, {})",
                        k,
                        m,
                        b
                    );
                    let window = fitted
                        .tags
                        .window(layout, k, m, b)
                        .map(|w| w.iter().map(|r| (r.min, r.max)).collect::<Vec<_>>());
                    prop_assert_eq!(&window, &oracle.ranges[k][m][b], "tags ({}, {}, {})", k, m, b);
                }
            }
        }
        Ok(())
    });
    match verdict(result) {
        Ok(()) => Outcome::new(true, format!("{CASES} random datasets of <= 20 examples match exactly")),
        Err(e) => Outcome::new(false, e),
    }
}

fn quick(max_rounds: usize, topology: Topology) -> TrainConfig {
    TrainConfig {
        max_rounds,
        ..TrainConfig::new(topology)
    }
}

fn with_queries(max_n: usize) -> impl Strategy<Value = (Problem, Vec<Vec<f64>>)> {
    problem(max_n).prop_flat_map(|p| {
        let q = prop::collection::vec(query(&p.schema), 1..6);
        (Just(p), q)
    })
}

fn prop_normalization() -> Result<(), String> {
    verdict(runner(CASES).run(&with_queries(12), |(p, queries)| {
        let (model, _) = train(&p.dataset(), quick(10, p.topology())).unwrap();
        for q in &queries {
            let post = posterior(&model, q).unwrap();
            let total: f64 = post.probabilities.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-9, "sum {}", total);
            prop_assert!(post.probabilities.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
        Ok(())
    }))
}

fn prop_count_conservation() -> Result<(), String> {
    verdict(runner(CASES).run(&problem(20), |p| {
        let data = p.dataset();
        let fitted = fit_density(&data, &p.topology()).unwrap();
        let per_class = data.class_counts();
        for m in 0..p.topology.len() {
            let mut total = 0;
            for (k, &expected) in per_class.iter().enumerate() {
                let in_class: u64 = (0..p.topology[m]).map(|b| fitted.joint.count(k, m, b)).sum();
                prop_assert_eq!(in_class, expected as u64);
                total += in_class;
            }
            prop_assert_eq!(total, data.len() as u64);
        }
        Ok(())
    }))
}

fn prop_weight_monotonicity() -> Result<(), String> {
    verdict(runner(CASES).run(&problem(16), |p| {
        let data = p.dataset();
        let mut model = Model::fitted(&data, quick(8, p.topology())).unwrap();
        let mut before = model.weights.weights.clone();
        prop_assert!(before.iter().all(|&w| w == 1.0));
        for _ in 0..8 {
            run_epoch(&mut model, &data).unwrap();
            for (old, new) in before.iter().zip(&model.weights.weights) {
                prop_assert!(new >= old && *new >= 1.0, "{} -> {}", old, new);
            }
            before = model.weights.weights.clone();
        }
        Ok(())
    }))
}

/// Steps below this cannot move a weight of a few units in floating point.
const RESOLVABLE_STEP: f64 = 1e-9;

fn prop_ratio_improvement() -> Result<(), String> {
    verdict(runner(CASES).run(&problem(16), |p| {
        let data = p.dataset();
        let mut model = Model::fitted(&data, quick(1, p.topology())).unwrap();
        let mut boosted = 0;
        for ex in &data.examples {
            let scores = class_scores(&model, &ex.values).unwrap();
            if !scores.is_beaten(ex.label) {
                continue;
            }
            let bins = model.density.bins_of(&ex.values);
            let old_weights = model.weights.weights.clone();
            let layout = model.density.layout().clone();
            let delta = boost_example(
                &mut model.weights,
                &layout,
                &bins,
                ex.label,
                &scores,
                model.config.alpha,
            )
            .unwrap();
            prop_assert!(delta >= 0.0);

            let touched: Vec<usize> = (0..layout.len())
                .filter(|&c| model.weights.weights[c] != old_weights[c])
                .collect();
            let expected: Vec<usize> = bins
                .iter()
                .enumerate()
                .map(|(m, &b)| layout.cell(ex.label, m, b))
                .collect();
            prop_assert!(touched.iter().all(|c| expected.contains(c)));

            let after = class_scores(&model, &ex.values).unwrap();
            let resolvable = delta > RESOLVABLE_STEP;
            if resolvable {
                boosted += 1;
                prop_assert_eq!(&touched, &expected);
            }
            for k in (0..scores.log.len()).filter(|&k| k != ex.label) {
                let before = scores.log[ex.label] - scores.log[k];
                let now = after.log[ex.label] - after.log[k];
                prop_assert!(now >= before, "ratio against class {} shrank", k);
                prop_assert!(!resolvable || now > before, "ratio against class {} did not grow", k);
            }
        }
        prop_assume!(boosted > 0);
        Ok(())
    }))
}

fn prop_nearest_center() -> Result<(), String> {
    let real = (-100.0f64..100.0, 1e-3f64..200.0, 1usize..=40, -1.5f64..2.5);
    let integer = (-50i64..50, 0i64..60, 1usize..=40, -20i64..80);
    verdict(
        runner(CASES).run(&(real, integer), |((min, span, count, t), (lo, gap, icount, iv))| {
            let spec = BinSpec {
                min,
                max: min + span,
                count,
            };
            let v = min + t * span;
            let got = spec.bin_index(v);
            let nearest = float_nearest_bins(spec.min, spec.max, count, v);
            prop_assert!(nearest.contains(&got), "value {} bin {} nearest {:?}", v, got, nearest);

            let ispec = BinSpec {
                min: lo as f64,
                max: (lo + gap) as f64,
                count: icount,
            };
            let v = lo + iv;
            prop_assert_eq!(ispec.bin_index(v as f64), exact_nearest_bin(v, lo, lo + gap, icount));
            Ok(())
        }),
    )
}

fn prop_round_trip() -> Result<(), String> {
    verdict(runner(CASES).run(&with_queries(12), |(p, queries)| {
        let (model, _) = train(&p.dataset(), quick(10, p.topology())).unwrap();
        let back = Model::from_json(&model.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &model);
        for q in &queries {
            prop_assert_eq!(posterior(&back, q).unwrap(), posterior(&model, q).unwrap());
        }
        Ok(())
    }))
}

fn prop_determinism() -> Result<(), String> {
    verdict(runner(CASES).run(&problem(12), |p| {
        let data = p.dataset();
        let (a, ta) = train(&data, quick(10, p.topology())).unwrap();
        let (b, tb) = train(&data, quick(10, p.topology())).unwrap();
        prop_assert_eq!(ta, tb);
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        Ok(())
    }))
}

fn invariants() -> Outcome {
    let start = Instant::now();
    let props: [(&str, Property); 7] = [
        ("normalization", prop_normalization),
        ("count conservation", prop_count_conservation),
        ("weight monotonicity", prop_weight_monotonicity),
        ("ratio improvement", prop_ratio_improvement),
        ("nearest center", prop_nearest_center),
        ("round trip", prop_round_trip),
        ("determinism", prop_determinism),
    ];
    let mut failures = Vec::new();
    for (name, prop) in props {
        if let Err(e) = prop() {
            failures.push(format!("{name}: {e}"));
        }
    }
    let elapsed = start.elapsed();
    let in_time = elapsed < Duration::from_secs(120);
    let detail = if failures.is_empty() {
        format!("7 properties x {CASES} cases in {elapsed:.2?} (need < 120 s)")
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty() && in_time, detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 7] = [
        ("breast cancer", breast_cancer),
        ("thyroid", thyroid),
        ("pima", pima),
        ("monks", monks),
        ("xor", xor),
        ("oracle equivalence", oracle_equivalence),
        ("invariant suite", invariants),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Outcome::new(false, "panicked"));
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<18} {}  {}",
            i + 1,
            name,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
