//! Synthetic workloads shared by the benchmarks.

use diffboost::{AttributeSpec, Dataset, Schema};

/// `n` examples with `attributes` continuous columns and two classes. The
/// class depends on the sum of the first two columns, so boosting has work
/// to do but converges.
pub fn synthetic(n: usize, attributes: usize) -> Dataset {
    let schema = Schema::new(
        (0..attributes)
            .map(|m| AttributeSpec::continuous(format!("x{m}")))
            .collect(),
        vec!["neg".into(), "pos".into()],
    )
    .expect("valid schema");
    // Weyl sequences: deterministic, well spread, no RNG needed
    let rows = (0..n).map(|i| {
        let values: Vec<f64> = (0..attributes)
            .map(|m| ((i as f64 + 1.0) * (0.618_033_988_75 + m as f64 * 0.414_213_562_37)).fract() * 10.0)
            .collect();
        let label = usize::from(values[0] + values.get(1).copied().unwrap_or(0.0) > 10.0);
        (values, label)
    });
    Dataset::from_rows(schema, rows).expect("valid rows")
}
