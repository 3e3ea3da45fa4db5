//! Brute-force oracles and generators shared by the integration tests.
//!
//! Nothing here calls into the binning, fitting or scoring code under test.

#![allow(dead_code)]

use diffboost::{AttributeKind, AttributeSpec, Dataset, Schema, Topology};
use proptest::prelude::*;

/// Nearest bin center for integer data, in exact integer arithmetic.
///
/// Centers sit at `lo + (b + 1/2) (hi - lo) / count`; scaling by `2 count`
/// makes every distance an integer. Equidistant values go to the upper bin.
pub fn exact_nearest_bin(v: i64, lo: i64, hi: i64, count: usize) -> usize {
    if hi == lo {
        return 0;
    }
    let c = count as i64;
    let mut best = 0;
    let mut best_dist = i64::MAX;
    for b in 0..c {
        let dist = (2 * c * (v - lo) - (2 * b + 1) * (hi - lo)).abs();
        if dist <= best_dist {
            best = b as usize;
            best_dist = dist;
        }
    }
    best
}

/// Every bin whose center is nearest to `v` in floating point, allowing a
/// relative slack for values that sit on a boundary.
pub fn float_nearest_bins(min: f64, max: f64, count: usize, v: f64) -> Vec<usize> {
    let width = (max - min) / count as f64;
    let dist: Vec<f64> = (0..count)
        .map(|b| (v - (min + (b as f64 + 0.5) * width)).abs())
        .collect();
    let best = dist.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = 1e-9 * (1.0 + v.abs() + min.abs() + max.abs());
    (0..count).filter(|&b| dist[b] <= best + slack).collect()
}

/// Per-attribute `(min, max)` over a cell's members, `None` for an empty cell.
pub type CellRanges = Option<Vec<(f64, f64)>>;

/// Counts and tag ranges recomputed by scanning the examples cell by cell.
pub struct CountOracle {
    /// `counts[k][m][b]`
    pub counts: Vec<Vec<Vec<u64>>>,
    /// `ranges[k][m][b]`: per-attribute `(min, max)` over the cell members.
    pub ranges: Vec<Vec<Vec<CellRanges>>>,
    pub n: u64,
}

/// Oracle for integer-valued data: the bin of each value is the exact nearest
/// center of a grid spanning the column extremes (or the declared domain for
/// discrete attributes).
pub fn count_oracle(schema: &Schema, rows: &[(Vec<i64>, usize)], topology: &[usize]) -> CountOracle {
    let k_count = schema.classes.len();
    let m_count = schema.attributes.len();
    let grid: Vec<(i64, i64)> = (0..m_count)
        .map(|m| match schema.attributes[m].value_count() {
            Some(v) => (0, v as i64 - 1),
            None => {
                let col = rows.iter().map(|(x, _)| x[m]);
                (col.clone().min().unwrap(), col.max().unwrap())
            }
        })
        .collect();
    let bin_of = |m: usize, v: i64| exact_nearest_bin(v, grid[m].0, grid[m].1, topology[m]);

    let mut counts = vec![Vec::new(); k_count];
    let mut ranges = vec![Vec::new(); k_count];
    for k in 0..k_count {
        for m in 0..m_count {
            let mut cnt = Vec::new();
            let mut rng = Vec::new();
            for b in 0..topology[m] {
                let members: Vec<&Vec<i64>> = rows
                    .iter()
                    .filter(|(x, label)| *label == k && bin_of(m, x[m]) == b)
                    .map(|(x, _)| x)
                    .collect();
                cnt.push(members.len() as u64);
                rng.push(if members.is_empty() {
                    None
                } else {
                    Some(
                        (0..m_count)
                            .map(|j| {
                                let lo = members.iter().map(|x| x[j]).min().unwrap();
                                let hi = members.iter().map(|x| x[j]).max().unwrap();
                                (lo as f64, hi as f64)
                            })
                            .collect(),
                    )
                });
            }
            counts[k].push(cnt);
            ranges[k].push(rng);
        }
    }
    CountOracle {
        counts,
        ranges,
        n: rows.len() as u64,
    }
}

/// A small labelled integer-valued problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub schema: Schema,
    pub rows: Vec<(Vec<i64>, usize)>,
    pub topology: Vec<usize>,
}

impl Problem {
    pub fn dataset(&self) -> Dataset {
        let rows = self
            .rows
            .iter()
            .map(|(x, k)| (x.iter().map(|&v| v as f64).collect(), *k));
        Dataset::from_rows(self.schema.clone(), rows).unwrap()
    }

    pub fn topology(&self) -> Topology {
        Topology(self.topology.clone())
    }
}

/// Up to `max_n` examples, 1 to 4 attributes (some discrete), 2 or 3 classes.
pub fn problem(max_n: usize) -> impl Strategy<Value = Problem> {
    let attribute = prop_oneof![
        3 => (1usize..=6).prop_map(|bins| (None, bins)),
        1 => (2usize..=4).prop_map(|v| (Some(v), v)),
    ];
    (prop::collection::vec(attribute, 1..=4), 2usize..=3, 1..=max_n).prop_flat_map(|(attrs, k, n)| {
        let row = attrs
            .iter()
            .map(|&(values, _)| match values {
                Some(v) => (0..v as i64).boxed(),
                None => (-6i64..=6).boxed(),
            })
            .collect::<Vec<_>>();
        let rows = prop::collection::vec((row, 0..k), n);
        (Just(attrs), Just(k), rows).prop_map(|(attrs, k, rows)| {
            let attributes = attrs
                .iter()
                .enumerate()
                .map(|(m, &(values, _))| match values {
                    Some(v) => AttributeSpec::discrete(
                        format!("d{m}"),
                        AttributeKind::Categorical,
                        (0..v).map(|i| format!("v{i}")),
                    ),
                    None => AttributeSpec::continuous(format!("c{m}")),
                })
                .collect();
            let classes = (0..k).map(|i| format!("k{i}")).collect();
            Problem {
                schema: Schema::new(attributes, classes).unwrap(),
                rows,
                topology: attrs.iter().map(|&(_, b)| b).collect(),
            }
        })
    })
}

/// Attribute values for querying a model fitted on a [`problem`], including
/// values outside the training range.
pub fn query(schema: &Schema) -> impl Strategy<Value = Vec<f64>> {
    schema
        .attributes
        .iter()
        .map(|a| match a.value_count() {
            Some(v) => (0..v).prop_map(|x| x as f64).boxed(),
            None => (-10.0f64..10.0).boxed(),
        })
        .collect::<Vec<_>>()
}
