//! Equal-width bin grids, joint count tables and tag windows.
//!
//! Every attribute gets one grid shared by all classes. A cell is addressed by
//! `(class, attribute, bin)`; its count is the number of training examples of
//! that class whose attribute value falls in that bin, and its probability is
//! the count divided by the size of the whole training set (a joint, not a
//! class-conditional, probability).
//!
//! Each populated cell also carries a tag: the `(min, max)` range of every
//! attribute over the training examples in that cell. At inference time an
//! example whose other attributes fall outside the tag has the cell's
//! likelihood multiplied by the tag gain.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Schema};
use crate::error::{Error, Result};

/// Bins per attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Topology(pub Vec<usize>);

impl Topology {
    /// `continuous` bins for every continuous attribute, one bin per declared
    /// value for discrete attributes.
    pub fn uniform(schema: &Schema, continuous: usize) -> Self {
        Topology(
            schema
                .attributes
                .iter()
                .map(|a| a.value_count().unwrap_or(continuous))
                .collect(),
        )
    }

    /// Expands a single entry to [`Topology::uniform`], otherwise takes the list as given.
    pub fn from_list(schema: &Schema, bins: &[usize]) -> Result<Self> {
        let topology = match bins {
            [n] if schema.num_attributes() != 1 => Topology::uniform(schema, *n),
            _ => Topology(bins.to_vec()),
        };
        topology.validate(schema)?;
        Ok(topology)
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.0.len() != schema.num_attributes() {
            return Err(Error::argument(format!(
                "topology has {} entries but the schema has {} attributes",
                self.0.len(),
                schema.num_attributes()
            )));
        }
        for (count, spec) in self.0.iter().zip(&schema.attributes) {
            if *count < 1 {
                return Err(Error::argument(format!(
                    "attribute `{}` needs at least one bin",
                    spec.name
                )));
            }
            if let Some(n) = spec.value_count() {
                if *count != n {
                    return Err(Error::argument(format!(
                        "discrete attribute `{}` has {n} values but {count} bins",
                        spec.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for Topology {
    type Err = Error;

    /// Accepts `8-5-5` or `8,5,5`.
    fn from_str(s: &str) -> Result<Self> {
        s.split(['-', ','])
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::argument(format!("bad bin count `{t}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Topology)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl BinSpec {
    pub fn width(&self) -> f64 {
        (self.max - self.min) / self.count as f64
    }

    /// Index of the bin whose center is nearest to `value`.
    ///
    /// For equal widths this is `floor((value - min) / width)` clamped to the
    /// grid, so values outside the training range land in the edge bins.
    pub fn bin_index(&self, value: f64) -> usize {
        let span = self.max - self.min;
        if span.is_nan() || span <= 0.0 {
            return 0;
        }
        // scaling before dividing keeps boundaries exact for integer data
        let raw = ((value - self.min) * self.count as f64 / span).floor();
        if raw.is_nan() || raw < 0.0 {
            0
        } else {
            (raw as usize).min(self.count - 1)
        }
    }

    pub fn center(&self, bin: usize) -> f64 {
        self.min + (bin as f64 + 0.5) * self.width()
    }
}

/// Grid spanning the extremes of `values` with `count` equal bins.
pub fn make_bin_spec(values: &[f64], count: usize) -> Result<BinSpec> {
    if count < 1 {
        return Err(Error::argument("bin count must be at least 1"));
    }
    let (min, max) = values
        .iter()
        .fold(None, |acc: Option<(f64, f64)>, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .ok_or_else(|| Error::argument("cannot build bins from an empty column"))?;
    Ok(BinSpec { min, max, count })
}

/// Addressing of `(class, attribute, bin)` cells in flat storage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellLayout {
    pub classes: usize,
    /// `offsets[m]` is the first cell of attribute `m` within one class plane;
    /// the final entry is the plane size.
    pub offsets: Vec<usize>,
}

impl CellLayout {
    pub fn new(classes: usize, topology: &Topology) -> Self {
        let mut offsets = Vec::with_capacity(topology.len() + 1);
        let mut total = 0;
        offsets.push(0);
        for b in &topology.0 {
            total += b;
            offsets.push(total);
        }
        CellLayout { classes, offsets }
    }

    pub fn attributes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn bins(&self, m: usize) -> usize {
        self.offsets[m + 1] - self.offsets[m]
    }

    pub fn plane(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn len(&self) -> usize {
        self.classes * self.plane()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn cell(&self, k: usize, m: usize, b: usize) -> usize {
        debug_assert!(b < self.bins(m));
        k * self.plane() + self.offsets[m] + b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    pub layout: CellLayout,
    pub counts: Vec<u64>,
    pub n_train: u64,
}

impl JointTable {
    pub fn count(&self, k: usize, m: usize, b: usize) -> u64 {
        self.counts[self.layout.cell(k, m, b)]
    }

    pub fn probability(&self, k: usize, m: usize, b: usize) -> f64 {
        self.count(k, m, b) as f64 / self.n_train as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn point(v: f64) -> Self {
        Range { min: v, max: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    fn extend(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }
}

/// Per-cell attribute ranges over the training examples that populate the cell.
///
/// A window holds one range per attribute, including the owning attribute
/// itself (which the gate ignores). Unpopulated cells have no window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagTable {
    pub windows: Vec<Option<Vec<Range>>>,
}

impl TagTable {
    pub fn window(&self, layout: &CellLayout, k: usize, m: usize, b: usize) -> Option<&[Range]> {
        self.windows[layout.cell(k, m, b)].as_deref()
    }
}

/// The fitted first stage of the classifier: grids, counts and tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub bins: Vec<BinSpec>,
    pub joint: JointTable,
    pub tags: TagTable,
}

/// Distributes the training examples into their bins and records tag windows.
pub fn fit_density(train: &Dataset, topology: &Topology) -> Result<DensityModel> {
    let schema = &train.schema;
    topology.validate(schema)?;
    if train.is_empty() {
        return Err(Error::argument("training set is empty"));
    }
    let bins = schema
        .attributes
        .iter()
        .enumerate()
        .map(|(m, spec)| match spec.value_count() {
            // discrete grids span the declared domain so every value keeps its own bin
            Some(n) => Ok(BinSpec {
                min: 0.0,
                max: (n - 1) as f64,
                count: n,
            }),
            None => make_bin_spec(&train.column(m), topology.0[m]),
        })
        .collect::<Result<Vec<_>>>()?;

    let layout = CellLayout::new(schema.num_classes(), topology);
    let mut counts = vec![0u64; layout.len()];
    let mut windows: Vec<Option<Vec<Range>>> = vec![None; layout.len()];
    for ex in &train.examples {
        for (m, spec) in bins.iter().enumerate() {
            let cell = layout.cell(ex.label, m, spec.bin_index(ex.values[m]));
            counts[cell] += 1;
            match &mut windows[cell] {
                Some(ranges) => {
                    for (r, &v) in ranges.iter_mut().zip(&ex.values) {
                        r.extend(v);
                    }
                }
                slot @ None => *slot = Some(ex.values.iter().map(|&v| Range::point(v)).collect()),
            }
        }
    }
    Ok(DensityModel {
        bins,
        joint: JointTable {
            layout,
            counts,
            n_train: train.len() as u64,
        },
        tags: TagTable { windows },
    })
}

impl DensityModel {
    pub fn layout(&self) -> &CellLayout {
        &self.joint.layout
    }

    /// Bin of every attribute value of one example.
    pub fn bins_of(&self, values: &[f64]) -> Vec<usize> {
        self.bins
            .iter()
            .zip(values)
            .map(|(spec, &v)| spec.bin_index(v))
            .collect()
    }

    /// Whether the tag of cell `(k, m, bin)` rejects the example.
    ///
    /// An unpopulated cell has an empty window, which rejects every example
    /// that has at least one other attribute.
    pub fn tag_violated(&self, values: &[f64], k: usize, m: usize, bin: usize) -> bool {
        match self.tags.window(self.layout(), k, m, bin) {
            Some(ranges) => ranges
                .iter()
                .zip(values)
                .enumerate()
                .any(|(j, (r, &v))| j != m && !r.contains(v)),
            None => values.len() > 1,
        }
    }

    /// Likelihood of attribute `m` of the example under class `k`, floored at
    /// `epsilon` and multiplied once by `tag_gain` when the tag window rejects it.
    pub fn tagged_likelihood(&self, values: &[f64], k: usize, m: usize, tag_gain: f64, epsilon: f64) -> f64 {
        let bin = self.bins[m].bin_index(values[m]);
        self.tagged_likelihood_in(values, k, m, bin, tag_gain, epsilon)
    }

    pub(crate) fn tagged_likelihood_in(
        &self,
        values: &[f64],
        k: usize,
        m: usize,
        bin: usize,
        tag_gain: f64,
        epsilon: f64,
    ) -> f64 {
        let count = self.joint.count(k, m, bin);
        let p = if count == 0 {
            epsilon
        } else {
            count as f64 / self.joint.n_train as f64
        };
        if tag_gain < 1.0 && self.tag_violated(values, k, m, bin) {
            p * tag_gain
        } else {
            p
        }
    }
}
