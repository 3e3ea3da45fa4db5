//! Schema declarations, delimited-table ingestion and train/test splits.
//!
//! A schema file lists the columns of a data file in order, one per line:
//!
//! ```text
//! # Wisconsin breast cancer
//! skip sample_id
//! attribute clump_thickness continuous
//! attribute smoker binary no yes
//! attribute colour categorical red green blue
//! class 2 4
//! ```
//!
//! `skip` columns are read and ignored, `class` marks the label column and
//! lists the class labels in index order. Discrete values are stored as the
//! index of the token in the declared value list.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Continuous,
    Binary,
    Categorical,
}

impl AttributeKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, AttributeKind::Continuous)
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributeKind::Continuous => "continuous",
            AttributeKind::Binary => "binary",
            AttributeKind::Categorical => "categorical",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
}

impl AttributeSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Continuous,
            values: Vec::new(),
        }
    }

    pub fn discrete<S: Into<String>>(
        name: impl Into<String>,
        kind: AttributeKind,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        AttributeSpec {
            name: name.into(),
            kind,
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    /// Number of admissible values for discrete attributes, `None` for continuous ones.
    pub fn value_count(&self) -> Option<usize> {
        self.kind.is_discrete().then_some(self.values.len())
    }

    fn validate(&self) -> Result<()> {
        let n = self.values.len();
        let ok = match self.kind {
            AttributeKind::Continuous => n == 0,
            AttributeKind::Binary => n == 2,
            AttributeKind::Categorical => n >= 2,
        };
        if !ok {
            return Err(Error::schema(format!(
                "attribute `{}`: {} kind cannot declare {n} values",
                self.name, self.kind
            )));
        }
        let distinct: HashSet<_> = self.values.iter().collect();
        if distinct.len() != n {
            return Err(Error::schema(format!(
                "attribute `{}` declares a value twice",
                self.name
            )));
        }
        Ok(())
    }
}

/// Role of one column of the data file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "role", content = "index")]
pub enum Column {
    Attribute(usize),
    Label,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<AttributeSpec>,
    pub classes: Vec<String>,
    /// File column layout. Attribute columns appear in attribute order.
    pub columns: Vec<Column>,
}

impl Schema {
    /// Builds a schema whose files hold the attribute columns followed by the label.
    pub fn new(attributes: Vec<AttributeSpec>, classes: Vec<String>) -> Result<Self> {
        let mut columns: Vec<Column> = (0..attributes.len()).map(Column::Attribute).collect();
        columns.push(Column::Label);
        let schema = Schema {
            attributes,
            classes,
            columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut attributes = Vec::new();
        let mut classes = None;
        let mut columns = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                source_name: source_name.to_string(),
                line: lineno + 1,
                message,
            };
            let mut tokens = line.split_whitespace();
            let directive = tokens.next().unwrap_or_default();
            match directive {
                "skip" => {
                    tokens.next().ok_or_else(|| err("skip needs a column name".into()))?;
                    columns.push(Column::Skip);
                }
                "attribute" => {
                    let name = tokens.next().ok_or_else(|| err("attribute needs a name".into()))?;
                    let kind = match tokens.next() {
                        Some("continuous") => AttributeKind::Continuous,
                        Some("binary") => AttributeKind::Binary,
                        Some("categorical") => AttributeKind::Categorical,
                        Some(other) => return Err(err(format!("unknown attribute kind `{other}`"))),
                        None => return Err(err(format!("attribute `{name}` needs a kind"))),
                    };
                    columns.push(Column::Attribute(attributes.len()));
                    attributes.push(AttributeSpec::discrete(name, kind, tokens));
                }
                "class" => {
                    if classes.is_some() {
                        return Err(err("more than one class column".into()));
                    }
                    classes = Some(tokens.map(str::to_string).collect::<Vec<_>>());
                    columns.push(Column::Label);
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        let classes = classes.ok_or_else(|| Error::schema("no class column declared"))?;
        let schema = Schema {
            attributes,
            classes,
            columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Renders the schema in the text format accepted by [`Schema::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut skipped = 0;
        for column in &self.columns {
            match column {
                Column::Skip => {
                    skipped += 1;
                    out.push_str(&format!("skip column_{skipped}\n"));
                }
                Column::Label => {
                    out.push_str("class");
                    for c in &self.classes {
                        out.push(' ');
                        out.push_str(c);
                    }
                    out.push('\n');
                }
                Column::Attribute(m) => {
                    let a = &self.attributes[*m];
                    out.push_str(&format!("attribute {} {}", a.name, a.kind));
                    for v in &a.values {
                        out.push(' ');
                        out.push_str(v);
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::schema("at least one attribute is required"));
        }
        if self.classes.len() < 2 {
            return Err(Error::schema("at least two classes are required"));
        }
        let mut names = HashSet::new();
        for a in &self.attributes {
            a.validate()?;
            if !names.insert(a.name.as_str()) {
                return Err(Error::schema(format!("duplicate attribute `{}`", a.name)));
            }
        }
        let distinct: HashSet<_> = self.classes.iter().collect();
        if distinct.len() != self.classes.len() {
            return Err(Error::schema("duplicate class label"));
        }
        let labels = self.columns.iter().filter(|c| **c == Column::Label).count();
        let attrs: Vec<usize> = self
            .columns
            .iter()
            .filter_map(|c| match c {
                Column::Attribute(m) => Some(*m),
                _ => None,
            })
            .collect();
        if labels != 1 || attrs != (0..self.attributes.len()).collect::<Vec<_>>() {
            return Err(Error::schema("column layout does not match the attributes"));
        }
        Ok(())
    }

    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Converts one field to the numeric value stored for attribute `m`.
    pub fn encode(&self, m: usize, token: &str) -> Result<f64> {
        let spec = &self.attributes[m];
        if spec.kind.is_discrete() {
            spec.values
                .iter()
                .position(|v| v == token)
                .map(|i| i as f64)
                .ok_or_else(|| Error::schema(format!("unknown value `{token}` for attribute `{}`", spec.name)))
        } else {
            match token.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::schema(format!(
                    "`{token}` is not a number (attribute `{}`)",
                    spec.name
                ))),
            }
        }
    }

    /// True when both schemas describe the same attributes and classes.
    pub fn is_compatible(&self, other: &Schema) -> bool {
        self.attributes == other.attributes && self.classes == other.classes
    }

    /// Describes the first difference between two schemas, if any.
    pub fn mismatch(&self, other: &Schema) -> Option<String> {
        if self.attributes.len() != other.attributes.len() {
            let (short, long) = if self.attributes.len() < other.attributes.len() {
                (self, other)
            } else {
                (other, self)
            };
            let extra = &long.attributes[short.attributes.len()].name;
            return Some(format!(
                "attribute count differs: {} vs {} (attribute `{extra}` has no counterpart)",
                self.attributes.len(),
                other.attributes.len()
            ));
        }
        for (a, b) in self.attributes.iter().zip(&other.attributes) {
            if a != b {
                return Some(format!("attribute `{}` differs from `{}`", a.name, b.name));
            }
        }
        if self.classes != other.classes {
            return Some(format!(
                "class labels differ: [{}] vs [{}]",
                self.classes.join(","),
                other.classes.join(",")
            ));
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Delimiter {
    /// Comma if the first data line contains one, whitespace otherwise.
    #[default]
    Auto,
    Comma,
    Whitespace,
    Char(char),
}

impl Delimiter {
    fn resolve(&self, sample: &str) -> Delimiter {
        match self {
            Delimiter::Auto if sample.contains(',') => Delimiter::Comma,
            Delimiter::Auto => Delimiter::Whitespace,
            other => other.clone(),
        }
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Char(c) => line.split(*c).map(str::trim).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseOptions {
    pub delimiter: Delimiter,
    pub missing: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            delimiter: Delimiter::Auto,
            missing: "?".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub values: Vec<f64>,
    pub label: usize,
    /// Ordinal of the row among the data rows of its source file.
    pub row: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Provenance {
    pub source: String,
    pub split: String,
    pub dropped_rows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub examples: Vec<Example>,
    pub provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset from in-memory rows, validating each against the schema.
    pub fn from_rows(schema: Schema, rows: impl IntoIterator<Item = (Vec<f64>, usize)>) -> Result<Self> {
        let examples = rows
            .into_iter()
            .enumerate()
            .map(|(row, (values, label))| Example { values, label, row })
            .collect();
        let data = Dataset {
            schema,
            examples,
            provenance: Provenance {
                source: "memory".into(),
                split: "all".into(),
                dropped_rows: 0,
            },
        };
        data.validate()?;
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.schema.num_attributes();
        let k = self.schema.num_classes();
        for ex in &self.examples {
            if ex.values.len() != m {
                return Err(Error::schema(format!(
                    "row {} has {} values, schema declares {m}",
                    ex.row,
                    ex.values.len()
                )));
            }
            if ex.label >= k {
                return Err(Error::schema(format!("row {} has class index {}", ex.row, ex.label)));
            }
            for (j, v) in ex.values.iter().enumerate() {
                let spec = &self.schema.attributes[j];
                let ok = match spec.value_count() {
                    Some(n) => v.fract() == 0.0 && *v >= 0.0 && (*v as usize) < n,
                    None => v.is_finite(),
                };
                if !ok {
                    return Err(Error::schema(format!(
                        "row {}: value {v} is invalid for attribute `{}`",
                        ex.row, spec.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Values of attribute `m` over all examples.
    pub fn column(&self, m: usize) -> Vec<f64> {
        self.examples.iter().map(|e| e.values[m]).collect()
    }

    /// Number of examples per class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.schema.num_classes()];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }
}

/// Parses one row of a data file.
///
/// Returns `Ok(None)` when the row holds the missing-value token.
fn parse_fields(
    schema: &Schema,
    fields: &[&str],
    missing: &str,
    with_label: bool,
) -> Result<Option<(Vec<f64>, Option<usize>)>> {
    if fields.contains(&missing) {
        return Ok(None);
    }
    let mut values = vec![0.0; schema.num_attributes()];
    let mut label = None;
    let columns = schema.columns.iter().filter(|c| with_label || **c != Column::Label);
    for (column, field) in columns.zip(fields) {
        match column {
            Column::Skip => {}
            Column::Attribute(m) => values[*m] = schema.encode(*m, field)?,
            Column::Label => {
                label = Some(
                    schema
                        .class_index(field)
                        .ok_or_else(|| Error::schema(format!("unknown class label `{field}`")))?,
                );
            }
        }
    }
    Ok(Some((values, label)))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses a labelled data table held in memory.
pub fn parse_table_str(text: &str, source_name: &str, schema: &Schema, options: &ParseOptions) -> Result<Dataset> {
    let sample = data_lines(text).next().map(|(_, l)| l).unwrap_or("");
    let delimiter = options.delimiter.resolve(sample);
    let width = schema.columns.len();
    let mut examples = Vec::new();
    let mut dropped = 0;
    for (row, (lineno, line)) in data_lines(text).enumerate() {
        let fields = delimiter.split(line);
        if fields.len() != width {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line: lineno,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let parsed = parse_fields(schema, &fields, &options.missing, true).map_err(|e| match e {
            Error::Schema(msg) => Error::schema(format!("{source_name}:{lineno}: {msg}")),
            other => other,
        })?;
        match parsed {
            Some((values, Some(label))) => examples.push(Example { values, label, row }),
            Some((_, None)) => unreachable!("labelled rows always carry a label column"),
            None => dropped += 1,
        }
    }
    if examples.is_empty() {
        return Err(Error::Format(format!("{source_name}: no examples")));
    }
    Ok(Dataset {
        schema: schema.clone(),
        examples,
        provenance: Provenance {
            source: source_name.to_string(),
            split: "all".into(),
            dropped_rows: dropped,
        },
    })
}

/// Reads a labelled data file. Rows containing the missing-value token are dropped
/// and counted in [`Provenance::dropped_rows`].
pub fn parse_table(path: impl AsRef<Path>, schema: &Schema, options: &ParseOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table_str(&text, &path.display().to_string(), schema, options)
}

/// Parses one row for prediction. The label column may be present or absent;
/// when present it is checked but otherwise ignored.
pub fn parse_features(schema: &Schema, line: &str, options: &ParseOptions) -> Result<Vec<f64>> {
    let fields = options.delimiter.resolve(line).split(line.trim());
    let width = schema.columns.len();
    let with_label = if fields.len() == width {
        true
    } else if fields.len() == width - 1 {
        false
    } else {
        return Err(Error::Format(format!(
            "expected {} or {width} fields, found {}",
            width - 1,
            fields.len()
        )));
    };
    match parse_fields(schema, &fields, &options.missing, with_label)? {
        Some((values, _)) => Ok(values),
        None => Err(Error::Format("row contains a missing value".into())),
    }
}

/// Splits a dataset into `train_count` training examples and the rest.
///
/// Without a seed the split follows file order; with a seed the examples are
/// shuffled by a ChaCha8 stream first, so the same seed always yields the same subsets.
pub fn split_dataset(data: &Dataset, train_count: usize, shuffle_seed: Option<u64>) -> Result<(Dataset, Dataset)> {
    let n = data.len();
    if train_count == 0 || train_count >= n {
        return Err(Error::argument(format!(
            "train count must lie in 1..{n}, got {train_count}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let how = match shuffle_seed {
        Some(seed) => {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            format!("seed {seed}")
        }
        None => "file order".to_string(),
    };
    let part = |indices: &[usize], name: &str| Dataset {
        schema: data.schema.clone(),
        examples: indices.iter().map(|&i| data.examples[i].clone()).collect(),
        provenance: Provenance {
            source: data.provenance.source.clone(),
            split: format!("{name} {} of {n}, {how}", indices.len()),
            dropped_rows: data.provenance.dropped_rows,
        },
    };
    let (train, test) = order.split_at(train_count);
    Ok((part(train, "train"), part(test, "test")))
}
