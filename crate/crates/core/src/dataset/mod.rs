//! Tabular data container shared by every stage of the pipeline.
//!
//! Features live in a dense `f64` matrix. Numeric cells hold their value;
//! categorical cells hold the index into the column's category list, or
//! [`UNKNOWN_CATEGORY`] for a value the schema has never seen.

mod csv_io;
mod split;
mod transform;

use std::collections::HashSet;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{OrdError, Result};

pub use csv_io::{
    load_csv, load_ternary_csv, read_csv, write_csv, write_csv_file, LabelSource, UnseenCategory,
    ORD_LABEL_COLUMN,
};
pub use split::{stratified_split, SplitSpec};
pub use transform::{one_hot, one_hot_width, standardize, ScaleTable};

/// Sentinel stored in a categorical cell whose value is outside the category list.
pub const UNKNOWN_CATEGORY: f64 = -1.0;

/// Clear majority (binary majority before detection, D00 after).
pub const MAJORITY: u8 = 0;
/// Minority class D1.
pub const MINORITY: u8 = 1;
/// Majority row flagged as overlapping (D01).
pub const OVERLAP: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories,
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == ColumnKind::Categorical
    }

    pub fn category_index(&self, value: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == value)
    }
}

/// Feature columns plus the target column description.
///
/// This is also the on-disk schema file format. When the file lists the
/// target among `columns` it is removed from the feature list on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSchema>,
    pub target: String,
    pub positive_label: String,
    /// Target string used for class 0 when writing CSV; learned on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_label: Option<String>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>, target: impl Into<String>, positive: impl Into<String>) -> Result<Self> {
        let mut schema = Schema {
            columns,
            target: target.into(),
            positive_label: positive.into(),
            negative_label: None,
        };
        schema.normalize()?;
        Ok(schema)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut schema: Schema = serde_json::from_str(s)?;
        schema.normalize()?;
        Ok(schema)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| OrdError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn normalize(&mut self) -> Result<()> {
        let target = self.target.clone();
        self.columns.retain(|c| c.name != target);
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for col in &self.columns {
            if !names.insert(col.name.as_str()) {
                return Err(OrdError::Schema(format!("duplicate column name `{}`", col.name)));
            }
            if col.kind == ColumnKind::Numeric && !col.categories.is_empty() {
                return Err(OrdError::Schema(format!(
                    "numeric column `{}` declares categories",
                    col.name
                )));
            }
            let mut seen = HashSet::new();
            for c in &col.categories {
                if !seen.insert(c.as_str()) {
                    return Err(OrdError::Schema(format!(
                        "column `{}` lists category `{c}` twice",
                        col.name
                    )));
                }
            }
        }
        if self.target.is_empty() {
            return Err(OrdError::Schema("empty target name".into()));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    /// Same feature columns and kinds (category lists may differ).
    pub fn is_compatible(&self, other: &Schema) -> bool {
        self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
    }

    pub(crate) fn label_string(&self, label: u8) -> &str {
        if label == MINORITY {
            &self.positive_label
        } else {
            self.negative_label.as_deref().unwrap_or("0")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelAlphabet {
    /// {0 = majority, 1 = minority}
    Binary,
    /// {0 = clear majority, 1 = minority, 2 = overlapping majority}
    Ternary,
}

impl LabelAlphabet {
    pub fn admits(self, label: u8) -> bool {
        match self {
            LabelAlphabet::Binary => label <= 1,
            LabelAlphabet::Ternary => label <= 2,
        }
    }

    fn widest(self, other: LabelAlphabet) -> LabelAlphabet {
        if self == LabelAlphabet::Ternary || other == LabelAlphabet::Ternary {
            LabelAlphabet::Ternary
        } else {
            LabelAlphabet::Binary
        }
    }
}

/// Where a row came from; used to prove test rows never leak into training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowOrigin {
    Real(usize),
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    schema: Schema,
    features: Array2<f64>,
    labels: Vec<u8>,
    alphabet: LabelAlphabet,
    origin: Vec<RowOrigin>,
}

impl TabularDataset {
    /// Builds a dataset of real rows numbered `0..n`.
    pub fn new(schema: Schema, features: Array2<f64>, labels: Vec<u8>, alphabet: LabelAlphabet) -> Result<Self> {
        let origin = (0..labels.len()).map(RowOrigin::Real).collect();
        Self::with_origin(schema, features, labels, alphabet, origin)
    }

    pub fn with_origin(
        schema: Schema,
        features: Array2<f64>,
        labels: Vec<u8>,
        alphabet: LabelAlphabet,
        origin: Vec<RowOrigin>,
    ) -> Result<Self> {
        let d = TabularDataset {
            schema,
            features,
            labels,
            alphabet,
            origin,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let n = self.features.nrows();
        if self.features.ncols() != self.schema.n_features() {
            return Err(OrdError::WidthMismatch {
                expected: self.schema.n_features(),
                actual: self.features.ncols(),
            });
        }
        if self.labels.len() != n || self.origin.len() != n {
            return Err(OrdError::invalid(format!(
                "{n} feature rows but {} labels and {} origins",
                self.labels.len(),
                self.origin.len()
            )));
        }
        if let Some((row, &l)) = self.labels.iter().enumerate().find(|(_, &l)| !self.alphabet.admits(l)) {
            return Err(OrdError::invalid(format!(
                "row {row}: label {l} outside the {:?} alphabet",
                self.alphabet
            )));
        }
        for (j, col) in self.schema.columns.iter().enumerate() {
            let column = self.features.column(j);
            match col.kind {
                ColumnKind::Numeric => {
                    if let Some(row) = column.iter().position(|v| !v.is_finite()) {
                        return Err(OrdError::Cell {
                            row,
                            column: col.name.clone(),
                            message: "non-finite numeric value".into(),
                        });
                    }
                }
                ColumnKind::Categorical => {
                    let width = col.categories.len() as f64;
                    if let Some(row) = column
                        .iter()
                        .position(|&v| v != UNKNOWN_CATEGORY && (v < 0.0 || v >= width || v.fract() != 0.0))
                    {
                        return Err(OrdError::Cell {
                            row,
                            column: col.name.clone(),
                            message: format!("category index {} out of range", column[row]),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }
    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
    pub fn alphabet(&self) -> LabelAlphabet {
        self.alphabet
    }
    pub fn origin(&self) -> &[RowOrigin] {
        &self.origin
    }
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }
    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels with overlap (2) folded back into majority (0).
    pub fn binary_labels(&self) -> Vec<u8> {
        self.labels.iter().map(|&l| u8::from(l == MINORITY)).collect()
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn indices_of(&self, label: u8) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Original row numbers of every real row.
    pub fn real_ids(&self) -> Vec<usize> {
        self.origin
            .iter()
            .filter_map(|o| match o {
                RowOrigin::Real(i) => Some(*i),
                RowOrigin::Synthetic => None,
            })
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> TabularDataset {
        TabularDataset {
            schema: self.schema.clone(),
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            alphabet: self.alphabet,
            origin: indices.iter().map(|&i| self.origin[i]).collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<u8>, alphabet: LabelAlphabet) -> Result<TabularDataset> {
        Self::with_origin(
            self.schema.clone(),
            self.features.clone(),
            labels,
            alphabet,
            self.origin.clone(),
        )
    }

    /// Same rows with overlap labels folded into majority.
    pub fn to_binary(&self) -> TabularDataset {
        TabularDataset {
            labels: self.binary_labels(),
            alphabet: LabelAlphabet::Binary,
            ..self.clone()
        }
    }

    /// Empty dataset sharing this schema.
    pub fn empty_like(&self) -> TabularDataset {
        TabularDataset {
            schema: self.schema.clone(),
            features: Array2::zeros((0, self.n_features())),
            labels: Vec::new(),
            alphabet: self.alphabet,
            origin: Vec::new(),
        }
    }

    /// Row-wise concatenation; the first part's schema wins and must be compatible with the rest.
    pub fn concat(parts: &[&TabularDataset]) -> Result<TabularDataset> {
        let first = parts
            .first()
            .ok_or_else(|| OrdError::invalid("concat of zero datasets"))?;
        let mut alphabet = first.alphabet;
        for p in &parts[1..] {
            if !first.schema.is_compatible(&p.schema) {
                return Err(OrdError::Schema("concat of datasets with different columns".into()));
            }
            alphabet = alphabet.widest(p.alphabet);
        }
        let views: Vec<_> = parts.iter().map(|p| p.features.view()).collect();
        let features = ndarray::concatenate(Axis(0), &views)
            .map_err(|e| OrdError::invalid(format!("concat: {e}")))?;
        let labels = parts.iter().flat_map(|p| p.labels.iter().copied()).collect();
        let origin = parts.iter().flat_map(|p| p.origin.iter().copied()).collect();
        TabularDataset::with_origin(first.schema.clone(), features, labels, alphabet, origin)
    }
}
