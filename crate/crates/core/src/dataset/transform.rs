use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ColumnKind, Schema, TabularDataset, UNKNOWN_CATEGORY};
use crate::error::{OrdError, Result};

/// Per-column centering and scaling learned from a training set.
///
/// Scales use the population standard deviation (divide by n). Columns with
/// zero variance keep scale 1. Categorical columns carry `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTable {
    pub sd_convention: String,
    pub columns: Vec<Option<ColumnScale>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub scale: f64,
}

impl ScaleTable {
    pub fn fit(d: &TabularDataset) -> Result<Self> {
        if d.is_empty() {
            return Err(OrdError::invalid("standardize needs at least one row"));
        }
        let x = d.features();
        let n = d.n_rows() as f64;
        let columns = d
            .schema()
            .columns
            .iter()
            .enumerate()
            .map(|(j, col)| match col.kind {
                ColumnKind::Categorical => None,
                ColumnKind::Numeric => {
                    let c = x.column(j);
                    let mean = c.sum() / n;
                    let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    let scale = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
                    Some(ColumnScale { mean, scale })
                }
            })
            .collect();
        Ok(ScaleTable {
            sd_convention: "population".into(),
            columns,
        })
    }

    pub fn apply(&self, d: &TabularDataset) -> Result<TabularDataset> {
        if d.n_features() != self.columns.len() {
            return Err(OrdError::WidthMismatch {
                expected: self.columns.len(),
                actual: d.n_features(),
            });
        }
        let mut x = d.features().to_owned();
        for (j, col) in self.columns.iter().enumerate() {
            if let Some(s) = col {
                x.column_mut(j).mapv_inplace(|v| (v - s.mean) / s.scale);
            }
        }
        TabularDataset::with_origin(
            d.schema().clone(),
            x,
            d.labels().to_vec(),
            d.alphabet(),
            d.origin().to_vec(),
        )
    }
}

pub fn standardize(d: &TabularDataset) -> Result<(TabularDataset, ScaleTable)> {
    let table = ScaleTable::fit(d)?;
    let out = table.apply(d)?;
    Ok((out, table))
}

pub fn one_hot_width(schema: &Schema) -> usize {
    schema
        .columns
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => 1,
            ColumnKind::Categorical => c.categories.len(),
        })
        .sum()
}

/// Numeric columns pass through; each categorical column becomes one
/// indicator per category. Unknown categories produce an all-zero block.
pub fn one_hot(d: &TabularDataset) -> Array2<f64> {
    let schema = d.schema();
    let x = d.features();
    let mut out = Array2::zeros((d.n_rows(), one_hot_width(schema)));
    let mut offset = 0;
    for (j, col) in schema.columns.iter().enumerate() {
        match col.kind {
            ColumnKind::Numeric => {
                out.column_mut(offset).assign(&x.column(j));
                offset += 1;
            }
            ColumnKind::Categorical => {
                for i in 0..d.n_rows() {
                    let v = x[[i, j]];
                    if v != UNKNOWN_CATEGORY {
                        out[[i, offset + v as usize]] = 1.0;
                    }
                }
                offset += col.categories.len();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnSchema, LabelAlphabet};
    use ndarray::array;

    fn one_col(values: &[f64]) -> TabularDataset {
        let schema = Schema::new(vec![ColumnSchema::numeric("v")], "y", "1").unwrap();
        let x = Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap();
        TabularDataset::new(schema, x, vec![0; values.len()], LabelAlphabet::Binary).unwrap()
    }

    #[test]
    fn population_sd_convention() {
        let (z, t) = standardize(&one_col(&[1.0, 2.0, 3.0])).unwrap();
        let s = t.columns[0].unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.scale - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let col: Vec<f64> = z.features().column(0).to_vec();
        let expected = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((col[0] + expected).abs() < 1e-12 && col[1].abs() < 1e-12 && (col[2] - expected).abs() < 1e-12);
        assert!((expected - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn constant_column_scale_one() {
        let (z, t) = standardize(&one_col(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(t.columns[0].unwrap().scale, 1.0);
        assert!(z.features().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn idempotent_on_standardized_input() {
        let (z, _) = standardize(&one_col(&[0.3, -1.7, 2.2, 9.0, 4.4])).unwrap();
        let (zz, _) = standardize(&z).unwrap();
        for (a, b) in z.features().iter().zip(zz.features().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn saved_table_reproduces_bitwise() {
        let d = one_col(&[0.1, 0.7, -3.3, 12.5]);
        let (z, t) = standardize(&d).unwrap();
        assert_eq!(t.apply(&d).unwrap().features(), z.features());
    }

    #[test]
    fn one_hot_width_and_indicators() {
        let schema = Schema::new(
            vec![
                ColumnSchema::categorical("c", vec!["a".into(), "b".into(), "c".into()]),
                ColumnSchema::numeric("n"),
            ],
            "y",
            "1",
        )
        .unwrap();
        let d = TabularDataset::new(schema, array![[2.0, 0.5], [UNKNOWN_CATEGORY, 1.5]], vec![0, 1], LabelAlphabet::Binary)
            .unwrap();
        let m = one_hot(&d);
        assert_eq!(m.ncols(), 4);
        assert_eq!(m.row(0).to_vec(), vec![0.0, 0.0, 1.0, 0.5]);
        assert_eq!(m.row(1).to_vec(), vec![0.0, 0.0, 0.0, 1.5]);
    }
}
