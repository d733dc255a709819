use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{ColumnKind, LabelAlphabet, Schema, TabularDataset, MINORITY, UNKNOWN_CATEGORY};
use crate::error::{OrdError, Result};

/// Trailing column carrying the ternary label in ORD output files.
pub const ORD_LABEL_COLUMN: &str = "ord_label";

const UNKNOWN_CATEGORY_TEXT: &str = "<unknown>";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    /// Binary labels from the schema's target column.
    Target,
    /// Ternary labels from the `ord_label` column; the target column is optional.
    OrdLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnseenCategory {
    /// Append to the column's category list in first-seen order.
    Append,
    /// Map to [`UNKNOWN_CATEGORY`], leaving the schema untouched.
    Unknown,
}

/// Reads a data CSV and its JSON schema file.
pub fn load_csv(path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<TabularDataset> {
    let schema = Schema::from_json_file(schema_path)?;
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| OrdError::io(path, e))?;
    read_csv(file, &schema, LabelSource::Target, UnseenCategory::Append)
}

/// Reads a CSV carrying the `ord_label` column.
pub fn load_ternary_csv(
    path: impl AsRef<Path>,
    schema: &Schema,
    unseen: UnseenCategory,
) -> Result<TabularDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| OrdError::io(path, e))?;
    read_csv(file, schema, LabelSource::OrdLabel, unseen)
}

pub fn read_csv<R: Read>(
    reader: R,
    schema: &Schema,
    labels_from: LabelSource,
    unseen: UnseenCategory,
) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let position: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h, i)).collect();

    let column_of = |name: &str| -> Result<usize> {
        position.get(name).copied().ok_or_else(|| OrdError::MissingColumn {
            column: name.to_string(),
            context: "CSV header".into(),
        })
    };
    let feature_cols = schema
        .columns
        .iter()
        .map(|c| column_of(&c.name))
        .collect::<Result<Vec<_>>>()?;
    let label_col = match labels_from {
        LabelSource::Target => column_of(&schema.target)?,
        LabelSource::OrdLabel => column_of(ORD_LABEL_COLUMN)?,
    };

    let mut schema = schema.clone();
    let mut lookup: Vec<HashMap<String, usize>> = schema
        .columns
        .iter()
        .map(|c| c.categories.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
        .collect();

    let width = schema.n_features();
    let mut cells = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (j, &src) in feature_cols.iter().enumerate() {
            let col = &mut schema.columns[j];
            let raw = record.get(src).ok_or_else(|| OrdError::Cell {
                row,
                column: col.name.clone(),
                message: "missing cell".into(),
            })?;
            let value = match col.kind {
                ColumnKind::Numeric => {
                    let v: f64 = raw.trim().parse().map_err(|_| OrdError::Cell {
                        row,
                        column: col.name.clone(),
                        message: format!("cannot parse `{raw}` as a number"),
                    })?;
                    if !v.is_finite() {
                        return Err(OrdError::Cell {
                            row,
                            column: col.name.clone(),
                            message: format!("non-finite value `{raw}`"),
                        });
                    }
                    v
                }
                ColumnKind::Categorical => match lookup[j].get(raw) {
                    Some(&idx) => idx as f64,
                    None => match unseen {
                        UnseenCategory::Append => {
                            let idx = col.categories.len();
                            col.categories.push(raw.to_string());
                            lookup[j].insert(raw.to_string(), idx);
                            idx as f64
                        }
                        UnseenCategory::Unknown => UNKNOWN_CATEGORY,
                    },
                },
            };
            cells.push(value);
        }

        let raw_label = record.get(label_col).ok_or_else(|| OrdError::Cell {
            row,
            column: header[label_col].to_string(),
            message: "missing label cell".into(),
        })?;
        let label = match labels_from {
            LabelSource::Target => {
                let raw_label = raw_label.trim();
                if raw_label == schema.positive_label {
                    MINORITY
                } else {
                    match &schema.negative_label {
                        None => schema.negative_label = Some(raw_label.to_string()),
                        Some(neg) if neg == raw_label => {}
                        Some(neg) => {
                            return Err(OrdError::Cell {
                                row,
                                column: schema.target.clone(),
                                message: format!(
                                    "target is not binary: saw `{neg}` and `{raw_label}` besides positive `{}`",
                                    schema.positive_label
                                ),
                            })
                        }
                    }
                    0
                }
            }
            LabelSource::OrdLabel => match raw_label.trim() {
                "0" => 0,
                "1" => 1,
                "2" => 2,
                other => {
                    return Err(OrdError::Cell {
                        row,
                        column: ORD_LABEL_COLUMN.into(),
                        message: format!("unknown ord_label value `{other}`"),
                    })
                }
            },
        };
        labels.push(label);
    }

    let features = Array2::from_shape_vec((labels.len(), width), cells)
        .map_err(|e| OrdError::invalid(e.to_string()))?;
    let alphabet = match labels_from {
        LabelSource::Target => LabelAlphabet::Binary,
        LabelSource::OrdLabel => LabelAlphabet::Ternary,
    };
    TabularDataset::new(schema, features, labels, alphabet)
}

/// Writes features, the target column and, for ternary data, `ord_label`.
pub fn write_csv<W: Write>(d: &TabularDataset, writer: W) -> Result<()> {
    let schema = d.schema();
    let ternary = d.alphabet() == LabelAlphabet::Ternary;
    let mut wtr = csv::Writer::from_writer(writer);

    let mut header: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    header.push(&schema.target);
    if ternary {
        header.push(ORD_LABEL_COLUMN);
    }
    wtr.write_record(&header)?;

    let x = d.features();
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for (i, &label) in d.labels().iter().enumerate() {
        record.clear();
        for (j, col) in schema.columns.iter().enumerate() {
            let v = x[[i, j]];
            record.push(match col.kind {
                ColumnKind::Numeric => format!("{v}"),
                ColumnKind::Categorical if v == UNKNOWN_CATEGORY => UNKNOWN_CATEGORY_TEXT.into(),
                ColumnKind::Categorical => col.categories[v as usize].clone(),
            });
        }
        record.push(schema.label_string(u8::from(label == MINORITY)).to_string());
        if ternary {
            record.push(label.to_string());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| OrdError::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv_file(d: &TabularDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| OrdError::io(path, e))?;
    write_csv(d, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnSchema;

    fn schema() -> Schema {
        Schema::new(
            vec![
                ColumnSchema::numeric("age"),
                ColumnSchema::categorical("job", vec![]),
            ],
            "y",
            "yes",
        )
        .unwrap()
    }

    fn read(text: &str) -> Result<TabularDataset> {
        read_csv(text.as_bytes(), &schema(), LabelSource::Target, UnseenCategory::Append)
    }

    #[test]
    fn parses_three_rows() {
        let d = read("age,job,y\n30,admin,no\n41,tech,yes\n25,admin,no\n").unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.schema().columns[1].categories, vec!["admin", "tech"]);
        assert_eq!(d.schema().negative_label.as_deref(), Some("no"));
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let d = read("age,job,y\n").unwrap();
        assert_eq!(d.n_rows(), 0);
        assert_eq!(d.n_features(), 2);
    }

    #[test]
    fn errors_carry_locations() {
        match read("age,job,y\n30,admin,no\nabc,tech,yes\n") {
            Err(OrdError::Cell { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "age");
            }
            other => panic!("unexpected {other:?}"),
        }
        match read("age,job\n30,admin\n") {
            Err(OrdError::MissingColumn { column, .. }) => assert_eq!(column, "y"),
            other => panic!("unexpected {other:?}"),
        }
        match read("job,y\nadmin,no\n") {
            Err(OrdError::MissingColumn { column, .. }) => assert_eq!(column, "age"),
            other => panic!("unexpected {other:?}"),
        }
        // missing value
        assert!(matches!(read("age,job,y\n,admin,no\n"), Err(OrdError::Cell { .. })));
        // three-valued target
        assert!(read("age,job,y\n1,a,no\n2,a,maybe\n").is_err());
    }

    #[test]
    fn unknown_policy_keeps_schema() {
        let mut s = schema();
        s.columns[1].categories = vec!["admin".into()];
        let d = read_csv(
            "age,job,y\n1,admin,no\n2,chef,yes\n".as_bytes(),
            &s,
            LabelSource::Target,
            UnseenCategory::Unknown,
        )
        .unwrap();
        assert_eq!(d.features()[[1, 1]], UNKNOWN_CATEGORY);
        assert_eq!(d.schema().columns[1].categories.len(), 1);
    }

    #[test]
    fn ternary_round_trip_through_ord_label() {
        let d = read("age,job,y\n30,admin,no\n41,tech,yes\n25,admin,no\n").unwrap();
        let t = d.with_labels(vec![2, 1, 0], LabelAlphabet::Ternary).unwrap();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("age,job,y,ord_label\n"));
        assert!(text.contains("30,admin,no,2\n"));
        let back = read_csv(text.as_bytes(), t.schema(), LabelSource::OrdLabel, UnseenCategory::Unknown).unwrap();
        assert_eq!(back.labels(), &[2, 1, 0]);
        let bad = read_csv(
            "age,job,y,ord_label\n1,admin,no,7\n".as_bytes(),
            t.schema(),
            LabelSource::OrdLabel,
            UnseenCategory::Unknown,
        );
        assert!(bad.is_err());
    }
}
