//! Synthetic rows produced by an external tool, read back from a ternary CSV.

use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::dataset::{load_ternary_csv, Schema, TabularDataset, UnseenCategory};
use crate::error::{OrdError, Result};
use crate::seed::child_rng;

#[derive(Debug, Clone)]
pub struct ExternalBridge {
    pool: TabularDataset,
    pub with_replacement: bool,
}

impl ExternalBridge {
    /// Loads `path` against `schema`; categories outside the schema become unknown.
    pub fn open(path: impl AsRef<Path>, schema: &Schema) -> Result<Self> {
        let pool = load_ternary_csv(path, schema, UnseenCategory::Unknown)?;
        Ok(ExternalBridge {
            pool,
            with_replacement: false,
        })
    }

    pub fn from_dataset(pool: TabularDataset) -> Self {
        ExternalBridge {
            pool,
            with_replacement: false,
        }
    }

    pub fn pool(&self) -> &TabularDataset {
        &self.pool
    }

    pub fn available(&self, label: u8) -> usize {
        self.pool.count_label(label)
    }

    /// Pool row indices for `n` draws of `label`.
    pub fn draw(&self, label: u8, n: usize, seed: u64) -> Result<Vec<usize>> {
        let rows = self.pool.indices_of(label);
        let mut rng = child_rng(seed, "bridge-draw", label as u64);
        if self.with_replacement {
            if rows.is_empty() && n > 0 {
                return Err(OrdError::InsufficientRows {
                    label,
                    needed: n,
                    available: 0,
                });
            }
            return Ok((0..n).map(|_| rows[rng.random_range(0..rows.len())]).collect());
        }
        if n > rows.len() {
            return Err(OrdError::InsufficientRows {
                label,
                needed: n,
                available: rows.len(),
            });
        }
        Ok(sample_indices(&mut rng, rows.len(), n).into_iter().map(|i| rows[i]).collect())
    }
}
