use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TabularDataset;
use crate::error::{OrdError, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub test_per_class: usize,
    #[serde(default = "default_true")]
    pub stratified: bool,
}

fn default_true() -> bool {
    true
}

/// Holds out `test_per_class` rows of every label present.
///
/// With `stratified = false` the test set is instead a uniform draw of the
/// same total size. Both halves keep the input row order.
pub fn stratified_split(d: &TabularDataset, spec: SplitSpec) -> Result<(TabularDataset, TabularDataset)> {
    let mut rng = rng_from_seed(spec.seed);
    let mut labels: Vec<u8> = d.labels().to_vec();
    labels.sort_unstable();
    labels.dedup();

    let mut in_test = vec![false; d.n_rows()];
    if spec.stratified {
        for &label in &labels {
            let mut idx = d.indices_of(label);
            if idx.len() < spec.test_per_class {
                return Err(OrdError::InsufficientRows {
                    label,
                    needed: spec.test_per_class,
                    available: idx.len(),
                });
            }
            let (chosen, _) = idx.partial_shuffle(&mut rng, spec.test_per_class);
            for &i in chosen.iter() {
                in_test[i] = true;
            }
        }
    } else {
        let total = spec.test_per_class * labels.len().max(1);
        if total > d.n_rows() {
            return Err(OrdError::invalid(format!(
                "test size {total} exceeds {} rows",
                d.n_rows()
            )));
        }
        let mut idx: Vec<usize> = (0..d.n_rows()).collect();
        let (chosen, _) = idx.partial_shuffle(&mut rng, total);
        for &i in chosen.iter() {
            in_test[i] = true;
        }
    }

    let (test, train): (Vec<usize>, Vec<usize>) = (0..d.n_rows()).partition(|&i| in_test[i]);
    Ok((d.subset(&train), d.subset(&test)))
}
