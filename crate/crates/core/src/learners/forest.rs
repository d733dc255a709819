//! Bagged random forest; the committee behind overlap detection.

use ndarray::ArrayView2;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, validate_xyw, Columns, DecisionTree, GiniTarget, MaxFeatures, TreeParams};
use super::{check_width, Classifier};
use crate::error::Result;
use crate::seed::child_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Draw n rows with replacement per tree. Disabled only in tests.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 50,
            tree: TreeParams {
                max_features: MaxFeatures::Sqrt,
                ..TreeParams::default()
            },
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn with_trees(n_trees: usize) -> Self {
        ForestParams {
            n_trees,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub seed: u64,
    /// Per-tree bootstrap multiplicity of each training row.
    #[serde(skip)]
    in_bag: Vec<Vec<u32>>,
}

/// Tree `t` draws from `child_rng(seed, "tree", t)`, so the result does not
/// depend on how many threads build the trees.
pub fn fit_forest(x: ArrayView2<'_, f64>, y: &[u8], params: &ForestParams, seed: u64) -> Result<RandomForest> {
    let ones = vec![1.0; y.len()];
    validate_xyw(x, y, &ones)?;
    let cols = Columns::new(x);
    let n = y.len();
    let built: Vec<(DecisionTree, Vec<u32>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| build_tree(&cols, y, n, params, seed, t))
        .collect();
    let (trees, in_bag) = built.into_iter().unzip();
    Ok(RandomForest {
        trees,
        n_features: x.ncols(),
        seed,
        in_bag,
    })
}

/// Serial reference build; must agree bit-for-bit with [`fit_forest`].
pub fn fit_forest_serial(x: ArrayView2<'_, f64>, y: &[u8], params: &ForestParams, seed: u64) -> Result<RandomForest> {
    let ones = vec![1.0; y.len()];
    validate_xyw(x, y, &ones)?;
    let cols = Columns::new(x);
    let n = y.len();
    let (trees, in_bag) = (0..params.n_trees)
        .map(|t| build_tree(&cols, y, n, params, seed, t))
        .unzip();
    Ok(RandomForest {
        trees,
        n_features: x.ncols(),
        seed,
        in_bag,
    })
}

fn build_tree(cols: &Columns, y: &[u8], n: usize, params: &ForestParams, seed: u64, t: usize) -> (DecisionTree, Vec<u32>) {
    let mut rng = child_rng(seed, "tree", t as u64);
    let mut counts = vec![0u32; n];
    if params.bootstrap {
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
    } else {
        counts.iter_mut().for_each(|c| *c = 1);
    }
    let rows: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let target = GiniTarget { labels: y, weights: &weights };
    let tree = grow(cols, rows, &target, &params.tree, Some(&mut rng));
    (tree, counts)
}

impl RandomForest {
    /// Mean class-0 probability across trees for every row.
    pub fn class0_confidence(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.predict_proba(x)?.into_iter().map(|p| p[0]).collect())
    }

    /// Out-of-bag class probabilities for the training rows; `None` for rows
    /// that every tree saw.
    pub fn oob_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Option<[f64; 2]>>> {
        check_width(self.n_features, x)?;
        Ok(x.rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let mut acc = [0.0; 2];
                let mut k = 0usize;
                for (tree, bag) in self.trees.iter().zip(&self.in_bag) {
                    if bag.get(i).copied().unwrap_or(1) == 0 {
                        let v = tree.leaf_value(row);
                        acc[0] += v[0];
                        acc[1] += v[1];
                        k += 1;
                    }
                }
                (k > 0).then(|| [acc[0] / k as f64, acc[1] / k as f64])
            })
            .collect())
    }
}

impl Classifier for RandomForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<[f64; 2]>> {
        check_width(self.n_features, x)?;
        let k = self.trees.len().max(1) as f64;
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                let mut p1 = 0.0;
                for tree in &self.trees {
                    p1 += tree.leaf_value(row)[1];
                }
                let p1 = if self.trees.is_empty() { 0.5 } else { p1 / k };
                [1.0 - p1, p1]
            })
            .collect())
    }
}
