use std::time::Instant;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnSchema, LabelAlphabet, Schema, TabularDataset};
use crate::error::Result;
use crate::overlap::{detect_overlap, OverlapConfig};
use crate::seed::child_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub n_samples: usize,
    pub n_features: usize,
    pub seconds: f64,
    pub n_overlap: usize,
}

/// 95/5 imbalanced Gaussian data: majority N(0, I), minority N(1, I).
pub fn bench_data(n_samples: usize, n_features: usize, seed: u64) -> Result<TabularDataset> {
    let n_min = (n_samples / 20).max(1);
    let mut rng = child_rng(seed, "bench-data", 0);
    let labels: Vec<u8> = (0..n_samples).map(|i| u8::from(i >= n_samples - n_min)).collect();
    let x = Array2::from_shape_fn((n_samples, n_features), |(i, _)| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z + f64::from(labels[i])
    });
    let schema = Schema::new(
        (0..n_features).map(|j| ColumnSchema::numeric(format!("f{j}"))).collect(),
        "class",
        "1",
    )?;
    TabularDataset::new(schema, x, labels, LabelAlphabet::Binary)
}

/// Wall time of `detect_overlap` alone on [`bench_data`].
pub fn bench_overlap(n_samples: usize, n_features: usize, seed: u64, cfg: &OverlapConfig) -> Result<BenchResult> {
    let d = bench_data(n_samples, n_features, seed)?;
    let start = Instant::now();
    let (_, r) = detect_overlap(&d, cfg)?;
    Ok(BenchResult {
        n_samples,
        n_features,
        seconds: start.elapsed().as_secs_f64(),
        n_overlap: r.n_overlap,
    })
}
