//! SMOTE, Borderline-SMOTE and ADASYN interpolation.
//!
//! Rows of the requested label play the minority role; every other row is
//! treated as majority. Distances are Euclidean over standardized numerics
//! plus a 0/1 mismatch per categorical column. Categorical cells of a
//! synthetic row are copied from its seed row.

use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, ScaleTable, TabularDataset};
use crate::error::{OrdError, Result};
use crate::seed::Rng as SeedRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoteMethod {
    Smote,
    Borderline,
    Adasyn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub method: SmoteMethod,
    /// Neighborhood size for the borderline danger test.
    pub m_neighbors: usize,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            method: SmoteMethod::Smote,
            m_neighbors: 10,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(OrdError::invalid("k_neighbors must be at least 1"));
        }
        if self.m_neighbors < self.k_neighbors {
            return Err(OrdError::invalid("m_neighbors must be at least k_neighbors"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutput {
    /// Raw feature rows in schema order.
    pub rows: Array2<f64>,
    /// (seed, neighbor) row indices into the input dataset, one per synthetic row.
    pub pairs: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

/// Distance space: standardized numerics plus categorical codes.
pub(crate) struct Metric {
    z: Array2<f64>,
    categorical: Vec<bool>,
}

impl Metric {
    pub(crate) fn new(d: &TabularDataset) -> Result<Self> {
        let table = ScaleTable::fit(d)?;
        let z = table.apply(d)?.features().to_owned();
        let categorical = d.schema().columns.iter().map(|c| c.kind == ColumnKind::Categorical).collect();
        Ok(Metric { z, categorical })
    }

    pub(crate) fn dist2(&self, a: usize, b: usize) -> f64 {
        let (ra, rb) = (self.z.row(a), self.z.row(b));
        let mut s = 0.0;
        for ((x, y), &cat) in ra.iter().zip(rb.iter()).zip(&self.categorical) {
            s += if cat {
                f64::from(u8::from(x != y))
            } else {
                (x - y).powi(2)
            };
        }
        s
    }

    /// The `k` nearest rows of `candidates` to `row`, excluding `row` itself.
    /// Ties are broken by row index.
    pub(crate) fn nearest(&self, row: usize, candidates: &[usize], k: usize) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = candidates
            .iter()
            .filter(|&&c| c != row)
            .map(|&c| (self.dist2(row, c), c))
            .collect();
        let k = k.min(scored.len());
        if k == 0 {
            return vec![];
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_unstable_by(cmp);
        scored.into_iter().map(|(_, c)| c).collect()
    }
}

fn interpolate(d: &TabularDataset, seed_row: usize, nn: usize, lambda: f64, out: &mut [f64]) {
    let x = d.features();
    for (j, col) in d.schema().columns.iter().enumerate() {
        let a = x[[seed_row, j]];
        out[j] = match col.kind {
            ColumnKind::Categorical => a,
            ColumnKind::Numeric => a + lambda * (x[[nn, j]] - a),
        };
    }
}

/// Generates one row per entry of `seeds` using each seed's neighbor list.
fn generate(
    d: &TabularDataset,
    seeds: &[usize],
    neighbors: &dyn Fn(usize) -> Vec<usize>,
    rng: &mut SeedRng,
) -> (Array2<f64>, Vec<(usize, usize)>) {
    let p = d.n_features();
    let mut rows = Array2::<f64>::zeros((seeds.len(), p));
    let mut pairs = Vec::with_capacity(seeds.len());
    let mut buf = vec![0.0; p];
    for (i, &s) in seeds.iter().enumerate() {
        let nn = neighbors(s);
        let partner = if nn.is_empty() { s } else { nn[rng.random_range(0..nn.len())] };
        let lambda: f64 = rng.random();
        interpolate(d, s, partner, lambda, &mut buf);
        rows.row_mut(i).assign(&ndarray::ArrayView1::from(&buf[..]));
        pairs.push((s, partner));
    }
    (rows, pairs)
}

fn minority_rows(d: &TabularDataset, label: u8) -> Result<Vec<usize>> {
    let rows = d.indices_of(label);
    if rows.is_empty() {
        return Err(OrdError::InsufficientRows {
            label,
            needed: 1,
            available: 0,
        });
    }
    Ok(rows)
}

pub fn smote(d: &TabularDataset, label: u8, cfg: &SmoteConfig, n: usize, rng: &mut SeedRng) -> Result<SmoteOutput> {
    cfg.validate()?;
    let minority = minority_rows(d, label)?;
    let metric = Metric::new(d)?;
    let seeds: Vec<usize> = (0..n).map(|_| minority[rng.random_range(0..minority.len())]).collect();
    let mut used = seeds.clone();
    used.sort_unstable();
    used.dedup();
    let cache: HashMap<usize, Vec<usize>> =
        used.iter().map(|&r| (r, metric.nearest(r, &minority, cfg.k_neighbors))).collect();
    let (rows, pairs) = generate(d, &seeds, &|s| cache[&s].clone(), rng);
    Ok(SmoteOutput {
        rows,
        pairs,
        warnings: vec![],
    })
}

/// Minority rows whose m-neighborhood holds at least m/2 but fewer than m other-label rows.
pub fn danger_set(d: &TabularDataset, label: u8, cfg: &SmoteConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let minority = minority_rows(d, label)?;
    let metric = Metric::new(d)?;
    let all: Vec<usize> = (0..d.n_rows()).collect();
    let labels = d.labels();
    Ok(minority
        .iter()
        .copied()
        .filter(|&r| {
            let nn = metric.nearest(r, &all, cfg.m_neighbors);
            let m = nn.len();
            let majority = nn.iter().filter(|&&j| labels[j] != label).count();
            m > 0 && 2 * majority >= m && majority < m
        })
        .collect())
}

pub fn borderline_smote(d: &TabularDataset, label: u8, cfg: &SmoteConfig, n: usize, rng: &mut SeedRng) -> Result<SmoteOutput> {
    let danger = danger_set(d, label, cfg)?;
    if danger.is_empty() || n == 0 {
        let warnings = if danger.is_empty() {
            vec![format!("borderline-smote: no danger rows for label {label}; generated nothing")]
        } else {
            vec![]
        };
        return Ok(SmoteOutput {
            rows: Array2::zeros((0, d.n_features())),
            pairs: vec![],
            warnings,
        });
    }
    let minority = d.indices_of(label);
    let metric = Metric::new(d)?;
    let seeds: Vec<usize> = (0..n).map(|_| danger[rng.random_range(0..danger.len())]).collect();
    let cache: HashMap<usize, Vec<usize>> =
        danger.iter().map(|&r| (r, metric.nearest(r, &minority, cfg.k_neighbors))).collect();
    let (rows, pairs) = generate(d, &seeds, &|s| cache[&s].clone(), rng);
    Ok(SmoteOutput {
        rows,
        pairs,
        warnings: vec![],
    })
}

/// `g_i = round(n_total * r_i / sum(r))`, uniform when every `r_i` is zero.
pub fn adasyn_allocation(ratios: &[f64], n_total: usize) -> Vec<usize> {
    let sum: f64 = ratios.iter().sum();
    if sum <= 0.0 {
        let share = n_total as f64 / ratios.len() as f64;
        return ratios.iter().map(|_| share.round() as usize).collect();
    }
    ratios
        .iter()
        .map(|r| (n_total as f64 * r / sum).round() as usize)
        .collect()
}

/// Fraction of other-label rows among each minority row's k nearest neighbors.
pub fn adasyn_ratios(d: &TabularDataset, label: u8, cfg: &SmoteConfig) -> Result<Vec<(usize, f64)>> {
    cfg.validate()?;
    let minority = minority_rows(d, label)?;
    let metric = Metric::new(d)?;
    let all: Vec<usize> = (0..d.n_rows()).collect();
    let labels = d.labels();
    Ok(minority
        .iter()
        .map(|&r| {
            let nn = metric.nearest(r, &all, cfg.k_neighbors);
            let maj = nn.iter().filter(|&&j| labels[j] != label).count();
            (r, if nn.is_empty() { 0.0 } else { maj as f64 / nn.len() as f64 })
        })
        .collect())
}

/// ADASYN as published: the output size is the rounded allocation total,
/// which may differ from `n_total` by up to the minority count.
pub fn adasyn(d: &TabularDataset, label: u8, cfg: &SmoteConfig, n_total: usize, rng: &mut SeedRng) -> Result<SmoteOutput> {
    let ratios = adasyn_ratios(d, label, cfg)?;
    let r: Vec<f64> = ratios.iter().map(|x| x.1).collect();
    let alloc = adasyn_allocation(&r, n_total);
    let mut warnings = vec![];
    if r.iter().sum::<f64>() <= 0.0 {
        warnings.push(format!("adasyn: no other-label neighbors for label {label}; allocation is uniform"));
    }
    let seeds: Vec<usize> = ratios
        .iter()
        .zip(&alloc)
        .flat_map(|(&(row, _), &g)| std::iter::repeat_n(row, g))
        .collect();
    let minority = d.indices_of(label);
    let metric = Metric::new(d)?;
    let cache: HashMap<usize, Vec<usize>> = ratios
        .iter()
        .zip(&alloc)
        .filter(|(_, &g)| g > 0)
        .map(|(&(row, _), _)| (row, metric.nearest(row, &minority, cfg.k_neighbors)))
        .collect();
    let (rows, pairs) = generate(d, &seeds, &|s| cache[&s].clone(), rng);
    Ok(SmoteOutput { rows, pairs, warnings })
}
