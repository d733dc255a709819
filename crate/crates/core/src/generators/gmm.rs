//! Per-label diagonal Gaussian mixtures with categorical frequency tables.

use ndarray::{Array2, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, LabelAlphabet, Schema, TabularDataset, UNKNOWN_CATEGORY};
use crate::error::{OrdError, Result};
use crate::seed::{child_rng, rng_from_seed};

pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmParams {
    pub n_components: usize,
    pub max_iter: usize,
    /// Stop once the mean per-row log-likelihood improves by less than this.
    pub tol: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        GmmParams {
            n_components: 8,
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    /// One probability table per categorical column, indexed by category.
    pub cat_tables: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMixture {
    pub label: u8,
    pub components: Vec<GmmComponent>,
    /// Mean per-row log-likelihood of the numeric columns, one entry per EM iteration.
    pub loglik_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmPerClass {
    pub schema: Schema,
    pub alphabet: LabelAlphabet,
    pub numeric_cols: Vec<usize>,
    pub categorical_cols: Vec<usize>,
    pub classes: Vec<ClassMixture>,
}

fn log_gauss(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((v, m), s2) in x.iter().zip(mean).zip(var) {
        s += -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - (v - m).powi(2) / (2.0 * s2);
    }
    s
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl ClassMixture {
    /// Mean per-row log-likelihood of numeric rows under the stored parameters.
    pub fn mean_log_likelihood(&self, x: ArrayView2<f64>) -> f64 {
        let mut buf = vec![0.0; self.components.len()];
        let mut total = 0.0;
        for row in x.rows() {
            let row = row.to_vec();
            for (b, c) in buf.iter_mut().zip(&self.components) {
                *b = c.weight.ln() + log_gauss(&row, &c.mean, &c.var);
            }
            total += log_sum_exp(&buf);
        }
        total / x.nrows() as f64
    }
}

/// E-step: fills `resp` (n x K) and returns the mean log-likelihood.
fn e_step(x: &Array2<f64>, comps: &[GmmComponent], resp: &mut Array2<f64>) -> f64 {
    let k = comps.len();
    let mut buf = vec![0.0; k];
    let mut total = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let row = row.as_slice().expect("standard layout");
        for (b, c) in buf.iter_mut().zip(comps) {
            *b = c.weight.ln() + log_gauss(row, &c.mean, &c.var);
        }
        let lse = log_sum_exp(&buf);
        total += lse;
        for (j, b) in buf.iter().enumerate() {
            resp[[i, j]] = (b - lse).exp();
        }
    }
    total / x.nrows() as f64
}

fn m_step(x: &Array2<f64>, resp: &Array2<f64>, comps: &mut [GmmComponent]) {
    let n = x.nrows() as f64;
    let p = x.ncols();
    for (j, c) in comps.iter_mut().enumerate() {
        let r = resp.column(j);
        let nk: f64 = r.sum();
        c.weight = nk / n;
        if nk <= 1e-12 {
            continue;
        }
        for d in 0..p {
            let col = x.column(d);
            let mean = r.iter().zip(col.iter()).map(|(w, v)| w * v).sum::<f64>() / nk;
            let var = r.iter().zip(col.iter()).map(|(w, v)| w * (v - mean).powi(2)).sum::<f64>() / nk;
            c.mean[d] = mean;
            c.var[d] = var.max(VARIANCE_FLOOR);
        }
    }
}

fn cat_tables(
    d: &TabularDataset,
    rows: &[usize],
    cats: &[usize],
    resp: &Array2<f64>,
    comp: usize,
) -> Vec<Vec<f64>> {
    let x = d.features();
    cats.iter()
        .map(|&c| {
            let size = d.schema().columns[c].categories.len();
            let mut t = vec![0.0; size];
            for (i, &r) in rows.iter().enumerate() {
                let v = x[[r, c]];
                if v != UNKNOWN_CATEGORY {
                    t[v as usize] += resp[[i, comp]];
                }
            }
            let s: f64 = t.iter().sum();
            if s > 0.0 {
                t.iter_mut().for_each(|v| *v /= s);
            } else if size > 0 {
                t.iter_mut().for_each(|v| *v = 1.0 / size as f64);
            }
            t
        })
        .collect()
}

/// K distinct rows chosen by D^2 weighting (k-means++ seeding).
fn init_rows(x: &Array2<f64>, k: usize, seed: u64) -> Vec<usize> {
    let n = x.nrows();
    let mut rng = rng_from_seed(seed);
    let mut picks = vec![rng.random_range(0..n)];
    let dist = |a: usize, b: usize| -> f64 { x.row(a).iter().zip(x.row(b).iter()).map(|(u, v)| (u - v).powi(2)).sum() };
    let mut best: Vec<f64> = (0..n).map(|i| dist(i, picks[0])).collect();
    while picks.len() < k {
        let next = match WeightedIndex::new(&best) {
            Ok(w) => w.sample(&mut rng),
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|i| !picks.contains(i)).collect();
                free[sample_indices(&mut rng, free.len(), 1).index(0)]
            }
        };
        picks.push(next);
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(dist(i, next));
        }
        for &p in &picks {
            best[p] = 0.0;
        }
    }
    picks
}

fn fit_class(
    d: &TabularDataset,
    label: u8,
    rows: &[usize],
    nums: &[usize],
    cats: &[usize],
    params: &GmmParams,
    k: usize,
    seed: u64,
) -> ClassMixture {
    let x: Array2<f64> = d
        .features()
        .select(ndarray::Axis(0), rows)
        .select(ndarray::Axis(1), nums)
        .as_standard_layout()
        .into_owned();
    let n = rows.len();
    let p = nums.len();
    let mut init_var = vec![VARIANCE_FLOOR; p];
    for (d_, v) in init_var.iter_mut().enumerate() {
        let col = x.column(d_);
        let mean = col.sum() / n as f64;
        *v = (col.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64).max(VARIANCE_FLOOR);
    }
    let picks = init_rows(&x, k, seed);
    let mut comps: Vec<GmmComponent> = picks
        .iter()
        .map(|&i| GmmComponent {
            weight: 1.0 / k as f64,
            mean: x.row(i).to_vec(),
            var: init_var.clone(),
            cat_tables: vec![],
        })
        .collect();
    let mut resp = Array2::<f64>::zeros((n, k));
    let mut trace = vec![e_step(&x, &comps, &mut resp)];
    for _ in 0..params.max_iter {
        m_step(&x, &resp, &mut comps);
        let ll = e_step(&x, &comps, &mut resp);
        let gain = ll - trace[trace.len() - 1];
        trace.push(ll);
        if gain < params.tol {
            break;
        }
    }
    for (j, c) in comps.iter_mut().enumerate() {
        c.cat_tables = cat_tables(d, rows, cats, &resp, j);
    }
    ClassMixture {
        label,
        components: comps,
        loglik_trace: trace,
    }
}

fn labels_present(d: &TabularDataset) -> Vec<u8> {
    let mut v: Vec<u8> = d.labels().to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Fits one mixture per label present in `d`.
///
/// With `cap_components` a label with fewer rows than `n_components` gets
/// one component per row instead of an error.
pub fn fit_gmm_with(d: &TabularDataset, params: &GmmParams, seed: u64, cap_components: bool) -> Result<GmmPerClass> {
    if params.n_components == 0 {
        return Err(OrdError::invalid("n_components must be positive"));
    }
    let schema = d.schema();
    let nums: Vec<usize> = (0..schema.n_features())
        .filter(|&j| schema.columns[j].kind == ColumnKind::Numeric)
        .collect();
    let cats: Vec<usize> = (0..schema.n_features())
        .filter(|&j| schema.columns[j].kind == ColumnKind::Categorical)
        .collect();
    let mut classes = Vec::new();
    for label in labels_present(d) {
        let rows = d.indices_of(label);
        let k = if cap_components {
            params.n_components.min(rows.len())
        } else {
            params.n_components
        };
        if rows.len() < k {
            return Err(OrdError::InsufficientRows {
                label,
                needed: k,
                available: rows.len(),
            });
        }
        classes.push(fit_class(d, label, &rows, &nums, &cats, params, k, crate::seed::derive_seed(seed, "gmm-class", label as u64)));
    }
    Ok(GmmPerClass {
        schema: schema.clone(),
        alphabet: d.alphabet(),
        numeric_cols: nums,
        categorical_cols: cats,
        classes,
    })
}

pub fn fit_gmm(d: &TabularDataset, params: &GmmParams, seed: u64) -> Result<GmmPerClass> {
    fit_gmm_with(d, params, seed, false)
}

impl GmmPerClass {
    pub fn class(&self, label: u8) -> Option<&ClassMixture> {
        self.classes.iter().find(|c| c.label == label)
    }

    /// Raw feature rows (schema order) drawn from the mixture of `label`.
    pub fn sample_features(&self, label: u8, n: usize, seed: u64) -> Result<Array2<f64>> {
        let mix = self
            .class(label)
            .ok_or_else(|| OrdError::invalid(format!("generator was not fitted on label {label}")))?;
        let mut out = Array2::<f64>::zeros((n, self.schema.n_features()));
        if n == 0 {
            return Ok(out);
        }
        let weights: Vec<f64> = mix.components.iter().map(|c| c.weight).collect();
        let pick = WeightedIndex::new(&weights).map_err(|e| OrdError::invalid(format!("mixture weights: {e}")))?;
        let tables: Vec<Vec<Option<WeightedIndex<f64>>>> = mix
            .components
            .iter()
            .map(|c| c.cat_tables.iter().map(|t| WeightedIndex::new(t).ok()).collect())
            .collect();
        let mut rng = child_rng(seed, "gmm-sample", label as u64);
        for i in 0..n {
            let k = pick.sample(&mut rng);
            let c = &mix.components[k];
            for (d, &col) in self.numeric_cols.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                out[[i, col]] = c.mean[d] + c.var[d].sqrt() * z;
            }
            for (t, &col) in self.categorical_cols.iter().enumerate() {
                out[[i, col]] = match &tables[k][t] {
                    Some(w) => w.sample(&mut rng) as f64,
                    None => UNKNOWN_CATEGORY,
                };
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnSchema;

    fn data(x: Array2<f64>, labels: Vec<u8>, cols: Vec<ColumnSchema>) -> TabularDataset {
        let schema = Schema::new(cols, "y", "1").unwrap();
        TabularDataset::new(schema, x, labels, LabelAlphabet::Binary).unwrap()
    }

    fn one_col(values: Vec<f64>) -> TabularDataset {
        let n = values.len();
        data(Array2::from_shape_vec((n, 1), values).unwrap(), vec![0; n], vec![ColumnSchema::numeric("x")])
    }

    #[test]
    fn identical_points_collapse_to_floor() {
        let g = fit_gmm(&one_col(vec![3.5; 20]), &GmmParams { n_components: 1, ..Default::default() }, 0).unwrap();
        let c = &g.classes[0].components[0];
        assert_eq!(c.mean, vec![3.5]);
        assert_eq!(c.var, vec![VARIANCE_FLOOR]);
        assert!((c.weight - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_clusters_recovered() {
        let mut rng = rng_from_seed(5);
        let mut v: Vec<f64> = (0..200).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
        v.extend((0..200).map(|_| 10.0 + 0.5 * rng.sample::<f64, _>(StandardNormal)));
        // oracle: the sample mean of each generated cluster
        let m0 = v[..200].iter().sum::<f64>() / 200.0;
        let m1 = v[200..].iter().sum::<f64>() / 200.0;
        let g = fit_gmm(&one_col(v), &GmmParams { n_components: 2, ..Default::default() }, 3).unwrap();
        let mut means: Vec<f64> = g.classes[0].components.iter().map(|c| c.mean[0]).collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] - m0).abs() < 0.2 && (means[1] - m1).abs() < 0.2, "{means:?}");
        assert!(means[0].abs() < 0.2 && (means[1] - 10.0).abs() < 0.2);
    }

    #[test]
    fn trace_monotone_and_matches_stored_parameters() {
        let mut rng = rng_from_seed(11);
        for case in 0..50 {
            let n = rng.random_range(20..80);
            let p = rng.random_range(1..4);
            let x = Array2::from_shape_fn((n, p), |(i, _)| (i % 3) as f64 * 4.0 + rng.sample::<f64, _>(StandardNormal));
            let cols = (0..p).map(|j| ColumnSchema::numeric(format!("x{j}"))).collect();
            let d = data(x.clone(), vec![0; n], cols);
            let k = rng.random_range(1..5);
            let g = fit_gmm(&d, &GmmParams { n_components: k, ..Default::default() }, case).unwrap();
            let mix = &g.classes[0];
            for w in mix.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "case {case}: {} -> {}", w[0], w[1]);
            }
            let recomputed = mix.mean_log_likelihood(x.view());
            assert!((recomputed - mix.loglik_trace.last().unwrap()).abs() < 1e-9);
            let wsum: f64 = mix.components.iter().map(|c| c.weight).sum();
            assert!((wsum - 1.0).abs() < 1e-9);
            assert!(mix.components.iter().all(|c| c.var.iter().all(|&v| v >= VARIANCE_FLOOR)));
        }
    }

    #[test]
    fn sample_mean_of_single_gaussian() {
        let mut rng = rng_from_seed(8);
        let v: Vec<f64> = (0..5000).map(|_| 5.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        let g = fit_gmm(&one_col(v), &GmmParams { n_components: 1, ..Default::default() }, 1).unwrap();
        let s = g.sample_features(0, 10_000, 4).unwrap();
        let mean = s.column(0).sum() / 10_000.0;
        assert!((mean - 5.0).abs() < 0.05, "{mean}");
        assert_eq!(g.sample_features(0, 0, 4).unwrap().nrows(), 0);
        assert!(g.sample_features(1, 5, 4).is_err());
        assert_eq!(g.sample_features(0, 50, 9).unwrap(), g.sample_features(0, 50, 9).unwrap());
    }

    #[test]
    fn too_few_rows_is_an_error_unless_capped() {
        let d = one_col(vec![1.0, 2.0, 3.0]);
        let p = GmmParams::default();
        assert!(matches!(fit_gmm(&d, &p, 0), Err(OrdError::InsufficientRows { needed: 8, available: 3, .. })));
        assert_eq!(fit_gmm_with(&d, &p, 0, true).unwrap().classes[0].components.len(), 3);
    }

    #[test]
    fn categorical_tables_are_distributions() {
        let cats = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let x = Array2::from_shape_fn((30, 2), |(i, j)| if j == 0 { i as f64 } else { (i % 2) as f64 });
        let d = data(x, vec![0; 30], vec![ColumnSchema::numeric("n"), ColumnSchema::categorical("c", cats)]);
        let g = fit_gmm(&d, &GmmParams { n_components: 2, ..Default::default() }, 0).unwrap();
        for c in &g.classes[0].components {
            assert!((c.cat_tables[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(c.cat_tables[0][2] == 0.0);
        }
        let s = g.sample_features(0, 200, 1).unwrap();
        assert!(s.column(1).iter().all(|&v| v == 0.0 || v == 1.0));
    }
}
