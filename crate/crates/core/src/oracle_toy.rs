//! Gaussian blob worlds and their closed-form Bayes oracle.
//!
//! Because the generating mixture is known, every synthetic row can be
//! checked against `argmax_y P(x | y) P(y)`, which scores how often a
//! generator emits points with the wrong class.

use std::path::Path;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnSchema, LabelAlphabet, Schema, TabularDataset, MINORITY};
use crate::error::{OrdError, Result};
use crate::learners::{fit_learner, LearnerKind, LearnerParams};
use crate::seed::child_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobComponent {
    pub center: Vec<f64>,
    /// Isotropic standard deviation.
    pub sd: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobWorld {
    pub majority: Vec<BlobComponent>,
    pub minority: Vec<BlobComponent>,
    /// `[P(y=0), P(y=1)]` used by the oracle.
    #[serde(default = "equal_priors")]
    pub priors: [f64; 2],
}

fn equal_priors() -> [f64; 2] {
    [0.5, 0.5]
}

/// Splits `total` as evenly as possible, earlier components taking the remainder.
fn even_components(total: usize, centers: &[[f64; 2]], sds: &[f64]) -> Vec<BlobComponent> {
    let k = centers.len();
    centers
        .iter()
        .zip(sds)
        .enumerate()
        .map(|(i, (c, &sd))| BlobComponent {
            center: c.to_vec(),
            sd,
            count: total / k + usize::from(i < total % k),
        })
        .collect()
}

impl BlobWorld {
    /// Four majority blobs (8000 rows) and three minority blobs (500 rows).
    pub fn blobs1() -> Self {
        BlobWorld {
            majority: even_components(
                8000,
                &[[-30.0, -30.0], [20.0, 40.0], [0.0, 0.0], [40.0, -50.0]],
                &[3.0, 4.0, 10.0, 6.0],
            ),
            minority: even_components(500, &[[0.0, -30.0], [25.0, 20.0], [20.0, -50.0]], &[4.0, 6.0, 4.0]),
            priors: equal_priors(),
        }
    }

    /// Three majority blobs (7500 rows) and two minority blobs (200 rows).
    pub fn blobs2() -> Self {
        BlobWorld {
            majority: even_components(7500, &[[10.0, 10.0], [-30.0, -20.0], [40.0, -50.0]], &[10.0, 8.0, 4.0]),
            minority: even_components(200, &[[-30.0, 10.0], [20.0, -20.0]], &[10.0, 4.0]),
            priors: equal_priors(),
        }
    }

    /// `blobs1`, `blobs2`, or a path to a world JSON file.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "blobs1" => Ok(Self::blobs1()),
            "blobs2" => Ok(Self::blobs2()),
            path => Self::from_json_file(path),
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| OrdError::io(path, e))?;
        let world: BlobWorld = serde_json::from_str(&text)?;
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<()> {
        if self.majority.is_empty() || self.minority.is_empty() {
            return Err(OrdError::invalid("each class needs at least one blob"));
        }
        let dim = self.dim();
        for c in self.majority.iter().chain(&self.minority) {
            if c.count == 0 || !(c.sd > 0.0) || c.center.len() != dim || dim == 0 {
                return Err(OrdError::invalid(
                    "blobs need count > 0, sd > 0 and centers of one common dimension",
                ));
            }
        }
        if self.priors.iter().any(|p| !(*p > 0.0)) || (self.priors[0] + self.priors[1] - 1.0).abs() > 1e-9 {
            return Err(OrdError::invalid("priors must be positive and sum to 1"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.majority.first().map_or(0, |c| c.center.len())
    }

    pub fn components(&self, label: u8) -> &[BlobComponent] {
        if label == MINORITY {
            &self.minority
        } else {
            &self.majority
        }
    }

    /// Same blobs with `per_class` rows in each class.
    pub fn balanced(&self, per_class: usize) -> Self {
        let respread = |comps: &[BlobComponent]| {
            let k = comps.len();
            comps
                .iter()
                .enumerate()
                .map(|(i, c)| BlobComponent {
                    count: per_class / k + usize::from(i < per_class % k),
                    ..c.clone()
                })
                .filter(|c| c.count > 0)
                .collect()
        };
        BlobWorld {
            majority: respread(&self.majority),
            minority: respread(&self.minority),
            priors: self.priors,
        }
    }

    pub fn schema(&self) -> Schema {
        let cols = (0..self.dim()).map(|j| ColumnSchema::numeric(format!("x{j}"))).collect();
        let mut s = Schema::new(cols, "class", "1").expect("generated names are unique");
        s.negative_label = Some("0".into());
        s
    }
}

/// Draws every blob's rows; majority rows come first.
pub fn make_blobs(world: &BlobWorld, seed: u64) -> Result<TabularDataset> {
    world.validate()?;
    let dim = world.dim();
    let n: usize = world.majority.iter().chain(&world.minority).map(|c| c.count).sum();
    let mut x = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (label, comps) in [(0u8, &world.majority), (1u8, &world.minority)] {
        for (k, c) in comps.iter().enumerate() {
            let mut rng = child_rng(seed, if label == 0 { "blob-majority" } else { "blob-minority" }, k as u64);
            for _ in 0..c.count {
                for j in 0..dim {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[[row, j]] = c.center[j] + c.sd * z;
                }
                labels.push(label);
                row += 1;
            }
        }
    }
    TabularDataset::new(world.schema(), x, labels, LabelAlphabet::Binary)
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// log P(x | class) for an equal-weight mixture of isotropic Gaussians.
pub fn class_log_density(components: &[BlobComponent], x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let logs: Vec<f64> = components
        .iter()
        .map(|c| {
            let sq: f64 = c.center.iter().zip(x).map(|(m, v)| (v - m).powi(2)).sum();
            -0.5 * d * (2.0 * std::f64::consts::PI * c.sd * c.sd).ln() - sq / (2.0 * c.sd * c.sd)
        })
        .collect();
    log_sum_exp(&logs) - (components.len() as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesDecision {
    pub label: u8,
    /// `[P(y=0|x), P(y=1|x)]`
    pub posterior: [f64; 2],
}

/// Label 1 iff `P(x|1)P(1) > P(x|0)P(0)`; exact ties go to 0.
///
/// Priors need not be normalized.
pub fn bayes_label(world: &BlobWorld, x: &[f64], priors: [f64; 2]) -> BayesDecision {
    let l0 = class_log_density(&world.majority, x) + priors[0].ln();
    let l1 = class_log_density(&world.minority, x) + priors[1].ln();
    let norm = log_sum_exp(&[l0, l1]);
    let p1 = (l1 - norm).exp();
    BayesDecision {
        label: u8::from(l1 > l0),
        posterior: [1.0 - p1, p1],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleScore {
    pub minority_acc: Option<f64>,
    pub majority_acc: Option<f64>,
    /// Class accuracies weighted by the generated class counts.
    pub weighted_avg: Option<f64>,
    pub macro_avg: Option<f64>,
    pub n_minority: usize,
    pub n_majority: usize,
}

impl OracleScore {
    fn from_counts(correct: [usize; 2], total: [usize; 2]) -> Self {
        let acc = |c: usize, t: usize| (t > 0).then(|| c as f64 / t as f64);
        let majority_acc = acc(correct[0], total[0]);
        let minority_acc = acc(correct[1], total[1]);
        let all = total[0] + total[1];
        OracleScore {
            minority_acc,
            majority_acc,
            weighted_avg: (all > 0).then(|| (correct[0] + correct[1]) as f64 / all as f64),
            macro_avg: match (majority_acc, minority_acc) {
                (Some(a), Some(b)) => Some((a + b) / 2.0),
                _ => None,
            },
            n_minority: total[1],
            n_majority: total[0],
        }
    }
}

/// Fraction of rows whose claimed label matches the Bayes label, per class.
/// Overlap labels (2) are scored as majority.
pub fn score_synthetic(synthetic: &TabularDataset, world: &BlobWorld, priors: [f64; 2]) -> Result<OracleScore> {
    if synthetic.n_features() != world.dim() {
        return Err(OrdError::WidthMismatch {
            expected: world.dim(),
            actual: synthetic.n_features(),
        });
    }
    let x = synthetic.features();
    let mut correct = [0usize; 2];
    let mut total = [0usize; 2];
    for (i, claimed) in synthetic.binary_labels().into_iter().enumerate() {
        let row: Vec<f64> = x.row(i).to_vec();
        let oracle = bayes_label(world, &row, priors).label;
        total[claimed as usize] += 1;
        if oracle == claimed {
            correct[claimed as usize] += 1;
        }
    }
    Ok(OracleScore::from_counts(correct, total))
}

/// Accuracy of the synthetic rows' claimed labels against a learner trained
/// on real balanced data.
pub fn trained_oracle_score(
    synthetic: &TabularDataset,
    real_balanced: &TabularDataset,
    kind: LearnerKind,
    params: &LearnerParams,
    seed: u64,
) -> Result<f64> {
    if synthetic.is_empty() {
        return Err(OrdError::invalid("no synthetic rows to score"));
    }
    let oracle = fit_learner(kind, real_balanced, params, seed)?;
    let p = oracle.predict_proba(synthetic)?;
    let claimed = synthetic.binary_labels();
    let agree = p
        .iter()
        .zip(&claimed)
        .filter(|(pi, &c)| u8::from(pi[1] >= 0.5) == c)
        .count();
    Ok(agree as f64 / claimed.len() as f64)
}
