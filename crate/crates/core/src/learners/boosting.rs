//! Discrete AdaBoost on stumps and gradient boosting with Newton leaves.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::tree::{grow, validate_xyw, Columns, DecisionTree, GiniTarget, MaxFeatures, RegressionTarget, TreeParams};
use super::{check_width, logistic_loss, sigmoid, Classifier};
use crate::error::Result;

/// Stage weight used when a stump classifies every row correctly.
pub const ADABOOST_ALPHA_CAP: f64 = 13.815510557964274; // ln(1e6)

const PRIOR_LOGIT_CLAMP: f64 = 10.0;
const HESSIAN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostKind {
    AdaBoost,
    GradientBoost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub tree: DecisionTree,
    /// alpha for AdaBoost, shrinkage for gradient boosting.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub kind: BoostKind,
    pub stages: Vec<Stage>,
    /// Prior log-odds (gradient boosting) or prior minority fraction (AdaBoost).
    pub base_score: f64,
    pub n_features: usize,
    /// AdaBoost: weighted error per accepted round. Gradient boosting: mean
    /// logistic loss before the first round and after each round.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
    #[serde(skip)]
    sample_weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_rounds: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams { n_rounds: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_rounds: 200,
            shrinkage: 0.1,
            max_depth: 3,
            min_leaf: 2,
        }
    }
}

fn stump_sign(tree: &DecisionTree, row: ndarray::ArrayView1<'_, f64>) -> f64 {
    if tree.leaf_value(row)[1] > 0.5 {
        1.0
    } else {
        -1.0
    }
}

pub fn fit_adaboost(x: ArrayView2<'_, f64>, y: &[u8], params: &AdaBoostParams) -> Result<BoostedEnsemble> {
    let n = y.len();
    let mut w = vec![1.0 / n.max(1) as f64; n];
    validate_xyw(x, y, &w)?;
    let cols = Columns::new(x);
    let sign: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let stump = TreeParams {
        max_depth: 1,
        min_leaf: 1,
        max_features: MaxFeatures::All,
    };

    let mut stages = Vec::new();
    let mut errors = Vec::new();
    for _ in 0..params.n_rounds {
        let target = GiniTarget { labels: y, weights: &w };
        let tree = grow(&cols, (0..n).collect(), &target, &stump, None);
        let h: Vec<f64> = x.rows().into_iter().map(|r| stump_sign(&tree, r)).collect();
        let err: f64 = (0..n).filter(|&i| h[i] != sign[i]).map(|i| w[i]).sum();
        if err >= 0.5 {
            break;
        }
        let alpha = if err <= 0.0 {
            ADABOOST_ALPHA_CAP
        } else {
            (0.5 * ((1.0 - err) / err).ln()).min(ADABOOST_ALPHA_CAP)
        };
        stages.push(Stage { tree, weight: alpha });
        errors.push(err);
        if err <= 0.0 {
            break;
        }
        for i in 0..n {
            w[i] *= (-alpha * sign[i] * h[i]).exp();
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= total);
    }

    let prior = y.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
    Ok(BoostedEnsemble {
        kind: BoostKind::AdaBoost,
        stages,
        base_score: prior,
        n_features: x.ncols(),
        trace: errors,
        sample_weights: w,
    })
}

pub fn fit_gbdt(x: ArrayView2<'_, f64>, y: &[u8], params: &GbdtParams) -> Result<BoostedEnsemble> {
    let n = y.len();
    validate_xyw(x, y, &vec![1.0; n])?;
    let positives = y.iter().filter(|&&l| l == 1).count();
    let base = if positives == 0 {
        -PRIOR_LOGIT_CLAMP
    } else if positives == n {
        PRIOR_LOGIT_CLAMP
    } else {
        let p = positives as f64 / n as f64;
        (p / (1.0 - p)).ln().clamp(-PRIOR_LOGIT_CLAMP, PRIOR_LOGIT_CLAMP)
    };
    let yf: Vec<f64> = y.iter().map(|&l| l as f64).collect();
    let mut raw = vec![base; n];
    let mut trace = vec![logistic_loss(&yf, &raw)];
    let mut stages = Vec::new();

    // single-class data: prior-only model
    if positives > 0 && positives < n {
        let cols = Columns::new(x);
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            max_features: MaxFeatures::All,
        };
        for _ in 0..params.n_rounds {
            let p: Vec<f64> = raw.iter().map(|&z| sigmoid(z)).collect();
            let resid: Vec<f64> = (0..n).map(|i| yf[i] - p[i]).collect();
            let hess: Vec<f64> = p.iter().map(|&pi| pi * (1.0 - pi)).collect();
            let target = RegressionTarget {
                targets: &resid,
                leaf_fn: |rows: &[usize]| {
                    let g: f64 = rows.iter().map(|&i| resid[i]).sum();
                    let h: f64 = rows.iter().map(|&i| hess[i]).sum();
                    g / h.max(HESSIAN_FLOOR)
                },
            };
            let tree = grow(&cols, (0..n).collect(), &target, &tree_params, None);
            for (i, row) in x.rows().into_iter().enumerate() {
                raw[i] += params.shrinkage * tree.predict_value(row);
            }
            trace.push(logistic_loss(&yf, &raw));
            stages.push(Stage {
                tree,
                weight: params.shrinkage,
            });
        }
    }

    Ok(BoostedEnsemble {
        kind: BoostKind::GradientBoost,
        stages,
        base_score: base,
        n_features: x.ncols(),
        trace,
        sample_weights: Vec::new(),
    })
}

impl BoostedEnsemble {
    /// AdaBoost: sum of alpha * (+-1). Gradient boosting: log-odds.
    pub fn raw_score(&self, row: ndarray::ArrayView1<'_, f64>) -> f64 {
        match self.kind {
            BoostKind::AdaBoost => self.stages.iter().map(|s| s.weight * stump_sign(&s.tree, row)).sum(),
            BoostKind::GradientBoost => {
                self.base_score
                    + self
                        .stages
                        .iter()
                        .map(|s| s.weight * s.tree.predict_value(row))
                        .sum::<f64>()
            }
        }
    }

    /// Row weights after the last accepted AdaBoost round.
    pub fn sample_weights(&self) -> &[f64] {
        &self.sample_weights
    }
}

impl Classifier for BoostedEnsemble {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<[f64; 2]>> {
        check_width(self.n_features, x)?;
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                let p = match self.kind {
                    BoostKind::AdaBoost if self.stages.is_empty() => self.base_score,
                    // two-class AdaBoost margin maps to log-odds 2F
                    BoostKind::AdaBoost => sigmoid(2.0 * self.raw_score(row)),
                    BoostKind::GradientBoost => sigmoid(self.raw_score(row)),
                };
                [1.0 - p, p]
            })
            .collect())
    }
}
