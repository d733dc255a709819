//! From-scratch binary classifiers.
//!
//! Tree-based learners consume label-encoded features directly; logistic
//! regression and the MLP see standardized, one-hot encoded inputs. The
//! [`TrainedClassifier`] wrapper hides that difference behind one
//! dataset-level `predict_proba`.

mod boosting;
mod forest;
mod logistic;
mod mlp;
mod tree;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{one_hot, one_hot_width, ScaleTable, TabularDataset};
use crate::error::{OrdError, Result};

pub use boosting::{
    fit_adaboost, fit_gbdt, AdaBoostParams, BoostKind, BoostedEnsemble, GbdtParams, Stage, ADABOOST_ALPHA_CAP,
};
pub use forest::{fit_forest, fit_forest_serial, ForestParams, RandomForest};
pub use logistic::{fit_logistic, logistic_loss_and_grad, LinearModel, LogisticParams};
pub use mlp::{fit_mlp, mlp_loss_and_grad, MlpModel, MlpParams};
pub use tree::{fit_tree, DecisionTree, MaxFeatures, Node, TreeParams};

/// A trained binary model.
pub trait Classifier: Send + Sync {
    fn n_features(&self) -> usize;

    /// `[P(y=0), P(y=1)]` per row.
    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<[f64; 2]>>;
}

pub(crate) fn check_width(expected: usize, x: ArrayView2<'_, f64>) -> Result<()> {
    if x.ncols() != expected {
        return Err(OrdError::WidthMismatch {
            expected,
            actual: x.ncols(),
        });
    }
    Ok(())
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean logistic loss of raw scores.
pub(crate) fn logistic_loss(y: &[f64], raw: &[f64]) -> f64 {
    let n = y.len().max(1) as f64;
    y.iter().zip(raw).map(|(&yi, &z)| softplus(z) - yi * z).sum::<f64>() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Logistic,
    Tree,
    #[serde(rename = "adaboost")]
    AdaBoost,
    Mlp,
    Gbdt,
}

impl LearnerKind {
    /// The four learners averaged into the "Avg of 4" column.
    pub const AVG_OF_FOUR: [LearnerKind; 4] =
        [LearnerKind::Logistic, LearnerKind::Tree, LearnerKind::AdaBoost, LearnerKind::Mlp];

    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::Logistic,
        LearnerKind::Tree,
        LearnerKind::AdaBoost,
        LearnerKind::Mlp,
        LearnerKind::Gbdt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Logistic => "logistic",
            LearnerKind::Tree => "tree",
            LearnerKind::AdaBoost => "adaboost",
            LearnerKind::Mlp => "mlp",
            LearnerKind::Gbdt => "gbdt",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            LearnerKind::Logistic => "Logistic Regression",
            LearnerKind::Tree => "Decision Tree",
            LearnerKind::AdaBoost => "AdaBoost",
            LearnerKind::Mlp => "MLP",
            LearnerKind::Gbdt => "GBDT (XGBoost stand-in)",
        }
    }

    fn needs_encoding(self) -> bool {
        matches!(self, LearnerKind::Logistic | LearnerKind::Mlp)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = OrdError;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| OrdError::invalid(format!("unknown classifier `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    pub tree: TreeParams,
    pub logistic: LogisticParams,
    pub adaboost: AdaBoostParams,
    pub gbdt: GbdtParams,
    pub mlp: MlpParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum Model {
    Tree(DecisionTree),
    Forest(RandomForest),
    Linear(LinearModel),
    Boosted(BoostedEnsemble),
    Mlp(MlpModel),
}

impl Model {
    fn as_classifier(&self) -> &dyn Classifier {
        match self {
            Model::Tree(m) => m,
            Model::Forest(m) => m,
            Model::Linear(m) => m,
            Model::Boosted(m) => m,
            Model::Mlp(m) => m,
        }
    }
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        self.as_classifier().n_features()
    }

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<[f64; 2]>> {
        self.as_classifier().predict_proba(x)
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A model plus the input encoding it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub format_version: u32,
    pub kind: LearnerKind,
    /// Present for learners trained on standardized one-hot inputs.
    pub encoder: Option<ScaleTable>,
    pub model: Model,
}

impl TrainedClassifier {
    fn encode(&self, d: &TabularDataset) -> Result<Array2<f64>> {
        match &self.encoder {
            Some(table) => Ok(one_hot(&table.apply(d)?)),
            None => Ok(d.features().to_owned()),
        }
    }

    pub fn predict_proba(&self, d: &TabularDataset) -> Result<Vec<[f64; 2]>> {
        let x = self.encode(d)?;
        self.model.predict_proba(x.view())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedClassifier = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(OrdError::invalid(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }
}

/// Fits `kind` on the binary view of `train` (overlap labels count as majority).
pub fn fit_learner(kind: LearnerKind, train: &TabularDataset, params: &LearnerParams, seed: u64) -> Result<TrainedClassifier> {
    let y = train.binary_labels();
    let encoder = if kind.needs_encoding() {
        Some(ScaleTable::fit(train)?)
    } else {
        None
    };
    let x = match &encoder {
        Some(t) => {
            let encoded = one_hot(&t.apply(train)?);
            debug_assert_eq!(encoded.ncols(), one_hot_width(train.schema()));
            encoded
        }
        None => train.features().to_owned(),
    };
    let model = match kind {
        LearnerKind::Tree => Model::Tree(fit_tree(x.view(), &y, &vec![1.0; y.len()], &params.tree)?),
        LearnerKind::Logistic => Model::Linear(fit_logistic(x.view(), &y, &params.logistic)?),
        LearnerKind::AdaBoost => Model::Boosted(fit_adaboost(x.view(), &y, &params.adaboost)?),
        LearnerKind::Gbdt => Model::Boosted(fit_gbdt(x.view(), &y, &params.gbdt)?),
        LearnerKind::Mlp => Model::Mlp(fit_mlp(x.view(), &y, &params.mlp, seed)?),
    };
    Ok(TrainedClassifier {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        encoder,
        model,
    })
}

#[cfg(test)]
pub(crate) mod testing {
    use ndarray::Array2;
    use rand::Rng;

    use crate::seed::rng_from_seed;

    /// Gaussian-ish features with labels from a noisy linear rule (both classes present).
    pub fn random_fixture(n: usize, p: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = rng_from_seed(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-2.0..2.0));
        let mut y: Vec<u8> = (0..n)
            .map(|i| {
                let s: f64 = (0..p).map(|j| x[[i, j]] * (j as f64 + 1.0)).sum();
                u8::from(s + rng.random_range(-1.0..1.0) > 0.0)
            })
            .collect();
        y[0] = 0;
        y[n - 1] = 1;
        (x, y)
    }

    pub fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-6))
            .fold(0.0, f64::max)
    }
}
