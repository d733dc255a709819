//! One-hidden-layer rectifier network with a logistic output unit.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{check_width, sigmoid, softplus, Classifier};
use crate::error::{OrdError, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: usize,
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 32,
            steps: 500,
            learning_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// hidden x input
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_trace: Vec<f64>,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n_inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let a1 = (6.0 / (n_inputs + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + 1) as f64).sqrt();
        let w1 = Array2::from_shape_fn((hidden, n_inputs), |_| rng.random_range(-a1..a1));
        let w2 = Array1::from_shape_fn(hidden, |_| rng.random_range(-a2..a2));
        MlpModel {
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: 0.0,
            loss_trace: Vec::new(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Parameters flattened as `w1` (row-major), `b1`, `w2`, `b2`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.w1.iter().copied().collect();
        v.extend(self.b1.iter());
        v.extend(self.w2.iter());
        v.push(self.b2);
        v
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        let (h, d) = self.w1.dim();
        self.w1 = Array2::from_shape_vec((h, d), v[..h * d].to_vec()).expect("shape");
        self.b1 = Array1::from(v[h * d..h * d + h].to_vec());
        self.w2 = Array1::from(v[h * d + h..h * d + 2 * h].to_vec());
        self.b2 = v[h * d + 2 * h];
    }

    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        check_width(self.w1.ncols(), x)?;
        let hidden = (x.dot(&self.w1.t()) + &self.b1).mapv(|v| v.max(0.0));
        Ok(hidden.dot(&self.w2) + self.b2)
    }
}

/// Mean binary cross-entropy and its gradient, flattened like [`MlpModel::to_flat`].
pub fn mlp_loss_and_grad(model: &MlpModel, x: ArrayView2<'_, f64>, y: &[u8]) -> (f64, Vec<f64>) {
    let n = y.len().max(1) as f64;
    let pre = x.dot(&model.w1.t()) + &model.b1;
    let hidden = pre.mapv(|v| v.max(0.0));
    let z = hidden.dot(&model.w2) + model.b2;
    let mut loss = 0.0;
    let mut dz = Array1::zeros(y.len());
    for i in 0..y.len() {
        let yi = y[i] as f64;
        loss += softplus(z[i]) - yi * z[i];
        dz[i] = (sigmoid(z[i]) - yi) / n;
    }
    loss /= n;
    let g_w2 = hidden.t().dot(&dz);
    let g_b2 = dz.sum();
    let mut d_hidden = dz.insert_axis(Axis(1)).dot(&model.w2.view().insert_axis(Axis(0)));
    ndarray::Zip::from(&mut d_hidden).and(&pre).for_each(|d, &p| {
        if p <= 0.0 {
            *d = 0.0;
        }
    });
    let g_w1 = d_hidden.t().dot(&x);
    let g_b1 = d_hidden.sum_axis(Axis(0));

    let mut g: Vec<f64> = g_w1.iter().copied().collect();
    g.extend(g_b1.iter());
    g.extend(g_w2.iter());
    g.push(g_b2);
    (loss, g)
}

pub fn fit_mlp(x: ArrayView2<'_, f64>, y: &[u8], params: &MlpParams, seed: u64) -> Result<MlpModel> {
    if y.is_empty() || x.nrows() != y.len() {
        return Err(OrdError::invalid("MLP needs matching non-empty X and y"));
    }
    let mut model = MlpModel::init(x.ncols(), params.hidden.max(1), seed);
    let mut flat = model.to_flat();
    let mut trace = Vec::with_capacity(params.steps + 1);
    for s in 0..=params.steps {
        let (loss, grad) = mlp_loss_and_grad(&model, x, y);
        if !loss.is_finite() {
            return Err(OrdError::NonFiniteLoss { model: "mlp", step: s });
        }
        trace.push(loss);
        if s == params.steps {
            break;
        }
        for (p, g) in flat.iter_mut().zip(&grad) {
            *p -= params.learning_rate * g;
        }
        model.set_flat(&flat);
    }
    model.loss_trace = trace;
    Ok(model)
}

impl Classifier for MlpModel {
    fn n_features(&self) -> usize {
        self.w1.ncols()
    }

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<[f64; 2]>> {
        Ok(self
            .logits(x)?
            .iter()
            .map(|&z| {
                let p = sigmoid(z);
                [1.0 - p, p]
            })
            .collect())
    }
}
