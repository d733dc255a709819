use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_width, sigmoid, softplus, Classifier};
use crate::error::{OrdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub steps: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            steps: 500,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value before each step and after the last one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_trace: Vec<f64>,
}

/// Mean logistic loss plus `l2/2 * |w|^2` (bias unpenalized), and its gradient
/// with respect to `(w, b)`.
pub fn logistic_loss_and_grad(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    w: ArrayView1<'_, f64>,
    b: f64,
    l2: f64,
) -> (f64, Array1<f64>, f64) {
    let n = y.len().max(1) as f64;
    let z = x.dot(&w) + b;
    let mut loss = 0.0;
    let mut resid = Array1::zeros(y.len());
    for i in 0..y.len() {
        let yi = y[i] as f64;
        loss += softplus(z[i]) - yi * z[i];
        resid[i] = sigmoid(z[i]) - yi;
    }
    loss = loss / n + 0.5 * l2 * w.dot(&w);
    let grad_w = x.t().dot(&resid) / n + &w * l2;
    let grad_b = resid.sum() / n;
    (loss, grad_w, grad_b)
}

/// Full-batch gradient descent.
///
/// The step is capped at `1/L`, with `L = mean(|x|^2 + 1)/4 + l2` bounding the
/// gradient's Lipschitz constant, so the objective never increases.
pub fn fit_logistic(x: ArrayView2<'_, f64>, y: &[u8], params: &LogisticParams) -> Result<LinearModel> {
    if y.is_empty() || x.nrows() != y.len() {
        return Err(OrdError::invalid("logistic regression needs matching non-empty X and y"));
    }
    let n = y.len() as f64;
    let sq_norm: f64 = x.iter().map(|v| v * v).sum::<f64>() / n + 1.0;
    let lipschitz = 0.25 * sq_norm + params.l2;
    let step = params.learning_rate.min(1.0 / lipschitz);

    let mut w = Array1::zeros(x.ncols());
    let mut b = 0.0;
    let mut trace = Vec::with_capacity(params.steps + 1);
    for s in 0..=params.steps {
        let (loss, gw, gb) = logistic_loss_and_grad(x, y, w.view(), b, params.l2);
        if !loss.is_finite() {
            return Err(OrdError::NonFiniteLoss { model: "logistic", step: s });
        }
        trace.push(loss);
        if s == params.steps {
            break;
        }
        w.scaled_add(-step, &gw);
        b -= step * gb;
    }
    Ok(LinearModel {
        weights: w.to_vec(),
        bias: b,
        loss_trace: trace,
    })
}

impl LinearModel {
    pub fn raw_score(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        check_width(self.weights.len(), x)?;
        Ok(x.dot(&ArrayView1::from(&self.weights)) + self.bias)
    }
}

impl Classifier for LinearModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<[f64; 2]>> {
        Ok(self
            .raw_score(x)?
            .iter()
            .map(|&z| {
                let p = sigmoid(z);
                [1.0 - p, p]
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::testing::{max_rel_error, random_fixture};
    use ndarray::array;

    #[test]
    fn separable_1d() {
        let x = array![[-1.0], [1.0]];
        let m = fit_logistic(x.view(), &[0, 1], &LogisticParams::default()).unwrap();
        let p = m.predict_proba(x.view()).unwrap();
        assert!(p[0][1] < 0.5 && p[1][1] > 0.5);
    }

    #[test]
    fn raw_score_zero_is_half() {
        let m = LinearModel { weights: vec![0.0], bias: 0.0, loss_trace: vec![] };
        assert_eq!(m.predict_proba(array![[3.0]].view()).unwrap()[0], [0.5, 0.5]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, y) = random_fixture(5, 3, 17);
        let w = array![0.3, -0.7, 1.1];
        let b = 0.2;
        let l2 = 0.05;
        let (_, gw, gb) = logistic_loss_and_grad(x.view(), &y, w.view(), b, l2);
        let h = 1e-5;
        let mut numeric = Vec::new();
        for j in 0..3 {
            let mut wp = w.clone();
            wp[j] += h;
            let mut wm = w.clone();
            wm[j] -= h;
            let lp = logistic_loss_and_grad(x.view(), &y, wp.view(), b, l2).0;
            let lm = logistic_loss_and_grad(x.view(), &y, wm.view(), b, l2).0;
            numeric.push((lp - lm) / (2.0 * h));
        }
        let lp = logistic_loss_and_grad(x.view(), &y, w.view(), b + h, l2).0;
        let lm = logistic_loss_and_grad(x.view(), &y, w.view(), b - h, l2).0;
        numeric.push((lp - lm) / (2.0 * h));
        let mut analytic = gw.to_vec();
        analytic.push(gb);
        assert!(max_rel_error(&analytic, &numeric) < 1e-4);
    }

    #[test]
    fn huge_ridge_shrinks_weights() {
        let (x, y) = random_fixture(40, 3, 3);
        let m = fit_logistic(x.view(), &y, &LogisticParams { l2: 1e6, ..Default::default() }).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-3));
    }

    #[test]
    fn loss_trace_non_increasing() {
        for seed in 0..10 {
            let (x, y) = random_fixture(50, 4, seed);
            let m = fit_logistic(x.view(), &y, &LogisticParams::default()).unwrap();
            for w in m.loss_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }
}
