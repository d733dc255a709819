//! Evaluation kernels on binary predictions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{OrdError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryConfusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl BinaryConfusion {
    pub fn from_predictions(y_true: &[u8], y_pred: &[u8]) -> Self {
        let mut c = BinaryConfusion::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t == 1, p == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    /// Predicts class 1 iff `score >= threshold`.
    pub fn at_threshold(s: &ScoredPredictions, threshold: f64) -> Self {
        let pred: Vec<u8> = s.scores.iter().map(|&p| u8::from(p >= threshold)).collect();
        Self::from_predictions(&s.labels, &pred)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    /// tp / (tp + fn); absent without minority rows.
    pub minority_acc: Option<f64>,
    /// tn / (tn + fp); absent without majority rows.
    pub majority_acc: Option<f64>,
    pub macro_acc: Option<f64>,
    /// 2tp / (2tp + fp + fn), 0 when the denominator is 0.
    pub f1: f64,
}

pub fn classification_metrics(c: &BinaryConfusion) -> ClassificationMetrics {
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let minority_acc = ratio(c.tp, c.tp + c.fn_);
    let majority_acc = ratio(c.tn, c.tn + c.fp);
    let macro_acc = match (minority_acc, majority_acc) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        _ => None,
    };
    let den = 2 * c.tp + c.fp + c.fn_;
    let f1 = if den == 0 { 0.0 } else { 2.0 * c.tp as f64 / den as f64 };
    ClassificationMetrics {
        minority_acc,
        majority_acc,
        macro_acc,
        f1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPredictions {
    pub labels: Vec<u8>,
    /// Predicted probability of class 1.
    pub scores: Vec<f64>,
}

impl ScoredPredictions {
    pub fn new(labels: Vec<u8>, scores: Vec<f64>) -> Result<Self> {
        if labels.len() != scores.len() {
            return Err(OrdError::invalid("labels and scores differ in length"));
        }
        if scores.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(OrdError::invalid("scores must be probabilities in [0, 1]"));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(OrdError::invalid("labels must be binary"));
        }
        Ok(ScoredPredictions { labels, scores })
    }

    fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (pos, self.labels.len() - pos)
    }
}

/// Mann-Whitney AUC: (concordant pairs + ties / 2) / (n1 * n0).
///
/// Computed from average ranks in O(n log n).
pub fn auc(s: &ScoredPredictions) -> Result<f64> {
    let (n1, n0) = s.class_counts();
    if n1 == 0 || n0 == 0 {
        return Err(OrdError::invalid("AUC needs both classes"));
    }
    let mut order: Vec<usize> = (0..s.scores.len()).collect();
    order.sort_by(|&a, &b| s.scores[a].total_cmp(&s.scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && s.scores[order[j + 1]] == s.scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; the tie group shares its average rank
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| s.labels[k] == 1).count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n1 * (n1 + 1)) as f64 / 2.0;
    Ok(u / (n1 as f64 * n0 as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub best_threshold: f64,
    pub best_score: f64,
    /// (threshold, macro accuracy) in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Macro accuracy for each threshold; ties prefer the threshold closest to
/// 0.5, then the larger one.
pub fn threshold_sweep(s: &ScoredPredictions, grid: &[f64]) -> Result<ThresholdSweep> {
    if grid.is_empty() {
        return Err(OrdError::invalid("threshold grid is empty"));
    }
    let (n1, n0) = s.class_counts();
    if n1 == 0 || n0 == 0 {
        return Err(OrdError::invalid("macro accuracy needs both classes"));
    }
    let curve: Vec<(f64, f64)> = grid
        .iter()
        .map(|&t| {
            let m = classification_metrics(&BinaryConfusion::at_threshold(s, t));
            (t, m.macro_acc.expect("both classes present"))
        })
        .collect();
    let mut best = curve[0];
    for &(t, score) in &curve[1..] {
        let better = if score > best.1 + 1e-12 {
            true
        } else if score >= best.1 - 1e-12 {
            let (dt, db) = ((t - 0.5).abs(), (best.0 - 0.5).abs());
            dt < db || (dt == db && t > best.0)
        } else {
            false
        };
        if better {
            best = (t, score);
        }
    }
    Ok(ThresholdSweep {
        best_threshold: best.0,
        best_score: best.1,
        curve,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TTestDegeneracy {
    /// All differences equal and non-zero: p = 0.
    ZeroVarianceNonzeroMean,
    /// All differences zero: p = 1.
    Identical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t: f64,
    pub df: usize,
    pub two_sided_p: f64,
    pub degenerate: Option<TTestDegeneracy>,
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(OrdError::invalid("paired t-test needs two equal-length samples of size >= 2"));
    }
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let df = n - 1;
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            PairedTTest {
                t: 0.0,
                df,
                two_sided_p: 1.0,
                degenerate: Some(TTestDegeneracy::Identical),
            }
        } else {
            PairedTTest {
                t: f64::INFINITY.copysign(mean),
                df,
                two_sided_p: 0.0,
                degenerate: Some(TTestDegeneracy::ZeroVarianceNonzeroMean),
            }
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| OrdError::invalid(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(PairedTTest {
        t,
        df,
        two_sided_p: p,
        degenerate: None,
    })
}
