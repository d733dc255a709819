//! k-fold random-forest overlap detection and ternary relabeling.
//!
//! Majority rows are split into k folds. For each fold a forest is trained on
//! the other folds plus every minority row and then scores the held-out fold:
//! a row's confidence is the forest's mean class-0 probability. Rows with
//! confidence at or below `1 - tau` are relabeled as overlapping majority (2).
//!
//! Confidences do not depend on `tau`, so [`score_majority`] runs once and
//! any number of thresholds can be applied to its output.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabelAlphabet, TabularDataset, MAJORITY, MINORITY, OVERLAP};
use crate::error::{OrdError, Result};
use crate::learners::{fit_forest, ForestParams};
use crate::seed::{derive_seed, rng_from_seed};

/// Threshold used on real datasets.
pub const TAU_REAL: f64 = 0.3;
/// Threshold used on the 2D toy worlds.
pub const TAU_TOY: f64 = 0.2;
pub const TAU_GRID: [f64; 6] = [0.20, 0.25, 0.30, 0.35, 0.40, 0.45];
/// Candidate r% values for the overlap-size cap.
pub const R_CANDIDATES: [f64; 4] = [3.0, 5.0, 7.0, 9.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverlapConfig {
    pub tau: f64,
    pub k_folds: usize,
    pub n_trees: usize,
    pub seed: u64,
    /// Use `confidence < 1 - tau` instead of `<=`.
    pub strict: bool,
    pub max_depth: usize,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig {
            tau: TAU_REAL,
            k_folds: 2,
            n_trees: 50,
            seed: 0,
            strict: false,
            max_depth: 12,
        }
    }
}

impl OverlapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(OrdError::invalid(format!("tau {} outside [0, 1]", self.tau)));
        }
        if self.k_folds < 2 {
            return Err(OrdError::invalid("k_folds must be at least 2"));
        }
        if self.n_trees == 0 {
            return Err(OrdError::invalid("n_trees must be positive"));
        }
        Ok(())
    }

    fn forest_params(&self) -> ForestParams {
        let mut p = ForestParams::with_trees(self.n_trees);
        p.tree.max_depth = self.max_depth;
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// D00
    ClearMajority,
    /// D01
    OverlapMajority,
}

/// Which rows each fold's forest was trained on and which it scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldProvenance {
    pub fold: usize,
    pub scored: Vec<usize>,
    pub trained_on: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorityScore {
    pub row: usize,
    pub fold: usize,
    pub confidence: f64,
}

/// Threshold-independent output of the k-fold scoring pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapScores {
    /// One entry per majority row, ascending by row index.
    pub majority: Vec<MajorityScore>,
    pub n_minority: usize,
    #[serde(skip)]
    pub folds: Vec<FoldProvenance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowAssignment {
    pub row: usize,
    pub fold: usize,
    pub confidence: f64,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    pub tau: f64,
    pub strict: bool,
    pub n_clear: usize,
    pub n_overlap: usize,
    pub n_minority: usize,
    pub rows: Vec<RowAssignment>,
    #[serde(skip)]
    pub folds: Vec<FoldProvenance>,
}

impl OverlapResult {
    pub fn overlap_rows(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.assignment == Assignment::OverlapMajority)
            .map(|r| r.row)
            .collect()
    }

    pub fn clear_rows(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.assignment == Assignment::ClearMajority)
            .map(|r| r.row)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Partitions `rows` into `k` folds whose sizes differ by at most one.
/// Each fold is returned in ascending order.
pub fn kfold_partition(rows: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > rows.len() {
        return Err(OrdError::invalid(format!("cannot split {} rows into {k} folds", rows.len())));
    }
    let mut shuffled = rows.to_vec();
    shuffled.shuffle(&mut rng_from_seed(seed));
    let base = rows.len() / k;
    let extra = rows.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for j in 0..k {
        let len = base + usize::from(j < extra);
        let mut fold = shuffled[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Confidence of every majority row from the forest that held it out.
pub fn score_majority(d: &TabularDataset, cfg: &OverlapConfig) -> Result<OverlapScores> {
    cfg.validate()?;
    if d.labels().iter().any(|&l| l > MINORITY) {
        return Err(OrdError::invalid("overlap detection expects binary labels"));
    }
    let majority = d.indices_of(MAJORITY);
    let minority = d.indices_of(MINORITY);
    if minority.is_empty() {
        return Err(OrdError::invalid(
            "degenerate folds: no minority rows, every forest would see one class only",
        ));
    }
    if majority.len() < cfg.k_folds {
        return Err(OrdError::invalid(format!(
            "{} majority rows cannot fill {} folds",
            majority.len(),
            cfg.k_folds
        )));
    }
    let folds = kfold_partition(&majority, cfg.k_folds, derive_seed(cfg.seed, "overlap-folds", 0))?;
    let forest = cfg.forest_params();
    let x = d.features();

    let per_fold: Vec<(FoldProvenance, Vec<f64>)> = folds
        .par_iter()
        .enumerate()
        .map(|(j, held_out)| {
            let mut trained_on: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .flat_map(|(_, f)| f.iter().copied())
                .chain(minority.iter().copied())
                .collect();
            trained_on.sort_unstable();
            let train = d.subset(&trained_on);
            let rf = fit_forest(train.features(), train.labels(), &forest, derive_seed(cfg.seed, "overlap-forest", j as u64))?;
            let scored_x = x.select(ndarray::Axis(0), held_out);
            let conf = rf.class0_confidence(scored_x.view())?;
            Ok((
                FoldProvenance {
                    fold: j,
                    scored: held_out.clone(),
                    trained_on,
                },
                conf,
            ))
        })
        .collect::<Result<_>>()?;

    let mut scores = Vec::with_capacity(majority.len());
    let mut provenance = Vec::with_capacity(per_fold.len());
    for (prov, conf) in per_fold {
        for (&row, &c) in prov.scored.iter().zip(&conf) {
            scores.push(MajorityScore {
                row,
                fold: prov.fold,
                confidence: c,
            });
        }
        provenance.push(prov);
    }
    scores.sort_unstable_by_key(|s| s.row);
    Ok(OverlapScores {
        majority: scores,
        n_minority: minority.len(),
        folds: provenance,
    })
}

pub fn is_overlap(confidence: f64, tau: f64, strict: bool) -> bool {
    let bound = 1.0 - tau;
    if strict {
        confidence < bound
    } else {
        confidence <= bound
    }
}

impl OverlapScores {
    pub fn assign(&self, tau: f64, strict: bool) -> OverlapResult {
        let rows: Vec<RowAssignment> = self
            .majority
            .iter()
            .map(|s| RowAssignment {
                row: s.row,
                fold: s.fold,
                confidence: s.confidence,
                assignment: if is_overlap(s.confidence, tau, strict) {
                    Assignment::OverlapMajority
                } else {
                    Assignment::ClearMajority
                },
            })
            .collect();
        let n_overlap = rows.iter().filter(|r| r.assignment == Assignment::OverlapMajority).count();
        OverlapResult {
            tau,
            strict,
            n_clear: rows.len() - n_overlap,
            n_overlap,
            n_minority: self.n_minority,
            rows,
            folds: self.folds.clone(),
        }
    }

    pub fn count_overlap(&self, tau: f64, strict: bool) -> usize {
        self.majority
            .iter()
            .filter(|s| is_overlap(s.confidence, tau, strict))
            .count()
    }
}

/// Copies `d` with flagged majority rows labeled 2; features and minority rows are untouched.
pub fn relabel(d: &TabularDataset, result: &OverlapResult) -> Result<TabularDataset> {
    let mut labels = d.labels().to_vec();
    for r in &result.rows {
        labels[r.row] = match r.assignment {
            Assignment::ClearMajority => MAJORITY,
            Assignment::OverlapMajority => OVERLAP,
        };
    }
    d.with_labels(labels, LabelAlphabet::Ternary)
}

pub fn detect_overlap(d: &TabularDataset, cfg: &OverlapConfig) -> Result<(TabularDataset, OverlapResult)> {
    let scores = score_majority(d, cfg)?;
    let result = scores.assign(cfg.tau, cfg.strict);
    Ok((relabel(d, &result)?, result))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSelection {
    pub tau: f64,
    /// min(|D1|, round(r% of |D0|))
    pub target: usize,
    /// (tau, |D01|) in grid order.
    pub counts: Vec<(f64, usize)>,
}

/// Grid threshold whose overlap count is closest to `min(|D1|, r% * |D0|)`; ties pick the smaller tau.
pub fn select_tau_from_scores(scores: &OverlapScores, strict: bool, grid: &[f64], r_percent: f64) -> Result<TauSelection> {
    if grid.is_empty() {
        return Err(OrdError::invalid("tau grid is empty"));
    }
    let n_major = scores.majority.len();
    let target = scores
        .n_minority
        .min((r_percent / 100.0 * n_major as f64).round() as usize);
    let counts: Vec<(f64, usize)> = grid.iter().map(|&t| (t, scores.count_overlap(t, strict))).collect();
    let &(tau, _) = counts
        .iter()
        .min_by(|a, b| {
            a.1.abs_diff(target)
                .cmp(&b.1.abs_diff(target))
                .then(a.0.total_cmp(&b.0))
        })
        .expect("non-empty grid");
    Ok(TauSelection { tau, target, counts })
}

pub fn select_tau(d: &TabularDataset, cfg: &OverlapConfig, grid: &[f64], r_percent: f64) -> Result<TauSelection> {
    if grid.is_empty() {
        return Err(OrdError::invalid("tau grid is empty"));
    }
    let scores = score_majority(d, cfg)?;
    select_tau_from_scores(&scores, cfg.strict, grid, r_percent)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSweepPoint {
    pub tau: f64,
    pub ternary: TabularDataset,
    pub result: OverlapResult,
}

/// Relabels `d` at every grid threshold from one shared scoring pass.
pub fn sweep_tau(d: &TabularDataset, cfg: &OverlapConfig, grid: &[f64]) -> Result<Vec<TauSweepPoint>> {
    if grid.is_empty() {
        return Err(OrdError::invalid("tau grid is empty"));
    }
    let scores = score_majority(d, cfg)?;
    grid.iter()
        .map(|&tau| {
            let result = scores.assign(tau, cfg.strict);
            Ok(TauSweepPoint {
                tau,
                ternary: relabel(d, &result)?,
                result,
            })
        })
        .collect()
}
