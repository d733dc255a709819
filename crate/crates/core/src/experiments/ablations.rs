use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{LoadedData, Mode, PipelineConfig};
use super::pipeline::{build_training_set, classifier_seed, evaluate, prepare_split, run_arms, Arm, PreparedSplit, Recipe};
use super::report::{Cell, EvalReport};
use crate::dataset::{stratified_split, SplitSpec, MINORITY};
use crate::error::{OrdError, Result};
use crate::learners::{fit_learner, LearnerKind};
use crate::metrics::{threshold_sweep, ScoredPredictions};
use crate::overlap::{score_majority, select_tau_from_scores};
use crate::seed::derive_seed;

fn arm(name: &str, recipe: Recipe, cfg: &PipelineConfig) -> Arm {
    Arm {
        name: name.to_string(),
        recipe,
        augment_real_minority: cfg.augment_real_minority,
        augment_real_majority: cfg.augment_real_majority,
        tau: None,
    }
}

/// Real D0 + D1 against real D00 + D1, no generator involved.
pub fn ablate_overlap_removal(cfg: &PipelineConfig, loaded: &LoadedData) -> Result<EvalReport> {
    run_arms(
        cfg,
        loaded,
        &[arm("full", Recipe::RealFull, cfg), arm("overlap_removed", Recipe::RealOverlapRemoved, cfg)],
    )
}

/// Overlap detection before synthesis (the ORD pipeline) against after it.
pub fn ablate_before_after(cfg: &PipelineConfig, loaded: &LoadedData) -> Result<EvalReport> {
    run_arms(
        cfg,
        loaded,
        &[
            arm("before_synthesis", Recipe::Synthetic(Mode::Ord), cfg),
            arm("after_synthesis", Recipe::Synthetic(Mode::OrdAfterSynthesis), cfg),
        ],
    )
}

/// ORD training sets with and without real rows mixed in.
pub fn ablate_augmentation(cfg: &PipelineConfig, loaded: &LoadedData) -> Result<EvalReport> {
    let base = |name: &str, d1: bool, d0: Option<usize>| Arm {
        name: name.to_string(),
        recipe: Recipe::Synthetic(Mode::Ord),
        augment_real_minority: d1,
        augment_real_majority: d0,
        tau: None,
    };
    let mut arms = vec![base("synthetic", false, None), base("synthetic+real_minority", true, None)];
    if let Some(m) = cfg.augment_real_majority {
        arms.push(base("synthetic+real_minority+real_majority", true, Some(m)));
    }
    run_arms(cfg, loaded, &arms)
}

/// ORD efficacy at each threshold of `grid`.
pub fn sweep_tau_efficacy(cfg: &PipelineConfig, loaded: &LoadedData, grid: &[f64]) -> Result<EvalReport> {
    if grid.is_empty() {
        return Err(OrdError::invalid("tau grid is empty"));
    }
    let arms: Vec<Arm> = grid
        .iter()
        .map(|&t| Arm {
            tau: Some(t),
            ..arm(&format!("ord_tau_{t:.2}"), Recipe::Synthetic(Mode::Ord), cfg)
        })
        .collect();
    run_arms(cfg, loaded, &arms)
}

fn validation_split(split: &PreparedSplit, seed: u64) -> Result<PreparedSplit> {
    let per_class = (split.train.count_label(MINORITY) / 5).max(1);
    let (fit, val) = stratified_split(
        &split.train,
        SplitSpec {
            seed: derive_seed(seed, "validation", 0),
            test_per_class: per_class,
            stratified: true,
        },
    )?;
    Ok(PreparedSplit {
        train: fit,
        test: val,
        fresh_test: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftChoice {
    pub seed: u64,
    pub classifier: LearnerKind,
    pub threshold: f64,
    pub validation_macro: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryShiftReport {
    pub report: EvalReport,
    pub thresholds: Vec<ShiftChoice>,
}

/// Default decision-threshold grid for the boundary shifter: 0.01 to 0.99.
pub fn shift_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// Classifiers trained on real imbalanced data, evaluated at 0.5 and at the
/// validation-optimal threshold, next to the ORD pipeline.
pub fn boundary_shift(cfg: &PipelineConfig, loaded: &LoadedData, grid: &[f64]) -> Result<BoundaryShiftReport> {
    cfg.validate()?;
    let units: Vec<(u64, LearnerKind)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.classifiers.iter().map(move |&k| (s, k)))
        .collect();
    let results: Vec<(Cell, Cell, ShiftChoice)> = units
        .par_iter()
        .map(|&(seed, kind)| {
            let wrap = |e: OrdError| OrdError::ExperimentCell {
                mode: "boundary_shift".into(),
                classifier: kind.name().into(),
                seed,
                source: Box::new(e),
            };
            let split = prepare_split(cfg, loaded, seed).map_err(wrap)?;
            let inner = validation_split(&split, seed).map_err(wrap)?;
            let model = fit_learner(kind, &inner.train, &cfg.learner_params, classifier_seed(seed, kind)).map_err(wrap)?;
            let val_scores: Vec<f64> = model.predict_proba(&inner.test).map_err(wrap)?.iter().map(|p| p[1]).collect();
            let sweep = threshold_sweep(&ScoredPredictions::new(inner.test.binary_labels(), val_scores).map_err(wrap)?, grid).map_err(wrap)?;
            let at = |t: f64, mode: &str| -> Result<Cell> {
                Ok(Cell {
                    mode: mode.into(),
                    classifier: kind,
                    seed,
                    metrics: evaluate(&model, &split.test, t)?,
                })
            };
            Ok((
                at(0.5, "real_imbalanced").map_err(wrap)?,
                at(sweep.best_threshold, "boundary_shift").map_err(wrap)?,
                ShiftChoice {
                    seed,
                    classifier: kind,
                    threshold: sweep.best_threshold,
                    validation_macro: sweep.best_score,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let ord = run_arms(cfg, loaded, &[Arm::from_mode(Mode::Ord, cfg)])?;
    let order = |cells: Vec<Cell>| -> Vec<Cell> {
        let mut out = vec![];
        for &k in &cfg.classifiers {
            out.extend(cells.iter().filter(|c| c.classifier == k).cloned());
        }
        out
    };
    let mut cells = order(results.iter().map(|r| r.0.clone()).collect());
    cells.extend(order(results.iter().map(|r| r.1.clone()).collect()));
    cells.extend(ord.cells);
    Ok(BoundaryShiftReport {
        report: EvalReport {
            cells,
            synthesis: ord.synthesis,
            hygiene: ord.hygiene,
        },
        thresholds: results.into_iter().map(|r| r.2).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RSelectionRow {
    pub r_percent: f64,
    pub seed: u64,
    pub tau: f64,
    pub target: usize,
    pub validation_macro: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSelection {
    pub best_r: f64,
    pub rows: Vec<RSelectionRow>,
}

/// Picks r% by validation efficacy of the ORD pipeline with `kind`.
///
/// For each seed the training data is split once more; the overlap scores on
/// the inner training part are shared by every r. Ties go to the smaller r.
pub fn select_r_by_validation(cfg: &PipelineConfig, loaded: &LoadedData, candidates: &[f64], kind: LearnerKind) -> Result<RSelection> {
    if candidates.is_empty() {
        return Err(OrdError::invalid("no r candidates"));
    }
    let grid = crate::overlap::TAU_GRID;
    let per_seed: Vec<Vec<RSelectionRow>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let split = prepare_split(cfg, loaded, seed)?;
            let inner = validation_split(&split, seed)?;
            let mut ocfg = cfg.resolved_overlap();
            ocfg.seed = derive_seed(seed, "overlap", 0);
            let scores = score_majority(&inner.train, &ocfg)?;
            candidates
                .iter()
                .map(|&r| {
                    let sel = select_tau_from_scores(&scores, ocfg.strict, &grid, r)?;
                    let a = Arm {
                        tau: Some(sel.tau),
                        ..Arm::from_mode(Mode::Ord, cfg)
                    };
                    let ts = build_training_set(cfg, &a, &inner, seed)?;
                    let model = fit_learner(kind, &ts.data, &cfg.learner_params, classifier_seed(seed, kind))?;
                    Ok(RSelectionRow {
                        r_percent: r,
                        seed,
                        tau: sel.tau,
                        target: sel.target,
                        validation_macro: evaluate(&model, &inner.test, 0.5)?.macro_acc,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<RSelectionRow> = per_seed.into_iter().flatten().collect();
    let mean = |r: f64| {
        let v: Vec<f64> = rows.iter().filter(|x| x.r_percent == r).filter_map(|x| x.validation_macro).collect();
        if v.is_empty() {
            f64::NEG_INFINITY
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let mut best_r = candidates[0];
    for &r in &candidates[1..] {
        let (m, b) = (mean(r), mean(best_r));
        if m > b || (m == b && r < best_r) {
            best_r = r;
        }
    }
    Ok(RSelection { best_r, rows })
}
