use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{LoadedData, Mode, PipelineConfig, TestSource};
use super::report::{Cell, CellMetrics, EvalReport, SynthesisRecord};
use crate::dataset::{stratified_split, SplitSpec, TabularDataset, MAJORITY, MINORITY, OVERLAP};
use crate::error::{OrdError, Result};
use crate::generators::fit_generator;
use crate::learners::{fit_learner, LearnerKind, TrainedClassifier};
use crate::metrics::{auc, classification_metrics, BinaryConfusion, ScoredPredictions};
use crate::oracle_toy::{make_blobs, score_synthetic};
use crate::overlap::{detect_overlap, OverlapConfig};
use crate::seed::{child_rng, derive_seed};

/// How one arm assembles its classifier training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    Synthetic(Mode),
    /// Real D0 + D1.
    RealFull,
    /// Real D00 + D1.
    RealOverlapRemoved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub name: String,
    pub recipe: Recipe,
    pub augment_real_minority: bool,
    pub augment_real_majority: Option<usize>,
    /// Overrides the configured overlap threshold.
    pub tau: Option<f64>,
}

impl Arm {
    pub fn from_mode(mode: Mode, cfg: &PipelineConfig) -> Self {
        Arm {
            name: mode.name().to_string(),
            recipe: Recipe::Synthetic(mode),
            augment_real_minority: cfg.augment_real_minority,
            augment_real_majority: cfg.augment_real_majority,
            tau: None,
        }
    }
}

/// Row provenance of one (arm, seed) unit, as original-dataset row ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hygiene {
    /// Empty when the test set is a fresh draw.
    pub test_ids: Vec<usize>,
    pub overlap_ids: Vec<usize>,
    pub generator_ids: Vec<usize>,
    pub classifier_ids: Vec<usize>,
}

impl Hygiene {
    /// True when no test row reached any fitting stage.
    pub fn is_clean(&self) -> bool {
        let test: std::collections::HashSet<usize> = self.test_ids.iter().copied().collect();
        [&self.overlap_ids, &self.generator_ids, &self.classifier_ids]
            .iter()
            .all(|ids| ids.iter().all(|i| !test.contains(i)))
    }
}

#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub train: TabularDataset,
    pub test: TabularDataset,
    pub fresh_test: bool,
}

pub fn prepare_split(cfg: &PipelineConfig, loaded: &LoadedData, seed: u64) -> Result<PreparedSplit> {
    let split_seed = derive_seed(seed, "split", 0);
    match cfg.test_source() {
        TestSource::Holdout => {
            let (train, test) = stratified_split(
                &loaded.data,
                SplitSpec {
                    seed: split_seed,
                    test_per_class: cfg.test.per_class,
                    stratified: true,
                },
            )?;
            Ok(PreparedSplit {
                train,
                test,
                fresh_test: false,
            })
        }
        TestSource::Fresh => {
            let world = loaded
                .world
                .as_ref()
                .ok_or_else(|| OrdError::invalid("a fresh test set needs a toy world"))?;
            let test = make_blobs(&world.balanced(cfg.test.per_class), split_seed)?;
            Ok(PreparedSplit {
                train: loaded.data.clone(),
                test,
                fresh_test: true,
            })
        }
    }
}

/// Classifier training rows for one arm and seed, before the binary view.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub data: TabularDataset,
    /// Synthetic rows drawn (labels 0 and 1 as sampled).
    pub synthetic: Option<TabularDataset>,
    pub n_synth: [usize; 2],
    pub n_overlap: Option<usize>,
    pub overlap_dropped: Option<usize>,
    pub warnings: Vec<String>,
    pub degenerate: bool,
    pub hygiene: Hygiene,
}

fn overlap_cfg(cfg: &PipelineConfig, arm: &Arm, seed: u64) -> OverlapConfig {
    let mut o = cfg.resolved_overlap();
    o.seed = derive_seed(seed, "overlap", 0);
    if let Some(t) = arm.tau {
        o.tau = t;
    }
    o
}

pub fn build_training_set(cfg: &PipelineConfig, arm: &Arm, split: &PreparedSplit, seed: u64) -> Result<TrainingSet> {
    let train = &split.train;
    let n = cfg.synth_per_class.unwrap_or_else(|| train.count_label(MAJORITY));
    let fit_seed = derive_seed(seed, "generator-fit", 0);
    let sample_seed = derive_seed(seed, "generator-sample", 0);
    let train_ids = train.real_ids();
    let mut hygiene = Hygiene {
        test_ids: if split.fresh_test { vec![] } else { split.test.real_ids() },
        overlap_ids: vec![],
        generator_ids: vec![],
        classifier_ids: vec![],
    };
    let mut warnings = vec![];
    let mut parts: Vec<TabularDataset> = vec![];
    let mut synthetic = None;
    let mut n_synth = [0, 0];
    let mut n_overlap = None;
    let mut overlap_dropped = None;

    let draw = |fit_on: &TabularDataset, warnings: &mut Vec<String>| -> Result<TabularDataset> {
        let g = fit_generator(&cfg.generator, fit_on, fit_seed)?;
        let s0 = g.sample(MAJORITY, n, sample_seed)?;
        let s1 = g.sample(MINORITY, n, sample_seed)?;
        warnings.extend(s0.warnings);
        warnings.extend(s1.warnings);
        TabularDataset::concat(&[&s0.data, &s1.data])
    };

    match arm.recipe {
        Recipe::Synthetic(Mode::Baseline) => {
            if n > 0 {
                hygiene.generator_ids = train_ids.clone();
                let s = draw(train, &mut warnings)?;
                synthetic = Some(s.clone());
                parts.push(s);
            }
        }
        Recipe::Synthetic(Mode::Ord) => {
            let (ternary, res) = detect_overlap(train, &overlap_cfg(cfg, arm, seed))?;
            hygiene.overlap_ids = train_ids.clone();
            n_overlap = Some(res.n_overlap);
            if n > 0 {
                hygiene.generator_ids = train_ids.clone();
                let s = draw(&ternary, &mut warnings)?;
                synthetic = Some(s.clone());
                parts.push(s);
            }
        }
        Recipe::Synthetic(Mode::OrdAfterSynthesis) => {
            if n > 0 {
                hygiene.generator_ids = train_ids.clone();
                let s = draw(train, &mut warnings)?;
                let (ternary, res) = detect_overlap(&s, &overlap_cfg(cfg, arm, seed))?;
                n_overlap = Some(res.n_overlap);
                overlap_dropped = Some(res.n_overlap);
                let keep: Vec<usize> = (0..ternary.n_rows()).filter(|&i| ternary.labels()[i] != OVERLAP).collect();
                let kept = s.subset(&keep);
                synthetic = Some(s);
                parts.push(kept);
            }
        }
        Recipe::RealFull => parts.push(train.clone()),
        Recipe::RealOverlapRemoved => {
            let (ternary, res) = detect_overlap(train, &overlap_cfg(cfg, arm, seed))?;
            hygiene.overlap_ids = train_ids.clone();
            n_overlap = Some(res.n_overlap);
            let keep: Vec<usize> = (0..ternary.n_rows()).filter(|&i| ternary.labels()[i] != OVERLAP).collect();
            parts.push(train.subset(&keep));
        }
    }
    if let Some(s) = &synthetic {
        n_synth = [s.count_label(MAJORITY), s.count_label(MINORITY)];
    }
    let synthetic_recipe = matches!(arm.recipe, Recipe::Synthetic(_));
    if synthetic_recipe && arm.augment_real_minority {
        parts.push(train.subset(&train.indices_of(MINORITY)));
    }
    if let (true, Some(m)) = (synthetic_recipe, arm.augment_real_majority) {
        let rows = train.indices_of(MAJORITY);
        let m = m.min(rows.len());
        let mut rng = child_rng(seed, "augment-majority", 0);
        let picked: Vec<usize> = sample_indices(&mut rng, rows.len(), m).into_iter().map(|i| rows[i]).collect();
        parts.push(train.subset(&picked));
    }
    let parts: Vec<&TabularDataset> = parts.iter().filter(|p| !p.is_empty()).collect();
    if parts.is_empty() {
        return Err(OrdError::invalid(format!("arm '{}' produced an empty training set", arm.name)));
    }
    let data = TabularDataset::concat(&parts)?.to_binary();
    let degenerate = data.count_label(MAJORITY) == 0 || data.count_label(MINORITY) == 0;
    if degenerate {
        warnings.push(format!("arm '{}': training set holds a single class", arm.name));
    }
    for w in &warnings {
        log::warn!("seed {seed}: {w}");
    }
    hygiene.classifier_ids = data.real_ids();
    Ok(TrainingSet {
        data,
        synthetic,
        n_synth,
        n_overlap,
        overlap_dropped,
        warnings,
        degenerate,
        hygiene,
    })
}

/// Scores `test` with predictions `p1 >= threshold`.
pub fn evaluate(model: &TrainedClassifier, test: &TabularDataset, threshold: f64) -> Result<CellMetrics> {
    let proba = model.predict_proba(test)?;
    let scores: Vec<f64> = proba.iter().map(|p| p[1]).collect();
    let s = ScoredPredictions::new(test.binary_labels(), scores)?;
    let m = classification_metrics(&BinaryConfusion::at_threshold(&s, threshold));
    Ok(CellMetrics {
        macro_acc: m.macro_acc,
        minority_acc: m.minority_acc,
        majority_acc: m.majority_acc,
        f1: m.f1,
        auc: auc(&s).ok(),
    })
}

pub fn classifier_seed(seed: u64, kind: LearnerKind) -> u64 {
    derive_seed(seed, &format!("classifier-{}", kind.name()), 0)
}

fn cell_error(arm: &str, classifier: &str, seed: u64, e: OrdError) -> OrdError {
    OrdError::ExperimentCell {
        mode: arm.to_string(),
        classifier: classifier.to_string(),
        seed,
        source: Box::new(e),
    }
}

pub(crate) struct UnitOutput {
    pub cells: Vec<Cell>,
    pub synthesis: SynthesisRecord,
    pub hygiene: Hygiene,
}

fn run_unit(cfg: &PipelineConfig, loaded: &LoadedData, arm: &Arm, seed: u64) -> Result<UnitOutput> {
    let unit = || -> Result<(PreparedSplit, TrainingSet)> {
        let split = prepare_split(cfg, loaded, seed)?;
        let ts = build_training_set(cfg, arm, &split, seed)?;
        Ok((split, ts))
    };
    let (split, ts) = unit().map_err(|e| cell_error(&arm.name, "all", seed, e))?;
    let oracle = match (&loaded.world, &ts.synthetic) {
        (Some(w), Some(s)) if !s.is_empty() => Some(score_synthetic(s, w, w.priors).map_err(|e| cell_error(&arm.name, "all", seed, e))?),
        _ => None,
    };
    let cells = cfg
        .classifiers
        .par_iter()
        .map(|&kind| {
            let model = fit_learner(kind, &ts.data, &cfg.learner_params, classifier_seed(seed, kind))
                .map_err(|e| cell_error(&arm.name, kind.name(), seed, e))?;
            let metrics = evaluate(&model, &split.test, 0.5).map_err(|e| cell_error(&arm.name, kind.name(), seed, e))?;
            Ok(Cell {
                mode: arm.name.clone(),
                classifier: kind,
                seed,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UnitOutput {
        cells,
        synthesis: SynthesisRecord {
            mode: arm.name.clone(),
            seed,
            n_label0: ts.n_synth[0],
            n_label1: ts.n_synth[1],
            n_overlap: ts.n_overlap,
            n_train: ts.data.n_rows(),
            degenerate: ts.degenerate,
            hygiene_clean: ts.hygiene.is_clean(),
            oracle,
            warnings: ts.warnings,
        },
        hygiene: ts.hygiene,
    })
}

/// Runs every (arm, seed) unit and merges cells in arm, classifier, seed order.
pub fn run_arms(cfg: &PipelineConfig, loaded: &LoadedData, arms: &[Arm]) -> Result<EvalReport> {
    cfg.validate()?;
    let units: Vec<(usize, usize)> = (0..arms.len()).flat_map(|a| (0..cfg.seeds.len()).map(move |s| (a, s))).collect();
    let outputs: Vec<UnitOutput> = units
        .par_iter()
        .map(|&(a, s)| run_unit(cfg, loaded, &arms[a], cfg.seeds[s]))
        .collect::<Result<_>>()?;
    let mut cells = vec![];
    let mut synthesis = vec![];
    let mut hygiene = vec![];
    for (a, arm) in arms.iter().enumerate() {
        let of_arm: Vec<&UnitOutput> = units
            .iter()
            .zip(&outputs)
            .filter(|((ua, _), _)| *ua == a)
            .map(|(_, o)| o)
            .collect();
        for &kind in &cfg.classifiers {
            for o in &of_arm {
                cells.extend(o.cells.iter().filter(|c| c.classifier == kind).cloned());
            }
        }
        for o in &of_arm {
            synthesis.push(o.synthesis.clone());
            hygiene.push((arm.name.clone(), o.synthesis.seed, o.hygiene.clone()));
        }
    }
    Ok(EvalReport { cells, synthesis, hygiene })
}

pub fn run_efficacy(cfg: &PipelineConfig, loaded: &LoadedData) -> Result<EvalReport> {
    let arms: Vec<Arm> = cfg.modes.iter().map(|&m| Arm::from_mode(m, cfg)).collect();
    run_arms(cfg, loaded, &arms)
}
