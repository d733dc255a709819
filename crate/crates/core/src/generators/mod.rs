//! Class-conditional synthetic data sources.

mod bridge;
mod gmm;
mod smote;

use std::path::PathBuf;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use bridge::ExternalBridge;
pub use gmm::{fit_gmm, fit_gmm_with, ClassMixture, GmmComponent, GmmParams, GmmPerClass, VARIANCE_FLOOR};
pub use smote::{
    adasyn, adasyn_allocation, adasyn_ratios, borderline_smote, danger_set, smote, SmoteConfig, SmoteMethod, SmoteOutput,
};

use crate::dataset::{LabelAlphabet, RowOrigin, Schema, TabularDataset, OVERLAP};
use crate::error::{OrdError, Result};
use crate::seed::{child_rng, derive_seed};

/// Rows drawn for one label.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBatch {
    pub data: TabularDataset,
    pub warnings: Vec<String>,
}

pub trait ConditionalGenerator: Send + Sync {
    fn name(&self) -> &'static str;
    fn fit(&mut self, d: &TabularDataset) -> Result<()>;
    /// `n` rows, every one labeled `label`, conforming to the fitted schema.
    fn sample(&self, label: u8, n: usize, seed: u64) -> Result<SyntheticBatch>;
}

fn batch(schema: &Schema, base: LabelAlphabet, label: u8, rows: Array2<f64>, warnings: Vec<String>) -> Result<SyntheticBatch> {
    let n = rows.nrows();
    let alphabet = if label == OVERLAP { LabelAlphabet::Ternary } else { base };
    let data = TabularDataset::with_origin(schema.clone(), rows, vec![label; n], alphabet, vec![RowOrigin::Synthetic; n])?;
    Ok(SyntheticBatch { data, warnings })
}

fn not_fitted() -> OrdError {
    OrdError::invalid("generator used before fit")
}

#[derive(Debug, Clone)]
pub struct GmmGenerator {
    pub params: GmmParams,
    pub seed: u64,
    model: Option<GmmPerClass>,
}

impl GmmGenerator {
    pub fn new(params: GmmParams, seed: u64) -> Self {
        GmmGenerator { params, seed, model: None }
    }

    pub fn model(&self) -> Option<&GmmPerClass> {
        self.model.as_ref()
    }
}

impl ConditionalGenerator for GmmGenerator {
    fn name(&self) -> &'static str {
        "gmm"
    }

    fn fit(&mut self, d: &TabularDataset) -> Result<()> {
        self.model = Some(fit_gmm_with(d, &self.params, self.seed, true)?);
        Ok(())
    }

    fn sample(&self, label: u8, n: usize, seed: u64) -> Result<SyntheticBatch> {
        let m = self.model.as_ref().ok_or_else(not_fitted)?;
        let rows = m.sample_features(label, n, seed)?;
        batch(&m.schema, m.alphabet, label, rows, vec![])
    }
}

/// SMOTE-family oversampler over the fitted rows.
///
/// ADASYN's rounded allocation is topped up with plain SMOTE draws, or
/// truncated, so that exactly `n` rows come back.
#[derive(Debug, Clone)]
pub struct SmoteGenerator {
    pub cfg: SmoteConfig,
    data: Option<TabularDataset>,
}

impl SmoteGenerator {
    pub fn new(cfg: SmoteConfig) -> Self {
        SmoteGenerator { cfg, data: None }
    }
}

impl ConditionalGenerator for SmoteGenerator {
    fn name(&self) -> &'static str {
        match self.cfg.method {
            SmoteMethod::Smote => "smote",
            SmoteMethod::Borderline => "borderline_smote",
            SmoteMethod::Adasyn => "adasyn",
        }
    }

    fn fit(&mut self, d: &TabularDataset) -> Result<()> {
        self.cfg.validate()?;
        self.data = Some(d.clone());
        Ok(())
    }

    fn sample(&self, label: u8, n: usize, seed: u64) -> Result<SyntheticBatch> {
        let d = self.data.as_ref().ok_or_else(not_fitted)?;
        let mut rng = child_rng(seed, "smote", label as u64);
        let out = match self.cfg.method {
            SmoteMethod::Smote => smote(d, label, &self.cfg, n, &mut rng)?,
            SmoteMethod::Borderline => borderline_smote(d, label, &self.cfg, n, &mut rng)?,
            SmoteMethod::Adasyn => {
                let mut out = adasyn(d, label, &self.cfg, n, &mut rng)?;
                let have = out.rows.nrows();
                if have > n {
                    out.rows = out.rows.slice(ndarray::s![..n, ..]).to_owned();
                    out.pairs.truncate(n);
                } else if have < n {
                    let extra = smote(d, label, &self.cfg, n - have, &mut rng)?;
                    out.rows = ndarray::concatenate(ndarray::Axis(0), &[out.rows.view(), extra.rows.view()])
                        .expect("equal widths");
                    out.pairs.extend(extra.pairs);
                }
                out
            }
        };
        batch(d.schema(), d.alphabet(), label, out.rows, out.warnings)
    }
}

impl ConditionalGenerator for ExternalBridge {
    fn name(&self) -> &'static str {
        "bridge"
    }

    fn fit(&mut self, d: &TabularDataset) -> Result<()> {
        if !self.pool().schema().is_compatible(d.schema()) {
            return Err(OrdError::Schema("bridge file does not match the training schema".into()));
        }
        Ok(())
    }

    fn sample(&self, label: u8, n: usize, seed: u64) -> Result<SyntheticBatch> {
        let rows = self.draw(label, n, seed)?;
        let picked = self.pool().subset(&rows);
        batch(self.pool().schema(), self.pool().alphabet(), label, picked.features().to_owned(), vec![])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Gmm,
    Smote,
    BorderlineSmote,
    Adasyn,
    Bridge,
}

impl std::str::FromStr for GeneratorKind {
    type Err = OrdError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gmm" => GeneratorKind::Gmm,
            "smote" => GeneratorKind::Smote,
            "borderline_smote" | "borderline" => GeneratorKind::BorderlineSmote,
            "adasyn" => GeneratorKind::Adasyn,
            "bridge" => GeneratorKind::Bridge,
            other => return Err(OrdError::invalid(format!("unknown generator '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub gmm: GmmParams,
    pub smote: SmoteConfig,
    /// Synthetic ternary CSV for the bridge.
    pub bridge_file: Option<PathBuf>,
    pub with_replacement: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            kind: GeneratorKind::Gmm,
            gmm: GmmParams::default(),
            smote: SmoteConfig::default(),
            bridge_file: None,
            with_replacement: false,
        }
    }
}

/// Builds and fits a generator of the configured kind on `d`.
pub fn fit_generator(cfg: &GeneratorConfig, d: &TabularDataset, seed: u64) -> Result<Box<dyn ConditionalGenerator>> {
    let mut g: Box<dyn ConditionalGenerator> = match cfg.kind {
        GeneratorKind::Gmm => Box::new(GmmGenerator::new(cfg.gmm, derive_seed(seed, "gmm", 0))),
        GeneratorKind::Smote => Box::new(SmoteGenerator::new(SmoteConfig { method: SmoteMethod::Smote, ..cfg.smote })),
        GeneratorKind::BorderlineSmote => {
            Box::new(SmoteGenerator::new(SmoteConfig { method: SmoteMethod::Borderline, ..cfg.smote }))
        }
        GeneratorKind::Adasyn => Box::new(SmoteGenerator::new(SmoteConfig { method: SmoteMethod::Adasyn, ..cfg.smote })),
        GeneratorKind::Bridge => {
            let path = cfg
                .bridge_file
                .as_ref()
                .ok_or_else(|| OrdError::invalid("bridge generator needs bridge_file"))?;
            let mut b = ExternalBridge::open(path, d.schema())?;
            b.with_replacement = cfg.with_replacement;
            Box::new(b)
        }
    };
    g.fit(d)?;
    Ok(g)
}
