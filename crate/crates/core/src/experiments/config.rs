use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, TabularDataset};
use crate::error::{OrdError, Result};
use crate::generators::GeneratorConfig;
use crate::learners::{LearnerKind, LearnerParams};
use crate::oracle_toy::{make_blobs, BlobWorld};
use crate::overlap::{OverlapConfig, TAU_REAL, TAU_TOY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// A blob world by name (`blobs1`, `blobs2`) or JSON path, drawn with `seed`.
    Toy {
        world: String,
        #[serde(default)]
        seed: u64,
    },
    Csv { path: PathBuf, schema: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSource {
    /// Stratified holdout from the loaded data.
    Holdout,
    /// A balanced draw from the toy world, disjoint from training by construction.
    Fresh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestSpec {
    /// Defaults to `fresh` for toy data and `holdout` for CSV data.
    pub source: Option<TestSource>,
    pub per_class: usize,
}

impl Default for TestSpec {
    fn default() -> Self {
        TestSpec {
            source: None,
            per_class: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Detect overlap, fit the generator on ternary labels, train on S00 + S1.
    Ord,
    /// Fit the generator on binary labels, train on S0 + S1.
    Baseline,
    /// Baseline synthesis, then detect overlap on the synthetic rows and drop their D01.
    OrdAfterSynthesis,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Ord => "ord",
            Mode::Baseline => "baseline",
            Mode::OrdAfterSynthesis => "ord_after_synthesis",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = OrdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ord" => Ok(Mode::Ord),
            "baseline" => Ok(Mode::Baseline),
            "ord_after_synthesis" => Ok(Mode::OrdAfterSynthesis),
            other => Err(OrdError::invalid(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub data: DataSource,
    pub test: TestSpec,
    /// Defaults to tau 0.2 on toy data and 0.3 otherwise. The seed field is
    /// replaced by a per-cell derived seed.
    pub overlap: Option<OverlapConfig>,
    pub generator: GeneratorConfig,
    pub classifiers: Vec<LearnerKind>,
    pub learner_params: LearnerParams,
    /// Synthetic rows per training class; defaults to the training majority count.
    pub synth_per_class: Option<usize>,
    pub augment_real_minority: bool,
    /// Adds this many real majority rows, drawn without replacement (capped at |D0|).
    pub augment_real_majority: Option<usize>,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: DataSource::Toy {
                world: "blobs1".into(),
                seed: 0,
            },
            test: TestSpec::default(),
            overlap: None,
            generator: GeneratorConfig::default(),
            classifiers: LearnerKind::ALL.to_vec(),
            learner_params: LearnerParams::default(),
            synth_per_class: None,
            augment_real_minority: false,
            augment_real_majority: None,
            seeds: (0..5).collect(),
            modes: vec![Mode::Ord, Mode::Baseline],
        }
    }
}

/// Data plus the generating world when it is known.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: TabularDataset,
    pub world: Option<BlobWorld>,
}

impl PipelineConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative data paths resolve against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| OrdError::io(path, e))?;
        let mut cfg = Self::from_json_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.data {
            DataSource::Csv { path, schema } => {
                fix(path);
                fix(schema);
            }
            DataSource::Toy { world, .. } => {
                if world != "blobs1" && world != "blobs2" && Path::new(world.as_str()).is_relative() {
                    *world = base.join(world.as_str()).to_string_lossy().into_owned();
                }
            }
        }
        if let Some(p) = &mut self.generator.bridge_file {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classifiers.is_empty() {
            return Err(OrdError::invalid("config needs at least one classifier"));
        }
        if self.seeds.is_empty() {
            return Err(OrdError::invalid("config needs at least one seed"));
        }
        if self.modes.is_empty() {
            return Err(OrdError::invalid("config needs at least one mode"));
        }
        if let Some(o) = &self.overlap {
            o.validate()?;
        }
        self.generator.smote.validate()?;
        if self.test_source() == TestSource::Fresh && !self.is_toy() {
            return Err(OrdError::invalid("a fresh test set needs a toy data source"));
        }
        Ok(())
    }

    pub fn is_toy(&self) -> bool {
        matches!(self.data, DataSource::Toy { .. })
    }

    pub fn test_source(&self) -> TestSource {
        self.test.source.unwrap_or(if self.is_toy() {
            TestSource::Fresh
        } else {
            TestSource::Holdout
        })
    }

    pub fn resolved_overlap(&self) -> OverlapConfig {
        self.overlap.unwrap_or(OverlapConfig {
            tau: if self.is_toy() { TAU_TOY } else { TAU_REAL },
            ..OverlapConfig::default()
        })
    }

    /// The config with every default made explicit.
    pub fn resolved(&self) -> PipelineConfig {
        let mut c = self.clone();
        c.overlap = Some(self.resolved_overlap());
        c.test.source = Some(self.test_source());
        c
    }

    pub fn load_data(&self) -> Result<LoadedData> {
        match &self.data {
            DataSource::Toy { world, seed } => {
                let w = BlobWorld::by_name(world)?;
                Ok(LoadedData {
                    data: make_blobs(&w, *seed)?,
                    world: Some(w),
                })
            }
            DataSource::Csv { path, schema } => Ok(LoadedData {
                data: load_csv(path, schema)?,
                world: None,
            }),
        }
    }
}
