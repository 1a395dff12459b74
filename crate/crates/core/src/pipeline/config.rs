//! Pipeline configuration: a TOML file with one table per concern.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::econ::{FeDim, Transform};
use crate::error::{Error, Result};
use crate::extraction::IntensityMode;
use crate::fixture::FixtureConfig;
use crate::trainer::TrainingConfig;

pub const TAU_GRID: [f64; 4] = [0.5, 0.6, 0.7, 0.8];
pub const DELTA_GRID: [f64; 3] = [0.15, 0.20, 0.30];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Directory holding the input tables. Unset means the fixture written
    /// by `gen-data` under the output directory.
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Extra ambiguous phrases, one per line.
    pub lexicon: Option<PathBuf>,
    /// Encoder checkpoint for task-to-skill mapping in place of the one
    /// trained by `train`.
    pub mapping_encoder: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureSection {
    pub firms: usize,
    pub first_year: i32,
    pub years: usize,
    pub postings_per_firm_year: f64,
    pub examiners: usize,
    pub baseline_apps: usize,
    pub per_level: usize,
    pub boilerplate: usize,
}

impl Default for FixtureSection {
    fn default() -> Self {
        let d = FixtureConfig::default();
        FixtureSection {
            firms: d.firms,
            first_year: d.first_year,
            years: d.years,
            postings_per_firm_year: d.postings_per_firm_year,
            examiners: d.examiners,
            baseline_apps: d.baseline_apps,
            per_level: d.per_level,
            boilerplate: d.boilerplate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub embed: usize,
    pub hidden: usize,
    pub attn: usize,
    pub out: usize,
    pub max_len: usize,
}

impl Default for EncoderSection {
    fn default() -> Self {
        EncoderSection {
            embed: 32,
            hidden: 32,
            attn: 32,
            out: 128,
            max_len: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrescreenSection {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for PrescreenSection {
    fn default() -> Self {
        PrescreenSection {
            epochs: 300,
            learning_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxonomySection {
    pub tau: f64,
    /// Extra thresholds for which baseline sets are also written.
    pub grid: Vec<f64>,
    pub skill_version: String,
    pub baseline_version: String,
    pub later_version: String,
}

impl Default for TaxonomySection {
    fn default() -> Self {
        TaxonomySection {
            tau: 0.6,
            grid: TAU_GRID.to_vec(),
            skill_version: "2018".into(),
            baseline_version: "2018".into(),
            later_version: "2022".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSection {
    pub cap: usize,
    pub min_chars: usize,
    pub intensity: IntensityMode,
    pub years: Option<(i32, i32)>,
    /// Truncation length for whole-posting embeddings.
    pub doc_max_len: usize,
}

impl Default for ExtractionSection {
    fn default() -> Self {
        ExtractionSection {
            cap: 5,
            min_chars: 4,
            intensity: IntensityMode::Set,
            years: None,
            doc_max_len: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSection {
    pub delta: f64,
}

impl Default for PanelSection {
    fn default() -> Self {
        PanelSection { delta: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSection {
    pub outcomes: Vec<String>,
    pub regressor: String,
    pub controls: Vec<String>,
    pub fe: Vec<FeDim>,
    pub transform: Transform,
    pub leniency_window: (i32, i32),
}

impl Default for EstimateSection {
    fn default() -> Self {
        EstimateSection {
            outcomes: vec!["aligned".into(), "nonaligned".into()],
            regressor: "ai_stock".into(),
            controls: crate::econ::DEFAULT_CONTROLS.iter().map(|s| s.to_string()).collect(),
            fe: vec![FeDim::Firm, FeDim::Occupation, FeDim::Year],
            transform: Transform::Log1p,
            leniency_window: (2010, 2017),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub run: RunConfig,
    pub fixture: FixtureSection,
    pub encoder: EncoderSection,
    pub training: TrainingConfig,
    pub prescreen: PrescreenSection,
    pub taxonomy: TaxonomySection,
    pub extraction: ExtractionSection,
    pub panel: PanelSection,
    pub estimate: EstimateSection,
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{name}: {msg}"))
}

fn on_grid(v: f64, grid: &[f64]) -> bool {
    grid.iter().any(|g| (g - v).abs() < 1e-12)
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.taxonomy;
        for (name, tau) in std::iter::once(("taxonomy.tau", t.tau)).chain(t.grid.iter().map(|g| ("taxonomy.grid", *g))) {
            if !(0.0..=1.0).contains(&tau) {
                return Err(field(name, format!("{tau} outside [0, 1]")));
            }
        }
        if t.baseline_version == t.later_version {
            return Err(field("taxonomy.later_version", "must differ from baseline_version"));
        }
        let d = self.panel.delta;
        if !(d > 0.0 && d < 1.0) {
            return Err(field("panel.delta", format!("{d} outside (0, 1)")));
        }
        self.training.validate().map_err(|e| field("training", e))?;
        if self.training.negatives + 1 >= crate::fixture::SKILLS.len() {
            return Err(field("training.negatives", "too many for the skill taxonomy"));
        }
        let e = &self.encoder;
        if e.embed == 0 || e.hidden == 0 || e.attn == 0 || e.out == 0 || e.max_len == 0 {
            return Err(field("encoder", "all dimensions must be positive"));
        }
        if self.extraction.doc_max_len == 0 {
            return Err(field("extraction.doc_max_len", "must be at least 1"));
        }
        if self.extraction.cap == 0 {
            return Err(field("extraction.cap", "must be at least 1"));
        }
        if let Some((a, b)) = self.extraction.years {
            if a > b {
                return Err(field("extraction.years", "empty window"));
            }
        }
        if self.fixture.per_level == 0 {
            return Err(field("fixture.per_level", "must be at least 1"));
        }
        if self.fixture.firms < 2 || self.fixture.years == 0 {
            return Err(field("fixture", "need at least two firms and one year"));
        }
        if !(self.prescreen.learning_rate > 0.0) {
            return Err(field("prescreen.learning_rate", "must be positive"));
        }
        let est = &self.estimate;
        if est.outcomes.is_empty() {
            return Err(field("estimate.outcomes", "at least one outcome is required"));
        }
        if est.fe.is_empty() {
            return Err(field("estimate.fe", "at least one fixed-effect dimension is required"));
        }
        if est.leniency_window.0 > est.leniency_window.1 {
            return Err(field("estimate.leniency_window", "empty window"));
        }
        Ok(())
    }

    /// Notes about settings outside the standard robustness grid.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !on_grid(self.taxonomy.tau, &TAU_GRID) {
            w.push(format!("custom threshold tau={}", self.taxonomy.tau));
        }
        if !on_grid(self.panel.delta, &DELTA_GRID) {
            w.push(format!("custom depreciation rate delta={}", self.panel.delta));
        }
        w
    }

    pub fn fixture_config(&self) -> FixtureConfig {
        let f = &self.fixture;
        FixtureConfig {
            firms: f.firms,
            first_year: f.first_year,
            years: f.years,
            postings_per_firm_year: f.postings_per_firm_year,
            examiners: f.examiners,
            baseline_apps: f.baseline_apps,
            per_level: f.per_level,
            boilerplate: f.boilerplate,
            seed: self.run.seed,
        }
    }
}
