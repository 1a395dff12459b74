//! Stage orchestration: each stage reads declared inputs, writes its
//! artifacts under `<out>/<stage>/` with a manifest, and is skipped when
//! nothing it depends on has changed.

mod config;
mod manifest;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use log::info;

pub use config::{
    EncoderSection, EstimateSection, ExtractionSection, FixtureSection, PanelSection, PathsConfig,
    PipelineConfig, PrescreenSection, RunConfig, TaxonomySection, DELTA_GRID, TAU_GRID,
};
pub use manifest::{hash_files, sha256_file, Manifest, MANIFEST_FILE};
pub use stages::{
    read_records, BaselineFile, ForwardFile, BASELINES, ENCODER, ESTIMATES, FIRST_STAGE, FORWARD, INSTRUMENT,
    LOSS, METRICS, PANEL, PANEL_META, PRESCREENER, RECORDS, REJECTED, STABILITY, UNTRAINED_METRICS,
};

use crate::error::{Error, Result};
use crate::fixture::files;

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "SKILLPANEL_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    GenData,
    Train,
    MapTaxonomy,
    Extract,
    Panel,
    Estimate,
    Stability,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::GenData,
        Stage::Train,
        Stage::MapTaxonomy,
        Stage::Extract,
        Stage::Panel,
        Stage::Estimate,
        Stage::Stability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GenData => "gen-data",
            Stage::Train => "train",
            Stage::MapTaxonomy => "map-taxonomy",
            Stage::Extract => "extract",
            Stage::Panel => "panel",
            Stage::Estimate => "estimate",
            Stage::Stability => "stability",
        }
    }

    pub fn from_name(s: &str) -> Result<Stage> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Process exit status for an error: 2 configuration, 3 missing upstream
/// artifact, 4 anything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::MissingArtifact { .. } => 3,
        _ => 4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    UpToDate,
}

/// A configured pipeline rooted at an output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    data_dir: PathBuf,
    fixture_mode: bool,
    config_hash: String,
}

impl Pipeline {
    /// `out` takes precedence over `SKILLPANEL_OUT`, which takes precedence
    /// over `paths.out_dir`; the default is `./out`.
    pub fn new(mut config: PipelineConfig, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = seed {
            config.run.seed = s;
        }
        config.validate()?;
        let out_dir = out
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .or_else(|| config.paths.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let fixture_mode = config.paths.data_dir.is_none();
        let data_dir = config
            .paths
            .data_dir
            .clone()
            .unwrap_or_else(|| out_dir.join(Stage::GenData.name()));
        let mut hashed = config.clone();
        hashed.paths.out_dir = None;
        let config_hash = manifest::sha256_str(&hashed.to_toml());
        Ok(Pipeline {
            config,
            out_dir,
            data_dir,
            fixture_mode,
            config_hash,
        })
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out_dir.join(stage.name())
    }

    pub fn data_file(&self, name: &str) -> PathBuf {
        self.data_dir.join(name)
    }

    pub fn artifact(&self, stage: Stage, name: &str) -> PathBuf {
        self.stage_dir(stage).join(name)
    }

    /// Files a stage reads, each with the stage that produces it.
    fn inputs(&self, stage: Stage) -> Vec<(Stage, PathBuf)> {
        let data = |n: &str| (Stage::GenData, self.data_file(n));
        let art = |s: Stage, n: &str| (s, self.artifact(s, n));
        let mut v = match stage {
            Stage::GenData => vec![],
            Stage::Train => vec![data(files::PAIRS), data(files::SKILLS), data(files::PRESCREEN)],
            Stage::MapTaxonomy => vec![
                match &self.config.paths.mapping_encoder {
                    Some(path) => (Stage::MapTaxonomy, path.clone()),
                    None => art(Stage::Train, stages::ENCODER),
                },
                data(files::SKILLS),
                data(files::OCCUPATIONS),
                data(files::TASKS),
            ],
            Stage::Extract => vec![
                data(files::POSTINGS),
                art(Stage::Train, stages::ENCODER),
                art(Stage::Train, stages::PRESCREENER),
                art(Stage::MapTaxonomy, stages::BASELINES),
                data(files::SKILLS),
                data(files::OCCUPATIONS),
                data(files::TASKS),
            ],
            Stage::Panel => vec![
                art(Stage::Extract, stages::RECORDS),
                art(Stage::MapTaxonomy, stages::FORWARD),
                data(files::CONTROLS),
            ],
            Stage::Estimate => vec![art(Stage::Panel, stages::PANEL), data(files::EXAMINERS)],
            Stage::Stability => vec![data(files::OCCUPATIONS), data(files::TASKS)],
        };
        if stage == Stage::Panel {
            if let Some(lex) = &self.config.paths.lexicon {
                v.push((Stage::Panel, lex.clone()));
            }
        }
        v
    }

    /// Runs one stage unless its manifest shows it is current.
    pub fn run_stage(&self, stage: Stage) -> Result<StageStatus> {
        let inputs = self.inputs(stage);
        for (producer, path) in &inputs {
            if !path.exists() && *producer == stage {
                return Err(Error::Config(format!("file not found: {}", path.display())));
            }
            if !path.exists() {
                return Err(Error::MissingArtifact {
                    stage: producer.name().to_string(),
                    path: path.clone(),
                });
            }
        }
        let paths: Vec<&Path> = inputs.iter().map(|(_, p)| p.as_path()).collect();
        let input_hashes = hash_files(&paths)?;
        let dir = self.stage_dir(stage);
        if let Some(m) = Manifest::read(&dir) {
            if m.is_current(&self.config_hash, &input_hashes) {
                info!("{stage}: up to date");
                return Ok(StageStatus::UpToDate);
            }
        }
        std::fs::create_dir_all(&dir)?;
        let started = manifest::now_unix();
        info!("{stage}: running");
        let outputs = stages::run(self, stage)?;
        let manifest = Manifest {
            stage: stage.name().to_string(),
            config_hash: self.config_hash.clone(),
            seed: self.config.run.seed,
            inputs: input_hashes,
            outputs: hash_files(&outputs)?,
            warnings: self.config.warnings(),
            started_unix: started,
            finished_unix: manifest::now_unix(),
        };
        manifest.write(&dir)?;
        Ok(StageStatus::Ran)
    }

    /// The full chain in order. `gen-data` is skipped when the config points
    /// at an external data directory.
    pub fn run_all(&self) -> Result<BTreeMap<Stage, StageStatus>> {
        self.run_all_until(None)
    }

    /// Like [`Pipeline::run_all`], stopping after `last` when given.
    pub fn run_all_until(&self, last: Option<Stage>) -> Result<BTreeMap<Stage, StageStatus>> {
        let mut out = BTreeMap::new();
        for stage in Stage::ALL.into_iter().filter(|s| last.map_or(true, |l| *s <= l)) {
            if stage == Stage::GenData && !self.fixture_mode {
                continue;
            }
            out.insert(stage, self.run_stage(stage)?);
        }
        Ok(out)
    }
}
