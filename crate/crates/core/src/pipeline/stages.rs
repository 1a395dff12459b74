//! Stage bodies. Each returns the files it wrote.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{Pipeline, Stage};
use crate::corpus::{load_controls, load_postings, read_pairs, JobPosting, Split};
use crate::econ::{
    build_instrument, examiner_leniency, first_stage, load_examiner_records, ols_fe, tsls, Dataset, FeDim,
    RegressionSpec,
};
use crate::encoder::{read_checkpoint, write_checkpoint, Encoder, EncoderDims, VocabConfig, Vocabulary};
use crate::error::{Error, Result};
use crate::extraction::{
    ai_stock_panel, aggregate_panel, classify_alignment, extract_skills, read_panel, write_panel,
    ExtractionConfig, PanelInputs, PostingRecord,
};
use crate::fixture::{files, read_prescreen_labels, write_fixture};
use crate::taxonomy::{
    build_baseline_sets, embed_tasks, forward_looking_sets, load_occupations, load_skills, taxonomy_stability,
    BaselineSkillMap, IndexMode, OccupationTaxonomy, SkillIndex, StabilityKind,
};
use crate::textproc::{AmbiguityLexicon, SegmentConfig};
use crate::trainer::{evaluate_retrieval, train_biencoder, train_prescreener, PrescreenConfig, Prescreener};

pub const ENCODER: &str = "encoder.ckpt";
pub const PRESCREENER: &str = "prescreener.txt";
pub const METRICS: &str = "metrics.txt";
pub const UNTRAINED_METRICS: &str = "metrics_untrained.txt";
pub const LOSS: &str = "loss.txt";
pub const BASELINES: &str = "baselines.json";
pub const FORWARD: &str = "forward.json";
pub const RECORDS: &str = "records.jsonl";
pub const REJECTED: &str = "rejected.csv";
pub const PANEL: &str = "panel.csv";
pub const PANEL_META: &str = "panel_meta.json";
pub const ESTIMATES: &str = "estimates.txt";
pub const FIRST_STAGE: &str = "first_stage.txt";
pub const INSTRUMENT: &str = "instrument.csv";
pub const STABILITY: &str = "stability.txt";

pub(super) fn run(p: &Pipeline, stage: Stage) -> Result<Vec<PathBuf>> {
    match stage {
        Stage::GenData => gen_data(p),
        Stage::Train => train(p),
        Stage::MapTaxonomy => map_taxonomy(p),
        Stage::Extract => extract(p),
        Stage::Panel => panel(p),
        Stage::Estimate => estimate(p),
        Stage::Stability => stability(p),
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_text(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text)?;
    Ok(path)
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value)?;
    write_text(path, &(text + "\n"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: PathBuf) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn load_encoder(p: &Pipeline) -> Result<Encoder> {
    read_encoder(&p.artifact(Stage::Train, ENCODER))
}

fn read_encoder(path: &Path) -> Result<Encoder> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

fn occupations(p: &Pipeline, version: &str) -> Result<OccupationTaxonomy> {
    let tax = load_occupations(
        &p.data_file(files::OCCUPATIONS),
        &p.data_file(files::TASKS),
        version,
    )?;
    if tax.is_empty() {
        return Err(Error::invalid(format!("no occupations for version {version}")));
    }
    Ok(tax)
}

fn gen_data(p: &Pipeline) -> Result<Vec<PathBuf>> {
    let dir = p.stage_dir(Stage::GenData);
    let summary = write_fixture(&p.config.fixture_config(), &dir)?;
    info!(
        "fixture: {} postings, {} pairs ({} held out), {} pre-screening sentences",
        summary.postings, summary.pairs, summary.eval_pairs, summary.prescreen_examples
    );
    let names = [
        files::SKILLS,
        files::OCCUPATIONS,
        files::TASKS,
        files::POSTINGS,
        files::CONTROLS,
        files::EXAMINERS,
        files::PAIRS,
        files::PRESCREEN,
    ];
    Ok(names.iter().map(|n| dir.join(n)).collect())
}

fn train(p: &Pipeline) -> Result<Vec<PathBuf>> {
    let cfg = &p.config;
    let skills = load_skills(&p.data_file(files::SKILLS), &cfg.taxonomy.skill_version)?;
    let pairs = read_pairs(&p.data_file(files::PAIRS))?;
    let labels = read_prescreen_labels(&p.data_file(files::PRESCREEN))?;

    let mut texts: Vec<String> = skills.skills.values().map(|s| s.text()).collect();
    texts.extend(pairs.iter().filter(|x| x.split == Split::Train).map(|x| x.sentence.clone()));
    texts.extend(labels.iter().filter(|(_, y)| !y).map(|(s, _)| s.clone()));
    let vocab = Vocabulary::build(&texts, VocabConfig::default());
    let e = &cfg.encoder;
    let dims = EncoderDims {
        embed: e.embed,
        hidden: e.hidden,
        attn: e.attn,
        out: e.out,
        ..EncoderDims::with_vocab(vocab.len())
    };
    let seed = cfg.run.seed;
    let init = Encoder::init(vocab, dims, e.max_len, seed.wrapping_add(1))?;
    let before = evaluate_retrieval(&pairs, &init, &SkillIndex::build(&skills, &init, IndexMode::Exact)?)?;

    let training = crate::trainer::TrainingConfig {
        seed: seed.wrapping_add(2),
        ..cfg.training.clone()
    };
    let outcome = train_biencoder(&pairs, &skills, &training, init)?;
    let enc = outcome.encoder;
    let after = evaluate_retrieval(&pairs, &enc, &SkillIndex::build(&skills, &enc, IndexMode::Exact)?)?;
    info!(
        "retrieval: R@5 {:.3} -> {:.3}, MRR {:.3} -> {:.3}",
        before.recall_at_5, after.recall_at_5, before.mrr, after.mrr
    );

    let examples = labels
        .iter()
        .map(|(s, y)| Ok((enc.encode_text(s)?.0, *y)))
        .collect::<Result<Vec<_>>>()?;
    let clf = train_prescreener(
        &examples,
        &PrescreenConfig {
            epochs: cfg.prescreen.epochs,
            learning_rate: cfg.prescreen.learning_rate,
        },
    )?;

    let dir = p.stage_dir(Stage::Train);
    let ckpt = dir.join(ENCODER);
    let mut w = create(&ckpt)?;
    write_checkpoint(&enc, &mut w)?;
    w.flush()?;
    let loss: String = outcome.loss_trace.iter().map(|l| format!("{l}\n")).collect();
    Ok(vec![
        ckpt,
        write_text(dir.join(PRESCREENER), &clf.to_text())?,
        write_text(dir.join(METRICS), &after.to_string())?,
        write_text(dir.join(UNTRAINED_METRICS), &before.to_string())?,
        write_text(dir.join(LOSS), &loss)?,
    ])
}

/// Baseline maps at every threshold of the grid and the configured one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineFile {
    pub maps: Vec<BaselineSkillMap>,
}

impl BaselineFile {
    pub fn find(&self, version: &str, tau: f64) -> Option<&BaselineSkillMap> {
        self.maps
            .iter()
            .find(|m| m.version == version && (m.tau - tau).abs() < 1e-12)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForwardFile {
    pub earlier: String,
    pub later: String,
    pub tau: f64,
    pub sets: BTreeMap<String, BTreeSet<String>>,
    pub errors: BTreeMap<String, String>,
}

fn map_taxonomy(p: &Pipeline) -> Result<Vec<PathBuf>> {
    let t = &p.config.taxonomy;
    let enc = match &p.config.paths.mapping_encoder {
        Some(path) => read_encoder(path)?,
        None => load_encoder(p)?,
    };
    let skills = load_skills(&p.data_file(files::SKILLS), &t.skill_version)?;
    let index = SkillIndex::build(&skills, &enc, IndexMode::Exact)?;
    let mut taus = t.grid.clone();
    taus.push(t.tau);
    taus.sort_by(f64::total_cmp);
    taus.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut maps = Vec::new();
    for version in [&t.baseline_version, &t.later_version] {
        let task_embs = embed_tasks(&occupations(p, version)?, &enc)?;
        for &tau in &taus {
            maps.push(build_baseline_sets(version, &task_embs, &index, tau)?);
        }
    }
    let file = BaselineFile { maps };
    let earlier = file.find(&t.baseline_version, t.tau).expect("configured tau is mapped");
    let later = file.find(&t.later_version, t.tau).expect("configured tau is mapped");
    let fwd = forward_looking_sets(earlier, later);
    for (occ, msg) in &fwd.errors {
        warn!("forward-looking set for {occ}: {msg}");
    }
    let forward = ForwardFile {
        earlier: t.baseline_version.clone(),
        later: t.later_version.clone(),
        tau: t.tau,
        sets: fwd.sets,
        errors: fwd.errors,
    };
    let dir = p.stage_dir(Stage::MapTaxonomy);
    Ok(vec![
        write_json(dir.join(BASELINES), &file)?,
        write_json(dir.join(FORWARD), &forward)?,
    ])
}

/// Picks the occupation whose title is closest across the title indices;
/// earlier indices win ties.
fn assign(title: &[f64], indices: &[SkillIndex]) -> String {
    let mut best: Option<(f64, &str)> = None;
    for idx in indices {
        let (pos, s) = idx.top_k_exact(title, 1)[0];
        if best.map_or(true, |(b, _)| s > b) {
            best = Some((s, idx.id(pos)));
        }
    }
    best.expect("at least one title index").1.to_string()
}

fn document_text(posting: &JobPosting) -> String {
    format!("{}. {}", posting.title, posting.body)
}

fn extract(p: &Pipeline) -> Result<Vec<PathBuf>> {
    let cfg = &p.config;
    let t = &cfg.taxonomy;
    let loaded = load_postings(&p.data_file(files::POSTINGS), cfg.extraction.years)?;
    let enc = load_encoder(p)?;
    let doc_enc = Encoder {
        max_len: cfg.extraction.doc_max_len,
        ..enc.clone()
    };
    let clf = Prescreener::from_text(&std::fs::read_to_string(p.artifact(Stage::Train, PRESCREENER))?)?;
    let baselines: BaselineFile = read_json(p.artifact(Stage::MapTaxonomy, BASELINES))?;
    let baseline = baselines
        .find(&t.baseline_version, t.tau)
        .ok_or_else(|| Error::invalid(format!("no {} baseline at tau={}", t.baseline_version, t.tau)))?;
    let skills = load_skills(&p.data_file(files::SKILLS), &t.skill_version)?;
    let index = SkillIndex::build(&skills, &enc, IndexMode::Exact)?;
    let titles = [
        SkillIndex::over_titles(&occupations(p, &t.baseline_version)?, &enc)?,
        SkillIndex::over_titles(&occupations(p, &t.later_version)?, &enc)?,
    ];
    let xcfg = ExtractionConfig {
        tau: t.tau,
        cap: cfg.extraction.cap,
        segment: SegmentConfig {
            min_chars: cfg.extraction.min_chars,
        },
    };

    let dir = p.stage_dir(Stage::Extract);
    let records_path = dir.join(RECORDS);
    let mut out = create(&records_path)?;
    let mut rejected: Vec<(String, String)> = loaded
        .rejected
        .iter()
        .map(|r| (format!("line {}", r.line), r.reason.clone()))
        .collect();
    let mut kept = 0usize;
    for posting in &loaded.postings {
        let occ_id = assign(&enc.encode_text(&posting.title)?.0, &titles);
        let found = extract_skills(posting, Some(&clf), &enc, &index, &xcfg)?;
        let (aligned, nonaligned) = match classify_alignment(&occ_id, &found.skill_set(), baseline.get(&occ_id)) {
            Ok(split) => split,
            Err(e @ Error::MissingBaseline(_)) => {
                warn!("posting {}: {e}", posting.posting_id);
                rejected.push((posting.posting_id.clone(), e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        let record = PostingRecord {
            posting_id: posting.posting_id.clone(),
            firm_id: posting.firm_id.clone(),
            occ_id,
            year: posting.year,
            skills: found.skills,
            aligned,
            nonaligned,
            kept_sentences: found.kept_sentences,
            doc_embedding: doc_enc.encode_text(&document_text(posting))?.0,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
        kept += 1;
    }
    out.flush()?;
    info!("extracted {kept} postings, {} rejected", rejected.len());

    let rejected_path = dir.join(REJECTED);
    let mut w = csv::Writer::from_writer(create(&rejected_path)?);
    w.write_record(["record", "reason"])?;
    for (id, reason) in &rejected {
        w.write_record([id, reason])?;
    }
    w.flush()?;
    Ok(vec![records_path, rejected_path])
}

/// Reads posting records written by the extract stage.
pub fn read_records(path: &std::path::Path) -> Result<Vec<PostingRecord>> {
    use std::io::BufRead;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(format!("records line {}", i + 1), e))?);
    }
    Ok(out)
}

fn panel(p: &Pipeline) -> Result<Vec<PathBuf>> {
    let cfg = &p.config;
    let records = read_records(&p.artifact(Stage::Extract, RECORDS))?;
    let forward: ForwardFile = read_json(p.artifact(Stage::MapTaxonomy, FORWARD))?;
    let controls = load_controls(&p.data_file(files::CONTROLS))?;
    let stocks = ai_stock_panel(&controls, cfg.panel.delta)?;
    let lexicon = match &cfg.paths.lexicon {
        Some(path) => AmbiguityLexicon::from_file(path)?,
        None => AmbiguityLexicon::default(),
    };
    let cells = aggregate_panel(&PanelInputs {
        records: &records,
        forward: &forward.sets,
        controls: &controls,
        stocks: &stocks,
        lexicon: &lexicon,
        intensity: cfg.extraction.intensity,
    })?;
    let dir = p.stage_dir(Stage::Panel);
    let panel_path = dir.join(PANEL);
    write_panel(&cells, create(&panel_path)?)?;

    let missing_controls = cells.iter().filter(|c| c.log_assets.is_none()).count();
    let ambig_per_posting: BTreeMap<String, f64> = cells
        .iter()
        .map(|c| (format!("{}/{}/{}", c.firm_id, c.occ_id, c.year), c.ambig_per_posting()))
        .collect();
    let meta = serde_json::json!({
        "cells": cells.len(),
        "postings": records.len(),
        "baseline_version": cfg.taxonomy.baseline_version,
        "forward_versions": [forward.earlier, forward.later],
        "tau": cfg.taxonomy.tau,
        "delta": cfg.panel.delta,
        "intensity": cfg.extraction.intensity,
        "cells_without_controls": missing_controls,
        "lexicon": lexicon.phrases(),
        "ambig_per_posting": ambig_per_posting,
    });
    Ok(vec![panel_path, write_json(dir.join(PANEL_META), &meta)?])
}

fn estimate(p: &Pipeline) -> Result<Vec<PathBuf>> {
    let est = &p.config.estimate;
    let cells = read_panel(File::open(p.artifact(Stage::Panel, PANEL))?)?;
    let examiners = load_examiner_records(&p.data_file(files::EXAMINERS))?;
    let leniency = examiner_leniency(&examiners, est.leniency_window)?;
    let instrument = build_instrument(&examiners, &leniency);
    let data = Dataset::from_panel(&cells, Some(&instrument.values));

    let mut report = String::new();
    for outcome in &est.outcomes {
        let spec = RegressionSpec {
            controls: est.controls.clone(),
            fe: est.fe.clone(),
            transform: est.transform,
            ..RegressionSpec::new(outcome, &est.regressor)
        };
        for result in [ols_fe(&data, &spec)?, tsls(&data, &spec, "leniency")?] {
            if result.weak_instrument {
                warn!("{outcome}: weak instrument");
            }
            report.push_str(&result.to_string());
            report.push('\n');
        }
    }

    let base = RegressionSpec {
        controls: est.controls.clone(),
        fe: est.fe.clone(),
        transform: est.transform,
        ..RegressionSpec::new(&est.outcomes[0], &est.regressor)
    };
    let cell_level = first_stage(&data, &base, "leniency")?;
    let firm_fe: Vec<FeDim> = est
        .fe
        .iter()
        .copied()
        .filter(|d| matches!(d, FeDim::Firm | FeDim::Year | FeDim::FirmYear))
        .collect();
    let firm_year = first_stage(
        &data.collapse_firm_year(),
        &RegressionSpec {
            fe: if firm_fe.is_empty() { vec![FeDim::Firm] } else { firm_fe },
            ..base.clone()
        },
        "leniency",
    )?;
    let first = format!("level=firm_occ_year\n{cell_level}\nlevel=firm_year\n{firm_year}");

    let dir = p.stage_dir(Stage::Estimate);
    let inst_path = dir.join(INSTRUMENT);
    let mut w = csv::Writer::from_writer(create(&inst_path)?);
    w.write_record(["firm_id", "year", "leniency"])?;
    for ((firm, year), z) in &instrument.values {
        w.write_record([firm.clone(), year.to_string(), z.to_string()])?;
    }
    w.flush()?;
    Ok(vec![
        write_text(dir.join(ESTIMATES), &report)?,
        write_text(dir.join(FIRST_STAGE), &first)?,
        inst_path,
    ])
}

fn stability(p: &Pipeline) -> Result<Vec<PathBuf>> {
    let t = &p.config.taxonomy;
    let a = occupations(p, &t.baseline_version)?;
    let b = occupations(p, &t.later_version)?;
    let mut text = String::new();
    for kind in [StabilityKind::OccupationList, StabilityKind::TaskSets] {
        text.push_str(&taxonomy_stability(&a, &b, kind).to_string());
        text.push('\n');
    }
    Ok(vec![write_text(p.stage_dir(Stage::Stability).join(STABILITY), &text)?])
}
