//! Posting and firm-data ingestion, and the seeded template generator that
//! produces sentence/skill training pairs.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::taxonomy::SkillTaxonomy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobPosting {
    pub posting_id: String,
    pub firm_id: String,
    pub year: i32,
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmYearControls {
    pub firm_id: String,
    pub year: i32,
    pub log_assets: f64,
    pub roa: f64,
    pub leverage: f64,
    pub rnd_intensity: f64,
    pub ai_flow: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedPostings {
    pub postings: Vec<JobPosting>,
    pub rejected: Vec<RejectedRecord>,
}

/// Reads line-delimited JSON postings. Malformed or out-of-window records are
/// skipped and reported; a repeated `posting_id` is a hard error.
pub fn load_postings(path: &Path, years: Option<(i32, i32)>) -> Result<LoadedPostings> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = LoadedPostings::default();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let posting: JobPosting = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                reject(&mut out, lineno, format!("malformed record: {e}"));
                continue;
            }
        };
        if posting.title.trim().is_empty() || posting.body.trim().is_empty() {
            reject(&mut out, lineno, "empty title or body".into());
            continue;
        }
        if let Some((lo, hi)) = years {
            if posting.year < lo || posting.year > hi {
                reject(&mut out, lineno, format!("year {} outside {lo}..={hi}", posting.year));
                continue;
            }
        }
        if !seen.insert(posting.posting_id.clone()) {
            return Err(Error::DuplicatePosting(posting.posting_id));
        }
        out.postings.push(posting);
    }
    Ok(out)
}

fn reject(out: &mut LoadedPostings, line: usize, reason: String) {
    warn!("skipping posting record on line {line}: {reason}");
    out.rejected.push(RejectedRecord { line, reason });
}

pub fn write_postings<W: std::io::Write>(postings: &[JobPosting], mut out: W) -> Result<()> {
    for p in postings {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the controls table, one record per firm-year.
pub fn load_controls(path: &Path) -> Result<BTreeMap<(String, i32), FirmYearControls>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for row in rdr.deserialize::<FirmYearControls>() {
        let row = row?;
        if !(row.ai_flow >= 0.0) {
            return Err(Error::invalid(format!(
                "negative ai_flow for firm {} in {}",
                row.firm_id, row.year
            )));
        }
        let key = (row.firm_id.clone(), row.year);
        if out.contains_key(&key) {
            return Err(Error::invalid(format!(
                "duplicate controls record for {}/{}",
                key.0, key.1
            )));
        }
        out.insert(key, row);
    }
    Ok(out)
}

pub fn write_controls<W: std::io::Write>(rows: &[FirmYearControls], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Beginner,
    Intermediate,
    Advanced,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Beginner, Level::Intermediate, Level::Advanced];

    pub fn qualifier(self) -> &'static str {
        match self {
            Level::Beginner => "basic familiarity with",
            Level::Intermediate => "solid working experience in",
            Level::Advanced => "expert-level command of",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticPair {
    pub sentence: String,
    pub skill_id: String,
    pub level: Level,
    pub split: Split,
}

const OPENERS: [&str; 8] = [
    "Candidates should have",
    "The role requires",
    "We are looking for someone with",
    "Applicants must demonstrate",
    "You will bring",
    "The ideal hire has",
    "This position calls for",
    "Successful candidates show",
];

/// `{d}` is replaced by a fragment of the skill description.
const CLOSERS: [&str; 8] = [
    "",
    " for day-to-day work",
    " to support the wider team",
    " in a fast-paced environment",
    ", including the ability to {d}",
    " and will be expected to {d}",
    " as you {d}",
    " applied to real projects",
];

fn description_fragment(description: &str) -> String {
    let trimmed = description.trim().trim_end_matches(['.', '。']);
    let mut chars = trimmed.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Stable train/eval assignment: SHA-256 of the sentence, mod 10, < 8 trains.
pub fn split_for(sentence: &str) -> Split {
    let digest = Sha256::digest(sentence.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    if u64::from_be_bytes(head) % 10 < 8 {
        Split::Train
    } else {
        Split::Eval
    }
}

/// Generates `per_level` sentences for each skill at each proficiency level.
/// Output is ordered by skill id, level, then index, and is a pure function
/// of the arguments.
pub fn generate_synthetic_pairs(
    taxonomy: &SkillTaxonomy,
    per_level: usize,
    seed: u64,
) -> Result<Vec<SyntheticPair>> {
    if per_level == 0 {
        return Err(Error::invalid("per_level must be at least 1"));
    }
    if taxonomy.is_empty() {
        return Err(Error::invalid("cannot generate pairs for an empty taxonomy"));
    }
    let combos = OPENERS.len() * CLOSERS.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(taxonomy.len() * 3 * per_level);
    for (id, skill) in &taxonomy.skills {
        let fragment = description_fragment(&skill.description);
        for level in Level::ALL {
            // distinct template combinations while they last
            let picks: Vec<usize> = if per_level <= combos {
                sample(&mut rng, combos, per_level).into_vec()
            } else {
                (0..per_level).map(|_| rng.gen_range(0..combos)).collect()
            };
            for pick in picks {
                let opener = OPENERS[pick / CLOSERS.len()];
                let closer = CLOSERS[pick % CLOSERS.len()].replace("{d}", &fragment);
                let sentence = format!("{opener} {} {}{closer}.", level.qualifier(), skill.label);
                out.push(SyntheticPair {
                    split: split_for(&sentence),
                    sentence,
                    skill_id: id.clone(),
                    level,
                });
            }
        }
    }
    Ok(out)
}

const BOILERPLATE: [&str; 16] = [
    "We offer a competitive salary and annual performance bonus",
    "Five-day work week with flexible hours",
    "A bachelor's degree or above is required",
    "The company provides social insurance and a housing fund",
    "Our office is located in the city center near the metro",
    "Free lunch and regular team-building trips",
    "Paid annual leave and public holidays",
    "Candidates should be between 22 and 35 years old",
    "We are a listed company with offices in several provinces",
    "Please send your resume to the human resources department",
    "Full-time position with a one-year probation contract",
    "Graduates from 2021 and 2022 are welcome to apply",
    "Commercial medical insurance is provided for all employees",
    "The team has a friendly and open working atmosphere",
    "Relocation support is available for the right candidate",
    "Interviews will be arranged within one week of application",
];

const BOILERPLATE_TAILS: [&str; 6] = [
    "",
    " for this position",
    " for qualified applicants",
    " according to company policy",
    " at our headquarters",
    " after onboarding",
];

/// Non-skill sentences (benefits, degree requirements, logistics) used as
/// negatives for the pre-screening classifier.
pub fn generate_boilerplate(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let head = BOILERPLATE[rng.gen_range(0..BOILERPLATE.len())];
            let tail = BOILERPLATE_TAILS[rng.gen_range(0..BOILERPLATE_TAILS.len())];
            format!("{head}{tail}.")
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct PairRow {
    skill_id: String,
    level: Level,
    split: Split,
    sentence: String,
}

pub fn write_pairs<W: std::io::Write>(pairs: &[SyntheticPair], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in pairs {
        w.serialize(PairRow {
            skill_id: p.skill_id.clone(),
            level: p.level,
            split: p.split,
            sentence: p.sentence.clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pairs(path: &Path) -> Result<Vec<SyntheticPair>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize::<PairRow>()
        .map(|r| {
            let r = r?;
            Ok(SyntheticPair {
                sentence: r.sentence,
                skill_id: r.skill_id,
                level: r.level,
                split: r.split,
            })
        })
        .collect()
}
