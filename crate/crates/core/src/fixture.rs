//! Bundled toy world: 50 skills, 20 occupations in two taxonomy versions,
//! firms posting jobs over five years, firm controls and patent examiner
//! records. Everything is a pure function of the seed.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::corpus::{
    generate_boilerplate, generate_synthetic_pairs, write_controls, write_pairs, write_postings,
    FirmYearControls, JobPosting,
};
use crate::econ::{write_examiner_records, ExaminerRecord};
use crate::error::Result;
use crate::taxonomy::{write_occupations, write_skills, Occupation, OccupationTaxonomy, Skill, SkillTaxonomy};

pub const SKILLS: [(&str, &str, &str); 50] = [
    ("S01", "python programming", "Write and maintain software in the Python language"),
    ("S02", "sql databases", "Query and manage relational databases with SQL"),
    ("S03", "data visualization", "Present data through charts and dashboards"),
    ("S04", "machine learning", "Build predictive models from training data"),
    ("S05", "statistical analysis", "Apply statistical methods to interpret data"),
    ("S06", "cloud computing", "Deploy and operate services on cloud platforms"),
    ("S07", "network security", "Protect computer networks from intrusions"),
    ("S08", "linux administration", "Configure and maintain Linux servers"),
    ("S09", "java development", "Build applications in the Java language"),
    ("S10", "web frontend", "Create user interfaces with HTML, CSS and JavaScript"),
    ("S11", "project management", "Plan schedules, budgets and deliverables for projects"),
    ("S12", "agile methods", "Run iterative development with scrum practices"),
    ("S13", "financial accounting", "Prepare ledgers and financial statements"),
    ("S14", "tax compliance", "File tax returns and follow tax regulations"),
    ("S15", "auditing", "Examine records to verify accuracy and compliance"),
    ("S16", "budget planning", "Forecast costs and allocate budgets"),
    ("S17", "customer service", "Resolve customer inquiries and complaints"),
    ("S18", "sales negotiation", "Negotiate deals and close sales with clients"),
    ("S19", "market research", "Study markets, competitors and consumer needs"),
    ("S20", "digital marketing", "Run online advertising and social media campaigns"),
    ("S21", "copywriting", "Write persuasive text for advertisements"),
    ("S22", "graphic design", "Create visual layouts and brand graphics"),
    ("S23", "video editing", "Cut and produce video content"),
    ("S24", "supply chain management", "Coordinate suppliers, inventory and logistics"),
    ("S25", "warehouse operations", "Manage storage, picking and shipping of goods"),
    ("S26", "procurement", "Source vendors and purchase materials"),
    ("S27", "quality control", "Inspect products against quality standards"),
    ("S28", "lean manufacturing", "Reduce waste in production processes"),
    ("S29", "cnc machining", "Operate computer controlled machine tools"),
    ("S30", "electrical wiring", "Install and repair electrical circuits"),
    ("S31", "mechanical design", "Design machine parts with CAD software"),
    ("S32", "plc programming", "Program controllers for industrial automation"),
    ("S33", "patient care", "Provide bedside care to patients"),
    ("S34", "medical records", "Maintain accurate patient health records"),
    ("S35", "pharmacology", "Understand drug actions and dosages"),
    ("S36", "laboratory testing", "Run clinical laboratory tests on samples"),
    ("S37", "recruitment", "Source, screen and interview job candidates"),
    ("S38", "employee training", "Design and deliver staff training programs"),
    ("S39", "labor law", "Apply employment regulations and contracts"),
    ("S40", "payroll processing", "Calculate wages and process payroll"),
    ("S41", "contract drafting", "Draft and review legal contracts"),
    ("S42", "legal research", "Research statutes and case law"),
    ("S43", "teaching", "Plan lessons and instruct students"),
    ("S44", "curriculum design", "Develop course content and learning objectives"),
    ("S45", "english communication", "Communicate fluently in written and spoken English"),
    ("S46", "public speaking", "Deliver presentations to large audiences"),
    ("S47", "team leadership", "Lead and motivate a team of staff"),
    ("S48", "deep learning", "Train neural networks for vision and language tasks"),
    ("S49", "natural language processing", "Analyze text with computational methods"),
    ("S50", "data engineering", "Build pipelines that move and transform data"),
];

/// (id, 2018 title, 2022 title, core skills, skills added in 2022)
pub const OCCUPATIONS: [(&str, &str, &str, &[&str], &[&str]); 20] = [
    ("O01", "data analyst", "data analyst", &["S02", "S03", "S05", "S01"], &["S50"]),
    ("O02", "software engineer", "software engineer", &["S01", "S09", "S10", "S08"], &["S06", "S12"]),
    ("O03", "machine learning engineer", "machine learning engineer", &["S04", "S01", "S05"], &["S48", "S49"]),
    ("O04", "network administrator", "network administrator", &["S07", "S08", "S06"], &[]),
    ("O05", "project manager", "project manager", &["S11", "S16", "S47"], &["S12"]),
    ("O06", "accountant", "accountant", &["S13", "S14", "S16"], &[]),
    ("O07", "auditor", "auditor", &["S15", "S13", "S14"], &[]),
    ("O08", "sales representative", "sales representative", &["S18", "S17", "S45"], &[]),
    ("O09", "marketing specialist", "marketing specialist", &["S19", "S20", "S21"], &["S03"]),
    ("O10", "graphic designer", "graphic designer", &["S22", "S23", "S21"], &[]),
    ("O11", "logistics coordinator", "logistics coordinator", &["S24", "S25", "S26"], &[]),
    ("O12", "quality inspector", "quality inspector", &["S27", "S28"], &[]),
    ("O13", "machinist", "machinist", &["S29", "S31", "S27"], &[]),
    ("O14", "electrician", "electrician", &["S30", "S32"], &[]),
    ("O15", "nurse", "nurse", &["S33", "S34", "S35"], &[]),
    ("O16", "laboratory technician", "laboratory technician", &["S36", "S35", "S34"], &[]),
    ("O17", "human resources specialist", "human resources specialist", &["S37", "S38", "S39", "S40"], &[]),
    ("O18", "legal counsel", "legal counsel", &["S41", "S42", "S39"], &[]),
    ("O19", "teacher", "teacher", &["S43", "S44", "S46"], &["S45"]),
    ("O20", "customer support agent", "customer success agent", &["S17", "S45"], &[]),
];

const TASK_TEMPLATES: [&str; 3] = ["Apply {label} to {d}.", "{D} as part of daily {label} work.", "{D}, drawing on {label}."];

const POSTING_TEMPLATES: [&str; 10] = [
    "Must be familiar with {l}.",
    "Some knowledge of {l} is a plus.",
    "A basic understanding of {l} is required.",
    "Requires solid working experience in {l}.",
    "Expert-level command of {l} is expected.",
    "Basic familiarity with {l} is needed.",
    "{L} experience preferred.",
    "Hands-on experience with {l} is essential.",
    "We need someone with solid working experience in {l}.",
    "You will use {l} every day.",
];

const TITLE_PREFIXES: [&str; 4] = ["", "senior ", "junior ", "lead "];

pub fn skill_taxonomy(version: &str) -> SkillTaxonomy {
    let entries = SKILLS
        .iter()
        .map(|(id, label, desc)| {
            (
                id.to_string(),
                Skill {
                    label: label.to_string(),
                    description: desc.to_string(),
                },
            )
        })
        .collect();
    SkillTaxonomy::new(version, entries).expect("bundled skills are valid")
}

fn skill(id: &str) -> (&'static str, &'static str) {
    let (_, l, d) = SKILLS.iter().find(|s| s.0 == id).expect("bundled skill id");
    (l, d)
}

fn task_text(k: usize, id: &str) -> String {
    let (label, desc) = skill(id);
    let lower: String = {
        let mut c = desc.chars();
        c.next().map(|f| f.to_lowercase().chain(c).collect()).unwrap_or_default()
    };
    TASK_TEMPLATES[k % TASK_TEMPLATES.len()]
        .replace("{label}", label)
        .replace("{d}", &lower)
        .replace("{D}", desc)
}

/// Occupation taxonomy for "2018" (core skills only) or "2022" (core plus
/// added skills, with the 2022 titles).
pub fn occupation_taxonomy(version: &str) -> OccupationTaxonomy {
    let later = version != "2018";
    let entries = OCCUPATIONS
        .iter()
        .map(|(id, t18, t22, core, added)| {
            let mut ids: Vec<&str> = core.to_vec();
            if later {
                ids.extend_from_slice(added);
            }
            let tasks = ids.iter().enumerate().map(|(k, s)| task_text(k, s)).collect();
            let title = if later { t22 } else { t18 };
            (id.to_string(), Occupation { title: title.to_string(), tasks })
        })
        .collect();
    OccupationTaxonomy::new(version, entries).expect("bundled occupations are valid")
}

#[derive(Debug, Clone)]
pub struct FixtureConfig {
    pub firms: usize,
    pub first_year: i32,
    pub years: usize,
    /// Mean postings per firm-year.
    pub postings_per_firm_year: f64,
    pub examiners: usize,
    pub baseline_apps: usize,
    pub per_level: usize,
    pub boilerplate: usize,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            firms: 200,
            first_year: 2018,
            years: 5,
            postings_per_firm_year: 2.0,
            examiners: 40,
            baseline_apps: 60,
            per_level: 20,
            boilerplate: 600,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub skills: SkillTaxonomy,
    pub occupations_2018: OccupationTaxonomy,
    pub occupations_2022: OccupationTaxonomy,
    pub postings: Vec<JobPosting>,
    pub controls: Vec<FirmYearControls>,
    pub examiners: Vec<ExaminerRecord>,
}

fn posting_sentence(rng: &mut impl Rng, skill_id: &str) -> String {
    let (label, _) = skill(skill_id);
    let mut cap = label.chars();
    let upper: String = cap.next().map(|f| f.to_uppercase().chain(cap).collect()).unwrap_or_default();
    POSTING_TEMPLATES[rng.gen_range(0..POSTING_TEMPLATES.len())]
        .replace("{l}", label)
        .replace("{L}", &upper)
}

/// Builds the toy world in memory.
pub fn build_fixture(cfg: &FixtureConfig) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let boiler = generate_boilerplate(cfg.boilerplate.max(50), cfg.seed ^ 0xb01e);

    let leniency: Vec<f64> = (0..cfg.examiners).map(|_| rng.gen_range(0.3..0.9)).collect();
    let mut examiners = Vec::new();
    for (e, &l) in leniency.iter().enumerate() {
        for k in 0..cfg.baseline_apps {
            examiners.push(ExaminerRecord {
                examiner_id: format!("E{e:03}"),
                application_id: format!("N{e:03}-{k:04}"),
                firm_id: String::new(),
                year: rng.gen_range(2010..=2017),
                is_ai: false,
                granted: rng.gen_bool(l),
            });
        }
    }

    let mut postings = Vec::new();
    let mut controls = Vec::new();
    let mut serial = 0usize;
    for f in 0..cfg.firms {
        let firm = format!("F{f:03}");
        let n_occ = rng.gen_range(1..=3);
        let mut occ_idx: Vec<usize> = (0..OCCUPATIONS.len()).collect();
        occ_idx.shuffle(&mut rng);
        occ_idx.truncate(n_occ);
        let ai_propensity: f64 = rng.gen_range(0.0..4.0);
        let assets = 22.0 + 1.5 * std.sample(&mut rng);
        let mut stock = 0.0;
        for t in 0..cfg.years {
            let year = cfg.first_year + t as i32;
            let apps = Poisson::new(ai_propensity + 0.01)
                .expect("positive rate")
                .sample(&mut rng) as usize;
            let mut granted = 0usize;
            for a in 0..apps {
                let e = rng.gen_range(0..cfg.examiners);
                let g = rng.gen_bool(leniency[e]);
                granted += g as usize;
                examiners.push(ExaminerRecord {
                    examiner_id: format!("E{e:03}"),
                    application_id: format!("A{f:03}-{year}-{a}"),
                    firm_id: firm.clone(),
                    year,
                    is_ai: true,
                    granted: g,
                });
            }
            stock = 0.85 * stock + granted as f64;
            controls.push(FirmYearControls {
                firm_id: firm.clone(),
                year,
                log_assets: assets + 0.1 * std.sample(&mut rng),
                roa: 0.05 + 0.03 * std.sample(&mut rng),
                leverage: rng.gen_range(0.2..0.7),
                rnd_intensity: rng.gen_range(0.0..0.08),
                ai_flow: granted as f64,
            });

            let count = Poisson::new(cfg.postings_per_firm_year)
                .expect("positive rate")
                .sample(&mut rng) as usize;
            for _ in 0..count {
                let (_, t18, t22, core, added) = OCCUPATIONS[occ_idx[rng.gen_range(0..n_occ)]];
                let mut skills: Vec<&str> = core.to_vec();
                skills.shuffle(&mut rng);
                skills.truncate(rng.gen_range(1..=core.len()));
                // AI-capable firms list more skills, including newer ones
                let extra = (stock / 4.0).min(3.0);
                if !added.is_empty() && rng.gen_bool((0.2 + 0.15 * extra).min(0.9)) {
                    skills.push(added[rng.gen_range(0..added.len())]);
                }
                let outside = rng.gen_range(0..=1 + extra as usize);
                for _ in 0..outside {
                    skills.push(SKILLS[rng.gen_range(0..SKILLS.len())].0);
                }
                skills.sort_unstable();
                skills.dedup();
                let mut sentences: Vec<String> = skills.iter().map(|s| posting_sentence(&mut rng, s)).collect();
                for _ in 0..rng.gen_range(1..=3) {
                    sentences.push(boiler[rng.gen_range(0..boiler.len())].clone());
                }
                sentences.shuffle(&mut rng);
                let base = if year >= 2022 { t22 } else { t18 };
                let prefix = TITLE_PREFIXES[rng.gen_range(0..TITLE_PREFIXES.len())];
                let body = if rng.gen_bool(0.3) {
                    sentences.iter().map(|s| format!("- {s}")).collect::<Vec<_>>().join("\n")
                } else {
                    sentences.join(" ")
                };
                postings.push(JobPosting {
                    posting_id: format!("P{serial:05}"),
                    firm_id: firm.clone(),
                    year,
                    title: format!("{prefix}{base}"),
                    body,
                });
                serial += 1;
            }
        }
    }

    Fixture {
        skills: skill_taxonomy("2018"),
        occupations_2018: occupation_taxonomy("2018"),
        occupations_2022: occupation_taxonomy("2022"),
        postings,
        controls,
        examiners,
    }
}

/// File names written by [`write_fixture`].
pub mod files {
    pub const SKILLS: &str = "skills.csv";
    pub const OCCUPATIONS: &str = "occupations.csv";
    pub const TASKS: &str = "tasks.csv";
    pub const POSTINGS: &str = "postings.jsonl";
    pub const CONTROLS: &str = "controls.csv";
    pub const EXAMINERS: &str = "examiners.csv";
    pub const PAIRS: &str = "pairs.csv";
    pub const PRESCREEN: &str = "prescreen.csv";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSummary {
    pub postings: usize,
    pub pairs: usize,
    pub eval_pairs: usize,
    pub prescreen_examples: usize,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes the fixture, the synthetic training pairs and the labeled
/// pre-screening sentences into `dir`.
pub fn write_fixture(cfg: &FixtureConfig, dir: &Path) -> Result<FixtureSummary> {
    fs::create_dir_all(dir)?;
    let fx = build_fixture(cfg);
    let skills_22 = SkillTaxonomy::new("2022", fx.skills.skills.clone().into_iter().collect())?;
    write_skills(&[&fx.skills, &skills_22], create(dir, files::SKILLS)?)?;
    write_occupations(
        &[&fx.occupations_2018, &fx.occupations_2022],
        create(dir, files::OCCUPATIONS)?,
        create(dir, files::TASKS)?,
    )?;
    write_postings(&fx.postings, create(dir, files::POSTINGS)?)?;
    write_controls(&fx.controls, create(dir, files::CONTROLS)?)?;
    write_examiner_records(&fx.examiners, create(dir, files::EXAMINERS)?)?;

    let pairs = generate_synthetic_pairs(&fx.skills, cfg.per_level, cfg.seed)?;
    write_pairs(&pairs, create(dir, files::PAIRS)?)?;

    // pre-screening labels: one skill sentence per level per skill, boilerplate negatives
    let mut labeled: BTreeMap<String, bool> = BTreeMap::new();
    for p in pairs.iter().step_by(cfg.per_level.max(1)) {
        labeled.insert(p.sentence.clone(), true);
    }
    for s in generate_boilerplate(cfg.boilerplate, cfg.seed ^ 0x5eed) {
        labeled.entry(s).or_insert(false);
    }
    let mut w = csv::Writer::from_writer(create(dir, files::PRESCREEN)?);
    w.write_record(["label", "sentence"])?;
    for (s, y) in &labeled {
        w.write_record([if *y { "1" } else { "0" }, s.as_str()])?;
    }
    w.flush()?;

    let eval_pairs = pairs.iter().filter(|p| p.split == crate::corpus::Split::Eval).count();
    Ok(FixtureSummary {
        postings: fx.postings.len(),
        pairs: pairs.len(),
        eval_pairs,
        prescreen_examples: labeled.len(),
    })
}

/// Reads `label,sentence` rows written by [`write_fixture`].
pub fn read_prescreen_labels(path: &Path) -> Result<Vec<(String, bool)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push((rec[1].to_string(), &rec[0] == "1"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_versions() {
        let fx = build_fixture(&FixtureConfig::default());
        assert_eq!(fx.skills.len(), 50);
        assert_eq!(fx.occupations_2018.len(), 20);
        assert!((1500..2500).contains(&fx.postings.len()), "{}", fx.postings.len());
        assert_eq!(fx.controls.len(), 200 * 5);
        let o18 = &fx.occupations_2018.occupations["O03"];
        let o22 = &fx.occupations_2022.occupations["O03"];
        assert_eq!(o22.tasks.len(), o18.tasks.len() + 2);
    }

    #[test]
    fn deterministic() {
        let a = build_fixture(&FixtureConfig::default());
        let b = build_fixture(&FixtureConfig::default());
        assert_eq!(a, b);
    }

    #[test]
    fn written_files_load_back() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = FixtureConfig {
            firms: 10,
            per_level: 2,
            boilerplate: 60,
            ..FixtureConfig::default()
        };
        let s = write_fixture(&cfg, dir.path()).unwrap();
        let loaded = crate::corpus::load_postings(&dir.path().join(files::POSTINGS), None).unwrap();
        assert_eq!(loaded.postings.len(), s.postings);
        assert!(loaded.rejected.is_empty());
        let occ = crate::taxonomy::load_occupations(
            &dir.path().join(files::OCCUPATIONS),
            &dir.path().join(files::TASKS),
            "2022",
        )
        .unwrap();
        assert_eq!(occ.occupations["O20"].title, "customer success agent");
        let labels = read_prescreen_labels(&dir.path().join(files::PRESCREEN)).unwrap();
        assert!(labels.iter().any(|l| l.1) && labels.iter().any(|l| !l.1));
    }
}
