use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skill {
    pub label: String,
    pub description: String,
}

impl Skill {
    /// Text fed to the encoder on the skill side of the bi-encoder.
    pub fn text(&self) -> String {
        format!("{}: {}", self.label, self.description)
    }
}

/// A versioned skill label space keyed by skill id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillTaxonomy {
    pub version: String,
    pub skills: BTreeMap<String, Skill>,
}

impl SkillTaxonomy {
    pub fn new(version: impl Into<String>, entries: Vec<(String, Skill)>) -> Result<Self> {
        let mut skills = BTreeMap::new();
        for (id, skill) in entries {
            if skill.description.trim().is_empty() {
                return Err(Error::invalid(format!("skill `{id}` has an empty description")));
            }
            if skills.insert(id.clone(), skill).is_some() {
                return Err(Error::invalid(format!("duplicate skill id `{id}`")));
            }
        }
        Ok(Self {
            version: version.into(),
            skills,
        })
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.skills.keys().cloned().collect()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.skills.contains_key(id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occupation {
    pub title: String,
    pub tasks: Vec<String>,
}

/// A versioned occupation list with task descriptions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationTaxonomy {
    pub version: String,
    pub occupations: BTreeMap<String, Occupation>,
}

impl OccupationTaxonomy {
    pub fn new(version: impl Into<String>, entries: Vec<(String, Occupation)>) -> Result<Self> {
        let mut occupations = BTreeMap::new();
        for (id, occ) in entries {
            if occ.tasks.is_empty() {
                return Err(Error::invalid(format!("occupation `{id}` has no tasks")));
            }
            if occupations.insert(id.clone(), occ).is_some() {
                return Err(Error::invalid(format!("duplicate occupation id `{id}`")));
            }
        }
        Ok(Self {
            version: version.into(),
            occupations,
        })
    }

    pub fn len(&self) -> usize {
        self.occupations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }
}

/// Per-occupation baseline skill sets built at one similarity threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSkillMap {
    pub version: String,
    pub tau: f64,
    pub sets: BTreeMap<String, BTreeSet<String>>,
}

impl BaselineSkillMap {
    pub fn get(&self, occ_id: &str) -> Option<&BTreeSet<String>> {
        self.sets.get(occ_id)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct SkillRow {
    version: String,
    skill_id: String,
    label: String,
    description: String,
}

#[derive(Debug, Deserialize, Serialize)]
struct OccupationRow {
    version: String,
    occ_id: String,
    title: String,
}

#[derive(Debug, Deserialize, Serialize)]
struct TaskRow {
    version: String,
    occ_id: String,
    task_text: String,
}

/// Reads the rows of `version` from a `version,skill_id,label,description` table.
pub fn load_skills(path: &Path, version: &str) -> Result<SkillTaxonomy> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut entries = Vec::new();
    for row in rdr.deserialize::<SkillRow>() {
        let row = row?;
        if row.version == version {
            entries.push((
                row.skill_id,
                Skill {
                    label: row.label,
                    description: row.description,
                },
            ));
        }
    }
    SkillTaxonomy::new(version, entries)
}

/// Reads `version` from the occupations (`version,occ_id,title`) and tasks
/// (`version,occ_id,task_text`) tables.
pub fn load_occupations(occupations: &Path, tasks: &Path, version: &str) -> Result<OccupationTaxonomy> {
    let mut titles: BTreeMap<String, String> = BTreeMap::new();
    for row in csv::Reader::from_path(occupations)?.deserialize::<OccupationRow>() {
        let row = row?;
        if row.version == version && titles.insert(row.occ_id.clone(), row.title).is_some() {
            return Err(Error::invalid(format!("duplicate occupation id `{}`", row.occ_id)));
        }
    }
    let mut task_map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for row in csv::Reader::from_path(tasks)?.deserialize::<TaskRow>() {
        let row = row?;
        if row.version != version {
            continue;
        }
        if !titles.contains_key(&row.occ_id) {
            return Err(Error::invalid(format!(
                "task for unknown occupation `{}` in version {version}",
                row.occ_id
            )));
        }
        task_map.entry(row.occ_id).or_default().push(row.task_text);
    }
    let entries = titles
        .into_iter()
        .map(|(id, title)| {
            let tasks = task_map.remove(&id).unwrap_or_default();
            (id, Occupation { title, tasks })
        })
        .collect();
    OccupationTaxonomy::new(version, entries)
}

pub fn write_skills<W: std::io::Write>(taxonomies: &[&SkillTaxonomy], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for tax in taxonomies {
        for (id, s) in &tax.skills {
            w.serialize(SkillRow {
                version: tax.version.clone(),
                skill_id: id.clone(),
                label: s.label.clone(),
                description: s.description.clone(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_occupations<W1: std::io::Write, W2: std::io::Write>(
    taxonomies: &[&OccupationTaxonomy],
    occupations: W1,
    tasks: W2,
) -> Result<()> {
    let mut wo = csv::Writer::from_writer(occupations);
    let mut wt = csv::Writer::from_writer(tasks);
    for tax in taxonomies {
        for (id, o) in &tax.occupations {
            wo.serialize(OccupationRow {
                version: tax.version.clone(),
                occ_id: id.clone(),
                title: o.title.clone(),
            })?;
            for t in &o.tasks {
                wt.serialize(TaskRow {
                    version: tax.version.clone(),
                    occ_id: id.clone(),
                    task_text: t.clone(),
                })?;
            }
        }
    }
    wo.flush()?;
    wt.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_skill_rejected() {
        let s = Skill {
            label: "a".into(),
            description: "d".into(),
        };
        let err = SkillTaxonomy::new("2018", vec![("x".into(), s.clone()), ("x".into(), s)]);
        assert!(err.is_err());
    }

    #[test]
    fn occupation_without_tasks_rejected() {
        let o = Occupation {
            title: "t".into(),
            tasks: vec![],
        };
        assert!(OccupationTaxonomy::new("2018", vec![("o".into(), o)]).is_err());
    }

    #[test]
    fn csv_round_trip_by_version() {
        let dir = tempfile::tempdir().unwrap();
        let s18 = SkillTaxonomy::new(
            "2018",
            vec![(
                "S1".into(),
                Skill {
                    label: "sql".into(),
                    description: "query databases, with commas".into(),
                },
            )],
        )
        .unwrap();
        let mut s22 = s18.clone();
        s22.version = "2022".into();
        let path = dir.path().join("skills.csv");
        write_skills(&[&s18, &s22], std::fs::File::create(&path).unwrap()).unwrap();
        assert_eq!(load_skills(&path, "2018").unwrap(), s18);
        assert_eq!(load_skills(&path, "2022").unwrap(), s22);

        let occ = OccupationTaxonomy::new(
            "2018",
            vec![(
                "O1".into(),
                Occupation {
                    title: "Analyst".into(),
                    tasks: vec!["analyze data".into(), "write reports".into()],
                },
            )],
        )
        .unwrap();
        let (po, pt) = (dir.path().join("occ.csv"), dir.path().join("tasks.csv"));
        write_occupations(
            &[&occ],
            std::fs::File::create(&po).unwrap(),
            std::fs::File::create(&pt).unwrap(),
        )
        .unwrap();
        assert_eq!(load_occupations(&po, &pt, "2018").unwrap(), occ);
    }
}
