//! Task-to-skill linking, occupation baseline sets, occupation assignment and
//! forward-looking skill sets.

use std::collections::{BTreeMap, BTreeSet};

use super::index::SkillIndex;
use super::types::{BaselineSkillMap, OccupationTaxonomy};
use crate::encoder::Encoder;
use crate::error::{Error, Result};

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("threshold {tau} outside [0, 1]")));
    }
    Ok(())
}

/// For each task embedding, the skills whose similarity is at least `tau`.
pub fn map_tasks_to_skills(
    task_embeddings: &[Vec<f64>],
    index: &SkillIndex,
    tau: f64,
) -> Result<Vec<BTreeSet<String>>> {
    check_tau(tau)?;
    Ok(task_embeddings
        .iter()
        .map(|e| {
            index
                .above(e, tau)
                .into_iter()
                .map(|(pos, _)| index.id(pos).to_string())
                .collect()
        })
        .collect())
}

/// Embeddings of every task text, grouped by occupation.
pub fn embed_tasks(
    occupations: &OccupationTaxonomy,
    encoder: &Encoder,
) -> Result<BTreeMap<String, Vec<Vec<f64>>>> {
    occupations
        .occupations
        .iter()
        .map(|(id, o)| {
            let embs = o
                .tasks
                .iter()
                .map(|t| Ok(encoder.encode_text(t)?.0))
                .collect::<Result<Vec<_>>>()?;
            Ok((id.clone(), embs))
        })
        .collect()
}

/// Baseline set per occupation: the union of the skill sets of its tasks.
pub fn build_baseline_sets(
    version: &str,
    task_embeddings: &BTreeMap<String, Vec<Vec<f64>>>,
    index: &SkillIndex,
    tau: f64,
) -> Result<BaselineSkillMap> {
    let mut sets = BTreeMap::new();
    for (occ, embs) in task_embeddings {
        let union: BTreeSet<String> = map_tasks_to_skills(embs, index, tau)?
            .into_iter()
            .flatten()
            .collect();
        sets.insert(occ.clone(), union);
    }
    Ok(BaselineSkillMap {
        version: version.to_string(),
        tau,
        sets,
    })
}

/// Occupation with the most similar title; ties go to the smallest id.
pub fn assign_occupation(title_embedding: &[f64], titles: &SkillIndex) -> String {
    let (pos, _) = titles.top_k_exact(title_embedding, 1)[0];
    titles.id(pos).to_string()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardSets {
    pub sets: BTreeMap<String, BTreeSet<String>>,
    /// Occupations present in only one of the two maps.
    pub errors: BTreeMap<String, String>,
}

/// Skills linked to an occupation in the later map but not the earlier one.
pub fn forward_looking_sets(earlier: &BaselineSkillMap, later: &BaselineSkillMap) -> ForwardSets {
    let mut out = ForwardSets::default();
    let occs: BTreeSet<&String> = earlier.sets.keys().chain(later.sets.keys()).collect();
    for occ in occs {
        match (earlier.sets.get(occ), later.sets.get(occ)) {
            (Some(old), Some(new)) => {
                out.sets.insert(occ.clone(), new.difference(old).cloned().collect());
            }
            (None, _) => {
                out.errors
                    .insert(occ.clone(), format!("missing from {} baseline", earlier.version));
            }
            (_, None) => {
                out.errors
                    .insert(occ.clone(), format!("missing from {} baseline", later.version));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::IndexMode;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn map(version: &str, entries: &[(&str, &[&str])]) -> BaselineSkillMap {
        BaselineSkillMap {
            version: version.into(),
            tau: 0.6,
            sets: entries.iter().map(|(o, s)| (o.to_string(), set(s))).collect(),
        }
    }

    fn positive_index() -> SkillIndex {
        SkillIndex::from_vectors(
            vec![
                ("a".into(), vec![1.0, 0.1, 0.0]),
                ("b".into(), vec![0.2, 1.0, 0.1]),
                ("c".into(), vec![0.0, 0.3, 1.0]),
            ],
            IndexMode::Exact,
        )
        .unwrap()
    }

    #[test]
    fn zero_threshold_takes_everything_with_nonnegative_similarity() {
        let idx = positive_index();
        let got = map_tasks_to_skills(&[vec![0.5, 0.5, 0.5], vec![1.0, 0.0, 0.0]], &idx, 0.0).unwrap();
        assert!(got.iter().all(|s| s.len() == 3));
    }

    #[test]
    fn near_one_threshold_can_be_empty() {
        let got = map_tasks_to_skills(&[vec![0.5, 0.5, 0.5]], &positive_index(), 0.999).unwrap();
        assert!(got[0].is_empty());
    }

    #[test]
    fn self_similarity_is_linked() {
        let idx = positive_index();
        let got = map_tasks_to_skills(&[idx.vector(1).to_vec()], &idx, 0.6).unwrap();
        assert!(got[0].contains("b"));
    }

    #[test]
    fn baseline_is_union_of_task_sets() {
        let idx = positive_index();
        let tasks = BTreeMap::from([
            ("o1".to_string(), vec![idx.vector(0).to_vec(), idx.vector(2).to_vec()]),
            ("o2".to_string(), vec![idx.vector(1).to_vec()]),
        ]);
        let b = build_baseline_sets("2018", &tasks, &idx, 0.99).unwrap();
        assert_eq!(b.sets["o1"], set(&["a", "c"]));
        assert_eq!(b.sets["o2"], set(&["b"]));
    }

    #[test]
    fn forward_sets_are_set_differences() {
        let old = map("2018", &[("o", &["a", "b"]), ("p", &["x"])]);
        let new = map("2022", &[("o", &["b", "c"]), ("p", &[])]);
        let f = forward_looking_sets(&old, &new);
        assert_eq!(f.sets["o"], set(&["c"]));
        assert!(f.sets["p"].is_empty());
        let same = forward_looking_sets(&old, &old);
        assert!(same.sets.values().all(BTreeSet::is_empty));
    }

    #[test]
    fn missing_occupation_is_reported_not_fatal() {
        let old = map("2018", &[("o", &["a"])]);
        let new = map("2022", &[("o", &["a", "b"]), ("q", &["z"])]);
        let f = forward_looking_sets(&old, &new);
        assert_eq!(f.sets["o"], set(&["b"]));
        assert!(f.errors.contains_key("q"));
    }

    #[test]
    fn tied_titles_go_to_lowest_id() {
        let idx = SkillIndex::from_vectors(
            vec![("O2".into(), vec![1.0, 0.0]), ("O1".into(), vec![1.0, 0.0])],
            IndexMode::Exact,
        )
        .unwrap();
        assert_eq!(assign_occupation(&[0.3, 0.7], &idx), "O1");
    }
}
