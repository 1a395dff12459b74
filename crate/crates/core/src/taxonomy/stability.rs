//! Version-to-version stability of occupation lists and task sets.

use std::collections::BTreeSet;
use std::fmt;

use super::types::OccupationTaxonomy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityKind {
    OccupationList,
    TaskSets,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub kind: StabilityKind,
    pub version_a: String,
    pub version_b: String,
    pub compared: usize,
    pub unchanged: usize,
    pub stability: f64,
    /// Occupations whose task set changed, with the size of the symmetric
    /// difference, largest first. Empty in occupation-list mode.
    pub changed_tasks: Vec<(String, usize)>,
}

/// Occupation-list mode: share of ids (over the union of both versions) that
/// are present in both with an identical title. Task-set mode: over ids
/// present in both, share with exactly equal task text sets.
pub fn taxonomy_stability(
    a: &OccupationTaxonomy,
    b: &OccupationTaxonomy,
    kind: StabilityKind,
) -> StabilityReport {
    let (compared, unchanged, changed_tasks) = match kind {
        StabilityKind::OccupationList => {
            let ids: BTreeSet<&String> = a.occupations.keys().chain(b.occupations.keys()).collect();
            let same = ids
                .iter()
                .filter(|id| match (a.occupations.get(**id), b.occupations.get(**id)) {
                    (Some(x), Some(y)) => x.title == y.title,
                    _ => false,
                })
                .count();
            (ids.len(), same, Vec::new())
        }
        StabilityKind::TaskSets => {
            let mut changed = Vec::new();
            let mut compared = 0;
            for (id, x) in &a.occupations {
                let Some(y) = b.occupations.get(id) else { continue };
                compared += 1;
                let tx: BTreeSet<&String> = x.tasks.iter().collect();
                let ty: BTreeSet<&String> = y.tasks.iter().collect();
                let diff = tx.symmetric_difference(&ty).count();
                if diff > 0 {
                    changed.push((id.clone(), diff));
                }
            }
            changed.sort_by(|p, q| q.1.cmp(&p.1).then_with(|| p.0.cmp(&q.0)));
            (compared, compared - changed.len(), changed)
        }
    };
    StabilityReport {
        kind,
        version_a: a.version.clone(),
        version_b: b.version.clone(),
        compared,
        unchanged,
        stability: if compared == 0 {
            1.0
        } else {
            unchanged as f64 / compared as f64
        },
        changed_tasks,
    }
}

impl fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            StabilityKind::OccupationList => "occupation-list",
            StabilityKind::TaskSets => "task-sets",
        };
        writeln!(f, "kind={kind}")?;
        writeln!(f, "versions={}->{}", self.version_a, self.version_b)?;
        writeln!(f, "compared={}", self.compared)?;
        writeln!(f, "unchanged={}", self.unchanged)?;
        writeln!(f, "stability={}", self.stability)?;
        for (id, n) in &self.changed_tasks {
            writeln!(f, "changed_tasks.{id}={n}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::Occupation;

    fn tax(version: &str, n: usize) -> OccupationTaxonomy {
        let entries = (0..n)
            .map(|i| {
                (
                    format!("O{i:02}"),
                    Occupation {
                        title: format!("title {i}"),
                        tasks: vec![format!("task {i}a"), format!("task {i}b")],
                    },
                )
            })
            .collect();
        OccupationTaxonomy::new(version, entries).unwrap()
    }

    #[test]
    fn identical_versions_are_fully_stable() {
        let a = tax("2018", 10);
        for kind in [StabilityKind::OccupationList, StabilityKind::TaskSets] {
            let r = taxonomy_stability(&a, &a, kind);
            assert_eq!(r.stability, 1.0);
            assert!(r.changed_tasks.is_empty());
        }
    }

    #[test]
    fn one_retitle_in_ten() {
        let a = tax("2018", 10);
        let mut b = tax("2022", 10);
        b.occupations.get_mut("O03").unwrap().title = "renamed".into();
        let r = taxonomy_stability(&a, &b, StabilityKind::OccupationList);
        assert_eq!(r.stability, 0.9);
    }

    #[test]
    fn single_added_task_is_flagged() {
        let a = tax("2018", 10);
        let mut b = tax("2022", 10);
        b.occupations.get_mut("O07").unwrap().tasks.push("new task".into());
        let r = taxonomy_stability(&a, &b, StabilityKind::TaskSets);
        assert_eq!(r.changed_tasks, vec![("O07".to_string(), 1)]);
        assert_eq!(r.stability, 0.9);
    }
}
