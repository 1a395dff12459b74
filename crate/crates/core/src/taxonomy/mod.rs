//! Versioned skill and occupation taxonomies and the maps built on them.

mod index;
mod mapping;
mod stability;
mod types;

pub use index::{IndexMode, SkillIndex};
pub use mapping::{
    assign_occupation, build_baseline_sets, embed_tasks, forward_looking_sets, map_tasks_to_skills,
    ForwardSets,
};
pub use stability::{taxonomy_stability, StabilityKind, StabilityReport};
pub use types::{
    load_occupations, load_skills, write_occupations, write_skills, BaselineSkillMap, Occupation,
    OccupationTaxonomy, Skill, SkillTaxonomy,
};
