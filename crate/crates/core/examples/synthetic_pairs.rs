//! Generate sentence/skill training pairs for the bundled skills.

use std::collections::BTreeMap;

use skillpanel::corpus::{generate_synthetic_pairs, write_pairs, Split};
use skillpanel::fixture::skill_taxonomy;

fn main() -> skillpanel::Result<()> {
    let skills = skill_taxonomy("2018");
    let pairs = generate_synthetic_pairs(&skills, 20, 7)?;
    let mut by_split: BTreeMap<String, usize> = BTreeMap::new();
    for p in &pairs {
        *by_split.entry(format!("{:?}", p.split)).or_default() += 1;
    }
    println!("{} pairs: {by_split:?}", pairs.len());
    let sample: Vec<_> = pairs.iter().filter(|p| p.split == Split::Eval).take(6).cloned().collect();
    write_pairs(&sample, std::io::stdout())?;
    Ok(())
}
