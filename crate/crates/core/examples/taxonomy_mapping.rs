//! Link occupation tasks to skills, derive forward-looking skill sets and
//! compare two taxonomy versions.

use skillpanel::encoder::{Encoder, EncoderDims, VocabConfig, Vocabulary};
use skillpanel::fixture::{occupation_taxonomy, skill_taxonomy};
use skillpanel::taxonomy::{
    assign_occupation, build_baseline_sets, embed_tasks, forward_looking_sets, taxonomy_stability, IndexMode,
    SkillIndex, StabilityKind,
};

fn main() -> skillpanel::Result<()> {
    let skills = skill_taxonomy("2018");
    let occ18 = occupation_taxonomy("2018");
    let occ22 = occupation_taxonomy("2022");
    let texts: Vec<String> = skills.skills.values().map(|s| s.text()).collect();
    let vocab = Vocabulary::build(&texts, VocabConfig::default());
    let dims = EncoderDims {
        embed: 16,
        hidden: 16,
        attn: 16,
        ..EncoderDims::with_vocab(vocab.len())
    };
    // an untrained encoder keeps this quick; the pipeline uses the trained one
    let enc = Encoder::init(vocab, dims, 64, 3)?;
    let index = SkillIndex::build(&skills, &enc, IndexMode::Exact)?;
    let t18 = embed_tasks(&occ18, &enc)?;
    let t22 = embed_tasks(&occ22, &enc)?;
    for tau in [0.5, 0.6, 0.7, 0.8] {
        let b = build_baseline_sets("2018", &t18, &index, tau)?;
        let sizes: usize = b.sets.values().map(|s| s.len()).sum();
        println!("tau={tau}: {sizes} occupation-skill links");
    }
    let early = build_baseline_sets("2018", &t18, &index, 0.6)?;
    let late = build_baseline_sets("2022", &t22, &index, 0.6)?;
    let fwd = forward_looking_sets(&early, &late);
    for (occ, set) in fwd.sets.iter().filter(|(_, s)| !s.is_empty()) {
        println!("{occ} ({}): forward-looking {:?}", occ22.occupations[occ].title, set);
    }

    let titles = SkillIndex::over_titles(&occ18, &enc)?;
    for title in ["senior data analyst", "machine learning engineer", "nurse"] {
        let occ = assign_occupation(&enc.encode_text(title)?.0, &titles);
        println!("{title:?} -> {occ} ({})", occ18.occupations[&occ].title);
    }

    for kind in [StabilityKind::OccupationList, StabilityKind::TaskSets] {
        print!("{}", taxonomy_stability(&occ18, &occ22, kind));
    }
    Ok(())
}
