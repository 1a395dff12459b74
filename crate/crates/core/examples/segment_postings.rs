//! Split postings into sentences and count ambiguous skill phrasing.

use skillpanel::corpus::JobPosting;
use skillpanel::textproc::{
    scan_ambiguity, segment_sentences, segment_with_scorer, AmbiguityLexicon, LogisticBoundaryScorer,
    SegmentConfig,
};

fn posting(id: &str, body: &str) -> JobPosting {
    JobPosting {
        posting_id: id.into(),
        firm_id: "F1".into(),
        year: 2021,
        title: "data analyst".into(),
        body: body.into(),
    }
}

fn main() -> skillpanel::Result<()> {
    let cfg = SegmentConfig::default();
    let postings = [
        posting(
            "P1",
            "We are hiring! Familiar with SQL and Python. Version 2.5 of our stack runs on cloud infrastructure. Ability to learn quickly; experience preferred.",
        ),
        posting("P2", "Responsibilities:\n- Build dashboards\n- Some knowledge of statistics\n2) Present to clients"),
        posting("P3", "要求：熟悉Python；良好的沟通能力。有经验者优先！"),
    ];
    let lexicon = AmbiguityLexicon::default();
    for p in &postings {
        let sentences = segment_sentences(p, &cfg);
        println!("{} -> {} sentences", p.posting_id, sentences.len());
        for s in &sentences {
            println!("  [{}] {}", s.index, s.text);
        }
        let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
        let scan = scan_ambiguity(&texts, &lexicon);
        println!("  ambiguous phrases: {} (share {:.2})", scan.frequency, scan.share);
    }

    // a learned boundary scorer fitted to a handful of labeled texts
    let text = "Use e.g. SQL daily. Mr. Smith leads the team. Ship v2.0 now.".to_string();
    let gold = vec![19, 46, text.len()];
    let scorer = LogisticBoundaryScorer::train(&[(text.clone(), gold)], 2000, 1.0)?;
    for s in segment_with_scorer(&posting("P4", &text), &cfg, &scorer) {
        println!("scored: {}", s.text);
    }
    Ok(())
}
