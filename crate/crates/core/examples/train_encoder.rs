//! Train the bi-encoder on synthetic pairs for the bundled skills and report
//! retrieval metrics before and after.

use std::time::Instant;

use skillpanel::corpus::{generate_synthetic_pairs, Split};
use skillpanel::encoder::{Encoder, EncoderDims, VocabConfig, Vocabulary};
use skillpanel::fixture::skill_taxonomy;
use skillpanel::taxonomy::{IndexMode, SkillIndex};
use skillpanel::trainer::{evaluate_retrieval, train_biencoder, TrainingConfig};

fn main() -> skillpanel::Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let dim: usize = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(32);
    let skills = skill_taxonomy("2018");
    let pairs = generate_synthetic_pairs(&skills, 20, 7)?;
    let mut texts: Vec<String> = skills.skills.values().map(|s| s.text()).collect();
    texts.extend(pairs.iter().filter(|p| p.split == Split::Train).map(|p| p.sentence.clone()));
    let vocab = Vocabulary::build(&texts, VocabConfig::default());
    let dims = EncoderDims {
        embed: dim,
        hidden: dim,
        attn: dim,
        ..EncoderDims::with_vocab(vocab.len())
    };
    let init = Encoder::init(vocab, dims, 64, 1)?;
    let before = evaluate_retrieval(&pairs, &init, &SkillIndex::build(&skills, &init, IndexMode::Exact)?)?;
    println!("vocab={} untrained: {}", init.vocab.len(), before.to_string().replace('\n', " "));

    let start = Instant::now();
    let cfg = TrainingConfig {
        epochs,
        ..TrainingConfig::default()
    };
    let out = train_biencoder(&pairs, &skills, &cfg, init)?;
    let trained = out.encoder;
    let after = evaluate_retrieval(&pairs, &trained, &SkillIndex::build(&skills, &trained, IndexMode::Exact)?)?;
    println!("loss trace: {:?}", out.loss_trace.iter().map(|l| format!("{l:.4}")).collect::<Vec<_>>());
    println!("trained: {}", after.to_string().replace('\n', " "));
    println!("training took {:.1?}", start.elapsed());
    Ok(())
}
