//! Clustered approximate search against exact brute force.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillpanel::taxonomy::{IndexMode, SkillIndex};

fn main() -> skillpanel::Result<()> {
    let (n, dim) = (10_000, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let labels: Vec<(String, Vec<f64>)> = (0..n)
        .map(|i| (format!("L{i:05}"), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    let queries: Vec<Vec<f64>> = (0..2000)
        .map(|_| {
            let base = &labels[rng.gen_range(0..n)].1;
            base.iter().map(|x| x + rng.gen_range(-0.6..0.6)).collect()
        })
        .collect();
    for n_probe in [4, 12, 24, 48] {
        let start = Instant::now();
        let index = SkillIndex::from_vectors(
            labels.clone(),
            IndexMode::Approximate {
                clusters: None,
                n_probe,
                seed: 1,
            },
        )?;
        let built = start.elapsed();
        let start = Instant::now();
        let agree = queries
            .iter()
            .filter(|q| index.top_k(q, 1)[0].0 == index.top_k_exact(q, 1)[0].0)
            .count();
        println!(
            "n_probe={n_probe:>2}: top-1 agreement {:.4}, build {built:.1?}, {} queries {:.1?}",
            agree as f64 / queries.len() as f64,
            queries.len(),
            start.elapsed()
        );
    }
    Ok(())
}
