use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

/// Draws `n` distinct indices from `0..pool` that are not in `positives`,
/// uniformly without replacement.
pub fn sample_negative_indices<R: Rng + ?Sized>(
    positives: &[usize],
    pool: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::invalid("number of negatives must be at least 1"));
    }
    let mut excluded: Vec<usize> = positives.to_vec();
    excluded.sort_unstable();
    excluded.dedup();
    if pool <= n + excluded.len() {
        return Err(Error::invalid(format!(
            "taxonomy of {pool} skills too small for {n} negatives and {} positives",
            excluded.len()
        )));
    }
    let candidates = pool - excluded.len();
    let mut picks = sample(rng, candidates, n).into_vec();
    // map rank among non-excluded indices to the actual index
    for p in &mut picks {
        let mut idx = *p;
        for &e in &excluded {
            if e <= idx {
                idx += 1;
            } else {
                break;
            }
        }
        *p = idx;
    }
    Ok(picks)
}

/// Samples negatives by skill id for one training sentence.
pub fn sample_negatives<R: Rng + ?Sized>(
    positive_ids: &[&str],
    skill_ids: &[String],
    n: usize,
    rng: &mut R,
) -> Result<Vec<String>> {
    let positives: Vec<usize> = positive_ids
        .iter()
        .map(|id| {
            skill_ids
                .iter()
                .position(|s| s == id)
                .ok_or_else(|| Error::invalid(format!("unknown skill id `{id}`")))
        })
        .collect::<Result<_>>()?;
    Ok(sample_negative_indices(&positives, skill_ids.len(), n, rng)?
        .into_iter()
        .map(|i| skill_ids[i].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i:02}")).collect()
    }

    #[test]
    fn excludes_positive_and_is_distinct() {
        let ids = ids(50);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let neg = sample_negatives(&["S07"], &ids, 5, &mut rng).unwrap();
            assert_eq!(neg.len(), 5);
            assert!(!neg.contains(&"S07".to_string()));
            let mut d = neg.clone();
            d.sort();
            d.dedup();
            assert_eq!(d.len(), 5);
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let ids = ids(50);
        let a = sample_negatives(&["S01"], &ids, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_negatives(&["S01"], &ids, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_small_pool_is_invalid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_negative_indices(&[0], 6, 5, &mut rng).is_err());
        assert!(sample_negative_indices(&[0], 7, 5, &mut rng).is_ok());
        assert!(sample_negative_indices(&[0], 7, 0, &mut rng).is_err());
    }

    #[test]
    fn selection_frequencies_are_uniform() {
        // 10^4 draws of 5 from 49 eligible skills; each count ~ Binomial(10^4, 5/49)
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 10_000;
        let mut counts = vec![0usize; 50];
        for _ in 0..draws {
            for i in sample_negative_indices(&[13], 50, 5, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        assert_eq!(counts[13], 0);
        let p = 5.0 / 49.0;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            if i != 13 {
                assert!((c as f64 - mean).abs() < 3.5 * sd, "skill {i}: {c} vs {mean}");
            }
        }
        let chi2: f64 = counts
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 13)
            .map(|(_, &c)| (c as f64 - mean).powi(2) / mean)
            .sum();
        // 48 degrees of freedom; the 0.999 quantile is about 84
        assert!(chi2 < 84.0, "chi2 = {chi2}");
    }
}
