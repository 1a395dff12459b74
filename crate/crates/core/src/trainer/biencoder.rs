use std::collections::BTreeMap;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{batch_loss_and_grad, ContrastiveBatch, SampleRef};
use super::negatives::sample_negative_indices;
use crate::corpus::{Split, SyntheticPair};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::taxonomy::SkillTaxonomy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub margin: f64,
    pub negatives: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
    /// Draw fresh negatives every epoch instead of fixing them once.
    pub resample_negatives: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            margin: 0.5,
            negatives: 5,
            batch_size: 32,
            epochs: 5,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            seed: 0,
            resample_negatives: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(Error::invalid("margin must be positive"));
        }
        if self.negatives == 0 {
            return Err(Error::invalid("negatives must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub encoder: Encoder,
    /// Mean batch loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// Trains one shared encoder on sentence/skill pairs from the train split.
/// Skill texts are the taxonomy label plus description.
pub fn train_biencoder(
    pairs: &[SyntheticPair],
    taxonomy: &SkillTaxonomy,
    config: &TrainingConfig,
    init: Encoder,
) -> Result<TrainOutcome> {
    config.validate()?;
    let skill_ids = taxonomy.ids();
    let skill_pos: BTreeMap<&str, usize> = skill_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let train: Vec<(Vec<u32>, usize)> = pairs
        .iter()
        .filter(|p| p.split == Split::Train)
        .map(|p| {
            let k = *skill_pos
                .get(p.skill_id.as_str())
                .ok_or_else(|| Error::invalid(format!("pair references unknown skill `{}`", p.skill_id)))?;
            Ok((init.tokenize(&p.sentence).active(), k))
        })
        .collect::<Result<_>>()?;
    if train.is_empty() {
        return Err(Error::invalid("train split is empty"));
    }
    let skill_tokens: Vec<Vec<u32>> = taxonomy
        .skills
        .values()
        .map(|s| init.tokenize(&s.text()).active())
        .collect();

    let mut encoder = init;
    let mut opt = Adam::new(encoder.params.flat().len(), config.learning_rate, Some(config.clip_norm));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut fixed_negatives: Option<Vec<Vec<usize>>> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let negatives = match (&fixed_negatives, config.resample_negatives) {
            (Some(n), false) => n.clone(),
            _ => {
                let n = train
                    .iter()
                    .map(|(_, k)| sample_negative_indices(&[*k], skill_ids.len(), config.negatives, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                if !config.resample_negatives {
                    fixed_negatives = Some(n.clone());
                }
                n
            }
        };
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = assemble_batch(chunk, &train, &negatives, &skill_tokens);
            let (loss, grads) = batch_loss_and_grad(&encoder.params, &batch, config.margin)?;
            if !loss.is_finite() || grads.flat().iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, batch: b, loss });
            }
            opt.step(encoder.params.flat_mut(), grads.flat());
            epoch_loss += loss;
            batches += 1;
        }
        let mean = epoch_loss / batches as f64;
        debug!("epoch {epoch}: mean loss {mean:.5}");
        loss_trace.push(mean);
    }
    Ok(TrainOutcome { encoder, loss_trace })
}

fn assemble_batch(
    chunk: &[usize],
    train: &[(Vec<u32>, usize)],
    negatives: &[Vec<usize>],
    skill_tokens: &[Vec<u32>],
) -> ContrastiveBatch {
    let mut batch = ContrastiveBatch::default();
    let mut slot_of_skill: BTreeMap<usize, usize> = BTreeMap::new();
    let mut skill_slot = |k: usize, batch: &mut ContrastiveBatch| -> usize {
        *slot_of_skill.entry(k).or_insert_with(|| {
            batch.sequences.push(skill_tokens[k].clone());
            batch.sequences.len() - 1
        })
    };
    for &i in chunk {
        let (tokens, k) = &train[i];
        batch.sequences.push(tokens.clone());
        let sentence = batch.sequences.len() - 1;
        let positives = vec![skill_slot(*k, &mut batch)];
        let negs = negatives[i].iter().map(|&n| skill_slot(n, &mut batch)).collect();
        batch.samples.push(SampleRef {
            sentence,
            positives,
            negatives: negs,
        });
    }
    batch
}
