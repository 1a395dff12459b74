//! Margin-based contrastive loss over unit-norm embeddings.

use crate::encoder::{backward, forward, EncoderParams, Gradients, Trace};
use crate::error::{Error, Result};

/// One training sample, indexing into a shared embedding table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRef {
    pub sentence: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    /// Gradient with respect to every row of the embedding table.
    pub d_embeddings: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Batch-mean of `(1 - s.p) + (1/N) sum_j max(0, s.n_j - margin)`, averaged
/// over the positives of each sample, with exact gradients.
pub fn contrastive_loss(
    embeddings: &[Vec<f64>],
    samples: &[SampleRef],
    margin: f64,
) -> Result<LossGrad> {
    if samples.is_empty() {
        return Err(Error::invalid("contrastive loss needs at least one sample"));
    }
    if !(margin > 0.0) {
        return Err(Error::invalid(format!("margin must be positive, got {margin}")));
    }
    let dim = embeddings.first().map_or(0, Vec::len);
    let mut d = vec![vec![0.0; dim]; embeddings.len()];
    let batch = samples.len() as f64;
    let mut total = 0.0;
    for (i, s) in samples.iter().enumerate() {
        if s.positives.is_empty() {
            return Err(Error::invalid(format!("sample {i} has no positive")));
        }
        if s.negatives.is_empty() {
            return Err(Error::invalid(format!("sample {i} has no negatives (N = 0)")));
        }
        let idx = std::iter::once(s.sentence)
            .chain(s.positives.iter().copied())
            .chain(s.negatives.iter().copied());
        for j in idx {
            if j >= embeddings.len() {
                return Err(Error::invalid(format!("sample {i} references embedding {j}")));
            }
        }
        let es = &embeddings[s.sentence];
        let n_pos = s.positives.len() as f64;
        let n_neg = s.negatives.len() as f64;

        let mut ds = vec![0.0; dim];
        let mut pos_term = 0.0;
        for &p in &s.positives {
            let ep = &embeddings[p];
            pos_term += 1.0 - dot(es, ep);
            for k in 0..dim {
                ds[k] -= ep[k] / n_pos;
                d[p][k] -= es[k] / (n_pos * batch);
            }
        }
        let mut neg_term = 0.0;
        for &n in &s.negatives {
            let en = &embeddings[n];
            let excess = dot(es, en) - margin;
            if excess > 0.0 {
                neg_term += excess;
                for k in 0..dim {
                    ds[k] += en[k] / n_neg;
                    d[n][k] += es[k] / (n_neg * batch);
                }
            }
        }
        total += pos_term / n_pos + neg_term / n_neg;
        for k in 0..dim {
            d[s.sentence][k] += ds[k] / batch;
        }
    }
    Ok(LossGrad {
        loss: total / batch,
        d_embeddings: d,
    })
}

/// Token sequences plus samples referencing them; each distinct text appears
/// once in `sequences` so it is encoded once per step.
#[derive(Debug, Clone, Default)]
pub struct ContrastiveBatch {
    pub sequences: Vec<Vec<u32>>,
    pub samples: Vec<SampleRef>,
}

fn encode_batch(params: &EncoderParams, batch: &ContrastiveBatch) -> Result<Vec<Trace>> {
    batch.sequences.iter().map(|s| forward(params, s)).collect()
}

pub fn batch_loss(params: &EncoderParams, batch: &ContrastiveBatch, margin: f64) -> Result<f64> {
    let traces = encode_batch(params, batch)?;
    let embs: Vec<Vec<f64>> = traces.into_iter().map(|t| t.embedding).collect();
    Ok(contrastive_loss(&embs, &batch.samples, margin)?.loss)
}

/// Loss and its gradient with respect to every encoder parameter.
pub fn batch_loss_and_grad(
    params: &EncoderParams,
    batch: &ContrastiveBatch,
    margin: f64,
) -> Result<(f64, Gradients)> {
    let traces = encode_batch(params, batch)?;
    let embs: Vec<Vec<f64>> = traces.iter().map(|t| t.embedding.clone()).collect();
    let lg = contrastive_loss(&embs, &batch.samples, margin)?;
    let mut grads = Gradients::zeros_like(params);
    for (trace, de) in traces.iter().zip(&lg.d_embeddings) {
        if de.iter().any(|g| *g != 0.0) {
            backward(params, trace, de, &mut grads)?;
        }
    }
    Ok((lg.loss, grads))
}
