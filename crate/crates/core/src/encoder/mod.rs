//! Sentence encoder: character/bigram tokens, BiLSTM, attention pooling and a
//! normalized projection into the shared skill space.

mod checkpoint;
mod gradcheck;
mod network;
mod params;
mod vocab;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use gradcheck::{grad_check, GradCheckReport};
pub use network::{backward, forward, Trace};
pub use params::{EncoderDims, EncoderParams, Gradients, Layout, Tensor};
pub use vocab::{normalize_text, TokenSeq, VocabConfig, Vocabulary, PAD_ID, UNK_ID};

use crate::error::{Error, Result};

/// Uniform initialization bound for weight matrices.
pub const INIT_SCALE: f64 = 0.08;
pub const DEFAULT_MAX_LEN: usize = 64;

/// A unit-norm text embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Cosine similarity; errors when either vector has zero norm.
pub fn cosine_sim(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape {
            tensor: "cosine operands".into(),
            expected: u.len().to_string(),
            found: v.len().to_string(),
        });
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedSimilarity("zero-norm vector".into()));
    }
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((d / (nu * nv)).clamp(-1.0, 1.0))
}

/// Encodes a token sequence. Padding is masked out; an all-padding sequence
/// is read as a single unknown token.
pub fn encode(seq: &TokenSeq, params: &EncoderParams) -> Result<Embedding> {
    Ok(Embedding(forward(params, &seq.active())?.embedding))
}

/// Vocabulary, weights and truncation length bundled for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub vocab: Vocabulary,
    pub params: EncoderParams,
    pub max_len: usize,
}

impl Encoder {
    pub fn new(vocab: Vocabulary, params: EncoderParams, max_len: usize) -> Result<Self> {
        if params.dims().vocab != vocab.len() {
            return Err(Error::Shape {
                tensor: Tensor::Embedding.name().into(),
                expected: format!("{} rows", vocab.len()),
                found: params.dims().vocab.to_string(),
            });
        }
        if max_len == 0 {
            return Err(Error::invalid("max_len must be at least 1"));
        }
        Ok(Self {
            vocab,
            params,
            max_len,
        })
    }

    /// Randomly initialized encoder over `vocab`.
    pub fn init(
        vocab: Vocabulary,
        mut dims: EncoderDims,
        max_len: usize,
        seed: u64,
    ) -> Result<Self> {
        dims.vocab = vocab.len();
        let params = EncoderParams::init(dims, INIT_SCALE, seed)?;
        Self::new(vocab, params, max_len)
    }

    pub fn tokenize(&self, text: &str) -> TokenSeq {
        self.vocab.tokenize(text, self.max_len)
    }

    pub fn encode_text(&self, text: &str) -> Result<Embedding> {
        encode(&self.tokenize(text), &self.params)
    }

    pub fn encode_all<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Embedding>> {
        texts.iter().map(|t| self.encode_text(t.as_ref())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_identities() {
        let u = [0.6, 0.8];
        assert!((cosine_sim(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine_sim(&u, &[-0.6, -0.8]).unwrap(), -1.0);
        assert!(matches!(
            cosine_sim(&u, &[0.0, 0.0]),
            Err(Error::UndefinedSimilarity(_))
        ));
    }

    #[test]
    fn padding_positions_do_not_matter() {
        let vocab = Vocabulary::build(&["skill sentence"], VocabConfig::default());
        let dims = EncoderDims {
            vocab: 0,
            embed: 4,
            hidden: 4,
            attn: 4,
            out: 8,
        };
        let enc = Encoder::init(vocab, dims, 16, 1).unwrap();
        let seq = enc.tokenize("skill");
        let mut shuffled = seq.clone();
        // move padding in front of the real tokens
        shuffled.ids.rotate_right(enc.max_len - seq.len);
        let a = encode(&seq, &enc.params).unwrap();
        let b = encode(&shuffled, &enc.params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn encoding_is_deterministic() {
        let vocab = Vocabulary::build(&["data analysis"], VocabConfig::default());
        let dims = EncoderDims {
            vocab: 0,
            embed: 6,
            hidden: 5,
            attn: 4,
            out: 8,
        };
        let a = Encoder::init(vocab.clone(), dims, 32, 9).unwrap();
        let b = Encoder::init(vocab, dims, 32, 9).unwrap();
        let ea = a.encode_text("data analysis").unwrap();
        let eb = b.encode_text("data analysis").unwrap();
        let bits = |e: &Embedding| e.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&ea), bits(&eb));
        assert!((ea.norm() - 1.0).abs() < 1e-12);
    }
}
