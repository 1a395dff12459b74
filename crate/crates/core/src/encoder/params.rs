//! Flat parameter storage for the sentence encoder.
//!
//! Every tensor lives in one contiguous `Vec<f64>` so that optimizers,
//! gradient checks and checkpoints can treat the model as a single vector.
//! [`Tensor`] names each block and [`Layout`] gives its offset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Encoder dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderDims {
    pub vocab: usize,
    /// Token embedding width `h`.
    pub embed: usize,
    /// Recurrent hidden size `b` per direction.
    pub hidden: usize,
    /// Attention width `a`.
    pub attn: usize,
    /// Output embedding width `m`.
    pub out: usize,
}

impl EncoderDims {
    pub fn with_vocab(vocab: usize) -> Self {
        Self {
            vocab,
            embed: 64,
            hidden: 64,
            attn: 64,
            out: 128,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("vocab", self.vocab),
            ("embed", self.embed),
            ("hidden", self.hidden),
            ("attn", self.attn),
            ("out", self.out),
        ];
        for (name, v) in named {
            if v == 0 {
                return Err(Error::invalid(format!("encoder dimension `{name}` must be positive")));
            }
        }
        if self.vocab < 2 {
            return Err(Error::invalid("vocabulary needs the padding and unknown ids"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensor {
    Embedding,
    FwdInput,
    FwdRecurrent,
    FwdBias,
    BwdInput,
    BwdRecurrent,
    BwdBias,
    AttnWeight,
    AttnBias,
    AttnVector,
    ProjWeight,
    ProjBias,
}

impl Tensor {
    pub const ALL: [Tensor; 12] = [
        Tensor::Embedding,
        Tensor::FwdInput,
        Tensor::FwdRecurrent,
        Tensor::FwdBias,
        Tensor::BwdInput,
        Tensor::BwdRecurrent,
        Tensor::BwdBias,
        Tensor::AttnWeight,
        Tensor::AttnBias,
        Tensor::AttnVector,
        Tensor::ProjWeight,
        Tensor::ProjBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tensor::Embedding => "embedding",
            Tensor::FwdInput => "lstm_fwd_input",
            Tensor::FwdRecurrent => "lstm_fwd_recurrent",
            Tensor::FwdBias => "lstm_fwd_bias",
            Tensor::BwdInput => "lstm_bwd_input",
            Tensor::BwdRecurrent => "lstm_bwd_recurrent",
            Tensor::BwdBias => "lstm_bwd_bias",
            Tensor::AttnWeight => "attn_weight",
            Tensor::AttnBias => "attn_bias",
            Tensor::AttnVector => "attn_vector",
            Tensor::ProjWeight => "proj_weight",
            Tensor::ProjBias => "proj_bias",
        }
    }

    pub fn from_name(name: &str) -> Option<Tensor> {
        Tensor::ALL.into_iter().find(|t| t.name() == name)
    }

    /// (rows, cols); vectors have one column.
    pub fn shape(self, d: &EncoderDims) -> (usize, usize) {
        let gates = 4 * d.hidden;
        match self {
            Tensor::Embedding => (d.vocab, d.embed),
            Tensor::FwdInput | Tensor::BwdInput => (gates, d.embed),
            Tensor::FwdRecurrent | Tensor::BwdRecurrent => (gates, d.hidden),
            Tensor::FwdBias | Tensor::BwdBias => (gates, 1),
            Tensor::AttnWeight => (d.attn, 2 * d.hidden),
            Tensor::AttnBias | Tensor::AttnVector => (d.attn, 1),
            Tensor::ProjWeight => (d.out, 2 * d.hidden),
            Tensor::ProjBias => (d.out, 1),
        }
    }

    fn is_bias(self) -> bool {
        matches!(
            self,
            Tensor::FwdBias | Tensor::BwdBias | Tensor::AttnBias | Tensor::ProjBias
        )
    }
}

/// Offsets of each tensor inside the flat buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    dims: EncoderDims,
    offsets: [usize; 13],
}

impl Layout {
    pub fn new(dims: EncoderDims) -> Self {
        let mut offsets = [0; 13];
        for (i, t) in Tensor::ALL.iter().enumerate() {
            let (r, c) = t.shape(&dims);
            offsets[i + 1] = offsets[i] + r * c;
        }
        Self { dims, offsets }
    }

    pub fn dims(&self) -> &EncoderDims {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.offsets[12]
    }

    pub fn range(&self, t: Tensor) -> std::ops::Range<usize> {
        let i = t as usize;
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Tensor and in-tensor index for a flat coordinate.
    pub fn locate(&self, flat: usize) -> (Tensor, usize) {
        for t in Tensor::ALL {
            let r = self.range(t);
            if r.contains(&flat) {
                return (t, flat - r.start);
            }
        }
        panic!("coordinate {flat} outside parameter buffer of {}", self.total());
    }
}

/// Trainable encoder weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    layout: Layout,
    data: Vec<f64>,
}

impl EncoderParams {
    /// Weights uniform in `[-scale, scale]`, biases zero.
    pub fn init(dims: EncoderDims, scale: f64, seed: u64) -> Result<Self> {
        dims.validate()?;
        let layout = Layout::new(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; layout.total()];
        for t in Tensor::ALL {
            if t.is_bias() {
                continue;
            }
            for v in &mut data[layout.range(t)] {
                *v = rng.gen_range(-scale..=scale);
            }
        }
        Ok(Self { layout, data })
    }

    pub fn zeros(dims: EncoderDims) -> Result<Self> {
        dims.validate()?;
        let layout = Layout::new(dims);
        let data = vec![0.0; layout.total()];
        Ok(Self { layout, data })
    }

    pub fn from_flat(dims: EncoderDims, data: Vec<f64>) -> Result<Self> {
        dims.validate()?;
        let layout = Layout::new(dims);
        if data.len() != layout.total() {
            return Err(Error::Shape {
                tensor: "parameter buffer".into(),
                expected: layout.total().to_string(),
                found: data.len().to_string(),
            });
        }
        Ok(Self { layout, data })
    }

    pub fn dims(&self) -> &EncoderDims {
        self.layout.dims()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn tensor(&self, t: Tensor) -> &[f64] {
        &self.data[self.layout.range(t)]
    }

    pub fn tensor_mut(&mut self, t: Tensor) -> &mut [f64] {
        let r = self.layout.range(t);
        &mut self.data[r]
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Gradient buffer with the same layout as [`EncoderParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layout: Layout,
    pub(crate) data: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        Self {
            layout: params.layout.clone(),
            data: vec![0.0; params.data.len()],
        }
    }

    pub fn tensor(&self, t: Tensor) -> &[f64] {
        &self.data[self.layout.range(t)]
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|g| *g *= s);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub(crate) fn split_mut(&mut self) -> GradViews<'_> {
        GradViews::new(&self.layout, &mut self.data)
    }
}

/// Disjoint mutable views into a gradient buffer, one per tensor.
pub(crate) struct GradViews<'a> {
    pub embedding: &'a mut [f64],
    pub fwd: [&'a mut [f64]; 3],
    pub bwd: [&'a mut [f64]; 3],
    pub attn_w: &'a mut [f64],
    pub attn_b: &'a mut [f64],
    pub attn_v: &'a mut [f64],
    pub proj_w: &'a mut [f64],
    pub proj_b: &'a mut [f64],
}

impl<'a> GradViews<'a> {
    fn new(layout: &Layout, data: &'a mut [f64]) -> Self {
        let mut rest = data;
        let mut take = |t: Tensor| -> &'a mut [f64] {
            let n = layout.range(t).len();
            let (head, tail) = std::mem::take(&mut rest).split_at_mut(n);
            rest = tail;
            head
        };
        let embedding = take(Tensor::Embedding);
        let fwd = [take(Tensor::FwdInput), take(Tensor::FwdRecurrent), take(Tensor::FwdBias)];
        let bwd = [take(Tensor::BwdInput), take(Tensor::BwdRecurrent), take(Tensor::BwdBias)];
        let attn_w = take(Tensor::AttnWeight);
        let attn_b = take(Tensor::AttnBias);
        let attn_v = take(Tensor::AttnVector);
        let proj_w = take(Tensor::ProjWeight);
        let proj_b = take(Tensor::ProjBias);
        Self {
            embedding,
            fwd,
            bwd,
            attn_w,
            attn_b,
            attn_v,
            proj_w,
            proj_b,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> EncoderDims {
        EncoderDims {
            vocab: 5,
            embed: 3,
            hidden: 2,
            attn: 4,
            out: 6,
        }
    }

    #[test]
    fn layout_is_contiguous() {
        let l = Layout::new(dims());
        let mut end = 0;
        for t in Tensor::ALL {
            let r = l.range(t);
            assert_eq!(r.start, end);
            let (rows, cols) = t.shape(&dims());
            assert_eq!(r.len(), rows * cols);
            end = r.end;
        }
        assert_eq!(end, l.total());
        assert_eq!(l.locate(l.range(Tensor::AttnVector).start + 1), (Tensor::AttnVector, 1));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = EncoderParams::init(dims(), 0.08, 3).unwrap();
        let b = EncoderParams::init(dims(), 0.08, 3).unwrap();
        let c = EncoderParams::init(dims(), 0.08, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.flat().iter().all(|v| v.abs() <= 0.08));
        assert!(a.tensor(Tensor::ProjBias).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_dimension_rejected() {
        let mut d = dims();
        d.attn = 0;
        assert!(EncoderParams::init(d, 0.08, 0).is_err());
    }

    #[test]
    fn grad_views_partition_buffer() {
        let p = EncoderParams::zeros(dims()).unwrap();
        let mut g = Gradients::zeros_like(&p);
        let total = g.flat().len();
        let v = g.split_mut();
        let sum = v.embedding.len()
            + v.fwd.iter().map(|s| s.len()).sum::<usize>()
            + v.bwd.iter().map(|s| s.len()).sum::<usize>()
            + v.attn_w.len()
            + v.attn_b.len()
            + v.attn_v.len()
            + v.proj_w.len()
            + v.proj_b.len();
        assert_eq!(sum, total);
    }
}
