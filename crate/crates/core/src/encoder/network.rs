//! Embedding lookup, bidirectional LSTM, additive attention pooling and a
//! normalized linear projection, with hand-written backpropagation.
//!
//! Gate blocks inside the LSTM weights are ordered input, forget, cell,
//! output. The backward-direction LSTM reads the sequence right to left and
//! its state for position `t` is stored at position `t`.

use super::params::{EncoderParams, GradViews, Gradients, Tensor};
use crate::error::{Error, Result};

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    pub tokens: Vec<u32>,
    fwd: LstmTrace,
    bwd: LstmTrace,
    /// L x 2b concatenated states.
    outputs: Vec<f64>,
    /// L x a attention features after tanh.
    features: Vec<f64>,
    pub alpha: Vec<f64>,
    context: Vec<f64>,
    norm: f64,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
struct LstmTrace {
    /// L x 4b activated gates, indexed by sequence position.
    gates: Vec<f64>,
    /// L x b cell states.
    cells: Vec<f64>,
    /// L x b hidden states.
    hidden: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// out += M x, with M row-major rows x x.len().
#[inline]
fn gemv_acc(out: &mut [f64], m: &[f64], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// out += Mᵀ y.
#[inline]
fn gemv_t_acc(out: &mut [f64], m: &[f64], y: &[f64]) {
    let cols = out.len();
    for (&yi, row) in y.iter().zip(m.chunks_exact(cols)) {
        if yi != 0.0 {
            for (o, w) in out.iter_mut().zip(row) {
                *o += yi * w;
            }
        }
    }
}

/// G += y xᵀ.
#[inline]
fn outer_acc(g: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (&yi, row) in y.iter().zip(g.chunks_exact_mut(cols)) {
        if yi != 0.0 {
            for (gi, xi) in row.iter_mut().zip(x) {
                *gi += yi * xi;
            }
        }
    }
}

fn check_tokens(tokens: &[u32], vocab: usize) -> Result<()> {
    if tokens.is_empty() {
        return Err(Error::Shape {
            tensor: "token ids".into(),
            expected: "at least one id".into(),
            found: "0".into(),
        });
    }
    if let Some(&bad) = tokens.iter().find(|&&id| id as usize >= vocab) {
        return Err(Error::Shape {
            tensor: Tensor::Embedding.name().into(),
            expected: format!("token id < {vocab}"),
            found: bad.to_string(),
        });
    }
    Ok(())
}

fn lstm_forward(
    params: &EncoderParams,
    tensors: [Tensor; 3],
    tokens: &[u32],
    reverse: bool,
) -> LstmTrace {
    let d = params.dims();
    let (h, b) = (d.embed, d.hidden);
    let emb = params.tensor(Tensor::Embedding);
    let w = params.tensor(tensors[0]);
    let u = params.tensor(tensors[1]);
    let bias = params.tensor(tensors[2]);
    let len = tokens.len();
    let mut tr = LstmTrace {
        gates: vec![0.0; len * 4 * b],
        cells: vec![0.0; len * b],
        hidden: vec![0.0; len * b],
    };
    let zero = vec![0.0; b];
    let mut prev: Option<usize> = None;
    let mut z = vec![0.0; 4 * b];
    for step in 0..len {
        let pos = if reverse { len - 1 - step } else { step };
        let x = &emb[tokens[pos] as usize * h..][..h];
        z.copy_from_slice(bias);
        gemv_acc(&mut z, w, x);
        let (h_prev, c_prev) = match prev {
            Some(p) => (&tr.hidden[p * b..][..b], &tr.cells[p * b..][..b]),
            None => (&zero[..], &zero[..]),
        };
        gemv_acc(&mut z, u, h_prev);
        let mut c_new = vec![0.0; b];
        let mut h_new = vec![0.0; b];
        let gates = &mut tr.gates[pos * 4 * b..][..4 * b];
        for j in 0..b {
            let i = sigmoid(z[j]);
            let f = sigmoid(z[b + j]);
            let g = z[2 * b + j].tanh();
            let o = sigmoid(z[3 * b + j]);
            gates[j] = i;
            gates[b + j] = f;
            gates[2 * b + j] = g;
            gates[3 * b + j] = o;
            c_new[j] = f * c_prev[j] + i * g;
            h_new[j] = o * c_new[j].tanh();
        }
        tr.cells[pos * b..][..b].copy_from_slice(&c_new);
        tr.hidden[pos * b..][..b].copy_from_slice(&h_new);
        prev = Some(pos);
    }
    tr
}

/// Encodes active token ids into a unit-norm embedding, keeping the trace.
pub fn forward(params: &EncoderParams, tokens: &[u32]) -> Result<Trace> {
    let d = *params.dims();
    check_tokens(tokens, d.vocab)?;
    let (b, a, m) = (d.hidden, d.attn, d.out);
    let two_b = 2 * b;
    let len = tokens.len();

    let fwd = lstm_forward(
        params,
        [Tensor::FwdInput, Tensor::FwdRecurrent, Tensor::FwdBias],
        tokens,
        false,
    );
    let bwd = lstm_forward(
        params,
        [Tensor::BwdInput, Tensor::BwdRecurrent, Tensor::BwdBias],
        tokens,
        true,
    );
    let mut outputs = vec![0.0; len * two_b];
    for t in 0..len {
        let row = &mut outputs[t * two_b..][..two_b];
        row[..b].copy_from_slice(&fwd.hidden[t * b..][..b]);
        row[b..].copy_from_slice(&bwd.hidden[t * b..][..b]);
    }

    let attn_w = params.tensor(Tensor::AttnWeight);
    let attn_b = params.tensor(Tensor::AttnBias);
    let attn_v = params.tensor(Tensor::AttnVector);
    let mut features = vec![0.0; len * a];
    let mut scores = vec![0.0; len];
    for t in 0..len {
        let ut = &mut features[t * a..][..a];
        ut.copy_from_slice(attn_b);
        gemv_acc(ut, attn_w, &outputs[t * two_b..][..two_b]);
        ut.iter_mut().for_each(|v| *v = v.tanh());
        scores[t] = dot(attn_v, ut);
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut alpha: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = alpha.iter().sum();
    alpha.iter_mut().for_each(|v| *v /= total);

    let mut context = vec![0.0; two_b];
    for t in 0..len {
        let ot = &outputs[t * two_b..][..two_b];
        for (c, o) in context.iter_mut().zip(ot) {
            *c += alpha[t] * o;
        }
    }

    let mut z = params.tensor(Tensor::ProjBias).to_vec();
    gemv_acc(&mut z, params.tensor(Tensor::ProjWeight), &context);
    let norm = dot(&z, &z).sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::NonFinite(format!("projection norm {norm}")));
    }
    debug_assert_eq!(z.len(), m);
    let embedding = z.iter().map(|v| v / norm).collect();

    Ok(Trace {
        tokens: tokens.to_vec(),
        fwd,
        bwd,
        outputs,
        features,
        alpha,
        context,
        norm,
        embedding,
    })
}

fn lstm_backward(
    params: &EncoderParams,
    tensors: [Tensor; 3],
    grads: [&mut [f64]; 3],
    d_emb: &mut [f64],
    tr: &LstmTrace,
    d_hidden: &[f64],
    tokens: &[u32],
    reverse: bool,
) {
    let d = params.dims();
    let (h, b) = (d.embed, d.hidden);
    let emb = params.tensor(Tensor::Embedding);
    let w = params.tensor(tensors[0]);
    let u = params.tensor(tensors[1]);
    let [gw, gu, gbias] = grads;
    let len = tokens.len();
    let mut dh_next = vec![0.0; b];
    let mut dc_next = vec![0.0; b];
    let mut dz = vec![0.0; 4 * b];
    let mut dx = vec![0.0; h];
    for step in (0..len).rev() {
        let pos = if reverse { len - 1 - step } else { step };
        let prev = if step == 0 {
            None
        } else if reverse {
            Some(pos + 1)
        } else {
            Some(pos - 1)
        };
        let gates = &tr.gates[pos * 4 * b..][..4 * b];
        let cell = &tr.cells[pos * b..][..b];
        for j in 0..b {
            let (i, f, g, o) = (gates[j], gates[b + j], gates[2 * b + j], gates[3 * b + j]);
            let dh = d_hidden[pos * b + j] + dh_next[j];
            let tc = cell[j].tanh();
            let d_o = dh * tc;
            let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
            let c_prev = prev.map_or(0.0, |p| tr.cells[p * b + j]);
            dz[j] = dc * g * i * (1.0 - i);
            dz[b + j] = dc * c_prev * f * (1.0 - f);
            dz[2 * b + j] = dc * i * (1.0 - g * g);
            dz[3 * b + j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        let x = &emb[tokens[pos] as usize * h..][..h];
        outer_acc(gw, &dz, x);
        for (gb, v) in gbias.iter_mut().zip(&dz) {
            *gb += v;
        }
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        if let Some(p) = prev {
            outer_acc(gu, &dz, &tr.hidden[p * b..][..b]);
            gemv_t_acc(&mut dh_next, u, &dz);
        }
        dx.iter_mut().for_each(|v| *v = 0.0);
        gemv_t_acc(&mut dx, w, &dz);
        let row = &mut d_emb[tokens[pos] as usize * h..][..h];
        for (r, v) in row.iter_mut().zip(&dx) {
            *r += v;
        }
    }
}

/// Accumulates into `grads` the parameter gradient of a scalar loss whose
/// gradient with respect to this trace's embedding is `d_embedding`.
pub fn backward(
    params: &EncoderParams,
    trace: &Trace,
    d_embedding: &[f64],
    grads: &mut Gradients,
) -> Result<()> {
    let d = *params.dims();
    let (b, a, m) = (d.hidden, d.attn, d.out);
    let two_b = 2 * b;
    if d_embedding.len() != m {
        return Err(Error::Shape {
            tensor: "embedding gradient".into(),
            expected: m.to_string(),
            found: d_embedding.len().to_string(),
        });
    }
    let len = trace.tokens.len();
    let views: GradViews<'_> = grads.split_mut();

    // e = z / |z|
    let e = &trace.embedding;
    let proj = dot(e, d_embedding);
    let dz: Vec<f64> = e
        .iter()
        .zip(d_embedding)
        .map(|(ei, gi)| (gi - ei * proj) / trace.norm)
        .collect();
    outer_acc(views.proj_w, &dz, &trace.context);
    for (g, v) in views.proj_b.iter_mut().zip(&dz) {
        *g += v;
    }
    let mut d_context = vec![0.0; two_b];
    gemv_t_acc(&mut d_context, params.tensor(Tensor::ProjWeight), &dz);

    // c = sum_t alpha_t o_t
    let mut d_outputs = vec![0.0; len * two_b];
    let mut d_alpha = vec![0.0; len];
    for t in 0..len {
        let ot = &trace.outputs[t * two_b..][..two_b];
        d_alpha[t] = dot(&d_context, ot);
        for (dst, dc) in d_outputs[t * two_b..][..two_b].iter_mut().zip(&d_context) {
            *dst += trace.alpha[t] * dc;
        }
    }
    let mean: f64 = trace.alpha.iter().zip(&d_alpha).map(|(a, g)| a * g).sum();
    let attn_v = params.tensor(Tensor::AttnVector);
    let attn_w = params.tensor(Tensor::AttnWeight);
    let mut d_pre = vec![0.0; a];
    for t in 0..len {
        let ds = trace.alpha[t] * (d_alpha[t] - mean);
        let ut = &trace.features[t * a..][..a];
        for k in 0..a {
            views.attn_v[k] += ds * ut[k];
            d_pre[k] = ds * attn_v[k] * (1.0 - ut[k] * ut[k]);
            views.attn_b[k] += d_pre[k];
        }
        let ot = &trace.outputs[t * two_b..][..two_b];
        outer_acc(views.attn_w, &d_pre, ot);
        gemv_t_acc(&mut d_outputs[t * two_b..][..two_b], attn_w, &d_pre);
    }

    let mut dh_fwd = vec![0.0; len * b];
    let mut dh_bwd = vec![0.0; len * b];
    for t in 0..len {
        let row = &d_outputs[t * two_b..][..two_b];
        dh_fwd[t * b..][..b].copy_from_slice(&row[..b]);
        dh_bwd[t * b..][..b].copy_from_slice(&row[b..]);
    }
    let GradViews {
        embedding, fwd, bwd, ..
    } = views;
    lstm_backward(
        params,
        [Tensor::FwdInput, Tensor::FwdRecurrent, Tensor::FwdBias],
        fwd,
        embedding,
        &trace.fwd,
        &dh_fwd,
        &trace.tokens,
        false,
    );
    lstm_backward(
        params,
        [Tensor::BwdInput, Tensor::BwdRecurrent, Tensor::BwdBias],
        bwd,
        embedding,
        &trace.bwd,
        &dh_bwd,
        &trace.tokens,
        true,
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::params::EncoderDims;

    fn toy() -> EncoderParams {
        let dims = EncoderDims {
            vocab: 12,
            embed: 4,
            hidden: 3,
            attn: 5,
            out: 6,
        };
        EncoderParams::init(dims, 0.5, 11).unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        dot(v, v).sqrt()
    }

    #[test]
    fn singleton_attention_is_one() {
        let tr = forward(&toy(), &[4]).unwrap();
        assert_eq!(tr.alpha, vec![1.0]);
    }

    #[test]
    fn output_is_unit_norm() {
        let tr = forward(&toy(), &[2, 3, 4, 5, 2]).unwrap();
        assert!((norm(&tr.embedding) - 1.0).abs() < 1e-12);
        let s: f64 = tr.alpha.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_token_is_shape_error() {
        let err = forward(&toy(), &[2, 99]).unwrap_err();
        assert!(matches!(err, Error::Shape { ref tensor, .. } if tensor == "embedding"));
    }

    #[test]
    fn backward_matches_directional_derivative() {
        // Loss = w . e for a fixed w; compare the analytic gradient along a
        // random direction with a central difference along the same direction.
        let p = toy();
        let tokens = [2, 7, 3, 9];
        let w: Vec<f64> = (0..6).map(|i| (i as f64 * 0.7).sin()).collect();
        let tr = forward(&p, &tokens).unwrap();
        let mut g = Gradients::zeros_like(&p);
        backward(&p, &tr, &w, &mut g).unwrap();
        let dir: Vec<f64> = (0..p.flat().len()).map(|i| ((i * 31 % 17) as f64 - 8.0) / 8.0).collect();
        let analytic = dot(g.flat(), &dir);
        let eps = 1e-6;
        let loss = |sign: f64| {
            let mut q = p.clone();
            for (v, d) in q.flat_mut().iter_mut().zip(&dir) {
                *v += sign * eps * d;
            }
            dot(&forward(&q, &tokens).unwrap().embedding, &w)
        };
        let numeric = (loss(1.0) - loss(-1.0)) / (2.0 * eps);
        assert!((analytic - numeric).abs() < 1e-7 * (1.0 + analytic.abs()), "{analytic} vs {numeric}");
    }
}
