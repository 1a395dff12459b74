//! Textual checkpoint format.
//!
//! ```text
//! skillpanel-encoder v1
//! max_len 64
//! dims vocab=812 embed=64 hidden=64 attn=64 out=128
//! vocab 812
//! "<pad>"
//! ...
//! tensor embedding 812 64
//! <one row per line, values in shortest round-trip exponent form>
//! ```
//!
//! Values are written with `{:e}`, which round-trips every finite `f64`
//! bit-exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::params::{EncoderDims, EncoderParams, Tensor};
use super::vocab::Vocabulary;
use super::Encoder;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "skillpanel-encoder v1";

pub fn write_checkpoint<W: Write>(encoder: &Encoder, mut out: W) -> Result<()> {
    let d = encoder.params.dims();
    writeln!(out, "{CHECKPOINT_MAGIC}")?;
    writeln!(out, "max_len {}", encoder.max_len)?;
    writeln!(
        out,
        "dims vocab={} embed={} hidden={} attn={} out={}",
        d.vocab, d.embed, d.hidden, d.attn, d.out
    )?;
    writeln!(out, "vocab {}", encoder.vocab.len())?;
    for tok in encoder.vocab.tokens() {
        writeln!(out, "{}", serde_json::to_string(tok)?)?;
    }
    let mut line = String::new();
    for t in Tensor::ALL {
        let (rows, cols) = t.shape(d);
        writeln!(out, "tensor {} {} {}", t.name(), rows, cols)?;
        for row in encoder.params.tensor(t).chunks(cols) {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                write!(line, "{v:e}").expect("write to string");
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

fn next_line<B: BufRead>(lines: &mut std::io::Lines<B>, what: &str) -> Result<String> {
    match lines.next() {
        Some(l) => Ok(l?),
        None => Err(Error::parse("checkpoint", format!("unexpected end of file, expected {what}"))),
    }
}

fn keyed<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| Error::parse("checkpoint", format!("expected `{key}`, found `{line}`")))
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse("checkpoint", format!("bad {what}: `{s}`")))
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<Encoder> {
    let mut lines = input.lines();
    let magic = next_line(&mut lines, "header")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::parse("checkpoint", format!("unknown header `{magic}`")));
    }
    let max_len: usize = num(keyed(&next_line(&mut lines, "max_len")?, "max_len")?, "max_len")?;
    let dims_line = next_line(&mut lines, "dims")?;
    let mut dims = EncoderDims::with_vocab(0);
    for field in keyed(&dims_line, "dims")?.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::parse("checkpoint", format!("bad dims field `{field}`")))?;
        let v: usize = num(v, k)?;
        match k {
            "vocab" => dims.vocab = v,
            "embed" => dims.embed = v,
            "hidden" => dims.hidden = v,
            "attn" => dims.attn = v,
            "out" => dims.out = v,
            _ => return Err(Error::parse("checkpoint", format!("unknown dim `{k}`"))),
        }
    }
    let n_vocab: usize = num(keyed(&next_line(&mut lines, "vocab")?, "vocab")?, "vocab size")?;
    let mut tokens = Vec::with_capacity(n_vocab);
    for _ in 0..n_vocab {
        let l = next_line(&mut lines, "vocab token")?;
        tokens.push(serde_json::from_str::<String>(&l)?);
    }
    let vocab = Vocabulary::from_tokens(tokens);

    let mut params = EncoderParams::zeros(dims)?;
    for t in Tensor::ALL {
        let header = next_line(&mut lines, "tensor header")?;
        let parts: Vec<&str> = keyed(&header, "tensor")?.split_whitespace().collect();
        let expected = t.shape(&dims);
        if parts.len() != 3 || parts[0] != t.name() {
            return Err(Error::parse("checkpoint", format!("expected tensor {}, found `{header}`", t.name())));
        }
        let found: (usize, usize) = (num(parts[1], "rows")?, num(parts[2], "cols")?);
        if found != expected {
            return Err(Error::Shape {
                tensor: t.name().into(),
                expected: format!("{expected:?}"),
                found: format!("{found:?}"),
            });
        }
        let dst = params.tensor_mut(t);
        for r in 0..expected.0 {
            let l = next_line(&mut lines, t.name())?;
            let row = &mut dst[r * expected.1..][..expected.1];
            let mut n = 0;
            for (slot, tok) in row.iter_mut().zip(l.split(' ')) {
                *slot = num(tok, t.name())?;
                n += 1;
            }
            if n != expected.1 || l.split(' ').count() != expected.1 {
                return Err(Error::parse("checkpoint", format!("row {r} of {} has wrong length", t.name())));
            }
        }
    }
    Encoder::new(vocab, params, max_len)
}
