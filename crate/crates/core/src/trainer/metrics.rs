use std::fmt;

use crate::corpus::{Split, SyntheticPair};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::taxonomy::SkillIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub mrr: f64,
    pub recall_at_5: f64,
    pub query_count: usize,
}

impl MetricsReport {
    /// Metrics from 1-based ranks of the true label.
    pub fn from_ranks(ranks: &[usize]) -> Self {
        let q = ranks.len();
        if q == 0 {
            return Self {
                mrr: 0.0,
                recall_at_5: 0.0,
                query_count: 0,
            };
        }
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / q as f64;
        let hits = ranks.iter().filter(|&&r| r <= 5).count();
        Self {
            mrr,
            recall_at_5: hits as f64 / q as f64,
            query_count: q,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut mrr = None;
        let mut r5 = None;
        let mut q = None;
        for line in text.lines() {
            let Some((k, v)) = line.split_once('=') else { continue };
            let bad = |_| Error::parse("metrics report", format!("bad value in `{line}`"));
            match k.trim() {
                "mrr" => mrr = Some(v.trim().parse::<f64>().map_err(bad)?),
                "recall_at_5" => r5 = Some(v.trim().parse::<f64>().map_err(bad)?),
                "q" => q = Some(v.trim().parse::<usize>().map_err(|_| Error::parse("metrics report", line))?),
                _ => {}
            }
        }
        match (mrr, r5, q) {
            (Some(mrr), Some(recall_at_5), Some(query_count)) => Ok(Self {
                mrr,
                recall_at_5,
                query_count,
            }),
            _ => Err(Error::parse("metrics report", "missing mrr, recall_at_5 or q")),
        }
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mrr={}", self.mrr)?;
        writeln!(f, "recall_at_5={}", self.recall_at_5)?;
        writeln!(f, "q={}", self.query_count)
    }
}

/// 1-based rank of `truth` when sorting scores descending, ties broken by
/// ascending index.
pub fn rank_of(scores: &[f64], truth: usize) -> usize {
    let s = scores[truth];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(i, &v)| v > s || (v == s && i < truth))
        .count()
}

/// Ranks every skill in the index for each eval sentence.
pub fn evaluate_retrieval(
    pairs: &[SyntheticPair],
    encoder: &Encoder,
    index: &SkillIndex,
) -> Result<MetricsReport> {
    let eval: Vec<&SyntheticPair> = pairs.iter().filter(|p| p.split == Split::Eval).collect();
    if eval.is_empty() {
        return Err(Error::invalid("evaluation split is empty"));
    }
    let mut ranks = Vec::with_capacity(eval.len());
    for p in eval {
        let truth = index
            .position(&p.skill_id)
            .ok_or_else(|| Error::invalid(format!("skill `{}` missing from index", p.skill_id)))?;
        let e = encoder.encode_text(&p.sentence)?;
        let scores = index.scores(e.as_slice());
        ranks.push(rank_of(&scores, truth));
    }
    Ok(MetricsReport::from_ranks(&ranks))
}
