//! Posting-level skill extraction, alignment against occupation baselines, and
//! aggregation to the firm-occupation-year panel.

mod panel;
mod stock;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::JobPosting;
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::taxonomy::SkillIndex;
use crate::textproc::{segment_sentences, SegmentConfig};
use crate::trainer::Prescreener;

pub use panel::{
    aggregate_panel, forward_measures, read_panel, write_panel, IntensityMode, PanelCell, PanelInputs,
    PANEL_HEADER,
};
pub use stock::{ai_stock, ai_stock_panel, text_consistency};

#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    pub tau: f64,
    pub cap: usize,
    pub segment: SegmentConfig,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            tau: 0.6,
            cap: 5,
            segment: SegmentConfig::default(),
        }
    }
}

/// Skills found in one posting before alignment. `skills` maps each skill id
/// to the indices of the sentences it was matched in.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtractedPosting {
    pub posting_id: String,
    pub skills: BTreeMap<String, Vec<usize>>,
    /// Sentences that passed the pre-screener.
    pub kept_sentences: Vec<String>,
}

impl ExtractedPosting {
    pub fn skill_set(&self) -> BTreeSet<String> {
        self.skills.keys().cloned().collect()
    }
}

/// Segment, pre-screen, then link each kept sentence to at most `cap` skills
/// with similarity at least `tau`. Without a pre-screener every sentence is
/// kept.
pub fn extract_skills(
    posting: &JobPosting,
    prescreener: Option<&Prescreener>,
    encoder: &Encoder,
    index: &SkillIndex,
    config: &ExtractionConfig,
) -> Result<ExtractedPosting> {
    if !(0.0..=1.0).contains(&config.tau) {
        return Err(Error::invalid(format!("threshold {} outside [0, 1]", config.tau)));
    }
    let mut out = ExtractedPosting {
        posting_id: posting.posting_id.clone(),
        ..Default::default()
    };
    for sentence in segment_sentences(posting, &config.segment) {
        let emb = encoder.encode_text(&sentence.text)?.0;
        if let Some(p) = prescreener {
            if !p.keeps(&emb) {
                continue;
            }
        }
        let k = out.kept_sentences.len();
        out.kept_sentences.push(sentence.text);
        let mut hits = index.above(&emb, config.tau);
        hits.truncate(config.cap);
        for (pos, _) in hits {
            out.skills.entry(index.id(pos).to_string()).or_default().push(k);
        }
    }
    Ok(out)
}

/// Splits a skill set into the part inside the occupation baseline and the
/// part outside it.
pub fn classify_alignment(
    occ_id: &str,
    skills: &BTreeSet<String>,
    baseline: Option<&BTreeSet<String>>,
) -> Result<(BTreeSet<String>, BTreeSet<String>)> {
    let b = baseline.ok_or_else(|| Error::MissingBaseline(occ_id.to_string()))?;
    Ok((
        skills.intersection(b).cloned().collect(),
        skills.difference(b).cloned().collect(),
    ))
}

/// Everything the panel needs to know about one posting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostingRecord {
    pub posting_id: String,
    pub firm_id: String,
    pub occ_id: String,
    pub year: i32,
    pub skills: BTreeMap<String, Vec<usize>>,
    pub aligned: BTreeSet<String>,
    pub nonaligned: BTreeSet<String>,
    pub kept_sentences: Vec<String>,
    /// Embedding of title and body together.
    pub doc_embedding: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderDims, Vocabulary, VocabConfig};
    use crate::taxonomy::IndexMode;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn alignment_is_set_algebra() {
        let b = set(&["a", "b"]);
        let (al, na) = classify_alignment("o", &set(&["a", "x"]), Some(&b)).unwrap();
        assert_eq!((al, na), (set(&["a"]), set(&["x"])));
        let (_, na) = classify_alignment("o", &set(&["a"]), Some(&b)).unwrap();
        assert!(na.is_empty());
        let (al, na) = classify_alignment("o", &set(&[]), Some(&b)).unwrap();
        assert!(al.is_empty() && na.is_empty());
        assert!(matches!(
            classify_alignment("o", &set(&["a"]), None),
            Err(Error::MissingBaseline(_))
        ));
    }

    fn setup() -> (Encoder, JobPosting) {
        let texts = ["write sql queries daily", "manage cloud servers"];
        let vocab = Vocabulary::build(&texts, VocabConfig::default());
        let enc = Encoder::init(vocab, EncoderDims::with_vocab(0), 16, 3).unwrap();
        let p = JobPosting {
            posting_id: "p1".into(),
            firm_id: "f".into(),
            year: 2020,
            title: "analyst".into(),
            body: "Write SQL queries daily. Write SQL queries daily.".into(),
        };
        (enc, p)
    }

    fn index_around(enc: &Encoder, text: &str, n: usize) -> SkillIndex {
        // n labels all sharing a large component with the sentence embedding
        let e = enc.encode_text(text).unwrap().0;
        let entries = (0..n)
            .map(|i| {
                let mut v: Vec<f64> = e.iter().map(|x| x * 10.0).collect();
                let d = v.len();
                v[i % d] += 1.0 + i as f64 * 0.1;
                (format!("s{i}"), v)
            })
            .collect();
        SkillIndex::from_vectors(entries, IndexMode::Exact).unwrap()
    }

    #[test]
    fn cap_keeps_top_five_and_dedups_across_sentences() {
        let (enc, p) = setup();
        let idx = index_around(&enc, "write sql queries daily.", 7);
        let cfg = ExtractionConfig {
            tau: 0.5,
            ..Default::default()
        };
        let got = extract_skills(&p, None, &enc, &idx, &cfg).unwrap();
        assert_eq!(got.kept_sentences.len(), 2);
        assert_eq!(got.skills.len(), 5);
        assert!(got.skills.values().all(|v| v == &vec![0, 1]));
        let q = enc.encode_text("write sql queries daily.").unwrap().0;
        let want: BTreeSet<String> = idx
            .top_k_exact(&q, 5)
            .into_iter()
            .map(|(i, _)| idx.id(i).to_string())
            .collect();
        assert_eq!(got.skill_set(), want);
    }

    #[test]
    fn rejecting_prescreener_gives_empty_set() {
        let (enc, p) = setup();
        let idx = index_around(&enc, "write sql queries daily.", 3);
        let mut clf = Prescreener::zeros(enc.params.dims().out);
        clf.bias = -10.0;
        let got = extract_skills(&p, Some(&clf), &enc, &idx, &ExtractionConfig::default()).unwrap();
        assert!(got.skills.is_empty() && got.kept_sentences.is_empty());
    }
}
