//! Sentence segmentation of posting bodies and the ambiguous-phrase scan.

use std::collections::HashSet;
use std::path::Path;

use crate::corpus::JobPosting;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    pub posting_id: String,
    pub index: usize,
    pub text: String,
}

/// Decides whether a candidate boundary (the byte offset just after a
/// punctuation mark) really ends a sentence.
pub trait BoundaryScorer {
    fn boundary_probability(&self, text: &str, position: usize) -> f64;
}

#[derive(Debug, Clone)]
pub struct SegmentConfig {
    /// Fragments with fewer alphanumeric characters than this and no
    /// terminal punctuation are merged into the previous sentence.
    pub min_chars: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig { min_chars: 4 }
    }
}

const TERMINALS: &[char] = &['!', '?', ';', '。', '！', '？', '；'];
const BULLETS: &[char] = &['•', '●', '▪', '◦', '■'];

fn is_cjk(c: char) -> bool {
    matches!(c as u32, 0x3000..=0x303F | 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xFF00..=0xFFEF)
}

fn is_terminal(c: char) -> bool {
    c == '.' || TERMINALS.contains(&c)
}

fn rule_boundary(text: &str, pos: usize, c: char) -> bool {
    if c != '.' {
        return true;
    }
    match text[pos..].chars().next() {
        None => true,
        Some(n) => n.is_whitespace() || is_cjk(n),
    }
}

/// Length in bytes of a list marker ("- ", "* ", "3. ", "2) ") at the start of `line`.
fn list_marker_len(line: &str) -> usize {
    let b = line.as_bytes();
    if b.len() >= 2 && (b[0] == b'-' || b[0] == b'*') && b[1] == b' ' {
        return 2;
    }
    let digits = b.iter().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 && digits <= 3 && b.len() > digits + 1 {
        if (b[digits] == b'.' || b[digits] == b')') && b[digits + 1] == b' ' {
            return digits + 2;
        }
    }
    0
}

fn raw_fragments(body: &str, scorer: Option<&dyn BoundaryScorer>) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        let t = cur.split_whitespace().collect::<Vec<_>>().join(" ");
        if !t.is_empty() {
            out.push(t);
        }
        cur.clear();
    };
    for line in body.split('\n') {
        flush(&mut cur, &mut out);
        let trimmed = line.trim_start();
        let offset = line.len() - trimmed.len() + list_marker_len(trimmed);
        let line = &line[offset..];
        for (i, c) in line.char_indices() {
            if BULLETS.contains(&c) {
                flush(&mut cur, &mut out);
                continue;
            }
            cur.push(c);
            if is_terminal(c) {
                let pos = i + c.len_utf8();
                let split = match scorer {
                    Some(s) => s.boundary_probability(line, pos) >= 0.5,
                    None => rule_boundary(line, pos, c),
                };
                if split {
                    flush(&mut cur, &mut out);
                }
            }
        }
    }
    flush(&mut cur, &mut out);
    out
}

fn merge_short(fragments: Vec<String>, min_chars: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(fragments.len());
    for f in fragments {
        let alnum = f.chars().filter(|c| c.is_alphanumeric()).count();
        let terminated = f.chars().last().is_some_and(is_terminal);
        match out.last_mut() {
            Some(prev) if alnum < min_chars && !terminated => {
                prev.push(' ');
                prev.push_str(&f);
            }
            _ => out.push(f),
        }
    }
    out
}

fn records(posting_id: &str, texts: Vec<String>) -> Vec<SentenceRecord> {
    texts
        .into_iter()
        .enumerate()
        .map(|(index, text)| SentenceRecord {
            posting_id: posting_id.to_string(),
            index,
            text,
        })
        .collect()
}

/// Rule-based segmentation. An empty body yields no sentences.
pub fn segment_sentences(posting: &JobPosting, config: &SegmentConfig) -> Vec<SentenceRecord> {
    let frags = merge_short(raw_fragments(&posting.body, None), config.min_chars);
    records(&posting.posting_id, frags)
}

/// Segmentation where `scorer` decides every punctuation boundary. Newlines and
/// bullets still always split.
pub fn segment_with_scorer(
    posting: &JobPosting,
    config: &SegmentConfig,
    scorer: &dyn BoundaryScorer,
) -> Vec<SentenceRecord> {
    let frags = merge_short(raw_fragments(&posting.body, Some(scorer)), config.min_chars);
    records(&posting.posting_id, frags)
}

/// Logistic boundary scorer over a few context features of the candidate
/// position.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticBoundaryScorer {
    pub weights: [f64; 6],
    pub bias: f64,
}

fn boundary_features(text: &str, pos: usize) -> [f64; 6] {
    let before = &text[..pos];
    let mark = before.chars().last().unwrap_or(' ');
    let mut after = text[pos..].chars();
    let next = after.next();
    let next2 = after.next();
    let word_len = before
        .trim_end_matches(is_terminal)
        .chars()
        .rev()
        .take_while(|c| c.is_alphanumeric())
        .count();
    [
        (mark == '.') as u8 as f64,
        next.map_or(1.0, |c| (c.is_whitespace() || is_cjk(c)) as u8 as f64),
        next2.map_or(1.0, |c| c.is_uppercase() as u8 as f64),
        (word_len <= 2) as u8 as f64,
        next.is_none() as u8 as f64,
        next.is_some_and(|c| c.is_ascii_digit()) as u8 as f64,
    ]
}

impl LogisticBoundaryScorer {
    /// Fits the scorer on texts whose true boundaries are given as byte
    /// offsets. Every terminal mark in the text is a training candidate.
    pub fn train(examples: &[(String, Vec<usize>)], epochs: usize, lr: f64) -> Result<Self> {
        let mut data = Vec::new();
        for (text, gold) in examples {
            let gold: HashSet<usize> = gold.iter().copied().collect();
            for (i, c) in text.char_indices().filter(|(_, c)| is_terminal(*c)) {
                let pos = i + c.len_utf8();
                data.push((boundary_features(text, pos), gold.contains(&pos)));
            }
        }
        if data.is_empty() {
            return Err(Error::invalid("no boundary candidates in training texts"));
        }
        let mut s = LogisticBoundaryScorer {
            weights: [0.0; 6],
            bias: 0.0,
        };
        let n = data.len() as f64;
        for _ in 0..epochs {
            let mut gw = [0.0; 6];
            let mut gb = 0.0;
            for (x, y) in &data {
                let err = s.prob(x) - (*y as u8 as f64);
                for (g, xi) in gw.iter_mut().zip(x) {
                    *g += err * xi / n;
                }
                gb += err / n;
            }
            for (w, g) in s.weights.iter_mut().zip(gw) {
                *w -= lr * g;
            }
            s.bias -= lr * gb;
        }
        Ok(s)
    }

    fn prob(&self, x: &[f64; 6]) -> f64 {
        let z = self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        1.0 / (1.0 + (-z).exp())
    }
}

impl BoundaryScorer for LogisticBoundaryScorer {
    fn boundary_probability(&self, text: &str, position: usize) -> f64 {
        self.prob(&boundary_features(text, position))
    }
}

fn normalize(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbiguityLexicon {
    phrases: Vec<String>,
}

pub const DEFAULT_AMBIGUOUS_PHRASES: &[&str] = &[
    "familiar with",
    "basic understanding of",
    "some knowledge of",
    "experience preferred",
    "ability to learn",
    "熟悉",
    "基本了解",
    "有一定了解",
    "有经验者优先",
    "学习能力",
];

impl Default for AmbiguityLexicon {
    fn default() -> Self {
        AmbiguityLexicon::new(DEFAULT_AMBIGUOUS_PHRASES.iter().map(|s| s.to_string()).collect())
            .expect("default lexicon is valid")
    }
}

impl AmbiguityLexicon {
    pub fn new(phrases: Vec<String>) -> Result<Self> {
        let phrases: Vec<String> = phrases.iter().map(|p| normalize(p)).collect();
        if phrases.is_empty() {
            return Err(Error::invalid("ambiguity lexicon is empty"));
        }
        let mut seen = HashSet::new();
        for p in &phrases {
            if p.is_empty() {
                return Err(Error::invalid("blank phrase in ambiguity lexicon"));
            }
            if !seen.insert(p) {
                return Err(Error::invalid(format!("duplicate phrase `{p}` in ambiguity lexicon")));
            }
        }
        Ok(AmbiguityLexicon { phrases })
    }

    /// Default phrases plus any new ones from `extra`.
    pub fn extended<I: IntoIterator<Item = String>>(extra: I) -> Self {
        let mut lex = AmbiguityLexicon::default();
        for p in extra {
            let p = normalize(&p);
            if !p.is_empty() && !lex.phrases.contains(&p) {
                lex.phrases.push(p);
            }
        }
        lex
    }

    /// One phrase per line; blank lines are ignored. The default phrases are
    /// always included.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::extended(text.lines().map(str::to_string)))
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AmbiguityScan {
    pub frequency: usize,
    pub share: f64,
    pub sentences: usize,
}

/// Counts every occurrence of every phrase and the share of sentences with at
/// least one match.
pub fn scan_ambiguity<S: AsRef<str>>(sentences: &[S], lexicon: &AmbiguityLexicon) -> AmbiguityScan {
    let mut frequency = 0;
    let mut hit = 0;
    for s in sentences {
        let norm = normalize(s.as_ref());
        let n: usize = lexicon.phrases.iter().map(|p| norm.matches(p.as_str()).count()).sum();
        frequency += n;
        hit += (n > 0) as usize;
    }
    let share = if sentences.is_empty() {
        0.0
    } else {
        hit as f64 / sentences.len() as f64
    };
    AmbiguityScan {
        frequency,
        share,
        sentences: sentences.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn posting(body: &str) -> JobPosting {
        JobPosting {
            posting_id: "p".into(),
            firm_id: "f".into(),
            year: 2020,
            title: "t".into(),
            body: body.into(),
        }
    }

    fn texts(body: &str) -> Vec<String> {
        segment_sentences(&posting(body), &SegmentConfig::default())
            .into_iter()
            .map(|r| r.text)
            .collect()
    }

    #[test]
    fn one_boundary_per_terminal_mark() {
        assert_eq!(texts("A. B! C?"), vec!["A.", "B!", "C?"]);
    }

    #[test]
    fn no_punctuation_is_one_sentence() {
        assert_eq!(texts("build data pipelines in python"), vec!["build data pipelines in python"]);
    }

    #[test]
    fn chinese_punctuation() {
        assert_eq!(texts("要求：熟悉Python；良好沟通能力。"), vec!["要求：熟悉Python；", "良好沟通能力。"]);
    }

    #[test]
    fn empty_body_gives_nothing() {
        assert!(texts("").is_empty());
        assert!(texts("  \n\n ").is_empty());
    }

    #[test]
    fn decimals_and_bullets() {
        assert_eq!(
            texts("Use version 3.11 daily\n- write SQL\n• test code • ship it"),
            vec!["Use version 3.11 daily", "write SQL", "test code", "ship it"]
        );
    }

    #[test]
    fn short_unterminated_fragment_merges_back() {
        assert_eq!(texts("Know Rust well.\nok"), vec!["Know Rust well. ok"]);
    }

    #[test]
    fn indices_are_positions() {
        let recs = segment_sentences(&posting("One. Two. Three."), &SegmentConfig::default());
        assert_eq!(recs.iter().map(|r| r.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    struct Never;
    impl BoundaryScorer for Never {
        fn boundary_probability(&self, _: &str, _: usize) -> f64 {
            0.49
        }
    }

    #[test]
    fn scorer_overrides_rules() {
        let got = segment_with_scorer(&posting("A. B! C?"), &SegmentConfig::default(), &Never);
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn learned_scorer_handles_abbreviations() {
        let mut ex = Vec::new();
        for i in 0..30 {
            let t = format!("Use tool {i} e.g. Rust daily. Then ship. Version 2.5 works.");
            let gold = vec![t.find("daily.").unwrap() + 6, t.find("ship.").unwrap() + 5, t.len()];
            ex.push((t, gold));
        }
        let s = LogisticBoundaryScorer::train(&ex, 2000, 1.0).unwrap();
        let got = segment_with_scorer(&posting(&ex[0].0), &SegmentConfig::default(), &s);
        assert_eq!(got.len(), 3, "{got:?}");
    }

    #[test]
    fn ambiguity_hand_counts() {
        let lex = AmbiguityLexicon::new(vec!["familiar with".into()]).unwrap();
        let r = scan_ambiguity(&["Familiar with SQL", "Expert in SQL"], &lex);
        assert_eq!((r.frequency, r.share), (1, 0.5));
        let r = scan_ambiguity(&["familiar with X and familiar with Y"], &lex);
        assert_eq!((r.frequency, r.share), (2, 1.0));
        let r = scan_ambiguity::<&str>(&[], &lex);
        assert_eq!((r.frequency, r.share), (0, 0.0));
    }

    #[test]
    fn whitespace_is_collapsed_before_matching() {
        let lex = AmbiguityLexicon::default();
        assert_eq!(scan_ambiguity(&["Some   knowledge\nof Excel"], &lex).frequency, 1);
        assert_eq!(scan_ambiguity(&["熟悉Python"], &lex).frequency, 1);
    }

    #[test]
    fn lexicon_rejects_duplicates_and_empty() {
        assert!(AmbiguityLexicon::new(vec![]).is_err());
        assert!(AmbiguityLexicon::new(vec!["a b".into(), "A  b".into()]).is_err());
        assert_eq!(AmbiguityLexicon::extended(vec!["familiar with".into()]).phrases().len(), 10);
    }

    proptest! {
        #[test]
        fn segmentation_keeps_all_content(body in "[a-zA-Z .!?;\n•-]{0,80}") {
            let recs = texts(&body);
            let strip = |s: &str| s.chars().filter(|c| c.is_alphanumeric()).collect::<String>();
            let joined: String = recs.iter().map(|s| strip(s)).collect();
            prop_assert_eq!(joined, strip(&body));
        }

        #[test]
        fn adding_a_phrase_is_monotone(sents in proptest::collection::vec("[a-z ]{0,30}", 0..6), extra in "[a-z]{1,3}") {
            let base = AmbiguityLexicon::new(vec!["ab".into()]).unwrap();
            let more = AmbiguityLexicon::new(vec!["ab".into(), extra]).unwrap_or(base.clone());
            let a = scan_ambiguity(&sents, &base);
            let b = scan_ambiguity(&sents, &more);
            prop_assert!(b.frequency >= a.frequency && b.share >= a.share);
            prop_assert!((0.0..=1.0).contains(&a.share));
            prop_assert!(a.frequency as f64 >= a.share * a.sentences as f64);
        }
    }
}
