//! Character and character-bigram vocabulary.

use std::collections::{BTreeMap, HashMap};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;

const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

/// Lowercases and collapses whitespace runs to a single space.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct VocabConfig {
    /// Bigrams seen fewer times than this are left out.
    pub min_bigram_count: usize,
    pub max_bigrams: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            min_bigram_count: 3,
            max_bigrams: 2000,
        }
    }
}

/// Token to id map. Ids are dense in `[0, len)`, with 0 for padding and 1 for
/// unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

/// Token ids padded to a fixed width. `len` counts the real tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub ids: Vec<u32>,
    pub len: usize,
}

impl TokenSeq {
    /// The non-padding ids, or a single unknown token for empty input.
    pub fn active(&self) -> Vec<u32> {
        let ids: Vec<u32> = self.ids.iter().copied().filter(|&id| id != PAD_ID).collect();
        if ids.is_empty() {
            vec![UNK_ID]
        } else {
            ids
        }
    }
}

impl Vocabulary {
    /// Builds a vocabulary from every character in `texts` plus the most
    /// frequent character bigrams.
    pub fn build<S: AsRef<str>>(texts: &[S], config: VocabConfig) -> Self {
        let mut chars: BTreeMap<String, usize> = BTreeMap::new();
        let mut bigrams: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            let norm: Vec<char> = normalize_text(text.as_ref()).chars().collect();
            for (i, c) in norm.iter().enumerate() {
                *chars.entry(c.to_string()).or_default() += 1;
                if let Some(next) = norm.get(i + 1) {
                    let mut bg = String::new();
                    bg.push(*c);
                    bg.push(*next);
                    *bigrams.entry(bg).or_default() += 1;
                }
            }
        }
        let mut frequent: Vec<(String, usize)> = bigrams
            .into_iter()
            .filter(|(_, n)| *n >= config.min_bigram_count)
            .collect();
        // count descending, then lexicographic
        frequent.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        frequent.truncate(config.max_bigrams);
        frequent.sort_by(|a, b| a.0.cmp(&b.0));

        let tokens = [PAD_TOKEN.to_string(), UNK_TOKEN.to_string()]
            .into_iter()
            .chain(chars.into_keys())
            .chain(frequent.into_iter().map(|(t, _)| t))
            .collect();
        Self::from_tokens(tokens)
    }

    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    /// Greedy tokenization preferring known bigrams, truncated and padded to
    /// `max_len`.
    pub fn tokenize(&self, text: &str, max_len: usize) -> TokenSeq {
        let max_len = max_len.max(1);
        let chars: Vec<char> = normalize_text(text).chars().collect();
        let mut ids = Vec::with_capacity(max_len);
        let mut i = 0;
        let mut buf = String::new();
        while i < chars.len() && ids.len() < max_len {
            if i + 1 < chars.len() {
                buf.clear();
                buf.push(chars[i]);
                buf.push(chars[i + 1]);
                if let Some(&id) = self.index.get(buf.as_str()) {
                    ids.push(id);
                    i += 2;
                    continue;
                }
            }
            buf.clear();
            buf.push(chars[i]);
            ids.push(self.id(&buf));
            i += 1;
        }
        let len = ids.len();
        ids.resize(max_len, PAD_ID);
        TokenSeq { ids, len }
    }
}
