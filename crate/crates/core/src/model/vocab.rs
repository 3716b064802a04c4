//! Whole-word vocabulary and the `[CLS] x [SEP]` tokenizer.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const CLS_ID: usize = 2;
pub const SEP_ID: usize = 3;
pub const RESERVED: [&str; 4] = [PAD, UNK, CLS, SEP];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn surface_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl Vocab {
    /// Reserved tokens followed by `tokens`. Fails on duplicates or a reserved token among `tokens`.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut all: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        all.extend(tokens);
        let mut index = HashMap::with_capacity(all.len());
        for (i, t) in all.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocab { tokens: all, index })
    }

    /// Reserved tokens plus the most frequent surface tokens, up to `size_limit`
    /// entries in total. Ties go to the lexicographically smaller token.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, size_limit: usize) -> Result<Self> {
        if size_limit < RESERVED.len() + 1 {
            return Err(Error::Domain(format!("vocabulary size limit {size_limit} < 5")));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for tok in surface_tokens(text) {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(t, _)| !RESERVED.contains(&t.as_str()))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(size_limit - RESERVED.len());
        Vocab::from_tokens(ranked.into_iter().map(|(t, _)| t))
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

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    /// `[CLS] body [SEP]` truncated and padded to exactly `max_len` positions.
    pub fn encode(&self, text: &str, max_len: usize) -> Encoding {
        assert!(max_len >= 3, "max_len must leave room for [CLS] and [SEP]");
        let mut ids = Vec::with_capacity(max_len);
        ids.push(CLS_ID);
        ids.extend(surface_tokens(text).take(max_len - 2).map(|t| self.id(&t)));
        ids.push(SEP_ID);
        let real = ids.len();
        ids.resize(max_len, PAD_ID);
        let mut mask = vec![true; real];
        mask.resize(max_len, false);
        Encoding { ids, mask }
    }
}

/// Token indices plus attention mask (true on real tokens).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub ids: Vec<usize>,
    pub mask: Vec<bool>,
}

impl Encoding {
    pub fn real_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}
