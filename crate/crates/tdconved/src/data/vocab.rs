//! Vocabulary: a bijective token↔index map with four reserved slots, built
//! from caption text by frequency, serialized one token per line (line
//! number = index).

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::{RESERVED_TOKENS, UNK};

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from the content tokens that follow the reserved slots.
    pub fn from_content_tokens(content: Vec<String>) -> Result<Self> {
        let mut tokens: Vec<String> = RESERVED_TOKENS.iter().map(|s| s.to_string()).collect();
        tokens.extend(content);
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary token '{tok}'")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    /// Index of a token; unknown tokens map to the dedicated slot.
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, index: usize) -> Result<&str> {
        self.tokens
            .get(index)
            .map(|s| s.as_str())
            .ok_or(Error::Index {
                op: "Vocabulary::token",
                index,
                len: self.tokens.len(),
            })
    }

    /// Token indices of a caption, minimal tokenization applied.
    pub fn encode(&self, caption: &str) -> Vec<usize> {
        tokenize(caption).iter().map(|t| self.lookup(t)).collect()
    }

    /// Joins content-token indices back into a sentence.
    pub fn decode(&self, indices: &[usize]) -> Result<String> {
        let mut words = Vec::with_capacity(indices.len());
        for &i in indices {
            words.push(self.token(i)?);
        }
        Ok(words.join(" "))
    }

    /// One token per line, line number = index.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for tok in &self.tokens {
            out.extend_from_slice(tok.as_bytes());
            out.push(b'\n');
        }
        out
    }

    /// SHA-256 of the serialized form; checkpoints embed this so a model is
    /// never evaluated against the wrong vocabulary.
    pub fn content_hash(&self) -> [u8; 32] {
        Sha256::digest(self.to_bytes()).into()
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        parse_vocab(&bytes)
    }
}

/// Parses the one-token-per-line format. The first four lines must be the
/// reserved tokens; duplicates and embedded whitespace are format errors
/// with the offending line's byte offset.
pub fn parse_vocab(bytes: &[u8]) -> Result<Vocabulary> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Format {
        offset: e.valid_up_to(),
        message: "vocabulary file is not valid UTF-8".to_string(),
    })?;
    let mut tokens = Vec::new();
    let mut offset = 0usize;
    for line in text.split('\n') {
        let tok = line.trim_end_matches('\r');
        if tok.is_empty() {
            offset += line.len() + 1;
            continue;
        }
        if tok.chars().any(char::is_whitespace) {
            return Err(Error::Format {
                offset,
                message: format!("token '{tok}' contains whitespace"),
            });
        }
        let idx = tokens.len();
        if idx < RESERVED_TOKENS.len() && tok != RESERVED_TOKENS[idx] {
            return Err(Error::Format {
                offset,
                message: format!(
                    "line {idx} must be the reserved token '{}', found '{tok}'",
                    RESERVED_TOKENS[idx]
                ),
            });
        }
        tokens.push(tok.to_string());
        offset += line.len() + 1;
    }
    if tokens.len() < RESERVED_TOKENS.len() {
        return Err(Error::Format {
            offset: bytes.len(),
            message: format!(
                "vocabulary must contain at least the {} reserved tokens",
                RESERVED_TOKENS.len()
            ),
        });
    }
    Vocabulary::from_content_tokens(tokens.split_off(RESERVED_TOKENS.len())).map_err(|e| {
        match e {
            Error::Config(msg) => Error::Format {
                offset: 0,
                message: msg,
            },
            other => other,
        }
    })
}

/// Minimal tokenization: lowercase, strip punctuation, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|w| {
            let cleaned: String = w
                .chars()
                .filter(|c| !c.is_ascii_punctuation())
                .flat_map(char::to_lowercase)
                .collect();
            if cleaned.is_empty() {
                None
            } else {
                Some(cleaned)
            }
        })
        .collect()
}

/// Builds a vocabulary from a caption corpus: tokens with count ≥
/// `min_count`, ordered by (count desc, token asc) after the reserved slots.
pub fn build_vocab<'a, I>(captions: I, min_count: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut any = false;
    for caption in captions {
        any = true;
        for tok in tokenize(caption) {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    if !any {
        return Err(Error::Config("empty caption corpus".to_string()));
    }
    let mut entries: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count.max(1))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_content_tokens(entries.into_iter().map(|(t, _)| t).collect())
}
