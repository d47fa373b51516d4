//! Category vocabulary normalization: raw scene-graph labels such as
//! `"SmallDiningTable"` become lowercase head nouns (`"dining table"`).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_COLORS: &[&str] = &[
    "red", "green", "blue", "yellow", "white", "black", "brown", "gray", "grey", "orange", "pink",
    "purple", "beige", "silver", "gold",
];
const DEFAULT_MATERIALS: &[&str] = &["wood", "metal", "glass", "plastic"];
const DEFAULT_SIZES: &[&str] = &["small", "big", "large", "tiny"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryVocabulary {
    pub modifier_lexicon: BTreeSet<String>,
    #[serde(default)]
    pub canonical: BTreeSet<String>,
}

impl Default for CategoryVocabulary {
    fn default() -> Self {
        let modifier_lexicon = DEFAULT_COLORS
            .iter()
            .chain(DEFAULT_MATERIALS)
            .chain(DEFAULT_SIZES)
            .map(|s| s.to_string())
            .collect();
        Self {
            modifier_lexicon,
            canonical: BTreeSet::new(),
        }
    }
}

impl CategoryVocabulary {
    pub fn with_lexicon<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            modifier_lexicon: words.into_iter().map(|w| w.into().to_lowercase()).collect(),
            canonical: BTreeSet::new(),
        }
    }

    /// Normalizes `raw_label` and records the result in the canonical set.
    ///
    /// Fails with [`Error::EmptyLabel`] when every token is a modifier.
    pub fn normalize(&mut self, raw_label: &str) -> Result<String> {
        let tokens = split_label(raw_label);
        let kept: Vec<String> = tokens
            .into_iter()
            .map(|t| t.to_lowercase())
            .filter(|t| !self.modifier_lexicon.contains(t))
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyLabel(raw_label.to_string()));
        }
        let category = kept.join(" ");
        self.canonical.insert(category.clone());
        Ok(category)
    }

    /// Like [`normalize`](Self::normalize) but falls back to the lowercase raw
    /// label (not added to the canonical set) when everything is stripped.
    pub fn normalize_or_keep(&mut self, raw_label: &str) -> String {
        match self.normalize(raw_label) {
            Ok(c) => c,
            Err(_) => {
                let fallback = raw_label.to_lowercase();
                log::warn!("label {raw_label:?} reduced to empty; keeping {fallback:?}");
                fallback
            }
        }
    }
}

/// Splits a label at non-alphabetic characters and case-change boundaries.
/// Runs of capitals stay together except for the last one when it starts a
/// capitalized word (`"TVStand"` -> `["TV", "Stand"]`).
pub fn split_label(label: &str) -> Vec<String> {
    let chars: Vec<char> = label.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphabetic() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            continue;
        }
        if !current.is_empty() && c.is_uppercase() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || (prev.is_uppercase() && next_lower) {
                tokens.push(std::mem::take(&mut current));
            }
        }
        current.push(c);
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}
