//! Entity-name canonicalization and the rule-based equivalence predicates
//! used when scoring extracted tuples.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

const DEFAULT_ABBREVIATIONS: &[(&str, &str)] = &[
    ("Assn", "Association"),
    ("Byo", "Bulawayo"),
    ("St", "Saint"),
    ("Univ", "University"),
];

const DEFAULT_TITLES: &[&str] = &["Mr", "Mrs", "Miss", "Ms", "Rev", "Dr"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    /// Case-folded abbreviation -> canonical expansion.
    abbreviations: BTreeMap<String, String>,
    pub strip_parentheticals: bool,
    pub titles: Vec<String>,
    /// Substring matching applies only when both stripped forms are strictly
    /// longer than this many characters.
    pub min_substring_len: usize,
    /// When set, a title present on only one side is a mismatch.
    pub strict_titles: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        let mut cfg = NormalizationConfig {
            abbreviations: BTreeMap::new(),
            strip_parentheticals: true,
            titles: DEFAULT_TITLES.iter().map(|t| t.to_string()).collect(),
            min_substring_len: 10,
            strict_titles: false,
        };
        cfg.extend_abbreviations(
            DEFAULT_ABBREVIATIONS
                .iter()
                .map(|&(k, v)| (k.to_owned(), v.to_owned())),
        )
        .expect("default abbreviation table is valid");
        cfg
    }
}

impl NormalizationConfig {
    /// Only exact matching after space/punctuation stripping: no
    /// abbreviations, no substring rule, titles must agree.
    pub fn exact() -> Self {
        NormalizationConfig {
            abbreviations: BTreeMap::new(),
            min_substring_len: usize::MAX,
            strict_titles: true,
            ..Self::default()
        }
    }

    pub fn without_abbreviations(mut self) -> Self {
        self.abbreviations.clear();
        self
    }

    pub fn abbreviations(&self) -> &BTreeMap<String, String> {
        &self.abbreviations
    }

    /// Adds entries to the abbreviation table. Keys must be unique after
    /// case-folding, and no expansion may contain a token that is itself an
    /// abbreviation key (which would make normalization non-idempotent).
    pub fn extend_abbreviations(
        &mut self,
        entries: impl IntoIterator<Item = (String, String)>,
    ) -> Result<()> {
        let mut staged = self.abbreviations.clone();
        let mut fresh = std::collections::BTreeSet::new();
        for (abbrev, expansion) in entries {
            let key = canonical_text(&abbrev, false).to_lowercase();
            let value = canonical_text(&expansion, false);
            if key.is_empty() || key.contains(' ') || value.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "abbreviation {abbrev:?} -> {expansion:?} must map one token to a non-empty expansion"
                )));
            }
            if !fresh.insert(key.clone()) {
                return Err(Error::InvalidConfig(format!(
                    "abbreviation {abbrev:?} is defined twice (keys are case-insensitive)"
                )));
            }
            staged.insert(key, value);
        }
        for (key, value) in &staged {
            if value
                .split(' ')
                .any(|tok| staged.contains_key(&tok.to_lowercase()))
            {
                return Err(Error::InvalidConfig(format!(
                    "expansion {value:?} of {key:?} contains another abbreviation"
                )));
            }
        }
        self.abbreviations = staged;
        Ok(())
    }

    /// Reads a JSON object of `abbreviation -> expansion` and merges it into
    /// the table.
    pub fn load_abbreviations(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let entries: BTreeMap<String, String> = serde_json::from_str(&text)?;
        self.extend_abbreviations(entries)
    }

    fn is_title(&self, token: &str) -> bool {
        self.titles.iter().any(|t| t.eq_ignore_ascii_case(token))
    }

    fn expand_tokens(&self, text: &str) -> String {
        if self.abbreviations.is_empty() {
            return text.to_owned();
        }
        text.split(' ')
            .map(|tok| {
                self.abbreviations
                    .get(&tok.to_lowercase())
                    .map(String::as_str)
                    .unwrap_or(tok)
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// NFC, optional parenthetical removal, punctuation canonicalization and
/// whitespace collapsing. Abbreviations are not touched.
fn canonical_text(raw: &str, strip_parentheticals: bool) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut depth = 0usize;
    for ch in raw.nfc() {
        if strip_parentheticals {
            match ch {
                '(' => {
                    depth += 1;
                    out.push(' ');
                    continue;
                }
                ')' => {
                    depth = depth.saturating_sub(1);
                    out.push(' ');
                    continue;
                }
                _ if depth > 0 => continue,
                _ => {}
            }
        }
        match ch {
            '.' | ',' => {}
            ';' | ':' => out.push(' '),
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '`' => out.push('\''),
            '\u{201C}' | '\u{201D}' | '\u{201E}' => out.push('"'),
            '\u{2010}'..='\u{2015}' => out.push('-'),
            c if c.is_whitespace() => out.push(' '),
            c => out.push(c),
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Canonical node label for a raw entity string.
pub fn normalize_label(raw: &str, cfg: &NormalizationConfig) -> Result<String> {
    let text = canonical_text(raw, cfg.strip_parentheticals);
    let label = cfg.expand_tokens(&text);
    if label.is_empty() {
        return Err(Error::EmptyAfterNormalization { raw: raw.to_owned() });
    }
    Ok(label)
}

/// The comparison key: NFC text with every non-alphanumeric character
/// (spaces and punctuation) removed. Case is preserved.
pub fn stripped(s: &str) -> String {
    s.nfc().filter(|c| c.is_alphanumeric()).collect()
}

/// Flexible entity equivalence on normalized strings. Symmetric and
/// reflexive, not transitive.
pub fn entities_match(a: &str, b: &str, cfg: &NormalizationConfig) -> bool {
    let (sa, sb) = (stripped(a), stripped(b));
    if stripped_match(&sa, &sb, cfg.min_substring_len) {
        return true;
    }
    !cfg.abbreviations.is_empty() && expanded_key(a, cfg) == expanded_key(b, cfg)
}

/// Stripped form after abbreviation expansion.
pub(crate) fn expanded_key(s: &str, cfg: &NormalizationConfig) -> String {
    stripped(&cfg.expand_tokens(&canonical_text(s, false)))
}

pub(crate) fn stripped_match(sa: &str, sb: &str, min_substring_len: usize) -> bool {
    if sa == sb {
        return true;
    }
    let (la, lb) = (sa.chars().count(), sb.chars().count());
    la > min_substring_len && lb > min_substring_len && (sa.contains(sb) || sb.contains(sa))
}

/// Splits a leading honorific off a normalized person string. A lone title
/// with nothing after it is treated as a name.
pub fn split_title<'a>(s: &'a str, cfg: &NormalizationConfig) -> (Option<&'a str>, &'a str) {
    let s = s.trim();
    match s.split_once(' ') {
        Some((first, rest)) if cfg.is_title(first.trim_end_matches('.')) && !rest.trim().is_empty() => {
            (Some(first.trim_end_matches('.')), rest.trim())
        }
        _ => (None, s),
    }
}

pub(crate) fn titles_compatible(a: Option<&str>, b: Option<&str>, strict: bool) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x.eq_ignore_ascii_case(y),
        (None, None) => true,
        _ => !strict,
    }
}

/// Person equivalence: titles must agree when present (one-sided titles are
/// compatible unless `strict_titles`), and the remaining names must satisfy
/// [`entities_match`].
pub fn persons_match(a: &str, b: &str, cfg: &NormalizationConfig) -> bool {
    let (ta, ra) = split_title(a, cfg);
    let (tb, rb) = split_title(b, cfg);
    titles_compatible(ta, tb, cfg.strict_titles) && entities_match(ra, rb, cfg)
}
