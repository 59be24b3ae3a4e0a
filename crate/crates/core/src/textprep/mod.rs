//! Normalization, sentence splitting, tokenization, stop-word removal,
//! stemming and lemmatization, composed into [`preprocess_document`].

mod porter;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Document;

pub use porter::stem;

const DEFAULT_STOP_WORDS: &str = include_str!("../../assets/stopwords_en.txt");

/// Rules for [`normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    /// Whole tokens dropped after punctuation is stripped (contraction residue).
    pub artifact_tokens: BTreeSet<String>,
    pub remove_bracketed: bool,
    pub remove_digit_tokens: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            artifact_tokens: ["im", "ive", "got", "isnt"]
                .into_iter()
                .map(String::from)
                .collect(),
            remove_bracketed: true,
            remove_digit_tokens: true,
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<()> {
        for t in &self.artifact_tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) || t.to_lowercase() != *t {
                return Err(Error::Config(format!(
                    "artifact token {t:?} must be lowercase without whitespace"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub normalization: NormalizationConfig,
    pub stop_words: BTreeSet<String>,
    pub stem: bool,
    pub lemmatize: bool,
    pub lemma_table: BTreeMap<String, String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            normalization: NormalizationConfig::default(),
            stop_words: default_stop_words(),
            stem: false,
            lemmatize: false,
            lemma_table: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stem && self.lemmatize {
            return Err(Error::Config(
                "stem and lemmatize are mutually exclusive".into(),
            ));
        }
        self.normalization.validate()
    }

    fn reduce(&self, token: &str) -> String {
        if self.stem {
            stem(token)
        } else if self.lemmatize {
            lemmatize(token, &self.lemma_table)
        } else {
            token.to_string()
        }
    }
}

/// The bundled 175-word English list.
pub fn default_stop_words() -> BTreeSet<String> {
    parse_word_list(DEFAULT_STOP_WORDS)
}

/// One word per line; blank lines and `#` comments ignored; words lowercased.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn load_word_list(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&text))
}

/// Two tab-separated columns per line: surface form, lemma.
pub fn parse_lemma_table(text: &str) -> Result<BTreeMap<String, String>> {
    let mut table = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(surface), Some(lemma), None) if !surface.is_empty() && !lemma.is_empty() => {
                table.insert(surface.trim().to_lowercase(), lemma.trim().to_lowercase());
            }
            _ => {
                return Err(Error::format(
                    format!("line {}", n + 1),
                    "expected `surface<TAB>lemma`",
                ))
            }
        }
    }
    Ok(table)
}

pub fn load_lemma_table(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lemma_table(&text)
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '`')
}

/// Removes every `[...]` segment, matching each `[` with the nearest following `]`.
fn strip_bracketed(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        match rest[open..].find(']') {
            Some(close) => {
                out.push_str(&rest[..open]);
                rest = &rest[open + close + 1..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

/// Cleans raw text. Rules run in this order:
///
/// 1. lowercase
/// 2. delete apostrophes
/// 3. delete `[...]` segments (if enabled)
/// 4. replace every non-alphanumeric character with a space
/// 5. drop whole tokens containing a digit (if enabled)
/// 6. drop whole tokens equal to an artifact token
/// 7. collapse whitespace and trim
pub fn normalize(text: &str, cfg: &NormalizationConfig) -> String {
    let lowered = text.to_lowercase();
    let no_apostrophes: String = lowered.chars().filter(|&c| !is_apostrophe(c)).collect();
    let unbracketed = if cfg.remove_bracketed {
        strip_bracketed(&no_apostrophes)
    } else {
        no_apostrophes
    };
    let spaced: String = unbracketed
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    spaced
        .split_whitespace()
        .filter(|t| !(cfg.remove_digit_tokens && t.chars().any(char::is_numeric)))
        .filter(|t| !cfg.artifact_tokens.contains(*t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits after a run of `.`, `!` or `?` that is followed by whitespace or end
/// of input. Terminators stay on their segment; empty segments are dropped.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        while let Some(&(_, '.' | '!' | '?')) = chars.peek() {
            chars.next();
        }
        let boundary = match chars.peek() {
            None => Some(text.len()),
            Some(&(i, next)) if next.is_whitespace() => Some(i),
            _ => None,
        };
        if let Some(end) = boundary {
            let segment = text[start..end].trim();
            if !segment.is_empty() {
                out.push(segment.to_string());
            }
            start = end;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

/// Maximal runs of alphabetic characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

pub fn remove_stop_words(tokens: &[String], stop_words: &BTreeSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stop_words.contains(*t))
        .cloned()
        .collect()
}

pub fn lemmatize(token: &str, lemma_table: &BTreeMap<String, String>) -> String {
    lemma_table
        .get(token)
        .cloned()
        .unwrap_or_else(|| token.to_string())
}

/// A document after every preprocessing stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDocument {
    pub doc_id: String,
    /// Surface tokens of each sentence: normalized, lowercase, stop words kept.
    pub sentences: Vec<Vec<String>>,
    /// Whole-document tokens after stop-word removal, before stemming or lemmatization.
    pub filtered_tokens: Vec<String>,
    /// `filtered_tokens` after the optional stemming or lemmatization stage.
    pub content_tokens: Vec<String>,
    /// Per-sentence content tokens, used where statistics must not cross sentences.
    pub content_sentences: Vec<Vec<String>>,
    pub token_types: BTreeSet<String>,
}

impl PreparedDocument {
    /// Distinct tokens before stemming or lemmatization.
    pub fn surface_types(&self) -> BTreeSet<&str> {
        self.filtered_tokens.iter().map(String::as_str).collect()
    }

    pub fn surface_tokens(&self) -> impl Iterator<Item = &String> {
        self.sentences.iter().flatten()
    }
}

/// Runs a free-standing text (a query, an unlabeled target) through the same
/// content-token stages as a document.
pub fn content_tokens(text: &str, cfg: &PipelineConfig) -> Vec<String> {
    let filtered = remove_stop_words(
        &tokenize(&normalize(text, &cfg.normalization)),
        &cfg.stop_words,
    );
    filtered.iter().map(|t| cfg.reduce(t)).collect()
}

pub fn preprocess_document(doc: &Document, cfg: &PipelineConfig) -> PreparedDocument {
    let sentences: Vec<Vec<String>> = split_sentences(&doc.raw_text)
        .iter()
        .map(|s| tokenize(&normalize(s, &cfg.normalization)))
        .collect();
    let filtered_tokens = remove_stop_words(
        &tokenize(&normalize(&doc.raw_text, &cfg.normalization)),
        &cfg.stop_words,
    );
    let content_tokens: Vec<String> = filtered_tokens.iter().map(|t| cfg.reduce(t)).collect();
    let content_sentences = sentences
        .iter()
        .map(|s| {
            remove_stop_words(s, &cfg.stop_words)
                .iter()
                .map(|t| cfg.reduce(t))
                .collect()
        })
        .collect();
    let token_types = content_tokens.iter().cloned().collect();
    PreparedDocument {
        doc_id: doc.id.clone(),
        sentences,
        filtered_tokens,
        content_tokens,
        content_sentences,
        token_types,
    }
}

/// Preprocesses every document, preserving corpus order.
pub fn preprocess_corpus(docs: &[Document], cfg: &PipelineConfig) -> Vec<PreparedDocument> {
    docs.iter().map(|d| preprocess_document(d, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DocumentMeta;
    use crate::time::Timestamp;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    fn doc(text: &str) -> Document {
        Document {
            id: "d".into(),
            raw_text: text.into(),
            meta: DocumentMeta::new("u", Timestamp::parse("2020-01-01").unwrap()),
        }
    }

    #[test]
    fn normalize_rule_order() {
        let cfg = NormalizationConfig::default();
        assert_eq!(normalize("I'm [edited] in 2020 Room2", &cfg), "in");
        assert_eq!(normalize("", &cfg), "");
    }

    #[test]
    fn artifact_removal_is_whole_token() {
        let cfg = NormalizationConfig::default();
        assert_eq!(normalize("Time flies", &cfg), "time flies");
        assert_eq!(normalize("I've got a gift, isn't it", &cfg), "a gift it");
    }

    #[test]
    fn normalize_switches() {
        let cfg = NormalizationConfig {
            artifact_tokens: BTreeSet::new(),
            remove_bracketed: false,
            remove_digit_tokens: false,
        };
        assert_eq!(normalize("[x] Room2!", &cfg), "x room2");
    }

    #[test]
    fn unclosed_bracket_is_plain_punctuation() {
        assert_eq!(
            normalize("keep [this", &NormalizationConfig::default()),
            "keep this"
        );
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(split_sentences("Good. Bad!"), ["Good.", "Bad!"]);
        assert_eq!(split_sentences("no punctuation"), ["no punctuation"]);
        assert_eq!(split_sentences("A... B?"), ["A...", "B?"]);
        assert_eq!(split_sentences("3.5 stars. ok"), ["3.5 stars.", "ok"]);
        assert!(split_sentences("  ").is_empty());
    }

    #[test]
    fn tokenization() {
        assert_eq!(tokenize("the cat-sat"), ["the", "cat", "sat"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a  b"), ["a", "b"]);
    }

    #[test]
    fn stop_words() {
        let stop: BTreeSet<String> = ["the".to_string()].into();
        assert_eq!(
            remove_stop_words(&words(&["the", "cat", "sat"]), &stop),
            ["cat", "sat"]
        );
        assert!(remove_stop_words(&[], &stop).is_empty());
        assert_eq!(remove_stop_words(&words(&["cat"]), &stop), ["cat"]);
    }

    #[test]
    fn bundled_stop_list() {
        let list = default_stop_words();
        assert_eq!(list.len(), 175);
        assert!(list.contains("the") && list.contains("dont"));
    }

    #[test]
    fn lemma_lookup() {
        let table: BTreeMap<String, String> = [("mice".to_string(), "mouse".to_string())].into();
        assert_eq!(lemmatize("mice", &table), "mouse");
        assert_eq!(lemmatize("mouse", &table), "mouse");
        assert_eq!(lemmatize("", &table), "");
    }

    #[test]
    fn lemma_table_parsing() {
        let t = parse_lemma_table("# c\nmice\tmouse\nwent\tgo\n").unwrap();
        assert_eq!(t["went"], "go");
        assert!(parse_lemma_table("bad line\n").is_err());
    }

    #[test]
    fn stem_and_lemmatize_are_exclusive() {
        let cfg = PipelineConfig {
            stem: true,
            lemmatize: true,
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn empty_document() {
        let p = preprocess_document(&doc(""), &PipelineConfig::default());
        assert!(p.sentences.is_empty());
        assert!(p.content_tokens.is_empty());
        assert!(p.token_types.is_empty());
    }

    #[test]
    fn composition_matches_manual_chain() {
        let text =
            "The professors were amazing! I'm running [redacted] two clubs in 2019. Not bad.";
        let cfg = PipelineConfig {
            stem: true,
            ..Default::default()
        };
        let p = preprocess_document(&doc(text), &cfg);

        let manual_sentences: Vec<Vec<String>> = split_sentences(text)
            .iter()
            .map(|s| tokenize(&normalize(s, &cfg.normalization)))
            .collect();
        let manual_content: Vec<String> = remove_stop_words(
            &tokenize(&normalize(text, &cfg.normalization)),
            &cfg.stop_words,
        )
        .iter()
        .map(|t| stem(t))
        .collect();
        assert_eq!(p.sentences, manual_sentences);
        assert_eq!(p.content_tokens, manual_content);
        assert_eq!(
            p.content_tokens,
            ["professor", "amaz", "run", "two", "club", "bad"]
        );
        assert_eq!(
            p.filtered_tokens,
            ["professors", "amazing", "running", "two", "clubs", "bad"]
        );
        assert_eq!(p.content_sentences[2], ["bad"]);
    }

    #[test]
    fn identity_stages() {
        let p = preprocess_document(&doc("Cats and dogs"), &PipelineConfig::default());
        assert_eq!(p.content_tokens, ["cats", "dogs"]);
        assert_eq!(p.content_tokens, p.filtered_tokens);
    }
}
