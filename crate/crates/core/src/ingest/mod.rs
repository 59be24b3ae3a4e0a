//! Sources to corpus: HTML extraction, metadata, de-duplication and persistence.

mod html;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::time::Timestamp;

pub use html::{decode_entities, extract_metadata, extract_review_blocks};

pub const CORPUS_SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentMeta {
    pub source_uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<Timestamp>,
    pub retrieved_at: Timestamp,
}

impl DocumentMeta {
    pub fn new(source_uri: impl Into<String>, retrieved_at: Timestamp) -> Self {
        DocumentMeta {
            source_uri: source_uri.into(),
            title: None,
            author: None,
            created_at: None,
            retrieved_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub meta: DocumentMeta,
}

/// An ordered, id-unique collection of documents.
///
/// Document order is the canonical iteration order for every later stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    pub schema_version: i64,
    pub corpus_id: String,
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(corpus_id: impl Into<String>, documents: Vec<Document>) -> Result<Self> {
        let corpus = Corpus {
            schema_version: CORPUS_SCHEMA_VERSION,
            corpus_id: corpus_id.into(),
            documents,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, doc) in self.documents.iter().enumerate() {
            if doc.id.is_empty() {
                return Err(Error::format(format!("documents[{i}].id"), "empty id"));
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::format(
                    format!("documents[{i}].id"),
                    format!("duplicate id {:?}", doc.id),
                ));
            }
        }
        Ok(())
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct DedupReport {
    pub kept: usize,
    /// `(removed_id, kept_id)` pairs in corpus order.
    pub removed: Vec<(String, String)>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Positional ids `<id_prefix>_1`, `<id_prefix>_2`, ... in item order.
///
/// The corpus id is `<id_prefix>-` followed by a digest prefix of the texts,
/// so the same inputs always produce the same corpus id.
pub fn build_corpus(items: Vec<(String, DocumentMeta)>, id_prefix: &str) -> Corpus {
    let mut hasher = Sha256::new();
    for (text, _) in &items {
        hasher.update((text.len() as u64).to_le_bytes());
        hasher.update(text.as_bytes());
    }
    let digest = hex::encode(hasher.finalize());
    let documents = items
        .into_iter()
        .enumerate()
        .map(|(i, (raw_text, meta))| Document {
            id: format!("{id_prefix}_{}", i + 1),
            raw_text,
            meta,
        })
        .collect();
    Corpus {
        schema_version: CORPUS_SCHEMA_VERSION,
        corpus_id: format!("{id_prefix}-{}", &digest[..16]),
        documents,
    }
}

/// Lowercased, whitespace-collapsed text digest used to detect duplicates.
pub fn dedup_key(raw_text: &str) -> String {
    let normalized = html::collapse_whitespace(&raw_text.to_lowercase());
    sha256_hex(normalized.as_bytes())
}

/// Drops every document whose key matches an earlier one. Survivors keep their
/// ids and relative order.
pub fn deduplicate(corpus: &Corpus) -> (Corpus, DedupReport) {
    let mut first_by_key: HashMap<String, &str> = HashMap::new();
    let mut report = DedupReport::default();
    let mut kept = Vec::new();
    for doc in &corpus.documents {
        let key = dedup_key(&doc.raw_text);
        match first_by_key.get(&key) {
            Some(&kept_id) => report.removed.push((doc.id.clone(), kept_id.to_string())),
            None => {
                first_by_key.insert(key, &doc.id);
                kept.push(doc.clone());
            }
        }
    }
    report.kept = kept.len();
    let out = Corpus {
        schema_version: corpus.schema_version,
        corpus_id: corpus.corpus_id.clone(),
        documents: kept,
    };
    (out, report)
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(corpus).expect("corpus serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

pub fn parse_corpus(text: &str) -> Result<Corpus> {
    if text.trim().is_empty() {
        return Err(Error::format("<document>", "empty corpus file"));
    }
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::format("<document>", e.to_string()))?;
    match value.get("schema_version") {
        None => return Err(Error::format("schema_version", "missing")),
        Some(v) => match v.as_i64() {
            Some(CORPUS_SCHEMA_VERSION) => {}
            Some(found) => {
                return Err(Error::SchemaVersion {
                    found,
                    expected: CORPUS_SCHEMA_VERSION,
                })
            }
            None => return Err(Error::format("schema_version", "not an integer")),
        },
    }
    let corpus: Corpus = serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        Error::format(field, e.into_inner().to_string())
    })?;
    corpus.validate()?;
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Timestamp {
        Timestamp::parse("2024-03-01T09:30:00Z").unwrap()
    }

    fn corpus_of(texts: &[&str]) -> Corpus {
        build_corpus(
            texts
                .iter()
                .map(|s| (s.to_string(), DocumentMeta::new("u", t())))
                .collect(),
            "student",
        )
    }

    #[test]
    fn positional_ids() {
        let c = corpus_of(&["a", "b"]);
        let ids: Vec<_> = c.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["student_1", "student_2"]);
        assert_eq!(c.schema_version, 1);
        assert!(corpus_of(&[]).is_empty());
    }

    #[test]
    fn ten_items_keep_order() {
        let texts: Vec<String> = (0..10).map(|i| format!("review {i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let c = corpus_of(&refs);
        assert_eq!(c.len(), 10);
        for (i, d) in c.documents().iter().enumerate() {
            assert_eq!(d.id, format!("student_{}", i + 1));
            assert_eq!(d.raw_text, texts[i]);
        }
    }

    #[test]
    fn dedup_normalizes_case_and_whitespace() {
        let c = corpus_of(&["Hi there", "hi  THERE", "bye"]);
        let (out, report) = deduplicate(&c);
        let kept: Vec<_> = out
            .documents()
            .iter()
            .map(|d| d.raw_text.as_str())
            .collect();
        assert_eq!(kept, ["Hi there", "bye"]);
        assert_eq!(
            report.removed,
            [("student_2".to_string(), "student_1".to_string())]
        );
        assert_eq!(report.kept, 2);
    }

    #[test]
    fn dedup_of_distinct_corpus_is_identity() {
        let c = corpus_of(&["a", "b", "c"]);
        let (out, report) = deduplicate(&c);
        assert_eq!(out, c);
        assert!(report.removed.is_empty());
    }

    #[test]
    fn empty_file_is_a_format_error() {
        assert!(matches!(parse_corpus(""), Err(Error::InputFormat { .. })));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let err = parse_corpus(r#"{"schema_version": 999, "corpus_id": "x", "documents": []}"#)
            .unwrap_err();
        assert!(matches!(err, Error::SchemaVersion { found: 999, .. }));
    }

    #[test]
    fn errors_name_the_offending_field() {
        let text = r#"{"schema_version": 1, "corpus_id": "x", "documents": [
            {"id": "a", "raw_text": "t", "meta": {"source_uri": "u"}}]}"#;
        match parse_corpus(text).unwrap_err() {
            Error::InputFormat { field, message } => {
                assert_eq!(field, "documents[0].meta");
                assert!(message.contains("retrieved_at"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let dup = r#"{"schema_version": 1, "corpus_id": "x", "documents": [
            {"id": "a", "raw_text": "", "meta": {"source_uri": "u", "retrieved_at": "2020-01-01T00:00:00Z"}},
            {"id": "a", "raw_text": "", "meta": {"source_uri": "u", "retrieved_at": "2020-01-01T00:00:00Z"}}]}"#;
        match parse_corpus(dup).unwrap_err() {
            Error::InputFormat { field, .. } => assert_eq!(field, "documents[1].id"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn absent_metadata_stays_absent() {
        let c = corpus_of(&["x"]);
        let text = serde_json::to_string(&c).unwrap();
        assert!(!text.contains("title"));
        assert!(!text.contains("created_at"));
    }
}
