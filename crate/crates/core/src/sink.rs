//! Content-addressed knowledge records, a line-per-record store and a
//! file-based outbox.
//!
//! The store is JSON lines. Writers take `<store>.lock` (created exclusively)
//! for the whole read-check-append cycle; readers take no lock and ignore a
//! trailing line that has no newline yet, so they always see a prefix of
//! complete records.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::write_atomic;
use crate::time::Timestamp;

pub const PAYLOAD_SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    SentimentSummary,
    SentimentSeries,
    FrequencyTable,
    UniqueWords,
    Profanity,
    Concepts,
    Topics,
    Classification,
    Retrieval,
    Chart,
}

impl RecordKind {
    pub const ALL: [RecordKind; 10] = [
        RecordKind::SentimentSummary,
        RecordKind::SentimentSeries,
        RecordKind::FrequencyTable,
        RecordKind::UniqueWords,
        RecordKind::Profanity,
        RecordKind::Concepts,
        RecordKind::Topics,
        RecordKind::Classification,
        RecordKind::Retrieval,
        RecordKind::Chart,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::SentimentSummary => "sentiment_summary",
            RecordKind::SentimentSeries => "sentiment_series",
            RecordKind::FrequencyTable => "frequency_table",
            RecordKind::UniqueWords => "unique_words",
            RecordKind::Profanity => "profanity",
            RecordKind::Concepts => "concepts",
            RecordKind::Topics => "topics",
            RecordKind::Classification => "classification",
            RecordKind::Retrieval => "retrieval",
            RecordKind::Chart => "chart",
        }
    }

    pub fn default_routing_key(self) -> String {
        format!("km.analytics.{}", self.as_str())
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RecordKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown record kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeRecord {
    pub id: String,
    pub kind: RecordKind,
    pub created_at: Timestamp,
    pub source_corpus: String,
    pub tags: Vec<String>,
    pub payload: Value,
}

impl KnowledgeRecord {
    /// Recomputes the id from the record's content.
    pub fn content_id(&self) -> String {
        record_id(self.kind, &self.payload, &self.tags, &self.source_corpus)
    }

    pub fn verify(&self) -> bool {
        self.id == self.content_id()
    }
}

/// Canonical JSON: object keys sorted, arrays in order, numbers in shortest
/// round-trip form, no insignificant whitespace.
///
/// `serde_json::Map` is a `BTreeMap` unless the `preserve_order` feature is
/// on, and its float output is shortest round-trip, so plain serialisation is
/// canonical. The test below pins that.
pub fn canonical_json(value: &Value) -> String {
    serde_json::to_string(value).expect("json values always serialize")
}

fn normalize_tags<S: AsRef<str>>(tags: &[S]) -> Vec<String> {
    tags.iter()
        .map(|t| t.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// SHA-256 (lowercase hex) of the canonical form of
/// `{kind, payload, source_corpus, tags}`; tags are sorted and deduplicated first.
pub fn record_id<S: AsRef<str>>(
    kind: RecordKind,
    payload: &Value,
    tags: &[S],
    source_corpus: &str,
) -> String {
    let content = json!({
        "kind": kind.as_str(),
        "payload": payload,
        "source_corpus": source_corpus,
        "tags": normalize_tags(tags),
    });
    hex::encode(Sha256::digest(canonical_json(&content).as_bytes()))
}

/// Wraps analytics output as `{"schema_version": 1, "data": ...}`.
pub fn payload_envelope(data: Value) -> Value {
    json!({ "schema_version": PAYLOAD_SCHEMA_VERSION, "data": data })
}

pub fn make_record<S: AsRef<str>>(
    kind: RecordKind,
    payload: Value,
    tags: &[S],
    source_corpus: &str,
    now: Timestamp,
) -> KnowledgeRecord {
    let tags = normalize_tags(tags);
    KnowledgeRecord {
        id: record_id(kind, &payload, &tags, source_corpus),
        kind,
        created_at: now,
        source_corpus: source_corpus.to_string(),
        tags,
        payload,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordFilter {
    pub kinds: Option<BTreeSet<RecordKind>>,
    pub tags_any: Option<BTreeSet<String>>,
    /// Inclusive lower bound on `created_at`.
    pub after: Option<Timestamp>,
    /// Exclusive upper bound on `created_at`.
    pub before: Option<Timestamp>,
}

impl RecordFilter {
    pub fn matches(&self, r: &KnowledgeRecord) -> bool {
        self.kinds.as_ref().is_none_or(|k| k.contains(&r.kind))
            && self
                .tags_any
                .as_ref()
                .is_none_or(|t| r.tags.iter().any(|tag| t.contains(tag)))
            && self.after.is_none_or(|a| r.created_at >= a)
            && self.before.is_none_or(|b| r.created_at < b)
    }
}

fn lock_path(store: &Path) -> PathBuf {
    let mut name = store.file_name().unwrap_or_default().to_os_string();
    name.push(".lock");
    store.with_file_name(name)
}

struct StoreLock(PathBuf);

impl StoreLock {
    fn acquire(store: &Path) -> Result<Self> {
        let path = lock_path(store);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(StoreLock(path))
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::StoreLocked(path)),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn integrity(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::StoreIntegrity {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_line(path: &Path, line_no: usize, line: &str) -> Result<KnowledgeRecord> {
    let record: KnowledgeRecord = serde_json::from_str(line)
        .map_err(|e| integrity(path, line_no, format!("unparseable record: {e}")))?;
    if record.id.len() != 64
        || !record
            .id
            .bytes()
            .all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
    {
        return Err(integrity(
            path,
            line_no,
            "id is not a lowercase SHA-256 hex digest",
        ));
    }
    if record.tags.windows(2).any(|w| w[0] >= w[1]) {
        return Err(integrity(path, line_no, "tags are not sorted and unique"));
    }
    Ok(record)
}

/// Reads every complete record. With `allow_partial_tail`, a last line lacking
/// its newline (an append in flight) is skipped instead of rejected.
fn read_store(path: &Path, allow_partial_tail: bool) -> Result<Vec<KnowledgeRecord>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) if e.kind() == ErrorKind::InvalidData => {
            return Err(integrity(path, 0, "store is not valid UTF-8"))
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut complete = text.as_str();
    if !text.is_empty() && !text.ends_with('\n') {
        let cut = text.rfind('\n').map_or(0, |i| i + 1);
        if !allow_partial_tail {
            let line = text[..cut].lines().count() + 1;
            return Err(integrity(
                path,
                line,
                "last record is not newline-terminated",
            ));
        }
        complete = &text[..cut];
    }
    complete
        .lines()
        .enumerate()
        .map(|(i, line)| parse_line(path, i + 1, line))
        .collect()
}

/// Appends `record` unless a record with the same id is already stored.
/// Returns whether a line was written.
pub fn append_record(store_path: &Path, record: &KnowledgeRecord) -> Result<bool> {
    let _lock = StoreLock::acquire(store_path)?;
    let existing = read_store(store_path, false)?;
    if existing.iter().any(|r| r.id == record.id) {
        return Ok(false);
    }
    let mut line = serde_json::to_string(record).expect("records serialize");
    line.push('\n');
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(store_path)
        .map_err(|e| Error::io(store_path, e))?;
    file.write_all(line.as_bytes())
        .map_err(|e| Error::io(store_path, e))?;
    file.sync_data().map_err(|e| Error::io(store_path, e))?;
    Ok(true)
}

/// Records matching every set criterion, in store order. A missing store is
/// empty.
pub fn query_records(store_path: &Path, filter: &RecordFilter) -> Result<Vec<KnowledgeRecord>> {
    Ok(read_store(store_path, true)?
        .into_iter()
        .filter(|r| filter.matches(r))
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoreReport {
    pub records: usize,
    /// `(line, stored id)` for records whose content no longer hashes to their id.
    pub mismatched: Vec<(usize, String)>,
    /// `(line, id)` for ids seen on an earlier line.
    pub duplicates: Vec<(usize, String)>,
}

impl StoreReport {
    pub fn is_clean(&self) -> bool {
        self.mismatched.is_empty() && self.duplicates.is_empty()
    }
}

/// Re-hashes every stored record.
pub fn verify_store(store_path: &Path) -> Result<StoreReport> {
    let records = read_store(store_path, false)?;
    let mut report = StoreReport {
        records: records.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    for (i, r) in records.iter().enumerate() {
        if !r.verify() {
            report.mismatched.push((i + 1, r.id.clone()));
        }
        if !seen.insert(r.id.as_str()) {
            report.duplicates.push((i + 1, r.id.clone()));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutboxMessage {
    pub routing_key: String,
    pub record: KnowledgeRecord,
}

/// Three dot-separated segments of `[a-z0-9_]+`.
pub fn validate_routing_key(key: &str) -> Result<()> {
    let segments: Vec<&str> = key.split('.').collect();
    let ok = segments.len() == 3
        && segments.iter().all(|s| {
            !s.is_empty()
                && s.bytes()
                    .all(|b| matches!(b, b'a'..=b'z' | b'0'..=b'9' | b'_'))
        });
    if ok {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "routing key {key:?} must look like segment.segment.segment"
        )))
    }
}

/// Writes `<outbox_dir>/<id>.msg`. An existing message is left as is.
pub fn emit_outbox(
    record: &KnowledgeRecord,
    outbox_dir: &Path,
    routing_key: Option<&str>,
) -> Result<PathBuf> {
    let key = routing_key.map_or_else(|| record.kind.default_routing_key(), str::to_string);
    validate_routing_key(&key)?;
    let path = outbox_dir.join(format!("{}.msg", record.id));
    if path.exists() {
        return Ok(path);
    }
    let msg = OutboxMessage {
        routing_key: key,
        record: record.clone(),
    };
    let mut text = serde_json::to_string_pretty(&msg).expect("messages serialize");
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
