//! Schemas of the files `analyze` writes and `report`/`export` read.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use textkm::insight::{Concept, DocumentSentiment, UniqueWords};
use textkm::models::LdaParams;
use textkm::{Error, Result};

pub const RESULTS_SCHEMA_VERSION: i64 = 1;

pub const SENTIMENT: &str = "sentiment.out";
pub const FREQUENCIES: &str = "frequencies.out";
pub const UNIQUE_WORDS: &str = "unique_words.out";
pub const PROFANITY: &str = "profanity.out";
pub const CONCEPTS: &str = "concepts.out";
pub const TOPICS: &str = "topics.out";
pub const DTM: &str = "dtm.out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile<T> {
    pub schema_version: i64,
    pub corpus_id: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T> ResultsFile<T> {
    pub fn new(corpus_id: &str, body: T) -> Self {
        ResultsFile {
            schema_version: RESULTS_SCHEMA_VERSION,
            corpus_id: corpus_id.to_string(),
            body,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentResults {
    pub documents: Vec<DocumentSentiment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCount {
    pub term: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResults {
    pub top_k: usize,
    pub terms: Vec<TermCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniqueWordResults {
    pub documents: Vec<UniqueWords>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocProfanity {
    pub doc_id: String,
    pub count: usize,
    pub matched: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfanityResults {
    pub documents: Vec<DocProfanity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptResults {
    pub min_count: usize,
    pub concepts: Vec<Concept>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermProbability {
    pub term: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTopics {
    pub doc_id: String,
    pub theta: Vec<f64>,
    pub dominant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicResults {
    pub params: LdaParams,
    /// Highest-probability terms per topic.
    pub topics: Vec<Vec<TermProbability>>,
    pub documents: Vec<DocTopics>,
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialize");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(Error::format(
            path.display().to_string(),
            "missing results file",
        ));
    }
    std::fs::read_to_string(path)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<ResultsFile<T>> {
    let text = read_text(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let file: ResultsFile<T> = serde_path_to_error::deserialize(de).map_err(|e| {
        Error::format(
            format!("{}: {}", path.display(), e.path()),
            e.inner().to_string(),
        )
    })?;
    if file.schema_version != RESULTS_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: file.schema_version,
            expected: RESULTS_SCHEMA_VERSION,
        });
    }
    Ok(file)
}
