//! Vocabulary with feature selection, the sparse document-term matrix, and
//! term weighting.
//!
//! Logarithms are natural. `idf(t) = ln(m / df(t))` without smoothing; every
//! retained term has `df >= 1`, so the ratio is always finite.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::PreparedDocument;

/// Sparse per-document counts keyed by column.
pub type SparseRow = BTreeMap<usize, u32>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSelection {
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub top_k: Option<usize>,
}

impl Default for FeatureSelection {
    fn default() -> Self {
        FeatureSelection {
            min_df: 1,
            max_df_ratio: 1.0,
            top_k: None,
        }
    }
}

impl FeatureSelection {
    pub fn validate(&self) -> Result<()> {
        if self.min_df < 1 {
            return Err(Error::Config("min_df must be at least 1".into()));
        }
        if !(self.max_df_ratio > 0.0 && self.max_df_ratio <= 1.0) {
            return Err(Error::Config("max_df_ratio must lie in (0, 1]".into()));
        }
        if self.top_k == Some(0) {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lexicographically ordered terms; a term's position is its matrix column.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index_of: HashMap<String, usize>,
    df: Vec<usize>,
}

impl Vocabulary {
    /// Builds from `(term, df)` pairs; terms are sorted and must be distinct.
    pub fn from_terms(mut entries: Vec<(String, usize)>) -> Result<Self> {
        entries.sort();
        let mut terms = Vec::with_capacity(entries.len());
        let mut df = Vec::with_capacity(entries.len());
        let mut index_of = HashMap::with_capacity(entries.len());
        for (i, (term, d)) in entries.into_iter().enumerate() {
            if d == 0 {
                return Err(Error::format(
                    format!("df[{term}]"),
                    "document frequency is 0",
                ));
            }
            if index_of.insert(term.clone(), i).is_some() {
                return Err(Error::format(
                    format!("terms[{i}]"),
                    format!("duplicate term {term:?}"),
                ));
            }
            terms.push(term);
            df.push(d);
        }
        Ok(Vocabulary {
            terms,
            index_of,
            df,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index_of.get(term).copied()
    }

    pub fn df(&self, column: usize) -> usize {
        self.df[column]
    }

    pub fn df_of(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|c| self.df[c])
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Candidate terms are all content-token types; filters apply in the order
/// `min_df`, `max_df_ratio`, then `top_k` by total corpus count (ties broken
/// lexicographically).
pub fn build_vocabulary(
    prepared: &[PreparedDocument],
    sel: &FeatureSelection,
) -> Result<Vocabulary> {
    sel.validate()?;
    if prepared.is_empty() {
        return Err(Error::Argument(
            "cannot build a vocabulary from zero documents".into(),
        ));
    }
    let m = prepared.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in prepared {
        for t in &doc.token_types {
            *df.entry(t).or_default() += 1;
        }
        for t in &doc.content_tokens {
            *total.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = df
        .into_iter()
        .filter(|&(_, d)| d >= sel.min_df && d as f64 / m <= sel.max_df_ratio)
        .collect();
    if let Some(k) = sel.top_k {
        kept.sort_by(|a, b| total[b.0].cmp(&total[a.0]).then_with(|| a.0.cmp(b.0)));
        kept.truncate(k);
    }
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Vocabulary::from_terms(kept.into_iter().map(|(t, d)| (t.to_string(), d)).collect())
}

/// `m` documents by `n` vocabulary terms, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTermMatrix {
    doc_ids: Vec<String>,
    rows: Vec<SparseRow>,
    vocabulary: Vocabulary,
}

impl DocumentTermMatrix {
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn row_index(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == doc_id)
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.rows[i].values().map(|&c| u64::from(c)).sum()
    }

    /// Row `i` keyed by term instead of column.
    pub fn row_terms(&self, i: usize) -> BTreeMap<String, u32> {
        self.rows[i]
            .iter()
            .map(|(&c, &n)| (self.vocabulary.terms[c].clone(), n))
            .collect()
    }

    /// Total count of every term across the corpus.
    pub fn column_totals(&self) -> BTreeMap<String, u64> {
        let mut totals = vec![0u64; self.n()];
        for row in &self.rows {
            for (&c, &n) in row {
                totals[c] += u64::from(n);
            }
        }
        self.vocabulary
            .terms
            .iter()
            .cloned()
            .zip(totals)
            .filter(|&(_, n)| n > 0)
            .collect()
    }

    /// A matrix over a subset of rows, sharing this vocabulary.
    pub fn select_rows(&self, doc_ids: &[&str]) -> Result<DocumentTermMatrix> {
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for id in doc_ids {
            let i = self
                .row_index(id)
                .ok_or_else(|| Error::Argument(format!("unknown document {id:?}")))?;
            ids.push(self.doc_ids[i].clone());
            rows.push(self.rows[i].clone());
        }
        Ok(DocumentTermMatrix {
            doc_ids: ids,
            rows,
            vocabulary: self.vocabulary.clone(),
        })
    }

    fn check(&self) -> Result<()> {
        let n = self.n();
        for (i, row) in self.rows.iter().enumerate() {
            for (&c, &count) in row {
                if c >= n {
                    return Err(Error::format(
                        format!("rows[{i}]"),
                        format!("column {c} out of range"),
                    ));
                }
                if count == 0 {
                    return Err(Error::format(format!("rows[{i}]"), "stored zero count"));
                }
            }
        }
        if self.doc_ids.len() != self.rows.len() {
            return Err(Error::format("doc_ids", "length differs from rows"));
        }
        Ok(())
    }
}

/// Counts each vocabulary term in each document's content tokens. Tokens
/// outside the vocabulary are ignored.
pub fn build_dtm(prepared: &[PreparedDocument], vocab: &Vocabulary) -> DocumentTermMatrix {
    let rows = prepared
        .iter()
        .map(|doc| {
            let mut row = SparseRow::new();
            for t in &doc.content_tokens {
                if let Some(c) = vocab.index_of(t) {
                    *row.entry(c).or_default() += 1;
                }
            }
            row
        })
        .collect();
    DocumentTermMatrix {
        doc_ids: prepared.iter().map(|d| d.doc_id.clone()).collect(),
        rows,
        vocabulary: vocab.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingScheme {
    /// Raw counts.
    Raw,
    /// Count over the row's in-vocabulary token total.
    Relative,
    /// Count over the row's largest count.
    Augmented,
}

fn row_weights(row: &SparseRow, scheme: WeightingScheme) -> BTreeMap<usize, f64> {
    let denom = match scheme {
        WeightingScheme::Raw => 1.0,
        WeightingScheme::Relative => row.values().map(|&c| f64::from(c)).sum(),
        WeightingScheme::Augmented => row.values().copied().max().map_or(1.0, f64::from),
    };
    row.iter()
        .map(|(&c, &n)| {
            let w = if scheme == WeightingScheme::Raw {
                f64::from(n)
            } else {
                f64::from(n) / denom
            };
            (c, w)
        })
        .collect()
}

pub fn term_weights(
    dtm: &DocumentTermMatrix,
    row_index: usize,
    scheme: WeightingScheme,
) -> BTreeMap<String, f64> {
    row_weights(&dtm.rows[row_index], scheme)
        .into_iter()
        .map(|(c, w)| (dtm.vocabulary.terms[c].clone(), w))
        .collect()
}

fn idf_by_column(dtm: &DocumentTermMatrix) -> Vec<f64> {
    let m = dtm.m() as f64;
    dtm.vocabulary
        .df
        .iter()
        .map(|&df| (m / df as f64).ln())
        .collect()
}

pub fn inverse_document_frequency(dtm: &DocumentTermMatrix) -> BTreeMap<String, f64> {
    dtm.vocabulary
        .terms
        .iter()
        .cloned()
        .zip(idf_by_column(dtm))
        .collect()
}

/// Column-keyed tf-idf rows with zero weights omitted.
pub fn tfidf_rows(dtm: &DocumentTermMatrix, scheme: WeightingScheme) -> Vec<BTreeMap<usize, f64>> {
    let idf = idf_by_column(dtm);
    dtm.rows
        .iter()
        .map(|row| {
            row_weights(row, scheme)
                .into_iter()
                .map(|(c, w)| (c, w * idf[c]))
                .filter(|&(_, w)| w != 0.0)
                .collect()
        })
        .collect()
}

/// Term-keyed tf-idf weights per document; zero weights are omitted.
pub fn tfidf_matrix(
    dtm: &DocumentTermMatrix,
    scheme: WeightingScheme,
) -> Vec<BTreeMap<String, f64>> {
    tfidf_rows(dtm, scheme)
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|(c, w)| (dtm.vocabulary.terms[c].clone(), w))
                .collect()
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DtmFile {
    doc_ids: Vec<String>,
    terms: Vec<String>,
    df: Vec<usize>,
    rows: Vec<Vec<(usize, u32)>>,
}

impl DocumentTermMatrix {
    pub fn to_json(&self) -> serde_json::Value {
        let file = DtmFile {
            doc_ids: self.doc_ids.clone(),
            terms: self.vocabulary.terms.clone(),
            df: self.vocabulary.df.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(&c, &n)| (c, n)).collect())
                .collect(),
        };
        serde_json::to_value(file).expect("dtm serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let file: DtmFile = serde_path_to_error::deserialize(value)
            .map_err(|e| Error::format(e.path().to_string(), e.into_inner().to_string()))?;
        if file.terms.len() != file.df.len() {
            return Err(Error::format("df", "length differs from terms"));
        }
        let vocabulary = Vocabulary::from_terms(file.terms.into_iter().zip(file.df).collect())?;
        let dtm = DocumentTermMatrix {
            doc_ids: file.doc_ids,
            rows: file
                .rows
                .into_iter()
                .map(|r| r.into_iter().collect())
                .collect(),
            vocabulary,
        };
        dtm.check()?;
        Ok(dtm)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json()).expect("dtm serializes");
        text.push('\n');
        crate::ingest::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value =
            serde_json::from_str(&text).map_err(|e| Error::format("<document>", e.to_string()))?;
        Self::from_json(value)
    }
}

/// Distinct terms of a prepared corpus, for callers that bypass feature selection.
pub fn all_types(prepared: &[PreparedDocument]) -> BTreeSet<String> {
    prepared
        .iter()
        .flat_map(|d| d.token_types.iter().cloned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn prepared(id: &str, tokens: &[&str]) -> PreparedDocument {
        let content: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
        PreparedDocument {
            doc_id: id.into(),
            sentences: vec![content.clone()],
            filtered_tokens: content.clone(),
            content_sentences: vec![content.clone()],
            token_types: content.iter().cloned().collect(),
            content_tokens: content,
        }
    }

    fn two_docs() -> Vec<PreparedDocument> {
        vec![
            prepared("d1", &["a", "a", "b"]),
            prepared("d2", &["b", "c"]),
        ]
    }

    #[test]
    fn vocabulary_defaults() {
        let v = build_vocabulary(&two_docs(), &FeatureSelection::default()).unwrap();
        assert_eq!(v.terms(), ["a", "b", "c"]);
        assert_eq!(
            (v.df_of("a"), v.df_of("b"), v.df_of("c")),
            (Some(1), Some(2), Some(1))
        );
    }

    #[test]
    fn vocabulary_max_df() {
        let sel = FeatureSelection {
            max_df_ratio: 0.9,
            ..Default::default()
        };
        let v = build_vocabulary(&two_docs(), &sel).unwrap();
        assert_eq!(v.terms(), ["a", "c"]);
    }

    #[test]
    fn vocabulary_top_k_tie_is_lexicographic() {
        let sel = FeatureSelection {
            top_k: Some(1),
            ..Default::default()
        };
        let v = build_vocabulary(&two_docs(), &sel).unwrap();
        assert_eq!(v.terms(), ["a"]);
    }

    #[test]
    fn vocabulary_empty_is_an_error() {
        let sel = FeatureSelection {
            min_df: 3,
            ..Default::default()
        };
        assert!(matches!(
            build_vocabulary(&two_docs(), &sel),
            Err(Error::EmptyVocabulary)
        ));
        assert!(build_vocabulary(&[prepared("e", &[])], &FeatureSelection::default()).is_err());
    }

    #[test]
    fn selection_validation() {
        for sel in [
            FeatureSelection {
                min_df: 0,
                ..Default::default()
            },
            FeatureSelection {
                max_df_ratio: 0.0,
                ..Default::default()
            },
            FeatureSelection {
                max_df_ratio: 1.5,
                ..Default::default()
            },
        ] {
            assert!(sel.validate().is_err());
        }
    }

    #[test]
    fn dtm_counts() {
        let docs = vec![prepared("d1", &["a", "b", "a"]), prepared("d2", &[])];
        let vocab = Vocabulary::from_terms(vec![("a".into(), 1), ("b".into(), 1), ("c".into(), 1)])
            .unwrap();
        let dtm = build_dtm(&docs, &vocab);
        assert_eq!((dtm.m(), dtm.n()), (2, 3));
        assert_eq!(
            dtm.row_terms(0),
            BTreeMap::from([("a".into(), 2), ("b".into(), 1)])
        );
        assert!(dtm.row(1).is_empty());
    }

    #[test]
    fn weighting_schemes() {
        let docs = vec![prepared("d1", &["a", "b", "a"]), prepared("d2", &[])];
        let vocab = build_vocabulary(&docs, &FeatureSelection::default()).unwrap();
        let dtm = build_dtm(&docs, &vocab);
        let rel = term_weights(&dtm, 0, WeightingScheme::Relative);
        assert!((rel["a"] - 2.0 / 3.0).abs() < 1e-15 && (rel["b"] - 1.0 / 3.0).abs() < 1e-15);
        let aug = term_weights(&dtm, 0, WeightingScheme::Augmented);
        assert_eq!((aug["a"], aug["b"]), (1.0, 0.5));
        let raw = term_weights(&dtm, 0, WeightingScheme::Raw);
        assert_eq!((raw["a"], raw["b"]), (2.0, 1.0));
        for scheme in [
            WeightingScheme::Raw,
            WeightingScheme::Relative,
            WeightingScheme::Augmented,
        ] {
            assert!(term_weights(&dtm, 1, scheme).is_empty());
        }
    }

    #[test]
    fn idf_values() {
        let dtm = build_dtm(
            &two_docs(),
            &build_vocabulary(&two_docs(), &FeatureSelection::default()).unwrap(),
        );
        let idf = inverse_document_frequency(&dtm);
        assert!((idf["a"] - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(idf["b"], 0.0);

        let single = vec![prepared("d", &["x", "y"])];
        let dtm = build_dtm(
            &single,
            &build_vocabulary(&single, &FeatureSelection::default()).unwrap(),
        );
        assert!(inverse_document_frequency(&dtm).values().all(|&v| v == 0.0));
    }

    #[test]
    fn tfidf_hand_value() {
        let docs = vec![
            prepared("d1", &["a", "b", "a"]),
            prepared("d2", &["b", "c"]),
        ];
        let dtm = build_dtm(
            &docs,
            &build_vocabulary(&docs, &FeatureSelection::default()).unwrap(),
        );
        let w = tfidf_matrix(&dtm, WeightingScheme::Raw);
        assert!((w[0]["a"] - 1.386294).abs() < 1e-6);
        assert!(!w[0].contains_key("b") && !w[1].contains_key("b"));
    }

    #[test]
    fn json_round_trip() {
        let dtm = build_dtm(
            &two_docs(),
            &build_vocabulary(&two_docs(), &FeatureSelection::default()).unwrap(),
        );
        let back = DocumentTermMatrix::from_json(dtm.to_json()).unwrap();
        assert_eq!(back, dtm);
    }

    #[test]
    fn corrupt_json_is_rejected() {
        let bad =
            serde_json::json!({"doc_ids": ["d"], "terms": ["a"], "df": [1], "rows": [[[5, 1]]]});
        assert!(DocumentTermMatrix::from_json(bad).is_err());
        let missing = serde_json::json!({"doc_ids": ["d"], "terms": ["a"], "df": [1]});
        match DocumentTermMatrix::from_json(missing).unwrap_err() {
            Error::InputFormat { message, .. } => assert!(message.contains("rows")),
            e => panic!("{e:?}"),
        }
    }
}
