//! Cosine ranking over raw-tf tf-idf vectors.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::textprep::{content_tokens, PipelineConfig};
use crate::vectorspace::{
    inverse_document_frequency, tfidf_rows, DocumentTermMatrix, WeightingScheme,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Ranking {
    /// Score-descending; equal scores keep corpus order.
    pub hits: Vec<SearchHit>,
    /// Set when the query has no tokens in the corpus vocabulary.
    pub no_vocabulary_match: bool,
}

/// Ranks documents by cosine similarity to `query`, which goes through the
/// same preprocessing as the corpus. Documents or queries with a zero vector,
/// and documents sharing no weighted term with the query, are left out.
pub fn rank_documents(query: &str, dtm: &DocumentTermMatrix, cfg: &PipelineConfig) -> Ranking {
    let vocab = dtm.vocabulary();
    let mut tf: BTreeMap<usize, u32> = BTreeMap::new();
    for t in content_tokens(query, cfg) {
        if let Some(c) = vocab.index_of(&t) {
            *tf.entry(c).or_default() += 1;
        }
    }
    if tf.is_empty() {
        return Ranking {
            hits: Vec::new(),
            no_vocabulary_match: true,
        };
    }
    let idf = inverse_document_frequency(dtm);
    let query_vec: Vec<(usize, f64)> = tf
        .iter()
        .map(|(&c, &k)| (c, f64::from(k) * idf[&vocab.terms()[c]]))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    let query_norm = query_vec.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if query_norm == 0.0 {
        return Ranking::default();
    }

    let mut hits: Vec<SearchHit> = tfidf_rows(dtm, WeightingScheme::Raw)
        .iter()
        .zip(dtm.doc_ids())
        .filter_map(|(row, id)| {
            let norm = row.values().map(|w| w * w).sum::<f64>().sqrt();
            if norm == 0.0 {
                return None;
            }
            let dot: f64 = query_vec
                .iter()
                .filter_map(|(c, qw)| row.get(c).map(|dw| qw * dw))
                .sum();
            let score = (dot / (query_norm * norm)).clamp(0.0, 1.0);
            (score > 0.0).then(|| SearchHit {
                doc_id: id.clone(),
                score,
            })
        })
        .collect();
    hits.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ranking {
        hits,
        no_vocabulary_match: false,
    }
}
