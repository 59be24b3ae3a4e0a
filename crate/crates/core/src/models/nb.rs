//! Multinomial naive Bayes with Laplace (additive) smoothing.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::vectorspace::DocumentTermMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NbModel {
    /// Sorted labels.
    pub classes: Vec<String>,
    pub log_priors: Vec<f64>,
    /// `[class][column]`
    pub log_likelihood: Vec<Vec<f64>>,
    pub terms: Vec<String>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: String,
    /// Unnormalized log-posterior per class, in class order.
    pub scores: Vec<(String, f64)>,
}

/// `log_prior(c) = ln(|c| / m)` and
/// `log_likelihood(c, t) = ln((count(c, t) + alpha) / (tokens(c) + alpha * n))`.
pub fn train_naive_bayes(
    dtm: &DocumentTermMatrix,
    labels: &BTreeMap<String, String>,
    alpha: f64,
) -> Result<NbModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be > 0, got {alpha}")));
    }
    let mut row_labels = Vec::with_capacity(dtm.m());
    for id in dtm.doc_ids() {
        let label = labels
            .get(id)
            .ok_or_else(|| Error::Config(format!("document {id:?} has no label")))?;
        row_labels.push(label.as_str());
    }
    let classes: Vec<String> = row_labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(String::from)
        .collect();
    if classes.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 classes, found {}",
            classes.len()
        )));
    }
    let n = dtm.n();
    let m = dtm.m() as f64;
    let mut docs = vec![0usize; classes.len()];
    let mut counts = vec![vec![0u64; n]; classes.len()];
    for (i, label) in row_labels.iter().enumerate() {
        let c = classes.binary_search_by(|x| x.as_str().cmp(label)).unwrap();
        docs[c] += 1;
        for (&col, &k) in dtm.row(i) {
            counts[c][col] += u64::from(k);
        }
    }
    let log_likelihood = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            let denom = total as f64 + alpha * n as f64;
            row.iter()
                .map(|&k| ((k as f64 + alpha) / denom).ln())
                .collect()
        })
        .collect();
    Ok(NbModel {
        log_priors: docs.iter().map(|&d| (d as f64 / m).ln()).collect(),
        classes,
        log_likelihood,
        terms: dtm.vocabulary().terms().to_vec(),
        alpha,
    })
}

impl NbModel {
    /// Highest log-posterior wins; ties go to the lexicographically smallest
    /// label. Terms outside the training vocabulary are ignored.
    pub fn classify(&self, doc_counts: &BTreeMap<String, u32>) -> Classification {
        let observed: Vec<(usize, f64)> = doc_counts
            .iter()
            .filter_map(|(t, &k)| {
                self.terms
                    .binary_search(t)
                    .ok()
                    .map(|col| (col, f64::from(k)))
            })
            .collect();
        let scores: Vec<(String, f64)> = self
            .classes
            .iter()
            .enumerate()
            .map(|(c, label)| {
                let s = self.log_priors[c]
                    + observed
                        .iter()
                        .map(|&(col, k)| k * self.log_likelihood[c][col])
                        .sum::<f64>();
                (label.clone(), s)
            })
            .collect();
        let mut best = 0;
        for (c, (_, s)) in scores.iter().enumerate() {
            if *s > scores[best].1 {
                best = c;
            }
        }
        Classification {
            label: scores[best].0.clone(),
            scores,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::PreparedDocument;
    use crate::vectorspace::{build_dtm, Vocabulary};

    fn prepared(id: &str, tokens: &[&str]) -> PreparedDocument {
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

    fn abc_dtm() -> DocumentTermMatrix {
        let docs = [
            prepared("x", &["a", "a", "b"]),
            prepared("y", &["b", "c", "c"]),
        ];
        let vocab = Vocabulary::from_terms(vec![("a".into(), 1), ("b".into(), 2), ("c".into(), 1)])
            .unwrap();
        build_dtm(&docs, &vocab)
    }

    fn labels(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn hand_computed_likelihoods() {
        let model = train_naive_bayes(&abc_dtm(), &labels(&[("x", "A"), ("y", "B")]), 1.0).unwrap();
        let expect = [
            [3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0],
            [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0],
        ];
        for (c, row) in expect.iter().enumerate() {
            for (t, &p) in row.iter().enumerate() {
                assert!((model.log_likelihood[c][t].exp() - p).abs() < 1e-12);
            }
            let total: f64 = model.log_likelihood[c].iter().map(|l| l.exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert_eq!(model.log_priors[0], model.log_priors[1]);
    }

    #[test]
    fn classify_hand_example() {
        let model = train_naive_bayes(&abc_dtm(), &labels(&[("x", "A"), ("y", "B")]), 1.0).unwrap();
        let out = model.classify(&BTreeMap::from([("a".to_string(), 1)]));
        assert_eq!(out.label, "A");
        assert!((out.scores[0].1 - (0.5f64.ln() + 0.5f64.ln())).abs() < 1e-12);
        assert!((out.scores[1].1 - (0.5f64.ln() + (1.0f64 / 6.0).ln())).abs() < 1e-12);
    }

    #[test]
    fn empty_document_gets_max_prior_with_lexicographic_tie() {
        let model = train_naive_bayes(&abc_dtm(), &labels(&[("x", "B"), ("y", "A")]), 1.0).unwrap();
        assert_eq!(model.classify(&BTreeMap::new()).label, "A");
        let out = model.classify(&BTreeMap::from([("zzz".to_string(), 4)]));
        assert_eq!(out.label, "A");
    }

    #[test]
    fn configuration_errors() {
        let dtm = abc_dtm();
        assert!(train_naive_bayes(&dtm, &labels(&[("x", "A"), ("y", "B")]), 0.0).is_err());
        assert!(train_naive_bayes(&dtm, &labels(&[("x", "A")]), 1.0).is_err());
        assert!(train_naive_bayes(&dtm, &labels(&[("x", "A"), ("y", "A")]), 1.0).is_err());
    }
}
