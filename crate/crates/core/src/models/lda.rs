//! Latent Dirichlet allocation fit by collapsed Gibbs sampling.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Tokens are visited document by document, and within a
//! document in column order with each count expanded, so a fixed seed and
//! matrix always give the same model. The estimate is the single final state of
//! the chain; no burn-in averaging is done.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorspace::DocumentTermMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            k: 2,
            alpha: 0.1,
            beta: 0.01,
            iterations: 200,
            seed: 42,
        }
    }
}

impl LdaParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config("LDA needs at least 2 topics".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite())
        {
            return Err(Error::Config("LDA alpha and beta must be > 0".into()));
        }
        if self.iterations < 1 {
            return Err(Error::Config("LDA needs at least 1 iteration".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicModel {
    pub params: LdaParams,
    pub doc_ids: Vec<String>,
    pub terms: Vec<String>,
    /// `[doc][topic]`
    pub theta: Vec<Vec<f64>>,
    /// `[topic][term]`
    pub phi: Vec<Vec<f64>>,
}

/// Sampler state; exposed so callers can step sweeps and inspect counts.
pub struct GibbsSampler {
    params: LdaParams,
    n_terms: usize,
    words: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    n_dk: Vec<Vec<usize>>,
    n_kw: Vec<Vec<usize>>,
    n_k: Vec<usize>,
    rng: ChaCha8Rng,
    doc_ids: Vec<String>,
    terms: Vec<String>,
    scratch: Vec<f64>,
}

impl GibbsSampler {
    /// Expands the matrix into tokens and assigns each a uniform random topic.
    pub fn new(dtm: &DocumentTermMatrix, params: LdaParams) -> Result<Self> {
        params.validate()?;
        if dtm.m() == 0 || dtm.n() == 0 {
            return Err(Error::Config(
                "LDA needs a non-empty document-term matrix".into(),
            ));
        }
        let words: Vec<Vec<usize>> = dtm
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .flat_map(|(&c, &n)| std::iter::repeat_n(c, n as usize))
                    .collect()
            })
            .collect();
        if words.iter().all(Vec::is_empty) {
            return Err(Error::Config(
                "LDA needs at least one non-empty document".into(),
            ));
        }
        let k = params.k;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut n_dk = vec![vec![0; k]; words.len()];
        let mut n_kw = vec![vec![0; dtm.n()]; k];
        let mut n_k = vec![0; k];
        let assignments = words
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let z = rng.random_range(0..k);
                        n_dk[d][z] += 1;
                        n_kw[z][w] += 1;
                        n_k[z] += 1;
                        z
                    })
                    .collect()
            })
            .collect();
        Ok(GibbsSampler {
            params,
            n_terms: dtm.n(),
            words,
            assignments,
            n_dk,
            n_kw,
            n_k,
            rng,
            doc_ids: dtm.doc_ids().to_vec(),
            terms: dtm.vocabulary().terms().to_vec(),
            scratch: vec![0.0; k],
        })
    }

    /// Resamples every token once from
    /// `P(z = k) ∝ (n_dk + α) (n_kw + β) / (n_k + nβ)`.
    pub fn sweep(&mut self) {
        let LdaParams { k, alpha, beta, .. } = self.params;
        let n_beta = self.n_terms as f64 * beta;
        for d in 0..self.words.len() {
            for i in 0..self.words[d].len() {
                let w = self.words[d][i];
                let old = self.assignments[d][i];
                self.n_dk[d][old] -= 1;
                self.n_kw[old][w] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (self.n_dk[d][t] as f64 + alpha) * (self.n_kw[t][w] as f64 + beta)
                        / (self.n_k[t] as f64 + n_beta);
                    self.scratch[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.scratch.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.assignments[d][i] = new;
                self.n_dk[d][new] += 1;
                self.n_kw[new][w] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    /// Whether the count tables agree with the assignments:
    /// `Σ_k n_dk = n_d`, `Σ_w n_kw = n_k`, and both equal a recount.
    pub fn counts_consistent(&self) -> bool {
        let k = self.params.k;
        let mut n_dk = vec![vec![0; k]; self.words.len()];
        let mut n_kw = vec![vec![0; self.n_terms]; k];
        for (d, doc) in self.words.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let z = self.assignments[d][i];
                n_dk[d][z] += 1;
                n_kw[z][w] += 1;
            }
        }
        let n_k: Vec<usize> = n_kw.iter().map(|row| row.iter().sum()).collect();
        n_dk == self.n_dk
            && n_kw == self.n_kw
            && n_k == self.n_k
            && self
                .n_dk
                .iter()
                .zip(&self.words)
                .all(|(row, doc)| row.iter().sum::<usize>() == doc.len())
    }

    /// `theta_dk = (n_dk + α) / (n_d + Kα)`, `phi_kw = (n_kw + β) / (n_k + nβ)`.
    pub fn estimate(&self) -> TopicModel {
        let LdaParams { k, alpha, beta, .. } = self.params;
        let n_beta = self.n_terms as f64 * beta;
        let theta = self
            .n_dk
            .iter()
            .map(|row| {
                let n_d: usize = row.iter().sum();
                let denom = n_d as f64 + k as f64 * alpha;
                row.iter().map(|&c| (c as f64 + alpha) / denom).collect()
            })
            .collect();
        let phi = self
            .n_kw
            .iter()
            .zip(&self.n_k)
            .map(|(row, &n)| {
                let denom = n as f64 + n_beta;
                row.iter().map(|&c| (c as f64 + beta) / denom).collect()
            })
            .collect();
        TopicModel {
            params: self.params,
            doc_ids: self.doc_ids.clone(),
            terms: self.terms.clone(),
            theta,
            phi,
        }
    }
}

pub fn fit_lda(dtm: &DocumentTermMatrix, params: LdaParams) -> Result<TopicModel> {
    let mut sampler = GibbsSampler::new(dtm, params)?;
    for _ in 0..params.iterations {
        sampler.sweep();
    }
    Ok(sampler.estimate())
}

/// Per topic, the `k` highest-probability terms (ties lexicographic).
pub fn top_topic_terms(model: &TopicModel, k: usize) -> Vec<Vec<(String, f64)>> {
    model
        .phi
        .iter()
        .map(|row| {
            let mut terms: Vec<(String, f64)> = model
                .terms
                .iter()
                .cloned()
                .zip(row.iter().copied())
                .collect();
            terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            terms.truncate(k);
            terms
        })
        .collect()
}

impl TopicModel {
    /// Index of the largest theta entry for each document (first on ties).
    pub fn dominant_topics(&self) -> Vec<usize> {
        self.theta
            .iter()
            .map(|row| {
                let mut best = 0;
                for (t, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = t;
                    }
                }
                best
            })
            .collect()
    }
}
