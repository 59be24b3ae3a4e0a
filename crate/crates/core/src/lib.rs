//! Capture, analyze and persist unstructured review text.
//!
//! The crate is organised as a left-to-right pipeline:
//!
//! * [`ingest`] turns HTML or plain-text sources into a deduplicated [`ingest::Corpus`].
//! * [`textprep`] normalizes, segments, tokenizes and filters documents.
//! * [`vectorspace`] builds the vocabulary, the document-term matrix and tf-idf weights.
//! * [`insight`] computes lexicon sentiment, profanity, unique-word and co-occurrence statistics.
//! * [`models`] holds naive Bayes classification, cosine retrieval and LDA topic modeling.
//! * [`render`] draws dashboard charts as standalone SVG.
//! * [`sink`] persists results as content-addressed knowledge records with a file outbox.

pub mod error;
pub mod ingest;
pub mod insight;
pub mod models;
pub mod render;
pub mod sink;
pub mod textprep;
pub mod time;
pub mod vectorspace;

pub use error::{Error, Result};
