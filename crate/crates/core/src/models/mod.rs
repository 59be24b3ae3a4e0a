//! Model-based analytics: document classification, retrieval and topic modeling.

mod lda;
mod nb;
mod retrieval;

pub use lda::{fit_lda, top_topic_terms, GibbsSampler, LdaParams, TopicModel};
pub use nb::{train_naive_bayes, Classification, NbModel};
pub use retrieval::{rank_documents, Ranking, SearchHit};
