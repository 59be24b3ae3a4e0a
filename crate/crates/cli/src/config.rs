//! `RunConfig`: one JSON file, paths relative to the working directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use textkm::models::LdaParams;
use textkm::textprep::{
    default_stop_words, load_lemma_table, load_word_list, NormalizationConfig, PipelineConfig,
};
use textkm::vectorspace::FeatureSelection;
use textkm::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub normalization: NormalizationConfig,
    /// Replaces the bundled stop list when set.
    pub stop_words_path: Option<PathBuf>,
    pub stem: bool,
    pub lemmatize: bool,
    pub lemma_table_path: Option<PathBuf>,
}

impl PipelineSection {
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let stop_words = match &self.stop_words_path {
            Some(p) => load_word_list(p)?,
            None => default_stop_words(),
        };
        let lemma_table = match &self.lemma_table_path {
            Some(p) => load_lemma_table(p)?,
            None => Default::default(),
        };
        if self.lemmatize && self.lemma_table_path.is_none() {
            return Err(Error::Config("lemmatize needs lemma_table_path".into()));
        }
        let cfg = PipelineConfig {
            normalization: self.normalization.clone(),
            stop_words,
            stem: self.stem,
            lemmatize: self.lemmatize,
            lemma_table,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn paths(&self) -> impl Iterator<Item = &Path> {
        self.stop_words_path
            .iter()
            .chain(&self.lemma_table_path)
            .map(PathBuf::as_path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConceptSection {
    pub min_count: usize,
}

impl Default for ConceptSection {
    fn default() -> Self {
        ConceptSection { min_count: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub selection: FeatureSelection,
    pub sentiment_lexicon: PathBuf,
    pub profanity: PathBuf,
    #[serde(default)]
    pub lda: LdaParams,
    #[serde(default)]
    pub concepts: ConceptSection,
    #[serde(default = "default_top_k")]
    pub wordcloud_top_k: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_top_k() -> usize {
    30
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::Config(format!("{}: {}: {}", path.display(), e.path(), e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Value checks plus existence of every referenced file.
    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        self.lda.validate()?;
        self.pipeline.normalization.validate()?;
        if self.concepts.min_count < 1 {
            return Err(Error::Config(
                "concepts.min_count must be at least 1".into(),
            ));
        }
        if self.wordcloud_top_k < 1 {
            return Err(Error::Config("wordcloud_top_k must be at least 1".into()));
        }
        for p in [self.sentiment_lexicon.as_path(), self.profanity.as_path()]
            .into_iter()
            .chain(self.pipeline.paths())
        {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "referenced file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}
