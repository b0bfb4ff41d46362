//! On-disk container for word-aligned multi-source token embeddings, STS
//! dataset loading and synthetic corpus generation.
//!
//! A corpus directory holds two files:
//!
//! - `manifest.json`: the [`SourceManifest`];
//! - `embeddings.jsonl`: one [`TokenEmbeddingRecord`] per line, with the
//!   fields `sid`, `source`, `words` and `vecs`.

mod corpus;
mod pairs;
mod sts;
mod synthetic;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corpus::{read_corpus, write_corpus, Corpus, Sentence, EMBEDDINGS_FILE, MANIFEST_FILE};
pub use pairs::{read_pairs, resolve_sts_rows, write_pairs, StsPair};
pub use sts::{load_sts_tsv, StsColumns, StsRow};
pub use synthetic::{generate_synthetic, synthetic_pairs, SyntheticCorpus, SyntheticSpec};

/// Alignment tag every manifest must carry.
pub const WORD_ALIGNED: &str = "word-aligned";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub id: String,
    pub dim: usize,
}

/// Declares the embedding sources of a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceManifest {
    pub sources: Vec<SourceSpec>,
    pub sentence_count: usize,
    pub alignment: String,
}

impl SourceManifest {
    pub fn new(sources: Vec<SourceSpec>, sentence_count: usize) -> Result<Self> {
        let m = SourceManifest {
            sources,
            sentence_count,
            alignment: WORD_ALIGNED.to_string(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::Manifest("no sources declared".into()));
        }
        if self.alignment != WORD_ALIGNED {
            return Err(Error::Manifest(format!(
                "alignment must be `{WORD_ALIGNED}`, found `{}`",
                self.alignment
            )));
        }
        let mut seen = HashSet::new();
        for s in &self.sources {
            if s.id.is_empty() {
                return Err(Error::Manifest("empty source id".into()));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate source id `{}`", s.id)));
            }
            if s.dim == 0 {
                return Err(Error::Manifest(format!(
                    "source `{}` has dimension 0",
                    s.id
                )));
            }
        }
        Ok(())
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn source_index(&self, id: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.id == id)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sources.iter().map(|s| s.dim).collect()
    }

    pub fn source_ids(&self) -> Vec<String> {
        self.sources.iter().map(|s| s.id.clone()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.sources.iter().map(|s| s.dim).sum()
    }

    pub fn max_dim(&self) -> usize {
        self.sources.iter().map(|s| s.dim).max().unwrap_or(0)
    }
}

/// Word-aligned token vectors of one sentence under one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: crate::Scalar")]
pub struct TokenEmbeddingRecord<T> {
    #[serde(rename = "sid")]
    pub sentence_id: u64,
    #[serde(rename = "source")]
    pub source_id: String,
    pub words: Vec<String>,
    #[serde(rename = "vecs")]
    pub vectors: Vec<Vec<T>>,
}
