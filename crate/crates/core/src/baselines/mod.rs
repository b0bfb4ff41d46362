//! Comparison baselines: single sources, concatenation, zero-padded sums, and
//! the fitted SVD and GCCA projections.

mod gcca;
mod pooled;
mod svd;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use gcca::{fit_gcca, gcca_embed, gcca_source_contribution, GccaBasis};
pub use pooled::{avg_embed, conc_embed, source_sentence_vectors, sse_embed};
pub use svd::{fit_svd, svd_embed, SvdBasis};

/// A fitted projection baseline, serialized with a `method` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", bound = "T: Scalar")]
pub enum Basis<T> {
    Svd(SvdBasis<T>),
    Gcca(GccaBasis<T>),
}

impl<T: Scalar> Basis<T> {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("basis serializes");
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let basis: Basis<T> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        match &basis {
            Basis::Svd(b) => b.validate()?,
            Basis::Gcca(b) => b.validate()?,
        }
        Ok(basis)
    }
}
