//! The learnable meta-embedding model and its forward pass.
//!
//! Source `i` is mapped into the shared `d_m`-dimensional space by a
//! projection `A_i` (`d_m × d_i`), optionally scaled by a softmax weight
//! `α_i`. A word's meta-embedding is the average of its projected source
//! vectors; a sentence embedding pools those word vectors elementwise.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding_io::{Corpus, Sentence, SourceManifest, SourceSpec};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::scalar::{all_finite, Scalar};

/// Word-to-sentence pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Mean,
    Max,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Mean => "mean",
            Pooling::Max => "max",
        })
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Pooling::Mean),
            "max" => Ok(Pooling::Max),
            other => Err(Error::Config(format!(
                "unknown pooling `{other}` (expected mean|max)"
            ))),
        }
    }
}

/// Which method produced a sentence embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Unsup,
    Sup,
    Conc,
    Avg,
    Svd,
    Gcca,
    Sse,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Unsup => "unsup",
            Method::Sup => "sup",
            Method::Conc => "conc",
            Method::Avg => "avg",
            Method::Svd => "svd",
            Method::Gcca => "gcca",
            Method::Sse => "sse",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unsup" => Method::Unsup,
            "sup" => Method::Sup,
            "conc" => Method::Conc,
            "avg" => Method::Avg,
            "svd" => Method::Svd,
            "gcca" => Method::Gcca,
            "sse" => Method::Sse,
            other => {
                return Err(Error::Config(format!(
                    "unknown method `{other}` (expected sse|conc|avg|svd|gcca|unsup|sup)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SentenceEmbedding<T> {
    pub vector: Vec<T>,
    pub method: Method,
    pub pooling: Pooling,
}

/// Coefficients of the repel terms (`lambda`, `mu`, `nu`) and of the
/// orthogonality regularizer (`xi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LossCoeffs<T> {
    pub lambda: T,
    pub mu: T,
    pub nu: T,
    pub xi: T,
}

impl<T: Scalar> LossCoeffs<T> {
    pub fn new(lambda: T, mu: T, nu: T, xi: T) -> Self {
        LossCoeffs { lambda, mu, nu, xi }
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.lambda, self.mu, self.nu, self.xi]
    }

    pub fn from_array(a: [T; 4]) -> Self {
        LossCoeffs::new(a[0], a[1], a[2], a[3])
    }
}

impl<T: Scalar> Default for LossCoeffs<T> {
    fn default() -> Self {
        LossCoeffs::new(T::of(0.1), T::of(0.1), T::of(0.1), T::one())
    }
}

/// Per-source projections, source weight scores and loss coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel<T>", bound = "T: Scalar")]
pub struct MetaModel<T> {
    d_m: usize,
    sources: Vec<SourceSpec>,
    projections: Vec<DenseMatrix<T>>,
    weight_scores: Vec<T>,
    loss_coeffs: LossCoeffs<T>,
    weighted: bool,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawModel<T> {
    d_m: usize,
    sources: Vec<SourceSpec>,
    projections: Vec<DenseMatrix<T>>,
    weight_scores: Vec<T>,
    loss_coeffs: LossCoeffs<T>,
    weighted: bool,
}

impl<T: Scalar> TryFrom<RawModel<T>> for MetaModel<T> {
    type Error = Error;

    fn try_from(r: RawModel<T>) -> Result<Self> {
        MetaModel::new(
            r.d_m,
            r.sources,
            r.projections,
            r.weight_scores,
            r.loss_coeffs,
            r.weighted,
        )
    }
}

impl<T: Scalar> MetaModel<T> {
    pub fn new(
        d_m: usize,
        sources: Vec<SourceSpec>,
        projections: Vec<DenseMatrix<T>>,
        weight_scores: Vec<T>,
        loss_coeffs: LossCoeffs<T>,
        weighted: bool,
    ) -> Result<Self> {
        let m = MetaModel {
            d_m,
            sources,
            projections,
            weight_scores,
            loss_coeffs,
            weighted,
        };
        m.validate()?;
        Ok(m)
    }

    /// Single-source-per-matrix convenience constructor with sources named
    /// `s0, s1, …`, zero weight scores and default coefficients.
    pub fn from_projections(projections: Vec<DenseMatrix<T>>) -> Result<Self> {
        let d_m = projections.first().map_or(0, DenseMatrix::rows);
        let sources = projections
            .iter()
            .enumerate()
            .map(|(i, a)| SourceSpec {
                id: format!("s{i}"),
                dim: a.cols(),
            })
            .collect();
        let n = projections.len();
        MetaModel::new(
            d_m,
            sources,
            projections,
            vec![T::zero(); n],
            LossCoeffs::default(),
            true,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sources.len();
        if n == 0 {
            return Err(Error::Shape("model needs at least one source".into()));
        }
        if self.d_m == 0 {
            return Err(Error::Shape("meta dimension must be positive".into()));
        }
        if self.projections.len() != n || self.weight_scores.len() != n {
            return Err(Error::Shape(format!(
                "{n} sources but {} projections and {} weight scores",
                self.projections.len(),
                self.weight_scores.len()
            )));
        }
        SourceManifest::new(self.sources.clone(), 0)?;
        for (s, a) in self.sources.iter().zip(&self.projections) {
            if a.shape() != (self.d_m, s.dim) {
                return Err(Error::Shape(format!(
                    "projection for `{}` is {}x{}, expected {}x{}",
                    s.id,
                    a.rows(),
                    a.cols(),
                    self.d_m,
                    s.dim
                )));
            }
            if !a.is_finite() {
                return Err(Error::NonFinite(format!("projection for `{}`", s.id)));
            }
        }
        if !all_finite(&self.weight_scores) || !all_finite(&self.loss_coeffs.as_array()) {
            return Err(Error::NonFinite(
                "weight scores or loss coefficients".into(),
            ));
        }
        Ok(())
    }

    pub fn d_m(&self) -> usize {
        self.d_m
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn sources(&self) -> &[SourceSpec] {
        &self.sources
    }

    pub fn projections(&self) -> &[DenseMatrix<T>] {
        &self.projections
    }

    pub fn weight_scores(&self) -> &[T] {
        &self.weight_scores
    }

    pub fn loss_coeffs(&self) -> &LossCoeffs<T> {
        &self.loss_coeffs
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn set_weighted(&mut self, weighted: bool) {
        self.weighted = weighted;
    }

    pub fn set_loss_coeffs(&mut self, coeffs: LossCoeffs<T>) {
        self.loss_coeffs = coeffs;
    }

    pub(crate) fn projections_mut(&mut self) -> &mut [DenseMatrix<T>] {
        &mut self.projections
    }

    pub(crate) fn weight_scores_mut(&mut self) -> &mut [T] {
        &mut self.weight_scores
    }

    /// Total number of learnable projection entries plus weight scores.
    pub fn parameter_count(&self) -> usize {
        self.projections
            .iter()
            .map(|a| a.rows() * a.cols())
            .sum::<usize>()
            + self.weight_scores.len()
    }

    /// Softmax of the weight scores: positive and summing to one.
    pub fn weights(&self) -> Vec<T> {
        softmax(&self.weight_scores)
    }

    /// Multipliers actually applied to each projected source: the softmax
    /// weights for a weighted model, ones otherwise.
    pub fn source_scales(&self) -> Vec<T> {
        if self.weighted {
            self.weights()
        } else {
            vec![T::one(); self.n_sources()]
        }
    }

    /// `A_i·x`, or `α_i·A_i·x` when `weighted`.
    pub fn project(&self, source: usize, x: &[T], weighted: bool) -> Result<Vec<T>> {
        let a = self
            .projections
            .get(source)
            .ok_or_else(|| Error::UnknownSource(format!("#{source} of {}", self.n_sources())))?;
        let mut y = a.mul_vec(x)?;
        if weighted {
            let alpha = self.weights()[source];
            y.iter_mut().for_each(|v| *v = *v * alpha);
        }
        Ok(y)
    }

    /// Word-level meta-embedding: the average over sources of the projected
    /// vectors (weighted according to the model flag).
    pub fn word_meta(&self, per_source: &[&[T]]) -> Result<Vec<T>> {
        self.word_meta_scaled(per_source, &self.source_scales())
    }

    fn word_meta_scaled(&self, per_source: &[&[T]], scales: &[T]) -> Result<Vec<T>> {
        let n = self.n_sources();
        if per_source.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: per_source.len(),
            });
        }
        let inv_n = T::one() / T::of(n as f64);
        let mut out = vec![T::zero(); self.d_m];
        for (i, x) in per_source.iter().enumerate() {
            let y = self.projections[i].mul_vec(x)?;
            let c = scales[i] * inv_n;
            for (o, v) in out.iter_mut().zip(y) {
                *o = *o + c * v;
            }
        }
        Ok(out)
    }

    /// For each model source, its position in `manifest`. Dimensions must agree.
    pub fn source_positions(&self, manifest: &SourceManifest) -> Result<Vec<usize>> {
        self.sources
            .iter()
            .map(|s| {
                let k = manifest
                    .source_index(&s.id)
                    .ok_or_else(|| Error::UnknownSource(s.id.clone()))?;
                let dim = manifest.sources[k].dim;
                if dim != s.dim {
                    return Err(Error::DimensionMismatch {
                        expected: s.dim,
                        found: dim,
                    });
                }
                Ok(k)
            })
            .collect()
    }

    /// Word-level meta-embeddings of every word of `sentence`.
    pub(crate) fn word_metas(
        &self,
        sentence: &Sentence<T>,
        positions: &[usize],
        manifest: &SourceManifest,
    ) -> Result<Vec<Vec<T>>> {
        let per_source = positions
            .iter()
            .map(|&k| sentence.source(k, manifest))
            .collect::<Result<Vec<_>>>()?;
        let scales = self.source_scales();
        (0..sentence.len())
            .map(|w| {
                let words: Vec<&[T]> = per_source.iter().map(|v| v[w].as_slice()).collect();
                self.word_meta_scaled(&words, &scales)
            })
            .collect()
    }

    /// Sentence embedding of `sid`: pooled word-level meta-embeddings.
    pub fn embed_sentence(
        &self,
        corpus: &Corpus<T>,
        sid: u64,
        pooling: Pooling,
    ) -> Result<SentenceEmbedding<T>> {
        let positions = self.source_positions(corpus.manifest())?;
        let sentence = corpus.sentence(sid)?;
        self.embed_with_positions(sentence, &positions, corpus.manifest(), pooling)
    }

    pub(crate) fn embed_with_positions(
        &self,
        sentence: &Sentence<T>,
        positions: &[usize],
        manifest: &SourceManifest,
        pooling: Pooling,
    ) -> Result<SentenceEmbedding<T>> {
        let words = self.word_metas(sentence, positions, manifest)?;
        Ok(SentenceEmbedding {
            vector: pool_sentence(&words, pooling)?,
            method: Method::Unsup,
            pooling,
        })
    }

    /// Embeds every sentence in `corpus`, in corpus order.
    pub fn embed_corpus(&self, corpus: &Corpus<T>, pooling: Pooling) -> Result<Vec<(u64, Vec<T>)>> {
        let positions = self.source_positions(corpus.manifest())?;
        corpus
            .sentences()
            .iter()
            .map(|s| {
                let e = self.embed_with_positions(s, &positions, corpus.manifest(), pooling)?;
                Ok((s.id, e.vector))
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("model serializes");
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

pub fn save_model<T: Scalar>(model: &MetaModel<T>, path: impl AsRef<Path>) -> Result<()> {
    model.save(path)
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<MetaModel<T>> {
    MetaModel::load(path)
}

/// Numerically stable normalized exponential.
pub fn softmax<T: Scalar>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Elementwise mean or max over a sentence's word vectors.
pub fn pool_sentence<T: Scalar>(words: &[Vec<T>], pooling: Pooling) -> Result<Vec<T>> {
    let first = words
        .first()
        .ok_or_else(|| Error::Empty("sentence has no words".into()))?;
    let dim = first.len();
    if let Some(bad) = words.iter().find(|w| w.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let mut out = first.clone();
    match pooling {
        Pooling::Mean => {
            for w in &words[1..] {
                out.iter_mut().zip(w).for_each(|(o, &x)| *o = *o + x);
            }
            let n = T::of(words.len() as f64);
            out.iter_mut().for_each(|o| *o = *o / n);
        }
        Pooling::Max => {
            for w in &words[1..] {
                out.iter_mut().zip(w).for_each(|(o, &x)| *o = o.max(x));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding_io::TokenEmbeddingRecord;

    fn m(rows: &[Vec<f64>]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn project_examples() {
        let one = MetaModel::from_projections(vec![DenseMatrix::identity(2)]).unwrap();
        assert_eq!(one.project(0, &[3.0, -4.0], true).unwrap(), vec![3.0, -4.0]);

        let diag = MetaModel::from_projections(vec![m(&[vec![1.0, 0.0], vec![0.0, 2.0]])]).unwrap();
        assert_eq!(diag.project(0, &[1.0, 1.0], false).unwrap(), vec![1.0, 2.0]);

        let two =
            MetaModel::from_projections(vec![DenseMatrix::identity(2), DenseMatrix::identity(2)])
                .unwrap();
        assert_eq!(two.project(0, &[2.0, 2.0], true).unwrap(), vec![1.0, 1.0]);
        assert!(two.project(0, &[1.0], true).is_err());
        assert!(two.project(5, &[1.0, 1.0], true).is_err());
    }

    #[test]
    fn weights_examples() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        for c in [-3.0f64, 0.0, 7.5] {
            for w in softmax(&[c, c, c]) {
                assert!((w - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let w = softmax(&[2f64.ln(), 0.0]);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-15);
        let big = softmax(&[800.0f64, 0.0, -800.0]);
        assert!(big.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn word_meta_examples() {
        let two =
            MetaModel::from_projections(vec![DenseMatrix::identity(2), DenseMatrix::identity(2)])
                .unwrap();
        assert_eq!(
            two.word_meta(&[&[2.0, 0.0], &[0.0, 2.0]]).unwrap(),
            vec![0.5, 0.5]
        );

        // Unweighted: the plain average of the projections [1,3] and [3,5].
        let mut plain = MetaModel::from_projections(vec![
            m(&[vec![1.0, 0.0], vec![0.0, 3.0]]),
            m(&[vec![3.0, 0.0], vec![0.0, 5.0]]),
        ])
        .unwrap();
        plain.set_weighted(false);
        assert_eq!(
            plain.word_meta(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap(),
            vec![2.0, 4.0]
        );

        let one = MetaModel::from_projections(vec![m(&[vec![2.0, 1.0]])]).unwrap();
        assert_eq!(
            one.word_meta(&[&[1.0, 1.0]]).unwrap(),
            one.project(0, &[1.0, 1.0], true).unwrap()
        );
        assert!(one.word_meta(&[]).is_err());
    }

    #[test]
    fn pooling_examples() {
        for p in [Pooling::Mean, Pooling::Max] {
            assert_eq!(
                pool_sentence(&[vec![7.0, -1.0]], p).unwrap(),
                vec![7.0, -1.0]
            );
        }
        let words = vec![vec![1.0, 5.0], vec![3.0, 1.0]];
        assert_eq!(
            pool_sentence(&words, Pooling::Mean).unwrap(),
            vec![2.0, 3.0]
        );
        assert_eq!(pool_sentence(&words, Pooling::Max).unwrap(), vec![3.0, 5.0]);
        assert!(pool_sentence::<f64>(&[], Pooling::Mean).is_err());
    }

    fn corpus(words: &[&str], vecs: Vec<Vec<f64>>) -> Corpus<f64> {
        let manifest = SourceManifest::new(
            vec![SourceSpec {
                id: "s0".into(),
                dim: vecs[0].len(),
            }],
            1,
        )
        .unwrap();
        Corpus::from_records(
            manifest,
            vec![TokenEmbeddingRecord {
                sentence_id: 0,
                source_id: "s0".into(),
                words: words.iter().map(|w| w.to_string()).collect(),
                vectors: vecs,
            }],
        )
        .unwrap()
    }

    #[test]
    fn embed_sentence_examples() {
        let id = MetaModel::from_projections(vec![DenseMatrix::identity(2)]).unwrap();
        let c = corpus(&["a"], vec![vec![0.3, -0.7]]);
        assert_eq!(
            id.embed_sentence(&c, 0, Pooling::Max).unwrap().vector,
            vec![0.3, -0.7]
        );

        let c = corpus(
            &["a", "b", "c"],
            vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![2.0, 2.0]],
        );
        let e = id.embed_sentence(&c, 0, Pooling::Mean).unwrap();
        assert!((e.vector[0] - 2.0).abs() < 1e-15 && (e.vector[1] - 1.0).abs() < 1e-15);
        assert_eq!(e, id.embed_sentence(&c, 0, Pooling::Mean).unwrap());
        assert!(id.embed_sentence(&c, 9, Pooling::Mean).is_err());
    }

    #[test]
    fn save_load_round_trip_and_shape_check() {
        let dir = tempfile::tempdir().unwrap();
        let a1 =
            DenseMatrix::from_vec(4, 4, (0..16).map(|i| i as f64 * 0.1 - 0.3).collect()).unwrap();
        let a2 = DenseMatrix::from_vec(4, 6, (0..24).map(|i| (i as f64).sin()).collect()).unwrap();
        let mut model = MetaModel::from_projections(vec![a1, a2]).unwrap();
        model.weight_scores_mut()[0] = 0.123456789;
        let p = dir.path().join("m.json");
        model.save(&p).unwrap();
        let back: MetaModel<f64> = MetaModel::load(&p).unwrap();
        assert_eq!(back, model);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        let sizes: Vec<usize> = v["projections"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["data"].as_array().unwrap().len())
            .collect();
        assert_eq!(sizes, vec![16, 24]);

        let mut bad = v.clone();
        bad["projections"][0] = serde_json::json!({"rows": 3, "cols": 4, "data": vec![0.0; 12]});
        std::fs::write(&p, bad.to_string()).unwrap();
        assert!(MetaModel::<f64>::load(&p).is_err());
    }

    #[test]
    fn tags_parse() {
        assert_eq!("max".parse::<Pooling>().unwrap(), Pooling::Max);
        assert!("sum".parse::<Pooling>().is_err());
        assert_eq!("gcca".parse::<Method>().unwrap(), Method::Gcca);
        assert_eq!(Method::Unsup.to_string(), "unsup");
    }
}
