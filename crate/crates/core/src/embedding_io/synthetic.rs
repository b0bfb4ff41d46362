//! Desk-scale synthetic corpora with a known shared latent structure.
//!
//! Every vocabulary word owns a latent vector. Source `i` renders an
//! occurrence of the word through a fixed random partial isometry
//! `d_i × latent_dim` and adds isotropic Gaussian noise, so vectors of the
//! same word under different sources are linear images of one latent point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embedding_io::{Corpus, SourceManifest, SourceSpec, StsPair, TokenEmbeddingRecord};
use crate::error::{Error, Result};
use crate::numerics::{svd, DenseMatrix};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub dims: Vec<usize>,
    pub n_sentences: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub vocab_size: usize,
    /// Defaults to the smallest source dimension.
    pub latent_dim: Option<usize>,
    /// Standard deviation of the per-occurrence noise.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(dims: Vec<usize>, n_sentences: usize, seed: u64) -> Self {
        SyntheticSpec {
            dims,
            n_sentences,
            min_words: 3,
            max_words: 8,
            vocab_size: 40,
            latent_dim: None,
            noise: 0.1,
            seed,
        }
    }

    pub fn n_sources(&self) -> usize {
        self.dims.len()
    }

    pub fn latent(&self) -> usize {
        self.latent_dim
            .unwrap_or_else(|| self.dims.iter().copied().min().unwrap_or(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.dims.is_empty() {
            return bad("at least one source is required");
        }
        if self.dims.contains(&0) {
            return bad("source dimensions must be positive");
        }
        if self.n_sentences == 0 || self.vocab_size == 0 || self.latent() == 0 {
            return bad("sentence count, vocabulary size and latent dimension must be positive");
        }
        if self.min_words == 0 || self.max_words < self.min_words {
            return bad("words-per-sentence range must satisfy 1 <= min <= max");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be a finite non-negative number");
        }
        Ok(())
    }
}

/// A generated corpus together with the ground truth that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus<T> {
    pub corpus: Corpus<T>,
    /// Latent vector of vocabulary word `w{index}`.
    pub latents: Vec<Vec<T>>,
    /// Per-source rendering maps, `d_i × latent_dim`.
    pub source_maps: Vec<DenseMatrix<T>>,
    /// Vocabulary indices of each sentence, by sentence id.
    pub sentence_words: Vec<Vec<usize>>,
}

pub fn word_name(index: usize) -> String {
    format!("w{index}")
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Closest matrix with orthonormal columns (or rows, when wide) to a Gaussian draw.
fn random_partial_isometry<T: Scalar>(
    rows: usize,
    cols: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DenseMatrix<T>> {
    let data = (0..rows * cols).map(|_| T::of(gaussian(rng))).collect();
    let g = DenseMatrix::from_vec(rows, cols, data)?;
    let f = svd(&g)?;
    f.left.matmul(&f.right.transpose())
}

/// Generates a deterministic corpus from `spec`.
///
/// Odd-numbered sentences are perturbed copies of their predecessor (each
/// word replaced with probability one half), which gives sentence pairs a
/// spread of latent similarities.
pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<SyntheticCorpus<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let latent_dim = spec.latent();

    let latents: Vec<Vec<T>> = (0..spec.vocab_size)
        .map(|_| (0..latent_dim).map(|_| T::of(gaussian(&mut rng))).collect())
        .collect();
    let source_maps = spec
        .dims
        .iter()
        .map(|&d| random_partial_isometry(d, latent_dim, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    let mut sentence_words: Vec<Vec<usize>> = Vec::with_capacity(spec.n_sentences);
    for sid in 0..spec.n_sentences {
        let words = if sid % 2 == 1 {
            sentence_words[sid - 1]
                .iter()
                .map(|&w| {
                    if rng.random_bool(0.5) {
                        rng.random_range(0..spec.vocab_size)
                    } else {
                        w
                    }
                })
                .collect()
        } else {
            let len = rng.random_range(spec.min_words..=spec.max_words);
            (0..len)
                .map(|_| rng.random_range(0..spec.vocab_size))
                .collect()
        };
        sentence_words.push(words);
    }

    let sources: Vec<SourceSpec> = spec
        .dims
        .iter()
        .enumerate()
        .map(|(i, &dim)| SourceSpec {
            id: format!("src{i}"),
            dim,
        })
        .collect();
    let manifest = SourceManifest::new(sources, spec.n_sentences)?;
    let noise = T::of(spec.noise);

    let mut records = Vec::with_capacity(spec.n_sentences * spec.n_sources());
    for (sid, words) in sentence_words.iter().enumerate() {
        let names: Vec<String> = words.iter().map(|&w| word_name(w)).collect();
        for (i, map) in source_maps.iter().enumerate() {
            let vectors = words
                .iter()
                .map(|&w| {
                    let mut v = map.mul_vec(&latents[w])?;
                    for x in &mut v {
                        *x = *x + noise * T::of(gaussian(&mut rng));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?;
            records.push(TokenEmbeddingRecord {
                sentence_id: sid as u64,
                source_id: manifest.sources[i].id.clone(),
                words: names.clone(),
                vectors,
            });
        }
    }
    let corpus = Corpus::from_records(manifest, records)?;
    Ok(SyntheticCorpus {
        corpus,
        latents,
        source_maps,
        sentence_words,
    })
}

impl<T: Scalar> SyntheticCorpus<T> {
    /// Mean latent vector of a sentence's words.
    pub fn sentence_latent(&self, sid: usize) -> Vec<T> {
        let words = &self.sentence_words[sid];
        let dim = self.latents[0].len();
        let mut acc = vec![T::zero(); dim];
        for &w in words {
            for (a, &x) in acc.iter_mut().zip(&self.latents[w]) {
                *a = *a + x;
            }
        }
        let n = T::of(words.len() as f64);
        acc.iter_mut().for_each(|a| *a = *a / n);
        acc
    }

    /// Cosine of the two sentences' mean latents.
    pub fn latent_cosine(&self, a: usize, b: usize) -> T {
        let (u, v) = (self.sentence_latent(a), self.sentence_latent(b));
        let denom = dot(&u, &u).sqrt() * dot(&v, &v).sqrt();
        if denom > T::zero() {
            dot(&u, &v) / denom
        } else {
            T::zero()
        }
    }
}

/// Sentence pairs scored by latent-space cosine, mapped affinely onto `[0, 5]`.
///
/// Even draws pair a sentence with its perturbed successor, odd draws pick two
/// distinct sentences uniformly.
pub fn synthetic_pairs<T: Scalar>(
    synth: &SyntheticCorpus<T>,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<StsPair<T>>> {
    let n = synth.sentence_words.len();
    if n < 2 {
        return Err(Error::Empty(
            "synthetic pairs need at least two sentences".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_pairs)
        .map(|p| {
            let (a, b) = if p % 2 == 0 && n >= 2 {
                let k = 2 * rng.random_range(0..n / 2);
                (k, k + 1)
            } else {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                (a, b)
            };
            let cos = synth.latent_cosine(a, b);
            let gold = ((cos + T::one()) * T::of(2.5))
                .max(T::zero())
                .min(T::of(5.0));
            StsPair::new(a as u64, b as u64, gold, "synthetic")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_equal_seeds() {
        let spec = SyntheticSpec::new(vec![4, 6], 10, 3);
        let a = generate_synthetic::<f64>(&spec).unwrap();
        let b = generate_synthetic::<f64>(&spec).unwrap();
        assert_eq!(a.corpus, b.corpus);
        let c = generate_synthetic::<f64>(&SyntheticSpec { seed: 4, ..spec }).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn dimension_contract() {
        let spec = SyntheticSpec::new(vec![4, 6], 7, 1);
        let s = generate_synthetic::<f64>(&spec).unwrap();
        assert_eq!(s.corpus.len(), 7);
        for sent in s.corpus.sentences() {
            let v0 = sent.vectors[0].as_ref().unwrap();
            let v1 = sent.vectors[1].as_ref().unwrap();
            assert!(v0.iter().all(|v| v.len() == 4));
            assert!(v1.iter().all(|v| v.len() == 6));
        }
    }

    #[test]
    fn noiseless_occurrences_have_latent_rank() {
        let spec = SyntheticSpec {
            noise: 0.0,
            latent_dim: Some(3),
            ..SyntheticSpec::new(vec![4, 6], 30, 9)
        };
        let s = generate_synthetic::<f64>(&spec).unwrap();
        let mut stacked = Vec::new();
        for sent in s.corpus.sentences() {
            let v0 = sent.vectors[0].as_ref().unwrap();
            let v1 = sent.vectors[1].as_ref().unwrap();
            for (a, b) in v0.iter().zip(v1) {
                stacked.push([a.as_slice(), b.as_slice()].concat());
            }
        }
        let m = DenseMatrix::from_rows(&stacked).unwrap();
        let sv = svd(&m).unwrap().singular_values;
        let rank = sv.iter().filter(|&&x| x > 1e-10 * sv[0]).count();
        assert_eq!(rank, 3);
    }

    #[test]
    fn rejects_degenerate_specs() {
        let mut spec = SyntheticSpec::new(vec![4], 5, 0);
        spec.max_words = 1;
        assert!(generate_synthetic::<f64>(&spec).is_err());
        assert!(generate_synthetic::<f64>(&SyntheticSpec::new(vec![], 5, 0)).is_err());
        assert!(generate_synthetic::<f64>(&SyntheticSpec::new(vec![4], 0, 0)).is_err());
    }

    #[test]
    fn pairs_are_in_range() {
        let s = generate_synthetic::<f64>(&SyntheticSpec::new(vec![4, 4], 20, 2)).unwrap();
        let pairs = synthetic_pairs(&s, 30, 5).unwrap();
        assert_eq!(pairs.len(), 30);
        assert!(pairs
            .iter()
            .all(|p| (0.0..=5.0).contains(&p.gold_score) && p.sentence_a != p.sentence_b));
    }
}
