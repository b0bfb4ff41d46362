//! The unsupervised training objective.
//!
//! Four cross-source criteria compare projected (and weighted) word vectors
//! `φ_i(w, s) = α_i·A_i·f_i(w, s)` by squared Euclidean distance:
//!
//! | kind | left        | right        | role    |
//! |------|-------------|--------------|---------|
//! | c1   | word w in s | word w in s  | attract |
//! | c2   | word w in s | word w′ in s | repel   |
//! | c3   | word w in s | word w in s′ | repel   |
//! | c4   | word w in s | word w′ in s′| repel   |
//!
//! The batch objective is `c1 − λ·c2 − μ·c3 − ν·c4 + ξ·Σ_i ‖A_iᵀA_i − I‖²_F`
//! with each criterion averaged over the tuples of its kind.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding_io::Corpus;
use crate::error::{Error, Result};
use crate::meta_model::{LossCoeffs, MetaModel};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    C1,
    C2,
    C3,
    C4,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 4] = [
        CriterionKind::C1,
        CriterionKind::C2,
        CriterionKind::C3,
        CriterionKind::C4,
    ];

    fn index(self) -> usize {
        match self {
            CriterionKind::C1 => 0,
            CriterionKind::C2 => 1,
            CriterionKind::C3 => 2,
            CriterionKind::C4 => 3,
        }
    }
}

/// A word position: sentence id and 0-based word index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WordRef {
    pub sentence: u64,
    pub word: usize,
}

/// One comparison between two projected word vectors from distinct sources.
///
/// `sources.0` is the model source index applied to `left`, `sources.1` to `right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionTuple {
    pub kind: CriterionKind,
    pub sources: (usize, usize),
    pub left: WordRef,
    pub right: WordRef,
}

/// How the loss coefficients stored in the model are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffMode {
    /// Stored values are the coefficients.
    #[default]
    Fixed,
    /// Stored values are trainable logits; the coefficients are their sigmoids.
    Learnable,
}

impl fmt::Display for CoeffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoeffMode::Fixed => "fixed",
            CoeffMode::Learnable => "learnable",
        })
    }
}

impl FromStr for CoeffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(CoeffMode::Fixed),
            "learnable" => Ok(CoeffMode::Learnable),
            other => Err(Error::Config(format!("unknown coefficient mode `{other}`"))),
        }
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Coefficients in effect for `mode`.
pub fn effective_coeffs<T: Scalar>(stored: &LossCoeffs<T>, mode: CoeffMode) -> LossCoeffs<T> {
    match mode {
        CoeffMode::Fixed => *stored,
        CoeffMode::Learnable => LossCoeffs::from_array(stored.as_array().map(sigmoid)),
    }
}

/// Per-kind mean criterion losses, the regularizer and the combined objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LossBreakdown<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub c4: T,
    pub reg: T,
    pub total: T,
    /// Tuple counts for c1..c4.
    pub counts: [usize; 4],
    /// Coefficients used to form `total`.
    pub coeffs: LossCoeffs<T>,
}

impl<T: Scalar> LossBreakdown<T> {
    /// `c1 − λ·c2 − μ·c3 − ν·c4 + ξ·reg` from the stored parts.
    pub fn recompute_total(&self) -> T {
        let k = &self.coeffs;
        self.c1 - k.lambda * self.c2 - k.mu * self.c3 - k.nu * self.c4 + k.xi * self.reg
    }
}

/// Gradient of a scalar objective with respect to every model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradients<T> {
    pub projections: Vec<DenseMatrix<T>>,
    pub weight_scores: Vec<T>,
    /// Present only when the coefficients are trainable.
    pub coeffs: Option<LossCoeffs<T>>,
}

impl<T: Scalar> ModelGradients<T> {
    pub fn zeros_like(model: &MetaModel<T>) -> Self {
        ModelGradients {
            projections: model
                .projections()
                .iter()
                .map(|a| DenseMatrix::zeros(a.rows(), a.cols()))
                .collect(),
            weight_scores: vec![T::zero(); model.n_sources()],
            coeffs: None,
        }
    }

    /// All entries in a fixed order: projections, weight scores, coefficients.
    pub fn flatten(&self) -> Vec<T> {
        let mut out: Vec<T> = self
            .projections
            .iter()
            .flat_map(|a| a.as_slice().iter().copied())
            .collect();
        out.extend_from_slice(&self.weight_scores);
        if let Some(c) = &self.coeffs {
            out.extend_from_slice(&c.as_array());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|x| x.is_finite())
    }
}

/// Resolved access to source vectors by model source index.
struct Lookup<'a, T> {
    corpus: &'a Corpus<T>,
    positions: Vec<usize>,
}

impl<'a, T: Scalar> Lookup<'a, T> {
    fn new(model: &MetaModel<T>, corpus: &'a Corpus<T>) -> Result<Self> {
        Ok(Lookup {
            positions: model.source_positions(corpus.manifest())?,
            corpus,
        })
    }

    fn vector(&self, source: usize, at: WordRef) -> Result<&'a [T]> {
        let &k = self
            .positions
            .get(source)
            .ok_or_else(|| Error::UnknownSource(format!("#{source}")))?;
        let sentence = self.corpus.sentence(at.sentence)?;
        let vectors = sentence.source(k, self.corpus.manifest())?;
        vectors
            .get(at.word)
            .map(Vec::as_slice)
            .ok_or(Error::WordIndex {
                sid: at.sentence,
                index: at.word,
                len: vectors.len(),
            })
    }
}

struct Projected<T> {
    /// `A_i·x` and `A_j·y` before scaling.
    u: Vec<T>,
    v: Vec<T>,
    residual: Vec<T>,
    loss: T,
}

fn project_pair<T: Scalar>(
    model: &MetaModel<T>,
    scales: &[T],
    tuple: &CriterionTuple,
    x: &[T],
    y: &[T],
) -> Result<Projected<T>> {
    let (i, j) = tuple.sources;
    let u = model.projections()[i].mul_vec(x)?;
    let v = model.projections()[j].mul_vec(y)?;
    let residual: Vec<T> = u
        .iter()
        .zip(&v)
        .map(|(&a, &b)| scales[i] * a - scales[j] * b)
        .collect();
    let loss = residual.iter().map(|&r| r * r).sum();
    Ok(Projected {
        u,
        v,
        residual,
        loss,
    })
}

fn check_sources<T: Scalar>(model: &MetaModel<T>, tuple: &CriterionTuple) -> Result<()> {
    let n = model.n_sources();
    let (i, j) = tuple.sources;
    if i >= n || j >= n {
        return Err(Error::UnknownSource(format!("#{} of {n}", i.max(j))));
    }
    Ok(())
}

/// Squared distance between the two weighted projections named by `tuple`.
pub fn criterion_loss<T: Scalar>(
    model: &MetaModel<T>,
    tuple: &CriterionTuple,
    corpus: &Corpus<T>,
) -> Result<T> {
    check_sources(model, tuple)?;
    let lookup = Lookup::new(model, corpus)?;
    let x = lookup.vector(tuple.sources.0, tuple.left)?;
    let y = lookup.vector(tuple.sources.1, tuple.right)?;
    Ok(project_pair(model, &model.source_scales(), tuple, x, y)?.loss)
}

/// `Σ_i ‖A_iᵀA_i − I‖²_F`.
pub fn orthogonality_penalty<T: Scalar>(model: &MetaModel<T>) -> T {
    model
        .projections()
        .iter()
        .map(|a| {
            let mut g = a.gram();
            for k in 0..g.rows() {
                g[(k, k)] = g[(k, k)] - T::one();
            }
            g.as_slice().iter().map(|&x| x * x).sum::<T>()
        })
        .sum()
}

/// Gradient of [`orthogonality_penalty`] with respect to each projection:
/// `4·A_i·(A_iᵀA_i − I)`.
pub fn orthogonality_gradient<T: Scalar>(model: &MetaModel<T>) -> Vec<DenseMatrix<T>> {
    model
        .projections()
        .iter()
        .map(|a| {
            let mut defect = a.gram();
            for k in 0..defect.rows() {
                defect[(k, k)] = defect[(k, k)] - T::one();
            }
            a.matmul(&defect)
                .expect("gram shape matches")
                .scaled(T::of(4.0))
        })
        .collect()
}

/// Draws one training batch.
///
/// Each of `batch_size` draws picks two distinct sentences `s, s′` and an
/// unordered source pair `i < j` uniformly, then emits: a c1 tuple on a
/// random word of `s`; a c2 tuple on two distinct positions of `s` when it
/// has at least two words; a c3 tuple on a word shared by `s` and `s′` when
/// one exists; a c4 tuple on a random word of each sentence.
pub fn sample_batch<T: Scalar, R: Rng + ?Sized>(
    corpus: &Corpus<T>,
    n_sources: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<CriterionTuple>> {
    let sentences = corpus.sentences();
    if sentences.len() < 2 {
        return Err(Error::Empty("sampling needs at least two sentences".into()));
    }
    if n_sources < 2 {
        return Err(Error::Config(
            "cross-source criteria need at least two sources".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..n_sources)
        .flat_map(|i| ((i + 1)..n_sources).map(move |j| (i, j)))
        .collect();

    let mut tuples = Vec::with_capacity(batch_size * 4);
    for _ in 0..batch_size {
        let a = rng.random_range(0..sentences.len());
        let mut b = rng.random_range(0..sentences.len() - 1);
        if b >= a {
            b += 1;
        }
        let (s, t) = (&sentences[a], &sentences[b]);
        let sources = pairs[rng.random_range(0..pairs.len())];
        let at = |sentence: u64, word: usize| WordRef { sentence, word };

        let p = rng.random_range(0..s.len());
        tuples.push(CriterionTuple {
            kind: CriterionKind::C1,
            sources,
            left: at(s.id, p),
            right: at(s.id, p),
        });

        if s.len() >= 2 {
            let p = rng.random_range(0..s.len());
            let mut q = rng.random_range(0..s.len() - 1);
            if q >= p {
                q += 1;
            }
            tuples.push(CriterionTuple {
                kind: CriterionKind::C2,
                sources,
                left: at(s.id, p),
                right: at(s.id, q),
            });
        }

        let shared: Vec<usize> = (0..s.len())
            .filter(|&p| t.words.contains(&s.words[p]))
            .collect();
        if !shared.is_empty() {
            let p = shared[rng.random_range(0..shared.len())];
            let matches: Vec<usize> = (0..t.len()).filter(|&q| t.words[q] == s.words[p]).collect();
            let q = matches[rng.random_range(0..matches.len())];
            tuples.push(CriterionTuple {
                kind: CriterionKind::C3,
                sources,
                left: at(s.id, p),
                right: at(t.id, q),
            });
        }

        let p = rng.random_range(0..s.len());
        let q = rng.random_range(0..t.len());
        tuples.push(CriterionTuple {
            kind: CriterionKind::C4,
            sources,
            left: at(s.id, p),
            right: at(t.id, q),
        });
    }
    Ok(tuples)
}

fn counts(tuples: &[CriterionTuple]) -> [usize; 4] {
    let mut c = [0usize; 4];
    for t in tuples {
        c[t.kind.index()] += 1;
    }
    c
}

/// Combined objective over a batch of tuples.
pub fn batch_loss<T: Scalar>(
    model: &MetaModel<T>,
    corpus: &Corpus<T>,
    tuples: &[CriterionTuple],
    mode: CoeffMode,
) -> Result<LossBreakdown<T>> {
    evaluate(model, corpus, tuples, mode, false).map(|(l, _)| l)
}

/// Combined objective and its analytic gradient with respect to every
/// projection entry, every weight score and, in learnable mode, every
/// coefficient logit.
pub fn batch_gradients<T: Scalar>(
    model: &MetaModel<T>,
    corpus: &Corpus<T>,
    tuples: &[CriterionTuple],
    mode: CoeffMode,
) -> Result<(LossBreakdown<T>, ModelGradients<T>)> {
    evaluate(model, corpus, tuples, mode, true).map(|(l, g)| (l, g.expect("gradients requested")))
}

fn evaluate<T: Scalar>(
    model: &MetaModel<T>,
    corpus: &Corpus<T>,
    tuples: &[CriterionTuple],
    mode: CoeffMode,
    want_grad: bool,
) -> Result<(LossBreakdown<T>, Option<ModelGradients<T>>)> {
    if tuples.is_empty() {
        return Err(Error::Empty("batch has no tuples".into()));
    }
    let lookup = Lookup::new(model, corpus)?;
    let coeffs = effective_coeffs(model.loss_coeffs(), mode);
    let counts = counts(tuples);
    let signs = [T::one(), -coeffs.lambda, -coeffs.mu, -coeffs.nu];
    // d total / d (single tuple loss) for each kind.
    let tuple_weight: Vec<T> = (0..4)
        .map(|k| {
            if counts[k] == 0 {
                T::zero()
            } else {
                signs[k] / T::of(counts[k] as f64)
            }
        })
        .collect();

    let scales = model.source_scales();
    let alphas = model.weights();
    let mut sums = [T::zero(); 4];
    let mut grad = want_grad.then(|| ModelGradients::zeros_like(model));
    // d total / d α_k, before the softmax chain rule.
    let mut d_alpha = vec![T::zero(); model.n_sources()];
    let two = T::of(2.0);

    for tuple in tuples {
        check_sources(model, tuple)?;
        let (i, j) = tuple.sources;
        let x = lookup.vector(i, tuple.left)?;
        let y = lookup.vector(j, tuple.right)?;
        let p = project_pair(model, &scales, tuple, x, y)?;
        let k = tuple.kind.index();
        sums[k] = sums[k] + p.loss;

        if let Some(g) = grad.as_mut() {
            let w = tuple_weight[k];
            let ci = w * two * scales[i];
            let cj = -w * two * scales[j];
            add_outer(&mut g.projections[i], ci, &p.residual, x);
            add_outer(&mut g.projections[j], cj, &p.residual, y);
            if model.is_weighted() {
                let ru: T = p.residual.iter().zip(&p.u).map(|(&r, &u)| r * u).sum();
                let rv: T = p.residual.iter().zip(&p.v).map(|(&r, &v)| r * v).sum();
                d_alpha[i] = d_alpha[i] + w * two * ru;
                d_alpha[j] = d_alpha[j] - w * two * rv;
            }
        }
    }

    let means: Vec<T> = (0..4)
        .map(|k| {
            if counts[k] == 0 {
                T::zero()
            } else {
                sums[k] / T::of(counts[k] as f64)
            }
        })
        .collect();
    let reg = orthogonality_penalty(model);
    let breakdown = LossBreakdown {
        c1: means[0],
        c2: means[1],
        c3: means[2],
        c4: means[3],
        reg,
        total: T::zero(),
        counts,
        coeffs,
    };
    let breakdown = LossBreakdown {
        total: breakdown.recompute_total(),
        ..breakdown
    };

    if let Some(g) = grad.as_mut() {
        for (ga, reg_grad) in g.projections.iter_mut().zip(orthogonality_gradient(model)) {
            for (o, &r) in ga.as_mut_slice().iter_mut().zip(reg_grad.as_slice()) {
                *o = *o + coeffs.xi * r;
            }
        }
        if model.is_weighted() {
            let mean_d: T = alphas.iter().zip(&d_alpha).map(|(&a, &d)| a * d).sum();
            for (l, gs) in g.weight_scores.iter_mut().enumerate() {
                *gs = alphas[l] * (d_alpha[l] - mean_d);
            }
        }
        if mode == CoeffMode::Learnable {
            let raw = model.loss_coeffs().as_array();
            let slope = raw.map(|r| {
                let s = sigmoid(r);
                s * (T::one() - s)
            });
            g.coeffs = Some(LossCoeffs::new(
                -breakdown.c2 * slope[0],
                -breakdown.c3 * slope[1],
                -breakdown.c4 * slope[2],
                breakdown.reg * slope[3],
            ));
        }
    }
    Ok((breakdown, grad))
}

/// `m += c · r · xᵀ`.
fn add_outer<T: Scalar>(m: &mut DenseMatrix<T>, c: T, r: &[T], x: &[T]) {
    for (row, &ri) in r.iter().enumerate() {
        let f = c * ri;
        for (o, &xj) in m.row_mut(row).iter_mut().zip(x) {
            *o = *o + f * xj;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding_io::{SourceManifest, SourceSpec, TokenEmbeddingRecord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Two sources; each sentence is a list of (word, source-0 vector, source-1 vector).
    type Word<'a> = (&'a str, Vec<f64>, Vec<f64>);

    fn corpus(sentences: &[Vec<Word>]) -> Corpus<f64> {
        let d0 = sentences[0][0].1.len();
        let d1 = sentences[0][0].2.len();
        let manifest = SourceManifest::new(
            vec![
                SourceSpec {
                    id: "s0".into(),
                    dim: d0,
                },
                SourceSpec {
                    id: "s1".into(),
                    dim: d1,
                },
            ],
            sentences.len(),
        )
        .unwrap();
        let mut recs = Vec::new();
        for (sid, s) in sentences.iter().enumerate() {
            let words: Vec<String> = s.iter().map(|w| w.0.to_string()).collect();
            recs.push(TokenEmbeddingRecord {
                sentence_id: sid as u64,
                source_id: "s0".into(),
                words: words.clone(),
                vectors: s.iter().map(|w| w.1.clone()).collect(),
            });
            recs.push(TokenEmbeddingRecord {
                sentence_id: sid as u64,
                source_id: "s1".into(),
                words,
                vectors: s.iter().map(|w| w.2.clone()).collect(),
            });
        }
        Corpus::from_records(manifest, recs).unwrap()
    }

    fn c1(sentence: u64, word: usize) -> CriterionTuple {
        CriterionTuple {
            kind: CriterionKind::C1,
            sources: (0, 1),
            left: WordRef { sentence, word },
            right: WordRef { sentence, word },
        }
    }

    fn identity_model() -> MetaModel<f64> {
        MetaModel::from_projections(vec![DenseMatrix::identity(2), DenseMatrix::identity(2)])
            .unwrap()
    }

    #[test]
    fn criterion_loss_examples() {
        let model = identity_model();
        let same = corpus(&[vec![("a", vec![1.0, 2.0], vec![1.0, 2.0])]]);
        assert_eq!(criterion_loss(&model, &c1(0, 0), &same).unwrap(), 0.0);

        let mut plain = identity_model();
        plain.set_weighted(false);
        let apart = corpus(&[vec![("a", vec![1.0, 0.0], vec![0.0, 1.0])]]);
        assert_eq!(criterion_loss(&plain, &c1(0, 0), &apart).unwrap(), 2.0);

        let halves = corpus(&[vec![("a", vec![2.0, 0.0], vec![0.0, 2.0])]]);
        assert_eq!(criterion_loss(&model, &c1(0, 0), &halves).unwrap(), 2.0);

        assert!(criterion_loss(&model, &c1(0, 3), &halves).is_err());
        assert!(criterion_loss(&model, &c1(8, 0), &halves).is_err());
    }

    #[test]
    fn orthogonality_examples() {
        assert_eq!(orthogonality_penalty(&identity_model()), 0.0);
        let doubled =
            MetaModel::from_projections(vec![DenseMatrix::identity(2).scaled(2.0)]).unwrap();
        assert_eq!(orthogonality_penalty(&doubled), 18.0);
        let zero = MetaModel::from_projections(vec![DenseMatrix::<f64>::zeros(3, 5)]).unwrap();
        assert_eq!(orthogonality_penalty(&zero), 5.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = corpus(&[
            vec![("the", vec![1.0], vec![1.0]), ("cat", vec![2.0], vec![2.0])],
            vec![("the", vec![3.0], vec![3.0]), ("dog", vec![4.0], vec![4.0])],
            vec![("a", vec![5.0], vec![5.0])],
        ]);
        let a = sample_batch(&c, 2, 20, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = sample_batch(&c, 2, 20, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        for t in a.iter().filter(|t| t.kind == CriterionKind::C3) {
            let l = &c.get(t.left.sentence).unwrap().words[t.left.word];
            let r = &c.get(t.right.sentence).unwrap().words[t.right.word];
            assert_eq!(l, r);
            assert_ne!(t.left.sentence, t.right.sentence);
        }
        assert!(a.iter().any(|t| t.kind == CriterionKind::C3));
    }

    #[test]
    fn sampling_skips_impossible_kinds() {
        let c = corpus(&[
            vec![("x", vec![1.0], vec![1.0])],
            vec![("y", vec![2.0], vec![2.0])],
            vec![("z", vec![3.0], vec![3.0])],
        ]);
        let tuples = sample_batch(&c, 2, 50, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(counts(&tuples), [50, 0, 0, 50]);
        let tiny = corpus(&[vec![("x", vec![1.0], vec![1.0])]]);
        assert!(sample_batch(&tiny, 2, 5, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
        assert!(sample_batch(&c, 1, 5, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn batch_loss_examples() {
        let mut model = identity_model();
        let c = corpus(&[
            vec![
                ("a", vec![1.0, 0.0], vec![1.0, 0.0]),
                ("b", vec![1.0, 0.0], vec![1.0, 0.0]),
            ],
            vec![("a", vec![1.0, 0.0], vec![1.0, 0.0])],
        ]);
        let tuples = sample_batch(&c, 2, 10, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let l = batch_loss(&model, &c, &tuples, CoeffMode::Fixed).unwrap();
        assert_eq!([l.c1, l.c2, l.c3, l.c4], [0.0; 4]);
        assert_eq!(l.total, l.coeffs.xi * l.reg);

        // One c1 tuple with loss 2 and one c4 tuple with loss 8.
        model.set_weighted(false);
        model.set_loss_coeffs(LossCoeffs::new(0.0, 0.0, 0.5, 0.0));
        let c = corpus(&[
            vec![("a", vec![1.0, 0.0], vec![0.0, 1.0])],
            vec![("b", vec![2.0, 0.0], vec![0.0, 2.0])],
        ]);
        let c4 = CriterionTuple {
            kind: CriterionKind::C4,
            sources: (0, 1),
            left: WordRef {
                sentence: 1,
                word: 0,
            },
            right: WordRef {
                sentence: 1,
                word: 0,
            },
        };
        let l = batch_loss(&model, &c, &[c1(0, 0), c4], CoeffMode::Fixed).unwrap();
        assert_eq!((l.c1, l.c4), (2.0, 8.0));
        assert_eq!(l.total, -2.0);

        model.set_loss_coeffs(LossCoeffs::new(0.0, 0.0, 0.0, 0.0));
        let l = batch_loss(&model, &c, &[c1(0, 0), c4], CoeffMode::Fixed).unwrap();
        assert_eq!(l.total, l.c1);
        assert!(batch_loss(&model, &c, &[], CoeffMode::Fixed).is_err());
    }

    #[test]
    fn regularizer_gradient_vanishes_at_orthonormal() {
        let mut model = identity_model();
        model.set_loss_coeffs(LossCoeffs::new(0.0, 0.0, 0.0, 1.0));
        let c = corpus(&[
            vec![("a", vec![1.0, 1.0], vec![1.0, 1.0])],
            vec![("b", vec![1.0, 1.0], vec![1.0, 1.0])],
        ]);
        let (_, g) = batch_gradients(&model, &c, &[c1(0, 0)], CoeffMode::Fixed).unwrap();
        assert!(g.flatten().iter().all(|&x| x == 0.0));
    }
}
