//! Unsupervised sentence-level meta-embeddings from multiple contextualised
//! word-embedding sources, with the usual comparison baselines and an STS
//! evaluation harness.
//!
//! Every numerical type is generic over a [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the double-precision instantiation used by the
//! command-line tool.

pub mod error;
pub mod gradcheck;
pub mod scalar;

pub mod baselines;
pub mod embedding_io;
pub mod eval;
pub mod meta_model;
pub mod numerics;
pub mod objective;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use baselines::{Basis, GccaBasis, SvdBasis};
pub use embedding_io::{
    generate_synthetic, load_sts_tsv, read_corpus, write_corpus, Corpus, SourceManifest,
    SourceSpec, StsPair, SyntheticSpec, TokenEmbeddingRecord,
};
pub use eval::{evaluate, EvalReport, SubsetReport};
pub use meta_model::{pool_sentence, LossCoeffs, MetaModel, Method, Pooling, SentenceEmbedding};
pub use numerics::DenseMatrix;
pub use objective::{CoeffMode, CriterionKind, CriterionTuple, LossBreakdown, ModelGradients};
pub use trainer::{init_model, train_sup, train_unsup, TrainConfig, TrainLog};

pub type Corpus64 = Corpus<f64>;
pub type MetaModel64 = MetaModel<f64>;
pub type DenseMatrix64 = DenseMatrix<f64>;
pub type StsPair64 = StsPair<f64>;
pub type EvalReport64 = EvalReport<f64>;
pub type TrainConfig64 = TrainConfig<f64>;
pub type Corpus32 = Corpus<f32>;
pub type MetaModel32 = MetaModel<f32>;
