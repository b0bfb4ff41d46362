//! Stochastic gradient descent for the unsupervised objective and the
//! supervised cosine-regression baseline, with dev-set early stopping.

mod sup;
mod unsup;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding_io::{Corpus, SourceManifest, StsPair};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::meta_model::{LossCoeffs, MetaModel, Method, Pooling};
use crate::numerics::DenseMatrix;
use crate::objective::{CoeffMode, LossBreakdown, ModelGradients};
use crate::scalar::Scalar;

pub use sup::{sup_gradients, sup_loss, train_sup};
pub use unsup::{train_unsup, train_unsup_from};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainConfig<T> {
    pub learning_rate: T,
    pub weight_decay: T,
    pub batch_size: usize,
    /// Training stops once more than this many consecutive epochs fail to
    /// improve the best dev Pearson.
    pub patience: usize,
    /// Initial parameters are uniform in `[−init_range, init_range]`.
    pub init_range: T,
    pub seed: u64,
    pub max_epochs: usize,
    pub coeff_mode: CoeffMode,
    pub pooling: Pooling,
    /// Initial loss coefficients (logits in learnable mode).
    pub coeffs: LossCoeffs<T>,
    pub weighted: bool,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        TrainConfig {
            learning_rate: T::of(1e-2),
            weight_decay: T::of(1e-4),
            batch_size: 512,
            patience: 5,
            init_range: T::one(),
            seed: 0,
            max_epochs: 200,
            coeff_mode: CoeffMode::Fixed,
            pooling: Pooling::Max,
            coeffs: LossCoeffs::default(),
            weighted: true,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig {
            seed,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.learning_rate < T::zero() || !self.learning_rate.is_finite() {
            return bad("learning rate must be a finite non-negative number");
        }
        if self.weight_decay < T::zero() || !self.weight_decay.is_finite() {
            return bad("weight decay must be a finite non-negative number");
        }
        if self.init_range <= T::zero() || !self.init_range.is_finite() {
            return bad("init range must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if !self.coeffs.as_array().iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("loss coefficients".into()));
        }
        Ok(())
    }
}

/// One line of a training log. Epoch 0 describes the initial model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EpochRecord<T> {
    pub epoch: usize,
    /// Mean batch objective over the epoch.
    pub train_loss: T,
    /// Mean per-kind terms, for the unsupervised objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<LossBreakdown<T>>,
    pub dev_pearson: T,
    pub dev_spearman: T,
    /// Seconds since training started.
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainLog<T> {
    pub records: Vec<EpochRecord<T>>,
    pub best_epoch: usize,
}

#[derive(Serialize)]
struct LogSummary {
    best_epoch: usize,
}

impl<T: Scalar> TrainLog<T> {
    pub fn best(&self) -> &EpochRecord<T> {
        &self.records[self.best_epoch]
    }

    /// Equality ignoring wall-clock times.
    pub fn outcome_eq(&self, other: &TrainLog<T>) -> bool {
        let strip = |log: &TrainLog<T>| {
            log.records
                .iter()
                .map(|r| EpochRecord {
                    wall_secs: 0.0,
                    ..r.clone()
                })
                .collect::<Vec<_>>()
        };
        self.best_epoch == other.best_epoch && strip(self) == strip(other)
    }

    /// One JSON object per epoch, then `{"best_epoch": k}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        let summary = LogSummary {
            best_epoch: self.best_epoch,
        };
        out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }
}

/// Dev sentences and the pairs that score them.
#[derive(Debug, Clone, Copy)]
pub struct DevSet<'a, T> {
    pub corpus: &'a Corpus<T>,
    pub pairs: &'a [StsPair<T>],
}

impl<T: Scalar> DevSet<'_, T> {
    fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Empty("dev set has no pairs".into()));
        }
        for p in self.pairs {
            for sid in [p.sentence_a, p.sentence_b] {
                self.corpus.sentence(sid)?;
            }
        }
        Ok(())
    }

    /// Scores `model` on the dev pairs.
    pub fn evaluate(
        &self,
        model: &MetaModel<T>,
        method: Method,
        pooling: Pooling,
    ) -> Result<EvalReport<T>> {
        let positions = model.source_positions(self.corpus.manifest())?;
        let needed: BTreeSet<u64> = self
            .pairs
            .iter()
            .flat_map(|p| [p.sentence_a, p.sentence_b])
            .collect();
        let mut embeddings = HashMap::with_capacity(needed.len());
        for sid in needed {
            let sentence = self.corpus.sentence(sid)?;
            let e = model.embed_with_positions(
                sentence,
                &positions,
                self.corpus.manifest(),
                pooling,
            )?;
            embeddings.insert(sid, e.vector);
        }
        evaluate(&embeddings, self.pairs, method, pooling)
    }
}

/// Random model with every projection entry and weight score uniform in
/// `[−init_range, init_range]`. `d_m` defaults to the largest source dimension.
pub fn init_model<T: Scalar>(
    manifest: &SourceManifest,
    d_m: Option<usize>,
    config: &TrainConfig<T>,
) -> Result<MetaModel<T>> {
    manifest.validate()?;
    let d_m = d_m.unwrap_or_else(|| manifest.max_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let r = config.init_range.to_f64_lossy();
    let mut draw = || T::of(rng.random_range(-r..=r));
    let projections = manifest
        .sources
        .iter()
        .map(|s| {
            let data = (0..d_m * s.dim).map(|_| draw()).collect();
            DenseMatrix::from_vec(d_m, s.dim, data)
        })
        .collect::<Result<Vec<_>>>()?;
    let weight_scores = (0..manifest.n_sources()).map(|_| draw()).collect();
    MetaModel::new(
        d_m,
        manifest.sources.clone(),
        projections,
        weight_scores,
        config.coeffs,
        config.weighted,
    )
}

/// `θ ← θ·(1 − lr·wd) − lr·g` on projections and weight scores; coefficient
/// logits, when their gradient is present, take a plain step without decay.
pub fn sgd_step<T: Scalar>(
    model: &mut MetaModel<T>,
    grads: &ModelGradients<T>,
    learning_rate: T,
    weight_decay: T,
) {
    let keep = T::one() - learning_rate * weight_decay;
    for (a, g) in model.projections_mut().iter_mut().zip(&grads.projections) {
        for (p, &d) in a.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *p = *p * keep - learning_rate * d;
        }
    }
    for (p, &d) in model
        .weight_scores_mut()
        .iter_mut()
        .zip(&grads.weight_scores)
    {
        *p = *p * keep - learning_rate * d;
    }
    if let Some(g) = &grads.coeffs {
        let raw = model.loss_coeffs().as_array();
        let step = g.as_array();
        let next = std::array::from_fn(|k| raw[k] - learning_rate * step[k]);
        model.set_loss_coeffs(LossCoeffs::from_array(next));
    }
}

/// Seeds the stream used for batch sampling and shuffling, independent of
/// the one used for initialization.
fn sampling_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

struct EpochStats<T> {
    train_loss: T,
    breakdown: Option<LossBreakdown<T>>,
}

/// Shared epoch loop: epoch 0 scores the initial model without updating it,
/// then up to `max_epochs` updating epochs follow. Returns the checkpoint
/// with the highest dev Pearson (earliest on ties).
fn run_epochs<T: Scalar>(
    mut model: MetaModel<T>,
    config: &TrainConfig<T>,
    dev: &DevSet<'_, T>,
    method: Method,
    mut epoch: impl FnMut(&mut MetaModel<T>, bool) -> Result<EpochStats<T>>,
) -> Result<(MetaModel<T>, TrainLog<T>)> {
    let start = Instant::now();
    let mut records = Vec::new();
    let mut best = (0usize, T::neg_infinity(), model.clone());
    for e in 0..=config.max_epochs {
        let stats = epoch(&mut model, e > 0)?;
        if !stats.train_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {e}")));
        }
        model
            .validate()
            .map_err(|err| Error::NonFinite(format!("model parameters at epoch {e}: {err}")))?;
        // Degenerate dev scores after an update mean the parameters blew up,
        // not that the dev data is bad; epoch 0 already vetted the data.
        let report = dev
            .evaluate(&model, method, config.pooling)
            .map_err(|err| match err {
                Error::ZeroVariance(_) | Error::ZeroNorm if e > 0 => Error::NonFinite(format!(
                    "training diverged by epoch {e} (dev predictions collapsed: {err}); \
                 lower the learning rate or init range"
                )),
                other => other,
            })?;
        records.push(EpochRecord {
            epoch: e,
            train_loss: stats.train_loss,
            breakdown: stats.breakdown,
            dev_pearson: report.pearson,
            dev_spearman: report.spearman,
            wall_secs: start.elapsed().as_secs_f64(),
        });
        if report.pearson > best.1 {
            best = (e, report.pearson, model.clone());
        } else if e - best.0 > config.patience {
            break;
        }
    }
    Ok((
        best.2,
        TrainLog {
            records,
            best_epoch: best.0,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding_io::SourceSpec;

    fn manifest() -> SourceManifest {
        SourceManifest::new(
            vec![
                SourceSpec {
                    id: "a".into(),
                    dim: 3,
                },
                SourceSpec {
                    id: "b".into(),
                    dim: 5,
                },
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn init_is_seeded_and_in_range() {
        let cfg = TrainConfig::<f64>::with_seed(3);
        let m = init_model(&manifest(), Some(4), &cfg).unwrap();
        assert_eq!(m, init_model(&manifest(), Some(4), &cfg).unwrap());
        assert_ne!(
            m,
            init_model(&manifest(), Some(4), &TrainConfig::with_seed(4)).unwrap()
        );
        assert_eq!(m.parameter_count(), 4 * 3 + 4 * 5 + 2);
        let all: Vec<f64> = m
            .projections()
            .iter()
            .flat_map(|a| a.as_slice().to_vec())
            .chain(m.weight_scores().to_vec())
            .collect();
        assert!(all.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(init_model(&manifest(), None, &cfg).unwrap().d_m(), 5);
    }

    #[test]
    fn zero_gradient_step_is_pure_decay() {
        let cfg = TrainConfig::<f64>::with_seed(1);
        let before = init_model(&manifest(), Some(2), &cfg).unwrap();
        let mut after = before.clone();
        let (lr, wd) = (0.05, 0.3);
        sgd_step(&mut after, &ModelGradients::zeros_like(&before), lr, wd);
        let keep = 1.0 - lr * wd;
        for (a, b) in before.projections().iter().zip(after.projections()) {
            for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_eq!(y, x * keep);
            }
        }
        for (&x, &y) in before.weight_scores().iter().zip(after.weight_scores()) {
            assert_eq!(y, x * keep);
        }
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::<f64>::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig {
            batch_size: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            patience: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: -1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..ok
        }
        .validate()
        .is_ok());
    }
}
