use rand::seq::SliceRandom;

use crate::embedding_io::{Corpus, Sentence, StsPair};
use crate::error::{Error, Result};
use crate::eval::cosine;
use crate::meta_model::{pool_sentence, MetaModel, Method, Pooling};
use crate::objective::ModelGradients;
use crate::scalar::{dot, Scalar};

use super::{
    init_model, run_epochs, sampling_rng, sgd_step, DevSet, EpochStats, TrainConfig, TrainLog,
};

/// Maps a gold rating in `[0, 5]` affinely onto `[−1, 1]`.
pub fn rescale_gold<T: Scalar>(gold: T) -> T {
    T::of(2.0) * gold / T::of(5.0) - T::one()
}

/// `(cos(u, v) − g)²` with `g` the gold rating rescaled onto `[−1, 1]`.
pub fn sup_loss<T: Scalar>(u: &[T], v: &[T], gold: T) -> Result<T> {
    let d = cosine(u, v)? - rescale_gold(gold);
    Ok(d * d)
}

/// Forward pass of one sentence, keeping what the backward pass needs.
struct Trace<'a, T> {
    /// `inputs[i][w]`: source `i`'s vector for word `w`.
    inputs: Vec<&'a [Vec<T>]>,
    /// `projected[i][w] = A_i·x_{i,w}`.
    projected: Vec<Vec<Vec<T>>>,
    metas: Vec<Vec<T>>,
    pooled: Vec<T>,
}

fn forward<'a, T: Scalar>(
    model: &MetaModel<T>,
    sentence: &'a Sentence<T>,
    positions: &[usize],
    corpus: &'a Corpus<T>,
    pooling: Pooling,
) -> Result<Trace<'a, T>> {
    let inputs = positions
        .iter()
        .map(|&k| sentence.source(k, corpus.manifest()))
        .collect::<Result<Vec<_>>>()?;
    let projected = inputs
        .iter()
        .zip(model.projections())
        .map(|(words, a)| {
            words
                .iter()
                .map(|x| a.mul_vec(x))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let scales = model.source_scales();
    let inv_n = T::one() / T::of(model.n_sources() as f64);
    let metas: Vec<Vec<T>> = (0..sentence.len())
        .map(|w| {
            let mut m = vec![T::zero(); model.d_m()];
            for (i, proj) in projected.iter().enumerate() {
                let c = scales[i] * inv_n;
                m.iter_mut()
                    .zip(&proj[w])
                    .for_each(|(o, &v)| *o = *o + c * v);
            }
            m
        })
        .collect();
    let pooled = pool_sentence(&metas, pooling)?;
    Ok(Trace {
        inputs,
        projected,
        metas,
        pooled,
    })
}

/// Accumulates `d loss / d pooled` back into the projection gradients and
/// into `d_scale`, the gradient with respect to each source multiplier.
fn backward<T: Scalar>(
    model: &MetaModel<T>,
    trace: &Trace<'_, T>,
    d_pooled: &[T],
    pooling: Pooling,
    grads: &mut ModelGradients<T>,
    d_scale: &mut [T],
) {
    let n_words = trace.metas.len();
    let mut d_metas = vec![vec![T::zero(); d_pooled.len()]; n_words];
    match pooling {
        Pooling::Mean => {
            let inv = T::one() / T::of(n_words as f64);
            for d in &mut d_metas {
                d.iter_mut().zip(d_pooled).for_each(|(o, &g)| *o = g * inv);
            }
        }
        Pooling::Max => {
            for (c, &g) in d_pooled.iter().enumerate() {
                let w = (0..n_words)
                    .find(|&w| trace.metas[w][c] == trace.pooled[c])
                    .expect("max is attained");
                d_metas[w][c] = g;
            }
        }
    }
    let scales = model.source_scales();
    let inv_n = T::one() / T::of(model.n_sources() as f64);
    for (i, g) in grads.projections.iter_mut().enumerate() {
        let c = scales[i] * inv_n;
        for (w, dm) in d_metas.iter().enumerate() {
            let x = &trace.inputs[i][w];
            for (row, &r) in dm.iter().enumerate() {
                let f = c * r;
                for (o, &xj) in g.row_mut(row).iter_mut().zip(x) {
                    *o = *o + f * xj;
                }
            }
            d_scale[i] = d_scale[i] + inv_n * dot(dm, &trace.projected[i][w]);
        }
    }
}

/// Mean [`sup_loss`] over `pairs` and its gradient with respect to the
/// projections and (for a weighted model) the weight scores.
pub fn sup_gradients<T: Scalar>(
    model: &MetaModel<T>,
    corpus: &Corpus<T>,
    pairs: &[StsPair<T>],
    pooling: Pooling,
) -> Result<(T, ModelGradients<T>)> {
    if pairs.is_empty() {
        return Err(Error::Empty("no training pairs".into()));
    }
    let positions = model.source_positions(corpus.manifest())?;
    let mut grads = ModelGradients::zeros_like(model);
    let mut d_scale = vec![T::zero(); model.n_sources()];
    let inv_pairs = T::one() / T::of(pairs.len() as f64);
    let mut total = T::zero();
    for p in pairs {
        let a = forward(
            model,
            corpus.sentence(p.sentence_a)?,
            &positions,
            corpus,
            pooling,
        )?;
        let b = forward(
            model,
            corpus.sentence(p.sentence_b)?,
            &positions,
            corpus,
            pooling,
        )?;
        let cos = cosine(&a.pooled, &b.pooled)?;
        let diff = cos - rescale_gold(p.gold_score);
        total = total + diff * diff;

        let (na, nb) = (
            dot(&a.pooled, &a.pooled).sqrt(),
            dot(&b.pooled, &b.pooled).sqrt(),
        );
        let outer = T::of(2.0) * diff * inv_pairs;
        let da: Vec<T> = a
            .pooled
            .iter()
            .zip(&b.pooled)
            .map(|(&u, &v)| outer * (v / (na * nb) - cos * u / (na * na)))
            .collect();
        let db: Vec<T> = b
            .pooled
            .iter()
            .zip(&a.pooled)
            .map(|(&v, &u)| outer * (u / (na * nb) - cos * v / (nb * nb)))
            .collect();
        backward(model, &a, &da, pooling, &mut grads, &mut d_scale);
        backward(model, &b, &db, pooling, &mut grads, &mut d_scale);
    }
    if model.is_weighted() {
        let alphas = model.weights();
        let mean_d: T = alphas.iter().zip(&d_scale).map(|(&a, &d)| a * d).sum();
        for (l, gs) in grads.weight_scores.iter_mut().enumerate() {
            *gs = alphas[l] * (d_scale[l] - mean_d);
        }
    }
    Ok((total * inv_pairs, grads))
}

/// Trains projections and source weights to regress pair cosines onto
/// rescaled gold ratings. Each epoch visits the training pairs once in a
/// seeded shuffled order, in batches of `batch_size`.
pub fn train_sup<T: Scalar>(
    corpus: &Corpus<T>,
    train_pairs: &[StsPair<T>],
    dev_corpus: &Corpus<T>,
    dev_pairs: &[StsPair<T>],
    d_m: Option<usize>,
    config: &TrainConfig<T>,
) -> Result<(MetaModel<T>, TrainLog<T>)> {
    config.validate()?;
    corpus.require_complete()?;
    if train_pairs.is_empty() {
        return Err(Error::Empty("no training pairs".into()));
    }
    for p in train_pairs {
        p.validate()?;
        corpus.sentence(p.sentence_a)?;
        corpus.sentence(p.sentence_b)?;
    }
    let dev = DevSet {
        corpus: dev_corpus,
        pairs: dev_pairs,
    };
    dev.validate()?;

    let model = init_model(corpus.manifest(), d_m, config)?;
    let mut rng = sampling_rng(config.seed);
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    run_epochs(model, config, &dev, Method::Sup, |model, update| {
        order.shuffle(&mut rng);
        let mut sum = T::zero();
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<StsPair<T>> = chunk.iter().map(|&k| train_pairs[k].clone()).collect();
            let (loss, grads) = sup_gradients(model, corpus, &batch, config.pooling)?;
            if update {
                sgd_step(model, &grads, config.learning_rate, config.weight_decay);
            }
            sum = sum + loss;
            batches += 1;
        }
        Ok(EpochStats {
            train_loss: sum / T::of(batches as f64),
            breakdown: None,
        })
    })
}
