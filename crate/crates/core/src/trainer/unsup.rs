use crate::embedding_io::{Corpus, StsPair};
use crate::error::Result;
use crate::meta_model::{MetaModel, Method};
use crate::objective::{batch_gradients, batch_loss, sample_batch, LossBreakdown};
use crate::scalar::Scalar;

use super::{
    init_model, run_epochs, sampling_rng, sgd_step, DevSet, EpochStats, TrainConfig, TrainLog,
};

/// Trains projections and source weights on the unsupervised objective.
///
/// Each epoch draws `⌈N / batch_size⌉` batches; dev Pearson is measured after
/// every epoch and the best checkpoint is returned.
pub fn train_unsup<T: Scalar>(
    corpus: &Corpus<T>,
    dev_corpus: &Corpus<T>,
    dev_pairs: &[StsPair<T>],
    d_m: Option<usize>,
    config: &TrainConfig<T>,
) -> Result<(MetaModel<T>, TrainLog<T>)> {
    let model = init_model(corpus.manifest(), d_m, config)?;
    train_unsup_from(model, corpus, dev_corpus, dev_pairs, config)
}

/// As [`train_unsup`], starting from a given model.
pub fn train_unsup_from<T: Scalar>(
    model: MetaModel<T>,
    corpus: &Corpus<T>,
    dev_corpus: &Corpus<T>,
    dev_pairs: &[StsPair<T>],
    config: &TrainConfig<T>,
) -> Result<(MetaModel<T>, TrainLog<T>)> {
    config.validate()?;
    corpus.require_complete()?;
    model.source_positions(corpus.manifest())?;
    let dev = DevSet {
        corpus: dev_corpus,
        pairs: dev_pairs,
    };
    dev.validate()?;

    let n_batches = corpus.len().div_ceil(config.batch_size);
    let n_sources = model.n_sources();
    let mut rng = sampling_rng(config.seed);
    run_epochs(model, config, &dev, Method::Unsup, |model, update| {
        let mut parts = Vec::with_capacity(n_batches);
        for _ in 0..n_batches {
            let tuples = sample_batch(corpus, n_sources, config.batch_size, &mut rng)?;
            if update {
                let (loss, grads) = batch_gradients(model, corpus, &tuples, config.coeff_mode)?;
                sgd_step(model, &grads, config.learning_rate, config.weight_decay);
                parts.push(loss);
            } else {
                parts.push(batch_loss(model, corpus, &tuples, config.coeff_mode)?);
            }
        }
        let breakdown = mean_breakdown(&parts);
        Ok(EpochStats {
            train_loss: breakdown.total,
            breakdown: Some(breakdown),
        })
    })
}

/// Field-wise mean of batch breakdowns; counts are summed and the last
/// batch's coefficients are kept.
fn mean_breakdown<T: Scalar>(parts: &[LossBreakdown<T>]) -> LossBreakdown<T> {
    let n = T::of(parts.len() as f64);
    let mean = |f: fn(&LossBreakdown<T>) -> T| parts.iter().map(f).sum::<T>() / n;
    let mut counts = [0usize; 4];
    for p in parts {
        for (c, &k) in counts.iter_mut().zip(&p.counts) {
            *c += k;
        }
    }
    LossBreakdown {
        c1: mean(|b| b.c1),
        c2: mean(|b| b.c2),
        c3: mean(|b| b.c3),
        c4: mean(|b| b.c4),
        reg: mean(|b| b.reg),
        total: mean(|b| b.total),
        counts,
        coeffs: parts.last().expect("at least one batch").coeffs,
    }
}
