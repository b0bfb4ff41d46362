//! Central finite-difference checks of the analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding_io::{generate_synthetic, synthetic_pairs, Corpus, SyntheticSpec};
use crate::error::Result;
use crate::meta_model::{LossCoeffs, MetaModel, Pooling};
use crate::objective::{batch_gradients, batch_loss, sample_batch, CoeffMode, CriterionTuple};
use crate::trainer::{init_model, sup_gradients, TrainConfig};

/// Step used for the central differences.
pub const FD_STEP: f64 = 1e-3;

/// `|a − f| / max(1, |a|, |f|)`: relative for large entries, absolute below one.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub label: String,
    pub entries: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl GradcheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.max_relative_error)
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error() <= tolerance
    }
}

/// Parameter addressing shared by every finite-difference loop: projection
/// entries, then weight scores, then (optionally) coefficient logits.
fn perturbed(model: &MetaModel<f64>, index: usize, delta: f64) -> MetaModel<f64> {
    let mut m = model.clone();
    let mut k = index;
    for a in m.projections_mut() {
        let len = a.as_slice().len();
        if k < len {
            a.as_mut_slice()[k] += delta;
            return m;
        }
        k -= len;
    }
    let n = m.n_sources();
    if k < n {
        m.weight_scores_mut()[k] += delta;
        return m;
    }
    k -= n;
    let mut c = m.loss_coeffs().as_array();
    c[k] += delta;
    m.set_loss_coeffs(LossCoeffs::from_array(c));
    m
}

fn compare(
    model: &MetaModel<f64>,
    analytic: &[f64],
    mut loss: impl FnMut(&MetaModel<f64>) -> Result<f64>,
) -> Result<f64> {
    let mut worst = 0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let up = loss(&perturbed(model, k, FD_STEP))?;
        let down = loss(&perturbed(model, k, -FD_STEP))?;
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(a, numeric));
    }
    Ok(worst)
}

/// Largest per-entry error of [`batch_gradients`] against central differences.
pub fn check_unsup(
    model: &MetaModel<f64>,
    corpus: &Corpus<f64>,
    tuples: &[CriterionTuple],
    mode: CoeffMode,
) -> Result<CheckResult> {
    let (_, grads) = batch_gradients(model, corpus, tuples, mode)?;
    let analytic = grads.flatten();
    let worst = compare(model, &analytic, |m| {
        Ok(batch_loss(m, corpus, tuples, mode)?.total)
    })?;
    Ok(CheckResult {
        label: format!(
            "unsup/{mode}/{}",
            if model.is_weighted() {
                "weighted"
            } else {
                "unweighted"
            }
        ),
        entries: analytic.len(),
        max_relative_error: worst,
    })
}

/// Largest per-entry error of [`sup_gradients`] against central differences.
pub fn check_sup(
    model: &MetaModel<f64>,
    corpus: &Corpus<f64>,
    pairs: &[crate::embedding_io::StsPair<f64>],
    pooling: Pooling,
) -> Result<CheckResult> {
    let (_, grads) = sup_gradients(model, corpus, pairs, pooling)?;
    let analytic = grads.flatten();
    let worst = compare(model, &analytic, |m| {
        Ok(sup_gradients(m, corpus, pairs, pooling)?.0)
    })?;
    Ok(CheckResult {
        label: format!("sup/{pooling}"),
        entries: analytic.len(),
        max_relative_error: worst,
    })
}

/// A small random problem: two sources with dimensions in {3, 5}, a meta
/// dimension in {2, 4}, and five sentences of one to four words.
pub struct Problem {
    pub corpus: Corpus<f64>,
    pub model: MetaModel<f64>,
    pub tuples: Vec<CriterionTuple>,
    pub mode: CoeffMode,
}

pub fn random_problem(seed: u64) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = vec![
        [3, 5][rng.random_range(0..2)],
        [3, 5][rng.random_range(0..2)],
    ];
    let d_m = [2, 4][rng.random_range(0..2)];
    let spec = SyntheticSpec {
        min_words: 1,
        max_words: 4,
        vocab_size: 6,
        noise: 0.3,
        ..SyntheticSpec::new(dims, 5, rng.random())
    };
    let corpus = generate_synthetic::<f64>(&spec)?.corpus;
    let mode = if rng.random_bool(0.5) {
        CoeffMode::Learnable
    } else {
        CoeffMode::Fixed
    };
    let coeffs = LossCoeffs::from_array(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
    let config = TrainConfig {
        seed: rng.random(),
        coeffs,
        weighted: rng.random_bool(0.5),
        ..TrainConfig::default()
    };
    let model = init_model(corpus.manifest(), Some(d_m), &config)?;
    let tuples = sample_batch(&corpus, 2, 6, &mut rng)?;
    Ok(Problem {
        corpus,
        model,
        tuples,
        mode,
    })
}

/// Checks the unsupervised objective on `configs` random problems derived
/// from `seed`, plus the supervised loss under mean pooling on the first.
pub fn run_gradcheck(seed: u64, configs: usize) -> Result<GradcheckReport> {
    let mut checks = Vec::with_capacity(configs + 1);
    for k in 0..configs {
        let p = random_problem(seed.wrapping_mul(1_000_003).wrapping_add(k as u64))?;
        checks.push(check_unsup(&p.model, &p.corpus, &p.tuples, p.mode)?);
    }
    let spec = SyntheticSpec {
        min_words: 1,
        max_words: 4,
        ..SyntheticSpec::new(vec![3, 5], 6, seed)
    };
    let synth = generate_synthetic::<f64>(&spec)?;
    let pairs = synthetic_pairs(&synth, 4, seed)?;
    let model = init_model(
        synth.corpus.manifest(),
        Some(4),
        &TrainConfig::with_seed(seed),
    )?;
    checks.push(check_sup(&model, &synth.corpus, &pairs, Pooling::Mean)?);
    Ok(GradcheckReport { seed, checks })
}
