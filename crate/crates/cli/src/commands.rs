use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use metaemb::baselines::{
    avg_embed, conc_embed, fit_gcca, fit_svd, gcca_embed, source_sentence_vectors, sse_embed,
    svd_embed,
};
use metaemb::embedding_io::{
    generate_synthetic, load_sts_tsv, read_corpus, read_pairs, resolve_sts_rows, synthetic_pairs,
    write_pairs, StsColumns, SyntheticSpec,
};
use metaemb::eval::{read_embeddings, render_report, render_table, write_embeddings};
use metaemb::gradcheck::run_gradcheck;
use metaemb::trainer::{train_sup as fit_sup, train_unsup as fit_unsup};
use metaemb::{
    Basis, Corpus64, EvalReport64, LossCoeffs, MetaModel64, Method, Pooling, StsPair64,
    TrainConfig64,
};

use crate::{
    EmbedArgs, EvalArgs, FitArgs, FitMethod, GradcheckArgs, ReportArgs, StsColumnArgs, SynthArgs,
    TrainArgs, TrainSupArgs, TrainUnsupArgs,
};

const PAIRS_FILE: &str = "pairs.jsonl";

fn load_corpus(dir: &Path) -> Result<Corpus64> {
    read_corpus(dir).with_context(|| format!("reading corpus {}", dir.display()))
}

fn columns(c: &StsColumnArgs) -> StsColumns {
    StsColumns {
        score: c.score_col,
        sentence_a: c.sent_a_col,
        sentence_b: c.sent_b_col,
    }
}

/// Reads `.tsv` files as STS data resolved against `corpus`, anything else as
/// pair JSON lines.
fn load_pairs(
    path: &Path,
    corpus: Option<&Corpus64>,
    cols: &StsColumnArgs,
) -> Result<Vec<StsPair64>> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("tsv"))
    {
        let corpus = corpus.context("STS .tsv pairs need a corpus to resolve sentences")?;
        let rows = load_sts_tsv(path, columns(cols))?;
        Ok(resolve_sts_rows(corpus, &rows)
            .with_context(|| format!("resolving {}", path.display()))?)
    } else {
        Ok(read_pairs(path)?)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn synth(a: SynthArgs) -> Result<ExitCode> {
    if let Some(n) = a.sources {
        ensure!(
            n == a.dims.len(),
            "--sources {n} disagrees with {} --dims entries",
            a.dims.len()
        );
    }
    let spec = SyntheticSpec {
        min_words: a.min_words,
        max_words: a.max_words,
        vocab_size: a.vocab,
        latent_dim: a.latent_dim,
        noise: a.noise,
        ..SyntheticSpec::new(a.dims, a.sentences, a.seed)
    };
    let synth = generate_synthetic::<f64>(&spec)?;
    let pairs = if a.pairs > 0 {
        synthetic_pairs(&synth, a.pairs, a.seed)?
    } else {
        Vec::new()
    };
    synth.corpus.write(&a.out)?;
    if !pairs.is_empty() {
        write_pairs(&pairs, a.out.join(PAIRS_FILE))?;
    }
    println!(
        "wrote {} sentences, {} sources, {} pairs to {}",
        synth.corpus.len(),
        synth.corpus.manifest().n_sources(),
        pairs.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

struct TrainInputs {
    corpus: Corpus64,
    dev_corpus: Option<Corpus64>,
    dev_pairs: Vec<StsPair64>,
    config: TrainConfig64,
}

impl TrainInputs {
    fn dev_corpus(&self) -> &Corpus64 {
        self.dev_corpus.as_ref().unwrap_or(&self.corpus)
    }
}

fn train_inputs(t: &TrainArgs) -> Result<TrainInputs> {
    let corpus = load_corpus(&t.corpus)?;
    let dev_corpus = t.dev_corpus.as_deref().map(load_corpus).transpose()?;
    let dev_dir: PathBuf = t.dev_corpus.clone().unwrap_or_else(|| t.corpus.clone());
    let dev_path = t
        .dev_pairs
        .clone()
        .unwrap_or_else(|| dev_dir.join(PAIRS_FILE));
    let dev_pairs = load_pairs(
        &dev_path,
        Some(dev_corpus.as_ref().unwrap_or(&corpus)),
        &t.columns,
    )
    .with_context(|| format!("loading dev pairs {}", dev_path.display()))?;
    let config = TrainConfig64 {
        learning_rate: t.lr,
        weight_decay: t.weight_decay,
        batch_size: t.batch_size,
        patience: t.patience,
        init_range: t.init_range,
        seed: t.seed,
        max_epochs: t.epochs,
        pooling: t.pool.into(),
        weighted: !t.unweighted,
        ..TrainConfig64::default()
    };
    Ok(TrainInputs {
        corpus,
        dev_corpus,
        dev_pairs,
        config,
    })
}

fn finish_training(
    t: &TrainArgs,
    model: &MetaModel64,
    log: &metaemb::TrainLog<f64>,
) -> Result<ExitCode> {
    model.save(&t.out)?;
    if let Some(path) = &t.log {
        log.write_jsonl(path)?;
    }
    let best = log.best();
    println!(
        "best epoch {} of {}: dev pearson {:.4}, spearman {:.4}",
        best.epoch,
        log.records.len() - 1,
        best.dev_pearson,
        best.dev_spearman
    );
    Ok(ExitCode::SUCCESS)
}

pub fn train_unsup(a: TrainUnsupArgs) -> Result<ExitCode> {
    let mut inputs = train_inputs(&a.train)?;
    inputs.config.coeff_mode = a.coeff_mode.into();
    inputs.config.coeffs = LossCoeffs::new(a.lambda, a.mu, a.nu, a.xi);
    let (model, log) = fit_unsup(
        &inputs.corpus,
        inputs.dev_corpus(),
        &inputs.dev_pairs,
        a.train.dm,
        &inputs.config,
    )?;
    finish_training(&a.train, &model, &log)
}

pub fn train_sup(a: TrainSupArgs) -> Result<ExitCode> {
    let inputs = train_inputs(&a.train)?;
    let train_pairs = load_pairs(&a.train_pairs, Some(&inputs.corpus), &a.train.columns)
        .with_context(|| format!("loading training pairs {}", a.train_pairs.display()))?;
    let (model, log) = fit_sup(
        &inputs.corpus,
        &train_pairs,
        inputs.dev_corpus(),
        &inputs.dev_pairs,
        a.train.dm,
        &inputs.config,
    )?;
    finish_training(&a.train, &model, &log)
}

pub fn fit_baseline(a: FitArgs) -> Result<ExitCode> {
    let corpus = load_corpus(&a.corpus)?;
    corpus.require_complete()?;
    let k = a.k.unwrap_or_else(|| corpus.manifest().max_dim());
    let pooling: Pooling = a.pool.into();
    let basis = match a.method {
        FitMethod::Svd => {
            ensure!(a.ridge.is_none(), "--ridge applies to gcca only");
            let columns = corpus
                .sentences()
                .iter()
                .map(|s| conc_embed(&corpus, s.id, pooling))
                .collect::<metaemb::Result<Vec<_>>>()?;
            Basis::Svd(fit_svd(&columns, k, a.whiten)?)
        }
        FitMethod::Gcca => {
            ensure!(!a.whiten, "--whiten applies to svd only");
            let views = source_sentence_vectors(&corpus, pooling)?;
            Basis::Gcca(fit_gcca(&views, k, a.ridge)?)
        }
    };
    basis.save(&a.out)?;
    println!("fitted {k}-dimensional basis on {} sentences", corpus.len());
    Ok(ExitCode::SUCCESS)
}

pub fn embed(a: EmbedArgs) -> Result<ExitCode> {
    let corpus = load_corpus(&a.corpus)?;
    let method: Method = a.method.into();
    let pooling: Pooling = a.pool.into();
    let unused = |flag: Option<bool>, name: &str| -> Result<()> {
        ensure!(
            flag != Some(true),
            "--{name} does not apply to method {method}"
        );
        Ok(())
    };
    unused(
        a.model
            .as_ref()
            .map(|_| !matches!(method, Method::Unsup | Method::Sup)),
        "model",
    )?;
    unused(
        a.basis
            .as_ref()
            .map(|_| !matches!(method, Method::Svd | Method::Gcca)),
        "basis",
    )?;
    unused(a.source.as_ref().map(|_| method != Method::Sse), "source")?;

    let each = |f: &dyn Fn(u64) -> metaemb::Result<Vec<f64>>| -> Result<Vec<(u64, Vec<f64>)>> {
        corpus
            .sentences()
            .iter()
            .map(|s| Ok((s.id, f(s.id)?)))
            .collect()
    };
    let embeddings = match method {
        Method::Sse => {
            let source = a
                .source
                .as_deref()
                .context("--source is required for sse")?;
            sse_embed(&corpus, source, pooling)?
                .into_iter()
                .map(|(sid, e)| (sid, e.vector))
                .collect()
        }
        Method::Conc => each(&|sid| conc_embed(&corpus, sid, pooling))?,
        Method::Avg => each(&|sid| avg_embed(&corpus, sid, pooling))?,
        Method::Svd | Method::Gcca => {
            let path = a
                .basis
                .as_deref()
                .context("--basis is required for svd and gcca")?;
            match (method, Basis::<f64>::load(path)?) {
                (Method::Svd, Basis::Svd(b)) => {
                    each(&|sid| svd_embed(&b, &conc_embed(&corpus, sid, pooling)?))?
                }
                (Method::Gcca, Basis::Gcca(b)) => {
                    ensure!(
                        b.blocks.len() == corpus.manifest().n_sources(),
                        "basis has {} sources, corpus has {}",
                        b.blocks.len(),
                        corpus.manifest().n_sources()
                    );
                    let views = source_sentence_vectors(&corpus, pooling)?;
                    (0..corpus.len())
                        .map(|k| {
                            let per: Vec<&[f64]> = views.iter().map(|v| v[k].as_slice()).collect();
                            Ok((corpus.sentences()[k].id, gcca_embed(&b, &per)?))
                        })
                        .collect::<Result<Vec<_>>>()?
                }
                _ => bail!("{} is not a {method} basis", path.display()),
            }
        }
        Method::Unsup | Method::Sup => {
            let path = a
                .model
                .as_deref()
                .context("--model is required for unsup and sup")?;
            MetaModel64::load(path)?.embed_corpus(&corpus, pooling)?
        }
    };
    write_embeddings(&a.out, method, pooling, &embeddings)?;
    let dim = embeddings.first().map_or(0, |e| e.1.len());
    println!(
        "wrote {} {dim}-dimensional {method} embeddings",
        embeddings.len()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn eval(a: EvalArgs) -> Result<ExitCode> {
    let (method, pooling, embeddings) = read_embeddings::<f64>(&a.embeddings)
        .with_context(|| format!("reading {}", a.embeddings.display()))?;
    let corpus = a.corpus.as_deref().map(load_corpus).transpose()?;
    let mut pairs = Vec::new();
    for path in &a.pairs {
        pairs.extend(
            load_pairs(path, corpus.as_ref(), &a.columns)
                .with_context(|| format!("loading {}", path.display()))?,
        );
    }
    let mut report = metaemb::evaluate(&embeddings, &pairs, method, pooling)?;
    if let Some(label) = a.label {
        report.label = label;
    }
    report.dataset = a.dataset;
    if let Some(out) = &a.out {
        let json = serde_json::to_string_pretty(&report).context("serializing report")?;
        write_text(out, &(json + "\n"))?;
    }
    print!("{}", render_report(&report));
    Ok(ExitCode::SUCCESS)
}

pub fn gradcheck(a: GradcheckArgs) -> Result<ExitCode> {
    ensure!(a.configs > 0, "--configs must be positive");
    let report = run_gradcheck(a.seed, a.configs)?;
    for c in &report.checks {
        println!(
            "{:<28} {:>4} entries  max relative error {:.3e}",
            c.label, c.entries, c.max_relative_error
        );
    }
    let worst = report.max_relative_error();
    println!(
        "max relative error {worst:.3e} (tolerance {:.0e})",
        a.tolerance
    );
    if report.passes(a.tolerance) {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: gradient check exceeded tolerance");
        Ok(ExitCode::FAILURE)
    }
}

pub fn report(a: ReportArgs) -> Result<ExitCode> {
    let reports = a
        .reports
        .iter()
        .map(|path| {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<EvalReport64>(&text)
                .with_context(|| format!("parsing {}", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = render_table(&reports);
    if let Some(out) = &a.out {
        write_text(out, &table)?;
    }
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}
