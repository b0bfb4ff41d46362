//! Acceptance checks, one line per criterion. Run with `cargo test --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use metaemb::baselines::{fit_gcca, fit_svd, svd_embed};
use metaemb::embedding_io::{generate_synthetic, synthetic_pairs, SyntheticSpec};
use metaemb::gradcheck::run_gradcheck;
use metaemb::numerics::{pearson, spearman};
use metaemb::objective::{orthogonality_gradient, orthogonality_penalty};
use metaemb::trainer::{init_model, sgd_step, sup_loss, train_unsup, TrainConfig};
use metaemb::{EvalReport64, LossCoeffs, ModelGradients, Pooling, SourceManifest, SourceSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:.1?}, limit {limit:?}"))
    }
}

fn metaemb(args: &[&str], dir: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_metaemb"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| format!("cannot run metaemb: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "`metaemb {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let report = run_gradcheck(1, 20).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(10), "gradient check")?;
    let unsup: Vec<_> = report
        .checks
        .iter()
        .filter(|c| c.label.starts_with("unsup"))
        .collect();
    let worst = unsup
        .iter()
        .map(|c| c.max_relative_error)
        .fold(0.0, f64::max);
    let cli = metaemb(&["gradcheck", "--seed", "1"], Path::new("."))?;
    check(
        unsup.len() == 20 && worst <= 1e-4 && cli.contains("max relative error"),
        format!("20 configurations, max relative error {worst:.2e} <= 1e-4"),
        format!(
            "{} configurations, max relative error {worst:.2e}",
            unsup.len()
        ),
    )
}

fn orthogonality_convergence() -> Outcome {
    let start = Instant::now();
    let manifest = SourceManifest::new(
        vec![
            SourceSpec {
                id: "a".into(),
                dim: 4,
            },
            SourceSpec {
                id: "b".into(),
                dim: 4,
            },
        ],
        0,
    )
    .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let config = TrainConfig {
            coeffs: LossCoeffs::new(0.0, 0.0, 0.0, 1.0),
            ..TrainConfig::with_seed(seed)
        };
        let mut model = init_model(&manifest, Some(4), &config).map_err(|e| e.to_string())?;
        let initial = orthogonality_penalty(&model);
        for _ in 0..200 {
            let mut grads = ModelGradients::zeros_like(&model);
            grads.projections = orthogonality_gradient(&model);
            sgd_step(
                &mut model,
                &grads,
                config.learning_rate,
                config.weight_decay,
            );
        }
        worst = worst.max(orthogonality_penalty(&model) / initial);
    }
    within(start.elapsed(), Duration::from_secs(5), "orthogonality run")?;
    check(
        worst <= 0.1,
        format!(
            "10 seeds, penalty after 200 steps <= {:.2e} of initial",
            worst
        ),
        format!("penalty only fell to {:.1}% of initial", 100.0 * worst),
    )
}

fn unsup_alignment() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let synth = generate_synthetic::<f64>(&SyntheticSpec::new(vec![8, 8], 200, seed))
            .map_err(|e| e.to_string())?;
        let pairs = synthetic_pairs(&synth, 100, seed + 100).map_err(|e| e.to_string())?;
        let config = TrainConfig {
            batch_size: 32,
            patience: 50,
            pooling: Pooling::Mean,
            ..TrainConfig::with_seed(seed + 1)
        };
        let (_, log) = train_unsup(&synth.corpus, &synth.corpus, &pairs, Some(8), &config)
            .map_err(|e| e.to_string())?;
        let c1 = |e: usize| log.records[e].breakdown.as_ref().map_or(f64::NAN, |b| b.c1);
        let (c1_0, c1_best) = (c1(0), c1(log.best_epoch));
        let (p0, pb) = (log.records[0].dev_pearson, log.best().dev_pearson);
        if !(c1_best <= 0.5 * c1_0 && pb > p0) {
            return Err(format!(
                "seed {seed}: c1 {c1_0:.3} -> {c1_best:.3}, dev pearson {p0:.3} -> {pb:.3}"
            ));
        }
        lines.push(format!(
            "c1 {:.0}%, pearson {p0:.2}->{pb:.2}",
            100.0 * c1_best / c1_0
        ));
    }
    within(
        start.elapsed(),
        Duration::from_secs(120),
        "unsupervised training",
    )?;
    Ok(format!("5 seeds: {}", lines.join("; ")))
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

fn centered(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let mean = m.row_mean();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - mean[j])
}

fn inverse_sqrt(c: &DMatrix<f64>) -> DMatrix<f64> {
    let e = c.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| 1.0 / v.sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

fn cca_oracle(x: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<f64> {
    let (x, y) = (centered(x), centered(y));
    let n = (x.nrows() - 1) as f64;
    let t = inverse_sqrt(&(x.transpose() * &x / n))
        * (x.transpose() * &y / n)
        * inverse_sqrt(&(y.transpose() * &y / n));
    let mut s: Vec<f64> = t
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

fn definitional_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn baseline_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let mut gcca_err: f64 = 0.0;
    for _ in 0..20 {
        let shared = gaussian(&mut rng, 20, 1);
        let mut x = gaussian(&mut rng, 20, 4);
        let mut y = gaussian(&mut rng, 20, 6);
        for i in 0..20 {
            x[i][1] += 1.5 * shared[i][0];
            y[i][2] -= 1.5 * shared[i][0];
        }
        let rho = cca_oracle(&x, &y);
        let basis = fit_gcca(&[x, y], 4, Some(1e-12)).map_err(|e| e.to_string())?;
        for (ev, r) in basis.eigenvalues.iter().zip(&rho) {
            gcca_err = gcca_err.max((ev - 1.0 - r).abs());
        }
    }

    let cols = gaussian(&mut rng, 15, 6);
    let k = 4;
    let basis = fit_svd(&cols, k, false).map_err(|e| e.to_string())?;
    let m = centered(&cols).transpose();
    let f = m.svd(false, true);
    let mut order: Vec<usize> = (0..f.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        f.singular_values[b]
            .partial_cmp(&f.singular_values[a])
            .unwrap()
    });
    let vt = f.v_t.as_ref().unwrap();
    let emb: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| svd_embed(&basis, c))
        .collect::<metaemb::Result<_>>()
        .map_err(|e| e.to_string())?;
    let mut svd_err: f64 = 0.0;
    for (comp, &o) in order.iter().take(k).enumerate() {
        let expected: Vec<f64> = (0..cols.len())
            .map(|j| f.singular_values[o] * vt[(o, j)])
            .collect();
        let got: Vec<f64> = emb.iter().map(|e| e[comp]).collect();
        let sign = got
            .iter()
            .zip(&expected)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .signum();
        for (g, e) in got.iter().zip(&expected) {
            svd_err = svd_err.max((g - sign * e).abs());
        }
    }

    let mut corr_err: f64 = 0.0;
    for t in 0..50 {
        let len = rng.random_range(3..40);
        // Every other list is rounded so that ties occur.
        let draw = |rng: &mut ChaCha8Rng| {
            let v: f64 = rng.sample(StandardNormal);
            if t % 2 == 0 {
                (v * 2.0).round()
            } else {
                v
            }
        };
        let x: Vec<f64> = (0..len).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = (0..len).map(|_| draw(&mut rng)).collect();
        let (rx, ry) = (brute_ranks(&x), brute_ranks(&y));
        if rx.iter().all(|&r| r == rx[0]) || ry.iter().all(|&r| r == ry[0]) {
            continue;
        }
        let p = pearson(&x, &y).map_err(|e| e.to_string())?;
        let s = spearman(&x, &y).map_err(|e| e.to_string())?;
        corr_err = corr_err
            .max((p - definitional_pearson(&x, &y)).abs())
            .max((s - definitional_pearson(&rx, &ry)).abs());
    }
    within(start.elapsed(), Duration::from_secs(30), "baseline oracles")?;
    check(
        gcca_err <= 1e-6 && svd_err <= 1e-8 && corr_err <= 1e-12,
        format!("gcca {gcca_err:.1e}, svd {svd_err:.1e}, correlations {corr_err:.1e}"),
        format!("gcca {gcca_err:.1e} (1e-6), svd {svd_err:.1e} (1e-8), correlations {corr_err:.1e} (1e-12)"),
    )
}

fn ablation() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    metaemb(
        &[
            "synth",
            "--dims",
            "8,8",
            "--sentences",
            "200",
            "--seed",
            "3",
            "--out",
            "corpus",
        ],
        d,
    )?;
    let mut reports = Vec::new();
    for (weighted, tag) in [(true, "w/"), (false, "w/o")] {
        for pool in ["mean", "max"] {
            let label = format!("UNSUP {tag} weighting, {pool}");
            let stem = format!("{}-{pool}", if weighted { "w" } else { "nw" });
            let model = format!("{stem}.json");
            let mut train = vec![
                "train-unsup",
                "--corpus",
                "corpus",
                "--dm",
                "8",
                "--epochs",
                "30",
                "--batch-size",
                "64",
                "--pool",
                pool,
                "--seed",
                "3",
                "--out",
                &model,
            ];
            if !weighted {
                train.push("--unweighted");
            }
            metaemb(&train, d)?;
            let emb = format!("{stem}.jsonl");
            metaemb(
                &[
                    "embed", "--method", "unsup", "--pool", pool, "--corpus", "corpus", "--model",
                    &model, "--out", &emb,
                ],
                d,
            )?;
            let report = format!("{stem}-report.json");
            metaemb(
                &[
                    "eval",
                    "--embeddings",
                    &emb,
                    "--pairs",
                    "corpus/pairs.jsonl",
                    "--label",
                    &label,
                    "--dataset",
                    "synthetic",
                    "--out",
                    &report,
                ],
                d,
            )?;
            reports.push(report);
        }
    }
    let mut args = vec!["report"];
    args.extend(reports.iter().map(String::as_str));
    let table = metaemb(&args, d)?;
    let parsed: Vec<EvalReport64> = reports
        .iter()
        .map(|r| serde_json::from_str(&fs::read_to_string(d.join(r)).unwrap()).unwrap())
        .collect();
    let rows = table.lines().filter(|l| l.starts_with("UNSUP")).count();
    let mut labels: Vec<&str> = parsed.iter().map(|r| r.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    let finite = parsed
        .iter()
        .all(|r| r.pearson.is_finite() && r.spearman.is_finite());
    check(
        rows == 4 && labels.len() == 4 && finite,
        format!("4-row report, all metrics finite\n{}", table.trim_end()),
        format!(
            "{rows} rows, {} labels, finite = {finite}\n{table}",
            labels.len()
        ),
    )
}

fn pipeline(dir: &Path) -> Result<Vec<u8>, String> {
    let start = Instant::now();
    metaemb(
        &[
            "synth",
            "--dims",
            "8,8",
            "--sentences",
            "120",
            "--seed",
            "11",
            "--out",
            "c",
        ],
        dir,
    )?;
    metaemb(
        &[
            "train-unsup",
            "--corpus",
            "c",
            "--dm",
            "8",
            "--epochs",
            "20",
            "--batch-size",
            "32",
            "--seed",
            "11",
            "--out",
            "m.json",
        ],
        dir,
    )?;
    metaemb(
        &[
            "embed", "--method", "unsup", "--pool", "max", "--corpus", "c", "--model", "m.json",
            "--out", "e.jsonl",
        ],
        dir,
    )?;
    metaemb(
        &[
            "eval",
            "--embeddings",
            "e.jsonl",
            "--pairs",
            "c/pairs.jsonl",
            "--out",
            "r.json",
        ],
        dir,
    )?;
    within(start.elapsed(), Duration::from_secs(120), "pipeline")?;
    fs::read(dir.join("r.json")).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (ra, rb) = (pipeline(a.path())?, pipeline(b.path())?);
    let same_model =
        fs::read(a.path().join("m.json")).ok() == fs::read(b.path().join("m.json")).ok();
    check(
        ra == rb && same_model,
        format!(
            "two runs produced byte-identical reports ({} bytes)",
            ra.len()
        ),
        "reports or checkpoints differ between identical runs".into(),
    )
}

fn sup_loss_examples() -> Outcome {
    let cases = [
        (sup_loss(&[0.4, -1.0, 2.0], &[0.4, -1.0, 2.0], 5.0), 0.0),
        (sup_loss(&[1.0, 0.0], &[0.0, 2.0], 2.5), 0.0),
        (sup_loss(&[0.4, -1.0, 2.0], &[0.4, -1.0, 2.0], 0.0), 4.0),
    ];
    let got: Vec<f64> = cases
        .iter()
        .map(|(r, _)| *r.as_ref().unwrap_or(&f64::NAN))
        .collect();
    let exact = cases.iter().zip(&got).all(|((_, want), g)| g == want);
    check(
        exact,
        format!("losses {got:?} exact"),
        format!("losses {got:?}, expected [0, 0, 4]"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("gradient oracle", gradient_oracle),
        ("orthogonality convergence", orthogonality_convergence),
        ("unsupervised alignment on synthetic data", unsup_alignment),
        ("baseline oracles", baseline_oracles),
        ("pooling/weighting ablation", ablation),
        ("end-to-end determinism", determinism),
        ("supervised loss examples", sup_loss_examples),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
