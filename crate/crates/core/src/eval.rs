//! STS scoring: cosine similarities against gold ratings, aggregated as
//! pair-count-weighted Pearson and Spearman correlations over subsets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding_io::StsPair;
use crate::error::{Error, Result};
use crate::meta_model::{Method, Pooling};
use crate::numerics::{pearson, spearman};
use crate::scalar::{all_finite, dot, Scalar};

/// One line of a sentence-embedding file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EmbeddingLine<T> {
    pub sentence_id: u64,
    pub method: Method,
    pub pooling: Pooling,
    pub vector: Vec<T>,
}

/// Writes one [`EmbeddingLine`] per sentence, in the given order.
pub fn write_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    method: Method,
    pooling: Pooling,
    embeddings: &[(u64, Vec<T>)],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (sid, vector) in embeddings {
        let line = EmbeddingLine {
            sentence_id: *sid,
            method,
            pooling,
            vector: vector.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("embedding serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads an embedding file. All lines must share one method and pooling tag
/// and one vector length; sentence ids must be unique.
pub fn read_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
) -> Result<(Method, Pooling, HashMap<u64, Vec<T>>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut tags = None;
    let mut dim = None;
    let mut out = HashMap::new();
    for (k, raw) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            message,
        };
        let line: EmbeddingLine<T> =
            serde_json::from_str(raw).map_err(|e| parse_err(e.to_string()))?;
        if *tags.get_or_insert((line.method, line.pooling)) != (line.method, line.pooling) {
            return Err(parse_err(
                "method or pooling differs from earlier lines".into(),
            ));
        }
        if *dim.get_or_insert(line.vector.len()) != line.vector.len() {
            return Err(parse_err("vector length differs from earlier lines".into()));
        }
        if !all_finite(&line.vector) {
            return Err(parse_err("vector has non-finite components".into()));
        }
        if out.insert(line.sentence_id, line.vector).is_some() {
            return Err(parse_err(format!(
                "duplicate sentence {}",
                line.sentence_id
            )));
        }
    }
    let (method, pooling) =
        tags.ok_or_else(|| Error::Empty(format!("{} has no embeddings", path.display())))?;
    Ok((method, pooling, out))
}

/// `u·v / (‖u‖‖v‖)`, clamped into `[−1, 1]`.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (uu, vv) = (dot(u, u), dot(v, v));
    if !(uu > T::zero() && vv > T::zero()) {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(u, v) / (uu * vv).sqrt()).max(-T::one()).min(T::one()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SubsetReport<T> {
    pub subset: String,
    pub pair_count: usize,
    pub pearson: T,
    pub spearman: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EvalReport<T> {
    /// Row name when several reports are tabulated together.
    pub label: String,
    /// Column name: the dataset the pairs came from.
    pub dataset: String,
    pub method: Method,
    pub pooling: Pooling,
    pub subsets: Vec<SubsetReport<T>>,
    pub pearson: T,
    pub spearman: T,
}

/// Pair-count-weighted means of the subset Pearson and Spearman values.
pub fn weighted_overall<T: Scalar>(subsets: &[SubsetReport<T>]) -> Result<(T, T)> {
    let total: usize = subsets.iter().map(|s| s.pair_count).sum();
    if total == 0 {
        return Err(Error::Empty("no scored pairs".into()));
    }
    if let [only] = subsets {
        return Ok((only.pearson, only.spearman));
    }
    let total = T::of(total as f64);
    let (p, s) = subsets.iter().fold((T::zero(), T::zero()), |(p, s), r| {
        let w = T::of(r.pair_count as f64);
        (p + w * r.pearson, s + w * r.spearman)
    });
    Ok((p / total, s / total))
}

/// Scores every pair by the cosine of its two sentence embeddings and
/// correlates the cosines with the gold ratings, per subset.
///
/// Subsets are reported in lexicographic order.
pub fn evaluate<T: Scalar>(
    embeddings: &HashMap<u64, Vec<T>>,
    pairs: &[StsPair<T>],
    method: Method,
    pooling: Pooling,
) -> Result<EvalReport<T>> {
    if pairs.is_empty() {
        return Err(Error::Empty("no evaluation pairs".into()));
    }
    let mut groups: BTreeMap<&str, (Vec<T>, Vec<T>)> = BTreeMap::new();
    for p in pairs {
        let a = embeddings
            .get(&p.sentence_a)
            .ok_or(Error::MissingEmbedding(p.sentence_a))?;
        let b = embeddings
            .get(&p.sentence_b)
            .ok_or(Error::MissingEmbedding(p.sentence_b))?;
        let entry = groups.entry(p.subset_id.as_str()).or_default();
        entry.0.push(cosine(a, b)?);
        entry.1.push(p.gold_score);
    }
    let subsets = groups
        .into_iter()
        .map(|(name, (pred, gold))| {
            let tag = |e: Error| match e {
                Error::ZeroVariance(_) => Error::ZeroVariance(format!("subset `{name}`")),
                Error::Empty(_) => {
                    Error::Empty(format!("subset `{name}` needs at least two pairs"))
                }
                other => other,
            };
            Ok(SubsetReport {
                subset: name.to_string(),
                pair_count: pred.len(),
                pearson: pearson(&pred, &gold).map_err(tag)?,
                spearman: spearman(&pred, &gold).map_err(tag)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (pearson, spearman) = weighted_overall(&subsets)?;
    Ok(EvalReport {
        label: format!("{method}-{pooling}"),
        dataset: String::from("sts"),
        method,
        pooling,
        subsets,
        pearson,
        spearman,
    })
}

fn cell<T: Scalar>(p: T, s: T) -> String {
    format!(
        "{:.2}/{:.2}",
        p.to_f64_lossy() * 100.0,
        s.to_f64_lossy() * 100.0
    )
}

/// Per-subset breakdown of one report.
pub fn render_report<T: Scalar>(report: &EvalReport<T>) -> String {
    let mut rows: Vec<(String, String, String)> = report
        .subsets
        .iter()
        .map(|s| {
            (
                s.subset.clone(),
                s.pair_count.to_string(),
                cell(s.pearson, s.spearman),
            )
        })
        .collect();
    let total: usize = report.subsets.iter().map(|s| s.pair_count).sum();
    rows.push((
        "weighted".into(),
        total.to_string(),
        cell(report.pearson, report.spearman),
    ));
    let w0 = rows
        .iter()
        .map(|r| r.0.len())
        .max()
        .unwrap_or(0)
        .max("subset".len());
    let w1 = rows
        .iter()
        .map(|r| r.1.len())
        .max()
        .unwrap_or(0)
        .max("pairs".len());
    let mut out = format!(
        "{} ({} / {})\n",
        report.label, report.dataset, report.pooling
    );
    let _ = writeln!(out, "{:<w0$}  {:>w1$}  pearson/spearman", "subset", "pairs");
    for (a, b, c) in rows {
        let _ = writeln!(out, "{a:<w0$}  {b:>w1$}  {c}");
    }
    out
}

/// Comparison table: one row per label, one column per dataset, cells
/// `Pearson/Spearman` scaled by 100.
///
/// Rows keep their first-appearance order; columns are sorted by dataset name.
pub fn render_table<T: Scalar>(reports: &[EvalReport<T>]) -> String {
    let datasets: Vec<&str> = reports
        .iter()
        .map(|r| r.dataset.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut labels: Vec<&str> = Vec::new();
    for r in reports {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    let lookup: HashMap<(&str, &str), &EvalReport<T>> = reports
        .iter()
        .map(|r| ((r.label.as_str(), r.dataset.as_str()), r))
        .collect();

    let mut grid: Vec<Vec<String>> = vec![std::iter::once("Method".to_string())
        .chain(datasets.iter().map(|d| d.to_string()))
        .collect()];
    for label in &labels {
        let mut row = vec![label.to_string()];
        for d in &datasets {
            row.push(
                lookup
                    .get(&(*label, *d))
                    .map_or_else(|| "-".to_string(), |r| cell(r.pearson, r.spearman)),
            );
        }
        grid.push(row);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in grid.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| {
                if c == 0 {
                    format!("{v:<w$}", w = widths[c])
                } else {
                    format!("{v:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(
                out,
                "{}",
                "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
            );
        }
    }
    out
}
