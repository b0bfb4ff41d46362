use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 0-based column positions of the gold score and the two sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StsColumns {
    pub score: usize,
    pub sentence_a: usize,
    pub sentence_b: usize,
}

impl Default for StsColumns {
    /// STS-B layout: genre, file, year, id, score, sentence 1, sentence 2.
    fn default() -> Self {
        StsColumns {
            score: 4,
            sentence_a: 5,
            sentence_b: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StsRow<T> {
    pub gold: T,
    pub sentence_a: String,
    pub sentence_b: String,
    pub subset: String,
}

/// Loads a tab-separated STS file. The subset id is the file stem.
///
/// Every non-empty line is a row; a malformed row fails the whole load with
/// its 0-based row index.
pub fn load_sts_tsv<T: Scalar>(
    path: impl AsRef<Path>,
    columns: StsColumns,
) -> Result<Vec<StsRow<T>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let subset = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    text.lines()
        .enumerate()
        .map(|(row, line)| parse_row(line, row, columns, &subset))
        .collect()
}

fn parse_row<T: Scalar>(
    line: &str,
    row: usize,
    columns: StsColumns,
    subset: &str,
) -> Result<StsRow<T>> {
    let fields: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
    let field = |idx: usize, what: &str| {
        fields.get(idx).copied().ok_or_else(|| Error::StsRow {
            row,
            message: format!(
                "missing {what} column {idx} ({} columns present)",
                fields.len()
            ),
        })
    };
    let raw_score = field(columns.score, "score")?.trim();
    let score: f64 = raw_score.parse().map_err(|_| Error::StsRow {
        row,
        message: format!("score `{raw_score}` is not a number"),
    })?;
    if !(0.0..=5.0).contains(&score) {
        return Err(Error::StsRow {
            row,
            message: format!("score {score} outside [0, 5]"),
        });
    }
    let a = field(columns.sentence_a, "first sentence")?.trim();
    let b = field(columns.sentence_b, "second sentence")?.trim();
    if a.is_empty() || b.is_empty() {
        return Err(Error::StsRow {
            row,
            message: "empty sentence".into(),
        });
    }
    Ok(StsRow {
        gold: T::of(score),
        sentence_a: a.to_string(),
        sentence_b: b.to_string(),
        subset: subset.to_string(),
    })
}
