use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding_io::{Corpus, StsRow};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A sentence pair with a gold similarity in `[0, 5]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StsPair<T> {
    #[serde(rename = "a")]
    pub sentence_a: u64,
    #[serde(rename = "b")]
    pub sentence_b: u64,
    #[serde(rename = "gold")]
    pub gold_score: T,
    #[serde(rename = "subset")]
    pub subset_id: String,
}

impl<T: Scalar> StsPair<T> {
    pub fn new(
        sentence_a: u64,
        sentence_b: u64,
        gold_score: T,
        subset_id: impl Into<String>,
    ) -> Result<Self> {
        let p = StsPair {
            sentence_a,
            sentence_b,
            gold_score,
            subset_id: subset_id.into(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gold_score >= T::zero() && self.gold_score <= T::of(5.0)) {
            return Err(Error::Config(format!(
                "gold score {} outside [0, 5]",
                self.gold_score
            )));
        }
        Ok(())
    }
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Maps STS text rows onto corpus sentence ids.
///
/// A sentence matches when its whitespace-normalized text equals the words of
/// a corpus sentence joined by single spaces; the lowest matching id wins.
pub fn resolve_sts_rows<T: Scalar>(
    corpus: &Corpus<T>,
    rows: &[StsRow<T>],
) -> Result<Vec<StsPair<T>>> {
    let mut by_text: HashMap<String, u64> = HashMap::new();
    for s in corpus.sentences() {
        by_text.entry(s.words.join(" ")).or_insert(s.id);
    }
    let lookup = |text: &str| {
        let key = normalize(text);
        by_text
            .get(&key)
            .copied()
            .ok_or(Error::UnresolvedSentence(key))
    };
    rows.iter()
        .map(|r| {
            StsPair::new(
                lookup(&r.sentence_a)?,
                lookup(&r.sentence_b)?,
                r.gold,
                r.subset.clone(),
            )
        })
        .collect()
}

/// Writes pairs as JSON lines (`a`, `b`, `gold`, `subset`).
pub fn write_pairs<T: Scalar>(pairs: &[StsPair<T>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for p in pairs {
        serde_json::to_writer(&mut out, p).expect("pair serializes");
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pairs<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<StsPair<T>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: StsPair<T> = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        pair.validate().map_err(|e| Error::AtLine {
            path: path.to_path_buf(),
            line: i + 1,
            source: Box::new(e),
        })?;
        pairs.push(pair);
    }
    Ok(pairs)
}
