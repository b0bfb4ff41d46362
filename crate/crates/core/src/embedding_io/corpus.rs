use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::embedding_io::{SourceManifest, TokenEmbeddingRecord};
use crate::error::{Error, Result};
use crate::scalar::{all_finite, Scalar};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";

/// One sentence with its word grid and the vectors each source assigns to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence<T> {
    pub id: u64,
    pub words: Vec<String>,
    /// Indexed by source position in the manifest, then by word.
    pub vectors: Vec<Option<Vec<Vec<T>>>>,
}

impl<T: Scalar> Sentence<T> {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.vectors.iter().all(Option::is_some)
    }

    /// Vectors of every word under source `source`.
    pub fn source(&self, source: usize, manifest: &SourceManifest) -> Result<&[Vec<T>]> {
        self.vectors
            .get(source)
            .and_then(Option::as_deref)
            .ok_or_else(|| Error::MissingSource {
                sid: self.id,
                source_id: manifest
                    .sources
                    .get(source)
                    .map_or_else(|| format!("#{source}"), |s| s.id.clone()),
            })
    }
}

/// Validated, indexed collection of token-embedding records.
///
/// Sentences are kept in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus<T> {
    manifest: SourceManifest,
    sentences: Vec<Sentence<T>>,
    index: HashMap<u64, usize>,
}

impl<T: Scalar> Corpus<T> {
    /// Validates the records against the manifest and indexes them.
    ///
    /// Checks the manifest itself, then for every record: known source,
    /// non-empty word list matching the vector count, vector lengths equal to
    /// the declared dimension, finite components, no duplicate
    /// `(sentence, source)` pair, and identical words across sources.
    /// The number of distinct sentences must equal `manifest.sentence_count`.
    pub fn from_records(
        manifest: SourceManifest,
        records: impl IntoIterator<Item = TokenEmbeddingRecord<T>>,
    ) -> Result<Self> {
        let mut builder = Builder::new(manifest)?;
        for r in records {
            builder.push(r)?;
        }
        builder.finish()
    }

    pub fn manifest(&self) -> &SourceManifest {
        &self.manifest
    }

    pub fn sentences(&self) -> &[Sentence<T>] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, sid: u64) -> Option<&Sentence<T>> {
        self.index.get(&sid).map(|&i| &self.sentences[i])
    }

    pub fn sentence(&self, sid: u64) -> Result<&Sentence<T>> {
        self.get(sid).ok_or(Error::UnknownSentence(sid))
    }

    pub fn position(&self, sid: u64) -> Option<usize> {
        self.index.get(&sid).copied()
    }

    /// Record for `(sentence_id, source_id)`, if present.
    pub fn record(&self, sid: u64, source_id: &str) -> Option<TokenEmbeddingRecord<T>> {
        let s = self.get(sid)?;
        let k = self.manifest.source_index(source_id)?;
        let vectors = s.vectors[k].clone()?;
        Some(TokenEmbeddingRecord {
            sentence_id: sid,
            source_id: source_id.to_string(),
            words: s.words.clone(),
            vectors,
        })
    }

    /// All records, ordered by sentence id and then manifest source order.
    pub fn records(&self) -> impl Iterator<Item = TokenEmbeddingRecord<T>> + '_ {
        self.sentences.iter().flat_map(move |s| {
            s.vectors.iter().enumerate().filter_map(move |(k, v)| {
                v.as_ref().map(|vectors| TokenEmbeddingRecord {
                    sentence_id: s.id,
                    source_id: self.manifest.sources[k].id.clone(),
                    words: s.words.clone(),
                    vectors: vectors.clone(),
                })
            })
        })
    }

    /// Fails with [`Error::MissingSource`] unless every sentence carries every source.
    pub fn require_complete(&self) -> Result<()> {
        for s in &self.sentences {
            if let Some(k) = s.vectors.iter().position(Option::is_none) {
                return Err(Error::MissingSource {
                    sid: s.id,
                    source_id: self.manifest.sources[k].id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Writes `manifest.json` and `embeddings.jsonl` into `dir`, creating it if needed.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;

        let path = dir.join(EMBEDDINGS_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for r in self.records() {
            serde_json::to_writer(&mut out, &r).expect("record serializes");
            out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))
    }
}

struct Builder<T> {
    manifest: SourceManifest,
    sentences: BTreeMap<u64, Sentence<T>>,
}

impl<T: Scalar> Builder<T> {
    fn new(manifest: SourceManifest) -> Result<Self> {
        manifest.validate()?;
        Ok(Builder {
            manifest,
            sentences: BTreeMap::new(),
        })
    }

    fn push(&mut self, r: TokenEmbeddingRecord<T>) -> Result<()> {
        let sid = r.sentence_id;
        let k = self
            .manifest
            .source_index(&r.source_id)
            .ok_or_else(|| Error::UnknownSource(r.source_id.clone()))?;
        if r.words.is_empty() {
            return Err(Error::InvalidRecord {
                sid,
                message: "empty word list".into(),
            });
        }
        if r.words.len() != r.vectors.len() {
            return Err(Error::InvalidRecord {
                sid,
                message: format!("{} words but {} vectors", r.words.len(), r.vectors.len()),
            });
        }
        let dim = self.manifest.sources[k].dim;
        for v in &r.vectors {
            if v.len() != dim {
                return Err(Error::RecordDimension {
                    sid,
                    source_id: r.source_id,
                    expected: dim,
                    found: v.len(),
                });
            }
            if !all_finite(v) {
                return Err(Error::InvalidRecord {
                    sid,
                    message: "non-finite vector component".into(),
                });
            }
        }
        let n = self.manifest.n_sources();
        let entry = self.sentences.entry(sid).or_insert_with(|| Sentence {
            id: sid,
            words: r.words.clone(),
            vectors: vec![None; n],
        });
        if entry.vectors[k].is_some() {
            return Err(Error::DuplicateRecord {
                sid,
                source_id: r.source_id,
            });
        }
        if entry.words != r.words {
            return Err(Error::WordMismatch { sid });
        }
        entry.vectors[k] = Some(r.vectors);
        Ok(())
    }

    fn finish(self) -> Result<Corpus<T>> {
        if self.sentences.len() != self.manifest.sentence_count {
            return Err(Error::Manifest(format!(
                "manifest declares {} sentences, records cover {}",
                self.manifest.sentence_count,
                self.sentences.len()
            )));
        }
        let sentences: Vec<_> = self.sentences.into_values().collect();
        let index = sentences
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id, i))
            .collect();
        Ok(Corpus {
            manifest: self.manifest,
            sentences,
            index,
        })
    }
}

/// Validates and writes a corpus directory.
pub fn write_corpus<T: Scalar>(
    manifest: SourceManifest,
    records: impl IntoIterator<Item = TokenEmbeddingRecord<T>>,
    dir: impl AsRef<Path>,
) -> Result<()> {
    Corpus::from_records(manifest, records)?.write(dir)
}

/// Reads a corpus directory, re-validating every record.
///
/// Errors inside `embeddings.jsonl` are reported with their 1-based line number.
pub fn read_corpus<T: Scalar>(dir: impl AsRef<Path>) -> Result<Corpus<T>> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: SourceManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: manifest_path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut builder = Builder::new(manifest)?;

    let path = dir.join(EMBEDDINGS_FILE);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TokenEmbeddingRecord<T> =
            serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
        builder.push(record).map_err(|e| Error::AtLine {
            path: path.clone(),
            line: i + 1,
            source: Box::new(e),
        })?;
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding_io::SourceSpec;

    fn manifest(dims: &[usize], count: usize) -> SourceManifest {
        let sources = dims
            .iter()
            .enumerate()
            .map(|(i, &dim)| SourceSpec {
                id: format!("s{i}"),
                dim,
            })
            .collect();
        SourceManifest::new(sources, count).unwrap()
    }

    fn rec(
        sid: u64,
        source: &str,
        words: &[&str],
        vectors: Vec<Vec<f64>>,
    ) -> TokenEmbeddingRecord<f64> {
        TokenEmbeddingRecord {
            sentence_id: sid,
            source_id: source.into(),
            words: words.iter().map(|w| w.to_string()).collect(),
            vectors,
        }
    }

    #[test]
    fn single_record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = rec(0, "s0", &["hi"], vec![vec![0.5, -1.0]]);
        write_corpus(manifest(&[2], 1), vec![r.clone()], dir.path()).unwrap();
        let c = read_corpus::<f64>(dir.path()).unwrap();
        assert_eq!(c.records().collect::<Vec<_>>(), vec![r.clone()]);
        assert_eq!(c.record(0, "s0"), Some(r));
    }

    #[test]
    fn word_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![
            rec(0, "s0", &["a", "b"], vec![vec![1.0], vec![2.0]]),
            rec(0, "s1", &["a", "c"], vec![vec![1.0], vec![2.0]]),
        ];
        let err = write_corpus(manifest(&[1, 1], 1), recs, dir.path()).unwrap_err();
        assert!(matches!(err, Error::WordMismatch { sid: 0 }));
        assert!(!dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn line_count_matches_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut recs = Vec::new();
        for sid in 0..3 {
            recs.push(rec(sid, "s0", &["x"], vec![vec![sid as f64]]));
            recs.push(rec(sid, "s1", &["x"], vec![vec![1.0, 2.0]]));
        }
        write_corpus(manifest(&[1, 2], 3), recs, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(EMBEDDINGS_FILE)).unwrap();
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn duplicate_and_dimension_errors() {
        let dup = vec![
            rec(0, "s0", &["x"], vec![vec![1.0]]),
            rec(0, "s0", &["x"], vec![vec![1.0]]),
        ];
        assert!(matches!(
            Corpus::from_records(manifest(&[1], 1), dup),
            Err(Error::DuplicateRecord { sid: 0, .. })
        ));
        let bad = vec![rec(4, "s0", &["x"], vec![vec![1.0, 2.0]])];
        assert!(matches!(
            Corpus::from_records(manifest(&[1], 1), bad),
            Err(Error::RecordDimension {
                sid: 4,
                expected: 1,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn reader_reports_dimension_error_with_line_and_sid() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(MANIFEST_FILE),
            serde_json::to_string(&manifest(&[2], 2)).unwrap(),
        )
        .unwrap();
        fs::write(
            dir.path().join(EMBEDDINGS_FILE),
            "{\"sid\":0,\"source\":\"s0\",\"words\":[\"a\"],\"vecs\":[[1.0,2.0]]}\n\
             {\"sid\":7,\"source\":\"s0\",\"words\":[\"b\"],\"vecs\":[[1.0]]}\n",
        )
        .unwrap();
        let err = read_corpus::<f64>(dir.path()).unwrap_err();
        match &err {
            Error::AtLine { line, source, .. } => {
                assert_eq!(*line, 2);
                assert!(matches!(**source, Error::RecordDimension { sid: 7, .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(err.to_string().contains("sentence 7"));
    }

    #[test]
    fn reader_reports_parse_error_line() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(MANIFEST_FILE),
            serde_json::to_string(&manifest(&[1], 1)).unwrap(),
        )
        .unwrap();
        fs::write(
            dir.path().join(EMBEDDINGS_FILE),
            "{\"sid\":0,\"source\":\"s0\",\"words\":[\"a\"],\"vecs\":[[1.0]]}\nnot json\n",
        )
        .unwrap();
        assert!(matches!(
            read_corpus::<f64>(dir.path()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_corpus_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus::<f64>(manifest(&[3], 0), Vec::new(), dir.path()).unwrap();
        let c = read_corpus::<f64>(dir.path()).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn missing_source_detected() {
        let c = Corpus::from_records(
            manifest(&[1, 1], 1),
            vec![rec(0, "s0", &["x"], vec![vec![1.0]])],
        )
        .unwrap();
        assert!(matches!(
            c.require_complete(),
            Err(Error::MissingSource { sid: 0, .. })
        ));
    }

    #[test]
    fn manifest_invariants() {
        let dup = vec![
            SourceSpec {
                id: "a".into(),
                dim: 1,
            },
            SourceSpec {
                id: "a".into(),
                dim: 2,
            },
        ];
        assert!(SourceManifest::new(dup, 0).is_err());
        assert!(SourceManifest::new(
            vec![SourceSpec {
                id: "".into(),
                dim: 1
            }],
            0
        )
        .is_err());
        assert!(SourceManifest::new(
            vec![SourceSpec {
                id: "a".into(),
                dim: 0
            }],
            0
        )
        .is_err());
    }
}
