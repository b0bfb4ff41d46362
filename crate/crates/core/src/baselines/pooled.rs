use crate::embedding_io::Corpus;
use crate::error::{Error, Result};
use crate::meta_model::{pool_sentence, Method, Pooling, SentenceEmbedding};
use crate::scalar::Scalar;

/// Pools one source's raw word vectors for every sentence, in corpus order.
pub fn sse_embed<T: Scalar>(
    corpus: &Corpus<T>,
    source_id: &str,
    pooling: Pooling,
) -> Result<Vec<(u64, SentenceEmbedding<T>)>> {
    let k = corpus
        .manifest()
        .source_index(source_id)
        .ok_or_else(|| Error::UnknownSource(source_id.to_string()))?;
    corpus
        .sentences()
        .iter()
        .map(|s| {
            let vector = pool_sentence(s.source(k, corpus.manifest())?, pooling)?;
            Ok((
                s.id,
                SentenceEmbedding {
                    vector,
                    method: Method::Sse,
                    pooling,
                },
            ))
        })
        .collect()
}

/// Concatenates each word's source vectors in manifest order, then pools.
pub fn conc_embed<T: Scalar>(corpus: &Corpus<T>, sid: u64, pooling: Pooling) -> Result<Vec<T>> {
    let s = corpus.sentence(sid)?;
    let manifest = corpus.manifest();
    let sources = (0..manifest.n_sources())
        .map(|k| s.source(k, manifest))
        .collect::<Result<Vec<_>>>()?;
    let words: Vec<Vec<T>> = (0..s.len())
        .map(|w| sources.iter().flat_map(|v| v[w].iter().copied()).collect())
        .collect();
    pool_sentence(&words, pooling)
}

/// Sums each word's source vectors after zero-padding to the largest
/// dimension, then pools.
pub fn avg_embed<T: Scalar>(corpus: &Corpus<T>, sid: u64, pooling: Pooling) -> Result<Vec<T>> {
    let s = corpus.sentence(sid)?;
    let manifest = corpus.manifest();
    let width = manifest.max_dim();
    let sources = (0..manifest.n_sources())
        .map(|k| s.source(k, manifest))
        .collect::<Result<Vec<_>>>()?;
    let words: Vec<Vec<T>> = (0..s.len())
        .map(|w| {
            let mut acc = vec![T::zero(); width];
            for v in &sources {
                acc.iter_mut().zip(&v[w]).for_each(|(a, &x)| *a = *a + x);
            }
            acc
        })
        .collect();
    pool_sentence(&words, pooling)
}

/// Pooled sentence vectors of every source: `result[source][sentence]`, in
/// manifest and corpus order.
pub fn source_sentence_vectors<T: Scalar>(
    corpus: &Corpus<T>,
    pooling: Pooling,
) -> Result<Vec<Vec<Vec<T>>>> {
    corpus
        .manifest()
        .sources
        .iter()
        .map(|src| {
            Ok(sse_embed(corpus, &src.id, pooling)?
                .into_iter()
                .map(|(_, e)| e.vector)
                .collect())
        })
        .collect()
}
