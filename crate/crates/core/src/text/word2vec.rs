//! Skip-gram word embeddings with negative sampling, trained single-threaded
//! so the result is a pure function of the corpus and the seed.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array2, ArrayView1};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const VECTOR_MAGIC: &[u8; 5] = b"VSEM1";

#[derive(Debug, Clone)]
pub struct Word2VecConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub learning_rate: f32,
    pub seed: u64,
}

impl Default for Word2VecConfig {
    fn default() -> Self {
        Word2VecConfig {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 5,
            learning_rate: 0.025,
            seed: 17,
        }
    }
}

/// Trained word vectors plus corpus token probabilities.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Array2<f32>,
    /// p(w) over the vocabulary; sums to 1.
    frequencies: Vec<f64>,
    dim: usize,
}

impl EmbeddingSpace {
    /// Assemble a space from raw parts; `counts` are corpus occurrence counts
    /// used to derive p(w).
    pub fn from_parts(tokens: Vec<String>, vectors: Array2<f32>, counts: &[u64]) -> Self {
        assert_eq!(tokens.len(), vectors.nrows());
        assert_eq!(tokens.len(), counts.len());
        let total: u64 = counts.iter().sum();
        let frequencies = if total == 0 {
            vec![1.0 / tokens.len().max(1) as f64; tokens.len()]
        } else {
            counts.iter().map(|&c| c as f64 / total as f64).collect()
        };
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let dim = vectors.ncols();
        EmbeddingSpace {
            tokens,
            index,
            vectors,
            frequencies,
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn vector(&self, index: usize) -> ArrayView1<'_, f32> {
        self.vectors.row(index)
    }

    pub fn vectors(&self) -> &Array2<f32> {
        &self.vectors
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.frequencies[index]
    }
}

fn sigmoid(x: f32) -> f32 {
    if x > 30.0 {
        1.0
    } else if x < -30.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

/// Train skip-gram embeddings with negative sampling.
///
/// Window positions use the usual shrinking random window; negatives are
/// drawn from the unigram distribution raised to 3/4. The learning rate
/// decays linearly over all (epoch, token) steps with a floor of 1e-4 of
/// the initial rate.
pub fn train_word2vec(corpus: &[Vec<String>], config: &Word2VecConfig) -> Result<EmbeddingSpace> {
    assert!(!corpus.is_empty(), "corpus must contain at least one document");
    assert!(config.dim >= 1, "dimension must be at least 1");

    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in corpus {
        for token in doc {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = counts
        .iter()
        .filter(|&(_, &c)| c as usize >= config.min_count)
        .map(|(&t, &c)| (t, c))
        .collect();
    // Deterministic vocabulary order regardless of hash-map iteration.
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let tokens: Vec<String> = vocab.iter().map(|(t, _)| t.to_string()).collect();
    let vocab_counts: Vec<u64> = vocab.iter().map(|&(_, c)| c).collect();
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, &(t, _))| (t, i))
        .collect();

    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|doc| doc.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
        .collect();
    let total_tokens: u64 = docs.iter().map(|d| d.len() as u64).sum();

    // Cumulative table for negative sampling: unigram^(3/4).
    let mut cumulative = Vec::with_capacity(vocab.len());
    let mut acc = 0.0f64;
    for &c in &vocab_counts {
        acc += (c as f64).powf(0.75);
        cumulative.push(acc);
    }
    let cum_total = acc;

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut syn0: Vec<f32> = (0..vocab.len() * dim)
        .map(|_| (rng.random::<f32>() - 0.5) / dim as f32)
        .collect();
    let mut syn1: Vec<f32> = vec![0.0; vocab.len() * dim];

    let train_steps = (total_tokens * config.epochs as u64).max(1);
    let mut processed: u64 = 0;
    let mut err = vec![0.0f32; dim];

    for _ in 0..config.epochs {
        for doc in &docs {
            for (pos, &center) in doc.iter().enumerate() {
                let alpha = config.learning_rate
                    * (1.0 - processed as f32 / (train_steps + 1) as f32).max(1e-4);
                processed += 1;

                let span = rng.random_range(1..=config.window);
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(doc.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let context = doc[ctx_pos];
                    err.iter_mut().for_each(|e| *e = 0.0);
                    let c0 = center * dim;
                    for k in 0..=config.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0f32)
                        } else {
                            let draw = rng.random::<f64>() * cum_total;
                            let t = cumulative.partition_point(|&x| x < draw).min(vocab.len() - 1);
                            if t == context {
                                continue;
                            }
                            (t, 0.0f32)
                        };
                        let t0 = target * dim;
                        let mut f = 0.0f32;
                        for d in 0..dim {
                            f += syn0[c0 + d] * syn1[t0 + d];
                        }
                        let g = (label - sigmoid(f)) * alpha;
                        for d in 0..dim {
                            err[d] += g * syn1[t0 + d];
                            syn1[t0 + d] += g * syn0[c0 + d];
                        }
                    }
                    for d in 0..dim {
                        syn0[c0 + d] += err[d];
                    }
                }
            }
        }
    }

    let vectors = Array2::from_shape_vec((vocab.len(), dim), syn0).expect("shape matches");
    Ok(EmbeddingSpace::from_parts(tokens, vectors, &vocab_counts))
}

/// Write word vectors: magic, u32 vocab size, u32 dim, then per token a
/// u32-length-prefixed UTF-8 token and `dim` f32 values. Little-endian.
pub fn write_embeddings(path: &Path, space: &EmbeddingSpace) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
    w.write_all(VECTOR_MAGIC).map_err(io_err)?;
    w.write_u32::<LittleEndian>(space.len() as u32).map_err(io_err)?;
    w.write_u32::<LittleEndian>(space.dim() as u32).map_err(io_err)?;
    for (i, token) in space.tokens().iter().enumerate() {
        w.write_u32::<LittleEndian>(token.len() as u32).map_err(io_err)?;
        w.write_all(token.as_bytes()).map_err(io_err)?;
        for &v in space.vector(i) {
            w.write_f32::<LittleEndian>(v).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Read back tokens and vectors written by [`write_embeddings`].
pub fn read_embedding_vectors(path: &Path) -> Result<(Vec<String>, Array2<f32>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != VECTOR_MAGIC {
        return Err(Error::BadMagic {
            file: path.display().to_string(),
            expected: "VSEM1",
        });
    }
    let vocab = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    let dim = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    let mut tokens = Vec::with_capacity(vocab);
    let mut values = Vec::with_capacity(vocab * dim);
    for _ in 0..vocab {
        let len = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf).map_err(io_err)?;
        tokens.push(String::from_utf8(buf).map_err(|e| {
            Error::io(path.display().to_string(), std::io::Error::other(e))
        })?);
        for _ in 0..dim {
            values.push(r.read_f32::<LittleEndian>().map_err(io_err)?);
        }
    }
    let vectors = Array2::from_shape_vec((vocab, dim), values)
        .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
    Ok((tokens, vectors))
}
