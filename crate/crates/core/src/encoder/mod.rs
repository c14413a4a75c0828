//! A small dual encoder over hashed character n-grams.
//!
//! Text is turned into bucket counts of `^`/`$`-padded character n-grams,
//! L2-normalised, and projected by a dense `emb_dim × hash_dim` matrix.
//! Queries and documents share the matrix; relevance is cosine similarity.

mod checkpoint;
mod synth;
mod train;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::corpus::{Document, Query, Run};
use crate::hashing::{fnv1a64, SplitMix64};

pub use checkpoint::CheckpointError;
pub use synth::{gen_synthetic_corpus, SynthConfig, SynthScript, SyntheticCorpus};
pub use train::{batch_loss, grad_check, grad_check_scaled, train, Batch, TrainConfig, TrainError, TrainReport};

/// Bucket counts, sorted by bucket.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseFeatures {
    entries: Vec<(u32, u32)>,
}

impl SparseFeatures {
    pub fn from_counts(counts: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut merged: BTreeMap<u32, u32> = BTreeMap::new();
        for (b, c) in counts {
            *merged.entry(b).or_default() += c;
        }
        Self { entries: merged.into_iter().filter(|&(_, c)| c > 0).collect() }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// `(bucket, weight)` pairs of the L2-normalised count vector.
    pub fn normalized(&self) -> Vec<(u32, f64)> {
        let norm = self.entries.iter().map(|&(_, c)| f64::from(c).powi(2)).sum::<f64>().sqrt();
        self.entries.iter().map(|&(b, c)| (b, f64::from(c) / norm)).collect()
    }
}

/// Hash the padded character n-grams of `text` into `hash_dim` buckets.
///
/// A whitespace-free run shorter than `ngram_n - 2` yields its whole padded
/// form as a single gram.
pub fn featurize(text: &str, ngram_n: usize, hash_dim: usize) -> SparseFeatures {
    let lower = text.to_lowercase();
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    let mut buf = String::new();
    for run in lower.split_whitespace() {
        let padded: Vec<char> = std::iter::once('^').chain(run.chars()).chain(std::iter::once('$')).collect();
        let windows: Box<dyn Iterator<Item = &[char]>> = if padded.len() <= ngram_n {
            Box::new(std::iter::once(&padded[..]))
        } else {
            Box::new(padded.windows(ngram_n))
        };
        for w in windows {
            buf.clear();
            buf.extend(w);
            let bucket = (fnv1a64(buf.as_bytes()) % hash_dim as u64) as u32;
            *counts.entry(bucket).or_default() += 1;
        }
    }
    SparseFeatures { entries: counts.into_iter().collect() }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamsError {
    #[error("hash_dim {0} is not a power of two")]
    HashDim(usize),
    #[error("emb_dim must be positive")]
    EmbDim,
    #[error("ngram_n must be at least 1")]
    Ngram,
}

/// Encoder weights. Logically `W` is `emb_dim × hash_dim`; storage is by
/// column so that a bucket's embedding is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub(crate) hash_dim: usize,
    pub(crate) emb_dim: usize,
    pub(crate) ngram_n: usize,
    pub(crate) seed: u64,
    /// `columns[bucket * emb_dim + row]`
    pub(crate) columns: Vec<f64>,
}

impl EncoderParams {
    pub const DEFAULT_HASH_DIM: usize = 1 << 15;
    pub const DEFAULT_EMB_DIM: usize = 64;
    pub const DEFAULT_NGRAM: usize = 3;
    pub const INIT_RANGE: f64 = 0.05;

    /// Uniform(−0.05, 0.05) weights from a SplitMix64 stream, drawn in
    /// row-major order of `W`.
    pub fn init(hash_dim: usize, emb_dim: usize, ngram_n: usize, seed: u64) -> Result<Self, ParamsError> {
        if !hash_dim.is_power_of_two() {
            return Err(ParamsError::HashDim(hash_dim));
        }
        if emb_dim == 0 {
            return Err(ParamsError::EmbDim);
        }
        if ngram_n == 0 {
            return Err(ParamsError::Ngram);
        }
        let mut rng = SplitMix64::new(seed);
        let mut columns = vec![0.0; hash_dim * emb_dim];
        for row in 0..emb_dim {
            for col in 0..hash_dim {
                columns[col * emb_dim + row] = rng.uniform(-Self::INIT_RANGE, Self::INIT_RANGE);
            }
        }
        Ok(Self { hash_dim, emb_dim, ngram_n, seed, columns })
    }

    pub fn with_defaults(seed: u64) -> Self {
        Self::init(Self::DEFAULT_HASH_DIM, Self::DEFAULT_EMB_DIM, Self::DEFAULT_NGRAM, seed)
            .expect("default dimensions are valid")
    }

    pub fn hash_dim(&self) -> usize {
        self.hash_dim
    }

    pub fn emb_dim(&self) -> usize {
        self.emb_dim
    }

    pub fn ngram_n(&self) -> usize {
        self.ngram_n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `W[row][col]`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col * self.emb_dim + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.columns[col * self.emb_dim + row] = value;
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.columns[col * self.emb_dim..(col + 1) * self.emb_dim]
    }

    pub(crate) fn column_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.columns[col * self.emb_dim..(col + 1) * self.emb_dim]
    }

    pub fn featurize(&self, text: &str) -> SparseFeatures {
        featurize(text, self.ngram_n, self.hash_dim)
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        embed(self, &self.featurize(text))
    }

    pub fn all_finite(&self) -> bool {
        self.columns.iter().all(|v| v.is_finite())
    }
}

/// `W · x̂`; zero for empty features.
pub fn embed(params: &EncoderParams, features: &SparseFeatures) -> Vec<f64> {
    let mut e = vec![0.0; params.emb_dim];
    for (bucket, w) in features.normalized() {
        for (acc, v) in e.iter_mut().zip(params.column(bucket as usize)) {
            *acc += w * v;
        }
    }
    e
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity, 0 when either side is the zero vector.
pub fn score(e_q: &[f64], e_d: &[f64]) -> f64 {
    let (nq, nd) = (norm(e_q), norm(e_d));
    if nq == 0.0 || nd == 0.0 {
        0.0
    } else {
        (dot(e_q, e_d) / (nq * nd)).clamp(-1.0, 1.0)
    }
}

/// Rank every document for every query by cosine; top-`k` per query, ties by docno.
pub fn encode_and_rank(params: &EncoderParams, queries: &[Query], docs: &[Document], k: usize) -> Run {
    let doc_embs: Vec<Vec<f64>> = docs.par_iter().map(|d| params.embed_text(&d.text)).collect();
    let ranked: Vec<(String, Vec<(String, f64)>)> = queries
        .par_iter()
        .map(|q| {
            let qe = params.embed_text(&q.text);
            let mut scored: Vec<(usize, f64)> =
                doc_embs.iter().enumerate().map(|(i, de)| (i, score(&qe, de))).collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| docs[a.0].docno.cmp(&docs[b.0].docno)));
            scored.truncate(k);
            (q.qid.clone(), scored.into_iter().map(|(i, s)| (docs[i].docno.clone(), s)).collect())
        })
        .collect();
    let mut run = Run::new();
    for (qid, list) in ranked {
        run.insert_ranked(qid, list);
    }
    run
}
