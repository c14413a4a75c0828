//! Tokenization, inverted indexing and BM25 ranking.

mod persist;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::corpus::{Document, Query, Run};
use crate::romanizer::ScriptClass;

pub use persist::IndexFormatError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RetrievalError {
    #[error("duplicate docno `{0}`")]
    DuplicateDocno(String),
    #[error("n-gram size {0} outside 2..=5")]
    BadNgram(usize),
    #[error("invalid BM25 parameters k1={k1}, b={b}")]
    BadParams { k1: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenizerMode {
    /// Whitespace split, edge punctuation stripped.
    Word,
    /// Every Han code point is a term; other text falls back to `Word`.
    HanChar,
    /// Overlapping character n-grams of each whitespace-free run, padded with `^`/`$`.
    CharNgram(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokenizer {
    pub mode: TokenizerMode,
    pub lowercase: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self { mode: TokenizerMode::Word, lowercase: true }
    }
}

impl Tokenizer {
    pub fn new(mode: TokenizerMode) -> Result<Self, RetrievalError> {
        if let TokenizerMode::CharNgram(n) = mode {
            if !(2..=5).contains(&n) {
                return Err(RetrievalError::BadNgram(n));
            }
        }
        Ok(Self { mode, lowercase: true })
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for run in text.split_whitespace() {
            match self.mode {
                TokenizerMode::Word => self.push_word(run, &mut out),
                TokenizerMode::HanChar => {
                    let mut rest = run;
                    while let Some((i, c)) = rest.char_indices().find(|&(_, c)| ScriptClass::of(c) == ScriptClass::Han)
                    {
                        self.push_word(&rest[..i], &mut out);
                        out.push(c.to_string());
                        rest = &rest[i + c.len_utf8()..];
                    }
                    self.push_word(rest, &mut out);
                }
                TokenizerMode::CharNgram(n) => {
                    let run = if self.lowercase { run.to_lowercase() } else { run.to_string() };
                    let padded: Vec<char> =
                        std::iter::once('^').chain(run.chars()).chain(std::iter::once('$')).collect();
                    if padded.len() <= n {
                        out.push(padded.into_iter().collect());
                    } else {
                        out.extend(padded.windows(n).map(|w| w.iter().collect::<String>()));
                    }
                }
            }
        }
        out
    }

    fn push_word(&self, raw: &str, out: &mut Vec<String>) {
        let word = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if word.is_empty() {
            return;
        }
        out.push(if self.lowercase { word.to_lowercase() } else { word.to_string() });
    }
}

impl fmt::Display for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            TokenizerMode::Word => f.write_str("word")?,
            TokenizerMode::HanChar => f.write_str("han_char")?,
            TokenizerMode::CharNgram(n) => write!(f, "char_ngram({n})")?,
        }
        if !self.lowercase {
            f.write_str(",cased")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self, RetrievalError> {
        if !(k1 > 0.0 && k1.is_finite() && (0.0..=1.0).contains(&b)) {
            return Err(RetrievalError::BadParams { k1, b });
        }
        Ok(Self { k1, b })
    }
}

/// Posting: (document ordinal, term frequency).
pub type Posting = (u32, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    pub(crate) tokenizer: Tokenizer,
    pub(crate) postings: BTreeMap<String, Vec<Posting>>,
    pub(crate) doc_lengths: Vec<u32>,
    pub(crate) docnos: Vec<String>,
    pub(crate) avgdl: f64,
}

impl InvertedIndex {
    pub fn build(docs: &[Document], tokenizer: Tokenizer) -> Result<Self, RetrievalError> {
        let mut seen = HashSet::new();
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut docnos = Vec::with_capacity(docs.len());
        for (ord, doc) in docs.iter().enumerate() {
            if !seen.insert(doc.docno.as_str()) {
                return Err(RetrievalError::DuplicateDocno(doc.docno.clone()));
            }
            let terms = tokenizer.tokenize(&doc.text);
            doc_lengths.push(terms.len() as u32);
            docnos.push(doc.docno.clone());
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in terms {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t).or_default().push((ord as u32, n));
            }
        }
        let avgdl = mean_length(&doc_lengths);
        Ok(Self { tokenizer, postings, doc_lengths, docnos, avgdl })
    }

    pub fn tokenizer(&self) -> Tokenizer {
        self.tokenizer
    }

    pub fn num_docs(&self) -> usize {
        self.docnos.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn docnos(&self) -> &[String] {
        &self.docnos
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn idf(&self, df: usize) -> f64 {
        let n = self.num_docs() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 top-`k`; ties broken by docno, documents without any query term omitted.
    pub fn search(&self, query: &str, k: usize, params: Bm25Params) -> Vec<(String, f64)> {
        if self.docnos.is_empty() || k == 0 {
            return Vec::new();
        }
        let mut scores = vec![0.0f64; self.docnos.len()];
        let mut touched = vec![false; self.docnos.len()];
        for term in self.tokenizer.tokenize(query) {
            let Some(list) = self.postings.get(&term) else { continue };
            let idf = self.idf(list.len());
            for &(ord, tf) in list {
                let ord = ord as usize;
                let tf = f64::from(tf);
                let norm = 1.0 - params.b + params.b * f64::from(self.doc_lengths[ord]) / self.avgdl;
                scores[ord] += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
                touched[ord] = true;
            }
        }
        let mut hits: Vec<(usize, f64)> =
            scores.into_iter().enumerate().filter(|&(i, s)| touched[i] && s > 0.0).collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| self.docnos[a.0].cmp(&self.docnos[b.0])));
        hits.truncate(k);
        hits.into_iter().map(|(i, s)| (self.docnos[i].clone(), s)).collect()
    }

    /// Search every query, in parallel; the result does not depend on scheduling.
    pub fn search_all(&self, queries: &[Query], k: usize, params: Bm25Params) -> Run {
        let results: Vec<_> = queries.par_iter().map(|q| (q.qid.clone(), self.search(&q.text, k, params))).collect();
        let mut run = Run::new();
        for (qid, hits) in results {
            run.insert_ranked(qid, hits);
        }
        run
    }
}

pub(crate) fn mean_length(lengths: &[u32]) -> f64 {
    if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / lengths.len() as f64
    }
}
