//! Seeded synthetic retrieval corpora.
//!
//! A fixed vocabulary of pseudo-words is sampled into documents; each query
//! is a handful of words taken from one document, which is its only relevant
//! document. Everything is a function of the seed.

use std::collections::HashSet;

use crate::corpus::{Document, Qrels, Query, TrainingTriple};
use crate::hashing::SplitMix64;

const CYRILLIC_ALPHABET: [char; 20] =
    ['а', 'б', 'в', 'г', 'д', 'е', 'ж', 'з', 'и', 'к', 'л', 'м', 'н', 'о', 'п', 'р', 'с', 'т', 'у', 'ш'];

const HAN_ALPHABET: [char; 20] = [
    '天', '地', '人', '山', '水', '火', '木', '金', '土', '日', '月', '风', '云', '雨', '花', '草', '鱼', '鸟', '马',
    '牛',
];

const VOCAB_SIZE: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthScript {
    /// Words of 3–8 letters, space separated.
    Cyrillic,
    /// Words of 2–4 ideographs, written without separators.
    Han,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_docs: usize,
    pub doc_len: usize,
    pub n_queries: usize,
    pub query_len: usize,
    pub script: SynthScript,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { seed: 1, n_docs: 500, doc_len: 30, n_queries: 200, query_len: 4, script: SynthScript::Cyrillic }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub config: SynthConfig,
    pub vocabulary: Vec<String>,
    pub docs: Vec<Document>,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
    pub triples: Vec<TrainingTriple>,
    doc_words: Vec<Vec<usize>>,
}

impl SyntheticCorpus {
    fn separator(&self) -> &'static str {
        match self.config.script {
            SynthScript::Cyrillic => " ",
            SynthScript::Han => "",
        }
    }

    /// Words (as vocabulary indices) of document `i`.
    pub fn doc_words(&self, i: usize) -> &[usize] {
        &self.doc_words[i]
    }

    /// Draw fresh queries from the same documents, e.g. for held-out
    /// evaluation. Qids are `{prefix}{i:05}`.
    pub fn sample_queries(&self, seed: u64, n: usize, query_len: usize, prefix: &str) -> (Vec<Query>, Qrels) {
        let mut rng = SplitMix64::new(seed);
        let mut queries = Vec::with_capacity(n);
        let mut qrels = Qrels::new();
        for i in 0..n {
            let qid = format!("{prefix}{i:05}");
            let src = rng.below(self.docs.len() as u64) as usize;
            queries.push(Query::new(&qid, self.query_text(&mut rng, src, query_len)));
            qrels.insert(qid, self.docs[src].docno.clone(), 1);
        }
        (queries, qrels)
    }

    fn query_text(&self, rng: &mut SplitMix64, src: usize, query_len: usize) -> String {
        let words = &self.doc_words[src];
        let mut positions: Vec<usize> = (0..words.len()).collect();
        let take = query_len.min(words.len());
        // Partial Fisher-Yates: first `take` positions are a uniform sample.
        for i in 0..take {
            let j = i + rng.below((positions.len() - i) as u64) as usize;
            positions.swap(i, j);
        }
        positions[..take].iter().map(|&p| self.vocabulary[words[p]].as_str()).collect::<Vec<_>>().join(self.separator())
    }
}

/// Generate documents, queries, qrels and one training triple per query.
pub fn gen_synthetic_corpus(config: &SynthConfig) -> SyntheticCorpus {
    assert!(config.n_docs >= 2, "need at least two documents for negatives");
    let mut rng = SplitMix64::new(config.seed);

    let (alphabet, min_len, max_len): (&[char], u64, u64) = match config.script {
        SynthScript::Cyrillic => (&CYRILLIC_ALPHABET, 3, 8),
        SynthScript::Han => (&HAN_ALPHABET, 2, 4),
    };
    let mut vocabulary = Vec::with_capacity(VOCAB_SIZE);
    let mut seen = HashSet::new();
    while vocabulary.len() < VOCAB_SIZE {
        let len = min_len + rng.below(max_len - min_len + 1);
        let word: String = (0..len).map(|_| alphabet[rng.below(alphabet.len() as u64) as usize]).collect();
        if seen.insert(word.clone()) {
            vocabulary.push(word);
        }
    }

    let doc_words: Vec<Vec<usize>> = (0..config.n_docs)
        .map(|_| (0..config.doc_len).map(|_| rng.below(VOCAB_SIZE as u64) as usize).collect())
        .collect();

    let mut corpus = SyntheticCorpus {
        config: *config,
        vocabulary,
        docs: Vec::new(),
        queries: Vec::new(),
        qrels: Qrels::new(),
        triples: Vec::new(),
        doc_words,
    };
    let sep = corpus.separator();
    corpus.docs = corpus
        .doc_words
        .iter()
        .enumerate()
        .map(|(i, ws)| {
            let text = ws.iter().map(|&w| corpus.vocabulary[w].as_str()).collect::<Vec<_>>().join(sep);
            Document::new(format!("d{i:05}"), text)
        })
        .collect();

    for i in 0..config.n_queries {
        let qid = format!("q{i:05}");
        let src = rng.below(config.n_docs as u64) as usize;
        let text = corpus.query_text(&mut rng, src, config.query_len);
        let mut neg = rng.below(config.n_docs as u64 - 1) as usize;
        if neg >= src {
            neg += 1;
        }
        corpus.qrels.insert(qid.clone(), corpus.docs[src].docno.clone(), 1);
        corpus.triples.push(TrainingTriple {
            qid: qid.clone(),
            query_text: text.clone(),
            pos_docno: corpus.docs[src].docno.clone(),
            neg_docno: corpus.docs[neg].docno.clone(),
        });
        corpus.queries.push(Query::new(qid, text));
    }
    corpus
}
