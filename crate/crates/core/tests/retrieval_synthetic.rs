use scriptgap::encoder::{gen_synthetic_corpus, SynthConfig, SynthScript, SyntheticCorpus};
use scriptgap::metrics::mrr_at_k;
use scriptgap::mixer::{build_mixed_queries, MixConfig, MixMode};
use scriptgap::retrieval::{Bm25Params, InvertedIndex, Tokenizer, TokenizerMode};
use scriptgap::{Document, Query, RomanizeOptions, TableSet};

fn romanized(queries: &[Query]) -> Vec<Query> {
    build_mixed_queries(queries, &MixConfig::new(MixMode::Transliterated, 0), TableSet::builtin()).unwrap().items
}

fn mrr(corpus: &SyntheticCorpus, index: &InvertedIndex, queries: &[Query]) -> f64 {
    mrr_at_k(&index.search_all(queries, 10, Bm25Params::default()), &corpus.qrels, 10, 1).mean()
}

#[test]
fn han_corpus_shows_the_same_gap() {
    let corpus = gen_synthetic_corpus(&SynthConfig { script: SynthScript::Han, ..SynthConfig::default() });
    // Twenty distinct ideographs make single characters useless as terms;
    // trigrams over the unsegmented text discriminate well.
    let index = InvertedIndex::build(&corpus.docs, Tokenizer::new(TokenizerMode::CharNgram(3)).unwrap()).unwrap();
    let native = mrr(&corpus, &index, &corpus.queries);
    let roman = mrr(&corpus, &index, &romanized(&corpus.queries));
    assert!(native >= 0.9, "native {native}");
    assert_eq!(roman, 0.0);
}

#[test]
fn char_ngrams_also_have_no_cross_script_overlap() {
    let corpus = gen_synthetic_corpus(&SynthConfig::default());
    let index = InvertedIndex::build(&corpus.docs, Tokenizer::new(TokenizerMode::CharNgram(3)).unwrap()).unwrap();
    assert!(mrr(&corpus, &index, &corpus.queries) >= 0.9);
    let run = index.search_all(&romanized(&corpus.queries), 10, Bm25Params::default());
    // Only the shared `^`/`$` padding could match, and padding alone is never
    // a full trigram, so nothing is retrieved.
    assert!(run.is_empty() || run.iter().all(|(_, entries)| entries.is_empty()));
}

#[test]
fn romanizing_both_sides_restores_lexical_match() {
    let corpus = gen_synthetic_corpus(&SynthConfig::default());
    let tables = TableSet::builtin();
    let docs: Vec<Document> = corpus
        .docs
        .iter()
        .map(|d| Document::new(d.docno.clone(), tables.romanize(&d.text, RomanizeOptions::default()).output))
        .collect();
    let index = InvertedIndex::build(&docs, Tokenizer::default()).unwrap();
    assert!(mrr(&corpus, &index, &romanized(&corpus.queries)) >= 0.9);
}

#[test]
fn index_survives_a_trip_through_disk() {
    let corpus = gen_synthetic_corpus(&SynthConfig { n_docs: 80, n_queries: 30, ..SynthConfig::default() });
    let index = InvertedIndex::build(&corpus.docs, Tokenizer::default()).unwrap();
    let path = std::env::temp_dir().join(format!("scriptgap-index-{}.bin", std::process::id()));
    std::fs::write(&path, index.to_bytes()).unwrap();
    let loaded = InvertedIndex::from_bytes(&std::fs::read(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(loaded.dump(), index.dump());
    assert_eq!(
        loaded.search_all(&corpus.queries, 50, Bm25Params::default()),
        index.search_all(&corpus.queries, 50, Bm25Params::default())
    );
}

#[test]
fn truncated_index_is_rejected() {
    let corpus = gen_synthetic_corpus(&SynthConfig { n_docs: 10, n_queries: 2, ..SynthConfig::default() });
    let bytes = InvertedIndex::build(&corpus.docs, Tokenizer::default()).unwrap().to_bytes();
    for cut in [0, 4, bytes.len() / 2, bytes.len() - 1] {
        assert!(InvertedIndex::from_bytes(&bytes[..cut]).is_err(), "accepted {cut} bytes");
    }
}
