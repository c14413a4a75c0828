//! Shared fixtures and reference implementations for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use scriptgap::encoder::{encode_and_rank, gen_synthetic_corpus, train, EncoderParams, SynthConfig, TrainConfig};
use scriptgap::hashing::SplitMix64;
use scriptgap::metrics::{mrr_at_k, PerQueryScores};
use scriptgap::mixer::{build_mixed_queries, build_training_triples, MixConfig, MixMode};
use scriptgap::{Qrels, Run, TableSet};

/// A small evaluation problem kept in plain containers so the reference
/// metrics below never touch the crate's `Run`/`Qrels` types.
#[derive(Debug, Clone)]
pub struct MicroInstance {
    /// Ranked docnos per qid, best first.
    pub ranked: Vec<(String, Vec<String>)>,
    /// `(qid, docno, grade)` judgments.
    pub judgments: Vec<(String, String, u32)>,
}

impl MicroInstance {
    pub fn random(rng: &mut SplitMix64) -> Self {
        let n_queries = 1 + rng.below(10) as usize;
        let n_docs = 1 + rng.below(20) as usize;
        let docs: Vec<String> = (0..n_docs).map(|d| format!("D{d}")).collect();
        let mut ranked = Vec::new();
        let mut judgments = Vec::new();
        for q in 0..n_queries {
            let qid = format!("Q{q}");
            // Roughly one query in eight is missing from the run.
            if rng.below(8) != 0 {
                let mut order = docs.clone();
                rng.shuffle(&mut order);
                order.truncate(rng.below(n_docs as u64 + 1) as usize);
                ranked.push((qid.clone(), order));
            }
            // And one in eight is unjudged.
            if rng.below(8) != 0 {
                for d in &docs {
                    if rng.below(2) == 0 {
                        judgments.push((qid.clone(), d.clone(), rng.below(4) as u32));
                    }
                }
            }
        }
        Self { ranked, judgments }
    }

    pub fn run(&self) -> Run {
        let mut run = Run::new();
        for (qid, docs) in &self.ranked {
            let n = docs.len();
            run.insert_ranked(qid.clone(), docs.iter().enumerate().map(|(i, d)| (d.clone(), (n - i) as f64)).collect());
        }
        run
    }

    pub fn qrels(&self) -> Qrels {
        let mut qrels = Qrels::new();
        for (q, d, g) in &self.judgments {
            qrels.insert(q.clone(), d.clone(), *g);
        }
        qrels
    }

    fn grades(&self, qid: &str) -> HashMap<&str, u32> {
        self.judgments.iter().filter(|(q, _, _)| q == qid).map(|(_, d, g)| (d.as_str(), *g)).collect()
    }

    fn ranking(&self, qid: &str) -> &[String] {
        self.ranked.iter().find(|(q, _)| q == qid).map_or(&[], |(_, r)| r.as_slice())
    }

    /// Judged qids that have at least one positive grade.
    fn scored_qids(&self) -> Vec<String> {
        let mut qids: Vec<String> =
            self.judgments.iter().filter(|(_, _, g)| *g > 0).map(|(q, _, _)| q.clone()).collect();
        qids.sort();
        qids.dedup();
        qids
    }

    pub fn brute_mrr(&self, k: usize) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for qid in self.scored_qids() {
            let grades = self.grades(&qid);
            let mut rr = 0.0;
            for (pos, d) in self.ranking(&qid).iter().enumerate() {
                if pos >= k {
                    break;
                }
                if grades.get(d.as_str()).copied().unwrap_or(0) > 0 {
                    rr = 1.0 / (pos as f64 + 1.0);
                    break;
                }
            }
            out.insert(qid, rr);
        }
        out
    }

    pub fn brute_recall(&self, k: usize) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for qid in self.scored_qids() {
            let grades = self.grades(&qid);
            let total = grades.values().filter(|&&g| g > 0).count() as f64;
            let mut hit = 0.0;
            for d in self.ranking(&qid).iter().take(k) {
                if grades.get(d.as_str()).copied().unwrap_or(0) > 0 {
                    hit += 1.0;
                }
            }
            out.insert(qid, hit / total);
        }
        out
    }

    pub fn brute_ndcg(&self, k: usize) -> BTreeMap<String, f64> {
        let discount = |pos: usize| std::f64::consts::LN_2 / (pos as f64 + 2.0).ln();
        let mut out = BTreeMap::new();
        for qid in self.scored_qids() {
            let grades = self.grades(&qid);
            let mut dcg = 0.0;
            for (pos, d) in self.ranking(&qid).iter().take(k).enumerate() {
                dcg += grades.get(d.as_str()).copied().unwrap_or(0) as f64 * discount(pos);
            }
            // Ideal ordering by repeated selection of the largest remaining grade.
            let mut pool: Vec<u32> = grades.values().copied().collect();
            let mut idcg = 0.0;
            for pos in 0..k.min(pool.len()) {
                let (best, _) = pool.iter().enumerate().max_by_key(|(_, g)| **g).unwrap();
                idcg += pool.swap_remove(best) as f64 * discount(pos);
            }
            out.insert(qid, dcg / idcg);
        }
        out
    }
}

/// Largest absolute difference between two per-query maps; infinite when
/// the key sets differ.
pub fn max_abs_diff(ours: &PerQueryScores, reference: &BTreeMap<String, f64>) -> f64 {
    if ours.scores.keys().ne(reference.keys()) {
        return f64::INFINITY;
    }
    ours.scores.values().zip(reference.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Held-out MRR@10 of one trained configuration.
pub struct ConfigResult {
    pub native: PerQueryScores,
    pub romanized: PerQueryScores,
}

/// Train the toy encoder under `N` and `50` on the default synthetic corpus
/// and score 200 held-out queries in native and romanized form.
pub fn transliterate_train_experiment(seed: u64) -> (ConfigResult, ConfigResult) {
    let tables = TableSet::builtin();
    let corpus = gen_synthetic_corpus(&SynthConfig { seed, ..SynthConfig::default() });
    let (eval_native, qrels) = corpus.sample_queries(seed ^ 0xe7a1, 200, 4, "e");
    let eval_romanized = build_mixed_queries(&eval_native, &MixConfig::new(MixMode::Transliterated, seed), tables)
        .expect("no tolerance set")
        .items;
    let run_config = |mode: MixMode| {
        let triples = build_training_triples(&corpus.triples, &MixConfig::new(mode, seed), tables)
            .expect("no tolerance set")
            .items;
        let config = TrainConfig { seed, ..TrainConfig::default() };
        let report = train(&triples, &corpus.docs, EncoderParams::with_defaults(seed), &config).expect("training");
        ConfigResult {
            native: mrr_at_k(&encode_and_rank(&report.params, &eval_native, &corpus.docs, 10), &qrels, 10, 1),
            romanized: mrr_at_k(&encode_and_rank(&report.params, &eval_romanized, &corpus.docs, 10), &qrels, 10, 1),
        }
    };
    (run_config(MixMode::Native), run_config(MixMode::Mixed50))
}
