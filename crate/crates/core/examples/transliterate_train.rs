//! Desk-scale transliterate-train experiment on the synthetic Cyrillic corpus.
//!
//! Trains the toy encoder under the N and 50 configurations and reports
//! MRR@10 of held-out native and romanized queries.
//!
//!     cargo run --release -p scriptgap-core --example transliterate_train -- [seed] [epochs] [lr]

use std::time::Instant;

use scriptgap::encoder::{encode_and_rank, gen_synthetic_corpus, train, EncoderParams, SynthConfig, TrainConfig};
use scriptgap::metrics::{mrr_at_k, paired_t_test};
use scriptgap::mixer::{build_mixed_queries, build_training_triples, MixConfig, MixMode};
use scriptgap::TableSet;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(30);
    let lr: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let tables = TableSet::builtin();

    let corpus = gen_synthetic_corpus(&SynthConfig { seed, ..SynthConfig::default() });
    let (eval_native, qrels) = corpus.sample_queries(seed ^ 0xe7a1, 200, 4, "e");
    let eval_translit =
        build_mixed_queries(&eval_native, &MixConfig::new(MixMode::Transliterated, seed), tables).unwrap().items;

    let mut results = Vec::new();
    for mode in [MixMode::Native, MixMode::Mixed50] {
        let start = Instant::now();
        let triples = build_training_triples(&corpus.triples, &MixConfig::new(mode, seed), tables).unwrap().items;
        let cfg = TrainConfig { epochs, learning_rate: lr, seed, ..TrainConfig::default() };
        let report = train(&triples, &corpus.docs, EncoderParams::with_defaults(seed), &cfg).unwrap();
        let native = mrr_at_k(&encode_and_rank(&report.params, &eval_native, &corpus.docs, 10), &qrels, 10, 1);
        let translit = mrr_at_k(&encode_and_rank(&report.params, &eval_translit, &corpus.docs, 10), &qrels, 10, 1);
        println!(
            "config {mode:>2}: native {:.4}  romanized {:.4}  first/last loss {:.3}/{:.3}  ({:.1?})",
            native.mean(),
            translit.mean(),
            report.epoch_losses[0],
            report.epoch_losses.last().unwrap(),
            start.elapsed()
        );
        results.push((native, translit));
    }
    let (n, f) = (&results[0], &results[1]);
    println!("p(N native vs N romanized)  = {:.3e}", paired_t_test(&n.0.scores, &n.1.scores).unwrap());
    println!("p(50 romanized vs N romanized) = {:.3e}", paired_t_test(&f.1.scores, &n.1.scores).unwrap());
    println!("p(50 native vs N native)    = {:.3e}", paired_t_test(&f.0.scores, &n.0.scores).unwrap());
}
