use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _};
use scriptgap::corpus::{self, RunWarning};
use scriptgap::encoder::{self, Batch, EncoderParams, SynthConfig, SynthScript, TrainConfig};
use scriptgap::metrics::{self, MetricSpec};
use scriptgap::mixer::{build_mixed_queries, build_training_triples, MixConfig, MixMode};
use scriptgap::retrieval::{Bm25Params, InvertedIndex, Tokenizer, TokenizerMode};
use scriptgap::{Query, RomanizeOptions, Run};
use serde::Serialize;

use crate::support::{load_tables, usage, CmdResult, Io, Tag};
use crate::{
    DumpIndexArgs, EvaluateArgs, Format, GapReportArgs, GenSynthArgs, IndexArgs, MixTrainArgs, OverlapArgs,
    RankToyArgs, RomanizeArgs, ScriptArg, SearchArgs, TokenizerArg, TrainToyArgs,
};

fn parse_metric(s: &str) -> CmdResult<MetricSpec> {
    s.parse().map_err(|e| usage(format!("--metric: {e}")))
}

fn parse_mix(s: &str) -> CmdResult<MixMode> {
    s.parse().map_err(|e| usage(format!("--config: {e}")))
}

fn read_run(io: &mut Io, path: &Path, strict: bool) -> CmdResult<Run> {
    let bytes = io.read(path)?;
    let (run, warnings) =
        corpus::read_run(&bytes, strict).with_context(|| format!("run {}", path.display())).input()?;
    for RunWarning { line, message } in warnings {
        eprintln!("warning: {}:{line}: {message}", path.display());
    }
    Ok(run)
}

fn read_queries(io: &mut Io, path: &Path) -> CmdResult<Vec<Query>> {
    let bytes = io.read(path)?;
    corpus::read_queries(&bytes).with_context(|| format!("queries {}", path.display())).input()
}

fn read_docs(io: &mut Io, path: &Path) -> CmdResult<Vec<scriptgap::Document>> {
    let bytes = io.read(path)?;
    corpus::read_collection(&bytes).with_context(|| format!("collection {}", path.display())).input()
}

fn read_qrels(io: &mut Io, path: &Path) -> CmdResult<scriptgap::Qrels> {
    let bytes = io.read(path)?;
    corpus::read_qrels(&bytes).with_context(|| format!("qrels {}", path.display())).input()
}

pub fn romanize(io: &mut Io, a: &RomanizeArgs) -> CmdResult {
    let tables = load_tables(io, &a.tables.tables)?;
    let options = RomanizeOptions { lowercase: a.lowercase };
    let input = io.read(&a.input)?;
    let mut unmapped = 0;
    let out = if a.queries {
        let queries = corpus::read_queries(&input).context("queries").input()?;
        let romanized: Vec<Query> = queries
            .iter()
            .map(|q| {
                let r = tables.romanize(&q.text, options);
                unmapped += r.unmapped_count;
                Query::new(q.qid.clone(), r.output)
            })
            .collect();
        corpus::write_queries(&romanized)
    } else {
        let text = std::str::from_utf8(&input).context("input is not UTF-8").input()?;
        let r = tables.romanize(text, options);
        unmapped = r.unmapped_count;
        r.output
    };
    if unmapped > 0 {
        eprintln!("warning: {unmapped} unmapped characters left in place");
    }
    if let Some(max) = a.max_unmapped {
        if unmapped > max {
            return Err(anyhow!("{unmapped} unmapped characters exceed --max-unmapped {max}")).invalid();
        }
    }
    io.write(a.out.as_deref(), out.as_bytes())
}

pub fn index(io: &mut Io, a: &IndexArgs) -> CmdResult {
    let mode = match a.tokenizer {
        TokenizerArg::Word => TokenizerMode::Word,
        TokenizerArg::HanChar => TokenizerMode::HanChar,
        TokenizerArg::Ngram => TokenizerMode::CharNgram(a.ngram),
    };
    let mut tokenizer = Tokenizer::new(mode).map_err(|e| usage(format!("--ngram: {e}")))?;
    tokenizer.lowercase = !a.cased;
    let docs = read_docs(io, &a.docs)?;
    let index = InvertedIndex::build(&docs, tokenizer).invalid()?;
    eprintln!("indexed {} documents, {} terms ({tokenizer})", index.num_docs(), index.num_terms());
    io.write(Some(&a.out), &index.to_bytes())
}

fn load_index(io: &mut Io, path: &Path) -> CmdResult<InvertedIndex> {
    let bytes = io.read(path)?;
    InvertedIndex::from_bytes(&bytes).with_context(|| format!("index {}", path.display())).input()
}

pub fn search(io: &mut Io, a: &SearchArgs) -> CmdResult {
    let params = Bm25Params::new(a.k1, a.b).map_err(usage)?;
    let index = load_index(io, &a.index)?;
    let queries = read_queries(io, &a.queries)?;
    let run = index.search_all(&queries, a.k, params);
    io.write(a.out.as_deref(), corpus::write_run(&run, &a.tag).as_bytes())
}

pub fn dump_index(io: &mut Io, a: &DumpIndexArgs) -> CmdResult {
    let index = load_index(io, &a.index)?;
    io.write(a.out.as_deref(), index.dump().as_bytes())
}

pub fn evaluate(io: &mut Io, a: &EvaluateArgs) -> CmdResult {
    let specs = a.metrics.iter().map(|m| parse_metric(m)).collect::<CmdResult<Vec<_>>>()?;
    let run = read_run(io, &a.run, a.strict)?;
    let qrels = read_qrels(io, &a.qrels)?;
    let mut out = String::new();
    for spec in &specs {
        let scores = metrics::evaluate(&run, &qrels, spec);
        match a.format {
            Format::Kv => out.push_str(&scores.to_kv(&spec.to_string(), a.per_query)),
            Format::Text => {
                if a.per_query {
                    for (qid, v) in &scores.scores {
                        out.push_str(&format!("{spec}\t{qid}\t{v:.4}\n"));
                    }
                }
                out.push_str(&format!(
                    "{spec}\t{:.4}\t(queries={}, excluded={})\n",
                    scores.mean(),
                    scores.len(),
                    scores.excluded.len()
                ));
            }
        }
    }
    io.write(a.out.as_deref(), out.as_bytes())
}

pub fn gap_report(io: &mut Io, a: &GapReportArgs) -> CmdResult {
    let spec = parse_metric(&a.metric)?;
    let native = read_run(io, &a.native, a.strict)?;
    let translit = read_run(io, &a.translit, a.strict)?;
    let qrels = read_qrels(io, &a.qrels)?;
    let report = metrics::gap_report(&native, &translit, &qrels, &spec, a.m).invalid()?;
    let out = match a.format {
        Format::Text => report.to_text(),
        Format::Kv => report.to_kv(),
    };
    io.write(a.out.as_deref(), out.as_bytes())
}

pub fn overlap(io: &mut Io, a: &OverlapArgs) -> CmdResult {
    if a.k == 0 {
        return Err(usage("--k must be positive"));
    }
    let run_a = read_run(io, &a.a, false)?;
    let run_b = read_run(io, &a.b, false)?;
    let report = metrics::topk_overlap(&run_a, &run_b, a.k, a.threshold);
    io.write(a.out.as_deref(), report.to_kv(a.per_query).as_bytes())
}

#[derive(Serialize)]
struct MixMeta<'a> {
    config: &'a str,
    seed: u64,
    exact_half: bool,
    tables: Vec<(String, String)>,
    romanized_qids: usize,
    total_qids: usize,
    unmapped_total: usize,
    toolkit_version: &'a str,
}

pub fn mix_train(io: &mut Io, a: &MixTrainArgs) -> CmdResult {
    let mode = parse_mix(&a.config)?;
    io.manifest.seed(a.seed);
    let tables = load_tables(io, &a.tables.tables)?;
    let queries = read_queries(io, &a.queries)?;
    let config = MixConfig { mode, seed: a.seed, exact_half: a.exact_half, unmapped_tolerance: a.max_unmapped };
    let outcome = build_mixed_queries(&queries, &config, &tables).invalid()?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let meta = MixMeta {
        config: mode.label(),
        seed: a.seed,
        exact_half: a.exact_half,
        tables: tables.versions().into_iter().map(|(s, v)| (s.to_string(), v)).collect(),
        romanized_qids: outcome.romanized_qids,
        total_qids: outcome.total_qids,
        unmapped_total: outcome.unmapped_total,
        toolkit_version: scriptgap::VERSION,
    };
    io.write(Some(&a.out), corpus::write_queries(&outcome.items).as_bytes())?;
    let mut sidecar = a.out.clone().into_os_string();
    sidecar.push(".meta.json");
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    io.write(Some(&PathBuf::from(sidecar)), json.as_bytes())
}

pub fn gen_synth(io: &mut Io, a: &GenSynthArgs) -> CmdResult {
    if a.n_docs < 2 {
        return Err(usage("--n-docs must be at least 2"));
    }
    if a.doc_len == 0 || a.query_len == 0 || a.query_len > a.doc_len {
        return Err(usage("need 0 < --query-len <= --doc-len"));
    }
    io.manifest.seed(a.seed);
    let config = SynthConfig {
        seed: a.seed,
        n_docs: a.n_docs,
        doc_len: a.doc_len,
        n_queries: a.n_queries,
        query_len: a.query_len,
        script: match a.script {
            ScriptArg::Cyrillic => SynthScript::Cyrillic,
            ScriptArg::Han => SynthScript::Han,
        },
    };
    let corpus = encoder::gen_synthetic_corpus(&config);
    let (eval_queries, eval_qrels) = corpus.sample_queries(a.seed ^ 0xe7a1, a.n_eval, a.query_len, "e");
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display())).input()?;
    let files = [
        ("docs.tsv", corpus::write_collection(&corpus.docs)),
        ("queries.tsv", corpus::write_queries(&corpus.queries)),
        ("qrels.txt", corpus::write_qrels(&corpus.qrels)),
        ("triples.tsv", corpus::write_triples(&corpus.triples)),
        ("eval_queries.tsv", corpus::write_queries(&eval_queries)),
        ("eval_qrels.txt", corpus::write_qrels(&eval_qrels)),
    ];
    for (name, content) in files {
        io.write(Some(&a.out_dir.join(name)), content.as_bytes())?;
    }
    Ok(())
}

pub fn train_toy(io: &mut Io, a: &TrainToyArgs) -> CmdResult {
    let mode = parse_mix(&a.config)?;
    let params = EncoderParams::init(a.hash_dim, a.emb_dim, a.ngram, a.seed).map_err(usage)?;
    io.manifest.seed(a.seed);
    let tables = load_tables(io, &a.tables.tables)?;
    let docs = read_docs(io, &a.docs)?;
    let queries = read_queries(io, &a.queries)?;
    let triples_bytes = io.read(&a.triples)?;
    let triples = corpus::read_triples(&triples_bytes, &queries, &docs).context("triples").input()?;
    let mixed = build_training_triples(&triples, &MixConfig::new(mode, a.seed), &tables).invalid()?;
    for w in &mixed.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("config {mode}: {} of {} training queries romanized", mixed.romanized_qids, mixed.total_qids);
    let config = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        temperature: a.temperature,
        seed: a.seed,
    };

    if a.grad_check {
        let doc_text = docs.iter().map(|d| (d.docno.as_str(), d.text.as_str())).collect();
        let first: Vec<_> = mixed.items.iter().take(a.batch_size.max(1)).collect();
        let batch = Batch::from_triples(&params, &first, &doc_text).invalid()?;
        let err = encoder::grad_check(&params, &batch, a.temperature, 1e-5);
        eprintln!("gradient check: max relative error {err:.3e}");
        if err >= 1e-4 {
            return Err(anyhow!("gradient check failed: {err:.3e} >= 1e-4")).invalid();
        }
    }

    let report = encoder::train(&mixed.items, &docs, params, &config).invalid()?;
    io.write(Some(&a.out), &report.params.to_bytes())?;
    io.write(a.log.as_deref(), report.log().as_bytes())
}

pub fn rank_toy(io: &mut Io, a: &RankToyArgs) -> CmdResult {
    let bytes = io.read(&a.model)?;
    let params = EncoderParams::from_bytes(&bytes).with_context(|| format!("model {}", a.model.display())).input()?;
    let docs = read_docs(io, &a.docs)?;
    let queries = read_queries(io, &a.queries)?;
    let run = encoder::encode_and_rank(&params, &queries, &docs, a.k);
    io.write(a.out.as_deref(), corpus::write_run(&run, &a.tag).as_bytes())
}
