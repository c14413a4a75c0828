//! Native / mixed / romanized training-set construction.
//!
//! `Mixed50` decides per query id with a seeded hash coin, so a query's
//! assignment does not depend on input order or on which other queries are
//! present. `exact_half` instead romanizes the first ⌈n/2⌉ distinct qids of
//! a seeded shuffle.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::corpus::{Query, TrainingTriple};
use crate::hashing::{fnv1a64, splitmix64, SplitMix64};
use crate::romanizer::{detect_script_runs, RomanizeOptions, ScriptClass, TableSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MixMode {
    /// Queries left in their native script.
    Native,
    /// About half of the queries romanized.
    Mixed50,
    /// Every query romanized.
    Transliterated,
}

impl MixMode {
    pub fn label(self) -> &'static str {
        match self {
            MixMode::Native => "N",
            MixMode::Mixed50 => "50",
            MixMode::Transliterated => "T",
        }
    }
}

impl fmt::Display for MixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mix configuration `{0}` (expected N, 50 or T)")]
pub struct BadMixMode(pub String);

impl FromStr for MixMode {
    type Err = BadMixMode;

    fn from_str(s: &str) -> Result<Self, BadMixMode> {
        match s {
            "N" | "n" | "native" => Ok(MixMode::Native),
            "50" | "mixed" => Ok(MixMode::Mixed50),
            "T" | "t" | "translit" => Ok(MixMode::Transliterated),
            _ => Err(BadMixMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixConfig {
    pub mode: MixMode,
    pub seed: u64,
    /// For `Mixed50`: romanize exactly ⌈n/2⌉ distinct qids.
    pub exact_half: bool,
    /// Fail when more unmapped characters than this are produced; `None` only warns.
    pub unmapped_tolerance: Option<usize>,
}

impl MixConfig {
    pub fn new(mode: MixMode, seed: u64) -> Self {
        Self { mode, seed, exact_half: false, unmapped_tolerance: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{unmapped} unmapped characters exceed the tolerance of {tolerance}")]
pub struct TooManyUnmapped {
    pub unmapped: usize,
    pub tolerance: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixOutcome<T> {
    pub items: Vec<T>,
    /// Distinct qids whose text was romanized.
    pub romanized_qids: usize,
    /// Distinct qids seen.
    pub total_qids: usize,
    pub unmapped_total: usize,
    /// One line per romanized text that kept unmapped characters.
    pub warnings: Vec<String>,
}

/// The `Mixed50` coin: romanize iff the low bit of
/// `splitmix64(seed ^ fnv1a64(qid))` is set.
pub fn mixed50_coin(seed: u64, qid: &str) -> bool {
    splitmix64(seed ^ fnv1a64(qid.as_bytes())) & 1 == 1
}

/// Biased coin over the same hash, for probabilities other than one half.
pub(crate) fn biased_coin(seed: u64, qid: &str, p: f64) -> bool {
    let u = (splitmix64(seed ^ fnv1a64(qid.as_bytes())) >> 11) as f64 / (1u64 << 53) as f64;
    u < p
}

#[derive(Debug, Clone, Copy)]
enum Selection {
    Config(MixConfig),
    #[cfg_attr(not(test), allow(dead_code))]
    Probability(u64, f64),
}

/// Which of `qids` (in first-appearance order, deduplicated) get romanized.
fn romanized_set<'q>(qids: &[&'q str], sel: Selection) -> HashSet<&'q str> {
    let mut unique: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for &q in qids {
        if seen.insert(q) {
            unique.push(q);
        }
    }
    match sel {
        Selection::Config(c) => match c.mode {
            MixMode::Native => HashSet::new(),
            MixMode::Transliterated => unique.into_iter().collect(),
            MixMode::Mixed50 if c.exact_half => {
                // Sort first so the choice depends only on the qid set.
                unique.sort_unstable();
                SplitMix64::new(c.seed).shuffle(&mut unique);
                unique.truncate(unique.len().div_ceil(2));
                unique.into_iter().collect()
            }
            MixMode::Mixed50 => unique.into_iter().filter(|q| mixed50_coin(c.seed, q)).collect(),
        },
        Selection::Probability(seed, p) => unique.into_iter().filter(|q| biased_coin(seed, q, p)).collect(),
    }
}

/// Script a native text is written in: its most frequent non-Latin, non-Common
/// class, else Latin when it has any letters.
fn native_tag(text: &str) -> Option<ScriptClass> {
    let mut counts: HashMap<ScriptClass, usize> = HashMap::new();
    for run in detect_script_runs(text) {
        if run.script != ScriptClass::Common {
            let n = text[run.span].chars().filter(|&c| ScriptClass::of(c) == run.script).count();
            *counts.entry(run.script).or_default() += n;
        }
    }
    let latin = counts.remove(&ScriptClass::Latin);
    counts
        .into_iter()
        .max_by_key(|&(s, n)| (n, std::cmp::Reverse(s)))
        .map(|(s, _)| s)
        .or(latin.map(|_| ScriptClass::Latin))
}

struct Transformer<'a> {
    tables: &'a TableSet,
    chosen: HashSet<&'a str>,
    unmapped_total: usize,
    warnings: Vec<String>,
}

impl<'a> Transformer<'a> {
    fn text(&mut self, qid: &str, text: &str) -> (String, Option<ScriptClass>) {
        if !self.chosen.contains(qid) {
            return (text.to_string(), native_tag(text));
        }
        let r = self.tables.romanize(text, RomanizeOptions::default());
        if r.unmapped_count > 0 {
            self.unmapped_total += r.unmapped_count;
            self.warnings.push(format!("qid {qid}: {} unmapped characters", r.unmapped_count));
        }
        (r.output, Some(ScriptClass::Latin))
    }
}

fn run_mix<T, F>(
    items: &[T],
    qid_of: impl Fn(&T) -> &str,
    sel: Selection,
    tolerance: Option<usize>,
    tables: &TableSet,
    mut rebuild: F,
) -> Result<MixOutcome<T>, TooManyUnmapped>
where
    F: FnMut(&T, &mut Transformer<'_>) -> T,
{
    let qids: Vec<&str> = items.iter().map(&qid_of).collect();
    let chosen = romanized_set(&qids, sel);
    let total_qids = qids.iter().collect::<HashSet<_>>().len();
    let romanized_qids = chosen.len();
    let mut t = Transformer { tables, chosen, unmapped_total: 0, warnings: Vec::new() };
    let out: Vec<T> = items.iter().map(|item| rebuild(item, &mut t)).collect();
    if let Some(tolerance) = tolerance {
        if t.unmapped_total > tolerance {
            return Err(TooManyUnmapped { unmapped: t.unmapped_total, tolerance });
        }
    }
    Ok(MixOutcome { items: out, romanized_qids, total_qids, unmapped_total: t.unmapped_total, warnings: t.warnings })
}

fn mix_queries(
    queries: &[Query],
    sel: Selection,
    tolerance: Option<usize>,
    tables: &TableSet,
) -> Result<MixOutcome<Query>, TooManyUnmapped> {
    run_mix(
        queries,
        |q| q.qid.as_str(),
        sel,
        tolerance,
        tables,
        |q, t| {
            let (text, tag) = t.text(&q.qid, &q.text);
            Query { qid: q.qid.clone(), text, script_tag: tag }
        },
    )
}

fn mix_triples(
    triples: &[TrainingTriple],
    sel: Selection,
    tolerance: Option<usize>,
    tables: &TableSet,
) -> Result<MixOutcome<TrainingTriple>, TooManyUnmapped> {
    run_mix(
        triples,
        |t| t.qid.as_str(),
        sel,
        tolerance,
        tables,
        |tr, t| TrainingTriple { query_text: t.text(&tr.qid, &tr.query_text).0, ..tr.clone() },
    )
}

/// Apply a mix configuration to a query set, keeping order.
pub fn build_mixed_queries(
    queries: &[Query],
    config: &MixConfig,
    tables: &TableSet,
) -> Result<MixOutcome<Query>, TooManyUnmapped> {
    mix_queries(queries, Selection::Config(*config), config.unmapped_tolerance, tables)
}

/// Apply a mix configuration to the query side of training triples.
/// Document ids are never touched.
pub fn build_training_triples(
    triples: &[TrainingTriple],
    config: &MixConfig,
    tables: &TableSet,
) -> Result<MixOutcome<TrainingTriple>, TooManyUnmapped> {
    mix_triples(triples, Selection::Config(*config), config.unmapped_tolerance, tables)
}
