//! Evaluation measures, significance testing, script-gap reports and top-k
//! overlap.
//!
//! Queries are evaluated over the qrels: every judged query with at least one
//! relevant document gets a score (0 when the run has nothing for it). Run
//! queries without judgments, and judged queries without any relevant
//! document, are excluded and listed in [`PerQueryScores::excluded`].

mod stats;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::corpus::{Qrels, Run, RunEntry};

pub use stats::{
    bonferroni, ln_gamma, paired_t_test, regularized_incomplete_beta, student_t_two_sided, t_test_differences,
    StatsError,
};

/// Name of the significance test recorded in every gap report.
pub const SIGNIFICANCE_TEST: &str = "paired t-test (two-sided)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Mrr,
    Recall,
    Ndcg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Gain {
    /// g(x) = x
    #[default]
    Linear,
    /// g(x) = 2^x - 1
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub cutoff: usize,
    pub rel_threshold: u32,
    pub gain: Gain,
}

impl MetricSpec {
    pub fn mrr(cutoff: usize) -> Self {
        Self { kind: MetricKind::Mrr, cutoff, rel_threshold: 1, gain: Gain::Linear }
    }

    pub fn recall(cutoff: usize) -> Self {
        Self { kind: MetricKind::Recall, cutoff, rel_threshold: 1, gain: Gain::Linear }
    }

    pub fn ndcg(cutoff: usize) -> Self {
        Self { kind: MetricKind::Ndcg, cutoff, rel_threshold: 1, gain: Gain::Linear }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.gain) {
            (MetricKind::Mrr, _) => write!(f, "MRR@{}", self.cutoff)?,
            (MetricKind::Recall, _) => write!(f, "R@{}", self.cutoff)?,
            (MetricKind::Ndcg, Gain::Linear) => write!(f, "nDCG@{}", self.cutoff)?,
            (MetricKind::Ndcg, Gain::Exponential) => write!(f, "nDCG_exp@{}", self.cutoff)?,
        }
        if self.rel_threshold != 1 && self.kind != MetricKind::Ndcg {
            write!(f, ",rel={}", self.rel_threshold)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad metric `{0}` (expected e.g. mrr@10, recall@1000, ndcg@20, ndcg_exp@20, optionally `,rel=2`)")]
pub struct BadMetric(pub String);

impl FromStr for MetricSpec {
    type Err = BadMetric;

    /// Accepts `mrr@10`, `recall@1000` / `r@1000`, `ndcg@20`, `ndcg_exp@20`,
    /// each optionally followed by `,rel=N`.
    fn from_str(s: &str) -> Result<Self, BadMetric> {
        let bad = || BadMetric(s.to_string());
        let lower = s.to_ascii_lowercase();
        let (main, rel) = match lower.split_once(',') {
            Some((m, r)) => {
                let v = r.strip_prefix("rel=").ok_or_else(bad)?;
                (m, v.parse::<u32>().ok().filter(|&v| v >= 1).ok_or_else(bad)?)
            }
            None => (lower.as_str(), 1),
        };
        let (name, cutoff) = main.split_once('@').ok_or_else(bad)?;
        let cutoff = cutoff.parse::<usize>().ok().filter(|&c| c >= 1).ok_or_else(bad)?;
        let (kind, gain) = match name {
            "mrr" | "rr" => (MetricKind::Mrr, Gain::Linear),
            "recall" | "r" => (MetricKind::Recall, Gain::Linear),
            "ndcg" => (MetricKind::Ndcg, Gain::Linear),
            "ndcg_exp" => (MetricKind::Ndcg, Gain::Exponential),
            _ => return Err(bad()),
        };
        Ok(Self { kind, cutoff, rel_threshold: rel, gain })
    }
}

/// Per-query values of one measure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerQueryScores {
    pub scores: BTreeMap<String, f64>,
    /// Queries left out of the average (no judgments or nothing relevant).
    pub excluded: Vec<String>,
}

impl PerQueryScores {
    /// Mean over evaluated queries, summed in qid order; 0 when empty.
    pub fn mean(&self) -> f64 {
        if self.scores.is_empty() {
            0.0
        } else {
            self.scores.values().sum::<f64>() / self.scores.len() as f64
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `measure<TAB>qid<TAB>value` lines, per query when requested, then `ALL`.
    pub fn to_kv(&self, measure: &str, per_query: bool) -> String {
        let mut s = String::new();
        if per_query {
            for (qid, v) in &self.scores {
                let _ = writeln!(s, "{measure}\t{qid}\t{v:.6}");
            }
        }
        let _ = writeln!(s, "{measure}\tALL\t{:.6}", self.mean());
        s
    }
}

fn ranked(run: &Run, qid: &str) -> Vec<RunEntry> {
    let mut entries: Vec<RunEntry> = run.get(qid).map(<[RunEntry]>::to_vec).unwrap_or_default();
    entries.sort_by_key(|e| e.rank);
    entries
}

/// Evaluate `per_query` on every judged query that `has_relevant` accepts.
fn evaluate_with(
    run: &Run,
    qrels: &Qrels,
    has_relevant: impl Fn(&BTreeMap<String, u32>) -> bool,
    per_query: impl Fn(&[RunEntry], &BTreeMap<String, u32>) -> f64,
) -> PerQueryScores {
    let mut out = PerQueryScores::default();
    let mut excluded: BTreeSet<String> =
        run.qids().filter(|q| qrels.for_query(q).is_none()).map(String::from).collect();
    for (qid, judged) in qrels.iter() {
        if !has_relevant(judged) {
            excluded.insert(qid.to_string());
            continue;
        }
        out.scores.insert(qid.to_string(), per_query(&ranked(run, qid), judged));
    }
    out.excluded = excluded.into_iter().collect();
    out
}

pub fn mrr_at_k(run: &Run, qrels: &Qrels, k: usize, rel_threshold: u32) -> PerQueryScores {
    evaluate_with(
        run,
        qrels,
        |j| j.values().any(|&g| g >= rel_threshold),
        |entries, judged| {
            entries
                .iter()
                .take(k)
                .position(|e| judged.get(&e.docno).is_some_and(|&g| g >= rel_threshold))
                .map_or(0.0, |i| 1.0 / (i + 1) as f64)
        },
    )
}

pub fn recall_at_k(run: &Run, qrels: &Qrels, k: usize, rel_threshold: u32) -> PerQueryScores {
    evaluate_with(
        run,
        qrels,
        |j| j.values().any(|&g| g >= rel_threshold),
        |entries, judged| {
            let relevant = judged.values().filter(|&&g| g >= rel_threshold).count();
            let found =
                entries.iter().take(k).filter(|e| judged.get(&e.docno).is_some_and(|&g| g >= rel_threshold)).count();
            found as f64 / relevant as f64
        },
    )
}

fn gain_of(gain: Gain, grade: u32) -> f64 {
    match gain {
        Gain::Linear => f64::from(grade),
        Gain::Exponential => 2f64.powi(grade as i32) - 1.0,
    }
}

pub fn ndcg_at_k(run: &Run, qrels: &Qrels, k: usize, gain: Gain) -> PerQueryScores {
    evaluate_with(
        run,
        qrels,
        |j| j.values().any(|&g| g > 0),
        |entries, judged| {
            let dcg: f64 = entries
                .iter()
                .take(k)
                .enumerate()
                .map(|(i, e)| gain_of(gain, judged.get(&e.docno).copied().unwrap_or(0)) / ((i + 2) as f64).log2())
                .sum();
            let mut ideal: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
            ideal.sort_unstable_by(|a, b| b.cmp(a));
            let idcg: f64 =
                ideal.iter().take(k).enumerate().map(|(i, &g)| gain_of(gain, g) / ((i + 2) as f64).log2()).sum();
            dcg / idcg
        },
    )
}

pub fn evaluate(run: &Run, qrels: &Qrels, metric: &MetricSpec) -> PerQueryScores {
    match metric.kind {
        MetricKind::Mrr => mrr_at_k(run, qrels, metric.cutoff, metric.rel_threshold),
        MetricKind::Recall => recall_at_k(run, qrels, metric.cutoff, metric.rel_threshold),
        MetricKind::Ndcg => ndcg_at_k(run, qrels, metric.cutoff, metric.gain),
    }
}

/// `(native - transliterated) / native`, or 0 when the native mean is 0.
pub fn relative_drop(native_mean: f64, translit_mean: f64) -> f64 {
    if native_mean > 0.0 {
        (native_mean - translit_mean) / native_mean
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub metric: MetricSpec,
    pub native_mean: f64,
    pub translit_mean: f64,
    pub relative_drop: f64,
    pub raw_p: f64,
    pub corrected_p: f64,
    pub m: usize,
    pub n_queries: usize,
    pub test: &'static str,
}

impl GapReport {
    pub fn to_text(&self) -> String {
        format!(
            "metric         {}\nqueries        {}\nnative         {:.4}\ntransliterated {:.4}\nrelative drop  {:.2}%\ntest           {}\nraw p          {:.6}\ncorrected p    {:.6} (Bonferroni, m={})\n",
            self.metric,
            self.n_queries,
            self.native_mean,
            self.translit_mean,
            self.relative_drop * 100.0,
            self.test,
            self.raw_p,
            self.corrected_p,
            self.m
        )
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let name = self.metric.to_string();
        for (key, value) in [
            ("native", self.native_mean),
            ("translit", self.translit_mean),
            ("relative_drop", self.relative_drop),
            ("raw_p", self.raw_p),
            ("corrected_p", self.corrected_p),
        ] {
            let _ = writeln!(s, "{name}:{key}\tALL\t{value:.6}");
        }
        let _ = writeln!(s, "m\tALL\t{}", self.m);
        let _ = writeln!(s, "n_queries\tALL\t{}", self.n_queries);
        s
    }
}

/// Compare the same queries issued in native and transliterated form.
pub fn gap_report(
    native_run: &Run,
    translit_run: &Run,
    qrels: &Qrels,
    metric: &MetricSpec,
    m: usize,
) -> Result<GapReport, StatsError> {
    let native = evaluate(native_run, qrels, metric);
    let translit = evaluate(translit_run, qrels, metric);
    let raw_p = paired_t_test(&native.scores, &translit.scores)?;
    let (native_mean, translit_mean) = (native.mean(), translit.mean());
    Ok(GapReport {
        metric: *metric,
        native_mean,
        translit_mean,
        relative_drop: relative_drop(native_mean, translit_mean),
        raw_p,
        corrected_p: bonferroni(raw_p, m)?,
        m,
        n_queries: native.len(),
        test: SIGNIFICANCE_TEST,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapReport {
    pub k: usize,
    pub threshold: usize,
    /// |top-k(a) ∩ top-k(b)| per query.
    pub per_query: BTreeMap<String, usize>,
    /// `histogram[j]` = number of queries with overlap j, for j in 0..=k.
    pub histogram: Vec<usize>,
    /// Queries with overlap <= threshold.
    pub at_or_below: usize,
}

impl OverlapReport {
    pub fn to_kv(&self, per_query: bool) -> String {
        let mut s = String::new();
        let k = self.k;
        if per_query {
            for (qid, v) in &self.per_query {
                let _ = writeln!(s, "overlap@{k}\t{qid}\t{v}");
            }
        }
        let mean = if self.per_query.is_empty() {
            0.0
        } else {
            self.per_query.values().sum::<usize>() as f64 / self.per_query.len() as f64
        };
        let _ = writeln!(s, "overlap@{k}\tALL\t{mean:.6}");
        for (j, n) in self.histogram.iter().enumerate() {
            let _ = writeln!(s, "overlap@{k}={j}\tALL\t{n}");
        }
        let _ = writeln!(s, "overlap@{k}<={}\tALL\t{}", self.threshold, self.at_or_below);
        s
    }
}

/// Top-k overlap between two runs over the union of their queries; a query
/// missing from one run has an empty list there.
pub fn topk_overlap(run_a: &Run, run_b: &Run, k: usize, threshold: usize) -> OverlapReport {
    let qids: BTreeSet<&str> = run_a.qids().chain(run_b.qids()).collect();
    let mut per_query = BTreeMap::new();
    let mut histogram = vec![0; k + 1];
    for qid in qids {
        let top_a: HashSet<String> = ranked(run_a, qid).into_iter().take(k).map(|e| e.docno).collect();
        let shared = ranked(run_b, qid).into_iter().take(k).filter(|e| top_a.contains(&e.docno)).count();
        histogram[shared] += 1;
        per_query.insert(qid.to_string(), shared);
    }
    let at_or_below = per_query.values().filter(|&&v| v <= threshold).count();
    OverlapReport { k, threshold, per_query, histogram, at_or_below }
}
