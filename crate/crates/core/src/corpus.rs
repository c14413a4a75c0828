//! Readers and writers for the plain-text IR exchange formats.
//!
//! | kind        | line format                          |
//! |-------------|--------------------------------------|
//! | queries     | `qid<TAB>text`                       |
//! | collection  | `docno<TAB>text`                     |
//! | qrels       | `qid 0 docno grade`                  |
//! | run         | `qid Q0 docno rank score tag`        |
//! | triples     | `qid<TAB>pos_docno<TAB>neg_docno`    |
//!
//! Input may use `\r\n`; output always uses `\n`. Every parse error carries
//! the 1-based line number it was found on.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::romanizer::ScriptClass;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: invalid UTF-8")]
    Utf8 { line: usize },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate id `{id}`")]
    Duplicate { line: usize, id: String },
    #[error("line {line}: grade `{value}` is not a non-negative integer")]
    BadGrade { line: usize, value: String },
    #[error("line {line}: query `{qid}` expected rank {expected}, found {found}")]
    RankGap { line: usize, qid: String, expected: usize, found: usize },
    #[error("line {line}: query `{qid}` score increases with rank")]
    ScoreIncrease { line: usize, qid: String },
    #[error("line {line}: unknown {kind} `{id}`")]
    Dangling { line: usize, kind: &'static str, id: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub qid: String,
    pub text: String,
    /// Which script form the text holds, when known.
    pub script_tag: Option<ScriptClass>,
}

impl Query {
    pub fn new(qid: impl Into<String>, text: impl Into<String>) -> Self {
        Self { qid: qid.into(), text: text.into(), script_tag: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub docno: String,
    pub text: String,
}

impl Document {
    pub fn new(docno: impl Into<String>, text: impl Into<String>) -> Self {
        Self { docno: docno.into(), text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingTriple {
    pub qid: String,
    pub query_text: String,
    pub pos_docno: String,
    pub neg_docno: String,
}

/// Graded relevance judgments. Absent pairs have grade 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qid: impl Into<String>, docno: impl Into<String>, grade: u32) {
        self.judgments.entry(qid.into()).or_default().insert(docno.into(), grade);
    }

    pub fn grade(&self, qid: &str, docno: &str) -> u32 {
        self.judgments.get(qid).and_then(|m| m.get(docno)).copied().unwrap_or(0)
    }

    pub fn for_query(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(qid)
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, u32>)> {
        self.judgments.iter().map(|(q, m)| (q.as_str(), m))
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub docno: String,
    pub score: f64,
    pub rank: usize,
}

/// Ranked results per query. Ranks are 1..n, scores non-increasing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    results: BTreeMap<String, Vec<RunEntry>>,
}

impl Run {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record an already-ordered result list for `qid`, assigning ranks 1..n.
    pub fn insert_ranked(&mut self, qid: impl Into<String>, ranked: Vec<(String, f64)>) {
        let entries =
            ranked.into_iter().enumerate().map(|(i, (docno, score))| RunEntry { docno, score, rank: i + 1 }).collect();
        self.results.insert(qid.into(), entries);
    }

    pub fn get(&self, qid: &str) -> Option<&[RunEntry]> {
        self.results.get(qid).map(Vec::as_slice)
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.results.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[RunEntry])> {
        self.results.iter().map(|(q, v)| (q.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}

/// Non-fatal findings from a lenient run read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunWarning {
    pub line: usize,
    pub message: String,
}

/// Content lines with their 1-based numbers; blank lines are skipped.
fn lines(bytes: &[u8]) -> Result<Vec<(usize, &str)>, CorpusError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CorpusError::Utf8 {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
    })?;
    Ok(text
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect())
}

fn malformed(line: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::Malformed { line, reason: reason.into() }
}

fn id_and_text(line: usize, l: &str, what: &str) -> Result<(String, String), CorpusError> {
    let (id, text) = l.split_once('\t').ok_or_else(|| malformed(line, format!("expected `{what}<TAB>text`")))?;
    if id.is_empty() {
        return Err(malformed(line, format!("empty {what}")));
    }
    Ok((id.to_string(), text.to_string()))
}

pub fn read_queries(bytes: &[u8]) -> Result<Vec<Query>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, l) in lines(bytes)? {
        let (qid, text) = id_and_text(line, l, "qid")?;
        if !seen.insert(qid.clone()) {
            return Err(CorpusError::Duplicate { line, id: qid });
        }
        out.push(Query { qid, text, script_tag: None });
    }
    Ok(out)
}

pub fn write_queries(queries: &[Query]) -> String {
    queries.iter().fold(String::new(), |mut s, q| {
        let _ = writeln!(s, "{}\t{}", q.qid, q.text);
        s
    })
}

pub fn read_collection(bytes: &[u8]) -> Result<Vec<Document>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, l) in lines(bytes)? {
        let (docno, text) = id_and_text(line, l, "docno")?;
        if !seen.insert(docno.clone()) {
            return Err(CorpusError::Duplicate { line, id: docno });
        }
        out.push(Document { docno, text });
    }
    Ok(out)
}

pub fn write_collection(docs: &[Document]) -> String {
    docs.iter().fold(String::new(), |mut s, d| {
        let _ = writeln!(s, "{}\t{}", d.docno, d.text);
        s
    })
}

/// TREC qrels; later lines for the same pair overwrite earlier ones.
pub fn read_qrels(bytes: &[u8]) -> Result<Qrels, CorpusError> {
    let mut qrels = Qrels::new();
    for (line, l) in lines(bytes)? {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(malformed(line, "expected `qid 0 docno grade`"));
        }
        let grade =
            fields[3].parse::<u32>().map_err(|_| CorpusError::BadGrade { line, value: fields[3].to_string() })?;
        qrels.insert(fields[0], fields[2], grade);
    }
    Ok(qrels)
}

pub fn write_qrels(qrels: &Qrels) -> String {
    let mut s = String::new();
    for (qid, docs) in qrels.iter() {
        for (docno, grade) in docs {
            let _ = writeln!(s, "{qid} 0 {docno} {grade}");
        }
    }
    s
}

/// Serialize in canonical form: qids sorted, entries in rank order, scores to 6 places.
pub fn write_run(run: &Run, tag: &str) -> String {
    let mut s = String::new();
    for (qid, entries) in run.iter() {
        for e in entries {
            let _ = writeln!(s, "{qid} Q0 {} {} {:.6} {tag}", e.docno, e.rank, e.score);
        }
    }
    s
}

/// Parse a TREC run.
///
/// In strict mode rank gaps and score increases are errors. Otherwise they
/// are reported as warnings and each query's entries are renumbered 1..n in
/// rank order.
pub fn read_run(bytes: &[u8], strict: bool) -> Result<(Run, Vec<RunWarning>), CorpusError> {
    let mut raw: BTreeMap<String, Vec<(usize, RunEntry)>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (line, l) in lines(bytes)? {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() < 5 {
            return Err(malformed(line, "expected `qid Q0 docno rank score tag`"));
        }
        let rank = f[3]
            .parse::<usize>()
            .ok()
            .filter(|&r| r >= 1)
            .ok_or_else(|| malformed(line, format!("bad rank `{}`", f[3])))?;
        let score = f[4]
            .parse::<f64>()
            .ok()
            .filter(|s| s.is_finite())
            .ok_or_else(|| malformed(line, format!("bad score `{}`", f[4])))?;
        if !seen.insert((f[0].to_string(), f[2].to_string())) {
            return Err(CorpusError::Duplicate { line, id: format!("{} {}", f[0], f[2]) });
        }
        raw.entry(f[0].to_string()).or_default().push((line, RunEntry { docno: f[2].to_string(), score, rank }));
    }

    let mut run = Run::new();
    let mut warnings = Vec::new();
    for (qid, mut entries) in raw {
        entries.sort_by_key(|(_, e)| e.rank);
        let mut prev_score = f64::INFINITY;
        for (i, (line, e)) in entries.iter_mut().enumerate() {
            let expected = i + 1;
            if e.rank != expected {
                if strict {
                    return Err(CorpusError::RankGap { line: *line, qid, expected, found: e.rank });
                }
                warnings.push(RunWarning {
                    line: *line,
                    message: format!("query `{qid}`: rank {} renumbered to {expected}", e.rank),
                });
                e.rank = expected;
            }
            if e.score > prev_score {
                if strict {
                    return Err(CorpusError::ScoreIncrease { line: *line, qid });
                }
                warnings.push(RunWarning {
                    line: *line,
                    message: format!("query `{qid}`: score increases at rank {expected}"),
                });
            }
            prev_score = e.score;
        }
        run.results.insert(qid, entries.into_iter().map(|(_, e)| e).collect());
    }
    Ok((run, warnings))
}

/// Parse training triples, resolving query text and checking every reference.
pub fn read_triples(bytes: &[u8], queries: &[Query], docs: &[Document]) -> Result<Vec<TrainingTriple>, CorpusError> {
    let qtext: HashMap<&str, &str> = queries.iter().map(|q| (q.qid.as_str(), q.text.as_str())).collect();
    let docnos: HashSet<&str> = docs.iter().map(|d| d.docno.as_str()).collect();
    let mut out = Vec::new();
    for (line, l) in lines(bytes)? {
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 3 {
            return Err(malformed(line, "expected `qid<TAB>pos_docno<TAB>neg_docno`"));
        }
        let text = qtext.get(f[0]).ok_or_else(|| CorpusError::Dangling { line, kind: "qid", id: f[0].to_string() })?;
        for id in &f[1..] {
            if !docnos.contains(id) {
                return Err(CorpusError::Dangling { line, kind: "docno", id: id.to_string() });
            }
        }
        if f[1] == f[2] {
            return Err(malformed(line, "positive and negative document are the same"));
        }
        out.push(TrainingTriple {
            qid: f[0].to_string(),
            query_text: text.to_string(),
            pos_docno: f[1].to_string(),
            neg_docno: f[2].to_string(),
        });
    }
    Ok(out)
}

pub fn write_triples(triples: &[TrainingTriple]) -> String {
    triples.iter().fold(String::new(), |mut s, t| {
        let _ = writeln!(s, "{}\t{}\t{}", t.qid, t.pos_docno, t.neg_docno);
        s
    })
}
