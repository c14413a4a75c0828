//! Rule tables: parsing, validation and ordering.
//!
//! File format, one rule per line:
//!
//! ```text
//! !script cyrillic
//! !version ru-1          (optional)
//! # comment
//! source<TAB>target[<TAB>left_ctx][<TAB>right_ctx]
//! ```
//!
//! Contexts are `vowel`, `consonant` or `boundary`; an empty field or `_`
//! means "no constraint". Sources are matched case-insensitively and stored
//! lowercased.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::script::ScriptClass;
use crate::hashing::fnv1a64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleTableError {
    #[error("rule file is not valid UTF-8")]
    InvalidUtf8,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate rule (first defined on line {first})")]
    Duplicate { line: usize, first: usize },
    #[error("line {line}: target `{target}` is not printable ASCII")]
    NonAsciiTarget { line: usize, target: String },
    #[error("rule file has no `!script` header")]
    MissingScript,
    #[error("line {line}: unknown or unsupported script `{name}`")]
    UnknownScript { line: usize, name: String },
}

/// Single-character context predicate evaluated against the original input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Context {
    Vowel,
    Consonant,
    /// Start/end of text or any non-letter.
    Boundary,
}

impl Context {
    pub fn holds(self, neighbour: Option<char>) -> bool {
        match (self, neighbour) {
            (Context::Boundary, None) => true,
            (Context::Boundary, Some(c)) => !c.is_alphabetic(),
            (_, None) => false,
            (Context::Vowel, Some(c)) => is_vowel(c),
            (Context::Consonant, Some(c)) => c.is_alphabetic() && !is_vowel(c),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Context::Vowel => "vowel",
            Context::Consonant => "consonant",
            Context::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Context {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "vowel" => Ok(Context::Vowel),
            "consonant" => Ok(Context::Consonant),
            "boundary" => Ok(Context::Boundary),
            _ => Err(()),
        }
    }
}

const VOWELS: &str = "aeiouyаеёиоуыэюяіїєαεηιουωάέήίόύώϊϋΐΰ";

fn is_vowel(c: char) -> bool {
    VOWELS.contains(fold_char(c))
}

/// Lowercase a single character, keeping it unchanged when the mapping is not 1:1.
pub(crate) fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    /// Lowercased source characters.
    pub source: Vec<char>,
    pub target: String,
    pub left_ctx: Option<Context>,
    pub right_ctx: Option<Context>,
    pub line_no: usize,
}

impl Rule {
    pub fn source_str(&self) -> String {
        self.source.iter().collect()
    }
}

/// An ordered, validated set of rewrite rules for one script.
/// Source and contexts; two rules sharing a key are duplicates.
type RuleKey = (Vec<char>, Option<Context>, Option<Context>);

#[derive(Debug, Clone)]
pub struct RuleTable {
    script: ScriptClass,
    version: String,
    /// Descending source length, then ascending line number.
    rules: Vec<Rule>,
    /// First source character -> indices into `rules`, already in priority order.
    by_first: HashMap<char, Vec<usize>>,
}

impl RuleTable {
    pub fn script(&self) -> ScriptClass {
        self.script
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Candidate rules whose source starts with `first` (already folded), in priority order.
    pub(crate) fn candidates(&self, first: char) -> impl Iterator<Item = &Rule> {
        self.by_first.get(&first).into_iter().flatten().map(move |&i| &self.rules[i])
    }

    /// Parse and validate a rule file.
    pub fn parse(bytes: &[u8]) -> Result<Self, RuleTableError> {
        let text = std::str::from_utf8(bytes).map_err(|_| RuleTableError::InvalidUtf8)?;
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);

        let mut script = None;
        let mut version = None;
        let mut rules = Vec::new();
        let mut seen: HashMap<RuleKey, usize> = HashMap::new();

        for (idx, raw) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            let trimmed = line.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(directive) = trimmed.strip_prefix('!') {
                let mut parts = directive.split_whitespace();
                let key = parts.next().unwrap_or("");
                let value = parts.next();
                if parts.next().is_some() {
                    return Err(malformed(line_no, "directive takes one argument"));
                }
                match (key, value) {
                    ("script", Some(name)) => {
                        if script.is_some() {
                            return Err(malformed(line_no, "repeated `!script` header"));
                        }
                        script = Some(parse_script(name, line_no)?);
                    }
                    ("version", Some(v)) => version = Some(v.to_string()),
                    _ => return Err(malformed(line_no, format!("unknown directive `!{directive}`"))),
                }
                continue;
            }

            let Some(script) = script else {
                return Err(RuleTableError::MissingScript);
            };
            let rule = parse_rule(line, line_no, script)?;
            let key = (rule.source.clone(), rule.left_ctx, rule.right_ctx);
            if let Some(&first) = seen.get(&key) {
                return Err(RuleTableError::Duplicate { line: line_no, first });
            }
            seen.insert(key, line_no);
            rules.push(rule);
        }

        let script = script.ok_or(RuleTableError::MissingScript)?;
        let version = version.unwrap_or_else(|| format!("fnv-{:016x}", fnv1a64(bytes)));
        Ok(Self::from_rules(script, version, rules))
    }

    /// Build a table from already-validated rules; reorders them.
    fn from_rules(script: ScriptClass, version: String, mut rules: Vec<Rule>) -> Self {
        rules.sort_by(|a, b| b.source.len().cmp(&a.source.len()).then(a.line_no.cmp(&b.line_no)));
        let mut by_first: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_first.entry(r.source[0]).or_default().push(i);
        }
        Self { script, version, rules, by_first }
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> RuleTableError {
    RuleTableError::Malformed { line, reason: reason.into() }
}

fn parse_script(name: &str, line: usize) -> Result<ScriptClass, RuleTableError> {
    match name.parse::<ScriptClass>() {
        Ok(s @ (ScriptClass::Cyrillic | ScriptClass::Greek | ScriptClass::Han | ScriptClass::Other)) => Ok(s),
        _ => Err(RuleTableError::UnknownScript { line, name: name.to_string() }),
    }
}

fn parse_ctx(field: Option<&str>, line: usize) -> Result<Option<Context>, RuleTableError> {
    match field {
        None | Some("") | Some("_") => Ok(None),
        Some(f) => f.parse().map(Some).map_err(|_| malformed(line, format!("unknown context `{f}`"))),
    }
}

fn parse_rule(line: &str, line_no: usize, script: ScriptClass) -> Result<Rule, RuleTableError> {
    // A field starting with `#` ends the rule (trailing comment).
    let fields: Vec<&str> = line.split('\t').take_while(|f| !f.starts_with('#')).collect();
    if fields.len() < 2 {
        return Err(malformed(line_no, "expected `source<TAB>target`"));
    }
    if fields.len() > 4 {
        return Err(malformed(line_no, "too many fields"));
    }
    let source: Vec<char> = fields[0].chars().map(fold_char).collect();
    if source.is_empty() {
        return Err(malformed(line_no, "empty source"));
    }
    let allowed = |c: char| matches!(ScriptClass::of(c), s if s == script || s == ScriptClass::Common);
    if let Some(c) = source.iter().copied().find(|&c| !allowed(c)) {
        return Err(malformed(line_no, format!("source character `{c}` is not {script}")));
    }
    let target = fields[1];
    if !target.bytes().all(|b| (0x20..0x7f).contains(&b)) {
        return Err(RuleTableError::NonAsciiTarget { line: line_no, target: target.to_string() });
    }
    Ok(Rule {
        source,
        target: target.to_string(),
        left_ctx: parse_ctx(fields.get(2).copied(), line_no)?,
        right_ctx: parse_ctx(fields.get(3).copied(), line_no)?,
        line_no,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_table() {
        let t = RuleTable::parse("!script cyrillic\nш\tsh\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.script(), ScriptClass::Cyrillic);
        assert_eq!(t.rules()[0].target, "sh");
    }

    #[test]
    fn header_only_is_valid() {
        let t = RuleTable::parse(b"!script greek\n").unwrap();
        assert!(t.is_empty());
        assert!(t.version().starts_with("fnv-"));
    }

    #[test]
    fn duplicate_names_second_line() {
        let err = RuleTable::parse("!script cyrillic\nа\ta\nа\ta\n".as_bytes()).unwrap_err();
        assert_eq!(err, RuleTableError::Duplicate { line: 3, first: 2 });
    }

    #[test]
    fn same_source_different_context_is_allowed() {
        let t = RuleTable::parse("!script cyrillic\nе\te\nе\tye\tboundary\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn error_paths() {
        assert_eq!(RuleTable::parse("ш\tsh\n".as_bytes()).unwrap_err(), RuleTableError::MissingScript);
        assert_eq!(RuleTable::parse(b"").unwrap_err(), RuleTableError::MissingScript);
        assert!(matches!(RuleTable::parse(b"!script klingon\n"), Err(RuleTableError::UnknownScript { line: 1, .. })));
        assert!(matches!(RuleTable::parse(b"!script latin\n"), Err(RuleTableError::UnknownScript { .. })));
        assert!(matches!(
            RuleTable::parse("!script cyrillic\n\nш\n".as_bytes()),
            Err(RuleTableError::Malformed { line: 3, .. })
        ));
        assert!(matches!(
            RuleTable::parse("!script cyrillic\nш\tш\n".as_bytes()),
            Err(RuleTableError::NonAsciiTarget { line: 2, .. })
        ));
        assert!(matches!(
            RuleTable::parse("!script cyrillic\nш\tsh\tsideways\n".as_bytes()),
            Err(RuleTableError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            RuleTable::parse("!script cyrillic\nab\tx\n".as_bytes()),
            Err(RuleTableError::Malformed { line: 2, .. })
        ));
        assert_eq!(RuleTable::parse(&[0xff, 0xfe]).unwrap_err(), RuleTableError::InvalidUtf8);
    }

    #[test]
    fn ordering_is_length_then_line() {
        let src = "!script cyrillic\n# c\nш\tsh\nщ\tshch\nшч\tx\nа\ta\n";
        let t = RuleTable::parse(src.as_bytes()).unwrap();
        let order: Vec<_> = t.rules().iter().map(|r| r.line_no).collect();
        assert_eq!(order, vec![5, 3, 4, 6]);
    }

    #[test]
    fn crlf_comments_and_case_folding() {
        let src = "!script cyrillic\r\n!version v1\r\n# header\r\nШ\tsh\t_\tvowel\t# note\r\n";
        let t = RuleTable::parse(src.as_bytes()).unwrap();
        assert_eq!(t.version(), "v1");
        let r = &t.rules()[0];
        assert_eq!(r.source, vec!['ш']);
        assert_eq!(r.left_ctx, None);
        assert_eq!(r.right_ctx, Some(Context::Vowel));
    }

    #[test]
    fn context_predicates() {
        assert!(Context::Boundary.holds(None));
        assert!(Context::Boundary.holds(Some(' ')));
        assert!(!Context::Boundary.holds(Some('а')));
        assert!(Context::Vowel.holds(Some('Я')));
        assert!(!Context::Vowel.holds(Some('б')));
        assert!(Context::Consonant.holds(Some('б')));
        assert!(!Context::Consonant.holds(Some('1')));
        assert!(!Context::Vowel.holds(None));
    }
}
