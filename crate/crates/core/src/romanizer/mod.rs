//! Rule-table romanization of non-Latin text into ASCII.
//!
//! Input is cut into script runs; Latin and Common runs are copied, every
//! other run is rewritten with the table registered for its script using
//! greedy longest-match. Characters nothing maps stay in the output verbatim
//! and are counted in [`RomanizationResult::unmapped_count`].

mod script;
mod table;

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::OnceLock;

pub use script::{detect_script_runs, ScriptClass, ScriptRun, UnknownScript};
pub use table::{Context, Rule, RuleTable, RuleTableError};

use table::fold_char;

/// Shipped tables, embedded at build time.
pub const BUILTIN_CYRILLIC: &str = include_str!("../../tables/ru.tsv");
pub const BUILTIN_GREEK: &str = include_str!("../../tables/el.tsv");
pub const BUILTIN_HAN: &str = include_str!("../../tables/zh.tsv");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RomanizeOptions {
    /// Lowercase the romanized output of non-Latin runs.
    pub lowercase: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RomanizationResult {
    pub output: String,
    /// Non-ASCII characters copied through because no rule covered them.
    pub unmapped_count: usize,
    pub segments: Vec<ScriptRun>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("more than one table registered for script {0}")]
pub struct DuplicateTable(pub ScriptClass);

/// At most one rule table per script.
#[derive(Debug, Clone, Default)]
pub struct TableSet {
    tables: BTreeMap<ScriptClass, RuleTable>,
}

impl TableSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, table: RuleTable) -> Result<(), DuplicateTable> {
        let script = table.script();
        if self.tables.contains_key(&script) {
            return Err(DuplicateTable(script));
        }
        self.tables.insert(script, table);
        Ok(())
    }

    pub fn get(&self, script: ScriptClass) -> Option<&RuleTable> {
        self.tables.get(&script)
    }

    pub fn tables(&self) -> impl Iterator<Item = &RuleTable> {
        self.tables.values()
    }

    /// `(script, version)` for every table, for provenance records.
    pub fn versions(&self) -> Vec<(ScriptClass, String)> {
        self.tables.values().map(|t| (t.script(), t.version().to_string())).collect()
    }

    /// The Cyrillic, Greek and Han tables shipped with the crate.
    pub fn builtin() -> &'static TableSet {
        static BUILTIN: OnceLock<TableSet> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            let mut set = TableSet::new();
            for src in [BUILTIN_CYRILLIC, BUILTIN_GREEK, BUILTIN_HAN] {
                let table = RuleTable::parse(src.as_bytes()).expect("builtin table parses");
                set.insert(table).expect("builtin tables cover distinct scripts");
            }
            set
        })
    }

    pub fn romanize(&self, text: &str, options: RomanizeOptions) -> RomanizationResult {
        romanize_text(text, self, options)
    }
}

/// Rewrite a whole string with one table. Returns the output and the number
/// of unmapped non-ASCII characters.
pub fn apply_rules(segment: &str, table: &RuleTable) -> (String, usize) {
    let chars: Vec<char> = segment.chars().collect();
    let mut out = String::with_capacity(segment.len());
    let unmapped = apply_span(&chars, 0..chars.len(), table, &mut out);
    (out, unmapped)
}

/// Rewrite `chars[span]`; contexts look at the full `chars` slice.
fn apply_span(chars: &[char], span: Range<usize>, table: &RuleTable, out: &mut String) -> usize {
    let mut unmapped = 0;
    let mut pos = span.start;
    while pos < span.end {
        match longest_match(chars, pos, span.end, table) {
            Some(rule) => {
                let end = pos + rule.source.len();
                push_cased(out, &rule.target, chars, pos..end);
                pos = end;
            }
            None => {
                let c = chars[pos];
                if !c.is_ascii() {
                    unmapped += 1;
                }
                out.push(c);
                pos += 1;
            }
        }
    }
    unmapped
}

fn longest_match<'t>(chars: &[char], pos: usize, limit: usize, table: &'t RuleTable) -> Option<&'t Rule> {
    let first = fold_char(chars[pos]);
    table.candidates(first).find(|rule| {
        let end = pos + rule.source.len();
        end <= limit
            && rule.source[1..].iter().zip(&chars[pos + 1..end]).all(|(&s, &c)| s == fold_char(c))
            && rule.left_ctx.is_none_or(|ctx| ctx.holds(pos.checked_sub(1).map(|i| chars[i])))
            && rule.right_ctx.is_none_or(|ctx| ctx.holds(chars.get(end).copied()))
    })
}

/// Append `target`, carrying over the case of the matched characters.
///
/// A leading capital capitalises the target's first letter. When everything
/// cased in the match is uppercase and the match sits in an uppercase word
/// (more than one cased character, or an uppercase neighbour), a multi-letter
/// target is uppercased whole: `ШУБА` -> `SHUBA` but `Шуба` -> `Shuba`.
fn push_cased(out: &mut String, target: &str, chars: &[char], span: Range<usize>) {
    let matched = &chars[span.clone()];
    let cased: Vec<char> = matched.iter().copied().filter(|c| is_cased(*c)).collect();
    let all_upper = !cased.is_empty() && cased.iter().all(|c| c.is_uppercase());
    if all_upper && target.len() > 1 {
        let next = chars.get(span.end).copied().filter(|c| c.is_alphabetic());
        let prev = span.start.checked_sub(1).map(|i| chars[i]).filter(|c| c.is_alphabetic());
        let neighbour_upper = next.or(prev).is_some_and(|c| c.is_uppercase());
        if cased.len() > 1 || neighbour_upper {
            out.push_str(&target.to_ascii_uppercase());
            return;
        }
    }
    if matched.first().is_some_and(|c| c.is_uppercase()) {
        let mut done = false;
        for ch in target.chars() {
            if !done && ch.is_ascii_alphabetic() {
                out.push(ch.to_ascii_uppercase());
                done = true;
            } else {
                out.push(ch);
            }
        }
    } else {
        out.push_str(target);
    }
}

fn is_cased(c: char) -> bool {
    c.is_uppercase() || c.is_lowercase()
}

/// Romanize mixed-script text with whichever tables `tables` provides.
pub fn romanize_text(text: &str, tables: &TableSet, options: RomanizeOptions) -> RomanizationResult {
    let segments = detect_script_runs(text);
    let chars: Vec<char> = text.chars().collect();
    let mut output = String::with_capacity(text.len());
    let mut unmapped_count = 0;
    let mut char_pos = 0;

    for seg in &segments {
        let piece = &text[seg.span.clone()];
        let n_chars = piece.chars().count();
        let span = char_pos..char_pos + n_chars;
        char_pos += n_chars;
        match (seg.script, tables.get(seg.script)) {
            (_, Some(table)) if !matches!(seg.script, ScriptClass::Latin | ScriptClass::Common) => {
                if options.lowercase {
                    let mut buf = String::new();
                    unmapped_count += apply_span(&chars, span, table, &mut buf);
                    output.push_str(&buf.to_lowercase());
                } else {
                    unmapped_count += apply_span(&chars, span, table, &mut output);
                }
            }
            _ => {
                unmapped_count += piece.chars().filter(|c| !c.is_ascii()).count();
                output.push_str(piece);
            }
        }
    }

    RomanizationResult { output, unmapped_count, segments }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin(text: &str) -> RomanizationResult {
        TableSet::builtin().romanize(text, RomanizeOptions::default())
    }

    fn table(src: &str) -> RuleTable {
        RuleTable::parse(src.as_bytes()).unwrap()
    }

    #[test]
    fn russian_name() {
        let ru = TableSet::builtin().get(ScriptClass::Cyrillic).unwrap();
        assert_eq!(apply_rules("Александр", ru), ("Aleksandr".to_string(), 0));
    }

    #[test]
    fn russian_phrase_by_hand() {
        // п r и в е т , ␠ м и р: p r i v e t , ␠ m i r
        let ru = TableSet::builtin().get(ScriptClass::Cyrillic).unwrap();
        assert_eq!(apply_rules("привет, мир", ru), ("privet, mir".to_string(), 0));
    }

    #[test]
    fn ascii_passes_through_any_table() {
        for t in TableSet::builtin().tables() {
            assert_eq!(apply_rules("abc", t), ("abc".to_string(), 0));
        }
    }

    #[test]
    fn chinese_queries() {
        assert_eq!(builtin("花生過敏的治療").output, "huashengguomindezhiliao");
        assert_eq!(builtin("乌克兰总统候选人泽连斯基").output, "wukelanzongtonghouxuanrenzeliansiji");
    }

    #[test]
    fn trivial_inputs() {
        let r = builtin("");
        assert_eq!((r.output.as_str(), r.unmapped_count), ("", 0));
        assert!(r.segments.is_empty());
        let r = builtin("hello 123!");
        assert_eq!((r.output.as_str(), r.unmapped_count), ("hello 123!", 0));
    }

    #[test]
    fn greek_plain_mapping() {
        assert_eq!(builtin("Ελληνική Δημοκρατία").output, "Elliniki Dimokratia");
    }

    #[test]
    fn mixed_script_and_signs() {
        assert_eq!(builtin("ab Александр!").output, "ab Aleksandr!");
        assert_eq!(builtin("объём").output, "obyom");
        assert_eq!(builtin("щи").output, "shchi");
    }

    #[test]
    fn case_rules() {
        assert_eq!(builtin("Шуба").output, "Shuba");
        assert_eq!(builtin("ШУБА").output, "SHUBA");
        assert_eq!(builtin("ЩИ").output, "SHCHI");
        assert_eq!(builtin("ДОЖ").output, "DOZH");
        assert_eq!(builtin("Ш").output, "Sh");
        assert_eq!(builtin("Юля").output, "Yulya");
    }

    #[test]
    fn unmapped_characters_are_kept_and_counted() {
        let r = builtin("ӂ");
        assert_eq!((r.output.as_str(), r.unmapped_count), ("ӂ", 1));
        // No table for Other scripts.
        let r = builtin("שלום x");
        assert_eq!((r.output.as_str(), r.unmapped_count), ("שלום x", 4));
        // Missing table: every non-Latin character counts.
        let r = romanize_text("мир", &TableSet::new(), RomanizeOptions::default());
        assert_eq!((r.output.as_str(), r.unmapped_count), ("мир", 3));
        // Non-ASCII Latin stays as is but breaks ASCII closure, so it counts.
        assert_eq!(builtin("café").unmapped_count, 1);
    }

    #[test]
    fn han_punctuation() {
        assert_eq!(builtin("你好，世界。").output, "nihao,shijie.");
    }

    #[test]
    fn longest_match_beats_line_order() {
        let t = table("!script cyrillic\nс\ts\nш\tsh\nсш\tX\n");
        assert_eq!(apply_rules("сшс", &t).0, "Xs");
    }

    #[test]
    fn equal_length_ties_go_to_earlier_line() {
        let t = table("!script cyrillic\nа\tfirst\tvowel\nа\tsecond\n");
        // Left neighbour is a vowel: both rules match, line 2 wins.
        assert_eq!(apply_rules("оа", &t).0, "оfirst");
        assert_eq!(apply_rules("ба", &t).0, "бsecond");
    }

    #[test]
    fn contexts_see_the_original_input() {
        let t = table("!script cyrillic\nе\tye\tboundary\nе\te\nб\tb\n");
        assert_eq!(apply_rules("еб е", &t).0, "yeb ye");
        assert_eq!(apply_rules("бе", &t).0, "be");
        // The left context of the second run's first letter is the Latin `x`.
        let mut set = TableSet::new();
        set.insert(t).unwrap();
        assert_eq!(romanize_text("xе", &set, RomanizeOptions::default()).output, "xe");
    }

    #[test]
    fn empty_table_passes_through() {
        let t = table("!script cyrillic\n");
        assert_eq!(apply_rules("мир", &t), ("мир".to_string(), 3));
    }

    #[test]
    fn lowercase_option() {
        let opts = RomanizeOptions { lowercase: true };
        assert_eq!(TableSet::builtin().romanize("Александр Ok", opts).output, "aleksandr Ok");
    }

    #[test]
    fn duplicate_script_rejected() {
        let mut set = TableSet::new();
        set.insert(table("!script greek\n")).unwrap();
        assert_eq!(set.insert(table("!script greek\n")), Err(DuplicateTable(ScriptClass::Greek)));
    }
}
