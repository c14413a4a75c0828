//! Code-point script classification and script-run segmentation.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

/// Coarse script identity of a code point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScriptClass {
    Latin,
    Cyrillic,
    Greek,
    Han,
    /// Digits, whitespace and punctuation shared by every script.
    Common,
    /// Everything not covered by the fixed ranges.
    Other,
}

impl ScriptClass {
    pub const ALL: [ScriptClass; 6] = [
        ScriptClass::Latin,
        ScriptClass::Cyrillic,
        ScriptClass::Greek,
        ScriptClass::Han,
        ScriptClass::Common,
        ScriptClass::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScriptClass::Latin => "latin",
            ScriptClass::Cyrillic => "cyrillic",
            ScriptClass::Greek => "greek",
            ScriptClass::Han => "han",
            ScriptClass::Common => "common",
            ScriptClass::Other => "other",
        }
    }

    /// Classify a single code point.
    pub fn of(c: char) -> ScriptClass {
        let cp = c as u32;
        // RANGES is sorted and disjoint.
        match RANGES.binary_search_by(|&(lo, hi, _)| {
            if hi < cp {
                std::cmp::Ordering::Less
            } else if lo > cp {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        }) {
            Ok(i) => RANGES[i].2,
            Err(_) => ScriptClass::Other,
        }
    }
}

impl fmt::Display for ScriptClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown script class `{0}`")]
pub struct UnknownScript(pub String);

impl FromStr for ScriptClass {
    type Err = UnknownScript;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScriptClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownScript(s.to_string()))
    }
}

use ScriptClass::{Common as C, Cyrillic as Cy, Greek as G, Han as H, Latin as L};

/// Inclusive code-point ranges, sorted by start. Anything not listed is `Other`.
pub(crate) const RANGES: &[(u32, u32, ScriptClass)] = &[
    (0x0000, 0x0040, C),
    (0x0041, 0x005A, L),
    (0x005B, 0x0060, C),
    (0x0061, 0x007A, L),
    (0x007B, 0x00BF, C),
    (0x00C0, 0x00D6, L),
    (0x00D7, 0x00D7, C),
    (0x00D8, 0x00F6, L),
    (0x00F7, 0x00F7, C),
    (0x00F8, 0x024F, L),
    (0x0370, 0x03FF, G),
    (0x0400, 0x04FF, Cy),
    (0x1E00, 0x1EFF, L),
    (0x2000, 0x206F, C),
    (0x3000, 0x303F, C),
    (0x3400, 0x4DBF, H),
    (0x4E00, 0x9FFF, H),
    (0xFF00, 0xFF20, C),
    (0xFF21, 0xFF3A, L),
    (0xFF3B, 0xFF40, C),
    (0xFF41, 0xFF5A, L),
    (0xFF5B, 0xFF65, C),
];

/// A maximal run of text sharing one script class, as a byte range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptRun {
    pub span: Range<usize>,
    pub script: ScriptClass,
}

/// Split `text` into maximal same-script runs.
///
/// Common characters attach to the run before them; leading Common characters
/// form their own run.
pub fn detect_script_runs(text: &str) -> Vec<ScriptRun> {
    let mut runs: Vec<ScriptRun> = Vec::new();
    for (i, c) in text.char_indices() {
        let end = i + c.len_utf8();
        let class = ScriptClass::of(c);
        match runs.last_mut() {
            Some(run) if class == C || class == run.script => run.span.end = end,
            _ => runs.push(ScriptRun { span: i..end, script: class }),
        }
    }
    runs
}
