//! Binary index files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "SGIX" u8:version
//! u8:mode (0 word, 1 han_char, 2 char_ngram)  u8:n  u8:lowercase
//! u64:num_docs   { u32:len docno-bytes  u32:doc_length } * num_docs
//! f64:avgdl
//! u64:num_terms  { u32:len term-bytes  u32:df  { u32:ordinal u32:tf } * df } * num_terms
//! ```
//!
//! Terms are written in byte order, so equal indexes give equal files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{mean_length, InvertedIndex, Posting, Tokenizer, TokenizerMode};

const MAGIC: &[u8; 4] = b"SGIX";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexFormatError {
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {0}")]
    Version(u8),
    #[error("index file truncated at byte {0}")]
    Truncated(usize),
    #[error("index file is corrupt: {0}")]
    Corrupt(String),
}

impl InvertedIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        let (mode, n) = match self.tokenizer.mode {
            TokenizerMode::Word => (0u8, 0u8),
            TokenizerMode::HanChar => (1, 0),
            TokenizerMode::CharNgram(n) => (2, n as u8),
        };
        out.extend_from_slice(&[mode, n, u8::from(self.tokenizer.lowercase)]);
        out.extend_from_slice(&(self.docnos.len() as u64).to_le_bytes());
        for (docno, len) in self.docnos.iter().zip(&self.doc_lengths) {
            put_str(&mut out, docno);
            out.extend_from_slice(&len.to_le_bytes());
        }
        out.extend_from_slice(&self.avgdl.to_le_bytes());
        out.extend_from_slice(&(self.postings.len() as u64).to_le_bytes());
        for (term, list) in &self.postings {
            put_str(&mut out, term);
            out.extend_from_slice(&(list.len() as u32).to_le_bytes());
            for &(ord, tf) in list {
                out.extend_from_slice(&ord.to_le_bytes());
                out.extend_from_slice(&tf.to_le_bytes());
            }
        }
        out
    }

    /// Decode and re-validate every structural invariant.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexFormatError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(IndexFormatError::BadMagic);
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(IndexFormatError::Version(version));
        }
        let mode = match (r.u8()?, r.u8()?) {
            (0, _) => TokenizerMode::Word,
            (1, _) => TokenizerMode::HanChar,
            (2, n) if (2..=5).contains(&n) => TokenizerMode::CharNgram(usize::from(n)),
            (m, n) => return Err(corrupt(format!("tokenizer mode {m}/{n}"))),
        };
        let lowercase = match r.u8()? {
            0 => false,
            1 => true,
            v => return Err(corrupt(format!("lowercase flag {v}"))),
        };
        let n_docs = r.len()?;
        let mut docnos = Vec::with_capacity(n_docs.min(1 << 20));
        let mut doc_lengths = Vec::with_capacity(n_docs.min(1 << 20));
        for _ in 0..n_docs {
            docnos.push(r.string()?);
            doc_lengths.push(r.u32()?);
        }
        let avgdl = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
        if avgdl.to_bits() != mean_length(&doc_lengths).to_bits() {
            return Err(corrupt("avgdl does not match document lengths".into()));
        }
        let n_terms = r.len()?;
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut sums = vec![0u64; n_docs];
        for _ in 0..n_terms {
            let term = r.string()?;
            let df = r.u32()? as usize;
            let mut list = Vec::with_capacity(df.min(n_docs));
            for _ in 0..df {
                let ord = r.u32()?;
                let tf = r.u32()?;
                if ord as usize >= n_docs || list.last().is_some_and(|&(p, _): &Posting| p >= ord) || tf == 0 {
                    return Err(corrupt(format!("bad posting for `{term}`")));
                }
                sums[ord as usize] += u64::from(tf);
                list.push((ord, tf));
            }
            if postings.insert(term, list).is_some() {
                return Err(corrupt("repeated term".into()));
            }
        }
        if r.pos != bytes.len() {
            return Err(corrupt("trailing bytes".into()));
        }
        if sums.iter().zip(&doc_lengths).any(|(&s, &l)| s != u64::from(l)) {
            return Err(corrupt("postings do not sum to document lengths".into()));
        }
        Ok(Self { tokenizer: Tokenizer { mode, lowercase }, postings, doc_lengths, docnos, avgdl })
    }

    /// Human-readable listing of the whole index.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tokenizer\t{}", self.tokenizer);
        let _ = writeln!(s, "# num_docs\t{}", self.num_docs());
        let _ = writeln!(s, "# avgdl\t{:.6}", self.avgdl);
        let _ = writeln!(s, "# num_terms\t{}", self.num_terms());
        for (docno, len) in self.docnos.iter().zip(&self.doc_lengths) {
            let _ = writeln!(s, "doc\t{docno}\t{len}");
        }
        for (term, list) in &self.postings {
            let _ = write!(s, "term\t{term}\t{}", list.len());
            for (ord, tf) in list {
                let _ = write!(s, "\t{ord}:{tf}");
            }
            s.push('\n');
        }
        s
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn corrupt(msg: String) -> IndexFormatError {
    IndexFormatError::Corrupt(msg)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexFormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(IndexFormatError::Truncated(self.pos))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, IndexFormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, IndexFormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize, IndexFormatError> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| corrupt(format!("length {v}")))
    }

    fn string(&mut self) -> Result<String, IndexFormatError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("non-UTF-8 string".into()))
    }
}
