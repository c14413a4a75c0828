//! Model checkpoints.
//!
//! ```text
//! "SGTE" u8:version
//! u64:hash_dim u64:emb_dim u64:ngram_n u64:seed
//! f64 * (emb_dim * hash_dim)      W in row-major order
//! ```
//!
//! All values little-endian.

use super::EncoderParams;

const MAGIC: &[u8; 4] = b"SGTE";
const VERSION: u8 = 1;
const HEADER: usize = 5 + 4 * 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a model checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u8),
    #[error("checkpoint size {found} does not match its header (expected {expected})")]
    Size { expected: usize, found: usize },
    #[error("checkpoint header is invalid: {0}")]
    Header(String),
    #[error("checkpoint contains non-finite weights")]
    NonFinite,
}

impl EncoderParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER + self.columns.len() * 8);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        for v in [self.hash_dim as u64, self.emb_dim as u64, self.ngram_n as u64, self.seed] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for row in 0..self.emb_dim {
            for col in 0..self.hash_dim {
                out.extend_from_slice(&self.get(row, col).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 5 || &bytes[..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes[4] != VERSION {
            return Err(CheckpointError::Version(bytes[4]));
        }
        if bytes.len() < HEADER {
            return Err(CheckpointError::Size { expected: HEADER, found: bytes.len() });
        }
        let word = |i: usize| u64::from_le_bytes(bytes[5 + 8 * i..13 + 8 * i].try_into().unwrap());
        let to_usize = |v: u64| usize::try_from(v).map_err(|_| CheckpointError::Header(format!("dimension {v}")));
        let (hash_dim, emb_dim, ngram_n, seed) = (to_usize(word(0))?, to_usize(word(1))?, to_usize(word(2))?, word(3));
        let mut params = EncoderParams { hash_dim, emb_dim, ngram_n, seed, columns: Vec::new() };
        let count = hash_dim
            .checked_mul(emb_dim)
            .and_then(|n| n.checked_mul(8))
            .and_then(|n| n.checked_add(HEADER))
            .ok_or_else(|| CheckpointError::Header("dimensions overflow".into()))?;
        if !hash_dim.is_power_of_two() || emb_dim == 0 || ngram_n == 0 {
            return Err(CheckpointError::Header(format!("hash_dim={hash_dim} emb_dim={emb_dim} ngram_n={ngram_n}")));
        }
        if bytes.len() != count {
            return Err(CheckpointError::Size { expected: count, found: bytes.len() });
        }
        params.columns = vec![0.0; hash_dim * emb_dim];
        for (i, chunk) in bytes[HEADER..].chunks_exact(8).enumerate() {
            let (row, col) = (i / hash_dim, i % hash_dim);
            params.set(row, col, f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        if !params.all_finite() {
            return Err(CheckpointError::NonFinite);
        }
        Ok(params)
    }
}
