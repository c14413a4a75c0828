//! Exit statuses, file helpers and reproducibility manifests.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use scriptgap::hashing::fnv1a64;
use scriptgap::{RuleTable, TableSet};
use serde::Serialize;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Usage = 1,
    Input = 2,
    Invalid = 3,
}

/// An error tagged with the status it should exit with.
pub struct Failure {
    pub status: Status,
    pub error: anyhow::Error,
}

impl fmt::Debug for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {:#}", self.status, self.error)
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub trait Tag<T> {
    /// Bad or unreadable input (status 2).
    fn input(self) -> CmdResult<T>;
    /// Invariant or validation failure (status 3).
    fn invalid(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Tag<T> for Result<T, E> {
    fn input(self) -> CmdResult<T> {
        self.map_err(|e| Failure { status: Status::Input, error: e.into() })
    }

    fn invalid(self) -> CmdResult<T> {
        self.map_err(|e| Failure { status: Status::Invalid, error: e.into() })
    }
}

pub fn usage(msg: impl fmt::Display) -> Failure {
    Failure { status: Status::Usage, error: anyhow::anyhow!("{msg}") }
}

#[derive(Debug, Serialize)]
struct FileRecord {
    path: String,
    bytes: usize,
    fnv1a64: String,
}

impl FileRecord {
    fn new(path: &Path, data: &[u8]) -> Self {
        Self { path: path.display().to_string(), bytes: data.len(), fnv1a64: format!("{:016x}", fnv1a64(data)) }
    }
}

/// Everything a command read and wrote, for `--manifest`.
#[derive(Debug, Default, Serialize)]
pub struct Manifest {
    toolkit: &'static str,
    version: &'static str,
    argv: Vec<String>,
    subcommand: String,
    seed: Option<u64>,
    tables: Vec<(String, String)>,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
}

impl Manifest {
    pub fn new(argv: Vec<String>, subcommand: &str) -> Self {
        Self {
            toolkit: "scriptgap",
            version: scriptgap::VERSION,
            argv,
            subcommand: subcommand.to_string(),
            ..Self::default()
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn tables(&mut self, tables: &TableSet) {
        self.tables = tables.versions().into_iter().map(|(s, v)| (s.to_string(), v)).collect();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// File access that records what it touches.
pub struct Io {
    pub manifest: Manifest,
}

impl Io {
    /// Read a file, or stdin for `-`.
    pub fn read(&mut self, path: &Path) -> CmdResult<Vec<u8>> {
        let data = if path == Path::new("-") {
            let mut buf = Vec::new();
            std::io::stdin().read_to_end(&mut buf).context("reading stdin").input()?;
            buf
        } else {
            std::fs::read(path).with_context(|| format!("reading {}", path.display())).input()?
        };
        self.manifest.inputs.push(FileRecord::new(path, &data));
        Ok(data)
    }

    /// Write to a file, or stdout when `path` is `None` or `-`.
    pub fn write(&mut self, path: Option<&Path>, data: &[u8]) -> CmdResult {
        match path {
            Some(p) if p != Path::new("-") => {
                std::fs::write(p, data).with_context(|| format!("writing {}", p.display())).input()?;
                self.manifest.outputs.push(FileRecord::new(p, data));
            }
            _ => {
                let mut out = std::io::stdout().lock();
                out.write_all(data).and_then(|_| out.flush()).context("writing stdout").input()?;
                self.manifest.outputs.push(FileRecord::new(Path::new("-"), data));
            }
        }
        Ok(())
    }
}

/// Tables from `--table` files, else every `*.tsv` in `$SCRIPTGAP_TABLES`,
/// else the built-in set.
pub fn load_tables(io: &mut Io, files: &[PathBuf]) -> CmdResult<TableSet> {
    let mut paths: Vec<PathBuf> = files.to_vec();
    if paths.is_empty() {
        if let Some(dir) = std::env::var_os("SCRIPTGAP_TABLES") {
            let dir = PathBuf::from(dir);
            let entries = std::fs::read_dir(&dir)
                .with_context(|| format!("listing SCRIPTGAP_TABLES={}", dir.display()))
                .input()?;
            for entry in entries {
                let p = entry.context("listing table directory").input()?.path();
                if p.extension().is_some_and(|e| e == "tsv") {
                    paths.push(p);
                }
            }
            paths.sort();
        }
    }
    let tables = if paths.is_empty() {
        TableSet::builtin().clone()
    } else {
        let mut set = TableSet::new();
        for p in &paths {
            let bytes = io.read(p)?;
            let table = RuleTable::parse(&bytes).with_context(|| format!("rule table {}", p.display())).input()?;
            set.insert(table).with_context(|| format!("rule table {}", p.display())).input()?;
        }
        set
    };
    io.manifest.tables(&tables);
    Ok(tables)
}
