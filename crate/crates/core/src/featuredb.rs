//! Feature store persistence and corpus ingestion.
//!
//! Binary layout, little-endian throughout:
//!
//! ```text
//! "CMGP"            4 bytes magic
//! version           u32 (= 1)
//! count             u32
//! count × entry:
//!     id_len        u16
//!     id            id_len bytes of UTF-8
//!     values        1024 × f64 (IEEE 754 binary64)
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::Config;
use crate::features::{extract_features_with, FeatureVector, FEATURE_LEN};
use crate::structure::{id_from_path, read_pdb_file, LabelTable};

pub const MAGIC: &[u8; 4] = b"CMGP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("not a feature store (bad magic bytes)")]
    BadMagic,
    #[error("unsupported store version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt entry #{index}: {reason}")]
    CorruptEntry { index: usize, reason: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("vector {id:?} has {len} values, stores hold exactly {FEATURE_LEN}")]
    BadLength { id: String, len: usize },
    #[error("id longer than 65535 bytes: {0:?}")]
    IdTooLong(String),
    #[error("no structure in {0} could be processed")]
    EmptyCorpus(String),
    #[error("{0} entries exceed the u32 record count")]
    TooManyEntries(usize),
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.display().to_string(), source }
}

/// Feature vectors keyed by unique id, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    version: u32,
    entries: Vec<FeatureVector>,
}

impl Default for FeatureStore {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureStore {
    pub fn new() -> Self {
        Self { version: FORMAT_VERSION, entries: Vec::new() }
    }

    /// Builds a store, checking lengths and id uniqueness.
    pub fn from_entries(entries: Vec<FeatureVector>) -> Result<Self, StoreError> {
        let mut store = Self::new();
        let mut ids = BTreeSet::new();
        for e in entries {
            if !ids.insert(e.id.clone()) {
                return Err(StoreError::DuplicateId(e.id));
            }
            check_entry(&e)?;
            store.entries.push(e);
        }
        Ok(store)
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn entries(&self) -> &[FeatureVector] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<FeatureVector> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&FeatureVector> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn insert(&mut self, entry: FeatureVector) -> Result<(), StoreError> {
        if self.get(&entry.id).is_some() {
            return Err(StoreError::DuplicateId(entry.id));
        }
        check_entry(&entry)?;
        self.entries.push(entry);
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), StoreError> {
        let wrap = |source| StoreError::Io { path: "<writer>".into(), source };
        let count = u32::try_from(self.entries.len())
            .map_err(|_| StoreError::TooManyEntries(self.entries.len()))?;
        let mut buf = Vec::with_capacity(12 + self.entries.len() * (FEATURE_LEN * 8 + 24));
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&self.version.to_le_bytes());
        buf.extend_from_slice(&count.to_le_bytes());
        for e in &self.entries {
            check_entry(e)?;
            buf.extend_from_slice(&(e.id.len() as u16).to_le_bytes());
            buf.extend_from_slice(e.id.as_bytes());
            for v in &e.values {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.write_all(&buf).map_err(wrap)?;
        out.flush().map_err(wrap)
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, StoreError> {
        let mut bytes = Vec::new();
        input
            .read_to_end(&mut bytes)
            .map_err(|source| StoreError::Io { path: "<reader>".into(), source })?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(StoreError::BadMagic);
        }
        let mut cur = Cursor { bytes, pos: 4 };
        let header = |_| StoreError::CorruptEntry { index: 0, reason: "truncated header".into() };
        let version = cur.u32().map_err(header)?;
        if version != FORMAT_VERSION {
            return Err(StoreError::UnsupportedVersion(version));
        }
        let count = cur.u32().map_err(header)? as usize;
        let mut store = Self::new();
        let mut ids = BTreeSet::new();
        for index in 0..count {
            let corrupt = |reason: &str| StoreError::CorruptEntry { index, reason: reason.into() };
            let id_len = cur.u16().map_err(|_| corrupt("truncated id length"))? as usize;
            let id_bytes = cur.take(id_len).map_err(|_| corrupt("truncated id"))?;
            let id = std::str::from_utf8(id_bytes)
                .map_err(|_| corrupt("id is not UTF-8"))?
                .to_string();
            let raw = cur.take(FEATURE_LEN * 8).map_err(|_| corrupt("truncated values"))?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if !ids.insert(id.clone()) {
                return Err(StoreError::DuplicateId(id));
            }
            store.entries.push(FeatureVector { id, values });
        }
        if cur.pos != bytes.len() {
            return Err(StoreError::CorruptEntry {
                index: count,
                reason: format!("{} trailing bytes", bytes.len() - cur.pos),
            });
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let file = fs::File::create(path).map_err(io_err(path))?;
        self.write_to(io::BufWriter::new(file)).map_err(|e| match e {
            StoreError::Io { source, .. } => io_err(path)(source),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let bytes = fs::read(path).map_err(io_err(path))?;
        Self::from_bytes(&bytes)
    }

    /// CSV export: one line per entry, id then the values with 17
    /// significant digits, no header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.entries {
            write!(out, "{}", e.id)?;
            for v in &e.values {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

fn check_entry(e: &FeatureVector) -> Result<(), StoreError> {
    if e.values.len() != FEATURE_LEN {
        return Err(StoreError::BadLength { id: e.id.clone(), len: e.values.len() });
    }
    if e.id.len() > u16::MAX as usize {
        return Err(StoreError::IdTooLong(e.id.clone()));
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ()> {
        let end = self.pos.checked_add(n).ok_or(())?;
        let s = self.bytes.get(self.pos..end).ok_or(())?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, ()> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ()> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// A file that was not added to the store, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

/// Outcome of [`ingest_dir`].
#[derive(Debug, Clone)]
pub struct Ingest {
    pub store: FeatureStore,
    /// Paths that produced an entry, in store order.
    pub added: Vec<PathBuf>,
    pub skipped: Vec<SkippedFile>,
}

/// Extracts features for every regular file in `dir` (non-recursive).
///
/// Files are processed in id order; unparseable files, ids missing from
/// `labels` and repeated ids are skipped and reported. `jobs = 0` uses the
/// default rayon pool size. The result does not depend on `jobs`.
pub fn ingest_dir(
    dir: &Path,
    labels: Option<&LabelTable>,
    config: &Config,
    jobs: usize,
) -> Result<Ingest, StoreError> {
    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if hidden || !entry.file_type().map_err(io_err(&path))?.is_file() {
            continue;
        }
        files.push((id_from_path(&path), path));
    }
    files.sort();

    let mut skipped = Vec::new();
    let mut seen = BTreeSet::new();
    let mut kept = Vec::with_capacity(files.len());
    for (id, path) in files {
        if labels.is_some_and(|l| !l.contains(&id)) {
            skipped.push(SkippedFile { path, reason: format!("no label for {id}") });
        } else if !seen.insert(id.clone()) {
            skipped.push(SkippedFile { path, reason: format!("duplicate id {id}") });
        } else {
            kept.push((id, path));
        }
    }
    let files = kept;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| StoreError::Pool(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        files
            .par_iter()
            .map(|(_, path)| {
                read_pdb_file(path)
                    .map_err(crate::Error::from)
                    .and_then(|trace| extract_features_with(&trace, config))
            })
            .collect()
    });

    let mut store = FeatureStore::new();
    let mut added = Vec::new();
    for ((_, path), result) in files.into_iter().zip(results) {
        match result {
            Ok(features) => {
                store.insert(features)?;
                added.push(path);
            }
            Err(e) => skipped.push(SkippedFile { path, reason: e.to_string() }),
        }
    }
    skipped.sort_by(|a, b| a.path.cmp(&b.path));
    if store.is_empty() {
        return Err(StoreError::EmptyCorpus(dir.display().to_string()));
    }
    Ok(Ingest { store, added, skipped })
}
