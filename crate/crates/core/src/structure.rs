//! Structure ingestion: CA traces from PDB text and SCOPe classification labels.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

/// Errors raised while reading structures or label tables.
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("empty structure input")]
    Empty,
    #[error("{found} CA atom(s) found, at least 2 required")]
    NoCaAtoms { found: usize },
    #[error("line {line}: malformed ATOM record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("non-finite coordinate at CA #{index}")]
    NonFinite { index: usize },
    #[error("bad sccs {sccs:?} for {sid:?}: expected class.fold.superfamily.family")]
    BadSccs { sid: String, sccs: String },
    #[error("label table line {line}: {reason}")]
    BadLabelLine { line: usize, reason: String },
    #[error("duplicate label for {0:?}")]
    DuplicateLabel(String),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Ordered alpha-carbon coordinates of one structure, in Ångström.
#[derive(Debug, Clone, PartialEq)]
pub struct CaTrace {
    id: String,
    coords: Vec<[f64; 3]>,
}

impl CaTrace {
    /// Builds a trace, checking it has at least two finite coordinates.
    pub fn new(id: impl Into<String>, coords: Vec<[f64; 3]>) -> Result<Self, ParseError> {
        if coords.len() < 2 {
            return Err(ParseError::NoCaAtoms { found: coords.len() });
        }
        if let Some(index) = coords.iter().position(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(ParseError::NonFinite { index });
        }
        Ok(Self { id: id.into(), coords })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Supported structure file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StructureFormat {
    #[default]
    Pdb,
}

pub fn parse_structure(
    id: &str,
    text: &str,
    format: StructureFormat,
) -> Result<CaTrace, ParseError> {
    match format {
        StructureFormat::Pdb => parse_pdb(id, text),
    }
}

// Fixed PDB columns, 0-based half-open byte ranges.
const ATOM_NAME: std::ops::Range<usize> = 12..16;
const CHAIN: usize = 21;
const RES_SEQ: std::ops::Range<usize> = 22..26;
const I_CODE: usize = 26;
const X: std::ops::Range<usize> = 30..38;
const Y: std::ops::Range<usize> = 38..46;
const Z: std::ops::Range<usize> = 46..54;

/// Extracts the CA trace from fixed-column PDB text.
///
/// Only `ATOM` records of the first model are read (the whole file when it
/// has no `MODEL` records). For each residue, identified by chain, sequence
/// number and insertion code, the first CA encountered wins, so later
/// alternate locations are dropped. Chains are concatenated in file order.
pub fn parse_pdb(id: &str, text: &str) -> Result<CaTrace, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut coords = Vec::new();
    let mut seen: HashSet<(u8, String, u8)> = HashSet::new();
    let mut in_model = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let bytes = line.as_bytes();
        if line.starts_with("MODEL") {
            if in_model {
                break;
            }
            in_model = true;
            continue;
        }
        if line.starts_with("ENDMDL") {
            if in_model {
                break;
            }
            continue;
        }
        if !line.starts_with("ATOM") {
            continue;
        }
        let malformed = |reason: &str| ParseError::MalformedRecord {
            line: lineno + 1,
            reason: reason.to_string(),
        };
        if bytes.len() < Z.end {
            return Err(malformed("line shorter than the coordinate columns"));
        }
        if !line.is_char_boundary(Z.end) {
            return Err(malformed("non-ASCII text inside fixed columns"));
        }
        if line[ATOM_NAME].trim() != "CA" {
            continue;
        }
        let key = (
            bytes[CHAIN],
            line[RES_SEQ].trim().to_string(),
            bytes[I_CODE],
        );
        // First alternate location (or duplicate) per residue wins.
        if !seen.insert(key) {
            continue;
        }
        let field = |range: std::ops::Range<usize>, axis: &str| {
            line[range]
                .trim()
                .parse::<f64>()
                .map_err(|_| malformed(&format!("unparseable {axis} coordinate")))
        };
        coords.push([field(X, "x")?, field(Y, "y")?, field(Z, "z")?]);
    }

    CaTrace::new(id, coords)
}

/// Reads and parses a PDB file; the trace id is the file stem.
pub fn read_pdb_file(path: &Path) -> Result<CaTrace, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pdb(&id_from_path(path), &text)
}

/// Structure id derived from a file name: the name up to the first dot.
pub fn id_from_path(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    match name.split_once('.') {
        Some((stem, _)) if !stem.is_empty() => stem.to_string(),
        _ => name,
    }
}

/// A SCOPe domain classification, `class.fold.superfamily.family`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScopLabel {
    pub sid: String,
    pub class: char,
    pub fold: u32,
    pub superfamily: u32,
    pub family: u32,
}

impl ScopLabel {
    pub fn family_match(&self, other: &ScopLabel) -> bool {
        self.superfamily_match(other) && self.family == other.family
    }

    pub fn superfamily_match(&self, other: &ScopLabel) -> bool {
        self.class == other.class
            && self.fold == other.fold
            && self.superfamily == other.superfamily
    }

    pub fn sccs(&self) -> String {
        format!(
            "{}.{}.{}.{}",
            self.class, self.fold, self.superfamily, self.family
        )
    }
}

impl fmt::Display for ScopLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.sid, self.sccs())
    }
}

pub fn family_match(a: &ScopLabel, b: &ScopLabel) -> bool {
    a.family_match(b)
}

pub fn superfamily_match(a: &ScopLabel, b: &ScopLabel) -> bool {
    a.superfamily_match(b)
}

/// Parses an sccs string such as `b.12.3.4`.
pub fn parse_scop_label(sid: &str, sccs: &str) -> Result<ScopLabel, ParseError> {
    let bad = || ParseError::BadSccs {
        sid: sid.to_string(),
        sccs: sccs.to_string(),
    };
    let parts: Vec<&str> = sccs.trim().split('.').collect();
    let [class, fold, superfamily, family] = parts.as_slice() else {
        return Err(bad());
    };
    let mut chars = class.chars();
    let class = match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => c,
        _ => return Err(bad()),
    };
    let positive = |s: &str| -> Result<u32, ParseError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        match s.parse::<u32>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(bad()),
        }
    };
    Ok(ScopLabel {
        sid: sid.to_string(),
        class,
        fold: positive(fold)?,
        superfamily: positive(superfamily)?,
        family: positive(family)?,
    })
}

/// Which level of the SCOPe hierarchy defines a positive pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchLevel {
    #[default]
    Family,
    Superfamily,
}

impl MatchLevel {
    pub fn matches(self, a: &ScopLabel, b: &ScopLabel) -> bool {
        match self {
            MatchLevel::Family => a.family_match(b),
            MatchLevel::Superfamily => a.superfamily_match(b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatchLevel::Family => "family",
            MatchLevel::Superfamily => "superfamily",
        }
    }
}

/// Labels keyed by domain id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelTable {
    labels: BTreeMap<String, ScopLabel>,
}

impl LabelTable {
    /// Parses `sid,sccs` or `sid<TAB>sccs` lines.
    ///
    /// Blank lines and `#` comments are skipped. A first line whose second
    /// field is not a valid sccs is taken as a header.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut labels = BTreeMap::new();
        let mut first = true;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let is_first = std::mem::replace(&mut first, false);
            let mut fields = line.split(['\t', ',']).map(str::trim);
            let (Some(sid), Some(sccs)) = (fields.next(), fields.next()) else {
                return Err(ParseError::BadLabelLine {
                    line: lineno + 1,
                    reason: "expected two fields".into(),
                });
            };
            let label = match parse_scop_label(sid, sccs) {
                Ok(label) => label,
                Err(_) if is_first => continue,
                Err(e) => return Err(e),
            };
            if labels.insert(sid.to_string(), label).is_some() {
                return Err(ParseError::DuplicateLabel(sid.to_string()));
            }
        }
        Ok(Self { labels })
    }

    pub fn read(path: &Path) -> Result<Self, ParseError> {
        let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, sid: &str) -> Option<&ScopLabel> {
        self.labels.get(sid)
    }

    pub fn contains(&self, sid: &str) -> bool {
        self.labels.contains_key(sid)
    }

    pub fn insert(&mut self, label: ScopLabel) {
        self.labels.insert(label.sid.clone(), label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScopLabel> {
        self.labels.values()
    }
}

impl FromIterator<ScopLabel> for LabelTable {
    fn from_iter<I: IntoIterator<Item = ScopLabel>>(iter: I) -> Self {
        Self {
            labels: iter.into_iter().map(|l| (l.sid.clone(), l)).collect(),
        }
    }
}
