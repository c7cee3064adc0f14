//! Universes, object sets and block families, plus the covering file format.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::{BitAnd, BitOr, Not, Sub};
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::bits::{self, Ones};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("universe must contain at least one object")]
    EmptyUniverse,
    #[error("duplicate object label `{0}`")]
    DuplicateLabel(String),
    #[error("invalid label `{0}`")]
    InvalidLabel(String),
    #[error("unknown object label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate block name `{0}`")]
    DuplicateBlock(String),
    #[error("invalid block name `{0}`")]
    InvalidBlockName(String),
    #[error("block `{0}` is empty")]
    EmptyBlock(String),
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
    #[error("a family needs at least one block")]
    NoBlocks,
    #[error("object set has length {found}, universe has {expected} objects")]
    SizeMismatch { expected: usize, found: usize },
}

/// Labels may not be empty or contain characters that the text formats use as
/// separators.
pub(crate) fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ':' | ',' | '#' | '@'))
}

/// An ordered, labeled finite set of objects. Position in the label list is
/// the row/column index used by every matrix built over this universe.
#[derive(Debug, Clone)]
pub struct Universe {
    labels: Vec<Arc<str>>,
    index: OnceLock<HashMap<Arc<str>, usize>>,
}

impl Universe {
    pub fn new<I, S>(labels: I) -> Result<Self, FamilyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<Arc<str>> = labels.into_iter().map(|l| Arc::from(l.into())).collect();
        if labels.is_empty() {
            return Err(FamilyError::EmptyUniverse);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if !valid_name(l) {
                return Err(FamilyError::InvalidLabel(l.to_string()));
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(FamilyError::DuplicateLabel(l.to_string()));
            }
        }
        Ok(Universe {
            labels,
            index: OnceLock::from(index),
        })
    }

    /// Labels already known to be valid and distinct; the label index is
    /// built on first lookup.
    pub(crate) fn from_trusted(labels: Vec<Arc<str>>) -> Self {
        Universe {
            labels,
            index: OnceLock::new(),
        }
    }

    /// This universe followed by `extra`, which must be valid labels not
    /// already present.
    pub(crate) fn appended(&self, extra: &[String]) -> Self {
        let mut labels = Vec::with_capacity(self.labels.len() + extra.len());
        labels.extend_from_slice(&self.labels);
        labels.extend(extra.iter().map(|l| Arc::<str>::from(l.as_str())));
        let index = match self.index.get() {
            Some(map) => {
                let mut map = map.clone();
                map.extend(
                    labels[self.labels.len()..]
                        .iter()
                        .enumerate()
                        .map(|(s, l)| (l.clone(), self.labels.len() + s)),
                );
                OnceLock::from(map)
            }
            None => OnceLock::new(),
        };
        Universe { labels, index }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Arc<str>] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index
            .get_or_init(|| {
                self.labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.clone(), i))
                    .collect()
            })
            .get(label)
            .copied()
    }

    /// Builds the characteristic vector of the named objects. Repeated labels
    /// collapse.
    pub fn set_of<I, S>(&self, labels: I) -> Result<ObjectSet, FamilyError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = ObjectSet::empty(self.len());
        for l in labels {
            let l = l.as_ref();
            let i = self
                .index_of(l)
                .ok_or_else(|| FamilyError::UnknownLabel(l.to_string()))?;
            set.insert(i);
        }
        Ok(set)
    }

    /// Labels of the members of `set`, in universe order.
    pub fn names<'a>(&'a self, set: &'a ObjectSet) -> impl Iterator<Item = &'a str> + 'a {
        set.iter().map(move |i| self.label(i))
    }

    /// Space-separated member labels in universe order.
    pub fn format_set(&self, set: &ObjectSet) -> String {
        self.names(set).collect::<Vec<_>>().join(" ")
    }
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for Universe {}

/// A subset of a universe as a packed bit vector over universe order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ObjectSet {
    len: usize,
    words: Vec<u64>,
}

impl ObjectSet {
    pub fn empty(len: usize) -> Self {
        ObjectSet {
            len,
            words: vec![0; bits::words_for(len)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        bits::fill_ones(&mut s.words, len);
        s
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut s = Self::empty(len);
        for i in indices {
            s.insert(i);
        }
        s
    }

    /// Builds a set from `0`/`1` flags, one per object.
    pub fn from_flags(flags: &[bool]) -> Self {
        Self::from_indices(
            flags.len(),
            flags.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i),
        )
    }

    pub(crate) fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), bits::words_for(len));
        if let Some(last) = words.last_mut() {
            *last &= bits::tail_mask(len);
        }
        ObjectSet { len, words }
    }

    /// Size of the universe this set ranges over.
    pub fn universe_len(&self) -> usize {
        self.len
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn contains(&self, i: usize) -> bool {
        assert!(i < self.len, "object index {i} out of range {}", self.len);
        bits::get(&self.words, i)
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "object index {i} out of range {}", self.len);
        bits::set(&mut self.words, i, true);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "object index {i} out of range {}", self.len);
        bits::set(&mut self.words, i, false);
    }

    pub fn count(&self) -> usize {
        bits::count_ones(&self.words)
    }

    pub fn is_empty(&self) -> bool {
        bits::is_zero(&self.words)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn is_subset(&self, other: &ObjectSet) -> bool {
        self.check_len(other);
        bits::is_subset(&self.words, &other.words)
    }

    pub fn intersects(&self, other: &ObjectSet) -> bool {
        self.check_len(other);
        bits::intersects(&self.words, &other.words)
    }

    pub fn iter(&self) -> Ones<'_> {
        Ones::new(&self.words)
    }

    pub fn union_with(&mut self, other: &ObjectSet) {
        self.check_len(other);
        bits::or_into(&mut self.words, &other.words);
    }

    pub fn intersect_with(&mut self, other: &ObjectSet) {
        self.check_len(other);
        bits::and_into(&mut self.words, &other.words);
    }

    /// Copy of this set over a universe of `len` objects; indices beyond the
    /// old length start out absent.
    pub fn extended(&self, len: usize) -> ObjectSet {
        assert!(len >= self.len);
        let mut words = self.words.clone();
        words.resize(bits::words_for(len), 0);
        ObjectSet { len, words }
    }

    /// Keeps only the positions listed in `keep` (ascending), re-indexed densely.
    pub fn select(&self, keep: &[usize]) -> ObjectSet {
        self.select_runs(&bits::runs_of(keep), keep.len())
    }

    /// [`ObjectSet::select`] with the kept positions given as precomputed runs.
    pub(crate) fn select_runs(&self, runs: &[(usize, usize, usize)], len: usize) -> ObjectSet {
        let mut words = vec![0u64; bits::words_for(len)];
        for &(src_start, dst_start, run) in runs {
            bits::copy_range(&mut words, dst_start, &self.words, src_start, run);
        }
        ObjectSet { len, words }
    }

    /// Renders the set as `0`/`1` entries separated by spaces.
    pub fn to_vector_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.contains(i) { "1" } else { "0" })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn check_len(&self, other: &ObjectSet) {
        assert_eq!(self.len, other.len, "object sets over different universes");
    }
}

impl fmt::Debug for ObjectSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ObjectSet{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.len)
    }
}

impl BitOr for &ObjectSet {
    type Output = ObjectSet;
    fn bitor(self, rhs: &ObjectSet) -> ObjectSet {
        let mut out = self.clone();
        out.union_with(rhs);
        out
    }
}

impl BitAnd for &ObjectSet {
    type Output = ObjectSet;
    fn bitand(self, rhs: &ObjectSet) -> ObjectSet {
        let mut out = self.clone();
        out.intersect_with(rhs);
        out
    }
}

impl Sub for &ObjectSet {
    type Output = ObjectSet;
    fn sub(self, rhs: &ObjectSet) -> ObjectSet {
        self.check_len(rhs);
        let words = self
            .words
            .iter()
            .zip(&rhs.words)
            .map(|(a, b)| a & !b)
            .collect();
        ObjectSet {
            len: self.len,
            words,
        }
    }
}

impl Not for &ObjectSet {
    type Output = ObjectSet;
    fn not(self) -> ObjectSet {
        ObjectSet::from_words(self.len, self.words.iter().map(|w| !w).collect())
    }
}

/// A named member of a block family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub members: Arc<ObjectSet>,
}

/// Result of checking the covering conditions on a family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverReport {
    pub is_covering: bool,
    pub uncovered: ObjectSet,
}

/// An ordered family of named, non-empty blocks over a universe.
///
/// The family need not cover the universe; such families are legal (they
/// arise after deleting blocks or objects) but are reported as non-covering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockFamily {
    universe: Arc<Universe>,
    blocks: Vec<Block>,
}

impl BlockFamily {
    pub fn new<I, S>(universe: Arc<Universe>, blocks: I) -> Result<Self, FamilyError>
    where
        I: IntoIterator<Item = (S, ObjectSet)>,
        S: Into<String>,
    {
        let blocks = blocks
            .into_iter()
            .map(|(name, members)| Block {
                name: name.into(),
                members: Arc::new(members),
            })
            .collect();
        Self::from_blocks(universe, blocks)
    }

    pub(crate) fn from_blocks(
        universe: Arc<Universe>,
        blocks: Vec<Block>,
    ) -> Result<Self, FamilyError> {
        if blocks.is_empty() {
            return Err(FamilyError::NoBlocks);
        }
        let mut seen = HashSet::with_capacity(blocks.len());
        for b in &blocks {
            if !valid_name(&b.name) {
                return Err(FamilyError::InvalidBlockName(b.name.clone()));
            }
            if !seen.insert(b.name.as_str()) {
                return Err(FamilyError::DuplicateBlock(b.name.clone()));
            }
            if b.members.universe_len() != universe.len() {
                return Err(FamilyError::SizeMismatch {
                    expected: universe.len(),
                    found: b.members.universe_len(),
                });
            }
            if b.members.is_empty() {
                return Err(FamilyError::EmptyBlock(b.name.clone()));
            }
        }
        Ok(BlockFamily { universe, blocks })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    /// Number of objects.
    pub fn n(&self) -> usize {
        self.universe.len()
    }

    /// Number of blocks.
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// Union of all blocks.
    pub fn covered(&self) -> ObjectSet {
        let mut acc = ObjectSet::empty(self.n());
        for b in &self.blocks {
            acc.union_with(&b.members);
        }
        acc
    }

    pub fn is_covering(&self) -> bool {
        self.covered().is_full()
    }

    /// Indices of the blocks containing object `i`, in family order.
    pub fn blocks_containing(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .filter(move |(_, b)| b.members.contains(i))
            .map(|(j, _)| j)
    }
}

/// Checks whether `family` covers its universe. Never fails.
pub fn validate(family: &BlockFamily) -> CoverReport {
    let uncovered = !&family.covered();
    CoverReport {
        is_covering: uncovered.is_empty(),
        uncovered,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: expected `universe:` declaration")]
    MissingUniverse { line: usize },
    #[error("line {line}: universe declares no objects")]
    EmptyUniverse { line: usize },
    #[error("line {line}: duplicate object label `{label}`")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}: invalid name `{name}`")]
    InvalidName { line: usize, name: String },
    #[error("line {line}: unknown object label `{label}`")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: duplicate block name `{name}`")]
    DuplicateBlock { line: usize, name: String },
    #[error("line {line}: block `{name}` is empty")]
    EmptyBlock { line: usize, name: String },
    #[error("line {line}: universe is declared but no block follows")]
    NoBlocks { line: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::MissingUniverse { line }
            | ParseError::EmptyUniverse { line }
            | ParseError::DuplicateLabel { line, .. }
            | ParseError::InvalidName { line, .. }
            | ParseError::UnknownLabel { line, .. }
            | ParseError::DuplicateBlock { line, .. }
            | ParseError::EmptyBlock { line, .. }
            | ParseError::NoBlocks { line }
            | ParseError::Syntax { line, .. } => *line,
        }
    }
}

/// Strips a `#` comment and surrounding whitespace.
pub(crate) fn content(line: &str) -> &str {
    match line.find('#') {
        Some(p) => &line[..p],
        None => line,
    }
    .trim()
}

/// Parses the line-oriented covering format:
///
/// ```text
/// universe: x1 x2 x3 x4
/// block C1: x1 x4
/// block C2: x1 x2 x4   # comment
/// ```
pub fn parse_family(text: &str) -> Result<BlockFamily, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, content(l)))
        .filter(|(_, l)| !l.is_empty());

    let (uline, decl) = lines
        .next()
        .ok_or(ParseError::MissingUniverse { line: 1 })?;
    let rest = decl
        .strip_prefix("universe:")
        .ok_or(ParseError::MissingUniverse { line: uline })?;
    let labels: Vec<&str> = rest.split_whitespace().collect();
    if labels.is_empty() {
        return Err(ParseError::EmptyUniverse { line: uline });
    }
    let universe = Universe::new(labels.iter().copied()).map_err(|e| match e {
        FamilyError::DuplicateLabel(label) => ParseError::DuplicateLabel { line: uline, label },
        FamilyError::InvalidLabel(name) => ParseError::InvalidName { line: uline, name },
        other => ParseError::Syntax {
            line: uline,
            message: other.to_string(),
        },
    })?;

    let mut blocks: Vec<(String, ObjectSet)> = Vec::new();
    for (line, text) in lines {
        let body = text
            .strip_prefix("block")
            .filter(|r| r.starts_with(char::is_whitespace))
            .ok_or_else(|| ParseError::Syntax {
                line,
                message: format!("expected `block <name>: ...`, found `{text}`"),
            })?;
        let (name, members) = body.split_once(':').ok_or_else(|| ParseError::Syntax {
            line,
            message: "missing `:` after block name".into(),
        })?;
        let name = name.trim();
        if !valid_name(name) {
            return Err(ParseError::InvalidName {
                line,
                name: name.to_string(),
            });
        }
        if blocks.iter().any(|(n, _)| n == name) {
            return Err(ParseError::DuplicateBlock {
                line,
                name: name.to_string(),
            });
        }
        let set = universe
            .set_of(members.split_whitespace())
            .map_err(|e| match e {
                FamilyError::UnknownLabel(label) => ParseError::UnknownLabel { line, label },
                other => ParseError::Syntax {
                    line,
                    message: other.to_string(),
                },
            })?;
        if set.is_empty() {
            return Err(ParseError::EmptyBlock {
                line,
                name: name.to_string(),
            });
        }
        blocks.push((name.to_string(), set));
    }

    BlockFamily::new(Arc::new(universe), blocks).map_err(|e| match e {
        FamilyError::NoBlocks => ParseError::NoBlocks { line: uline },
        other => ParseError::Syntax {
            line: uline,
            message: other.to_string(),
        },
    })
}

/// Writes a family in the covering format accepted by [`parse_family`].
pub fn serialize_family(family: &BlockFamily) -> String {
    let u = family.universe();
    let mut out = format!("universe: {}\n", u.labels().join(" "));
    for b in family.blocks() {
        out.push_str(&format!("block {}: {}\n", b.name, u.format_set(&b.members)));
    }
    out
}
