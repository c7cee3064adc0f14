//! Type-1 (Γ) and type-2 (Π) characteristic matrices of a block family.
//!
//! Γ = M·Mᵀ and Π = M⊙Mᵀ where M is the n×m membership matrix. Both
//! decompose over blocks: Γ is the entrywise OR of the per-block matrices
//! `M_C·M_Cᵀ` and Π the entrywise minimum of `M_C⊙M_Cᵀ`. Each per-block
//! matrix is a function of the block's membership vector `d` alone:
//!
//! * `M_C·M_Cᵀ` has row `d` for members and the zero row otherwise;
//! * `M_C⊙M_Cᵀ` has row `d` for members and `d + 1` otherwise.
//!
//! Folding these row rules gives Γ row i = union of the blocks containing
//! `x_i` and, for a covered `x_i`, Π row i = intersection of those blocks. An
//! object in no block gets the Π row `1 + (intersection of all blocks)`.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits;
use crate::matrix::{bool_product, sharp_product, BoolMatrix, TritMatrix};
use crate::model::{Block, BlockFamily, ObjectSet, Universe};

/// Largest universe for which debug builds re-derive Γ and Π through the
/// definitional products after every [`build_cache`].
pub const DEBUG_CROSS_CHECK_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CacheError {
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
}

/// Counters describing how much of the cache an operation touched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkStats {
    /// Distinct per-block membership vectors consulted.
    pub blocks_read: usize,
    /// Rows of Γ or Π written from scratch (a Γ row and a Π row count as two).
    pub rows_recomputed: usize,
    /// Columns of Γ or Π written from scratch.
    pub cols_recomputed: usize,
}

#[derive(Debug)]
pub(crate) struct Tracker {
    seen: Vec<bool>,
    pub(crate) stats: WorkStats,
}

impl Tracker {
    pub(crate) fn new(m: usize) -> Self {
        Tracker {
            seen: vec![false; m],
            stats: WorkStats::default(),
        }
    }

    pub(crate) fn read(&mut self, block: usize) {
        if !self.seen[block] {
            self.seen[block] = true;
            self.stats.blocks_read += 1;
        }
    }

    pub(crate) fn read_all(&mut self) {
        for j in 0..self.seen.len() {
            self.read(j);
        }
    }
}

/// Γ and Π of a family together with the family itself, whose blocks double
/// as the per-block cache: both per-block matrices are rebuilt on demand from
/// a block's membership vector.
#[derive(Debug, Clone)]
pub struct CharCache {
    pub(crate) family: BlockFamily,
    pub(crate) gamma: BoolMatrix,
    pub(crate) pi: TritMatrix,
    pub(crate) covered: ObjectSet,
    pub(crate) work: WorkStats,
}

impl PartialEq for CharCache {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.gamma == other.gamma && self.pi == other.pi
    }
}

impl Eq for CharCache {}

impl CharCache {
    pub fn family(&self) -> &BlockFamily {
        &self.family
    }

    pub fn universe(&self) -> &Universe {
        self.family.universe()
    }

    /// Type-1 characteristic matrix Γ.
    pub fn gamma(&self) -> &BoolMatrix {
        &self.gamma
    }

    /// Type-2 characteristic matrix Π; boolean exactly when the family covers.
    pub fn pi(&self) -> &TritMatrix {
        &self.pi
    }

    /// Union of all blocks.
    pub fn covered(&self) -> &ObjectSet {
        &self.covered
    }

    pub fn is_covering(&self) -> bool {
        self.covered.is_full()
    }

    /// Work done by the operation that produced this cache.
    pub fn work(&self) -> WorkStats {
        self.work
    }

    pub fn block_vector(&self, name: &str) -> Result<&ObjectSet, CacheError> {
        self.family
            .block(name)
            .map(|b| &*b.members)
            .ok_or_else(|| CacheError::UnknownBlock(name.to_string()))
    }

    /// SHA-256 over the Γ and Π dumps, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"gamma\n");
        h.update(self.gamma.dump().as_bytes());
        h.update(b"pi\n");
        h.update(self.pi.dump().as_bytes());
        hex::encode(h.finalize())
    }

    /// Re-derives Γ and Π through the definitional products and compares.
    pub fn matches_definitional(&self) -> bool {
        let (g, p) = definitional(&self.family);
        g == self.gamma && p == self.pi
    }
}

/// The n×m membership matrix, `out[i][j] = 1` iff object `i` is in block `j`.
pub fn membership_matrix(family: &BlockFamily) -> BoolMatrix {
    let cols: Vec<&ObjectSet> = family.blocks().iter().map(|b| &*b.members).collect();
    BoolMatrix::from_columns(family.n(), &cols)
}

/// `M_C·M_Cᵀ` from the membership vector: member rows copy `d`, others are zero.
pub fn gamma_of_block(d: &ObjectSet) -> BoolMatrix {
    let n = d.universe_len();
    let mut out = BoolMatrix::zeros(n, n);
    for i in d.iter() {
        out.set_row(i, d.words());
    }
    out
}

/// `M_C⊙M_Cᵀ` from the membership vector: member rows are `d`, other rows `d + 1`.
///
/// Only two distinct rows exist, so they are formed once and copied.
pub fn pi_of_block(d: &ObjectSet) -> TritMatrix {
    let n = d.universe_len();
    let ones = ObjectSet::full(n);
    let zero = ObjectSet::empty(n);
    let mut out = TritMatrix::zeros(n, n);
    for i in 0..n {
        if d.contains(i) {
            out.set_row(i, d.words(), zero.words());
        } else {
            out.set_row(i, ones.words(), d.words());
        }
    }
    out
}

pub fn block_gamma(family: &BlockFamily, name: &str) -> Result<BoolMatrix, CacheError> {
    let b = family
        .block(name)
        .ok_or_else(|| CacheError::UnknownBlock(name.to_string()))?;
    Ok(gamma_of_block(&b.members))
}

pub fn block_pi(family: &BlockFamily, name: &str) -> Result<TritMatrix, CacheError> {
    let b = family
        .block(name)
        .ok_or_else(|| CacheError::UnknownBlock(name.to_string()))?;
    Ok(pi_of_block(&b.members))
}

/// Γ and Π through the boolean and sharp products of `M` and `Mᵀ`.
pub fn definitional(family: &BlockFamily) -> (BoolMatrix, TritMatrix) {
    let m = membership_matrix(family);
    let mt = m.transpose();
    let g = bool_product(&m, &mt).expect("M and Mᵀ are conformable");
    let p = sharp_product(&m, &mt).expect("families have at least one block");
    (g, p)
}

/// Γ and Π by scalar evaluation of every entry over every block, O(m·n²).
/// Used as the baseline the fast construction is measured against.
pub fn scalar_characteristic(family: &BlockFamily) -> (BoolMatrix, TritMatrix) {
    let n = family.n();
    let blocks = family.blocks();
    let mut g = BoolMatrix::zeros(n, n);
    let mut p = TritMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut or = false;
            let mut min = u8::MAX;
            for b in blocks {
                let (a, c) = (b.members.contains(i), b.members.contains(j));
                or |= a && c;
                min = min.min(u8::from(c) + 1 - u8::from(a));
            }
            g.set(i, j, or);
            p.set(i, j, min);
        }
    }
    (g, p)
}

/// For each object, the indices of the blocks that contain it.
pub(crate) fn memberships(blocks: &[Block], n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n];
    for (j, b) in blocks.iter().enumerate() {
        for i in b.members.iter() {
            out[i].push(j);
        }
    }
    out
}

/// Union of the listed blocks.
pub(crate) fn union_row(blocks: &[Block], which: &[usize], out: &mut [u64]) {
    out.fill(0);
    for &j in which {
        bits::or_into(out, blocks[j].members.words());
    }
}

/// Intersection of the listed blocks (`which` non-empty).
pub(crate) fn intersection_row(blocks: &[Block], which: &[usize], out: &mut [u64]) {
    out.copy_from_slice(blocks[which[0]].members.words());
    for &j in &which[1..] {
        bits::and_into(out, blocks[j].members.words());
    }
}

/// Intersection of all blocks.
pub(crate) fn all_blocks_meet(blocks: &[Block], n: usize) -> ObjectSet {
    let mut acc = ObjectSet::full(n);
    for b in blocks {
        acc.intersect_with(&b.members);
    }
    acc
}

/// Writes Γ row `i` and Π row `i` for an object contained in `member_blocks`.
pub(crate) fn write_rows(
    gamma: &mut BoolMatrix,
    pi: &mut TritMatrix,
    blocks: &[Block],
    i: usize,
    member_blocks: &[usize],
    meet_all: &ObjectSet,
) {
    let n = gamma.cols();
    let mut row = vec![0u64; bits::words_for(n)];
    union_row(blocks, member_blocks, &mut row);
    gamma.set_row(i, &row);
    if member_blocks.is_empty() {
        let ones = ObjectSet::full(n);
        pi.set_row(i, ones.words(), meet_all.words());
    } else {
        intersection_row(blocks, member_blocks, &mut row);
        let zero = vec![0u64; row.len()];
        pi.set_row(i, &row, &zero);
    }
}

pub(crate) fn assemble(
    family: BlockFamily,
    gamma: BoolMatrix,
    pi: TritMatrix,
    work: WorkStats,
) -> CharCache {
    let covered = family.covered();
    CharCache {
        family,
        gamma,
        pi,
        covered,
        work,
    }
}

/// Γ and Π of `family` folded row by row from its membership vectors.
pub(crate) fn aggregate(family: &BlockFamily) -> (BoolMatrix, TritMatrix) {
    let n = family.n();
    let blocks = family.blocks();
    let members = memberships(blocks, n);
    let meet_all = all_blocks_meet(blocks, n);
    let ones = ObjectSet::full(n);

    let mut gamma = BoolMatrix::zeros(n, n);
    gamma.fill_rows(|i, row| union_row(blocks, &members[i], row));

    let mut pi = TritMatrix::zeros(n, n);
    let (ge1, ge2) = pi.planes_mut();
    ge1.fill_rows(|i, row| {
        if members[i].is_empty() {
            row.copy_from_slice(ones.words());
        } else {
            intersection_row(blocks, &members[i], row);
        }
    });
    ge2.fill_rows(|i, row| {
        if members[i].is_empty() {
            row.copy_from_slice(meet_all.words());
        } else {
            row.fill(0);
        }
    });
    (gamma, pi)
}

/// Builds Γ and Π row by row from the block membership vectors.
pub fn build_cache(family: &BlockFamily) -> CharCache {
    let mut tracker = Tracker::new(family.m());
    tracker.read_all();
    let (gamma, pi) = aggregate(family);
    tracker.stats.rows_recomputed = 2 * family.n();

    let cache = assemble(family.clone(), gamma, pi, tracker.stats);
    if cfg!(debug_assertions) && family.n() <= DEBUG_CROSS_CHECK_LIMIT {
        assert!(
            cache.matches_definitional(),
            "fast construction diverged from M·Mᵀ / M⊙Mᵀ"
        );
    }
    cache
}
