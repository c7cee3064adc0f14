//! Incremental maintenance of Γ and Π under dynamic coverings.
//!
//! Six update kinds are supported: adding blocks (AE), deleting blocks (DE),
//! adding objects (AO), deleting objects (DO), moving an object between two
//! blocks (CA move) and splitting an object off into a fresh singleton block
//! (CA isolate). Every update returns a new [`CharCache`] equal to
//! [`build_cache`](crate::charmat::build_cache) of the updated family, while
//! touching only the rows, columns and blocks the update can affect. [`apply`]
//! and the `apply_*` functions leave their input alone; [`apply_mut`] updates
//! in place and leaves the cache as it was when the update is rejected.
//!
//! Entries of Π for objects outside every block depend on the intersection of
//! all blocks. DO recomputes those rows when it drops a block, and isolate
//! always does.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::bits;
use crate::charmat::{aggregate, all_blocks_meet, assemble, write_rows, CharCache, Tracker};
use crate::model::{content, valid_name, Block, BlockFamily, ObjectSet, Universe};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeltaError {
    #[error("block `{0}` already exists")]
    DuplicateBlock(String),
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
    #[error("new block `{0}` is empty")]
    EmptyBlock(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("unknown object `{0}`")]
    UnknownLabel(String),
    #[error("object `{0}` already exists")]
    LabelCollision(String),
    #[error("new object `{0}` is not assigned to any block")]
    NoBlocksForObject(String),
    #[error("cannot delete every block")]
    DeleteAllBlocks,
    #[error("cannot delete every object")]
    DeleteAllObjects,
    #[error("deleting these objects leaves no non-empty block")]
    LeavesNoBlocks,
    #[error("object `{label}` is not in block `{block}`")]
    NotInBlock { label: String, block: String },
    #[error("object `{label}` is already in block `{block}`")]
    AlreadyInBlock { label: String, block: String },
    #[error("moving `{label}` would empty block `{block}`")]
    WouldEmptyBlock { label: String, block: String },
}

/// One dynamic-covering update, addressed by labels and block names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delta {
    /// AE: append blocks given as `(name, member labels)`.
    AddBlocks(Vec<(String, Vec<String>)>),
    /// DE: remove the named blocks.
    DeleteBlocks(Vec<String>),
    /// AO: append objects given as `(label, names of the blocks it joins)`.
    AddObjects(Vec<(String, Vec<String>)>),
    /// DO: remove the labelled objects from the universe and every block.
    DeleteObjects(Vec<String>),
    /// CA: move an object from one block to another.
    Move {
        label: String,
        from: String,
        to: String,
    },
    /// CA: take an object out of a block and put it alone in a new block.
    Isolate {
        label: String,
        from: String,
        new_block: String,
    },
}

impl Delta {
    /// Short tag for the update kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Delta::AddBlocks(_) => "AE",
            Delta::DeleteBlocks(_) => "DE",
            Delta::AddObjects(_) => "AO",
            Delta::DeleteObjects(_) => "DO",
            Delta::Move { .. } => "CA-move",
            Delta::Isolate { .. } => "CA-isolate",
        }
    }
}

impl fmt::Display for Delta {
    /// Renders the delta in the script syntax, one line per elementary step.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = match self {
            Delta::AddBlocks(bs) => bs
                .iter()
                .map(|(n, ls)| format!("add-block {n}: {}", ls.join(" ")))
                .collect(),
            Delta::DeleteBlocks(ns) => ns.iter().map(|n| format!("del-block {n}")).collect(),
            Delta::AddObjects(os) => os
                .iter()
                .map(|(l, bs)| format!("add-object {l}: {}", bs.join(" ")))
                .collect(),
            Delta::DeleteObjects(ls) => ls.iter().map(|l| format!("del-object {l}")).collect(),
            Delta::Move { label, from, to } => vec![format!("move {label} {from} {to}")],
            Delta::Isolate {
                label,
                from,
                new_block,
            } => vec![format!("isolate {label} {from} {new_block}")],
        };
        f.write_str(&lines.join("\n"))
    }
}

fn block_index(family: &BlockFamily, name: &str) -> Result<usize, DeltaError> {
    family
        .block_index(name)
        .ok_or_else(|| DeltaError::UnknownBlock(name.to_string()))
}

fn object_index(family: &BlockFamily, label: &str) -> Result<usize, DeltaError> {
    family
        .universe()
        .index_of(label)
        .ok_or_else(|| DeltaError::UnknownLabel(label.to_string()))
}

fn rebuild_family(universe: Arc<Universe>, blocks: Vec<Block>) -> BlockFamily {
    BlockFamily::from_blocks(universe, blocks)
        .expect("update preconditions keep the family well-formed")
}

fn check_new_block_names<'a>(
    family: &BlockFamily,
    names: impl IntoIterator<Item = &'a str>,
) -> Result<(), DeltaError> {
    let mut seen = HashSet::new();
    for name in names {
        if !valid_name(name) {
            return Err(DeltaError::InvalidName(name.to_string()));
        }
        if family.block(name).is_some() || !seen.insert(name) {
            return Err(DeltaError::DuplicateBlock(name.to_string()));
        }
    }
    Ok(())
}

/// Rewrites the Π rows of objects outside every block: `1 + (∩ all blocks)`.
fn refresh_uncovered_rows(cache: &mut CharCache, tracker: &mut Tracker) {
    let uncovered = !&cache.covered;
    if uncovered.is_empty() {
        return;
    }
    tracker.read_all();
    let n = cache.family.n();
    let meet = all_blocks_meet(cache.family.blocks(), n);
    let ones = ObjectSet::full(n);
    for i in uncovered.iter() {
        cache.pi.set_row(i, ones.words(), meet.words());
        tracker.stats.rows_recomputed += 1;
    }
}

/// Recomputes Γ and Π row `k` and column `k` from the current family.
///
/// Γ is symmetric, so its column mirrors the row. Π column `k` at a covered
/// row `i` is 1 iff `x_k` lies in every block containing `x_i`, i.e. iff
/// `x_i` is in no block that misses `x_k`; at an uncovered row it is
/// `1 + [x_k in every block]`.
fn recompute_cross(
    gamma: &mut crate::BoolMatrix,
    pi: &mut crate::TritMatrix,
    family: &BlockFamily,
    covered: &ObjectSet,
    k: usize,
    tracker: &mut Tracker,
) {
    let n = family.n();
    let blocks = family.blocks();
    let containing: Vec<usize> = family.blocks_containing(k).collect();
    for &j in &containing {
        tracker.read(j);
    }
    let meet_all = if covered.is_full() {
        None
    } else {
        Some(all_blocks_meet(blocks, n))
    };
    write_rows(
        gamma,
        pi,
        blocks,
        k,
        &containing,
        meet_all.as_ref().unwrap_or(&ObjectSet::empty(n)),
    );
    tracker.stats.rows_recomputed += 2;

    let row = gamma.row_set(k);
    for i in 0..n {
        gamma.set(i, k, row.contains(i));
    }

    let mut missing_k = ObjectSet::empty(n);
    for (j, b) in blocks.iter().enumerate() {
        if !b.members.contains(k) {
            tracker.read(j);
            missing_k.union_with(&b.members);
        }
    }
    let k_everywhere = meet_all.as_ref().is_some_and(|m| m.contains(k));
    for i in (0..n).filter(|&i| i != k) {
        let v = if covered.contains(i) {
            u8::from(!missing_k.contains(i))
        } else {
            1 + u8::from(k_everywhere)
        };
        pi.set(i, k, v);
    }
    tracker.stats.cols_recomputed += 2;
    if meet_all.is_some() {
        tracker.read_all();
    }
}

/// AE: appends new blocks. Γ' = Γ ∨ ⋁ Γ_new and Π' = Π ∧ ⋀ Π_new; only rows of
/// members of a new block (and uncovered rows of Π) change, and only the new
/// membership vectors are read.
pub fn apply_ae(
    cache: &CharCache,
    new_blocks: &[(String, ObjectSet)],
) -> Result<CharCache, DeltaError> {
    let mut out = cache.clone();
    ae_in_place(&mut out, new_blocks)?;
    Ok(out)
}

fn ae_in_place(
    cache: &mut CharCache,
    new_blocks: &[(String, ObjectSet)],
) -> Result<(), DeltaError> {
    let family = &cache.family;
    let n = family.n();
    check_new_block_names(family, new_blocks.iter().map(|(name, _)| name.as_str()))?;
    for (name, set) in new_blocks {
        assert_eq!(set.universe_len(), n, "block over a different universe");
        if set.is_empty() {
            return Err(DeltaError::EmptyBlock(name.clone()));
        }
    }

    let m = family.m();
    let mut blocks = family.blocks().to_vec();
    blocks.extend(new_blocks.iter().map(|(name, set)| Block {
        name: name.clone(),
        members: Arc::new(set.clone()),
    }));
    let mut tracker = Tracker::new(blocks.len());

    let CharCache {
        gamma, pi, covered, ..
    } = cache;
    let zero = vec![0u64; bits::words_for(n)];
    for (offset, (_, d)) in new_blocks.iter().enumerate() {
        tracker.read(m + offset);
        let uncovered_before = !&*covered;
        for i in d.iter() {
            bits::or_into(gamma.row_words_mut(i), d.words());
            let (ge1, ge2) = pi.planes_mut();
            bits::and_into(ge1.row_words_mut(i), d.words());
            ge2.set_row(i, &zero);
            tracker.stats.rows_recomputed += 2;
        }
        // non-member rows meet d + 1, which only lowers entries equal to 2
        for i in (&uncovered_before - d).iter() {
            bits::and_into(pi.planes_mut().1.row_words_mut(i), d.words());
            tracker.stats.rows_recomputed += 1;
        }
        covered.union_with(d);
    }

    cache.family = rebuild_family(cache.family.universe().clone(), blocks);
    cache.work = tracker.stats;
    Ok(())
}

/// DE: removes blocks and refolds Γ and Π from the surviving membership
/// vectors. OR and min have no inverse, so nothing is subtracted.
pub fn apply_de(cache: &CharCache, names: &[String]) -> Result<CharCache, DeltaError> {
    let family = &cache.family;
    let mut doomed = HashSet::new();
    for name in names {
        doomed.insert(block_index(family, name)?);
    }
    if doomed.len() == family.m() {
        return Err(DeltaError::DeleteAllBlocks);
    }
    let blocks: Vec<Block> = family
        .blocks()
        .iter()
        .enumerate()
        .filter(|(j, _)| !doomed.contains(j))
        .map(|(_, b)| b.clone())
        .collect();
    let family = rebuild_family(family.universe().clone(), blocks);
    let mut tracker = Tracker::new(family.m());
    tracker.read_all();
    let (gamma, pi) = aggregate(&family);
    tracker.stats.rows_recomputed = 2 * family.n();
    Ok(assemble(family, gamma, pi, tracker.stats))
}

/// AO: appends objects, each joining one or more existing blocks.
///
/// The leading n×n parts of Γ and Π are copied unchanged. New rows of Γ and
/// Π are computed from the extended blocks, Γ's new columns mirror its new
/// rows, and Π's new columns for old rows are filled entry by entry.
pub fn apply_ao(
    cache: &CharCache,
    new_objects: &[(String, Vec<String>)],
) -> Result<CharCache, DeltaError> {
    let mut out = cache.clone();
    ao_in_place(&mut out, new_objects)?;
    Ok(out)
}

fn ao_in_place(
    cache: &mut CharCache,
    new_objects: &[(String, Vec<String>)],
) -> Result<(), DeltaError> {
    let family = &cache.family;
    let n = family.n();
    let t = new_objects.len();
    let mut fresh = HashSet::new();
    let mut joins: Vec<Vec<usize>> = Vec::with_capacity(t);
    for (label, block_names) in new_objects {
        if !valid_name(label) {
            return Err(DeltaError::InvalidName(label.clone()));
        }
        if family.universe().index_of(label).is_some() || !fresh.insert(label.as_str()) {
            return Err(DeltaError::LabelCollision(label.clone()));
        }
        if block_names.is_empty() {
            return Err(DeltaError::NoBlocksForObject(label.clone()));
        }
        let mut js = block_names
            .iter()
            .map(|b| block_index(family, b))
            .collect::<Result<Vec<_>, _>>()?;
        js.sort_unstable();
        js.dedup();
        joins.push(js);
    }

    let nt = n + t;
    let extra: Vec<String> = new_objects.iter().map(|(l, _)| l.clone()).collect();
    let universe = family.universe().appended(&extra);
    let mut extended: Vec<ObjectSet> = family
        .blocks()
        .iter()
        .map(|b| b.members.extended(nt))
        .collect();
    for (s, js) in joins.iter().enumerate() {
        for &j in js {
            extended[j].insert(n + s);
        }
    }
    let blocks: Vec<Block> = family
        .blocks()
        .iter()
        .zip(extended)
        .map(|(b, members)| Block {
            name: b.name.clone(),
            members: Arc::new(members),
        })
        .collect();
    let new_family = rebuild_family(Arc::new(universe), blocks);
    let mut tracker = Tracker::new(new_family.m());

    let covered_before = std::mem::replace(&mut cache.covered, ObjectSet::empty(0));
    let mut covered = covered_before.extended(nt);
    for s in 0..t {
        covered.insert(n + s);
    }
    let CharCache { gamma, pi, .. } = cache;
    gamma.grow(nt, nt);
    pi.grow(nt, nt);

    let blocks = new_family.blocks();
    let empty = ObjectSet::empty(nt);
    for (s, js) in joins.iter().enumerate() {
        for &j in js {
            tracker.read(j);
        }
        write_rows(gamma, pi, blocks, n + s, js, &empty);
        tracker.stats.rows_recomputed += 2;
    }

    // Γ: new columns mirror new rows.
    let gamma_cols: Vec<Vec<u64>> = (n..nt).map(|r| gamma.row_words(r).to_vec()).collect();
    gamma.write_columns(
        n,
        &gamma_cols.iter().map(Vec::as_slice).collect::<Vec<_>>(),
        n,
    );

    // Π: new columns for old rows. A covered row i has Π[i][r] = 1 unless i
    // shares a block that misses r; an uncovered row holds 1 + [r in every block].
    let meet_all = if covered_before.is_full() {
        None
    } else {
        Some(all_blocks_meet(blocks, nt))
    };
    let uncovered = (!&covered_before).extended(nt);
    let mut ge1_cols = Vec::with_capacity(t);
    let mut ge2_cols = Vec::with_capacity(t);
    for s in 0..t {
        let r = n + s;
        let mut missing_r = ObjectSet::empty(nt);
        for (j, b) in blocks.iter().enumerate() {
            if !b.members.contains(r) {
                tracker.read(j);
                missing_r.union_with(&b.members);
            }
        }
        ge1_cols.push(&!&missing_r | &uncovered);
        let r_everywhere = meet_all.as_ref().is_some_and(|m| m.contains(r));
        ge2_cols.push(if r_everywhere {
            uncovered.clone()
        } else {
            ObjectSet::empty(nt)
        });
    }
    let (ge1, ge2) = pi.planes_mut();
    ge1.write_columns(
        n,
        &ge1_cols.iter().map(ObjectSet::words).collect::<Vec<_>>(),
        n,
    );
    ge2.write_columns(
        n,
        &ge2_cols.iter().map(ObjectSet::words).collect::<Vec<_>>(),
        n,
    );
    if meet_all.is_some() {
        tracker.read_all();
    }
    tracker.stats.cols_recomputed = 2 * t;

    cache.covered = covered;
    cache.family = new_family;
    cache.work = tracker.stats;
    Ok(())
}

/// DO: removes objects. Γ' and Π' are Γ and Π with the deleted rows and
/// columns cut out; blocks left empty are dropped.
pub fn apply_do(cache: &CharCache, labels: &[String]) -> Result<CharCache, DeltaError> {
    let family = &cache.family;
    let n = family.n();
    let mut doomed = ObjectSet::empty(n);
    for l in labels {
        doomed.insert(object_index(family, l)?);
    }
    let keep: Vec<usize> = (!&doomed).iter().collect();
    if keep.is_empty() {
        return Err(DeltaError::DeleteAllObjects);
    }

    let runs = bits::runs_of(&keep);
    let blocks: Vec<Block> = family
        .blocks()
        .iter()
        .filter_map(|b| {
            let members = b.members.select_runs(&runs, keep.len());
            (!members.is_empty()).then(|| Block {
                name: b.name.clone(),
                members: Arc::new(members),
            })
        })
        .collect();
    if blocks.is_empty() {
        return Err(DeltaError::LeavesNoBlocks);
    }
    let dropped = blocks.len() < family.m();
    let universe = Universe::from_trusted(
        keep.iter()
            .map(|&i| family.universe().labels()[i].clone())
            .collect(),
    );
    let new_family = rebuild_family(Arc::new(universe), blocks);
    let mut tracker = Tracker::new(new_family.m());

    let mut out = CharCache {
        gamma: cache.gamma.select(&keep, &keep),
        pi: cache.pi.select(&keep, &keep),
        covered: cache.covered.select(&keep),
        family: new_family,
        work: Default::default(),
    };
    if dropped {
        refresh_uncovered_rows(&mut out, &mut tracker);
    }
    out.work = tracker.stats;
    Ok(out)
}

fn ca_target(cache: &CharCache, label: &str, from: &str) -> Result<(usize, usize), DeltaError> {
    let k = object_index(&cache.family, label)?;
    let f = block_index(&cache.family, from)?;
    if !cache.family.blocks()[f].members.contains(k) {
        return Err(DeltaError::NotInBlock {
            label: label.to_string(),
            block: from.to_string(),
        });
    }
    Ok((k, f))
}

/// CA move: takes `label` out of `from` and puts it into `to`. Only row and
/// column `k` of Γ and Π change.
pub fn apply_ca_move(
    cache: &CharCache,
    label: &str,
    from: &str,
    to: &str,
) -> Result<CharCache, DeltaError> {
    let mut out = cache.clone();
    ca_move_in_place(&mut out, label, from, to)?;
    Ok(out)
}

fn ca_move_in_place(
    cache: &mut CharCache,
    label: &str,
    from: &str,
    to: &str,
) -> Result<(), DeltaError> {
    let (k, f) = ca_target(cache, label, from)?;
    let t = block_index(&cache.family, to)?;
    let blocks = cache.family.blocks();
    if blocks[t].members.contains(k) {
        return Err(DeltaError::AlreadyInBlock {
            label: label.to_string(),
            block: to.to_string(),
        });
    }
    if blocks[f].members.count() == 1 {
        return Err(DeltaError::WouldEmptyBlock {
            label: label.to_string(),
            block: from.to_string(),
        });
    }

    let mut blocks = blocks.to_vec();
    let mut shrunk = (*blocks[f].members).clone();
    shrunk.remove(k);
    blocks[f].members = Arc::new(shrunk);
    let mut grown = (*blocks[t].members).clone();
    grown.insert(k);
    blocks[t].members = Arc::new(grown);
    let family = rebuild_family(cache.family.universe().clone(), blocks);

    let mut tracker = Tracker::new(family.m());
    recompute_cross(
        &mut cache.gamma,
        &mut cache.pi,
        &family,
        &cache.covered,
        k,
        &mut tracker,
    );
    cache.family = family;
    cache.work = tracker.stats;
    Ok(())
}

/// CA isolate: takes `label` out of `from` and places it alone in a new block
/// `new_block`, appended last. When `from` held only that object it is
/// dropped, which leaves Γ and Π unchanged. Π rows of uncovered objects are
/// rewritten as well.
pub fn apply_ca_isolate(
    cache: &CharCache,
    label: &str,
    from: &str,
    new_block: &str,
) -> Result<CharCache, DeltaError> {
    let mut out = cache.clone();
    ca_isolate_in_place(&mut out, label, from, new_block)?;
    Ok(out)
}

fn ca_isolate_in_place(
    cache: &mut CharCache,
    label: &str,
    from: &str,
    new_block: &str,
) -> Result<(), DeltaError> {
    let (k, f) = ca_target(cache, label, from)?;
    check_new_block_names(&cache.family, [new_block])?;
    let n = cache.family.n();

    let mut blocks = cache.family.blocks().to_vec();
    let dropped = blocks[f].members.count() == 1;
    if dropped {
        blocks.remove(f);
    } else {
        let mut shrunk = (*blocks[f].members).clone();
        shrunk.remove(k);
        blocks[f].members = Arc::new(shrunk);
    }
    blocks.push(Block {
        name: new_block.to_string(),
        members: Arc::new(ObjectSet::from_indices(n, [k])),
    });
    let family = rebuild_family(cache.family.universe().clone(), blocks);

    let mut tracker = Tracker::new(family.m());
    recompute_cross(
        &mut cache.gamma,
        &mut cache.pi,
        &family,
        &cache.covered,
        k,
        &mut tracker,
    );
    cache.family = family;
    // the new singleton shrinks the intersection of all blocks to at most {x_k}
    if dropped || !cache.covered.is_full() {
        refresh_uncovered_rows(cache, &mut tracker);
    }
    cache.work = tracker.stats;
    Ok(())
}

fn resolve_blocks(
    cache: &CharCache,
    bs: &[(String, Vec<String>)],
) -> Result<Vec<(String, ObjectSet)>, DeltaError> {
    let u = cache.family.universe();
    bs.iter()
        .map(|(name, labels)| {
            u.set_of(labels)
                .map(|s| (name.clone(), s))
                .map_err(|e| match e {
                    crate::model::FamilyError::UnknownLabel(l) => DeltaError::UnknownLabel(l),
                    other => DeltaError::InvalidName(other.to_string()),
                })
        })
        .collect()
}

/// Applies one delta, returning the updated cache.
pub fn apply(cache: &CharCache, delta: &Delta) -> Result<CharCache, DeltaError> {
    match delta {
        Delta::DeleteBlocks(names) => apply_de(cache, names),
        Delta::DeleteObjects(labels) => apply_do(cache, labels),
        _ => {
            let mut out = cache.clone();
            apply_mut(&mut out, delta)?;
            Ok(out)
        }
    }
}

/// Applies one delta in place. AE, AO and CA touch only the affected rows
/// and columns; DE and DO swap in freshly built matrices. On error the cache
/// is left as it was.
pub fn apply_mut(cache: &mut CharCache, delta: &Delta) -> Result<(), DeltaError> {
    match delta {
        Delta::AddBlocks(bs) => {
            let resolved = resolve_blocks(cache, bs)?;
            ae_in_place(cache, &resolved)
        }
        Delta::DeleteBlocks(names) => {
            *cache = apply_de(cache, names)?;
            Ok(())
        }
        Delta::AddObjects(objs) => ao_in_place(cache, objs),
        Delta::DeleteObjects(labels) => {
            *cache = apply_do(cache, labels)?;
            Ok(())
        }
        Delta::Move { label, from, to } => ca_move_in_place(cache, label, from, to),
        Delta::Isolate {
            label,
            from,
            new_block,
        } => ca_isolate_in_place(cache, label, from, new_block),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Delta { line: usize, source: DeltaError },
}

impl ScriptError {
    pub fn line(&self) -> usize {
        match self {
            ScriptError::Syntax { line, .. } | ScriptError::Delta { line, .. } => *line,
        }
    }
}

/// Parses a delta script into `(line number, delta)` pairs.
///
/// ```text
/// add-block C4: x2 x4
/// del-block C3
/// add-object x5: C1 C2
/// del-object x4
/// move x1 C1 C3
/// isolate x2 C2 C5
/// ```
pub fn parse_script(text: &str) -> Result<Vec<(usize, Delta)>, ScriptError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = content(raw);
        if l.is_empty() {
            continue;
        }
        let syntax = |message: &str| ScriptError::Syntax {
            line,
            message: message.to_string(),
        };
        let (verb, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let rest = rest.trim();
        let words = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        let delta = match verb {
            "add-block" | "add-object" => {
                let (head, tail) = rest.split_once(':').ok_or_else(|| syntax("missing `:`"))?;
                let head = head.trim();
                if head.is_empty() || head.contains(char::is_whitespace) {
                    return Err(syntax("expected a single name before `:`"));
                }
                if verb == "add-block" {
                    Delta::AddBlocks(vec![(head.to_string(), words(tail))])
                } else {
                    Delta::AddObjects(vec![(head.to_string(), words(tail))])
                }
            }
            "del-block" | "del-object" => {
                let args = words(rest);
                if args.len() != 1 {
                    return Err(syntax(&format!("`{verb}` takes exactly one argument")));
                }
                if verb == "del-block" {
                    Delta::DeleteBlocks(args)
                } else {
                    Delta::DeleteObjects(args)
                }
            }
            "move" | "isolate" => {
                let args = words(rest);
                let [a, b, c]: [String; 3] = args
                    .try_into()
                    .map_err(|_| syntax(&format!("`{verb}` takes exactly three arguments")))?;
                if verb == "move" {
                    Delta::Move {
                        label: a,
                        from: b,
                        to: c,
                    }
                } else {
                    Delta::Isolate {
                        label: a,
                        from: b,
                        new_block: c,
                    }
                }
            }
            other => return Err(syntax(&format!("unknown command `{other}`"))),
        };
        out.push((line, delta));
    }
    Ok(out)
}

/// Applies a parsed script top to bottom. The first failure aborts with its
/// line number; the input cache is left as it was.
pub fn apply_script(
    cache: &CharCache,
    script: &[(usize, Delta)],
) -> Result<CharCache, ScriptError> {
    let mut current = cache.clone();
    for (line, delta) in script {
        apply_mut(&mut current, delta).map_err(|source| ScriptError::Delta {
            line: *line,
            source,
        })?;
    }
    Ok(current)
}

/// Per-label summary of how Γ/Π rows differ between two caches.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RowChanges {
    pub added: Vec<String>,
    pub removed: Vec<String>,
    /// Labels present in both whose Γ or Π row differs over the shared labels.
    pub changed: Vec<String>,
}

pub fn changed_rows(before: &CharCache, after: &CharCache) -> RowChanges {
    let (ub, ua) = (before.universe(), after.universe());
    let shared: Vec<(usize, usize)> = ub
        .labels()
        .iter()
        .enumerate()
        .filter_map(|(i, l)| ua.index_of(l).map(|j| (i, j)))
        .collect();
    let mut out = RowChanges {
        added: ua
            .labels()
            .iter()
            .filter(|l| ub.index_of(l).is_none())
            .map(|l| l.to_string())
            .collect(),
        removed: ub
            .labels()
            .iter()
            .filter(|l| ua.index_of(l).is_none())
            .map(|l| l.to_string())
            .collect(),
        changed: Vec::new(),
    };
    for &(i, j) in &shared {
        let differs = shared.iter().any(|&(p, q)| {
            before.gamma.get(i, p) != after.gamma.get(j, q)
                || before.pi.get(i, p) != after.pi.get(j, q)
        });
        if differs {
            out.changed.push(ub.label(i).to_string());
        }
    }
    out
}
