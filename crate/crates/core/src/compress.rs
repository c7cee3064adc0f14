//! Compression of a covering through a consistent function.
//!
//! A map `f: U → V` is consistent when each fiber `[x]_f` lies inside `N(x)`.
//! Objects sharing a fiber then belong to exactly the same blocks, so SH and SL
//! of an `f`-saturated set can be computed on the smaller image covering and
//! pulled back.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::approx::{approx_matrix, neighborhood, ApproxError, ApproxSextuple};
use crate::charmat::build_cache;
use crate::model::{content, valid_name, BlockFamily, ObjectSet, Universe};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompressError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("map is defined on {found} objects, universe has {expected}")]
    UniverseMismatch { expected: usize, found: usize },
    #[error("target `{0}` has no preimage")]
    EmptyFiber(String),
    #[error("map does not assign `{0}`")]
    Unassigned(String),
    #[error(
        "map is not consistent: `{label}` shares an image with `{other}` outside its neighborhood"
    )]
    Inconsistent { label: String, other: String },
    #[error("query set is not a union of fibers (`{0}` is split)")]
    NotSaturated(String),
    #[error(transparent)]
    Approx(#[from] ApproxError),
}

/// `f: source → target`, stored as one target index per source object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistentMap {
    source: Arc<Universe>,
    target: Arc<Universe>,
    assignment: Vec<usize>,
}

impl ConsistentMap {
    /// Builds a map from target indices. Every target must be hit.
    pub fn new(
        source: Arc<Universe>,
        target: Arc<Universe>,
        assignment: Vec<usize>,
    ) -> Result<Self, CompressError> {
        if assignment.len() != source.len() {
            return Err(CompressError::UniverseMismatch {
                expected: source.len(),
                found: assignment.len(),
            });
        }
        let mut hit = vec![false; target.len()];
        for &t in &assignment {
            assert!(t < target.len(), "target index out of range");
            hit[t] = true;
        }
        if let Some(t) = hit.iter().position(|h| !h) {
            return Err(CompressError::EmptyFiber(target.label(t).to_string()));
        }
        Ok(ConsistentMap {
            source,
            target,
            assignment,
        })
    }

    pub fn identity(universe: Arc<Universe>) -> Self {
        let assignment = (0..universe.len()).collect();
        ConsistentMap {
            source: universe.clone(),
            target: universe,
            assignment,
        }
    }

    pub fn source(&self) -> &Arc<Universe> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Universe> {
        &self.target
    }

    pub fn image_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    /// `[x]_f` for every target object, in target order.
    pub fn fibers(&self) -> Vec<ObjectSet> {
        let mut out = vec![ObjectSet::empty(self.source.len()); self.target.len()];
        for (i, &t) in self.assignment.iter().enumerate() {
            out[t].insert(i);
        }
        out
    }

    /// `f(X)`.
    pub fn image(&self, x: &ObjectSet) -> ObjectSet {
        ObjectSet::from_indices(self.target.len(), x.iter().map(|i| self.assignment[i]))
    }

    /// `f⁻¹(Y)`.
    pub fn preimage(&self, y: &ObjectSet) -> ObjectSet {
        ObjectSet::from_indices(
            self.source.len(),
            (0..self.source.len()).filter(|&i| y.contains(self.assignment[i])),
        )
    }

    pub fn is_saturated(&self, x: &ObjectSet) -> bool {
        &self.preimage(&self.image(x)) == x
    }
}

/// Parses `x -> y` lines against `source`. Targets are numbered in order of
/// first appearance.
pub fn parse_map(text: &str, source: Arc<Universe>) -> Result<ConsistentMap, CompressError> {
    let mut assignment: Vec<Option<usize>> = vec![None; source.len()];
    let mut targets: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = content(raw);
        if l.is_empty() {
            continue;
        }
        let err = |message: String| CompressError::Parse { line, message };
        let (lhs, rhs) = l
            .split_once("->")
            .ok_or_else(|| err("expected `x -> y`".into()))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        if !valid_name(rhs) {
            return Err(err(format!("invalid target label `{rhs}`")));
        }
        let i = source
            .index_of(lhs)
            .ok_or_else(|| err(format!("unknown object `{lhs}`")))?;
        if assignment[i].is_some() {
            return Err(err(format!("`{lhs}` is mapped twice")));
        }
        let t = *index.entry(rhs.to_string()).or_insert_with(|| {
            targets.push(rhs.to_string());
            targets.len() - 1
        });
        assignment[i] = Some(t);
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| CompressError::Unassigned(source.label(i).to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let target = Arc::new(Universe::new(targets).expect("targets are distinct valid names"));
    Ok(ConsistentMap {
        source,
        target,
        assignment,
    })
}

pub fn serialize_map(map: &ConsistentMap) -> String {
    let mut out = String::new();
    for (i, &t) in map.assignment.iter().enumerate() {
        out.push_str(&format!(
            "{} -> {}\n",
            map.source.label(i),
            map.target.label(t)
        ));
    }
    out
}

fn check_universe(family: &BlockFamily, map: &ConsistentMap) -> Result<(), CompressError> {
    if family.universe().labels() != map.source.labels() {
        return Err(CompressError::UniverseMismatch {
            expected: family.n(),
            found: map.source.len(),
        });
    }
    Ok(())
}

/// First object whose fiber escapes its neighborhood, with a witness.
fn first_violation(
    family: &BlockFamily,
    map: &ConsistentMap,
) -> Result<Option<(usize, usize)>, CompressError> {
    let fibers = map.fibers();
    for i in 0..family.n() {
        let nb = neighborhood(family, i)?;
        let fiber = &fibers[map.assignment[i]];
        if let Some(j) = (fiber - &nb).iter().next() {
            return Ok(Some((i, j)));
        }
    }
    Ok(None)
}

/// Whether `[x]_f ⊆ N(x)` for every object. Requires a covering.
pub fn check_consistent(family: &BlockFamily, map: &ConsistentMap) -> Result<bool, CompressError> {
    check_universe(family, map)?;
    Ok(first_violation(family, map)?.is_none())
}

fn require_consistent(family: &BlockFamily, map: &ConsistentMap) -> Result<(), CompressError> {
    check_universe(family, map)?;
    match first_violation(family, map)? {
        None => Ok(()),
        Some((i, j)) => {
            let u = family.universe();
            Err(CompressError::Inconsistent {
                label: u.label(i).to_string(),
                other: u.label(j).to_string(),
            })
        }
    }
}

/// `f(𝒞)`: the image of each block, names kept.
pub fn induced_family(
    family: &BlockFamily,
    map: &ConsistentMap,
) -> Result<BlockFamily, CompressError> {
    require_consistent(family, map)?;
    let blocks = family
        .blocks()
        .iter()
        .map(|b| (b.name.clone(), map.image(&b.members)));
    Ok(BlockFamily::new(map.target.clone(), blocks)
        .expect("images of non-empty blocks are non-empty"))
}

/// SH/SL of `x` computed on the compressed covering, both in the target
/// universe and pulled back to the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedApprox {
    pub image: ObjectSet,
    pub target_sh: ObjectSet,
    pub target_sl: ObjectSet,
    pub sh: ObjectSet,
    pub sl: ObjectSet,
}

fn saturated(
    family: &BlockFamily,
    map: &ConsistentMap,
    x: &ObjectSet,
) -> Result<(), CompressError> {
    if x.universe_len() != family.n() {
        return Err(ApproxError::SizeMismatch {
            expected: family.n(),
            found: x.universe_len(),
        }
        .into());
    }
    if !map.is_saturated(x) {
        let split = (&map.preimage(&map.image(x)) - x)
            .iter()
            .next()
            .expect("not saturated");
        return Err(CompressError::NotSaturated(
            map.target.label(map.assignment[split]).to_string(),
        ));
    }
    Ok(())
}

pub fn approx_via_compression(
    family: &BlockFamily,
    map: &ConsistentMap,
    x: &ObjectSet,
) -> Result<CompressedApprox, CompressError> {
    let induced = induced_family(family, map)?;
    saturated(family, map, x)?;
    let image = map.image(x);
    let small = approx_matrix(&build_cache(&induced), &image)?;
    Ok(CompressedApprox {
        sh: map.preimage(&small.sh),
        sl: map.preimage(&small.sl),
        target_sh: small.sh,
        target_sl: small.sl,
        image,
    })
}

/// All six operators pulled back through the quotient. Only SH and SL are
/// known to agree with the uncompressed values; the rest are for comparison.
pub fn sextuple_via_compression(
    family: &BlockFamily,
    map: &ConsistentMap,
    x: &ObjectSet,
) -> Result<ApproxSextuple, CompressError> {
    let induced = induced_family(family, map)?;
    saturated(family, map, x)?;
    let s = approx_matrix(&build_cache(&induced), &map.image(x))?;
    Ok(ApproxSextuple {
        sh: map.preimage(&s.sh),
        sl: map.preimage(&s.sl),
        ih: map.preimage(&s.ih),
        il: map.preimage(&s.il),
        xh: map.preimage(&s.xh),
        xl: map.preimage(&s.xl),
    })
}

/// The coarsest consistent map: objects with identical block membership share
/// an image. Target labels are `y1, y2, ...` in order of first appearance.
pub fn signature_quotient(family: &BlockFamily) -> ConsistentMap {
    let n = family.n();
    let mut classes: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut assignment = Vec::with_capacity(n);
    for i in 0..n {
        let sig: Vec<usize> = family.blocks_containing(i).collect();
        let next = classes.len();
        assignment.push(*classes.entry(sig).or_insert(next));
    }
    let target =
        Universe::new((1..=classes.len()).map(|k| format!("y{k}"))).expect("generated labels");
    ConsistentMap {
        source: family.universe().clone(),
        target: Arc::new(target),
        assignment,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::approx_oracle;
    use crate::model::parse_family;

    const SIX: &str = "universe: x1 x2 x3 x4 x5 x6\nblock C1: x1 x2\nblock C2: x3 x4 x5 x6\nblock C3: x1 x2 x5 x6\n";
    const FOUR: &str =
        "universe: x1 x2 x3 x4\nblock C1: x1 x4\nblock C2: x1 x2 x4\nblock C3: x3 x4\n";
    const PAIRS: &str = "x1 -> y1\nx2 -> y1\nx3 -> y2\nx4 -> y2\nx5 -> y3\nx6 -> y3\n";

    #[test]
    fn six_object_cover_compresses_to_three() {
        let f = parse_family(SIX).unwrap();
        let map = parse_map(PAIRS, f.universe().clone()).unwrap();
        assert!(check_consistent(&f, &map).unwrap());
        let g = induced_family(&f, &map).unwrap();
        let t = g.universe();
        let blocks: Vec<String> = g
            .blocks()
            .iter()
            .map(|b| format!("{}={}", b.name, t.format_set(&b.members)))
            .collect();
        assert_eq!(blocks, ["C1=y1", "C2=y2 y3", "C3=y1 y3"]);

        let x = f.universe().set_of(["x1", "x2", "x3", "x4"]).unwrap();
        let r = approx_via_compression(&f, &map, &x).unwrap();
        assert_eq!(t.format_set(&r.image), "y1 y2");
        assert_eq!(t.format_set(&r.target_sh), "y1 y2 y3");
        assert_eq!(t.format_set(&r.target_sl), "");
        assert_eq!(r.sh, ObjectSet::full(6));
        let direct = approx_oracle(&f, &x).unwrap();
        assert_eq!((r.sh, r.sl), (direct.sh, direct.sl));
    }

    #[test]
    fn signature_quotient_matches_hand_map() {
        let f = parse_family(SIX).unwrap();
        let q = signature_quotient(&f);
        assert_eq!(serialize_map(&q), PAIRS);
    }

    #[test]
    fn collapsing_x1_x3_is_inconsistent() {
        let f = parse_family(FOUR).unwrap();
        let map = parse_map("x1 -> a\nx2 -> b\nx3 -> a\nx4 -> c\n", f.universe().clone()).unwrap();
        assert!(!check_consistent(&f, &map).unwrap());
        assert!(matches!(
            induced_family(&f, &map),
            Err(CompressError::Inconsistent { .. })
        ));
    }

    #[test]
    fn identity_map() {
        let f = parse_family(FOUR).unwrap();
        let id = ConsistentMap::identity(f.universe().clone());
        assert!(check_consistent(&f, &id).unwrap());
        assert_eq!(induced_family(&f, &id).unwrap(), f);
        for bits in 0u32..16 {
            let x = ObjectSet::from_indices(4, (0..4).filter(|i| bits >> i & 1 == 1));
            let r = approx_via_compression(&f, &id, &x).unwrap();
            let d = approx_matrix(&build_cache(&f), &x).unwrap();
            assert_eq!((r.sh, r.sl), (d.sh, d.sl));
        }
    }

    #[test]
    fn partition_collapses_to_discrete() {
        let f = parse_family("universe: a b c d e\nblock P: a b\nblock Q: c d e\n").unwrap();
        let q = signature_quotient(&f);
        let g = induced_family(&f, &q).unwrap();
        assert_eq!(g.n(), 2);
        assert!(g.blocks().iter().all(|b| b.members.count() == 1));
    }

    #[test]
    fn non_saturated_query_is_rejected() {
        let f = parse_family(SIX).unwrap();
        let map = parse_map(PAIRS, f.universe().clone()).unwrap();
        let x = f.universe().set_of(["x1", "x3", "x4"]).unwrap();
        assert_eq!(
            approx_via_compression(&f, &map, &x),
            Err(CompressError::NotSaturated("y1".into()))
        );
    }

    #[test]
    fn parse_errors() {
        let f = parse_family(FOUR).unwrap();
        let u = f.universe().clone();
        assert!(matches!(
            parse_map("x1 y1", u.clone()),
            Err(CompressError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_map("x1 -> a\nx9 -> b", u.clone()),
            Err(CompressError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_map("x1 -> a\nx1 -> b", u.clone()),
            Err(CompressError::Parse { line: 2, .. })
        ));
        assert_eq!(
            parse_map("x1 -> a\nx2 -> a\nx3 -> a", u),
            Err(CompressError::Unassigned("x4".into()))
        );
    }
}
