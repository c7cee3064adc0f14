//! The SH/SL, IH/IL and XH/XL approximation pairs, evaluated two ways.
//!
//! [`approx_matrix`] reads them off the characteristic matrices with the
//! boolean and sharp matrix-vector products. [`approx_oracle`] evaluates the
//! set definitions directly from the blocks and serves as the reference.
//! The two agree on SH, SL, IH, IL and XH for every covering. XL does not:
//! the matrix form `ΠᵀΠ ⊙ X` keeps `x` iff every neighborhood containing `x`
//! lies inside `X`, while the set form is the union of neighborhoods inside
//! `X`. [`equivalence_report`] exposes the difference instead of hiding it.

use std::fmt;

use thiserror::Error;

use crate::charmat::CharCache;
use crate::matrix::{bool_product, BoolMatrix};
use crate::model::{BlockFamily, ObjectSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApproxError {
    #[error("family does not cover the universe (uncovered: {})", .uncovered.join(" "))]
    NotCovering { uncovered: Vec<String> },
    #[error("object `{0}` is not covered by any block")]
    UncoveredObject(String),
    #[error("query set has {found} entries, universe has {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("{0} produced an entry 2 on a covering")]
    Invariant(Operator),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    SH,
    SL,
    IH,
    IL,
    XH,
    XL,
}

impl Operator {
    pub const ALL: [Operator; 6] = [
        Operator::SH,
        Operator::SL,
        Operator::IH,
        Operator::IL,
        Operator::XH,
        Operator::XL,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::SH => "SH",
            Operator::SL => "SL",
            Operator::IH => "IH",
            Operator::IL => "IL",
            Operator::XH => "XH",
            Operator::XL => "XL",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Upper and lower approximations of one query set under the three pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxSextuple {
    pub sh: ObjectSet,
    pub sl: ObjectSet,
    pub ih: ObjectSet,
    pub il: ObjectSet,
    pub xh: ObjectSet,
    pub xl: ObjectSet,
}

impl ApproxSextuple {
    pub fn get(&self, op: Operator) -> &ObjectSet {
        match op {
            Operator::SH => &self.sh,
            Operator::SL => &self.sl,
            Operator::IH => &self.ih,
            Operator::IL => &self.il,
            Operator::XH => &self.xh,
            Operator::XL => &self.xl,
        }
    }
}

fn require_covering(family: &BlockFamily) -> Result<(), ApproxError> {
    let covered = family.covered();
    if covered.is_full() {
        return Ok(());
    }
    let u = family.universe();
    Err(ApproxError::NotCovering {
        uncovered: u.names(&!&covered).map(str::to_string).collect(),
    })
}

fn check_len(family: &BlockFamily, x: &ObjectSet) -> Result<(), ApproxError> {
    if x.universe_len() != family.n() {
        return Err(ApproxError::SizeMismatch {
            expected: family.n(),
            found: x.universe_len(),
        });
    }
    Ok(())
}

/// N(x): intersection of the blocks containing object `i`.
pub fn neighborhood(family: &BlockFamily, i: usize) -> Result<ObjectSet, ApproxError> {
    let mut acc: Option<ObjectSet> = None;
    for j in family.blocks_containing(i) {
        let b = &family.blocks()[j].members;
        match acc.as_mut() {
            Some(a) => a.intersect_with(b),
            None => acc = Some((**b).clone()),
        }
    }
    acc.ok_or_else(|| ApproxError::UncoveredObject(family.universe().label(i).to_string()))
}

/// I(x): union of the blocks containing object `i`.
pub fn indiscernible(family: &BlockFamily, i: usize) -> Result<ObjectSet, ApproxError> {
    let mut acc = ObjectSet::empty(family.n());
    let mut any = false;
    for j in family.blocks_containing(i) {
        acc.union_with(&family.blocks()[j].members);
        any = true;
    }
    if any {
        Ok(acc)
    } else {
        Err(ApproxError::UncoveredObject(
            family.universe().label(i).to_string(),
        ))
    }
}

/// ΠᵀΠ over the boolean reading of Π. Defined for coverings only.
pub fn pi_transpose_pi(cache: &CharCache) -> Result<BoolMatrix, ApproxError> {
    require_covering(cache.family())?;
    let pi = cache
        .pi()
        .to_bool()
        .ok_or(ApproxError::Invariant(Operator::XH))?;
    Ok(bool_product(&pi.transpose(), &pi).expect("square"))
}

/// Whether ΠᵀΠ = Π holds for this covering. It does for partitions but not
/// in general; see the crate tests for a four-object counterexample.
pub fn pi_idempotence_holds(cache: &CharCache) -> Result<bool, ApproxError> {
    let ptp = pi_transpose_pi(cache)?;
    Ok(Some(ptp) == cache.pi().to_bool())
}

fn sharp_as_set(m: &BoolMatrix, x: &ObjectSet, op: Operator) -> Result<ObjectSet, ApproxError> {
    let v = m.sharp_vec(x).expect("shape checked");
    if v.contains(&2) {
        return Err(ApproxError::Invariant(op));
    }
    Ok(ObjectSet::from_indices(
        v.len(),
        v.iter()
            .enumerate()
            .filter(|(_, &t)| t == 1)
            .map(|(i, _)| i),
    ))
}

/// All six approximations through the characteristic matrices:
/// `SH = Γ·X`, `SL = Γ⊙X`, `IH = Π·X`, `IL = Π⊙X`, `XH = ΠᵀΠ·X`, `XL = ΠᵀΠ⊙X`.
pub fn approx_matrix(cache: &CharCache, x: &ObjectSet) -> Result<ApproxSextuple, ApproxError> {
    require_covering(cache.family())?;
    check_len(cache.family(), x)?;
    let gamma = cache.gamma();
    let pi = cache
        .pi()
        .to_bool()
        .ok_or(ApproxError::Invariant(Operator::IL))?;
    let ptp = pi_transpose_pi(cache)?;
    Ok(ApproxSextuple {
        sh: gamma.mul_vec(x).expect("shape checked"),
        sl: sharp_as_set(gamma, x, Operator::SL)?,
        ih: pi.mul_vec(x).expect("shape checked"),
        il: sharp_as_set(&pi, x, Operator::IL)?,
        xh: ptp.mul_vec(x).expect("shape checked"),
        xl: sharp_as_set(&ptp, x, Operator::XL)?,
    })
}

/// All six approximations from the set definitions.
pub fn approx_oracle(family: &BlockFamily, x: &ObjectSet) -> Result<ApproxSextuple, ApproxError> {
    require_covering(family)?;
    check_len(family, x)?;
    let n = family.n();

    let upper_s = |set: &ObjectSet| {
        let mut acc = ObjectSet::empty(n);
        for b in family.blocks().iter().filter(|b| b.members.intersects(set)) {
            acc.union_with(&b.members);
        }
        acc
    };
    let sh = upper_s(x);
    let sl = !&upper_s(&!x);

    let neighborhoods = (0..n)
        .map(|i| neighborhood(family, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ih = ObjectSet::empty(n);
    let mut il = ObjectSet::empty(n);
    let mut xh = ObjectSet::empty(n);
    let mut xl = ObjectSet::empty(n);
    for (i, nb) in neighborhoods.iter().enumerate() {
        if nb.intersects(x) {
            ih.insert(i);
            xh.union_with(nb);
        }
        if nb.is_subset(x) {
            il.insert(i);
            xl.union_with(nb);
        }
    }
    Ok(ApproxSextuple {
        sh,
        sl,
        ih,
        il,
        xh,
        xl,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorCheck {
    pub operator: Operator,
    pub matches: bool,
    pub matrix_value: ObjectSet,
    pub oracle_value: ObjectSet,
}

/// Operator-by-operator comparison of the matrix and set forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub checks: Vec<OperatorCheck>,
}

impl EquivalenceReport {
    pub fn check(&self, op: Operator) -> &OperatorCheck {
        self.checks
            .iter()
            .find(|c| c.operator == op)
            .expect("all six operators are reported")
    }

    pub fn mismatches(&self) -> impl Iterator<Item = Operator> + '_ {
        self.checks
            .iter()
            .filter(|c| !c.matches)
            .map(|c| c.operator)
    }

    pub fn all_match(&self) -> bool {
        self.checks.iter().all(|c| c.matches)
    }
}

pub fn equivalence_report(
    cache: &CharCache,
    x: &ObjectSet,
) -> Result<EquivalenceReport, ApproxError> {
    let m = approx_matrix(cache, x)?;
    let o = approx_oracle(cache.family(), x)?;
    let checks = Operator::ALL
        .iter()
        .map(|&op| {
            let (a, b) = (m.get(op).clone(), o.get(op).clone());
            OperatorCheck {
                operator: op,
                matches: a == b,
                matrix_value: a,
                oracle_value: b,
            }
        })
        .collect();
    Ok(EquivalenceReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charmat::build_cache;
    use crate::model::parse_family;

    const SIX: &str = "universe: x1 x2 x3 x4 x5 x6\nblock C1: x1 x2\nblock C2: x3 x4 x5 x6\nblock C3: x1 x2 x5 x6\n";
    const FOUR: &str =
        "universe: x1 x2 x3 x4\nblock C1: x1 x4\nblock C2: x1 x2 x4\nblock C3: x3 x4\n";

    fn set(f: &BlockFamily, labels: &[&str]) -> ObjectSet {
        f.universe().set_of(labels).unwrap()
    }

    fn names(f: &BlockFamily, s: &ObjectSet) -> String {
        f.universe().format_set(s)
    }

    #[test]
    fn neighborhoods_of_running_example() {
        let f = parse_family(FOUR).unwrap();
        assert_eq!(names(&f, &neighborhood(&f, 1).unwrap()), "x1 x2 x4");
        assert_eq!(names(&f, &neighborhood(&f, 3).unwrap()), "x4");
        assert_eq!(names(&f, &indiscernible(&f, 2).unwrap()), "x3 x4");
        for i in 0..4 {
            assert!(neighborhood(&f, i).unwrap().contains(i));
            assert!(indiscernible(&f, i).unwrap().contains(i));
        }
    }

    #[test]
    fn partition_neighborhood_is_class() {
        let f = parse_family("universe: a b c d\nblock P: a b\nblock Q: c d\n").unwrap();
        for i in 0..4 {
            assert_eq!(neighborhood(&f, i).unwrap(), indiscernible(&f, i).unwrap());
        }
        assert_eq!(names(&f, &neighborhood(&f, 2).unwrap()), "c d");
    }

    #[test]
    fn uncovered_object_is_an_error() {
        let f = parse_family("universe: a b\nblock P: a\n").unwrap();
        assert_eq!(
            neighborhood(&f, 1),
            Err(ApproxError::UncoveredObject("b".into()))
        );
        assert!(indiscernible(&f, 1).is_err());
        let c = build_cache(&f);
        let x = set(&f, &["a"]);
        assert_eq!(
            approx_matrix(&c, &x),
            Err(ApproxError::NotCovering {
                uncovered: vec!["b".into()]
            })
        );
        assert!(approx_oracle(&f, &x).is_err());
        assert!(pi_idempotence_holds(&c).is_err());
    }

    #[test]
    fn six_object_cover_approximations() {
        let f = parse_family(SIX).unwrap();
        let c = build_cache(&f);
        let x = set(&f, &["x1", "x2", "x3", "x4"]);
        let m = approx_matrix(&c, &x).unwrap();
        assert_eq!(names(&f, &m.sh), "x1 x2 x3 x4 x5 x6");
        // every I(x) reaches x5 or x6, so nothing lies inside X; {x1, x2} is
        // the union of blocks inside X, which is a different operator
        assert_eq!(names(&f, &m.sl), "");
        let o = approx_oracle(&f, &x).unwrap();
        assert_eq!(o.sh, m.sh);
        assert_eq!(o.sl, m.sl);
    }

    #[test]
    fn full_and_empty_queries() {
        let f = parse_family(FOUR).unwrap();
        let c = build_cache(&f);
        let full = ObjectSet::full(4);
        let empty = ObjectSet::empty(4);
        for s in [
            approx_matrix(&c, &full).unwrap(),
            approx_oracle(&f, &full).unwrap(),
        ] {
            for op in Operator::ALL {
                assert_eq!(s.get(op), &full, "{op}");
            }
        }
        let m = approx_matrix(&c, &empty).unwrap();
        for op in Operator::ALL {
            assert_eq!(m.get(op), &empty, "{op}");
        }
    }

    #[test]
    fn oracle_on_singleton_query() {
        let f = parse_family(FOUR).unwrap();
        let o = approx_oracle(&f, &set(&f, &["x2"])).unwrap();
        assert_eq!(names(&f, &o.sh), "x1 x2 x4");
        assert_eq!(names(&f, &o.sl), "");
        assert_eq!(names(&f, &o.ih), "x2");
        assert_eq!(names(&f, &o.il), "");
        assert_eq!(names(&f, &o.xh), "x1 x2 x4");
        assert_eq!(names(&f, &o.xl), "");
    }

    #[test]
    fn xl_is_the_only_disagreement_on_x1_x4() {
        let f = parse_family(FOUR).unwrap();
        let c = build_cache(&f);
        let r = equivalence_report(&c, &set(&f, &["x1", "x4"])).unwrap();
        assert_eq!(r.mismatches().collect::<Vec<_>>(), vec![Operator::XL]);
        let xl = r.check(Operator::XL);
        assert!(xl.matrix_value.is_empty());
        assert_eq!(names(&f, &xl.oracle_value), "x1 x4");

        assert!(equivalence_report(&c, &ObjectSet::full(4))
            .unwrap()
            .all_match());
    }

    #[test]
    fn pi_transpose_pi_differs_from_pi_on_running_example() {
        let f = parse_family(FOUR).unwrap();
        let c = build_cache(&f);
        let ptp = pi_transpose_pi(&c).unwrap();
        assert!(ptp.get(0, 1));
        assert_eq!(c.pi().get(0, 1), 0);
        assert!(!pi_idempotence_holds(&c).unwrap());

        let part =
            build_cache(&parse_family("universe: a b c\nblock P: a b\nblock Q: c\n").unwrap());
        assert!(pi_idempotence_holds(&part).unwrap());
    }

    #[test]
    fn wrong_length_query() {
        let f = parse_family(FOUR).unwrap();
        let c = build_cache(&f);
        assert_eq!(
            approx_matrix(&c, &ObjectSet::empty(3)),
            Err(ApproxError::SizeMismatch {
                expected: 4,
                found: 3
            })
        );
    }
}
