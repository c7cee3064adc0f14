//! Random delta sequences checked against a from-scratch rebuild and against an
//! independent naive model that evaluates Γ and Π from their definitions.

use covmat::dynamic::{apply, apply_mut, Delta};
use covmat::{build_cache, parse_family, BlockFamily, CharCache};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_N: usize = 12;
const MAX_M: usize = 8;

#[derive(Clone, Debug)]
struct Naive {
    labels: Vec<String>,
    blocks: Vec<(String, Vec<bool>)>,
}

impl Naive {
    fn family(&self) -> BlockFamily {
        let mut text = format!("universe: {}\n", self.labels.join(" "));
        for (name, mem) in &self.blocks {
            let ls: Vec<&str> = (0..mem.len())
                .filter(|&i| mem[i])
                .map(|i| self.labels[i].as_str())
                .collect();
            text.push_str(&format!("block {name}: {}\n", ls.join(" ")));
        }
        parse_family(&text).unwrap()
    }

    fn gamma_dump(&self) -> String {
        let n = self.labels.len();
        let mut out = String::new();
        for i in 0..n {
            let row: Vec<&str> = (0..n)
                .map(|j| {
                    if self.blocks.iter().any(|(_, b)| b[i] && b[j]) {
                        "1"
                    } else {
                        "0"
                    }
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    fn pi_dump(&self) -> String {
        let n = self.labels.len();
        let mut out = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let v = self
                        .blocks
                        .iter()
                        .map(|(_, b)| b[j] as i32 - b[i] as i32 + 1)
                        .min()
                        .unwrap();
                    v.to_string()
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    fn apply(&mut self, d: &Delta) {
        let idx = |labels: &[String], l: &str| labels.iter().position(|x| x == l).unwrap();
        match d {
            Delta::AddBlocks(bs) => {
                for (name, ls) in bs {
                    let mut mem = vec![false; self.labels.len()];
                    for l in ls {
                        mem[idx(&self.labels, l)] = true;
                    }
                    self.blocks.push((name.clone(), mem));
                }
            }
            Delta::DeleteBlocks(names) => self.blocks.retain(|(n, _)| !names.contains(n)),
            Delta::AddObjects(os) => {
                for (l, bs) in os {
                    self.labels.push(l.clone());
                    for (name, mem) in &mut self.blocks {
                        mem.push(bs.contains(name));
                    }
                }
            }
            Delta::DeleteObjects(ls) => {
                let keep: Vec<usize> = (0..self.labels.len())
                    .filter(|&i| !ls.contains(&self.labels[i]))
                    .collect();
                self.labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
                for (_, mem) in &mut self.blocks {
                    *mem = keep.iter().map(|&i| mem[i]).collect();
                }
                self.blocks.retain(|(_, m)| m.iter().any(|&b| b));
            }
            Delta::Move { label, from, to } => {
                let k = idx(&self.labels, label);
                for (name, mem) in &mut self.blocks {
                    if name == from {
                        mem[k] = false;
                    }
                    if name == to {
                        mem[k] = true;
                    }
                }
            }
            Delta::Isolate {
                label,
                from,
                new_block,
            } => {
                let k = idx(&self.labels, label);
                for (name, mem) in &mut self.blocks {
                    if name == from {
                        mem[k] = false;
                    }
                }
                self.blocks.retain(|(_, m)| m.iter().any(|&b| b));
                let mut mem = vec![false; self.labels.len()];
                mem[k] = true;
                self.blocks.push((new_block.clone(), mem));
            }
        }
    }
}

fn random_covering(rng: &mut ChaCha8Rng) -> Naive {
    let n = rng.gen_range(1..=MAX_N);
    let m = rng.gen_range(1..=MAX_M);
    let labels: Vec<String> = (0..n).map(|i| format!("o{i}")).collect();
    let mut blocks: Vec<(String, Vec<bool>)> = (0..m)
        .map(|j| {
            (
                format!("B{j}"),
                (0..n).map(|_| rng.gen_bool(0.35)).collect(),
            )
        })
        .collect();
    for i in 0..n {
        if !blocks.iter().any(|(_, b)| b[i]) {
            let j = rng.gen_range(0..m);
            blocks[j].1[i] = true;
        }
    }
    for (_, b) in &mut blocks {
        if !b.iter().any(|&x| x) {
            let i = rng.gen_range(0..n);
            b[i] = true;
        }
    }
    Naive { labels, blocks }
}

/// Draws a delta whose preconditions hold for `model`, or `None` when the
/// drawn kind has no legal instance.
fn random_delta(rng: &mut ChaCha8Rng, model: &Naive, fresh: &mut usize) -> Option<Delta> {
    let n = model.labels.len();
    let m = model.blocks.len();
    let mut next = |prefix: &str| {
        *fresh += 1;
        format!("{prefix}{fresh}")
    };
    match rng.gen_range(0..6) {
        0 if m < MAX_M => {
            let mut ls: Vec<String> = model
                .labels
                .iter()
                .filter(|_| rng.gen_bool(0.4))
                .cloned()
                .collect();
            if ls.is_empty() {
                ls.push(model.labels.choose(rng)?.clone());
            }
            Some(Delta::AddBlocks(vec![(next("N"), ls)]))
        }
        1 if m > 1 => {
            let count = rng.gen_range(1..m.min(3));
            let names: Vec<String> = model
                .blocks
                .choose_multiple(rng, count)
                .map(|(n, _)| n.clone())
                .collect();
            Some(Delta::DeleteBlocks(names))
        }
        2 if n < MAX_N => {
            let t = rng.gen_range(1..=(MAX_N - n).min(2));
            let objs = (0..t)
                .map(|_| {
                    let k = rng.gen_range(1..=m.min(3));
                    let bs = model
                        .blocks
                        .choose_multiple(rng, k)
                        .map(|(n, _)| n.clone())
                        .collect();
                    (next("y"), bs)
                })
                .collect();
            Some(Delta::AddObjects(objs))
        }
        3 if n > 1 => {
            let count = rng.gen_range(1..n.min(3));
            let ls: Vec<String> = model.labels.choose_multiple(rng, count).cloned().collect();
            let keep: Vec<usize> = (0..n).filter(|&i| !ls.contains(&model.labels[i])).collect();
            let survives = model.blocks.iter().any(|(_, b)| keep.iter().any(|&i| b[i]));
            survives.then_some(Delta::DeleteObjects(ls))
        }
        4 => {
            let mut moves = Vec::new();
            for (fname, fb) in &model.blocks {
                if fb.iter().filter(|&&x| x).count() < 2 {
                    continue;
                }
                for (tname, tb) in &model.blocks {
                    for k in 0..n {
                        if fb[k] && !tb[k] {
                            moves.push((k, fname.clone(), tname.clone()));
                        }
                    }
                }
            }
            let (k, from, to) = moves.choose(rng)?.clone();
            Some(Delta::Move {
                label: model.labels[k].clone(),
                from,
                to,
            })
        }
        5 if m < MAX_M => {
            let (from, fb) = model.blocks.choose(rng)?;
            let ks: Vec<usize> = (0..n).filter(|&k| fb[k]).collect();
            let k = *ks.choose(rng)?;
            Some(Delta::Isolate {
                label: model.labels[k].clone(),
                from: from.clone(),
                new_block: next("S"),
            })
        }
        _ => None,
    }
}

fn check(cache: &CharCache, model: &Naive, ctx: &str) {
    assert_eq!(
        cache.gamma().dump(),
        model.gamma_dump(),
        "gamma vs naive: {ctx}"
    );
    assert_eq!(cache.pi().dump(), model.pi_dump(), "pi vs naive: {ctx}");
    assert_eq!(cache, &build_cache(cache.family()), "vs rebuild: {ctx}");
    assert_eq!(cache.family(), &model.family(), "family: {ctx}");
}

#[test]
fn five_hundred_random_sequences_match_rebuild() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut kinds = std::collections::BTreeMap::new();
    for seq in 0..500 {
        let mut model = random_covering(&mut rng);
        let mut cache = build_cache(&model.family());
        check(&cache, &model, &format!("seq {seq} start"));
        let len = rng.gen_range(1..=20);
        let mut fresh = 0;
        for step in 0..len {
            let Some(d) = random_delta(&mut rng, &model, &mut fresh) else {
                continue;
            };
            let was_covering = cache.is_covering();
            let next =
                apply(&cache, &d).unwrap_or_else(|e| panic!("seq {seq} step {step}: {d}: {e}"));
            let mut in_place = cache.clone();
            apply_mut(&mut in_place, &d).unwrap();
            assert_eq!(in_place, next, "seq {seq} step {step}: {d}");
            model.apply(&d);
            check(&next, &model, &format!("seq {seq} step {step}: {d}"));
            if matches!(d, Delta::Move { .. }) && was_covering {
                let w = next.work();
                assert_eq!((w.rows_recomputed, w.cols_recomputed), (2, 2), "{d}");
            }
            *kinds.entry(d.kind()).or_insert(0usize) += 1;
            cache = next;
        }
    }
    for kind in ["AE", "DE", "AO", "DO", "CA-move", "CA-isolate"] {
        assert!(
            kinds.get(kind).copied().unwrap_or(0) > 50,
            "too few {kind} steps: {kinds:?}"
        );
    }
}

#[test]
fn failed_deltas_leave_the_cache_alone() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let model = random_covering(&mut rng);
        let cache = build_cache(&model.family());
        let snapshot = cache.clone();
        let bad = [
            Delta::AddBlocks(vec![(
                model.blocks[0].0.clone(),
                vec![model.labels[0].clone()],
            )]),
            Delta::DeleteBlocks(model.blocks.iter().map(|(n, _)| n.clone()).collect()),
            Delta::AddObjects(vec![(
                model.labels[0].clone(),
                vec![model.blocks[0].0.clone()],
            )]),
            Delta::DeleteObjects(model.labels.clone()),
            Delta::Move {
                label: "nope".into(),
                from: model.blocks[0].0.clone(),
                to: model.blocks[0].0.clone(),
            },
            Delta::Isolate {
                label: model.labels[0].clone(),
                from: "nope".into(),
                new_block: "Z".into(),
            },
        ];
        for d in &bad {
            assert!(apply(&cache, d).is_err(), "{d}");
            let mut target = cache.clone();
            assert!(apply_mut(&mut target, d).is_err(), "{d}");
            assert_eq!(target, snapshot);
        }
    }
}

#[test]
fn inverse_pairs_restore_the_cache() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let model = random_covering(&mut rng);
        let cache = build_cache(&model.family());
        let ls: Vec<String> = model
            .labels
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .cloned()
            .collect();
        let ls = if ls.is_empty() {
            vec![model.labels[0].clone()]
        } else {
            ls
        };
        let added = apply(&cache, &Delta::AddBlocks(vec![("fresh".into(), ls)])).unwrap();
        let back = apply(&added, &Delta::DeleteBlocks(vec!["fresh".into()])).unwrap();
        assert_eq!(back, cache);

        let bs = vec![model.blocks[rng.gen_range(0..model.blocks.len())].0.clone()];
        let grown = apply(&cache, &Delta::AddObjects(vec![("new".into(), bs)])).unwrap();
        let n = cache.family().n();
        let keep: Vec<usize> = (0..n).collect();
        assert_eq!(grown.gamma().select(&keep, &keep), *cache.gamma());
        assert_eq!(grown.pi().select(&keep, &keep), *cache.pi());
        let back = apply(&grown, &Delta::DeleteObjects(vec!["new".into()])).unwrap();
        assert_eq!(back, cache);
    }
}

#[test]
fn ca_changes_only_row_and_column_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut fresh = 0;
    let mut tried = 0;
    while tried < 300 {
        let model = random_covering(&mut rng);
        let cache = build_cache(&model.family());
        let Some(d) = random_delta(&mut rng, &model, &mut fresh) else {
            continue;
        };
        let label = match &d {
            Delta::Move { label, .. } | Delta::Isolate { label, .. } => label.clone(),
            _ => continue,
        };
        tried += 1;
        let next = apply(&cache, &d).unwrap();
        let k = cache.universe().index_of(&label).unwrap();
        let n = cache.family().n();
        for i in (0..n).filter(|&i| i != k) {
            for j in (0..n).filter(|&j| j != k) {
                assert_eq!(next.gamma().get(i, j), cache.gamma().get(i, j));
                assert_eq!(next.pi().get(i, j), cache.pi().get(i, j));
            }
        }
    }
}

#[test]
fn ae_reads_only_new_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let model = random_covering(&mut rng);
        let cache = build_cache(&model.family());
        let t = rng.gen_range(1..=3);
        let bs: Vec<(String, Vec<String>)> = (0..t)
            .map(|s| {
                let ls: Vec<String> = model
                    .labels
                    .iter()
                    .filter(|_| rng.gen_bool(0.5))
                    .cloned()
                    .collect();
                (
                    format!("new{s}"),
                    if ls.is_empty() {
                        vec![model.labels[0].clone()]
                    } else {
                        ls
                    },
                )
            })
            .collect();
        let next = apply(&cache, &Delta::AddBlocks(bs)).unwrap();
        assert_eq!(next.work().blocks_read, t);
    }
}
