//! Timing harness: incremental updates against full rebuilds, and the
//! per-block construction against the triple-loop baseline.

use std::fmt;
use std::time::{Duration, Instant};

use covmat::charmat::scalar_characteristic;
use covmat::dynamic::apply_mut;
use covmat::{build_cache, BlockFamily, CharCache, Delta, ObjectSet, Universe};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub const DEFAULT_SEED: u64 = 0x00c0_7e12;

/// `RSEED` from the environment when it parses, else `fallback`.
pub fn seed_from_env(fallback: u64) -> u64 {
    std::env::var("RSEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(fallback)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaKind {
    AddBlock,
    DeleteBlock,
    AddObjects,
    DeleteObject,
    Move,
    Isolate,
}

impl DeltaKind {
    pub const ALL: [DeltaKind; 6] = [
        DeltaKind::AddBlock,
        DeltaKind::DeleteBlock,
        DeltaKind::AddObjects,
        DeltaKind::DeleteObject,
        DeltaKind::Move,
        DeltaKind::Isolate,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DeltaKind::AddBlock => "AE",
            DeltaKind::DeleteBlock => "DE",
            DeltaKind::AddObjects => "AO",
            DeltaKind::DeleteObject => "DO",
            DeltaKind::Move => "CA-move",
            DeltaKind::Isolate => "CA-isolate",
        }
    }
}

/// Random covering: each block takes each object with probability `density`,
/// then uncovered objects and empty blocks are patched with one random pick.
pub fn random_covering(n: usize, m: usize, density: f64, rng: &mut impl Rng) -> BlockFamily {
    assert!(n >= 1 && m >= 1);
    let universe =
        Arc::new(Universe::new((1..=n).map(|i| format!("x{i}"))).expect("generated labels"));
    let mut blocks: Vec<ObjectSet> = (0..m)
        .map(|_| ObjectSet::from_indices(n, (0..n).filter(|_| rng.gen_bool(density))))
        .collect();
    for i in 0..n {
        if !blocks.iter().any(|b| b.contains(i)) {
            blocks[rng.gen_range(0..m)].insert(i);
        }
    }
    for b in &mut blocks {
        if b.is_empty() {
            b.insert(rng.gen_range(0..n));
        }
    }
    BlockFamily::new(
        universe,
        blocks
            .into_iter()
            .enumerate()
            .map(|(j, b)| (format!("C{}", j + 1), b)),
    )
    .expect("patched blocks are non-empty")
}

/// A delta of the given kind that is legal on `family`, or `None` when the
/// kind has no legal instance there. `serial` keeps new names unique.
pub fn random_delta(
    kind: DeltaKind,
    family: &BlockFamily,
    density: f64,
    ao_batch: usize,
    serial: &mut usize,
    rng: &mut impl Rng,
) -> Option<Delta> {
    *serial += 1;
    let s = *serial;
    let u = family.universe();
    let n = family.n();
    let names: Vec<&str> = family.blocks().iter().map(|b| b.name.as_str()).collect();
    let d = match kind {
        DeltaKind::AddBlock => {
            let mut members: Vec<String> = (0..n)
                .filter(|_| rng.gen_bool(density))
                .map(|i| u.label(i).to_string())
                .collect();
            if members.is_empty() {
                members.push(u.label(rng.gen_range(0..n)).to_string());
            }
            Delta::AddBlocks(vec![(format!("new{s}"), members)])
        }
        DeltaKind::DeleteBlock if names.len() > 1 => {
            Delta::DeleteBlocks(vec![names.choose(rng)?.to_string()])
        }
        DeltaKind::DeleteBlock => return None,
        DeltaKind::AddObjects => Delta::AddObjects(
            (0..ao_batch)
                .map(|t| {
                    let k = rng.gen_range(1..=names.len().min(3));
                    let bs = names
                        .choose_multiple(rng, k)
                        .map(|b| b.to_string())
                        .collect();
                    (format!("new{s}_{t}"), bs)
                })
                .collect(),
        ),
        DeltaKind::DeleteObject => {
            // some block must keep a member
            let k = *(0..n)
                .filter(|&k| {
                    family
                        .blocks()
                        .iter()
                        .any(|b| b.members.iter().any(|i| i != k))
                })
                .collect::<Vec<_>>()
                .choose(rng)?;
            Delta::DeleteObjects(vec![u.label(k).to_string()])
        }
        DeltaKind::Move => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            order.into_iter().find_map(|k| {
                let from: Vec<usize> = family
                    .blocks_containing(k)
                    .filter(|&j| family.blocks()[j].members.count() > 1)
                    .collect();
                let to: Vec<usize> = (0..names.len())
                    .filter(|&j| !family.blocks()[j].members.contains(k))
                    .collect();
                let (f, t) = (*from.choose(rng)?, *to.choose(rng)?);
                Some(Delta::Move {
                    label: u.label(k).to_string(),
                    from: names[f].to_string(),
                    to: names[t].to_string(),
                })
            })?
        }
        DeltaKind::Isolate => {
            let k = rng.gen_range(0..n);
            let from: Vec<usize> = family.blocks_containing(k).collect();
            let f = *from.choose(rng)?;
            Delta::Isolate {
                label: u.label(k).to_string(),
                from: names[f].to_string(),
                new_block: format!("solo{s}"),
            }
        }
    };
    Some(d)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n: usize,
    pub m: usize,
    pub deltas: usize,
    pub ao_batch: usize,
    pub density: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 2000,
            m: 64,
            deltas: 8,
            ao_batch: 32,
            density: 0.1,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KindTiming {
    pub kind: DeltaKind,
    pub samples: usize,
    /// Median wall time of one incremental update.
    pub incremental: Duration,
    /// Median wall time of rebuilding the updated family from scratch.
    pub rebuild: Duration,
    pub identical: bool,
}

impl KindTiming {
    pub fn speedup(&self) -> f64 {
        self.rebuild.as_secs_f64() / self.incremental.as_secs_f64().max(1e-9)
    }
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// For each kind, applies up to `deltas` consecutive deltas of that kind to a
/// live copy of one base cache, timing every step against a rebuild of the
/// family it produced. A kind stops early once it has no legal delta left and
/// is left out if it had none to begin with.
pub fn bench_incremental(cfg: &BenchConfig) -> Vec<KindTiming> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let family = random_covering(cfg.n, cfg.m, cfg.density, &mut rng);
    let base = build_cache(&family);
    let mut serial = 0;
    DeltaKind::ALL
        .iter()
        .filter_map(|&kind| {
            let mut inc = Vec::with_capacity(cfg.deltas);
            let mut reb = Vec::with_capacity(cfg.deltas);
            let mut identical = true;
            let mut live = base.clone();
            for _ in 0..cfg.deltas.max(1) {
                let Some(d) = random_delta(
                    kind,
                    live.family(),
                    cfg.density,
                    cfg.ao_batch,
                    &mut serial,
                    &mut rng,
                ) else {
                    break;
                };
                let ((), t_inc) =
                    timed(|| apply_mut(&mut live, &d).expect("generated delta is legal"));
                let (fresh, t_reb) = timed(|| build_cache(live.family()));
                identical &= live == fresh;
                inc.push(t_inc);
                reb.push(t_reb);
            }
            (!inc.is_empty()).then(|| KindTiming {
                kind,
                samples: inc.len(),
                incremental: median(inc),
                rebuild: median(reb),
                identical,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConstructionTiming {
    pub n: usize,
    pub m: usize,
    pub fast: Duration,
    pub scalar: Duration,
    pub identical: bool,
}

impl ConstructionTiming {
    pub fn speedup(&self) -> f64 {
        self.scalar.as_secs_f64() / self.fast.as_secs_f64().max(1e-9)
    }
}

/// Per-block construction against the O(m n²) triple loop, median of `reps`.
pub fn bench_construction(
    n: usize,
    m: usize,
    density: f64,
    seed: u64,
    reps: usize,
) -> ConstructionTiming {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = random_covering(n, m, density, &mut rng);
    let mut fast = Vec::new();
    let mut scalar = Vec::new();
    let mut identical = true;
    for _ in 0..reps.max(1) {
        let (cache, t_fast): (CharCache, _) = timed(|| build_cache(&family));
        let ((g, p), t_scalar) = timed(|| scalar_characteristic(&family));
        identical &= cache.gamma() == &g && cache.pi() == &p;
        fast.push(t_fast);
        scalar.push(t_scalar);
    }
    ConstructionTiming {
        n,
        m,
        fast: median(fast),
        scalar: median(scalar),
        identical,
    }
}

#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub n: usize,
    pub rebuild: Duration,
    pub ca_move: Duration,
}

/// Rebuild and CA-move medians for each `n` at fixed `m`.
pub fn bench_scaling(
    ns: &[usize],
    m: usize,
    density: f64,
    seed: u64,
    deltas: usize,
) -> Vec<ScalingRow> {
    ns.iter()
        .map(|&n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let family = random_covering(n, m, density, &mut rng);
            let base = build_cache(&family);
            let mut serial = 0;
            let mut reb = Vec::new();
            let mut ca = Vec::new();
            for _ in 0..deltas.max(1) {
                let d = random_delta(DeltaKind::Move, &family, density, 1, &mut serial, &mut rng)
                    .expect("a legal move");
                let mut next = base.clone();
                ca.push(timed(|| apply_mut(&mut next, &d).expect("legal")).1);
                reb.push(timed(|| build_cache(&family)).1);
            }
            ScalingRow {
                n,
                rebuild: median(reb),
                ca_move: median(ca),
            }
        })
        .collect()
}

fn micros(d: Duration) -> f64 {
    d.as_secs_f64() * 1e6
}

pub struct Table<'a>(pub &'a [KindTiming]);

impl fmt::Display for Table<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>8} {:>16} {:>16} {:>9} {:>10}",
            "kind", "samples", "incremental_us", "rebuild_us", "speedup", "identical"
        )?;
        for t in self.0 {
            writeln!(
                f,
                "{:<12} {:>8} {:>16.1} {:>16.1} {:>8.1}x {:>10}",
                t.kind.tag(),
                t.samples,
                micros(t.incremental),
                micros(t.rebuild),
                t.speedup(),
                t.identical
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for ConstructionTiming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "construction n={} m={}: per-block {:.1} us, triple loop {:.1} us, speedup {:.1}x, identical {}",
            self.n,
            self.m,
            micros(self.fast),
            micros(self.scalar),
            self.speedup(),
            self.identical
        )
    }
}

impl fmt::Display for ScalingRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={:<6} rebuild {:>12.1} us   CA-move {:>10.1} us",
            self.n,
            micros(self.rebuild),
            micros(self.ca_move)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use covmat::dynamic::apply;

    #[test]
    fn toy_scale_results_are_identical() {
        let cfg = BenchConfig {
            n: 4,
            m: 3,
            deltas: 5,
            ao_batch: 2,
            density: 0.5,
            seed: 1,
        };
        let rows = bench_incremental(&cfg);
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.identical));
        assert!(bench_construction(6, 3, 0.5, 2, 2).identical);
    }

    #[test]
    fn generated_deltas_are_legal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = random_covering(rng.gen_range(2..30), rng.gen_range(1..6), 0.3, &mut rng);
            let c = build_cache(&f);
            let mut serial = 0;
            for kind in DeltaKind::ALL {
                let Some(d) = random_delta(kind, &f, 0.3, 3, &mut serial, &mut rng) else {
                    continue;
                };
                match apply(&c, &d) {
                    Ok(next) => assert_eq!(next, build_cache(next.family())),
                    Err(covmat::DeltaError::LeavesNoBlocks) => {}
                    Err(e) => panic!("{d}: {e}"),
                }
            }
        }
    }

    #[test]
    fn rseed_fallback() {
        if std::env::var("RSEED").is_err() {
            assert_eq!(seed_from_env(42), 42);
        }
    }
}
