//! Subcommands and exit-code mapping.
//!
//! Exit codes: 0 success, 1 usage, 2 parse or input error, 3 precondition
//! violation (for example an approximation query on a non-covering family),
//! 4 internal invariant failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use covmat::approx::{
    approx_matrix, approx_oracle, equivalence_report, pi_idempotence_holds, ApproxError, Operator,
};
use covmat::charmat::{block_gamma, block_pi};
use covmat::compress::{
    approx_via_compression, parse_map, sextuple_via_compression, CompressError,
};
use covmat::dynamic::{apply_script, changed_rows, parse_script, ScriptError};
use covmat::snapshot::SnapshotError;
use covmat::{parse_family, CharCache, ObjectSet, Universe};
use thiserror::Error;

use crate::bench::{self, BenchConfig, Table};
use crate::state::{Session, StateError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        match &e {
            StateError::Snapshot {
                source: SnapshotError::DigestMismatch { .. },
                ..
            }
            | StateError::Replay(_) => CliError::Internal(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<ApproxError> for CliError {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::Invariant(_) => CliError::Internal(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<CompressError> for CliError {
    fn from(e: CompressError) -> Self {
        match e {
            CompressError::Parse { .. }
            | CompressError::Unassigned(_)
            | CompressError::EmptyFiber(_) => CliError::Parse(e.to_string()),
            CompressError::Approx(a) => a.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "covmat",
    version,
    about = "Characteristic matrices of coverings, with incremental updates"
)]
pub struct Cli {
    /// Cap on worker threads for row-parallel work.
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build Γ and Π from a covering file and write a state file.
    Build {
        covering: PathBuf,
        /// State file to write [default: <covering>.state.json].
        #[arg(long)]
        state: Option<PathBuf>,
        /// Also write gamma.txt and pi.txt into this directory.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
        /// Print the per-block matrices too.
        #[arg(long)]
        blocks: bool,
    },
    /// Approximations of a query set.
    Approx {
        /// State file or covering file.
        input: PathBuf,
        #[command(flatten)]
        query: Query,
        #[command(flatten)]
        mode: Mode,
        /// Print 0/1 vectors under each set.
        #[arg(long)]
        vectors: bool,
    },
    /// Apply a delta script incrementally.
    Update {
        input: PathBuf,
        script: PathBuf,
        /// Where to write the new state [default: update in place].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite on a state.
    Verify { input: PathBuf },
    /// SH and SL through a consistent-function quotient.
    Compress {
        input: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[command(flatten)]
        query: Query,
        /// Also pull back IH/IL/XH/XL and compare with the direct values.
        #[arg(long)]
        report: bool,
    },
    /// Time incremental updates against rebuilds.
    Bench {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        m: usize,
        /// Deltas per kind.
        #[arg(long, default_value_t = 8)]
        deltas: usize,
        /// Objects per AO delta.
        #[arg(long, default_value_t = 32)]
        ao_batch: usize,
        /// Membership probability per object and block.
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        /// Seed; the RSEED environment variable takes precedence.
        #[arg(long)]
        seed: Option<u64>,
        /// Also time rebuild and CA-move at n = 500, 1000, 2000, 4000.
        #[arg(long)]
        scaling: bool,
    },
}

#[derive(Debug, Args)]
pub struct Query {
    /// Comma-separated labels, or @file with one label per line.
    #[arg(long = "set", value_name = "X", allow_hyphen_values = true)]
    pub set: String,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct Mode {
    /// Matrix form (default).
    #[arg(long)]
    pub matrix: bool,
    /// Set-definition form.
    #[arg(long)]
    pub oracle: bool,
    /// Both forms with a per-operator verdict.
    #[arg(long)]
    pub report: bool,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            let _ = writeln!(err, "error: --threads must be at least 1");
            return 1;
        }
        // a second build in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Build {
            covering,
            state,
            dump_dir,
            blocks,
        } => build(&covering, state, dump_dir, blocks, out, err),
        Command::Approx {
            input,
            query,
            mode,
            vectors,
        } => approx(&input, &query.set, &mode, vectors, out),
        Command::Update {
            input,
            script,
            out: dest,
        } => update(&input, &script, dest, out, err),
        Command::Verify { input } => verify(&input, out),
        Command::Compress {
            input,
            map,
            query,
            report,
        } => compress(&input, &map, &query.set, report, out),
        Command::Bench {
            n,
            m,
            deltas,
            ao_batch,
            density,
            seed,
            scaling,
        } => {
            if n == 0 || m == 0 || deltas == 0 || !(density > 0.0 && density <= 1.0) {
                return Err(CliError::Usage(
                    "bench needs n, m, deltas >= 1 and density in (0, 1]".into(),
                ));
            }
            let cfg = BenchConfig {
                n,
                m,
                deltas,
                ao_batch: ao_batch.max(1),
                density,
                seed: bench::seed_from_env(seed.unwrap_or(bench::DEFAULT_SEED)),
            };
            run_bench(&cfg, scaling, out)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> CliError {
    CliError::Internal(format!("output: {e}"))
}

/// State file if the text is JSON, covering file otherwise.
pub fn load(path: &Path) -> Result<Session, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        Ok(Session::from_json(&text)?)
    } else {
        let family =
            parse_family(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Ok(Session::new(family, path.display().to_string()))
    }
}

fn default_state_path(covering: &Path) -> PathBuf {
    covering.with_extension("state.json")
}

/// Comma-separated labels or `@file`.
pub fn parse_set(universe: &Universe, spec: &str) -> Result<ObjectSet, CliError> {
    let labels: Vec<String> = match spec.strip_prefix('@') {
        Some(file) => read(Path::new(file))?
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
            .filter(|l| !l.is_empty())
            .collect(),
        None => spec
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
    };
    universe
        .set_of(&labels)
        .map_err(|e| CliError::Parse(format!("query set: {e}")))
}

fn matrices(cache: &CharCache) -> String {
    format!(
        "[gamma]\n{}[pi]\n{}",
        cache.gamma().dump(),
        cache.pi().dump()
    )
}

fn build(
    covering: &Path,
    state: Option<PathBuf>,
    dump_dir: Option<PathBuf>,
    blocks: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let text = read(covering)?;
    let family =
        parse_family(&text).map_err(|e| CliError::Parse(format!("{}: {e}", covering.display())))?;
    let session = Session::new(family, covering.display().to_string());
    let cache = &session.cache;
    out.write_all(matrices(cache).as_bytes()).map_err(io)?;
    if blocks {
        for b in cache.family().blocks() {
            let g = block_gamma(cache.family(), &b.name).expect("listed block");
            let p = block_pi(cache.family(), &b.name).expect("listed block");
            write!(
                out,
                "[gamma {}]\n{}[pi {}]\n{}",
                b.name,
                g.dump(),
                b.name,
                p.dump()
            )
            .map_err(io)?;
        }
    }
    if let Some(dir) = dump_dir {
        fs::create_dir_all(&dir).map_err(|e| CliError::Parse(format!("{}: {e}", dir.display())))?;
        write_file(&dir.join("gamma.txt"), &cache.gamma().dump())?;
        write_file(&dir.join("pi.txt"), &cache.pi().dump())?;
    }
    let path = state.unwrap_or_else(|| default_state_path(covering));
    write_file(&path, &session.to_json())?;
    if !cache.is_covering() {
        let u = cache.universe();
        writeln!(
            err,
            "note: not a covering; uncovered: {}",
            u.format_set(&!cache.covered())
        )
        .map_err(io)?;
    }
    writeln!(err, "state written to {}", path.display()).map_err(io)?;
    Ok(())
}

fn set_line(
    out: &mut dyn Write,
    name: &str,
    u: &Universe,
    s: &ObjectSet,
    vectors: bool,
) -> Result<(), CliError> {
    let listed = u.format_set(s);
    writeln!(out, "{}", format!("{name}: {listed}").trim_end()).map_err(io)?;
    if vectors {
        writeln!(out, "  [{}]", s.to_vector_string()).map_err(io)?;
    }
    Ok(())
}

fn approx(
    input: &Path,
    set: &str,
    mode: &Mode,
    vectors: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let session = load(input)?;
    let cache = &session.cache;
    let u = cache.universe();
    let x = parse_set(u, set)?;
    if mode.report {
        let r = equivalence_report(cache, &x)?;
        for c in &r.checks {
            let verdict = if c.matches { "match" } else { "MISMATCH" };
            writeln!(out, "{}: {verdict}", c.operator).map_err(io)?;
            set_line(out, "  matrix", u, &c.matrix_value, vectors)?;
            set_line(out, "  oracle", u, &c.oracle_value, vectors)?;
        }
        return Ok(());
    }
    let s = if mode.oracle {
        approx_oracle(cache.family(), &x)?
    } else {
        approx_matrix(cache, &x)?
    };
    for op in Operator::ALL {
        set_line(out, op.name(), u, s.get(op), vectors)?;
    }
    Ok(())
}

fn update(
    input: &Path,
    script_path: &Path,
    dest: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let mut session = load(input)?;
    let text = read(script_path)?;
    let script = parse_script(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", script_path.display())))?;
    let next = apply_script(&session.cache, &script).map_err(|e| match e {
        ScriptError::Syntax { .. } => CliError::Parse(format!("{}: {e}", script_path.display())),
        ScriptError::Delta { .. } => {
            CliError::Precondition(format!("{}: {e}", script_path.display()))
        }
    })?;
    let changes = changed_rows(&session.cache, &next);
    let work = next.work();
    let deltas: Vec<_> = script.into_iter().map(|(_, d)| d).collect();
    session.record(&deltas, next, Some(script_path.display().to_string()));

    for (name, labels) in [
        ("added", &changes.added),
        ("removed", &changes.removed),
        ("changed", &changes.changed),
    ] {
        writeln!(
            out,
            "{}",
            format!("{name}: {}", labels.join(" ")).trim_end()
        )
        .map_err(io)?;
    }
    writeln!(
        out,
        "last step work: blocks_read={} rows_recomputed={} cols_recomputed={}",
        work.blocks_read, work.rows_recomputed, work.cols_recomputed
    )
    .map_err(io)?;
    out.write_all(matrices(&session.cache).as_bytes())
        .map_err(io)?;

    let is_state = read(input)?.trim_start().starts_with('{');
    let path = dest.unwrap_or_else(|| {
        if is_state {
            input.to_path_buf()
        } else {
            default_state_path(input)
        }
    });
    write_file(&path, &session.to_json())?;
    writeln!(err, "state written to {}", path.display()).map_err(io)?;
    Ok(())
}

/// Runs every check and reports each; fails with exit 4 if any failed.
fn verify(input: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let session = load(input)?;
    writeln!(out, "ok    digest matches rebuilt matrices").map_err(io)?;
    let cache = &session.cache;
    let n = cache.family().n();
    let covered = cache.covered();
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool, out: &mut dyn Write| -> Result<(), CliError> {
        writeln!(out, "{} {name}", if ok { "ok   " } else { "FAIL " }).map_err(io)?;
        if !ok {
            failed.push(name.to_string());
        }
        Ok(())
    };

    let replayed = session.replay().map(|c| c == *cache).unwrap_or(false);
    check(
        &format!(
            "history of {} step(s) replays to the current state",
            session.history.len()
        ),
        replayed,
        out,
    )?;
    check(
        "per-block construction equals the definitional products",
        cache.matches_definitional(),
        out,
    )?;
    check("gamma is symmetric", cache.gamma().is_symmetric(), out)?;
    check(
        "gamma diagonal is set exactly on covered objects",
        (0..n).all(|i| cache.gamma().get(i, i) == covered.contains(i)),
        out,
    )?;
    check(
        "pi diagonal is 1",
        (0..n).all(|i| cache.pi().get(i, i) == 1),
        out,
    )?;
    let below = covered
        .iter()
        .all(|i| (0..n).all(|j| cache.pi().get(i, j) <= u8::from(cache.gamma().get(i, j))));
    check("pi <= gamma on covered rows", below, out)?;
    check(
        "entries 2 occur only on uncovered rows",
        covered
            .iter()
            .all(|i| (0..n).all(|j| cache.pi().get(i, j) < 2)),
        out,
    )?;

    if cache.is_covering() {
        let holds = pi_idempotence_holds(cache)?;
        writeln!(out, "info  pi^T pi = pi: {holds}").map_err(io)?;
    } else {
        writeln!(
            out,
            "info  not a covering; uncovered: {}",
            cache.universe().format_set(&!covered)
        )
        .map_err(io)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Internal(format!(
            "{} check(s) failed: {}",
            failed.len(),
            failed.join("; ")
        )))
    }
}

fn compress(
    input: &Path,
    map_path: &Path,
    set: &str,
    report: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let session = load(input)?;
    let family = session.cache.family();
    let map = parse_map(&read(map_path)?, family.universe().clone())?;
    let x = parse_set(family.universe(), set)?;
    let r = approx_via_compression(family, &map, &x)?;
    let (u, v) = (family.universe(), map.target());
    set_line(out, "f(X)", v, &r.image, false)?;
    set_line(out, "SH(f(X))", v, &r.target_sh, false)?;
    set_line(out, "SL(f(X))", v, &r.target_sl, false)?;
    set_line(out, "SH", u, &r.sh, false)?;
    set_line(out, "SL", u, &r.sl, false)?;
    if report {
        let pulled = sextuple_via_compression(family, &map, &x)?;
        let direct = approx_matrix(&session.cache, &x)?;
        for op in Operator::ALL {
            let verdict = if pulled.get(op) == direct.get(op) {
                "match"
            } else {
                "differs"
            };
            writeln!(out, "{op} via quotient: {verdict}").map_err(io)?;
        }
    }
    Ok(())
}

fn run_bench(cfg: &BenchConfig, scaling: bool, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(
        out,
        "n={} m={} deltas/kind={} ao_batch={} density={} seed={}",
        cfg.n, cfg.m, cfg.deltas, cfg.ao_batch, cfg.density, cfg.seed
    )
    .map_err(io)?;
    let rows = bench::bench_incremental(cfg);
    write!(out, "{}", Table(&rows)).map_err(io)?;
    let c = bench::bench_construction(cfg.n, cfg.m, cfg.density, cfg.seed, 3);
    write!(out, "{c}").map_err(io)?;
    if scaling {
        for row in bench::bench_scaling(
            &[500, 1000, 2000, 4000],
            cfg.m,
            cfg.density,
            cfg.seed,
            cfg.deltas,
        ) {
            writeln!(out, "{row}").map_err(io)?;
        }
    }
    if rows.iter().all(|r| r.identical) && c.identical {
        Ok(())
    } else {
        Err(CliError::Internal(
            "incremental result differs from rebuild".into(),
        ))
    }
}
