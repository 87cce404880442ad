//! `fusepeel`: generate, peel and analyse fuse graphs; bracket peeling
//! thresholds; build and benchmark XOR retrieval structures.
//!
//! Exit codes: 0 success, 1 undecided threshold search, 2 usage error,
//! 3 retrieval build failed, 4 capacity exceeded, 5 I/O or format error.
//! On failure a single-line JSON object `{"error": {...}}` goes to stderr.

mod keys;
mod output;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fusepeel::exec::Execution;
use fusepeel::hypergraph::{generate_er_with, generate_fuse_with, ErParams, FuseParams, Hypergraph};
use fusepeel::montecarlo::{mc_peel, summarize, survival_profile, Family, GraphSpec};
use fusepeel::peeler::{peel_rounds, peel_sequential};
use fusepeel::retrieval::{RetrievalParams, RetrievalStructure};
use fusepeel::threshold::{
    bracket_threshold_with, classify, reference, traced_check, CheckKind, Decision, ThresholdBracket,
};
use serde::Serialize;

use keys::KeySource;
use output::Format;

const THREADS_ENV: &str = "FUSEPEEL_THREADS";

#[derive(Parser, Debug)]
#[command(name = "fusepeel", version, about = "Fuse graphs: peeling, thresholds and XOR retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for trial-level parallelism. FUSEPEEL_THREADS overrides.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a hypergraph and write it as a text dump (csv) or JSON.
    Gen(GraphArgs),
    /// Peel one hypergraph, generated or read from a dump.
    Peel(PeelArgs),
    /// Peel many independent random hypergraphs.
    McPeel(McPeelArgs),
    /// Bracket the peeling threshold, or classify given densities.
    Threshold(ThresholdArgs),
    /// Empirical versus predicted per-segment survival.
    Survival(SurvivalArgs),
    /// XOR retrieval structures.
    #[command(subcommand)]
    Retrieval(RetrievalCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Fuse,
    Er,
}

#[derive(Args, Debug, Clone)]
struct GraphArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Fuse)]
    family: FamilyArg,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Fuse: edges per segment and type. ER: edges per vertex.
    #[arg(long, default_value_t = 0.9)]
    c: f64,
    #[arg(long, default_value_t = 100)]
    ell: usize,
    /// Fuse: segment size. ER: number of vertices.
    #[arg(long, default_value_t = 10_000)]
    n: u64,
    /// ER: draw the k vertices of an edge independently.
    #[arg(long)]
    with_replacement: bool,
}

impl GraphArgs {
    fn spec(&self) -> GraphSpec {
        let family = match self.family {
            FamilyArg::Fuse => Family::Fuse,
            FamilyArg::Er => Family::Er,
        };
        GraphSpec { family, k: self.k, c: self.c, ell: self.ell, n: self.n }
    }

    fn generate(&self, seed: u64, exec: Execution) -> fusepeel::Result<Hypergraph> {
        match self.family {
            FamilyArg::Fuse => {
                generate_fuse_with(&FuseParams { k: self.k, c: self.c, ell: self.ell, n: self.n, seed }, exec)
            }
            FamilyArg::Er => {
                if !(self.c.is_finite() && self.c > 0.0) {
                    return Err(fusepeel::Error::InvalidParams(format!("c must be positive, got {}", self.c)));
                }
                let m = (self.c * self.n as f64).round() as usize;
                let p = ErParams { with_replacement: self.with_replacement, ..ErParams::new(self.k, self.n, m, seed) };
                generate_er_with(&p, exec)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PeelerArg {
    Rounds,
    Sequential,
}

#[derive(Args, Debug)]
struct PeelArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Read the graph from a dump instead of generating it.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PeelerArg::Rounds)]
    peeler: PeelerArg,
}

#[derive(Args, Debug)]
struct McPeelArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 20)]
    trials: usize,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Window half-width D.
    #[arg(long = "window-D", default_value_t = fusepeel::threshold::DEFAULT_HALF_WIDTH)]
    window_d: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Round budget per check.
    #[arg(long, default_value_t = 200_000_000)]
    max_iter: u64,
    /// Classify these densities instead of bracketing.
    #[arg(long, num_args = 1..)]
    c: Vec<f64>,
    /// Write the per-round probe of each certifying check as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Keep every N-th trace row.
    #[arg(long, default_value_t = 1)]
    trace_every: u64,
}

#[derive(Args, Debug)]
struct SurvivalArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.9)]
    c: f64,
    #[arg(long, default_value_t = 20)]
    ell: usize,
    #[arg(long, default_value_t = 200_000)]
    n: u64,
    /// Largest round r reported.
    #[arg(long, default_value_t = 5)]
    rounds: usize,
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

#[derive(Args, Debug, Clone)]
struct RetrievalArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.91)]
    c: f64,
    #[arg(long, default_value_t = 100)]
    ell: usize,
    /// Value width r in bits.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=64))]
    bits: u32,
    #[arg(long, default_value_t = 100)]
    max_retries: u32,
    /// Key file (`key` or `key<TAB>value` per line) or `synthetic:COUNT`.
    #[arg(long)]
    keys: KeySource,
}

impl RetrievalArgs {
    fn params(&self, seed: u64) -> RetrievalParams {
        RetrievalParams {
            k: self.k,
            c: self.c,
            ell: self.ell,
            r_bits: self.bits,
            max_retries: self.max_retries,
            seed,
        }
    }
}

#[derive(Subcommand, Debug)]
enum RetrievalCommand {
    /// Build a structure and write it to `--structure`.
    Build {
        #[command(flatten)]
        args: RetrievalArgs,
        #[arg(long)]
        structure: PathBuf,
    },
    /// Look up every key of `--keys` in a serialized structure.
    Query {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        keys: KeySource,
    },
    /// Median build and query times over repeated builds.
    Bench {
        #[command(flatten)]
        args: RetrievalArgs,
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(fusepeel::Error),
    Io { path: Option<PathBuf>, source: io::Error },
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: Some(path.to_path_buf()), source }
    }

    fn exit_code(&self) -> u8 {
        use fusepeel::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::Undecided { .. } => 1,
                E::BuildFailed { .. } => 3,
                E::Capacity(_) => 4,
                E::Io(_) | E::Format(_) => 5,
                _ => 2,
            },
            CliError::Io { .. } | CliError::Output(_) => 5,
        }
    }

    fn kind(&self) -> &'static str {
        use fusepeel::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                E::Undecided { .. } => "undecided",
                E::BuildFailed { .. } => "build_failed",
                E::Capacity(_) => "capacity",
                E::Io(_) => "io",
                E::Format(_) => "format",
                _ => "usage",
            },
            CliError::Io { .. } | CliError::Output(_) => "io",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Output(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path: Some(p), source } => write!(f, "{}: {source}", p.display()),
            CliError::Io { path: None, source } => write!(f, "{source}"),
        }
    }
}

impl From<fusepeel::Error> for CliError {
    fn from(e: fusepeel::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(source: io::Error) -> Self {
        CliError::Io { path: None, source }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

struct Ctx {
    seed: u64,
    format: Format,
    out: Option<PathBuf>,
    exec: Execution,
}

impl Ctx {
    fn emit<T: Serialize>(&self, rows: &[T]) -> Result<(), CliError> {
        let mut w = output::open(self.out.as_deref())?;
        output::write_rows(&mut w, self.format, rows)?;
        w.flush()?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    let code = e.exit_code();
    let obj = serde_json::json!({
        "error": { "kind": e.kind(), "message": e.to_string(), "exit_code": code }
    });
    eprintln!("{obj}");
    ExitCode::from(code)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = thread_count(cli.threads)?;
    if threads == Some(0) {
        return Err(CliError::Usage("thread count must be at least 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let exec = if pool.current_num_threads() == 1 { Execution::Sequential } else { Execution::Parallel };
    let ctx = Ctx { seed: cli.seed, format: cli.format, out: cli.out, exec };

    pool.install(|| match cli.command {
        Command::Gen(g) => cmd_gen(&ctx, &g),
        Command::Peel(p) => cmd_peel(&ctx, &p),
        Command::McPeel(m) => cmd_mc_peel(&ctx, &m),
        Command::Threshold(t) => cmd_threshold(&ctx, &t),
        Command::Survival(s) => cmd_survival(&ctx, &s),
        Command::Retrieval(RetrievalCommand::Build { args, structure }) => {
            cmd_retrieval_build(&ctx, &args, &structure)
        }
        Command::Retrieval(RetrievalCommand::Query { structure, keys }) => {
            cmd_retrieval_query(&ctx, &structure, &keys)
        }
        Command::Retrieval(RetrievalCommand::Bench { args, trials }) => {
            cmd_retrieval_bench(&ctx, &args, trials)
        }
    })
}

#[derive(Serialize)]
struct GraphJson<'a> {
    k: usize,
    num_vertices: u64,
    edges: Vec<&'a [u64]>,
}

fn cmd_gen(ctx: &Ctx, g: &GraphArgs) -> Result<(), CliError> {
    let h = g.generate(ctx.seed, ctx.exec)?;
    let mut w = output::open(ctx.out.as_deref())?;
    match ctx.format {
        Format::Csv => h.write_dump(&mut w)?,
        Format::Json => {
            let doc = GraphJson { k: h.k(), num_vertices: h.num_vertices(), edges: h.edges().collect() };
            serde_json::to_writer(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PeelRow {
    vertices: u64,
    edges: usize,
    density: f64,
    peelable: bool,
    rounds: usize,
    core_vertices: usize,
    core_edges: usize,
    work: u64,
    timing_seconds: f64,
}

fn cmd_peel(ctx: &Ctx, p: &PeelArgs) -> Result<(), CliError> {
    let h = match &p.input {
        Some(path) => {
            let f = File::open(path).map_err(|e| CliError::io(path, e))?;
            Hypergraph::read_dump(BufReader::new(f))?
        }
        None => p.graph.generate(ctx.seed, ctx.exec)?,
    };
    let t = Instant::now();
    let res = match p.peeler {
        PeelerArg::Rounds => peel_rounds(&h),
        PeelerArg::Sequential => peel_sequential(&h),
    };
    let elapsed = t.elapsed().as_secs_f64();
    ctx.emit(&[PeelRow {
        vertices: h.num_vertices(),
        edges: h.num_edges(),
        density: h.density(),
        peelable: res.is_peelable(),
        rounds: res.rounds,
        core_vertices: res.core_vertices.len(),
        core_edges: res.core_edges.len(),
        work: res.work,
        timing_seconds: elapsed,
    }])
}

#[derive(Serialize)]
struct McSummaryJson<'a, T: Serialize> {
    trials: &'a [T],
    summary: fusepeel::montecarlo::PeelSummary,
}

fn cmd_mc_peel(ctx: &Ctx, m: &McPeelArgs) -> Result<(), CliError> {
    let outcomes = mc_peel(&m.graph.spec(), m.trials, ctx.seed, ctx.exec)?;
    let s = summarize(&outcomes);
    let mut w = output::open(ctx.out.as_deref())?;
    match ctx.format {
        Format::Csv => {
            output::write_rows(&mut w, Format::Csv, &outcomes)?;
            writeln!(
                w,
                "# summary trials={} peelable={} peel_fraction={} mean_rounds={}",
                s.trials, s.peelable, s.peel_fraction, s.mean_rounds
            )?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &McSummaryJson { trials: &outcomes, summary: s })?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BracketRow {
    k: usize,
    half_width: usize,
    tol: f64,
    lower: f64,
    upper: f64,
    width: f64,
    lower_rounds: u64,
    upper_rounds: u64,
    iterations_used: u64,
    reference_c_star: Option<f64>,
    contains_c_star: Option<bool>,
    timing_seconds: f64,
}

#[derive(Serialize)]
struct ClassifyRow {
    k: usize,
    c: f64,
    half_width: usize,
    verdict: &'static str,
    rounds: Option<u64>,
    iterations_used: u64,
    timing_seconds: f64,
}

#[derive(Serialize)]
struct TraceRow {
    kind: &'static str,
    c: f64,
    r: u64,
    probe: f64,
    target: f64,
}

fn kind_name(kind: CheckKind) -> &'static str {
    match kind {
        CheckKind::Erosion => "erosion",
        CheckKind::Consolidation => "consolidation",
    }
}

fn cmd_threshold(ctx: &Ctx, t: &ThresholdArgs) -> Result<(), CliError> {
    if t.k < 3 {
        return Err(CliError::Usage(format!("--k must be at least 3, got {}", t.k)));
    }
    if t.trace_every == 0 {
        return Err(CliError::Usage("--trace-every must be at least 1".into()));
    }
    // Checks to trace afterwards: (kind, c, rounds).
    let mut certificates = Vec::new();

    if t.c.is_empty() {
        let start = Instant::now();
        let b: ThresholdBracket = bracket_threshold_with(t.k, t.window_d, t.max_iter, t.tol, ctx.exec)?;
        let elapsed = start.elapsed().as_secs_f64();
        let c_star = reference::row(t.k).map(|r| r.orientability);
        certificates.push((CheckKind::Erosion, b.lower, b.lower_rounds));
        certificates.push((CheckKind::Consolidation, b.upper, b.upper_rounds));
        ctx.emit(&[BracketRow {
            k: b.k,
            half_width: b.half_width,
            tol: t.tol,
            lower: b.lower,
            upper: b.upper,
            width: b.width(),
            lower_rounds: b.lower_rounds,
            upper_rounds: b.upper_rounds,
            iterations_used: b.iterations_used,
            reference_c_star: c_star,
            contains_c_star: c_star.map(|c| b.contains(c)),
            timing_seconds: elapsed,
        }])?;
    } else {
        let mut rows = Vec::new();
        for &c in &t.c {
            let start = Instant::now();
            let (decision, spent) = classify(t.k, c, t.window_d, t.max_iter, ctx.exec)?;
            let (verdict, rounds) = match decision {
                Decision::Eroding { rounds } => {
                    certificates.push((CheckKind::Erosion, c, rounds));
                    ("eroding", Some(rounds))
                }
                Decision::Consolidating { rounds } => {
                    certificates.push((CheckKind::Consolidation, c, rounds));
                    ("consolidating", Some(rounds))
                }
                Decision::Undecided => ("undecided", None),
            };
            rows.push(ClassifyRow {
                k: t.k,
                c,
                half_width: t.window_d,
                verdict,
                rounds,
                iterations_used: spent,
                timing_seconds: start.elapsed().as_secs_f64(),
            });
        }
        ctx.emit(&rows)?;
    }

    if let Some(path) = &t.trace {
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut csv = csv::Writer::from_writer(BufWriter::new(f));
        for (kind, c, rounds) in certificates {
            let mut err = None;
            let target = fusepeel::threshold::FrontCheck::new(kind, t.k, c, t.window_d)?.target();
            traced_check(kind, t.k, c, t.window_d, rounds, |r, probe| {
                if err.is_none() && (r % t.trace_every == 0 || r == rounds) {
                    err = csv.serialize(TraceRow { kind: kind_name(kind), c, r, probe, target }).err();
                }
            })?;
            if let Some(e) = err {
                return Err(e.into());
            }
        }
        csv.flush()?;
    }
    Ok(())
}

fn cmd_survival(ctx: &Ctx, s: &SurvivalArgs) -> Result<(), CliError> {
    let p = FuseParams { k: s.k, c: s.c, ell: s.ell, n: s.n, seed: ctx.seed };
    let rows = survival_profile(&p, s.rounds, s.trials, ctx.exec)?;
    ctx.emit(&rows)
}

#[derive(Serialize)]
struct BuildRow {
    m: u64,
    k: usize,
    c: f64,
    ell: usize,
    bits: u32,
    n: u64,
    cells: usize,
    attempts: u32,
    successful_seed: u64,
    raw_overhead: f64,
    total_overhead: f64,
    bytes: usize,
    timing_build_seconds: f64,
}

fn cmd_retrieval_build(ctx: &Ctx, a: &RetrievalArgs, structure: &Path) -> Result<(), CliError> {
    let pairs = keys::load(&a.keys, ctx.seed, a.bits)?;
    let start = Instant::now();
    let (s, stats) = RetrievalStructure::build_with(&pairs, &a.params(ctx.seed), ctx.exec)?;
    let elapsed = start.elapsed().as_secs_f64();
    let bytes = s.serialize();
    std::fs::write(structure, &bytes).map_err(|e| CliError::io(structure, e))?;
    ctx.emit(&[BuildRow {
        m: s.m(),
        k: a.k,
        c: a.c,
        ell: a.ell,
        bits: a.bits,
        n: s.n(),
        cells: s.num_cells(),
        attempts: stats.attempts,
        successful_seed: s.successful_seed(),
        raw_overhead: s.raw_overhead(),
        total_overhead: s.total_overhead(),
        bytes: bytes.len(),
        timing_build_seconds: elapsed,
    }])
}

#[derive(Serialize)]
struct QueryRow {
    key: String,
    value: u64,
}

fn cmd_retrieval_query(ctx: &Ctx, structure: &Path, source: &KeySource) -> Result<(), CliError> {
    let bytes = std::fs::read(structure).map_err(|e| CliError::io(structure, e))?;
    let s = RetrievalStructure::deserialize(&bytes).map_err(fusepeel::Error::from)?;
    let pairs = keys::load(source, ctx.seed, s.params().r_bits)?;
    let rows: Vec<QueryRow> = pairs
        .iter()
        .map(|(k, _)| QueryRow { key: String::from_utf8_lossy(k).into_owned(), value: s.query(k) })
        .collect();
    ctx.emit(&rows)
}

#[derive(Serialize)]
struct BenchRow {
    m: usize,
    k: usize,
    c: f64,
    ell: usize,
    bits: u32,
    trials: usize,
    attempts: u32,
    raw_overhead: f64,
    total_overhead: f64,
    all_correct: bool,
    timing_build_ns_per_key: f64,
    timing_query_ns_per_key: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn cmd_retrieval_bench(ctx: &Ctx, a: &RetrievalArgs, trials: usize) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let pairs = keys::load(&a.keys, ctx.seed, a.bits)?;
    let params = a.params(ctx.seed);
    let per_key = |secs: f64| secs * 1e9 / pairs.len().max(1) as f64;
    let (mut build_ns, mut query_ns) = (Vec::new(), Vec::new());
    let mut last = None;
    let mut all_correct = true;
    for _ in 0..trials {
        let start = Instant::now();
        let (s, stats) = RetrievalStructure::build_with(&pairs, &params, ctx.exec)?;
        build_ns.push(per_key(start.elapsed().as_secs_f64()));

        let start = Instant::now();
        let mut wrong = 0usize;
        for (k, v) in &pairs {
            wrong += (s.query(k) != *v) as usize;
        }
        query_ns.push(per_key(start.elapsed().as_secs_f64()));
        all_correct &= wrong == 0;
        last = Some((s, stats));
    }
    let (s, stats) = last.expect("at least one trial");
    ctx.emit(&[BenchRow {
        m: pairs.len(),
        k: a.k,
        c: a.c,
        ell: a.ell,
        bits: a.bits,
        trials,
        attempts: stats.attempts,
        raw_overhead: s.raw_overhead(),
        total_overhead: s.total_overhead(),
        all_correct,
        timing_build_ns_per_key: median(build_ns),
        timing_query_ns_per_key: median(query_ns),
    }])
}
