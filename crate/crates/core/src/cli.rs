//! The `gridsep` command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 verification failure.
//! Results go to standard output; a run manifest and diagnostics go to
//! standard error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;

use crate::audit::{emit_histogram, estimate_from_plans, estimate_separation, StatsMeta};
use crate::enumerate::{all_colorings, enumerate_cycles, enumerate_walks, feasible_colorings, EnumBudget};
use crate::error::{Error, Result};
use crate::grid::{DualVertex, GridDims, GridDual, PrimalEdge, PrimalVertex, SubgridWindow};
use crate::oracle;
use crate::recom::{initial_partition, load_graph, run_chain, WeightedGraph};
use crate::reconnect::{sweep_all, unseparate, verify_unseparating_map, ReconnectConfig};
use crate::sampler::{sample_many, seeded_rng, RestartPolicy, SamplerConfig, SamplerMode};
use crate::structures::{
    classify_case, detect_cross_structures, elbow_classify, find_regions, find_thin_structures, is_disposable,
    island_walk, Coloring,
};
use crate::walkmap::verify_exhaustive;
use crate::walks::Walk;

#[derive(Debug, Parser)]
#[command(name = "gridsep", version, about = "Spanning-tree partition sampling and verification on grid graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw 2-partitions; one JSON line per accepted sample.
    Sample(SampleArgs),
    /// Exact partition distribution and per-edge separation probabilities.
    Oracle(OracleArgs),
    /// Per-edge separation histogram from a sampler or a ReCom chain.
    Audit(AuditArgs),
    /// Run a ReCom chain; one JSON line of assignments per emitted state.
    Recom(RecomArgs),
    /// Reconnect a separated pair, or audit the unseparating map.
    Reconnect(ReconnectArgs),
    /// Exhaustive check of the walk bijection on one path and window.
    WalkmapVerify(WalkmapArgs),
    /// Structural detectors on a coloring.
    Structure(StructureArgs),
    /// Enumerate walks, cycles, or colorings.
    Enum(EnumArgs),
    /// Write a unit-weight grid in the graph JSON schema.
    ExportGrid(ExportArgs),
}

#[derive(Debug, Args, Clone, Copy)]
struct GridArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
}

impl GridArgs {
    fn build(&self) -> Result<GridDual> {
        GridDual::build(GridDims::new(self.rows, self.cols)?)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Alg2,
    #[value(alias = "ust")]
    UstSplit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RestartArg {
    Auto,
    Walk,
    Edge,
}

#[derive(Debug, Args)]
struct SamplerArgs {
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "alg2")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "auto")]
    restart: RestartArg,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl SamplerArgs {
    fn config(&self) -> SamplerConfig {
        SamplerConfig {
            lambda: self.lambda,
            seed: self.seed,
            mode: match self.mode {
                ModeArg::Alg2 => SamplerMode::Alg2,
                ModeArg::UstSplit => SamplerMode::UstSplit,
            },
            restart: match self.restart {
                RestartArg::Auto => RestartPolicy::Auto,
                RestartArg::Walk => RestartPolicy::Walk,
                RestartArg::Edge => RestartPolicy::Edge,
            },
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[arg(long, default_value_t = 1)]
    n: usize,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Report one edge, given as `i,j,i',j'`.
    #[arg(long)]
    edge: Option<String>,
    /// Also list every partition with its probability.
    #[arg(long)]
    list: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Sample,
    Recom,
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Graph JSON file; defaults to the `--rows` × `--cols` grid.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    thin: usize,
}

impl ChainArgs {
    fn load(&self) -> Result<WeightedGraph> {
        match (&self.graph, self.rows, self.cols) {
            (Some(path), _, _) => load_graph(path),
            (None, Some(rows), Some(cols)) => Ok(WeightedGraph::from_grid(&GridDual::build(GridDims::new(rows, cols)?)?)),
            _ => Err(Error::InvalidInput("give --graph or both --rows and --cols".into())),
        }
    }
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long, value_enum)]
    source: SourceArg,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "alg2")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Samples, or chain states after the initial one.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Writes PREFIX.csv and PREFIX.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RecomArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ReconnectArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// The separated pair `i,j,i',j'`.
    #[arg(long)]
    edge: Option<String>,
    /// Audit the map over every separating partition.
    #[arg(long)]
    exhaustive: bool,
    /// Reconnect every separated pair of every feasible partition.
    #[arg(long)]
    sweep: bool,
    /// Coloring file (rows of `r`/`b`) for a single reconnection.
    #[arg(long)]
    coloring: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    gamma: usize,
    #[arg(long, default_value_t = 1)]
    n0: usize,
    #[arg(long, default_value_t = 6)]
    max_flips: usize,
    /// Smallest cycle length in the audited domain.
    #[arg(long, default_value_t = 8)]
    min_len: usize,
    #[arg(long)]
    records: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Args)]
struct WalkmapArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Face window `row_lo,row_hi,col_lo,col_hi`.
    #[arg(long)]
    window: String,
    #[arg(long, default_value_t = 12)]
    max_len: usize,
    /// Dual path as `;`-separated faces `i,j` or `outer`. Defaults to the
    /// straight path along the window's top row.
    #[arg(long)]
    path: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StructureOp {
    Regions,
    Cross,
    Islands,
    Thin,
    Disposable,
    Elbow,
    Case,
}

#[derive(Debug, Args)]
struct StructureArgs {
    #[arg(long, value_enum)]
    op: StructureOp,
    /// Coloring file: rows of `r`/`b`.
    #[arg(long)]
    coloring: PathBuf,
    /// Vertex `i,j` for disposable and elbow.
    #[arg(long)]
    vertex: Option<String>,
    /// Edge `i,j,i',j'` for case; the first vertex is the one classified.
    #[arg(long)]
    edge: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EnumWhat {
    Walks,
    Cycles,
    Colorings,
    Feasible,
}

#[derive(Debug, Args)]
struct EnumArgs {
    #[arg(long, value_enum)]
    what: EnumWhat,
    #[command(flatten)]
    grid: GridArgs,
    /// Walk start: `i,j` or `outer`.
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long, default_value_t = 4)]
    max_len: usize,
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Reproducibility record written to standard error.
#[derive(Debug, Serialize)]
struct RunManifest {
    subcommand: String,
    args: Vec<String>,
    seed: Option<u64>,
    version: &'static str,
    started: f64,
    finished: f64,
}

/// A failed run: input problems exit 1, failed checks exit 2.
enum Failure {
    Input(Error),
    Verification(serde_json::Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoCandidateFound(_) | Error::StepFailed(_) => Failure::Verification(json!({ "error": e.to_string() })),
            other => Failure::Input(other),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn main() -> i32 {
    run(std::env::args().collect())
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = now();
    let (name, seed) = describe(&cli.command);
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let result = dispatch(cli.command, &mut out);
    let _ = out.flush();
    let manifest = RunManifest {
        subcommand: name.to_string(),
        args: argv.into_iter().skip(1).collect(),
        seed,
        version: env!("CARGO_PKG_VERSION"),
        started,
        finished: now(),
    };
    eprintln!("{}", serde_json::to_string(&manifest).expect("manifest serializes"));
    match result {
        Ok(()) => 0,
        Err(Failure::Input(e)) => {
            eprintln!("{}", json!({ "error": e.to_string() }));
            1
        }
        Err(Failure::Verification(v)) => {
            eprintln!("{v}");
            2
        }
    }
}

fn describe(c: &Command) -> (&'static str, Option<u64>) {
    match c {
        Command::Sample(a) => ("sample", Some(a.sampler.seed)),
        Command::Oracle(_) => ("oracle", None),
        Command::Audit(a) => ("audit", Some(a.seed)),
        Command::Recom(a) => ("recom", Some(a.seed)),
        Command::Reconnect(_) => ("reconnect", None),
        Command::WalkmapVerify(_) => ("walkmap-verify", None),
        Command::Structure(_) => ("structure", None),
        Command::Enum(_) => ("enum", None),
        Command::ExportGrid(_) => ("export-grid", None),
    }
}

fn dispatch(c: Command, out: &mut impl Write) -> CmdResult {
    match c {
        Command::Sample(a) => cmd_sample(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Audit(a) => cmd_audit(a, out),
        Command::Recom(a) => cmd_recom(a, out),
        Command::Reconnect(a) => cmd_reconnect(a, out),
        Command::WalkmapVerify(a) => cmd_walkmap(a, out),
        Command::Structure(a) => cmd_structure(a, out),
        Command::Enum(a) => cmd_enum(a, out),
        Command::ExportGrid(a) => cmd_export(a, out),
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Input(Error::InvalidInput(format!("write failed: {e}")))
}

fn emit(out: &mut impl Write, v: &impl Serialize) -> CmdResult {
    let line = serde_json::to_string(v).expect("output serializes");
    writeln!(out, "{line}").map_err(io_err)
}

fn emit_pretty(out: &mut impl Write, v: &impl Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(v).expect("output serializes");
    writeln!(out, "{text}").map_err(io_err)
}

fn parse_numbers(s: &str, n: usize, what: &str) -> Result<Vec<usize>> {
    let parts: std::result::Result<Vec<usize>, _> = s.split(',').map(|x| x.trim().parse::<usize>()).collect();
    match parts {
        Ok(v) if v.len() == n => Ok(v),
        _ => Err(Error::Parse(format!("{what} must be {n} comma-separated integers, got {s:?}"))),
    }
}

fn parse_vertex(s: &str) -> Result<PrimalVertex> {
    let v = parse_numbers(s, 2, "vertex")?;
    Ok(PrimalVertex::new(v[0], v[1]))
}

fn parse_edge(s: &str) -> Result<(PrimalVertex, PrimalVertex)> {
    let v = parse_numbers(s, 4, "edge")?;
    Ok((PrimalVertex::new(v[0], v[1]), PrimalVertex::new(v[2], v[3])))
}

fn parse_dual_vertex(s: &str) -> Result<DualVertex> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("outer") || t.eq_ignore_ascii_case("o") {
        return Ok(DualVertex::Outer);
    }
    let v = parse_numbers(t, 2, "face")?;
    Ok(DualVertex::face(v[0], v[1]))
}

fn check_vertex(g: &GridDual, p: PrimalVertex) -> Result<usize> {
    if !g.contains_vertex(p) {
        return Err(Error::InvalidInput(format!("{p} is outside the grid")));
    }
    Ok(g.vertex_index(p))
}

fn read_coloring(path: &Path) -> Result<Coloring> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Coloring::parse(&text)
}

fn cmd_sample(a: SampleArgs, out: &mut impl Write) -> CmdResult {
    let g = a.grid.build()?;
    for s in sample_many(&g, a.sampler.config(), a.n, a.sampler.workers)? {
        emit(out, &s.summary())?;
    }
    Ok(())
}

fn edge_json(g: &GridDual, e: usize) -> serde_json::Value {
    json!(g.primal_edge(e).to_pairs())
}

fn cmd_oracle(a: OracleArgs, out: &mut impl Write) -> CmdResult {
    let g = a.grid.build()?;
    let dist = oracle::exact_distribution(&g, a.lambda)?;
    let probs = dist.probabilities();
    let z = if a.lambda == 0.0 {
        json!(dist.total_score().to_string())
    } else {
        let w = dist.entries.iter().map(|e| e.score.to_f64().unwrap_or(f64::INFINITY) * (-a.lambda * e.imbalance2 as f64 / 2.0).exp());
        json!(oracle::neumaier_sum(w))
    };
    let sep = oracle::separation_probabilities(&g, &dist);
    let per_edge: Vec<_> = sep.iter().enumerate().map(|(e, &p)| json!({ "edge": edge_json(&g, e), "probability": p })).collect();
    let mut report = json!({
        "rows": a.grid.rows,
        "cols": a.grid.cols,
        "lambda": a.lambda,
        "partitions": dist.entries.len(),
        "Z": z,
        "per_edge_separation": per_edge,
    });
    if let Some(edge) = &a.edge {
        let (p, q) = parse_edge(edge)?;
        let pe = PrimalEdge::new(p, q)?;
        if !g.contains_vertex(p) || !g.contains_vertex(q) {
            return Err(Error::InvalidInput(format!("edge {edge} is outside the grid")).into());
        }
        let e = g.edge_index(&pe);
        let mut entry = json!({ "edge": edge_json(&g, e), "probability": sep[e] });
        if a.lambda == 0.0 {
            entry["exact"] = json!(oracle::exact_separation_ratio(&g, &pe)?.to_string());
        }
        report["edge"] = entry;
    }
    if a.list {
        let list: Vec<_> = dist
            .entries
            .iter()
            .zip(&probs)
            .map(|(e, &p)| {
                json!({
                    "coloring": Coloring::from_partition(&e.partition).to_string().replace('\n', "/"),
                    "score": e.score.to_string(),
                    "imbalance": e.imbalance2 as f64 / 2.0,
                    "probability": p,
                })
            })
            .collect();
        report["list"] = json!(list);
    }
    emit_pretty(out, &report)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_audit(a: AuditArgs, out: &mut impl Write) -> CmdResult {
    let stats = match a.source {
        SourceArg::Sample => {
            let (Some(rows), Some(cols)) = (a.chain.rows, a.chain.cols) else {
                return Err(Error::InvalidInput("sample source needs --rows and --cols".into()).into());
            };
            let g = GridDual::build(GridDims::new(rows, cols)?)?;
            let cfg = SamplerArgs { lambda: a.lambda, seed: a.seed, mode: a.mode, restart: RestartArg::Auto, workers: a.workers }.config();
            estimate_separation(&g, cfg, a.n, a.workers)?
        }
        SourceArg::Recom => {
            let g = a.chain.load()?;
            let mut rng = seeded_rng(a.seed, 0);
            let init = initial_partition(&g, a.chain.k, a.chain.eps, &mut rng)?;
            let steps = a.n * a.chain.thin.max(1);
            let eps = a.chain.eps;
            let meta = StatsMeta {
                source: "recom".into(),
                seed: a.seed,
                params: json!({ "k": a.chain.k, "eps": eps, "steps": steps, "thin": a.chain.thin, "n": a.n }),
            };
            let mut invalid = None;
            let plans = run_chain(&g, init, eps, steps, a.chain.thin, seeded_rng(a.seed, 1)).skip(1).map(|r| {
                r.map(|(step, p)| {
                    if invalid.is_none() {
                        if let Err(e) = p.validate(&g, eps) {
                            invalid = Some(json!({ "error": "invalid chain state", "step": step, "detail": e.to_string() }));
                        }
                    }
                    p
                })
            });
            let stats = estimate_from_plans(&g, plans, meta)?;
            if let Some(v) = invalid {
                return Err(Failure::Verification(v));
            }
            stats
        }
    };
    let hist = emit_histogram(&stats, a.bins)?;
    write_file(&with_extension(&a.out, "csv"), &hist.to_csv())?;
    let mirror = json!({ "histogram": hist, "stats": stats });
    write_file(&with_extension(&a.out, "json"), &serde_json::to_string_pretty(&mirror).expect("serializes"))?;
    emit(
        out,
        &json!({
            "edges": hist.edges,
            "min": hist.min,
            "max": hist.max,
            "mean": hist.mean,
            "alpha_hat": hist.alpha_hat,
            "observations": stats.observations(),
        }),
    )
}

fn cmd_recom(a: RecomArgs, out: &mut impl Write) -> CmdResult {
    let g = a.chain.load()?;
    let eps = a.chain.eps;
    let init = initial_partition(&g, a.chain.k, eps, &mut seeded_rng(a.seed, 0))?;
    for item in run_chain(&g, init, eps, a.steps, a.chain.thin, seeded_rng(a.seed, 1)) {
        let (step, p) = item?;
        if let Err(e) = p.validate(&g, eps) {
            return Err(Failure::Verification(json!({ "error": "invalid chain state", "step": step, "detail": e.to_string() })));
        }
        let assignment: Vec<usize> = p.assignment.iter().map(|d| d + 1).collect();
        emit(out, &json!({ "step": step, "assignment": assignment }))?;
    }
    Ok(())
}

fn cmd_reconnect(a: ReconnectArgs, out: &mut impl Write) -> CmdResult {
    let g = a.grid.build()?;
    let cfg = ReconnectConfig { gamma: a.gamma, n0: a.n0, max_flips: a.max_flips };
    if a.sweep {
        let report = sweep_all(&g, &cfg, a.workers)?;
        emit_pretty(out, &report)?;
        if !report.passed() {
            return Err(Failure::Verification(json!({ "error": "reconnection failed", "failures": report.failures })));
        }
        return Ok(());
    }
    let edge = a.edge.as_deref().ok_or_else(|| Error::InvalidInput("--edge is required".into()))?;
    let (u, v) = parse_edge(edge)?;
    check_vertex(&g, u)?;
    check_vertex(&g, v)?;
    if a.exhaustive {
        let report = verify_unseparating_map(&g, u, v, a.min_len, &cfg, a.records)?;
        emit_pretty(out, &report)?;
        if !report.passes {
            return Err(Failure::Verification(json!({ "error": "unseparating map check failed", "failures": report.failures })));
        }
        return Ok(());
    }
    let path = a.coloring.as_deref().ok_or_else(|| Error::InvalidInput("give --coloring, --exhaustive or --sweep".into()))?;
    let c = read_coloring(path)?;
    if c.dims() != g.dims() {
        return Err(Error::InvalidInput("coloring size differs from --rows/--cols".into()).into());
    }
    let p = c.to_partition(&g)?;
    match unseparate(&g, &p, u, v, &cfg) {
        Ok(r) => {
            let flips: Vec<usize> = r.flipped.iter().map(|&w| g.vertex_index(w)).collect();
            emit_pretty(
            out,
            &json!({
                "flipped": r.flipped,
                "delta_size": r.delta_size,
                "outer_degree_before": r.outer_degree_before,
                "outer_degree_after": r.outer_degree_after,
                "case": r.case,
                "coloring": c.with_flipped(&flips).to_string(),
            }),
        )
        }
        Err(Error::NoCandidateFound(msg)) => {
            Err(Failure::Verification(json!({ "error": msg, "coloring": c.to_string(), "u": u, "v": v })))
        }
        Err(e) => Err(e.into()),
    }
}

/// Straight path along the window's top face row, stepping one face past
/// each side or into Outer at the grid border.
fn default_path(g: &GridDual, w: &SubgridWindow) -> Result<Walk<DualVertex, crate::grid::DualEdge>> {
    let face_cols = g.dims().cols - 1;
    let r = w.row_lo;
    let mut vs = Vec::new();
    vs.push(if w.col_lo > 1 { DualVertex::face(r, w.col_lo - 1) } else { DualVertex::Outer });
    for j in w.col_lo..=w.col_hi {
        vs.push(DualVertex::face(r, j));
    }
    vs.push(if w.col_hi < face_cols { DualVertex::face(r, w.col_hi + 1) } else { DualVertex::Outer });
    if vs[0] == vs[vs.len() - 1] {
        return Err(Error::InvalidInput("window spans the grid; pass --path".into()));
    }
    path_from_vertices(g, &vs)
}

fn path_from_vertices(g: &GridDual, vs: &[DualVertex]) -> Result<Walk<DualVertex, crate::grid::DualEdge>> {
    let mut edges = Vec::new();
    for pair in vs.windows(2) {
        let (a, b) = (g.dual_index(pair[0]), g.dual_index(pair[1]));
        // Between a corner face and Outer there are two edges; take the first.
        let e = g
            .dual_neighbors(a)
            .iter()
            .find(|&&(w, _)| w == b)
            .map(|&(_, e)| g.dual_edge(e))
            .ok_or_else(|| Error::InvalidInput(format!("{} and {} are not adjacent", pair[0], pair[1])))?;
        edges.push(e);
    }
    Walk::new(vs.to_vec(), edges)
}

fn cmd_walkmap(a: WalkmapArgs, out: &mut impl Write) -> CmdResult {
    let g = a.grid.build()?;
    let b = parse_numbers(&a.window, 4, "window")?;
    let window = SubgridWindow::new(b[0], b[1], b[2], b[3])?;
    if b[1] >= g.dims().rows || b[3] >= g.dims().cols {
        return Err(Error::InvalidInput("window exceeds the face grid".into()).into());
    }
    let d = match &a.path {
        Some(p) => {
            let vs = p.split(';').map(parse_dual_vertex).collect::<Result<Vec<_>>>()?;
            for v in &vs {
                if let DualVertex::Face { i, j } = *v {
                    if i == 0 || j == 0 || i >= g.dims().rows || j >= g.dims().cols {
                        return Err(Error::InvalidInput(format!("{v} is outside the grid")).into());
                    }
                }
            }
            path_from_vertices(&g, &vs)?
        }
        None => default_path(&g, &window)?,
    };
    if !d.is_simple() {
        return Err(Error::InvalidInput("path must be simple".into()).into());
    }
    let report = verify_exhaustive(&g, &d, &window, a.max_len)?;
    emit_pretty(
        out,
        &json!({
            "path": d.trace(),
            "pairs": report.pairs,
            "instances": report.instances,
            "injective": report.injective,
            "erasure_ok": report.erasure_ok,
            "roundtrip_ok": report.roundtrip_ok,
            "outer_ok": report.outer_ok,
            "no_flip_ok": report.no_flip_ok,
            "max_edge_diff": report.max_edge_diff,
            "edge_bound": report.edge_bound,
            "min_log4_ratio": report.min_log4_ratio,
            "ratio_floor": report.ratio_floor,
            "violations": report.violations,
        }),
    )?;
    if !report.passed() {
        return Err(Failure::Verification(json!({ "error": "walk map check failed", "violations": report.violations })));
    }
    Ok(())
}

fn vertex_json(g: &GridDual, v: usize) -> serde_json::Value {
    let p = g.vertex(v);
    json!([p.i, p.j])
}

fn cmd_structure(a: StructureArgs, out: &mut impl Write) -> CmdResult {
    let c = read_coloring(&a.coloring)?;
    let g = GridDual::build(c.dims())?;
    let verts = |vs: &[usize]| vs.iter().map(|&v| vertex_json(&g, v)).collect::<Vec<_>>();
    let report = match a.op {
        StructureOp::Regions => {
            let r = find_regions(&g, &c);
            let regions: Vec<_> = r
                .regions
                .iter()
                .map(|x| json!({ "color": x.color, "island": x.is_island, "vertices": verts(&x.vertices) }))
                .collect();
            json!({ "feasible": regions.len() == 2, "regions": regions })
        }
        StructureOp::Cross => {
            let corners: Vec<_> = detect_cross_structures(&c).into_iter().map(|p| json!([p.i, p.j])).collect();
            json!({ "cross_structures": corners })
        }
        StructureOp::Islands => {
            let r = find_regions(&g, &c);
            let mut islands = Vec::new();
            for x in r.regions.iter().filter(|x| x.is_island) {
                let walk = match island_walk(&g, &c, x) {
                    Ok(w) => json!({
                        "walk": verts(&w.walk),
                        "spokes": w.spokes.iter().map(|&(a, b)| json!([vertex_json(&g, a), vertex_json(&g, b)])).collect::<Vec<_>>(),
                    }),
                    Err(e) => json!({ "error": e.to_string() }),
                };
                islands.push(json!({ "color": x.color, "vertices": verts(&x.vertices), "island_walk": walk }));
            }
            json!({ "islands": islands })
        }
        StructureOp::Thin => {
            let thin: Vec<_> = find_thin_structures(&g, &c)
                .into_iter()
                .map(|t| {
                    json!({
                        "kind": t.kind,
                        "vertices": verts(&t.vertices),
                        "flanks": verts(&t.flanks),
                        "resolved": crate::structures::resolve_thin(&c, &t).to_string(),
                    })
                })
                .collect();
            json!({ "thin": thin })
        }
        StructureOp::Disposable | StructureOp::Elbow => {
            let s = a.vertex.as_deref().ok_or_else(|| Error::InvalidInput("--vertex is required".into()))?;
            let v = check_vertex(&g, parse_vertex(s)?)?;
            if matches!(a.op, StructureOp::Disposable) {
                json!({ "vertex": vertex_json(&g, v), "disposable": is_disposable(&g, &c, v) })
            } else {
                json!({ "vertex": vertex_json(&g, v), "elbow": elbow_classify(&c, v)? })
            }
        }
        StructureOp::Case => {
            let s = a.edge.as_deref().ok_or_else(|| Error::InvalidInput("--edge is required".into()))?;
            let (p, q) = parse_edge(s)?;
            let (u, v) = (check_vertex(&g, p)?, check_vertex(&g, q)?);
            json!({ "u": [p.i, p.j], "v": [q.i, q.j], "case": classify_case(&c, u, v)? })
        }
    };
    emit_pretty(out, &report)
}

fn cmd_enum(a: EnumArgs, out: &mut impl Write) -> CmdResult {
    let g = a.grid.build()?;
    let limit = a.limit.unwrap_or(usize::MAX);
    match a.what {
        EnumWhat::Walks => {
            let from = parse_dual_vertex(a.from.as_deref().unwrap_or("outer"))?;
            let to = parse_dual_vertex(a.to.as_deref().unwrap_or("outer"))?;
            for w in enumerate_walks(&g, from, to, EnumBudget::walks(a.max_len))?.take(limit) {
                emit(out, &json!({ "walk": w?.trace() }))?;
            }
        }
        EnumWhat::Cycles => {
            for c in enumerate_cycles(&g, EnumBudget::cycles(a.max_len))?.take(limit) {
                let c = c?;
                emit(out, &json!({ "length": c.len(), "cut": c.canonical_cut() }))?;
            }
        }
        EnumWhat::Colorings | EnumWhat::Feasible => {
            let items: Box<dyn Iterator<Item = Vec<bool>>> = if matches!(a.what, EnumWhat::Colorings) {
                Box::new(all_colorings(&g, EnumBudget::default())?)
            } else {
                Box::new(feasible_colorings(&g, EnumBudget::default())?)
            };
            for red in items.take(limit) {
                let c = Coloring::new(g.dims(), red)?;
                emit(out, &json!({ "coloring": c.to_string().replace('\n', "/") }))?;
            }
        }
    }
    Ok(())
}

fn cmd_export(a: ExportArgs, out: &mut impl Write) -> CmdResult {
    let g = a.grid.build()?;
    let file = WeightedGraph::from_grid(&g).to_file();
    let text = serde_json::to_string_pretty(&file).expect("graph serializes");
    match &a.out {
        Some(path) => write_file(path, &text)?,
        None => writeln!(out, "{text}").map_err(io_err)?,
    }
    Ok(())
}
