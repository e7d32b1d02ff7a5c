use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qswiso_core::catalog::{all_graphs, connected_graphs, connected_graphs_up_to};
use qswiso_core::counting::{cumulants_contour, cumulants_forward, split_char_poly, ContourOptions, CumulantSet};
use qswiso_core::graph::{encode_graph6_bits, named_graph, parse_graph6, read_graph6_file, EdgeList, Graph};
use qswiso_core::liouville::{compose, AuxEdge};
use qswiso_core::reconstruct::{reconstruct_spectrum, reconstruct_visible_spectrum, CumulantSource};
use qswiso_core::search::{containment_check, parse_grid, search_cospectral, sweep, Invariant, SearchOptions};
use qswiso_core::spectral::{compare, omega_spectrum, radius_bound, Verdict, DEFAULT_TAU};
use qswiso_core::trajectory::{k_statistics, simulate, CountRecord, SimulationConfig};
use qswiso_core::{Error, VERSION};

const EXIT_DISTINGUISHED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Quantum stochastic walk spectra as graph invariants.
///
/// Graphs are read from graph6 or edge-list JSON files, or given as
/// `named:NAME[:PARAM]` (path, cycle, complete, star, shrikhande, rook4).
/// Vertex labels on the command line are 1-based. Set QSWISO_THREADS to cap
/// parallelism.
#[derive(Parser, Debug)]
#[command(name = "qswiso", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "kebab-case")]
enum Command {
    /// ω-spectrum of one graph.
    Spectrum(SpectrumArgs),
    /// Spectral distance of two graphs; exit 0 if cospectral within tolerance, 1 if distinguished.
    Compare(CompareArgs),
    /// Spectral distance over a grid of ω values.
    Sweep(SweepArgs),
    /// Cospectral pairs in a catalog, classified by which spectra tie.
    Search(SearchArgs),
    /// Check that every A- or L-distinguished pair is also ω-distinguished.
    Containment(ContainmentArgs),
    /// Recover the spectrum from the counting statistics of an auxiliary edge.
    Reconstruct(ReconstructArgs),
    /// Count jumps across the auxiliary edge in quantum-jump trajectories.
    Simulate(SimulateArgs),
    /// Exact or estimated cumulants of the jump count.
    Cumulants(CumulantsArgs),
    /// Generate a graph6 catalog of all graphs on n vertices.
    Catalog(CatalogArgs),
    /// Re-run the configuration embedded in a result file.
    #[serde(skip)]
    Run(RunArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Source {
    Forward,
    Contour,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CumulantMethodArg {
    Forward,
    Contour,
    /// k-statistics of a simulated count record.
    Estimate,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct OutArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SpectrumArgs {
    #[arg(long)]
    graph: String,
    #[arg(long)]
    omega: f64,
    /// Clustering tolerance for counting distinct eigenvalues.
    #[arg(long, default_value_t = 1e-6)]
    distinct_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct CompareArgs {
    #[arg(long)]
    g1: String,
    #[arg(long)]
    g2: String,
    #[arg(long)]
    omega: f64,
    /// Per-eigenvalue tolerance τ; graphs are cospectral if δ ≤ τ·n².
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SweepArgs {
    #[arg(long)]
    g1: String,
    #[arg(long)]
    g2: String,
    /// Grid as lo:hi:count.
    #[arg(long, default_value = "0:1:101")]
    omega_grid: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[group(required = true, multiple = false, id = "graphs")]
struct CatalogInput {
    /// graph6 file, one graph per line.
    #[arg(long, group = "graphs")]
    catalog: Option<PathBuf>,
    /// Generate all connected graphs with up to this many vertices instead.
    #[arg(long, group = "graphs")]
    max_n: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SearchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: CatalogInput,
    /// Comma-separated subset of A, L, Q (= |L|), Abar.
    #[arg(long, default_value = "A,L,Q,Abar")]
    invariants: String,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tol: f64,
    /// Permit catalogs beyond 8 vertices or 20,000 graphs.
    #[arg(long)]
    allow_large: bool,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ContainmentArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: CatalogInput,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tol: f64,
    /// A pair counts as ω-distinguished when δ > factor·τ·n².
    #[arg(long, default_value_t = 10.0)]
    factor: f64,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct EdgeArgs {
    #[arg(long)]
    graph: String,
    #[arg(long)]
    omega: f64,
    /// Auxiliary edge u,v (1-based, not an edge of the graph).
    #[arg(long)]
    edge: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ReconstructArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: EdgeArgs,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Number of cumulants (default 2(n²−1)).
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, value_enum, default_value_t = Source::Forward)]
    source: Source,
    /// Working precision in bits.
    #[arg(long, default_value_t = 512)]
    prec: u32,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    #[arg(long, default_value_t = 64)]
    points: usize,
    /// Relative residual allowed on the surplus rows of the visible-factor solve.
    #[arg(long, default_value_t = 1e-20)]
    visible_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: EdgeArgs,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Window length Δt.
    #[arg(long, default_value_t = 100.0)]
    dt: f64,
    #[arg(long, default_value_t = 10_000)]
    windows: usize,
    /// Discarded initial time (default 10/gap).
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output; metadata goes to `<out>.json` (stderr without --out).
    #[command(flatten)]
    #[serde(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct CumulantsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: EdgeArgs,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 4)]
    order: usize,
    #[arg(long, value_enum, default_value_t = CumulantMethodArg::Forward)]
    method: CumulantMethodArg,
    #[arg(long, default_value_t = 256)]
    prec: u32,
    /// Count CSV (window,count) for `--method estimate`.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Window length of the count record for `--method estimate`.
    #[arg(long)]
    dt: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct CatalogArgs {
    #[arg(long)]
    n: usize,
    /// Include disconnected graphs.
    #[arg(long)]
    all: bool,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// JSON result file (its `run.config` is used) or a bare configuration.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load_graph(spec: &str) -> CliResult<Graph> {
    if let Some(rest) = spec.strip_prefix("named:") {
        let mut parts = rest.splitn(2, ':');
        let name = parts.next().unwrap_or_default();
        let param = match parts.next() {
            Some(p) => Some(p.parse::<usize>().map_err(|_| usage(format!("bad parameter in {spec:?}")))?),
            None => None,
        };
        return Ok(named_graph(name, param)?);
    }
    let text = fs::read_to_string(spec).map_err(|e| usage(format!("{spec}: {e}")))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let list: EdgeList = serde_json::from_str(trimmed).map_err(|e| usage(format!("{spec}: {e}")))?;
        return Ok(Graph::try_from(list)?);
    }
    let line = trimmed.lines().next().ok_or_else(|| usage(format!("{spec}: empty graph file")))?;
    Ok(parse_graph6(line)?)
}

fn load_catalog(input: &CatalogInput) -> CliResult<Vec<Graph>> {
    match (&input.catalog, input.max_n) {
        (Some(path), _) => Ok(read_graph6_file(path)?),
        (None, Some(n)) => Ok(connected_graphs_up_to(n)?),
        (None, None) => Err(usage("either --catalog or --max-n is required")),
    }
}

/// 1-based `u,v` to a 0-based pair.
fn parse_edge(s: &str) -> CliResult<(usize, usize)> {
    let bad = || usage(format!("edge {s:?} is not of the form u,v with 1-based labels"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let u: usize = a.trim().parse().map_err(|_| bad())?;
    let v: usize = b.trim().parse().map_err(|_| bad())?;
    if u == 0 || v == 0 {
        return Err(bad());
    }
    Ok((u - 1, v - 1))
}

fn check_omega(omega: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&omega) {
        Ok(())
    } else {
        Err(usage(format!("omega = {omega} outside [0, 1]")))
    }
}

fn run_config(cmd: &Command) -> Value {
    json!({ "version": VERSION, "config": cmd })
}

fn emit(out: &OutArgs, text: &str) -> CliResult<()> {
    match &out.out {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json(out: &OutArgs, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    emit(out, &text)
}

/// CSV with the run configuration as leading `#` comment lines.
fn csv_with_header(cmd: &Command, header: &str, rows: &[String]) -> String {
    let mut text = format!("# qswiso {VERSION}\n# config {}\n{header}\n", serde_json::to_string(&run_config(cmd)["config"]).expect("config serializes"));
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    text
}

fn execute(cmd: &Command) -> CliResult<u8> {
    match cmd {
        Command::Spectrum(a) => {
            check_omega(a.omega)?;
            let g = load_graph(&a.graph)?;
            let s = omega_spectrum(&g, a.omega)?;
            match a.format {
                Format::Json => emit_json(
                    &a.out,
                    &json!({
                        "run": run_config(cmd),
                        "spectrum": s.to_json(a.omega, g.n()),
                        "distinct": s.distinct_count(a.distinct_tol),
                        "max_abs": s.max_abs(),
                        "radius_bound": radius_bound(&g, a.omega),
                    }),
                )?,
                Format::Csv => {
                    let rows: Vec<String> = s.values().iter().map(|z| format!("{:e},{:e}", z.re, z.im)).collect();
                    emit(&a.out, &csv_with_header(cmd, "re,im", &rows))?;
                }
            }
            Ok(0)
        }
        Command::Compare(a) => {
            check_omega(a.omega)?;
            let (g1, g2) = (load_graph(&a.g1)?, load_graph(&a.g2)?);
            let r = compare(&g1, &g2, a.omega, a.tol)?;
            emit_json(&a.out, &json!({ "run": run_config(cmd), "result": r }))?;
            Ok(if r.verdict == Verdict::Distinguished { EXIT_DISTINGUISHED } else { 0 })
        }
        Command::Sweep(a) => {
            let grid = parse_grid(&a.omega_grid)?;
            let (g1, g2) = (load_graph(&a.g1)?, load_graph(&a.g2)?);
            let points = sweep(&g1, &g2, &grid)?;
            match a.format {
                Format::Csv => {
                    let rows: Vec<String> = points.iter().map(|p| format!("{},{:e}", p.omega, p.delta)).collect();
                    emit(&a.out, &csv_with_header(cmd, "omega,delta", &rows))?;
                }
                Format::Json => emit_json(&a.out, &json!({ "run": run_config(cmd), "points": points }))?,
            }
            Ok(0)
        }
        Command::Search(a) => {
            check_omega(a.omega)?;
            let invariants = a
                .invariants
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse)
                .collect::<Result<Vec<Invariant>, _>>()?;
            let graphs = load_catalog(&a.input)?;
            let report = search_cospectral(&graphs, &invariants, SearchOptions { omega: a.omega, tau: a.tol, allow_large: a.allow_large })?;
            emit_json(&a.out, &json!({ "run": run_config(cmd), "report": report }))?;
            Ok(0)
        }
        Command::Containment(a) => {
            check_omega(a.omega)?;
            let graphs = load_catalog(&a.input)?;
            let report = containment_check(&graphs, a.omega, a.tol, a.factor)?;
            emit_json(&a.out, &json!({ "run": run_config(cmd), "report": report }))?;
            Ok(0)
        }
        Command::Reconstruct(a) => {
            check_omega(a.model.omega)?;
            let g = load_graph(&a.model.graph)?;
            let (u, v) = parse_edge(&a.model.edge)?;
            let aux = AuxEdge::new(u, v, a.epsilon)?;
            aux.admissible_for(&g)?;
            let source = match a.source {
                Source::Forward => CumulantSource::Forward,
                Source::Contour => CumulantSource::Contour(ContourOptions {
                    radius: a.radius,
                    points: a.points,
                    prec: a.prec,
                    ..ContourOptions::default()
                }),
            };
            let full = reconstruct_spectrum(&g, a.model.omega, aux, a.order, source, a.prec);
            let (full_json, full_error, code) = match &full {
                Ok(r) => (Some(r.to_json()), None, 0),
                Err(e) if e.is_numerical() => (None, Some(e.to_string()), EXIT_NUMERICAL),
                Err(e) => return Err(Failure { code: EXIT_INPUT, message: e.to_string() }),
            };
            // the identifiable factor is still reported when the full system is singular
            let visible = if full.is_err() {
                match reconstruct_visible_spectrum(&g, a.model.omega, aux, a.order, source, a.prec, a.visible_tol) {
                    Ok(vis) => json!(vis.to_json()),
                    Err(e) => json!({ "error": e.to_string() }),
                }
            } else {
                Value::Null
            };
            emit_json(
                &a.out,
                &json!({ "run": run_config(cmd), "full": full_json, "full_error": full_error, "visible": visible }),
            )?;
            if let Some(msg) = full_error {
                eprintln!("qswiso: full reconstruction failed: {msg}");
            }
            Ok(code)
        }
        Command::Simulate(a) => {
            check_omega(a.model.omega)?;
            let g = load_graph(&a.model.graph)?;
            let edge = parse_edge(&a.model.edge)?;
            let cfg = SimulationConfig {
                omega: a.model.omega,
                edge,
                epsilon: a.epsilon,
                dt: a.dt,
                windows: a.windows,
                burn_in: a.burn_in,
                seed: a.seed,
            };
            let rec = simulate(&g, &cfg)?;
            let meta = serde_json::to_string_pretty(&json!({ "run": run_config(cmd), "record": rec.meta() }))
                .expect("JSON values serialize");
            emit(&a.out, &rec.to_csv())?;
            match &a.out.out {
                Some(path) => {
                    let side = sidecar_path(path);
                    fs::write(&side, meta + "\n").map_err(|e| usage(format!("{}: {e}", side.display())))?;
                }
                None => eprintln!("{meta}"),
            }
            Ok(0)
        }
        Command::Cumulants(a) => {
            check_omega(a.model.omega)?;
            let body = match a.method {
                CumulantMethodArg::Estimate => {
                    let path = a.counts.as_ref().ok_or_else(|| usage("--method estimate needs --counts"))?;
                    let dt = a.dt.ok_or_else(|| usage("--method estimate needs --dt"))?;
                    let counts = read_counts(path)?;
                    let rec = CountRecord {
                        n: 0,
                        graph6: String::new(),
                        omega: a.model.omega,
                        edge: (0, 0),
                        epsilon: a.epsilon,
                        dt,
                        windows: counts.len(),
                        burn_in: 0.0,
                        seed: 0,
                        streams: 0,
                        counts,
                    };
                    json!(k_statistics(&rec, a.order)?)
                }
                method => {
                    let g = load_graph(&a.model.graph)?;
                    let (u, v) = parse_edge(&a.model.edge)?;
                    let aux = AuxEdge::new(u, v, a.epsilon)?;
                    let set: CumulantSet = if method == CumulantMethodArg::Forward {
                        cumulants_forward(&split_char_poly(&g, a.model.omega, aux, a.prec)?, a.order)?
                    } else {
                        let s = compose(&g, a.model.omega, Some(aux), 0.0)?;
                        cumulants_contour(&s, a.order, ContourOptions { prec: a.prec, ..ContourOptions::default() })?
                    };
                    json!({ "method": set.method, "values": set.to_f64() })
                }
            };
            emit_json(&a.out, &json!({ "run": run_config(cmd), "cumulants": body }))?;
            Ok(0)
        }
        Command::Catalog(a) => {
            let lines: Vec<String> = if a.all {
                all_graphs(a.n)?.iter().map(|rows| encode_graph6_bits(a.n, rows)).collect()
            } else {
                connected_graphs(a.n)?.iter().map(Graph::to_graph6).collect()
            };
            let mut text = lines.join("\n");
            if !text.is_empty() {
                text.push('\n');
            }
            emit(&a.out, &text)?;
            eprintln!("{}", json!({ "run": run_config(cmd), "graphs": lines.len() }));
            Ok(0)
        }
        Command::Run(r) => {
            let text = fs::read_to_string(&r.config).map_err(|e| usage(format!("{}: {e}", r.config.display())))?;
            let value: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", r.config.display())))?;
            let config = value.pointer("/run/config").cloned().unwrap_or(value);
            let inner: Command = serde_json::from_value(config).map_err(|e| usage(format!("invalid configuration: {e}")))?;
            execute(&inner)
        }
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn read_counts(path: &Path) -> CliResult<Vec<u64>> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| {
            l.rsplit(',')
                .next()
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| usage(format!("{}: bad count line {l:?}", path.display())))
        })
        .collect()
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("QSWISO_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| usage(format!("QSWISO_THREADS={v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| execute(&cli.command));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("qswiso: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
