//! Command-line front end. Every subcommand prints one JSON document on
//! stdout; file outputs are referenced by sha256 digest. Failures print
//! `{"error":{"kind":…,"message":…}}` on stderr.
//!
//! Exit codes, stable by contract: 0 success, 1 verified negative (invalid
//! partition, not cospectral, not isomorphic, fixture drift), 2 usage or
//! I/O, 3 budget.

#![forbid(unsafe_code)]

use clap::{Args, Parser, Subcommand};
use gmswitch::combin::{binom_small, KSubset};
use gmswitch::graph::{
    build_johnson_with_budget, Graph, GraphError, JohnsonSpec, JohnsonView,
    DEFAULT_VERTEX_BUDGET,
};
use gmswitch::invariants::{exact_iso, noniso_certificate, IsoError, IsoOutcome};
use gmswitch::io::{self, BlocksJson, IoError};
use gmswitch::search::{
    search_backtrack, search_exhaustive, verify_fixture_sets, BlockShape, SearchConfig,
    SearchError, SearchMode,
};
use gmswitch::spectra::{cospectral, Cospectrality, SpectraError, PRIME_LIST_VERSION};
use gmswitch::switching::{
    apply_switch_prevalidated, family_a, family_b, johnson_multiblock, k2prefix_counts,
    k2prefix_predicate, predict_lambda_a, predict_lambda_b, validate_partition, FamilyError,
    FamilyInstance, PartitionError, SwitchError, SwitchingPartition,
};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Cells in the `table` sweep run exhaustively when the anchored candidate
/// count stays under this; above it they fall back to shape backtracking.
const TABLE_EXHAUSTIVE_BUDGET: u128 = 40_000_000;

#[derive(Parser)]
#[command(
    name = "gmswitch",
    version,
    about = "Johnson-scheme graphs, Godsil-McKay switching, and exact cospectrality certificates"
)]
struct Cli {
    /// Worker threads (overrides the JS_WORKERS environment variable).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build J_S(n,k) and print its shape; optionally write graph6/JSON.
    Gen(GenArgs),
    /// Construct a switching-family block with its witness vertices.
    Family(FamilyArgs),
    /// Check a partition against the switching conditions.
    VerifyPartition(VerifyPartitionArgs),
    /// Apply a validated switch and write the mate graph.
    Switch(SwitchArgs),
    /// Compare characteristic polynomials modulo the certificate primes.
    Cospectral(CospectralArgs),
    /// Decide non-isomorphism by invariants, or exactly with --exact.
    Iso(IsoArgs),
    /// Predict common-neighbor changes at family witnesses.
    Predict(PredictArgs),
    /// Prefix-block case counts and the admissible-n predicate.
    K2prefix(K2prefixArgs),
    /// Search a graph for single-block switching sets.
    Search(SearchArgs),
    /// Sweep J_S(n,k) rows and print a found/empty summary table.
    Table(TableArgs),
    /// Build, validate, switch, certify, and distinguish in one run.
    Pipeline(PipelineArgs),
    /// Re-check the built-in reference blocks end to end.
    Fixtures(FixturesArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Graph parameters as n,k,{S}, e.g. "8,3,{0}".
    #[arg(long)]
    spec: String,
    /// Output file; `.json` writes labeled JSON, anything else graph6.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Vertex-count cap for the build.
    #[arg(long, default_value_t = DEFAULT_VERTEX_BUDGET)]
    budget: usize,
}

#[derive(Args)]
struct FamilyArgs {
    /// A (needs --m, --n), B (needs --m, --k), multiblock (needs --n, --k).
    #[arg(long)]
    name: String,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    /// Relax the published parameter bounds (families A and B only).
    #[arg(long)]
    unchecked: bool,
    /// Also build the graph and run the full condition check.
    #[arg(long)]
    validate: bool,
    /// Write the partition as a blocks JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Shared graph input: exactly one of --spec (build) or --graph (file).
#[derive(Args)]
struct GraphSource {
    /// Build J_S(n,k) from parameters n,k,{S}.
    #[arg(long, conflicts_with = "graph")]
    spec: Option<String>,
    /// Read a graph file (.g6 or labeled .json).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Vertex-count cap for --spec builds.
    #[arg(long, default_value_t = DEFAULT_VERTEX_BUDGET)]
    budget: usize,
}

impl GraphSource {
    fn load(&self) -> Result<Graph, CliError> {
        match (&self.spec, &self.graph) {
            (Some(s), None) => {
                let spec = parse_spec(s)?;
                Ok(build_johnson_with_budget(&spec, self.budget)?)
            }
            (None, Some(path)) => Ok(io::read_graph_file(path)?),
            _ => Err(CliError::Usage(
                "pass exactly one of --spec or --graph".into(),
            )),
        }
    }
}

#[derive(Args)]
struct VerifyPartitionArgs {
    #[command(flatten)]
    src: GraphSource,
    /// Partition file {"blocks":[[v,…],…]} (0-based vertex indices).
    #[arg(long)]
    blocks: PathBuf,
}

#[derive(Args)]
struct SwitchArgs {
    #[command(flatten)]
    src: GraphSource,
    #[arg(long)]
    blocks: PathBuf,
    /// Where to write the switched graph (graph6; labels survive, the
    /// J_S(n,k) tag does not, so labeled JSON is not available here).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CospectralArgs {
    left: PathBuf,
    right: PathBuf,
    /// Write the left graph's certificate as JSON.
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Args)]
struct IsoArgs {
    left: PathBuf,
    right: PathBuf,
    /// Run the exact decider when the invariant chain is inconclusive.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct PredictArgs {
    /// A (needs --m, --n) or B (needs --m, --k).
    #[arg(long)]
    name: String,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args)]
struct K2prefixArgs {
    #[arg(long)]
    k: u32,
    /// Ground-set size; with --m adds the outside-vertex case counts.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    /// Scan every vertex outside the prefix block and check its count
    /// against the predicted classes (needs --n and --m; adjacency is
    /// computed on demand, so large vertex counts are fine).
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    src: GraphSource,
    /// Block size (even, at least 2).
    #[arg(long)]
    size: u32,
    /// exhaustive | backtrack.
    #[arg(long, default_value = "exhaustive")]
    mode: String,
    /// Comma-separated shape list for backtrack mode: independent-set,
    /// induced-matching, induced-cycle, clique.
    #[arg(long)]
    shapes: Option<String>,
    /// Anchor vertex for the orbit reduction.
    #[arg(long, default_value_t = 0)]
    anchor: u32,
    /// Scan every subset instead of anchoring.
    #[arg(long, conflicts_with = "anchor")]
    no_anchor: bool,
    /// Claim vertex-transitivity for a --graph input, upgrading anchored
    /// emptiness to a global statement. Spec-built graphs get this free.
    #[arg(long)]
    assume_vertex_transitive: bool,
    /// Keep at most this many results (after the deterministic sort).
    #[arg(long)]
    limit: Option<usize>,
    /// Write the results array to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Subset size of the row family: 3, 4, or 5.
    #[arg(long)]
    k: u8,
    #[arg(long)]
    n_min: Option<u8>,
    #[arg(long)]
    n_max: Option<u8>,
    /// Comma-separated block sizes to scan per cell.
    #[arg(long, default_value = "4,6")]
    sizes: String,
    /// Write the table as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Switching family A (needs --m, --n) or B (needs --m, --k).
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    /// Graph parameters n,k,{S}; requires --block-file.
    #[arg(long, conflicts_with = "family")]
    spec: Option<String>,
    /// Partition file {"blocks":[[v,…],…]}.
    #[arg(long)]
    block_file: Option<PathBuf>,
    /// Directory for the emitted artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_VERTEX_BUDGET)]
    budget: usize,
}

#[derive(Args)]
struct FixturesArgs {
    /// Write the fixture report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Error plumbing
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Budget(String),
    /// A check the command exists to perform came back false.
    Negative { kind: &'static str, message: String },
}

impl CliError {
    fn parts(&self) -> (&str, &str, u8) {
        match self {
            CliError::Usage(m) => ("usage", m, 2),
            CliError::Io(m) => ("io", m, 2),
            CliError::Budget(m) => ("budget", m, 3),
            CliError::Negative { kind, message } => (kind, message, 1),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::VertexBudget { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        match e {
            SpectraError::DenseBudget(_) => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::Graph(GraphError::VertexBudget { .. }) => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Budget { .. } => CliError::Budget(e.to_string()),
            SearchError::BadConfig(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SwitchError> for CliError {
    fn from(e: SwitchError) -> Self {
        CliError::Negative {
            kind: "invalid_partition",
            message: e.to_string(),
        }
    }
}

impl From<IsoError> for CliError {
    fn from(e: IsoError) -> Self {
        CliError::Budget(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

fn parse_spec(text: &str) -> Result<JohnsonSpec, CliError> {
    text.parse::<JohnsonSpec>().map_err(|e| usage(e.to_string()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String, CliError> {
    std::fs::write(path, bytes)?;
    Ok(sha256_hex(bytes))
}

fn write_json_file(path: &Path, v: &Value) -> Result<String, CliError> {
    let text = format!("{}\n", serde_json::to_string_pretty(v)?);
    write_bytes(path, text.as_bytes())
}

fn write_graph_file(g: &Graph, path: &Path) -> Result<String, CliError> {
    let is_json = path.extension().map(|e| e == "json").unwrap_or(false);
    let text = if is_json {
        format!("{}\n", io::graph_to_json(g).map_err(|e| usage(e.to_string()))?)
    } else {
        format!("{}\n", io::graph_to_g6(g))
    };
    write_bytes(path, text.as_bytes())
}

fn read_blocks(path: &Path) -> Result<Vec<Vec<u32>>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let doc: BlocksJson = serde_json::from_str(&text)?;
    Ok(doc.blocks)
}

/// Writes one line to stdout. A closed pipe (`… | head`) is the reader's
/// choice, not an error: shut down quietly instead of panicking.
fn out_line(line: &str) -> Result<(), CliError> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{line}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(e.into()),
    }
}

fn emit(v: &Value) -> Result<(), CliError> {
    out_line(&serde_json::to_string_pretty(v)?)
}

fn to_value<T: serde::Serialize>(t: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(t)?)
}

/// JSON numbers hold u64/i64; larger magnitudes degrade to decimal strings.
fn json_u128(x: u128) -> Value {
    u64::try_from(x)
        .map(Value::from)
        .unwrap_or_else(|_| Value::from(x.to_string()))
}

fn json_i128(x: i128) -> Value {
    i64::try_from(x)
        .map(Value::from)
        .unwrap_or_else(|_| Value::from(x.to_string()))
}

fn witness_json(inst: &FamilyInstance) -> Value {
    let mut m = Map::new();
    for (name, set) in &inst.witnesses {
        m.insert((*name).to_string(), json!(set.to_sorted_1based()));
    }
    Value::Object(m)
}

fn parse_shapes(text: &str) -> Result<Vec<BlockShape>, CliError> {
    let mut out = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        out.push(tok.parse::<BlockShape>().map_err(CliError::Usage)?);
    }
    if out.is_empty() {
        return Err(usage("empty shape list"));
    }
    Ok(out)
}

/// Shape list when the caller doesn't pick one: every shape where the
/// 6-cycle scan applies, otherwise the three unbounded-size shapes.
fn default_shapes(size: u32) -> Vec<BlockShape> {
    if size == 4 || size == 6 {
        BlockShape::ALL.to_vec()
    } else {
        vec![
            BlockShape::IndependentSet,
            BlockShape::InducedMatching,
            BlockShape::Clique,
        ]
    }
}

fn parse_sizes(text: &str) -> Result<Vec<u32>, CliError> {
    let mut sizes = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let s: u32 = tok
            .parse()
            .map_err(|_| usage(format!("bad size {tok:?}")))?;
        if s < 2 || s % 2 != 0 {
            return Err(usage(format!("sizes must be even and >= 2, got {s}")));
        }
        sizes.push(s);
    }
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() {
        return Err(usage("empty size list"));
    }
    Ok(sizes)
}

// ---------------------------------------------------------------------------
// Entry
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.or_else(|| {
        std::env::var("JS_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(w) = workers {
        // Sized once up front; search and spectra inherit the global pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global();
    }
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            let (kind, message, code) = e.parts();
            let obj = json!({"error": {"kind": kind, "message": message}});
            eprintln!("{obj}");
            ExitCode::from(code)
        }
    }
}

fn run(cmd: Cmd) -> Result<ExitCode, CliError> {
    match cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Family(a) => cmd_family(a),
        Cmd::VerifyPartition(a) => cmd_verify_partition(a),
        Cmd::Switch(a) => cmd_switch(a),
        Cmd::Cospectral(a) => cmd_cospectral(a),
        Cmd::Iso(a) => cmd_iso(a),
        Cmd::Predict(a) => cmd_predict(a),
        Cmd::K2prefix(a) => cmd_k2prefix(a),
        Cmd::Search(a) => cmd_search(a),
        Cmd::Table(a) => cmd_table(a),
        Cmd::Pipeline(a) => cmd_pipeline(a),
        Cmd::Fixtures(a) => cmd_fixtures(a),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_gen(a: GenArgs) -> Result<ExitCode, CliError> {
    let spec = parse_spec(&a.spec)?;
    let g = build_johnson_with_budget(&spec, a.budget)?;
    let mut doc = json!({
        "spec": spec.to_string(),
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "degree": json_u128(spec.degree()),
    });
    if let Some(path) = &a.out {
        let digest = write_graph_file(&g, path)?;
        doc["out"] = json!(path);
        doc["sha256"] = json!(digest);
    }
    emit(&doc)?;
    Ok(ExitCode::SUCCESS)
}

fn need(opt: Option<u32>, flag: &str, ctx: &str) -> Result<u32, CliError> {
    opt.ok_or_else(|| usage(format!("{ctx} needs {flag}")))
}

fn reject(opt: Option<u32>, flag: &str, ctx: &str) -> Result<(), CliError> {
    if opt.is_some() {
        return Err(usage(format!("{ctx} does not take {flag}")));
    }
    Ok(())
}

fn cmd_family(a: FamilyArgs) -> Result<ExitCode, CliError> {
    let (spec, blocks, witnesses, name) = match a.name.as_str() {
        "A" | "a" => {
            let m = need(a.m, "--m", "family A")?;
            let n = need(a.n, "--n", "family A")?;
            reject(a.k, "--k", "family A")?;
            let inst = family_a(m, n, a.unchecked)?;
            (inst.spec.clone(), vec![inst.block.clone()], witness_json(&inst), "A")
        }
        "B" | "b" => {
            let m = need(a.m, "--m", "family B")?;
            let k = need(a.k, "--k", "family B")?;
            reject(a.n, "--n", "family B")?;
            let inst = family_b(m, k, a.unchecked)?;
            (inst.spec.clone(), vec![inst.block.clone()], witness_json(&inst), "B")
        }
        "multiblock" => {
            let n = need(a.n, "--n", "multiblock")?;
            let k = need(a.k, "--k", "multiblock")?;
            reject(a.m, "--m", "multiblock")?;
            if a.unchecked {
                return Err(usage("--unchecked applies to families A and B"));
            }
            let (spec, blocks) = johnson_multiblock(n, k)?;
            (spec, blocks, Value::Null, "multiblock")
        }
        other => {
            return Err(usage(format!(
                "unknown family {other:?}; expected A, B, or multiblock"
            )))
        }
    };
    let mut doc = json!({
        "name": name,
        "spec": spec.to_string(),
        "vertices": json_u128(spec.vertex_count()),
        "blocks": blocks,
        "block_sizes": blocks.iter().map(|b| b.len()).collect::<Vec<_>>(),
        "witnesses": witnesses,
    });
    if a.validate {
        let g = build_johnson_with_budget(&spec, DEFAULT_VERTEX_BUDGET)?;
        let p = SwitchingPartition::new(g.vertex_count(), blocks.clone())?;
        let report = validate_partition(&g, &p);
        doc["valid"] = json!(report.valid);
        doc["nontrivial"] = json!(report.nontrivial);
        doc["violations"] = json!(report.violation_count());
    }
    if let Some(path) = &a.out {
        let digest = write_json_file(path, &json!({ "blocks": blocks }))?;
        doc["out"] = json!(path);
        doc["sha256"] = json!(digest);
    }
    emit(&doc)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_partition(a: VerifyPartitionArgs) -> Result<ExitCode, CliError> {
    let g = a.src.load()?;
    let blocks = read_blocks(&a.blocks)?;
    let p = SwitchingPartition::new(g.vertex_count(), blocks)?;
    let report = validate_partition(&g, &p);
    emit(&to_value(&report)?)?;
    Ok(if report.valid {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_switch(a: SwitchArgs) -> Result<ExitCode, CliError> {
    let g = a.src.load()?;
    let blocks = read_blocks(&a.blocks)?;
    let p = SwitchingPartition::new(g.vertex_count(), blocks)?;
    let report = validate_partition(&g, &p);
    if !report.valid {
        return Err(CliError::Negative {
            kind: "invalid_partition",
            message: format!(
                "partition fails the switching conditions: {} violation(s)",
                report.violation_count()
            ),
        });
    }
    let mate = apply_switch_prevalidated(&g, &p, &report);
    let digest = write_graph_file(&mate, &a.out)?;
    emit(&json!({
        "valid": true,
        "nontrivial": report.nontrivial,
        "vertices": mate.vertex_count(),
        "edges": mate.edge_count(),
        "out": a.out,
        "sha256": digest,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_cospectral(a: CospectralArgs) -> Result<ExitCode, CliError> {
    let g = io::read_graph_file(&a.left)?;
    let h = io::read_graph_file(&a.right)?;
    let report = cospectral(&g, &h)?;
    let mut doc = json!({
        "prime_list_version": PRIME_LIST_VERSION,
        "primes": report.left.primes,
    });
    let code = match report.verdict {
        Cospectrality::CospectralModPrimes => {
            doc["verdict"] = json!("COSPECTRAL_MOD_PRIMES");
            ExitCode::SUCCESS
        }
        Cospectrality::NotCospectral {
            prime,
            coeff_degree,
        } => {
            doc["verdict"] = json!("NOT_COSPECTRAL");
            doc["prime"] = json!(prime);
            doc["coeff_degree"] = json!(coeff_degree);
            ExitCode::from(1)
        }
    };
    if let Some(path) = &a.cert {
        let digest = write_json_file(path, &to_value(&report.left.to_json_doc())?)?;
        doc["cert"] = json!(path);
        doc["sha256"] = json!(digest);
    }
    emit(&doc)?;
    Ok(code)
}

fn cmd_iso(a: IsoArgs) -> Result<ExitCode, CliError> {
    let g = io::read_graph_file(&a.left)?;
    let h = io::read_graph_file(&a.right)?;
    let chain = noniso_certificate(&g, &h);
    if chain.is_distinguished() {
        emit(&json!({
            "verdict": "NOT_ISOMORPHIC",
            "method": "invariant",
            "certificate": to_value(&chain)?,
        }))?;
        return Ok(ExitCode::from(1));
    }
    if !a.exact {
        emit(&json!({
            "verdict": "INCONCLUSIVE",
            "detail": "all invariants agree; rerun with --exact for a decision",
        }))?;
        return Ok(ExitCode::SUCCESS);
    }
    match exact_iso(&g, &h) {
        Ok(report) => match &report.outcome {
            IsoOutcome::Isomorphic { mapping } => {
                emit(&json!({
                    "verdict": "ISOMORPHIC",
                    "nodes_explored": report.nodes_explored,
                    "mapping": mapping,
                }))?;
                Ok(ExitCode::SUCCESS)
            }
            IsoOutcome::NotIsomorphic => {
                emit(&json!({
                    "verdict": "NOT_ISOMORPHIC",
                    "method": "exact",
                    "nodes_explored": report.nodes_explored,
                }))?;
                Ok(ExitCode::from(1))
            }
        },
        Err(IsoError::UndecidedBudget { budget }) => {
            emit(&json!({
                "verdict": "UNDECIDED",
                "detail": IsoError::UndecidedBudget { budget }.to_string(),
            }))?;
            Ok(ExitCode::from(3))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_predict(a: PredictArgs) -> Result<ExitCode, CliError> {
    let doc = match a.name.as_str() {
        "A" | "a" => {
            let m = need(a.m, "--m", "predict A")?;
            let n = need(a.n, "--n", "predict A")?;
            reject(a.k, "--k", "predict A")?;
            let p = predict_lambda_a(m, n)?;
            json!({
                "name": "A", "m": m, "n": n,
                "lost": json_u128(p.lost),
                "gained": json_u128(p.gained),
                "delta": json_i128(p.delta),
            })
        }
        "B" | "b" => {
            let m = need(a.m, "--m", "predict B")?;
            let k = need(a.k, "--k", "predict B")?;
            reject(a.n, "--n", "predict B")?;
            let p = predict_lambda_b(m, k)?;
            json!({
                "name": "B", "m": m, "k": k,
                "lost": json_u128(p.lost),
                "gained": json_u128(p.gained),
            })
        }
        other => {
            return Err(usage(format!(
                "unknown family {other:?}; expected A or B"
            )))
        }
    };
    emit(&doc)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_k2prefix(a: K2prefixArgs) -> Result<ExitCode, CliError> {
    let mut doc = json!({
        "k": a.k,
        "admissible_n": k2prefix_predicate(a.k),
    });
    let mut code = ExitCode::SUCCESS;
    if let (Some(n), Some(m)) = (a.n, a.m) {
        let counts = k2prefix_counts(n, a.k, m)?;
        doc["n"] = json!(n);
        doc["m"] = json!(m);
        doc["c_size"] = json_i128(counts.c_size);
        doc["case_iii"] = counts.case_iii.map(json_i128).unwrap_or(Value::Null);
        doc["case_iv"] = json_i128(counts.case_iv);
        if a.verify {
            let (scan, ok) = k2prefix_scan(n, a.k, m, &counts)?;
            doc["scan"] = scan;
            if !ok {
                code = ExitCode::from(1);
            }
        }
    } else if a.verify {
        return Err(usage("--verify needs --n and --m"));
    }
    emit(&doc)?;
    Ok(code)
}

/// Walks every vertex outside the prefix block of J_{0..m}(n,k) on demand
/// and histograms its block-neighbor counts against the predicted classes
/// (0 and the full block are always admissible).
fn k2prefix_scan(
    n: u32,
    k: u32,
    m: u32,
    counts: &gmswitch::switching::K2PrefixCounts,
) -> Result<(Value, bool), CliError> {
    if n > 64 {
        return Err(usage(format!("scan needs n <= 64, got {n}")));
    }
    let spec = JohnsonSpec::new(n as u8, k as u8, 0..=m as u8)
        .map_err(|e| usage(e.to_string()))?;
    if spec.vertex_count() > 50_000_000 {
        return Err(CliError::Budget(format!(
            "scan over C({n},{k}) = {} vertices is past the on-demand cap",
            spec.vertex_count()
        )));
    }
    let view = JohnsonView::new(&spec).map_err(|e| usage(e.to_string()))?;
    let prefix: u64 = (1 << (k - 2)) - 1;
    let block: Vec<KSubset> = (0..view.vertex_count())
        .map(|u| view.label(u))
        .filter(|l| l.bits() & prefix == prefix)
        .collect();
    let mut allowed: Vec<i128> = vec![0, counts.c_size, counts.case_iv];
    if let Some(c3) = counts.case_iii {
        allowed.push(c3);
    }
    allowed.sort_unstable();
    allowed.dedup();
    let mut observed: std::collections::BTreeMap<u32, u64> = Default::default();
    let mut ok = true;
    for u in 0..view.vertex_count() {
        let a = view.label(u);
        if a.bits() & prefix == prefix {
            continue;
        }
        let c = block
            .iter()
            .filter(|b| view.adjacent_labels(a, **b))
            .count() as u32;
        *observed.entry(c).or_insert(0) += 1;
        if !allowed.contains(&(c as i128)) {
            ok = false;
        }
    }
    let scan = json!({
        "block_size": block.len(),
        "outside_vertices": view.vertex_count() - block.len(),
        "observed": observed
            .iter()
            .map(|(c, n)| json!({"count": c, "vertices": n}))
            .collect::<Vec<_>>(),
        "allowed": allowed.iter().map(|&c| json_i128(c)).collect::<Vec<_>>(),
        "all_in_predicted_classes": ok,
    });
    Ok((scan, ok))
}

fn parse_mode(text: &str) -> Result<SearchMode, CliError> {
    match text.to_ascii_lowercase().as_str() {
        "exhaustive" => Ok(SearchMode::Exhaustive),
        "backtrack" => Ok(SearchMode::Backtrack),
        other => Err(usage(format!(
            "unknown mode {other:?}; expected exhaustive or backtrack"
        ))),
    }
}

fn run_search(g: &Graph, cfg: &SearchConfig) -> Result<gmswitch::search::SearchOutcome, CliError> {
    Ok(match cfg.mode {
        SearchMode::Exhaustive => search_exhaustive(g, cfg)?,
        SearchMode::Backtrack => search_backtrack(g, cfg)?,
    })
}

fn cmd_search(a: SearchArgs) -> Result<ExitCode, CliError> {
    let g = a.src.load()?;
    let mode = parse_mode(&a.mode)?;
    let shapes = match &a.shapes {
        Some(text) => parse_shapes(text)?,
        None => default_shapes(a.size),
    };
    let cfg = SearchConfig {
        size: a.size,
        mode,
        shapes,
        anchor: if a.no_anchor { None } else { Some(a.anchor) },
        assume_vertex_transitive: a.assume_vertex_transitive,
        workers: None,
        limit: a.limit,
    };
    let t = Instant::now();
    let outcome = run_search(&g, &cfg)?;
    let elapsed_ms = t.elapsed().as_millis() as u64;
    let mut entries: Vec<Value> = Vec::new();
    for r in &outcome.results {
        entries.push(json!({
            "block": r.block,
            "trivial": false,
            "mate_status": to_value(&r.mate_status)?,
            "mate_evidence": to_value(&r.mate_evidence)?,
        }));
    }
    for b in &outcome.trivial_blocks {
        entries.push(json!({
            "block": b,
            "trivial": true,
            "mate_status": Value::Null,
            "mate_evidence": Value::Null,
        }));
    }
    let results = Value::Array(entries);
    let mut doc = json!({
        "size": a.size,
        "mode": to_value(&mode)?,
        "coverage": to_value(&outcome.coverage)?,
        "candidates_examined": json_u128(outcome.candidates_examined),
        "result_count": outcome.results.len(),
        "trivial_count": outcome.trivial_blocks.len(),
        "elapsed_ms": elapsed_ms,
        "results": results.clone(),
    });
    if let Some(spec) = g.spec() {
        doc["spec"] = json!(spec.to_string());
    }
    if let Some(path) = &a.out {
        let digest = write_json_file(path, &results)?;
        doc["out"] = json!(path);
        doc["sha256"] = json!(digest);
    }
    emit(&doc)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// Table sweep
// ---------------------------------------------------------------------------

fn table_columns(k: u8) -> Option<Vec<Vec<u8>>> {
    match k {
        3 => Some(vec![
            vec![0],
            vec![1],
            vec![2],
            vec![0, 1],
            vec![0, 2],
            vec![1, 2],
        ]),
        4 => Some(vec![
            vec![0],
            vec![1],
            vec![2],
            vec![3],
            vec![0, 1],
            vec![0, 2],
            vec![1, 2],
        ]),
        5 => Some(vec![vec![0], vec![1], vec![2], vec![3], vec![4]]),
        _ => None,
    }
}

fn table_default_range(k: u8) -> (u8, u8) {
    match k {
        3 => (6, 15),
        4 => (8, 12),
        _ => (10, 11),
    }
}

struct CellOutcome {
    verdict: String,
    scans: Vec<Value>,
}

/// One (n,S) cell: scan each size, exhaustively when the anchored candidate
/// count is small enough, otherwise by shape backtracking (size 6 uses
/// independent sets, induced matchings, and the induced 6-cycle).
fn run_cell(g: &Graph, sizes: &[u32]) -> Result<CellOutcome, CliError> {
    let v = g.vertex_count();
    let mut scans = Vec::new();
    let mut found = false;
    let mut noniso = false;
    let mut undecided = false;
    let mut all_exhaustive = true;
    for &size in sizes {
        if size as usize > v {
            continue;
        }
        let est = binom_small((v - 1) as u64, size - 1);
        let mut cfg = if est <= TABLE_EXHAUSTIVE_BUDGET {
            SearchConfig::exhaustive(size)
        } else {
            all_exhaustive = false;
            SearchConfig::backtrack(size)
        };
        cfg.shapes = if size == 6 {
            vec![
                BlockShape::IndependentSet,
                BlockShape::InducedMatching,
                BlockShape::InducedCycle,
            ]
        } else {
            default_shapes(size)
        };
        let outcome = run_search(g, &cfg)?;
        if !outcome.results.is_empty() {
            found = true;
            for r in &outcome.results {
                match r.mate_status {
                    gmswitch::search::MateStatus::Nonisomorphic => noniso = true,
                    gmswitch::search::MateStatus::Undecided => undecided = true,
                    gmswitch::search::MateStatus::Isomorphic => {}
                }
            }
        }
        scans.push(json!({
            "size": size,
            "mode": to_value(&cfg.mode)?,
            "results": outcome.results.len(),
            "trivial_blocks": outcome.trivial_blocks.len(),
            "candidates_examined": json_u128(outcome.candidates_examined),
        }));
    }
    let verdict = if found {
        if noniso {
            "1+".to_string()
        } else if undecided {
            "1u".to_string()
        } else {
            "1-".to_string()
        }
    } else if all_exhaustive {
        format!("0e{}", sizes.iter().max().copied().unwrap_or(0))
    } else {
        "0b".to_string()
    };
    Ok(CellOutcome { verdict, scans })
}

fn cmd_table(a: TableArgs) -> Result<ExitCode, CliError> {
    let columns = table_columns(a.k)
        .ok_or_else(|| usage(format!("table supports k in {{3,4,5}}, got {}", a.k)))?;
    let (dmin, dmax) = table_default_range(a.k);
    let n_min = a.n_min.unwrap_or(dmin);
    let n_max = a.n_max.unwrap_or(dmax);
    if n_min > n_max || n_min < a.k {
        return Err(usage(format!(
            "bad row range {n_min}..{n_max} for k = {}",
            a.k
        )));
    }
    let sizes = parse_sizes(&a.sizes)?;
    let col_names: Vec<String> = columns
        .iter()
        .map(|s| {
            let parts: Vec<String> = s.iter().map(|i| i.to_string()).collect();
            format!("{{{}}}", parts.join(","))
        })
        .collect();

    let mut rows_json = Vec::new();
    let mut lines: Vec<Vec<String>> = Vec::new();
    for n in n_min..=n_max {
        let t = Instant::now();
        let mut row_cells = Vec::new();
        let mut row_line = Vec::new();
        for s in &columns {
            let spec = match JohnsonSpec::new(n, a.k, s.iter().copied()) {
                Ok(sp) => sp,
                Err(_) => {
                    row_line.push("-".to_string());
                    row_cells.push(json!({"s": s, "verdict": "-"}));
                    continue;
                }
            };
            let g = build_johnson_with_budget(&spec, DEFAULT_VERTEX_BUDGET)?;
            let cell = run_cell(&g, &sizes)?;
            row_line.push(cell.verdict.clone());
            row_cells.push(json!({
                "s": s,
                "spec": spec.to_string(),
                "verdict": cell.verdict,
                "scans": cell.scans,
            }));
        }
        eprintln!("# n = {n} done in {:.1?}", t.elapsed());
        rows_json.push(json!({"n": n, "cells": row_cells}));
        lines.push(row_line);
    }

    // Fixed-width text grid.
    let width = col_names
        .iter()
        .map(|c| c.len())
        .chain(lines.iter().flatten().map(|c| c.len()))
        .max()
        .unwrap_or(4)
        + 2;
    let size_list: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
    out_line(&format!(
        "single-block switching sets in J_S(n,{}), block sizes {{{}}}",
        a.k,
        size_list.join(",")
    ))?;
    let mut header = format!("{:>4} ", "n");
    for c in &col_names {
        header.push_str(&format!("{c:>width$}"));
    }
    out_line(&header)?;
    for (i, row) in lines.iter().enumerate() {
        let mut line = format!("{:>4} ", n_min + i as u8);
        for cell in row {
            line.push_str(&format!("{cell:>width$}"));
        }
        out_line(&line)?;
    }
    let max_size = sizes.iter().max().copied().unwrap_or(0);
    out_line("legend:")?;
    out_line("  1+    switching set found; some mate proven nonisomorphic")?;
    out_line("  1-    switching set(s) found; every mate proven isomorphic")?;
    out_line("  1u    switching set found; a mate undecided at the exact-iso budget")?;
    out_line(&format!(
        "  0e{max_size}   none exist at these sizes (every scan exhaustive)"
    ))?;
    out_line("  0b    none found by shape backtracking (independent sets, induced")?;
    out_line("        matchings, induced 6-cycles); not a completeness claim")?;
    out_line("  -     parameters invalid for this column")?;

    if let Some(path) = &a.out {
        let doc = json!({
            "k": a.k,
            "sizes": sizes,
            "n_range": [n_min, n_max],
            "columns": col_names,
            "rows": rows_json,
            "legend": {
                "1+": "found, some mate nonisomorphic",
                "1-": "found, all mates isomorphic",
                "1u": "found, some mate undecided",
                format!("0e{max_size}"): "empty, every scan exhaustive",
                "0b": "empty under shape backtracking only",
                "-": "parameters invalid",
            },
        });
        write_json_file(path, &doc)?;
        eprintln!("# wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

fn cmd_pipeline(a: PipelineArgs) -> Result<ExitCode, CliError> {
    let t_total = Instant::now();
    let mut timings = Map::new();
    let mut time = |name: &str, t: Instant| {
        timings.insert(name.to_string(), json!(t.elapsed().as_millis() as u64));
    };

    // Input resolution: a family instance or an explicit spec + block file.
    let (spec, blocks, source) = match (&a.family, &a.spec) {
        (Some(fam), None) => {
            if a.block_file.is_some() {
                return Err(usage("--block-file goes with --spec, not --family"));
            }
            let (inst, source) = match fam.as_str() {
                "A" | "a" => {
                    let m = need(a.m, "--m", "pipeline --family A")?;
                    let n = need(a.n, "--n", "pipeline --family A")?;
                    reject(a.k, "--k", "pipeline --family A")?;
                    (family_a(m, n, false)?, json!({"family": "A", "m": m, "n": n}))
                }
                "B" | "b" => {
                    let m = need(a.m, "--m", "pipeline --family B")?;
                    let k = need(a.k, "--k", "pipeline --family B")?;
                    reject(a.n, "--n", "pipeline --family B")?;
                    (family_b(m, k, false)?, json!({"family": "B", "m": m, "k": k}))
                }
                other => {
                    return Err(usage(format!(
                        "unknown family {other:?}; expected A or B"
                    )))
                }
            };
            (inst.spec.clone(), vec![inst.block.clone()], source)
        }
        (None, Some(s)) => {
            let spec = parse_spec(s)?;
            let path = a
                .block_file
                .as_ref()
                .ok_or_else(|| usage("--spec needs --block-file"))?;
            let blocks = read_blocks(path)?;
            (spec, blocks, json!({"block_file": path}))
        }
        _ => return Err(usage("pass exactly one of --family or --spec")),
    };

    let t = Instant::now();
    let g = build_johnson_with_budget(&spec, a.budget)?;
    time("build", t);

    let t = Instant::now();
    let p = SwitchingPartition::new(g.vertex_count(), blocks.clone())?;
    let report = validate_partition(&g, &p);
    time("validate", t);
    if !report.valid {
        return Err(CliError::Negative {
            kind: "invalid_partition",
            message: format!(
                "partition fails the switching conditions: {} violation(s)",
                report.violation_count()
            ),
        });
    }

    let t = Instant::now();
    let mate = apply_switch_prevalidated(&g, &p, &report);
    time("switch", t);

    let t = Instant::now();
    let cos = cospectral(&g, &mate)?;
    time("certify", t);
    let cos_verdict = match cos.verdict {
        Cospectrality::CospectralModPrimes => json!("COSPECTRAL_MOD_PRIMES"),
        Cospectrality::NotCospectral {
            prime,
            coeff_degree,
        } => json!({"NOT_COSPECTRAL": {"prime": prime, "coeff_degree": coeff_degree}}),
    };
    if !matches!(cos.verdict, Cospectrality::CospectralModPrimes) {
        return Err(CliError::Negative {
            kind: "not_cospectral",
            message: "switched mate is not cospectral with the base graph".into(),
        });
    }

    let t = Instant::now();
    let chain = noniso_certificate(&g, &mate);
    let (mate_verdict, exact_json) = if chain.is_distinguished() {
        ("DISTINGUISHED", Value::Null)
    } else {
        match exact_iso(&g, &mate) {
            Ok(rep) => match rep.outcome {
                IsoOutcome::NotIsomorphic => (
                    "NONISOMORPHIC",
                    json!({"isomorphic": false, "nodes_explored": rep.nodes_explored}),
                ),
                IsoOutcome::Isomorphic { .. } => (
                    "ISOMORPHIC",
                    json!({"isomorphic": true, "nodes_explored": rep.nodes_explored}),
                ),
            },
            Err(e) => ("UNDECIDED", json!({"detail": e.to_string()})),
        }
    };
    time("distinguish", t);

    std::fs::create_dir_all(&a.out_dir)?;
    let t = Instant::now();
    let mut outputs = Map::new();
    let mut put = |name: &str, digest: String| {
        outputs.insert(name.to_string(), json!(digest));
    };
    put("base.g6", write_graph_file(&g, &a.out_dir.join("base.g6"))?);
    put("mate.g6", write_graph_file(&mate, &a.out_dir.join("mate.g6"))?);
    put(
        "certificate.json",
        write_json_file(
            &a.out_dir.join("certificate.json"),
            &to_value(&cos.left.to_json_doc())?,
        )?,
    );
    let verdict_doc = json!({
        "cospectral": cos_verdict,
        "mate_verdict": mate_verdict,
        "certificate_chain": to_value(&chain)?,
        "exact": exact_json,
        "nontrivial": report.nontrivial,
        "prime_list_version": PRIME_LIST_VERSION,
    });
    put(
        "verdict.json",
        write_json_file(&a.out_dir.join("verdict.json"), &verdict_doc)?,
    );
    time("emit", t);
    timings.insert(
        "total".to_string(),
        json!(t_total.elapsed().as_millis() as u64),
    );

    let manifest = json!({
        "command_line": std::env::args().collect::<Vec<_>>(),
        "spec": {
            "spec": spec.to_string(),
            "n": spec.n,
            "k": spec.k,
            "S": spec.s.iter().copied().collect::<Vec<u8>>(),
            "source": source,
            "block_sizes": blocks.iter().map(|b| b.len()).collect::<Vec<_>>(),
        },
        "tool_version": env!("CARGO_PKG_VERSION"),
        "prime_list_version": PRIME_LIST_VERSION,
        "verdicts": {"cospectral": "COSPECTRAL_MOD_PRIMES", "mate": mate_verdict},
        "timings_ms": Value::Object(timings),
        "outputs": Value::Object(outputs),
    });
    write_json_file(&a.out_dir.join("manifest.json"), &manifest)?;
    emit(&manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fixtures(a: FixturesArgs) -> Result<ExitCode, CliError> {
    let report = verify_fixture_sets().map_err(|e| CliError::Negative {
        kind: "fixture",
        message: e.to_string(),
    })?;
    let ok = report.blocks.iter().all(|b| {
        b.valid && b.nontrivial && b.cospectral_all_primes && b.exact_iso_nonisomorphic
    });
    let doc = to_value(&report)?;
    if let Some(path) = &a.out {
        write_json_file(path, &doc)?;
    }
    emit(&doc)?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
