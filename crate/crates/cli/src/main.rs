//! `gbtopt` command-line interface.
//!
//! Exit status: 0 success, 1 usage error, 2 invalid input (or a solution
//! that fails `check`), 3 a limit stopped the solver before it finished.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use gbtopt::bounding::root_partition;
use gbtopt::branching::BranchOrder;
use gbtopt::config::{MixtureConfig, SolverConfig};
use gbtopt::data::load_training_data;
use gbtopt::heuristics::{incremental_minlp, pso, simulated_annealing, HeuristicResult, Strategy};
use gbtopt::milp::{check_solution, export_milp, parse_solution_csv};
use gbtopt::report::{write_log_csv, write_report, write_trace_csv};
use gbtopt::{
    fit_pca, solve, solve_subset, BreakpointGrid, IndexRange, IndexedEnsemble, NodeDomain, PenaltyModel, Status,
    TreeEnsemble,
};

#[derive(Debug, Parser)]
#[command(name = "gbtopt", about = "Minimize tree ensembles plus convex penalties")]
struct Cli {
    /// Worker threads; 1 gives the deterministic reference mode. Falls back
    /// to GBTOPT_THREADS.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Branch-and-bound to a certified gap.
    Solve(SolveArgs),
    /// Block-partition lower bound as CSV.
    Bound(BoundArgs),
    /// Incremental, particle swarm or annealing upper bounds.
    Heuristic(HeuristicArgs),
    /// Write the mixed-integer model in LP format.
    ExportMilp(ExportArgs),
    /// Verify a MILP solution against the ensemble.
    Check(CheckArgs),
    /// Evaluate the model at a point.
    Evaluate(EvaluateArgs),
    /// Print ensemble size statistics.
    Stats(StatsArgs),
}

/// Model and penalty inputs shared by every subcommand.
#[derive(Debug, Args)]
struct Problem {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ensemble dump (JSON).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Training data CSV for the PCA penalty.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Principal loadings kept.
    #[arg(long)]
    rank: Option<usize>,
    /// Variables whose sum is pulled toward --mixture-target.
    #[arg(long, value_delimiter = ',')]
    mixture_indices: Option<Vec<usize>>,
    #[arg(long, requires = "mixture_indices")]
    mixture_target: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long)]
    subset_size: Option<usize>,
    #[arg(long)]
    lookahead: Option<usize>,
    /// Seconds per partition refinement.
    #[arg(long)]
    refine_limit: Option<f64>,
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `weight`, `random` or `random:SEED`.
    #[arg(long)]
    branch_order: Option<String>,
    /// Bound-evolution log.
    #[arg(long)]
    log_csv: Option<PathBuf>,
    /// JSON run report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long)]
    subset_size: Option<usize>,
    /// `full`, or a JSON file `{"lower": [...], "upper": [...]}`.
    #[arg(long, default_value = "full")]
    domain: String,
    /// CSV destination; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Incremental,
    Pso,
    Sa,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Ta,
    Bi,
    Random,
}

#[derive(Debug, Args)]
struct HeuristicArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Trees added per incremental iteration.
    #[arg(long)]
    step: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Per-iteration progress log.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    problem: Problem,
    /// CSV of `name,value` rows; an `objective` row is compared too.
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    point: Vec<f64>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

/// `GBTOPT_THREADS`, when set and non-empty, as a positive thread count.
fn threads_from_env() -> Result<Option<u32>, String> {
    match std::env::var("GBTOPT_THREADS") {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<u32>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(format!("GBTOPT_THREADS must be a positive integer, got {v:?}")),
        },
        _ => Ok(None),
    }
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<gbtopt::Error> for Failure {
    fn from(e: gbtopt::Error) -> Self {
        Failure::invalid(e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn version() -> String {
    format!(
        "{} (ensemble schema {}, output format {})",
        env!("CARGO_PKG_VERSION"),
        gbtopt::ENSEMBLE_SCHEMA_VERSION,
        gbtopt::OUTPUT_FORMAT_VERSION
    )
}

fn main() -> ExitCode {
    let matches = Cli::command().version(&*version().leak()).try_get_matches();
    let cli = match matches.and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match threads_from_env() {
            Ok(t) => t,
            Err(message) => {
                eprintln!("error: {message}");
                return ExitCode::from(1);
            }
        },
    };
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t as usize).build_global() {
            eprintln!("error: cannot start {t} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let threads = threads.map(|t| t as usize);
    let outcome = match cli.command {
        Command::Solve(a) => run_solve(a, threads),
        Command::Bound(a) => run_bound(a),
        Command::Heuristic(a) => run_heuristic(a, threads),
        Command::ExportMilp(a) => run_export(a),
        Command::Check(a) => run_check(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Stats(a) => run_stats(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn config_for(p: &Problem) -> Result<SolverConfig, Failure> {
    let mut c = match &p.config {
        Some(path) => SolverConfig::load(path)?,
        None => SolverConfig::default(),
    };
    if p.model.is_some() {
        c.model_path.clone_from(&p.model);
    }
    if p.data.is_some() {
        c.data_path.clone_from(&p.data);
    }
    if let Some(l) = p.lambda {
        c.lambda = l;
    }
    if p.rank.is_some() {
        c.rank = p.rank;
    }
    if let Some(indices) = &p.mixture_indices {
        let target = p
            .mixture_target
            .or(c.mixture.as_ref().map(|m| m.target))
            .unwrap_or(MixtureConfig::default().target);
        c.mixture = Some(MixtureConfig {
            indices: indices.clone(),
            target,
        });
    }
    Ok(c)
}

fn load_model(c: &SolverConfig) -> Result<TreeEnsemble, Failure> {
    let path = c
        .model_path
        .as_ref()
        .ok_or_else(|| Failure::usage("no model given (use --model or model_path in the config)"))?;
    Ok(TreeEnsemble::load(path)?)
}

/// The PCA penalty when training data is configured, otherwise only the
/// mixture term (or nothing).
fn build_penalty(c: &SolverConfig, ens: &TreeEnsemble) -> Result<PenaltyModel, Failure> {
    let mixture = c.mixture.clone().map(Into::into);
    match &c.data_path {
        Some(path) => {
            let k = c
                .rank
                .ok_or_else(|| Failure::invalid("--rank is required with --data"))?;
            let data = load_training_data(path, Some(ens.n()))?;
            let pca = fit_pca(&data.rows, k)?;
            Ok(PenaltyModel::from_pca(&pca, c.lambda, mixture)?)
        }
        None => {
            let n = ens.n();
            Ok(PenaltyModel::new(vec![0.0; n], vec![1.0; n], Vec::new(), 0.0, mixture)?)
        }
    }
}

fn prepare(p: &Problem) -> Result<(SolverConfig, TreeEnsemble, PenaltyModel), Failure> {
    let c = config_for(p)?;
    let ens = load_model(&c)?;
    let pen = build_penalty(&c, &ens)?;
    Ok((c, ens, pen))
}

fn parse_order(text: &str, seed: u64) -> Result<BranchOrder, Failure> {
    match text.split_once(':') {
        None if text == "weight" => Ok(BranchOrder::Weight),
        None if text == "random" => Ok(BranchOrder::Random(seed)),
        Some(("random", s)) => s
            .parse()
            .map(BranchOrder::Random)
            .map_err(|_| Failure::usage(format!("bad seed in --branch-order {text:?}"))),
        _ => Err(Failure::usage(format!(
            "--branch-order must be weight, random or random:SEED, got {text:?}"
        ))),
    }
}

fn fmt_point(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(",")
}

fn status_name(s: Status) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn run_solve(a: SolveArgs, threads: Option<usize>) -> Outcome {
    let mut c = config_for(&a.problem)?;
    macro_rules! take {
        ($($field:ident),*) => { $( if let Some(v) = a.$field { c.$field = v.into(); } )* };
    }
    take!(lookahead, refine_limit, gap_tol, seed);
    if a.subset_size.is_some() {
        c.subset_size = a.subset_size;
    }
    if a.time_limit.is_some() {
        c.time_limit = a.time_limit;
    }
    if a.node_limit.is_some() {
        c.node_limit = a.node_limit;
    }
    if let Some(o) = &a.branch_order {
        c.branch_order = parse_order(o, c.seed)?;
    }
    if a.log_csv.is_some() {
        c.log_csv.clone_from(&a.log_csv);
    }
    if a.report.is_some() {
        c.report_path.clone_from(&a.report);
    }
    if threads.is_some() {
        c.threads = threads;
    }
    c.validate()?;
    let ens = load_model(&c)?;
    let pen = build_penalty(&c, &ens)?;
    let r = solve(&ens, &pen, &c.solve_options())?;

    if let Some(path) = &c.log_csv {
        write_log_csv(&r.events, path)?;
    }
    if let Some(path) = &c.report_path {
        write_report(&r, &c, c.log_csv.as_deref(), path)?;
    }
    println!("trees {}  variables {}", ens.len(), ens.n());
    println!(
        "nodes {}  pruned {}  strong branches {}  cells {}",
        r.nodes_processed, r.nodes_pruned, r.strong_branches_taken, r.cells_finalized
    );
    println!(
        "time {:.1} ms (convex {:.1} ms, ensemble {:.1} ms)",
        r.times.total_ms, r.times.convex_ms, r.times.gbt_ms
    );
    if r.truncated_bounds {
        println!("note: some block bounds stopped at their search budget");
    }
    println!("x* {}", fmt_point(&r.incumbent_x));
    println!(
        "status {}  f* {:.6}  lb {:.6}  gap {:.6}",
        status_name(r.status),
        r.incumbent_value,
        r.global_lower_bound,
        r.gap
    );
    Ok(if r.status == Status::Limit { 3 } else { 0 })
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxFile {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Smallest grid domain containing the box in `path`.
fn domain_from_file(path: &Path, grid: &BreakpointGrid) -> Result<NodeDomain, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let b: BoxFile = serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let n = grid.n();
    if b.lower.len() != n || b.upper.len() != n {
        return Err(Failure::invalid(format!("domain box needs {n} lower and upper values")));
    }
    let mut ranges = Vec::with_capacity(n);
    for i in 0..n {
        let row = grid.row(i);
        let (lo, hi) = (b.lower[i], b.upper[i]);
        if !(lo <= hi && lo >= row[0] && hi <= row[row.len() - 1]) {
            return Err(Failure::invalid(format!(
                "domain interval [{lo}, {hi}] of variable {i} is empty or leaves the box"
            )));
        }
        let a = row.iter().rposition(|&v| v <= lo).unwrap_or(0).min(row.len() - 2);
        let z = row.iter().position(|&v| v >= hi).unwrap_or(row.len() - 1).max(a + 1);
        ranges.push(IndexRange::new(a, z));
    }
    Ok(NodeDomain::new(ranges))
}

fn run_bound(a: BoundArgs) -> Outcome {
    let c = config_for(&a.problem)?;
    let ens = load_model(&c)?;
    let size = a
        .subset_size
        .or(c.subset_size)
        .unwrap_or_else(|| gbtopt::bounding::default_block_size(ens.len()));
    if size == 0 {
        return Err(Failure::invalid("--subset-size must be at least 1"));
    }
    let ix = IndexedEnsemble::new(&ens);
    let domain = match a.domain.as_str() {
        "full" => ix.grid().root_domain(),
        path => domain_from_file(Path::new(path), ix.grid())?,
    };
    let start = Instant::now();
    let mut csv = String::from("block_id,size,leaves,bound,wall_ms\n");
    let (mut total, mut leaves) = (0.0, 0);
    let part = root_partition(ens.len(), size);
    for (k, block) in part.blocks().iter().enumerate() {
        let t = Instant::now();
        let sol = solve_subset(&ix, &block.trees, &domain);
        let l = ix.reachable_leaf_count(&block.trees, &domain);
        total += sol.value;
        leaves += l;
        let ms = t.elapsed().as_secs_f64() * 1e3;
        let _ = writeln!(csv, "{k},{},{l},{},{ms:.3}", block.trees.len(), sol.value);
    }
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let _ = writeln!(csv, "total,{},{leaves},{total},{ms:.3}", ens.len());
    match &a.output {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
            println!("subset size {size}: {} blocks, bound {total}", part.len());
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn run_heuristic(a: HeuristicArgs, threads: Option<usize>) -> Outcome {
    let (mut c, ens, pen) = prepare(&a.problem)?;
    let h = &mut c.heuristics;
    let seed = a.seed.unwrap_or(c.seed);
    if let Some(s) = a.strategy {
        h.incremental.strategy = match s {
            StrategyArg::Ta => Strategy::Ta,
            StrategyArg::Bi => Strategy::Bi,
            StrategyArg::Random => Strategy::Random(seed),
        };
    }
    if let Some(s) = a.step {
        h.incremental.step = s;
    }
    if let Some(s) = a.seed {
        h.pso.seed = s;
        h.sa.seed = s;
    }
    if let Some(t) = a.time_limit {
        h.incremental.time_limit = Some(t);
        h.pso.time_limit = Some(t);
        h.sa.time_limit = Some(t);
    }
    if let Some(p) = a.particles {
        h.pso.particles = p;
    }
    if let Some(i) = a.iterations {
        h.pso.iterations = i;
    }
    if threads.is_some() {
        c.threads = threads;
    }
    c.validate()?;
    let h = &c.heuristics;
    let objective = |x: &[f64]| pen.eval(x) + ens.evaluate(x);
    let r: HeuristicResult = match a.method {
        Method::Incremental => incremental_minlp(&ens, &pen, &h.incremental, &c.solve_options())?,
        Method::Pso => pso(objective, ens.lower(), ens.upper(), Some(&pen), &h.pso),
        Method::Sa => simulated_annealing(objective, ens.lower(), ens.upper(), &h.sa),
    };
    if let Some(path) = &a.trace_csv {
        write_trace_csv(&r.trace, path)?;
    }
    println!("iterations {}", r.trace.len());
    println!("x {}", fmt_point(&r.x));
    println!("value {:.6}", r.value);
    Ok(0)
}

fn run_export(a: ExportArgs) -> Outcome {
    let (_, ens, pen) = prepare(&a.problem)?;
    let ix = IndexedEnsemble::new(&ens);
    export_milp(&ix, &pen, &a.output)?;
    println!("wrote {}", a.output.display());
    Ok(0)
}

fn run_check(a: CheckArgs) -> Outcome {
    let (_, ens, pen) = prepare(&a.problem)?;
    let ix = IndexedEnsemble::new(&ens);
    let text = std::fs::read_to_string(&a.solution)
        .map_err(|e| Failure::invalid(format!("{}: {e}", a.solution.display())))?;
    let assignment = parse_solution_csv(&ix, &text)?;
    let verdict = check_solution(&ix, &pen, &assignment)?;
    println!("{verdict}");
    if verdict.is_feasible() {
        Ok(0)
    } else {
        Err(Failure::invalid("solution rejected"))
    }
}

fn run_evaluate(a: EvaluateArgs) -> Outcome {
    let (c, ens, pen) = prepare(&a.problem)?;
    if a.point.len() != ens.n() {
        return Err(Failure::invalid(format!(
            "point has {} coordinates, the model has {} variables",
            a.point.len(),
            ens.n()
        )));
    }
    if !ens.contains(&a.point) {
        eprintln!("warning: point lies outside the model box");
    }
    let f = ens.evaluate(&a.point);
    if c.data_path.is_none() && c.mixture.is_none() {
        println!("{f}");
    } else {
        let p = pen.eval(&a.point);
        println!("ensemble {f}");
        println!("penalty {p}");
        println!("objective {}", f + p);
    }
    Ok(0)
}

fn run_stats(a: StatsArgs) -> Outcome {
    let ens = TreeEnsemble::load(&a.model)?;
    let s = ens.stats();
    if a.json {
        println!("{}", serde_json::to_string_pretty(&s).map_err(|e| Failure::invalid(e.to_string()))?);
        return Ok(0);
    }
    println!("variables {}", ens.n());
    println!("trees {}", s.tree_count);
    println!("leaves {}", s.leaf_count);
    println!("splits {}", s.split_count);
    println!("max depth {}", s.max_depth);
    println!("binary variables {}", s.binary_var_count);
    println!("leaf combinations 2^{}", s.combination_bound_log2);
    println!("pairwise checks per combination {}", s.pair_checks);
    if let Some(b) = s.feasibility_check_bound_log2 {
        println!("feasibility checks 2^{b:.2}");
    }
    Ok(0)
}
