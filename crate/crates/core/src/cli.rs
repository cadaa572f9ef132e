//! Command-line driver: argument parsing, pipelines and the JSON report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::cache::Cache;
use crate::chain::{builtin_chain, builtin_source, ChainSpec};
use crate::closure::{closure_table_with, detect_central, render_multi_index, GeneratorSet, StructureReport};
use crate::error::{Error, Result};
use crate::invariants::{
    solver_invocations, sweep_with, BasisSource, Direct, GradedCommutant, SolverConfig, DEFAULT_BUDGET,
};
use crate::labels::{builtin_ranks, commuting_pairs, functional_rank, label_counts};
use crate::parse::parse_chain_document;
use crate::poly::bidegree_components;

#[derive(Debug, Parser)]
#[command(name = "commutant", version, about = "Exact Poisson commutants of Lie algebra chains")]
pub struct Cli {
    /// Builtin chain name (elliott, seniority, supermultiplet, surfon) or a chain file.
    #[arg(long, global = true)]
    pub chain: Option<String>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "COMMUTANT_THREADS")]
    pub threads: Option<usize>,
    /// Directory for cached invariant bases; caching is off without it.
    #[arg(long, global = true, env = "COMMUTANT_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of monomials of one degree.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    /// Number of common Casimirs.
    #[arg(long, default_value_t = 0)]
    pub l0: u32,
    #[arg(long, default_value_t = 8)]
    pub rank_trials: usize,
    /// Rank of the algebra (known for builtins).
    #[arg(long)]
    pub rank: Option<u32>,
    /// Rank of the subalgebra (known for builtins).
    #[arg(long)]
    pub sub_rank: Option<u32>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Parse the chain and check the Jacobi identity.
    Validate,
    /// Invariant spaces up to a degree.
    Invariants {
        #[arg(long)]
        max_degree: u32,
        /// List the indecomposable generators.
        #[arg(long)]
        indecomposable: bool,
        /// Group basis rows by grading.
        #[arg(long)]
        bidegree: bool,
    },
    /// Generators, central elements and pairwise bracket relations.
    Closure {
        #[arg(long)]
        max_degree: u32,
    },
    /// Label counts, functional rank and commuting pairs.
    Labels {
        #[arg(long, default_value_t = 6)]
        max_degree: u32,
        #[command(flatten)]
        label: LabelArgs,
    },
    /// Everything above, written to a file.
    Report {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_degree: u32,
        #[command(flatten)]
        label: LabelArgs,
    },
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub chain: String,
    pub threads: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    pub budget: usize,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let chain = cli.chain.ok_or_else(|| Error::Usage("--chain is required".into()))?;
        if cli.budget == 0 {
            return Err(Error::Usage("--budget must be at least 1".into()));
        }
        let max_degree = match &cli.command {
            Command::Validate => None,
            Command::Invariants { max_degree, .. }
            | Command::Closure { max_degree }
            | Command::Labels { max_degree, .. }
            | Command::Report { max_degree, .. } => Some(*max_degree),
        };
        if max_degree == Some(0) {
            return Err(Error::Usage("--max-degree must be at least 1".into()));
        }
        Ok(RunConfig {
            command: cli.command,
            chain,
            threads: cli.threads,
            cache_dir: cli.cache_dir,
            seed: cli.seed,
            budget: cli.budget,
        })
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { budget: self.budget }
    }
}

/// Exit status and the report document.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Value,
}

/// Loads a builtin by name, otherwise reads a chain file.
pub fn load_chain(source: &str) -> Result<ChainSpec> {
    if builtin_source(source).is_some() {
        return builtin_chain(source);
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(Error::UnknownChain(source.to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: source.to_string(), source: e })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
    parse_chain_document(&text, name)
}

struct Timer {
    start: Instant,
    phases: Map<String, Value>,
}

impl Timer {
    fn new() -> Self {
        Timer { start: Instant::now(), phases: Map::new() }
    }

    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.phases.insert(name.to_string(), json!(t.elapsed().as_secs_f64() * 1e3));
        out
    }
}

fn chain_summary(chain: &ChainSpec, source: &str) -> Value {
    let report = chain.algebra().validate_structure();
    let g = chain.generators();
    json!({
        "name": chain.name(),
        "source": source,
        "hash": chain.content_hash(),
        "dimension": chain.dim(),
        "generators": g,
        "subalgebra": chain.subalgebra().iter().map(|&k| g[k].clone()).collect::<Vec<_>>(),
        "jacobi": {
            "triples_checked": report.checked,
            "failures": report.failures.iter().map(|f| json!([g[f.triple.0], g[f.triple.1], g[f.triple.2]])).collect::<Vec<_>>(),
        },
    })
}

fn degrees_section(gc: &GradedCommutant) -> Value {
    Value::Array(
        gc.diagnostics
            .iter()
            .map(|(k, d)| {
                json!({
                    "degree": k,
                    "dimension": d.dimension,
                    "decomposable_rank": d.decomposable_rank,
                    "indecomposable_count": d.indecomposable_count,
                })
            })
            .collect(),
    )
}

fn solver_section(gc: &GradedCommutant) -> Value {
    Value::Array(
        gc.diagnostics
            .iter()
            .map(|(k, d)| json!({"degree": k, "columns": d.columns, "blocks": d.blocks, "primes": d.primes, "cached": d.cached}))
            .collect(),
    )
}

fn bases_section(gc: &GradedCommutant, bidegree: bool) -> Value {
    let g = gc.chain.generators();
    let mut out = Map::new();
    for (k, b) in &gc.per_degree {
        let entry = if bidegree {
            let mut groups = Map::new();
            for (grading, idx) in &b.bidegree_split {
                groups
                    .insert(grading.to_string(), json!(idx.iter().map(|&i| b.basis[i].render(g)).collect::<Vec<_>>()));
            }
            json!({"dimension": b.dim(), "by_grading": groups})
        } else {
            json!({"dimension": b.dim(), "basis": b.basis.iter().map(|p| p.render(g)).collect::<Vec<_>>()})
        };
        out.insert(k.to_string(), entry);
    }
    Value::Object(out)
}

fn indecomposables_section(gc: &GradedCommutant) -> Value {
    let g = gc.chain.generators();
    let mut out = Map::new();
    for (k, v) in &gc.indecomposables {
        out.insert(k.to_string(), json!(v.iter().map(|p| p.render(g)).collect::<Vec<_>>()));
    }
    Value::Object(out)
}

fn generators_section(gens: &GeneratorSet, chain: &ChainSpec) -> Result<Value> {
    let casimirs = detect_central(gens, chain);
    let g = chain.generators();
    let list = gens
        .iter()
        .map(|e| {
            Ok(json!({
                "label": e.label,
                "degree": e.degree,
                "central": e.central,
                "casimir": casimirs.contains(&e.label),
                "grading": bidegree_components(&e.poly, chain)?.to_string(),
                "polynomial": e.poly.render(g),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "list": list,
        "central": gens.iter().filter(|e| e.central).map(|e| e.label.clone()).collect::<Vec<_>>(),
        "casimirs": casimirs,
    }))
}

fn closure_section(report: &StructureReport, chain: &ChainSpec) -> Value {
    let gens = &report.generators;
    let g = chain.generators();
    let relations: Vec<Value> = report
        .relations
        .iter()
        .map(|r| {
            json!({
                "left": r.left,
                "right": r.right,
                "degree": r.degree,
                "expansion": r.expansion.iter().rev().map(|(idx, c)| json!([render_multi_index(idx, gens), c.to_string()])).collect::<Vec<_>>(),
                "residual": r.residual.render(g),
                "closes": r.closes(),
                "noncentral_degree": r.noncentral_degree(gens),
            })
        })
        .collect();
    let mut syz = Map::new();
    for (k, v) in &report.syzygies {
        syz.insert(k.to_string(), json!(v.iter().map(|s| s.render(gens)).collect::<Vec<_>>()));
    }
    json!({
        "relations": relations,
        "non_closing": report.non_closing.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
        "missing_generator_candidates": report.candidates.iter().map(|(a, b, p)| json!({"left": a, "right": b, "residual": p.render(g)})).collect::<Vec<_>>(),
        "syzygies": syz,
    })
}

fn labels_section(chain: &ChainSpec, gens: &GeneratorSet, args: &LabelArgs, seed: u64) -> Result<Value> {
    let known = builtin_ranks(chain.name());
    let rank = args.rank.or(known.map(|r| r.0));
    let sub_rank = args.sub_rank.or(known.map(|r| r.1));
    let (Some(rank), Some(sub_rank)) = (rank, sub_rank) else {
        return Err(Error::Usage("--rank and --sub-rank are required for this chain".into()));
    };
    let counts = label_counts(chain, (rank, sub_rank), args.l0)?;
    let polys: Vec<_> = gens.iter().map(|e| e.poly.clone()).collect();
    let frank = functional_rank(&polys, args.rank_trials, seed)?;
    Ok(json!({
        "counts": counts,
        "rho0_reading": "rho0 = (dim g' + l')/2 - l0",
        "functional_rank": {"value": frank, "trials": args.rank_trials, "seed": seed, "of": gens.labels()},
        "commuting_pairs": commuting_pairs(gens, chain).into_iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
    }))
}

fn error_value(e: &Error) -> Value {
    json!({"kind": format!("{:?}", e.kind()).to_lowercase(), "exit_code": e.kind().exit_code(), "message": e.to_string()})
}

/// Runs a command. Errors become a nonzero exit status and an `error`
/// section; a failed sweep also reports the degrees it finished.
pub fn execute(config: &RunConfig) -> Outcome {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let err = Error::Internal(format!("thread pool: {e}"));
            return Outcome {
                exit_code: err.kind().exit_code(),
                report: json!({"status": "error", "error": error_value(&err)}),
            };
        }
    };
    pool.install(|| run(config))
}

fn run(config: &RunConfig) -> Outcome {
    let mut timer = Timer::new();
    let mut doc = Map::new();
    doc.insert("tool".into(), json!({"name": "commutant", "version": env!("CARGO_PKG_VERSION")}));
    doc.insert("seed".into(), json!(config.seed));
    doc.insert("budget".into(), json!(config.budget));
    let cache = match config.cache_dir.as_ref().map(Cache::open).transpose() {
        Ok(c) => c,
        Err(e) => return finish(doc, timer, None, Err(e)),
    };
    let result = pipeline(config, &mut doc, &mut timer, cache.as_ref());
    finish(doc, timer, cache.as_ref(), result)
}

fn finish(mut doc: Map<String, Value>, timer: Timer, cache: Option<&Cache>, result: Result<()>) -> Outcome {
    let mut run = Map::new();
    run.insert("nondeterministic".into(), json!(true));
    run.insert("total_ms".into(), json!(timer.start.elapsed().as_secs_f64() * 1e3));
    run.insert("phases_ms".into(), Value::Object(timer.phases));
    run.insert("solver_invocations".into(), json!(solver_invocations()));
    if let Some(c) = cache {
        run.insert(
            "cache".into(),
            json!({"dir": c.dir().display().to_string(), "hits": c.hits(), "misses": c.misses()}),
        );
    }
    doc.insert("timing".into(), Value::Object(run));
    let exit_code = match result {
        Ok(()) => {
            doc.insert("status".into(), json!("ok"));
            0
        }
        Err(e) => {
            doc.insert("status".into(), json!("error"));
            if let Error::PartialSweep { partial, .. } = &e {
                doc.insert("partial_degrees".into(), degrees_section(partial));
            }
            doc.insert("error".into(), error_value(&e));
            e.kind().exit_code()
        }
    };
    Outcome { exit_code, report: Value::Object(doc) }
}

fn pipeline(config: &RunConfig, doc: &mut Map<String, Value>, timer: &mut Timer, cache: Option<&Cache>) -> Result<()> {
    let chain = timer.time("load", || load_chain(&config.chain))?;
    doc.insert("chain".into(), chain_summary(&chain, &config.chain));
    let cfg = config.solver();
    let source: &dyn BasisSource = match cache {
        Some(c) => c,
        None => &Direct,
    };
    let sweep = |doc: &mut Map<String, Value>, timer: &mut Timer, zeta: u32| -> Result<GradedCommutant> {
        doc.insert("max_degree".into(), json!(zeta));
        let gc = timer.time("sweep", || sweep_with(&chain, zeta, &cfg, source))?;
        doc.insert("degrees".into(), degrees_section(&gc));
        doc.insert("solver".into(), solver_section(&gc));
        Ok(gc)
    };
    match &config.command {
        Command::Validate => {
            doc.insert("command".into(), json!("validate"));
            if !chain.algebra().validate_structure().passed() {
                return Err(Error::Internal("validated chain fails Jacobi".into()));
            }
        }
        Command::Invariants { max_degree, indecomposable, bidegree } => {
            doc.insert("command".into(), json!("invariants"));
            let gc = sweep(doc, timer, *max_degree)?;
            doc.insert("bases".into(), bases_section(&gc, *bidegree));
            if *indecomposable {
                doc.insert("indecomposables".into(), indecomposables_section(&gc));
            }
        }
        Command::Closure { max_degree } => {
            doc.insert("command".into(), json!("closure"));
            let gc = sweep(doc, timer, *max_degree)?;
            let gens = timer.time("generators", || GeneratorSet::adapted(&gc))?;
            doc.insert("generators".into(), generators_section(&gens, &chain)?);
            let table = timer.time("closure", || closure_table_with(&gens, &chain, &cfg))?;
            doc.insert("closure".into(), closure_section(&table, &chain));
        }
        Command::Labels { max_degree, label } => {
            doc.insert("command".into(), json!("labels"));
            let gc = sweep(doc, timer, *max_degree)?;
            let gens = timer.time("generators", || GeneratorSet::adapted(&gc))?;
            doc.insert("generators".into(), generators_section(&gens, &chain)?);
            let l = timer.time("labels", || labels_section(&chain, &gens, label, config.seed))?;
            doc.insert("labels".into(), l);
        }
        Command::Report { output, max_degree, label } => {
            doc.insert("command".into(), json!("report"));
            let gc = sweep(doc, timer, *max_degree)?;
            doc.insert("bases".into(), bases_section(&gc, true));
            doc.insert("indecomposables".into(), indecomposables_section(&gc));
            let gens = timer.time("generators", || GeneratorSet::adapted(&gc))?;
            doc.insert("generators".into(), generators_section(&gens, &chain)?);
            let closure = timer.time("closure", || closure_table_with(&gens, &chain, &cfg));
            match closure {
                Ok(table) => {
                    doc.insert("closure".into(), closure_section(&table, &chain));
                }
                // the rest of the report is still meaningful
                Err(e @ Error::Resource { .. }) => {
                    doc.insert("closure".into(), json!({"error": error_value(&e)}));
                }
                Err(e) => return Err(e),
            }
            let l = timer.time("labels", || labels_section(&chain, &gens, label, config.seed))?;
            doc.insert("labels".into(), l);
            let text =
                serde_json::to_string_pretty(&deterministic_view(doc)).map_err(|e| Error::Internal(e.to_string()))?;
            std::fs::write(output, text + "\n")
                .map_err(|e| Error::Io { path: output.display().to_string(), source: e })?;
            doc.insert("output".into(), json!(output.display().to_string()));
        }
    }
    Ok(())
}

/// The report without its nondeterministic parts.
pub fn deterministic_view(doc: &Map<String, Value>) -> Value {
    let mut d = doc.clone();
    d.remove("timing");
    d.remove("solver");
    Value::Object(d)
}

/// Parses arguments, runs, prints the report and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.kind().exit_code();
        }
    };
    let outcome = execute(&config);
    if let Some(err) = outcome.report.get("error") {
        eprintln!("error: {}", err["message"].as_str().unwrap_or("unknown"));
    }
    match serde_json::to_string_pretty(&outcome.report) {
        Ok(s) => println!("{s}"),
        Err(e) => {
            eprintln!("error: {e}");
            return 5;
        }
    }
    outcome.exit_code
}
