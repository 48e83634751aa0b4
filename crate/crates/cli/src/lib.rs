//! The `sumcard` command line: build summaries, estimate query cardinalities,
//! count exactly, benchmark, and check the q-error bound empirically.

pub mod bench;
pub mod config;
pub mod error;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::num::NonZeroU32;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use rand::SeedableRng;

use sumcard::estimator::{Estimator, EstimatorConfig};
use sumcard::oracle::sample_world;
use sumcard::query::{cardinality, qerror, Query};
use sumcard::rdf::{parse_ntriples, Node, RdfGraph};
use sumcard::summarizer::{
    summarize, BucketCount, Direction, FilePartition, HistogramSpec, LabelPropagation,
    Partitioner, RefineConfig, SinglePartition, SummarizeOutcome, SummarizerConfig,
};
use sumcard::summary::Summary;

pub use bench::{run_bench, BenchOptions, BenchReport, BenchRow};
pub use config::Settings;
pub use error::{CliError, ExitCode};

#[derive(Debug, Parser)]
#[command(name = "sumcard", version, about = "Cardinality estimation over RDF graph summaries")]
pub struct Cli {
    /// Settings file with `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomised step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a summary of an N-Triples file.
    Summarize(SummarizeArgs),
    /// Estimate the cardinality of a query from a summary.
    Estimate(EstimateArgs),
    /// Count the answers of a query on an N-Triples file.
    Exact(ExactArgs),
    /// Compare estimates with exact counts for a directory of queries.
    Bench(BenchArgs),
    /// Check the q-error bound against sampled possible worlds.
    ValidateBound(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write the summary; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Target number of summary triples.
    #[arg(long)]
    pub target: Option<usize>,
    /// MinHash scheme size as `m,n`.
    #[arg(long)]
    pub minhash: Option<String>,
    /// single, label-propagation or file.
    #[arg(long)]
    pub partitioner: Option<String>,
    #[arg(long)]
    pub partitions: Option<u32>,
    /// `<resource>\t<partition-id>` lines; implies `--partitioner file`.
    #[arg(long)]
    pub partition_file: Option<PathBuf>,
    /// Histogram buckets per predicate and direction, or `auto`.
    #[arg(long)]
    pub histogram_buckets: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct CapArgs {
    #[arg(long)]
    pub answer_cap: Option<u64>,
    #[arg(long)]
    pub atom_cap: Option<usize>,
    #[arg(long)]
    pub partition_cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub summary: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
    /// Also report the variance.
    #[arg(long)]
    pub variance: bool,
    /// Report the bound on P(q-error ≥ ε) for this ε.
    #[arg(long, value_name = "EPS")]
    pub bound: Option<f64>,
    /// Compute in exact rational arithmetic.
    #[arg(long)]
    pub exact_mode: bool,
    #[command(flatten)]
    pub caps: CapArgs,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub summary: PathBuf,
    /// Directory of `.cq` files; the file stem is the query id.
    #[arg(long)]
    pub queries_dir: PathBuf,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write q-error histogram counts here.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    /// Add wall-clock columns (makes output run dependent).
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub exact_mode: bool,
    #[command(flatten)]
    pub caps: CapArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub summary: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
    /// ε, which must exceed 1.
    #[arg(long, value_name = "EPS")]
    pub bound: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[command(flatten)]
    pub caps: CapArgs,
}

pub fn read_graph(path: &Path) -> Result<RdfGraph, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_ntriples(BufReader::new(file)).map_err(|e| CliError::rdf(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Summary::load(BufReader::new(file)).map_err(|e| CliError::summary(path, e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_query(path: &Path, dictionary: &sumcard::rdf::Dictionary) -> Result<Query, CliError> {
    Query::parse(&read_text(path)?, dictionary).map_err(|e| CliError::syntax(path, e))
}

/// `.cq` files of a directory, sorted by id.
pub fn read_queries_dir(dir: &Path) -> Result<Vec<(String, String)>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("cq") {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        out.push((id, read_text(&path)?));
    }
    out.sort();
    Ok(out)
}

fn write_output(path: Option<&Path>, out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?);
            f.write_all(bytes).map_err(|e| CliError::io(p, e))?;
            f.flush().map_err(|e| CliError::io(p, e))
        }
        None => out
            .write_all(bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

/// Fixed-point with trailing zeros trimmed: 3.5, 3.3333, 12.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn estimator_config(settings: &Settings, caps: &CapArgs) -> EstimatorConfig {
    let mut c = EstimatorConfig::default();
    if let Some(v) = caps.answer_cap.or(settings.answer_cap) {
        c.answer_cap = v;
    }
    if let Some(v) = caps.atom_cap.or(settings.atom_cap) {
        c.atom_cap = v;
    }
    if let Some(v) = caps.partition_cap.or(settings.partition_cap) {
        c.partition_cap = v;
    }
    c
}

fn bucket_count(text: &str) -> Result<BucketCount, CliError> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(BucketCount::FreedmanDiaconis);
    }
    text.parse::<u32>()
        .ok()
        .and_then(NonZeroU32::new)
        .map(BucketCount::Fixed)
        .ok_or_else(|| CliError::Usage(format!("histogram buckets must be a positive integer or auto, got {text:?}")))
}

fn setting_count(s: &config::BucketSetting) -> Result<BucketCount, CliError> {
    match s {
        config::BucketSetting::Count(n) => bucket_count(&n.to_string()),
        config::BucketSetting::Auto(t) => bucket_count(t),
    }
}

fn histogram_spec(
    g: &RdfGraph,
    settings: &Settings,
    flag: Option<&str>,
) -> Result<HistogramSpec, CliError> {
    let mut spec = HistogramSpec::default();
    if let Some(s) = &settings.histogram_buckets {
        spec.default = setting_count(s)?;
    }
    if let Some(f) = flag {
        spec.default = bucket_count(f)?;
    }
    for o in &settings.histogram {
        let direction = match o.direction.as_str() {
            "out" | "outgoing" => Direction::Outgoing,
            "in" | "incoming" => Direction::Incoming,
            other => return Err(CliError::Usage(format!("histogram direction must be in or out, got {other:?}"))),
        };
        // predicates absent from the graph have no histogram to configure
        if let Some(p) = g.dictionary().lookup(&Node::iri(o.predicate.as_str())) {
            spec.overrides.insert((p, direction), setting_count(&o.buckets)?);
        }
    }
    Ok(spec)
}

fn partitioner(
    settings: &Settings,
    args: &SummarizeArgs,
    seed: u64,
) -> Result<Box<dyn Partitioner>, CliError> {
    let file = args.partition_file.clone().or(settings.partition_file.clone());
    let name = args
        .partitioner
        .clone()
        .or(settings.partitioner.clone())
        .unwrap_or_else(|| if file.is_some() { "file".into() } else { "single".into() });
    let partitions = args.partitions.or(settings.partitions).unwrap_or(10);
    match name.as_str() {
        "single" => Ok(Box::new(SinglePartition)),
        "label-propagation" => Ok(Box::new(LabelPropagation::new(partitions, seed))),
        "file" => {
            let path = file.ok_or_else(|| CliError::Usage("--partitioner file needs --partition-file".into()))?;
            let f = File::open(&path).map_err(|e| CliError::io(&path, e))?;
            Ok(Box::new(FilePartition::load(BufReader::new(f))?))
        }
        other => Err(CliError::Usage(format!(
            "unknown partitioner {other:?} (single, label-propagation, file)"
        ))),
    }
}

/// The settings-and-flags resolution behind `summarize`.
pub fn summarizer_config(
    g: &RdfGraph,
    settings: &Settings,
    args: &SummarizeArgs,
    seed: u64,
) -> Result<SummarizerConfig, CliError> {
    let (m, n) = match args.minhash.as_deref().or(settings.minhash.as_deref()) {
        Some(text) => config::parse_minhash(text)?,
        None => (20, 2),
    };
    let target = args.target.or(settings.target).unwrap_or(30_000);
    if target == 0 {
        return Err(CliError::Usage("--target must be at least 1".into()));
    }
    Ok(SummarizerConfig {
        histogram: histogram_spec(g, settings, args.histogram_buckets.as_deref())?,
        refine: RefineConfig { m, n, target, seed },
    })
}

/// Runs one command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let seed = cli.seed.or(settings.seed).unwrap_or(0);
    match &cli.command {
        Command::Summarize(args) => cmd_summarize(&settings, args, seed, out),
        Command::Estimate(args) => cmd_estimate(&settings, args, out),
        Command::Exact(args) => cmd_exact(args, out),
        Command::Bench(args) => cmd_bench(&settings, args, out),
        Command::ValidateBound(args) => cmd_validate(&settings, args, seed, out),
    }
}

pub fn build_summary(
    g: &RdfGraph,
    settings: &Settings,
    args: &SummarizeArgs,
    seed: u64,
) -> Result<SummarizeOutcome, CliError> {
    let config = summarizer_config(g, settings, args, seed)?;
    let partitioner = partitioner(settings, args, seed)?;
    Ok(summarize(g, partitioner.as_ref(), &config)?)
}

fn cmd_summarize(
    settings: &Settings,
    args: &SummarizeArgs,
    seed: u64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let g = read_graph(&args.input)?;
    let outcome = build_summary(&g, settings, args, seed)?;
    let s = &outcome.summary;
    let text = s.to_sumrdf();
    let reduction = if s.is_empty() {
        0.0
    } else {
        g.len() as f64 / s.len() as f64
    };
    let mut report = format!(
        "triples={} summary={} reduction={:.1} typed={} achieved={} seed={seed}",
        g.len(),
        s.len(),
        reduction,
        outcome.typed_size,
        outcome.achieved(),
    );
    if outcome.partition_fallback {
        report.push_str(" partition=fallback-single");
    }
    if let Some(r) = &outcome.refinement {
        report.push_str(&format!(" iterations={}", r.iterations.len() - 1));
    }
    report.push('\n');
    match &args.output {
        Some(path) => {
            write_output(Some(path), out, text.as_bytes())?;
            out.write_all(report.as_bytes()).map_err(stdout_err)
        }
        None => {
            write_output(None, out, text.as_bytes())?;
            // keep stdout a valid summary file; the report goes to stderr
            eprint!("{report}");
            Ok(())
        }
    }
}

fn cmd_estimate(settings: &Settings, args: &EstimateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(eps) = args.bound {
        if !(eps > 1.0) {
            return Err(CliError::Usage(format!("--bound expects ε > 1, got {eps}")));
        }
    }
    let s = read_summary(&args.summary)?;
    let q = read_query(&args.query, s.dictionary())?;
    let est = Estimator::new(&s, estimator_config(settings, &args.caps))?;
    let need_variance = args.variance || args.bound.is_some();
    let mut line;
    if args.exact_mode {
        let e = est.expectation::<BigRational>(&q)?;
        line = format!(
            "E={} path={} answers_over_h={}",
            e.expectation, e.path, e.answers_over_h
        );
        if need_variance {
            let var: BigRational = est.variance(&q)?;
            if args.variance {
                line.push_str(&format!(" Var={var}"));
            }
            if let Some(eps) = args.bound {
                let eps_q = BigRational::from_float(eps)
                    .ok_or_else(|| CliError::Usage(format!("invalid ε {eps}")))?;
                let b = sumcard::estimator::qerror_bound_exact(&e.expectation, &var, &eps_q)?;
                line.push_str(&format!(" bound={b}"));
            }
        }
    } else {
        let e = est.expectation::<f64>(&q)?;
        line = format!(
            "E={} path={} answers_over_h={}",
            format_number(e.expectation),
            e.path,
            e.answers_over_h
        );
        if need_variance {
            let var: f64 = est.variance(&q)?;
            if args.variance {
                line.push_str(&format!(" Var={} D={}", format_number(var), format_number(var.sqrt())));
            }
            if let Some(eps) = args.bound {
                let b = sumcard::estimator::qerror_bound(e.expectation, var, eps)?;
                line.push_str(&format!(" bound={}", format_number(b)));
            }
        }
    }
    writeln!(out, "{line}").map_err(stdout_err)
}

fn cmd_exact(args: &ExactArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = read_graph(&args.input)?;
    let q = read_query(&args.query, g.dictionary())?;
    writeln!(out, "{}", cardinality(&q, g.triples())).map_err(stdout_err)
}

fn cmd_bench(settings: &Settings, args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = read_graph(&args.input)?;
    let s = read_summary(&args.summary)?;
    let queries = read_queries_dir(&args.queries_dir)?;
    let options = BenchOptions {
        estimator: estimator_config(settings, &args.caps),
        exact_mode: args.exact_mode,
        timings: args.timings,
    };
    let report = run_bench(&g, &s, &queries, &options)?;
    write_output(args.output.as_deref(), out, report.to_csv().as_bytes())?;
    if let Some(p) = &args.plot_data {
        write_output(Some(p), out, report.plot_data().as_bytes())?;
    }
    Ok(())
}

/// Outcome of a Monte-Carlo bound check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub expectation: f64,
    pub bound: f64,
    pub empirical: f64,
    pub slack: f64,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.empirical <= self.bound + self.slack
    }
}

/// Samples worlds of `s` and compares the share with q-error ≥ ε against the
/// bound, allowing three binomial standard deviations of sampling noise.
pub fn validate_bound(
    s: &Summary,
    q: &Query,
    eps: f64,
    samples: usize,
    seed: u64,
    config: EstimatorConfig,
) -> Result<Validation, CliError> {
    if !(eps > 1.0) {
        return Err(CliError::Usage(format!("--bound expects ε > 1, got {eps}")));
    }
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let est = Estimator::new(s, config)?;
    let e = est.expectation::<f64>(q)?.expectation;
    let var: f64 = est.variance(q)?;
    let bound = sumcard::estimator::qerror_bound(e, var, eps)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let world = sample_world(s, &mut rng)?;
        if qerror(cardinality(q, &world), e) >= eps {
            hits += 1;
        }
    }
    Ok(Validation {
        expectation: e,
        bound,
        empirical: hits as f64 / samples as f64,
        slack: 3.0 * (bound * (1.0 - bound) / samples as f64).sqrt(),
    })
}

fn cmd_validate(
    settings: &Settings,
    args: &ValidateArgs,
    seed: u64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let s = read_summary(&args.summary)?;
    let q = read_query(&args.query, s.dictionary())?;
    let v = validate_bound(&s, &q, args.bound, args.samples, seed, estimator_config(settings, &args.caps))?;
    let line = format!(
        "E={} eps={} bound={} empirical={} slack={} samples={} seed={seed} result={}",
        format_number(v.expectation),
        args.bound,
        format_number(v.bound),
        format_number(v.empirical),
        format_number(v.slack),
        args.samples,
        if v.passed() { "pass" } else { "fail" }
    );
    writeln!(out, "{line}").map_err(stdout_err)?;
    if v.passed() {
        Ok(())
    } else {
        Err(CliError::ValidationFailed(line))
    }
}

/// Maps the outcome of [`run`] to a process exit status, reporting errors
/// on stderr.
pub fn exit_status(result: Result<(), CliError>) -> i32 {
    match result {
        Ok(()) => ExitCode::Ok as i32,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as i32
        }
    }
}
