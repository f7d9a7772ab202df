//! `causalq` command-line front end.

mod bench;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causalq::data::{select, Context, CsvOptions, DataView, Dataset};
use causalq::discovery::{discover, DiscoveryConfig, KeylikeConfig};
use causalq::engine::{analyze, AnalysisConfig, DiscoveryReport, EffectKind, QuerySpec};
use causalq::indep::{GroupSampling, TestConfig, TestMethod, Tester};
use causalq::synth::{random_dag, sample_dataset, RandomDagConfig};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const EXIT_UNDETERMINED: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "causalq", version, about = "Detect, explain and remove confounding bias in group-by-average queries")]
struct Cli {
    /// Worker threads [default: available cores].
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run bias detection, explanation and rewriting for a query.
    Analyze(AnalyzeArgs),
    /// Discover the covariates of a treatment and mediators of outcomes.
    Discover(DiscoverArgs),
    /// Test conditional independence of attribute sets.
    Indep(IndepArgs),
    /// Generate a random DAG and a sample from it.
    Synth(SynthArgs),
    /// Recovery sweep and permutation-test timing, as CSV rows.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Row filter, e.g. "Carrier IN AA|UA, Airport = ROC".
    #[arg(long = "where", default_value = "")]
    context: String,
}

impl DataArgs {
    fn load(&self) -> causalq::Result<(Dataset, Context)> {
        if !self.delimiter.is_ascii() {
            return Err(causalq::Error::InvalidConfig("the delimiter must be an ASCII character".into()));
        }
        let ds = Dataset::load_csv(&self.data, &CsvOptions { delimiter: self.delimiter as u8 })?;
        Ok((ds, Context::parse(&self.context)?))
    }
}

#[derive(Args)]
struct TestArgs {
    /// chi2, mit, hymit or shuffle.
    #[arg(long, default_value = "hymit", value_parser = parse_method)]
    method: TestMethod,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Monte-Carlo samples for permutation tests.
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    /// The hybrid test uses χ² when df <= rows / beta.
    #[arg(long, default_value_t = 5.0)]
    beta: f64,
    /// Sample ceil(C * ln |groups|) conditioning groups inside MIT.
    #[arg(long, value_name = "C")]
    group_sample: Option<f64>,
    #[arg(long)]
    seed: u64,
}

impl TestArgs {
    fn config(&self) -> TestConfig {
        TestConfig {
            alpha: self.alpha,
            permutations: self.permutations,
            beta: self.beta,
            group_sample: self.group_sample.map(|c| GroupSampling { c }),
            seed: self.seed,
            method: self.method,
        }
    }
}

/// `--covariates ""` names the empty set.
fn nonempty(names: &[String]) -> Vec<String> {
    names.iter().filter(|n| !n.trim().is_empty()).cloned().collect()
}

fn parse_method(s: &str) -> Result<TestMethod, String> {
    s.parse().map_err(|e: causalq::Error| e.to_string())
}

fn parse_effect(s: &str) -> Result<EffectKind, String> {
    s.parse().map_err(|e: causalq::Error| e.to_string())
}

#[derive(Args)]
struct DiscoveryArgs {
    /// Largest Markov boundary searched.
    #[arg(long, default_value_t = 8)]
    max_boundary: usize,
    /// Nats below which an attribute counts as determined by the treatment.
    #[arg(long, default_value_t = 0.01)]
    fd_epsilon: f64,
    /// Keep attributes whose entropy grows with sample size.
    #[arg(long)]
    keep_keylike: bool,
}

impl DiscoveryArgs {
    fn config(&self, seed: u64) -> DiscoveryConfig {
        DiscoveryConfig {
            fd_epsilon: self.fd_epsilon,
            keylike: (!self.keep_keylike).then(KeylikeConfig::default),
            max_boundary: self.max_boundary,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl OutputArgs {
    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<(), CliError> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, value).map_err(causalq::Error::from)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    treatment: String,
    #[arg(long)]
    t0: String,
    #[arg(long)]
    t1: String,
    /// 0/1 outcome attribute; repeat or comma-separate for several.
    #[arg(long = "outcome", required = true, value_delimiter = ',')]
    outcomes: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    groupby: Vec<String>,
    /// total or direct.
    #[arg(long, default_value = "total", value_parser = parse_effect)]
    effect: EffectKind,
    /// Adjust for these attributes instead of discovering covariates.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    covariates: Option<Vec<String>>,
    /// Use these mediators for every outcome instead of discovering them.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    mediators: Option<Vec<String>>,
    /// Fine-grained explanations per attribute.
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    /// Table name used in the rewritten SQL.
    #[arg(long, default_value = "D")]
    table: String,
    /// Do not print the summary table to stderr.
    #[arg(long)]
    quiet: bool,
    #[command(flatten)]
    test: TestArgs,
    #[command(flatten)]
    discovery: DiscoveryArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    treatment: String,
    /// Outcomes are excluded from the treatment's parents and get mediators.
    #[arg(long = "outcome", value_delimiter = ',')]
    outcomes: Vec<String>,
    /// Restrict the search to these attributes (treatment and outcomes are
    /// always included).
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<String>>,
    #[command(flatten)]
    test: TestArgs,
    #[command(flatten)]
    discovery: DiscoveryArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct IndepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, required = true, value_delimiter = ',')]
    x: Vec<String>,
    #[arg(long, required = true, value_delimiter = ',')]
    y: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    z: Vec<String>,
    #[command(flatten)]
    test: TestArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    nodes: usize,
    /// Probability of each undirected edge.
    #[arg(long, conflicts_with_all = ["total_edges", "out_degree"])]
    edge_prob: Option<f64>,
    /// Expected number of edges in the whole DAG.
    #[arg(long, conflicts_with = "out_degree")]
    total_edges: Option<f64>,
    /// Expected number of children per node.
    #[arg(long)]
    out_degree: Option<f64>,
    #[arg(long, default_value_t = 2)]
    min_categories: u32,
    #[arg(long, default_value_t = 20)]
    max_categories: u32,
    /// Dirichlet concentration of table rows.
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
    #[arg(long, default_value_t = 10_000)]
    rows: usize,
    #[arg(long)]
    seed: u64,
    /// Also write the DAG with its tables as JSON.
    #[arg(long)]
    dag: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug)]
enum CliError {
    Lib(causalq::Error),
    Io(io::Error),
}

impl From<causalq::Error> for CliError {
    fn from(e: causalq::Error) -> Self {
        Self::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Lib(e) => e.fmt(f),
            Self::Io(e) => e.fmt(f),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.into()).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Discover(a) => cmd_discover(a).map(|()| ExitCode::SUCCESS),
        Command::Indep(a) => cmd_indep(a).map(|()| ExitCode::SUCCESS),
        Command::Synth(a) => cmd_synth(a).map(|()| ExitCode::SUCCESS),
        Command::Bench(a) => bench::run(a).map(|()| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        match e {
            CliError::Lib(causalq::Error::InvalidConfig(_) | causalq::Error::Parse { .. }) => ExitCode::from(EXIT_USAGE),
            _ => ExitCode::FAILURE,
        }
    })
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<ExitCode, CliError> {
    let (ds, context) = a.data.load()?;
    let spec = QuerySpec {
        treatment: a.treatment.clone(),
        t0: a.t0.clone(),
        t1: a.t1.clone(),
        outcomes: a.outcomes.clone(),
        groupby: a.groupby.clone(),
        context,
        effect: a.effect,
    };
    let cfg = AnalysisConfig {
        test: a.test.config(),
        discovery: a.discovery.config(a.test.seed),
        top_k: a.top_k,
        covariates: a.covariates.as_deref().map(nonempty),
        mediators: a.mediators.as_deref().map(nonempty),
        table_name: a.table.clone(),
    };
    let report = analyze(&ds, &spec, &cfg)?;
    a.out.json(&report)?;
    if !a.quiet {
        eprintln!("{}", report.summary_table());
        for c in report.contexts.iter().filter(|c| c.error.is_some()) {
            eprintln!("context {}: {}", c.key.join(","), c.error.as_deref().unwrap_or_default());
        }
    }
    Ok(if report.has_failures() {
        ExitCode::FAILURE
    } else if report.has_undetermined() {
        ExitCode::from(EXIT_UNDETERMINED)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
struct DiscoverOutput {
    treatment: String,
    rows: usize,
    #[serde(flatten)]
    discovery: DiscoveryReport,
}

fn cmd_discover(a: &DiscoverArgs) -> Result<(), CliError> {
    let (ds, context) = a.data.load()?;
    let view = DataView::new(&ds, select(&ds, &context)?);
    let t = ds.attr(&a.treatment)?;
    let outcomes = ds.attrs(&a.outcomes)?;
    let candidates = match &a.candidates {
        Some(c) => {
            let mut ids = ds.attrs(c)?;
            ids.push(t);
            ids.extend(&outcomes);
            ids.sort_unstable();
            ids.dedup();
            Some(ids)
        }
        None => None,
    };
    let tester = Tester::new(a.test.config())?;
    let set = discover(&view, t, &outcomes, candidates.as_deref(), &tester, &a.discovery.config(a.test.seed))?;
    a.out.json(&DiscoverOutput {
        treatment: a.treatment.clone(),
        rows: view.n(),
        discovery: DiscoveryReport::from_set(&ds, &set),
    })
}

#[derive(Serialize)]
struct IndepOutput<'a> {
    x: &'a [String],
    y: &'a [String],
    z: &'a [String],
    rows: usize,
    alpha: f64,
    independent: bool,
    result: causalq::indep::TestResult,
}

fn cmd_indep(a: &IndepArgs) -> Result<(), CliError> {
    let (ds, context) = a.data.load()?;
    let view = DataView::new(&ds, select(&ds, &context)?);
    let cfg = a.test.config();
    cfg.validate()?;
    let result = causalq::indep::run_test(&view, &ds.attrs(&a.x)?, &ds.attrs(&a.y)?, &ds.attrs(&a.z)?, &cfg)?;
    a.out.json(&IndepOutput {
        x: &a.x,
        y: &a.y,
        z: &a.z,
        rows: view.n(),
        alpha: cfg.alpha,
        independent: result.independent(cfg.alpha),
        result,
    })
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let edge_prob = match (a.edge_prob, a.total_edges, a.out_degree) {
        (Some(p), _, _) => p,
        (_, Some(e), _) => RandomDagConfig::total_edges(a.nodes, e),
        (_, _, Some(d)) => RandomDagConfig::mean_out_degree(a.nodes, d),
        _ => RandomDagConfig::default().edge_prob,
    };
    let cfg = RandomDagConfig {
        nodes: a.nodes,
        edge_prob,
        min_categories: a.min_categories,
        max_categories: a.max_categories,
        concentration: a.concentration,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let dag = random_dag(&cfg, &mut rng)?;
    let ds = sample_dataset(&dag, a.rows, &mut rng)?;
    if let Some(path) = &a.dag {
        write_json_file(path, &dag)?;
    }
    let mut w = a.out.writer()?;
    ds.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(causalq::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
