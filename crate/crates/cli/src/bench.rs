use std::io::Write;
use std::time::Instant;

use causalq::data::{AttrId, DataView, Dataset};
use causalq::indep::{mit_test, shuffle_test, TestConfig, TestMethod};
use causalq::synth::{recovery_benchmark, RandomDagConfig, RecoveryBenchConfig};
use clap::{Args, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{parse_method, CliError, OutputArgs};

#[derive(Args)]
pub struct BenchArgs {
    #[command(subcommand)]
    kind: BenchKind,
}

#[derive(Subcommand)]
enum BenchKind {
    /// Parent-recovery F1 and test counts on random binary DAGs.
    Recovery(RecoveryArgs),
    /// MIT against the row-shuffling baseline at equal permutations.
    Timing(TimingArgs),
}

#[derive(Args)]
struct RecoveryArgs {
    #[arg(long, value_delimiter = ',', default_value = "8")]
    nodes: Vec<usize>,
    /// Expected edges per DAG; one sweep point per value.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    total_edges: Vec<f64>,
    #[arg(long, default_value_t = 50_000)]
    rows: usize,
    /// Scored DAGs per sweep point.
    #[arg(long, default_value_t = 10)]
    dags: usize,
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
    #[arg(long, default_value = "hymit", value_parser = parse_method)]
    method: TestMethod,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// First DAG seed.
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long, default_value_t = 50_000)]
    rows: usize,
    /// Values of the conditioning attribute.
    #[arg(long, default_value_t = 4)]
    groups: u32,
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

pub fn run(a: &BenchArgs) -> Result<(), CliError> {
    match &a.kind {
        BenchKind::Recovery(r) => recovery(r),
        BenchKind::Timing(t) => timing(t),
    }
}

fn recovery(a: &RecoveryArgs) -> Result<(), CliError> {
    let mut w = a.out.writer()?;
    writeln!(w, "nodes,total_edges,edge_prob,rows,dags,concentration,method,alpha,metric,value")?;
    for &nodes in &a.nodes {
        for &edges in &a.total_edges {
            let edge_prob = RandomDagConfig::total_edges(nodes, edges);
            let cfg = RecoveryBenchConfig {
                dag: RandomDagConfig { nodes, edge_prob, min_categories: 2, max_categories: 2, concentration: a.concentration },
                rows: a.rows,
                dags: a.dags,
                first_seed: a.seed,
                test: TestConfig { method: a.method, alpha: a.alpha, ..Default::default() },
                ..Default::default()
            };
            let b = recovery_benchmark(&cfg)?;
            let prefix =
                format!("{nodes},{edges},{edge_prob:.6},{},{},{},{:?},{}", a.rows, a.dags, a.concentration, a.method, a.alpha);
            let metrics = [
                ("mean_f1", b.mean_f1()),
                ("min_f1", b.min_f1()),
                ("oracle_mean_f1", b.mean_oracle_f1()),
                ("cd_tests_per_node", b.cd_tests_per_node()),
                ("fgs_tests_per_dag", b.fgs_tests_per_dag()),
                ("cd_tests_amortized", b.cd_tests_amortized()),
                ("fgs_tests_amortized", b.fgs_tests_amortized()),
                ("seeds_scanned", b.seeds_scanned as f64),
            ];
            for (name, value) in metrics {
                writeln!(w, "{prefix},{name},{value:.6}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Binary `T` and `Y` depending on a grouping attribute only.
fn grouped_independent(rows: usize, groups: u32, seed: u64) -> causalq::Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates: Vec<(f64, f64)> = (0..groups).map(|_| (rng.random_range(0.1..0.9), rng.random_range(0.1..0.9))).collect();
    let mut cols = (0..3).map(|_| Vec::with_capacity(rows)).collect::<Vec<_>>();
    for _ in 0..rows {
        let z = rng.random_range(0..groups);
        let (pt, py) = rates[z as usize];
        cols[0].push(u32::from(rng.random_bool(pt)));
        cols[1].push(u32::from(rng.random_bool(py)));
        cols[2].push(z);
    }
    let names: Vec<String> = ["T", "Y", "Z"].iter().map(|s| s.to_string()).collect();
    Dataset::from_codes(&names, cols, &[2, 2, groups])
}

/// Wall-clock columns differ between runs; the p-value rows do not.
fn timing(a: &TimingArgs) -> Result<(), CliError> {
    let ds = grouped_independent(a.rows, a.groups, a.seed)?;
    let view = DataView::all(&ds);
    let cfg = TestConfig { permutations: a.permutations, seed: a.seed, method: TestMethod::Mit, ..Default::default() };
    cfg.validate()?;
    let (x, y, z) = ([AttrId(0)], [AttrId(1)], [AttrId(2)]);
    view.table(&[AttrId(2), AttrId(0), AttrId(1)])?;
    let start = Instant::now();
    let mit = mit_test(&view, &x, &y, &z, &cfg)?;
    let mit_ms = start.elapsed().as_secs_f64() * 1e3;
    let start = Instant::now();
    let shuffle = shuffle_test(&view, &x, &y, &z, &cfg)?;
    let shuffle_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut w = a.out.writer()?;
    writeln!(w, "rows,groups,permutations,metric,value")?;
    let prefix = format!("{},{},{}", a.rows, a.groups, a.permutations);
    for (name, value) in [
        ("mit_p_value", mit.p_value),
        ("shuffle_p_value", shuffle.p_value),
        ("mit_ms", mit_ms),
        ("shuffle_ms", shuffle_ms),
        ("speedup", shuffle_ms / mit_ms),
    ] {
        writeln!(w, "{prefix},{name},{value:.6}")?;
    }
    w.flush()?;
    Ok(())
}
