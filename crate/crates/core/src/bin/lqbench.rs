use std::path::PathBuf;
use std::process::ExitCode;

use brunovsky_riccati::bench::{parse_range, run_benchmark, BenchConfig};
use brunovsky_riccati::{load_problem, Method};
use clap::Parser;

/// Times the classical and Brunovsky Riccati recursions over a sweep of
/// state dimensions and writes one CSV row per (method, n_x) cell.
#[derive(Parser, Debug)]
#[command(name = "lqbench", version)]
struct Args {
    /// Comma-separated state dimensions, e.g. 10,20,40.
    #[arg(long, value_delimiter = ',', conflicts_with = "nx_range")]
    nx_list: Option<Vec<usize>>,
    /// Inclusive range start:stop:step, e.g. 10:200:10.
    #[arg(long, value_parser = |s: &str| parse_range(s).map(NxRange))]
    nx_range: Option<NxRange>,
    #[arg(long, default_value_t = 10)]
    nu: usize,
    #[arg(long, default_value_t = 50)]
    horizon: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Thread budget for the stage-parallel phases (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "classical,brunovsky")]
    methods: Vec<Method>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Benchmark a stored problem file instead of random instances.
    #[arg(long, conflicts_with_all = ["nx_list", "nx_range"])]
    problem: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct NxRange(Vec<usize>);

fn main() -> ExitCode {
    let args = Args::parse();
    let problem = match args.problem.as_ref().map(load_problem).transpose() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("lqbench: {e}");
            return ExitCode::from(2);
        }
    };
    let mut cfg = BenchConfig {
        nu: args.nu,
        horizon: args.horizon,
        reps: args.reps,
        seed: args.seed,
        out: args.out.clone(),
        methods: args.methods,
        problem,
        ..BenchConfig::default()
    };
    if let Some(list) = args.nx_list.or(args.nx_range.map(|r| r.0)) {
        cfg.nx_list = list;
    }
    if let Some(t) = args.threads {
        cfg.thread_budget = t;
    }

    let table = match run_benchmark(&cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("lqbench: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.out.is_none() {
        if let Err(e) = table.write_csv(std::io::stdout().lock()) {
            eprintln!("lqbench: {e}");
            return ExitCode::from(2);
        }
    }
    for r in table.rows.iter().filter(|r| r.failed()) {
        eprintln!("lqbench: {} n_x={}: {}", r.method, r.nx, r.error);
    }
    if table.has_errors() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
