//! Timing sweep over state dimensions, written as CSV.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::error::{LqError, Result};
use crate::lqocp::{random_problem, LqOcpProblem, Trajectory};
use crate::solver::{solve, Method, PhaseTimings, SolveOptions};

/// Relative agreement required between the two methods within a cell.
pub const AGREEMENT_TOL: f64 = 1e-6;

pub const CSV_COLUMNS: [&str; 14] = [
    "method",
    "nx",
    "nu",
    "N",
    "reps",
    "mean_s",
    "min_s",
    "std_s",
    "t_decompose_s",
    "t_transform_s",
    "t_riccati_s",
    "t_recover_s",
    "max_rel_err",
    "error",
];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub nx_list: Vec<usize>,
    pub nu: usize,
    pub horizon: usize,
    pub reps: usize,
    pub seed: u64,
    pub thread_budget: usize,
    pub out: Option<PathBuf>,
    pub methods: Vec<Method>,
    /// Benchmark this problem instead of random instances.
    pub problem: Option<LqOcpProblem>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            nx_list: (1..=20).map(|k| 10 * k).collect(),
            nu: 10,
            horizon: 50,
            reps: 100,
            seed: 0,
            thread_budget: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: None,
            methods: Method::ALL.to_vec(),
            problem: None,
        }
    }
}

impl BenchConfig {
    pub fn check(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(LqError::Invalid("reps must be at least 1".into()));
        }
        if self.thread_budget == 0 {
            return Err(LqError::Invalid("thread budget must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(LqError::Invalid("no methods selected".into()));
        }
        if self.problem.is_none() {
            if self.nx_list.is_empty() {
                return Err(LqError::Invalid("empty n_x list".into()));
            }
            if let Some(&bad) = self.nx_list.iter().find(|&&nx| nx < self.nu) {
                return Err(LqError::Invalid(format!("n_x = {bad} is below n_u = {}", self.nu)));
            }
            if self.nu == 0 || self.horizon == 0 {
                return Err(LqError::Invalid("n_u and N must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BenchRow {
    pub method: String,
    pub nx: usize,
    pub nu: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    pub reps: usize,
    pub mean_s: Option<f64>,
    pub min_s: Option<f64>,
    pub std_s: Option<f64>,
    pub t_decompose_s: Option<f64>,
    pub t_transform_s: Option<f64>,
    pub t_riccati_s: Option<f64>,
    pub t_recover_s: Option<f64>,
    pub max_rel_err: Option<f64>,
    pub error: String,
}

impl BenchRow {
    pub fn failed(&self) -> bool {
        !self.error.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(BenchRow::failed)
    }

    pub fn row(&self, method: Method, nx: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.method == method.name() && r.nx == nx)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| LqError::Invalid(format!("csv: {e}"));
        let mut wr = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            wr.write_record(CSV_COLUMNS).map_err(io)?;
        }
        for r in &self.rows {
            wr.serialize(r).map_err(io)?;
        }
        wr.flush().map_err(|e| LqError::Invalid(format!("csv: {e}")))?;
        Ok(())
    }

    /// Crossover analysis of the mean times.
    pub fn crossover(&self) -> Crossover {
        let mut points = Vec::new();
        for r in self.rows.iter().filter(|r| r.method == Method::Classical.name()) {
            if let (Some(c), Some(b)) = (r.mean_s, self.row(Method::Brunovsky, r.nx).and_then(|b| b.mean_s)) {
                points.push((r.nx, c / b));
            }
        }
        points.sort_by_key(|p| p.0);
        let mut nx_star = None;
        for i in (0..points.len()).rev() {
            if points[i].1 > 1.0 {
                nx_star = Some(points[i].0);
            } else {
                break;
            }
        }
        let upper = &points[points.len() / 2..];
        let ratio_nondecreasing_upper_half = upper.windows(2).all(|w| w[1].1 >= w[0].1);
        Crossover {
            ratios: points,
            nx_star,
            ratio_nondecreasing_upper_half,
        }
    }
}

/// Speed ratio classical/brunovsky per swept `n_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub ratios: Vec<(usize, f64)>,
    /// Smallest swept `n_x` from which brunovsky is faster at every larger size.
    pub nx_star: Option<usize>,
    pub ratio_nondecreasing_upper_half: bool,
}

/// Seed of repetition `rep` in the cell for `nx`.
pub fn cell_seed(seed: u64, nx: usize, rep: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((nx as u64) << 32)
        .wrapping_add(rep as u64)
}

struct CellRun {
    times: Vec<f64>,
    phases: PhaseTimings,
    trajectories: Vec<Trajectory>,
}

fn run_cell(problems: &[LqOcpProblem], method: Method, threads: usize) -> Result<CellRun> {
    let opts = SolveOptions {
        method,
        thread_budget: threads,
        collect_timings: true,
        ..SolveOptions::default()
    };
    solve(&problems[0], &opts)?;
    let mut times = Vec::with_capacity(problems.len());
    let mut phases = PhaseTimings::default();
    let mut trajectories = Vec::with_capacity(problems.len());
    for p in problems {
        let start = Instant::now();
        let r = solve(p, &opts)?;
        times.push(start.elapsed().as_secs_f64());
        let t = r.timings.unwrap_or_default();
        phases.decompose += t.decompose;
        phases.transform += t.transform;
        phases.riccati += t.riccati;
        phases.recover += t.recover;
        trajectories.push(r.trajectory);
    }
    let n = problems.len() as f64;
    phases.decompose /= n;
    phases.transform /= n;
    phases.riccati /= n;
    phases.recover /= n;
    Ok(CellRun {
        times,
        phases,
        trajectories,
    })
}

fn stats(times: &[f64]) -> (f64, f64, f64) {
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let min = times.iter().copied().fold(f64::INFINITY, f64::min);
    let var = if times.len() > 1 {
        times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, min, var.sqrt())
}

/// Runs every cell serially and writes the CSV when an output path is set.
/// Cell failures are recorded in the `error` column, not returned.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchTable> {
    cfg.check()?;
    let cells: Vec<(usize, Vec<LqOcpProblem>)> = match &cfg.problem {
        Some(p) => vec![(p.nx, vec![p.clone(); cfg.reps])],
        None => cfg
            .nx_list
            .iter()
            .map(|&nx| {
                let problems = (0..cfg.reps)
                    .map(|rep| random_problem(nx, cfg.nu, cfg.horizon, cell_seed(cfg.seed, nx, rep)))
                    .collect::<Result<Vec<_>>>()?;
                Ok((nx, problems))
            })
            .collect::<Result<_>>()?,
    };

    let mut table = BenchTable::default();
    for (nx, problems) in &cells {
        let (nu, horizon) = (problems[0].nu, problems[0].horizon);
        let runs: Vec<(Method, Result<CellRun>)> = cfg
            .methods
            .iter()
            .map(|&m| (m, run_cell(problems, m, cfg.thread_budget)))
            .collect();

        let both: Vec<&CellRun> = runs.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
        let agreement = (runs.len() == 2 && both.len() == 2).then(|| {
            both[0]
                .trajectories
                .iter()
                .zip(&both[1].trajectories)
                .map(|(a, b)| b.relative_error(a))
                .fold(0.0, f64::max)
        });

        for (method, run) in runs {
            let row = match run {
                Ok(run) => {
                    let (mean, min, std) = stats(&run.times);
                    let error = match agreement {
                        Some(e) if !(e <= AGREEMENT_TOL) => {
                            format!("methods disagree: relative error {e:.3e} above {AGREEMENT_TOL:.0e}")
                        }
                        _ => String::new(),
                    };
                    BenchRow {
                        method: method.name().into(),
                        nx: *nx,
                        nu,
                        horizon,
                        reps: problems.len(),
                        mean_s: Some(mean),
                        min_s: Some(min),
                        std_s: Some(std),
                        t_decompose_s: Some(run.phases.decompose),
                        t_transform_s: Some(run.phases.transform),
                        t_riccati_s: Some(run.phases.riccati),
                        t_recover_s: Some(run.phases.recover),
                        max_rel_err: agreement,
                        error,
                    }
                }
                Err(e) => BenchRow {
                    method: method.name().into(),
                    nx: *nx,
                    nu,
                    horizon,
                    reps: problems.len(),
                    mean_s: None,
                    min_s: None,
                    std_s: None,
                    t_decompose_s: None,
                    t_transform_s: None,
                    t_riccati_s: None,
                    t_recover_s: None,
                    max_rel_err: None,
                    error: e.to_string(),
                },
            };
            table.rows.push(row);
        }
    }

    if let Some(path) = &cfg.out {
        let file = std::fs::File::create(path).map_err(|e| LqError::Invalid(format!("{}: {e}", path.display())))?;
        table.write_csv(file)?;
    }
    Ok(table)
}

/// Parses `a:b:s` into `a, a+s, …` up to and including `b`.
pub fn parse_range(spec: &str) -> std::result::Result<Vec<usize>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, s] = parts.as_slice() else {
        return Err(format!("range `{spec}` must look like start:stop:step"));
    };
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}` in range `{spec}`: {e}"));
    let (a, b, s) = (num(a)?, num(b)?, num(s)?);
    if s == 0 || a > b {
        return Err(format!("range `{spec}` is empty or has zero step"));
    }
    Ok((a..=b).step_by(s).collect())
}
