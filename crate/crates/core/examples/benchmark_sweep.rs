//! Short timing sweep of both recursions; `lqbench` runs the full one.

use brunovsky_riccati::bench::{run_benchmark, BenchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = BenchConfig {
        nx_list: vec![10, 20, 40, 80],
        reps: 5,
        ..BenchConfig::default()
    };
    let table = run_benchmark(&cfg)?;
    table.write_csv(std::io::stdout().lock())?;

    let cross = table.crossover();
    for (nx, ratio) in &cross.ratios {
        println!("n_x={nx:3}  classical/brunovsky = {ratio:.2}");
    }
    match cross.nx_star {
        Some(nx) => println!("brunovsky is faster from n_x = {nx}"),
        None => println!("no crossover in this sweep on {} thread(s)", cfg.thread_budget),
    }
    Ok(())
}
