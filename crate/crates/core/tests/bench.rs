use std::process::Command;
use std::time::Instant;

use brunovsky_riccati::bench::{run_benchmark, BenchConfig, CSV_COLUMNS};
use brunovsky_riccati::{random_problem, save_problem, Method};

fn small(nx_list: Vec<usize>) -> BenchConfig {
    BenchConfig {
        nx_list,
        nu: 2,
        horizon: 6,
        reps: 2,
        seed: 5,
        thread_budget: 2,
        ..BenchConfig::default()
    }
}

fn read_csv(path: &std::path::Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let header = rd.headers().unwrap().iter().map(String::from).collect();
    (header, rd.records().map(Result::unwrap).collect())
}

#[test]
fn smoke_run_is_quick() {
    let cfg = BenchConfig {
        nx_list: vec![10],
        reps: 1,
        ..BenchConfig::default()
    };
    let start = Instant::now();
    let table = run_benchmark(&cfg).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(table.rows.len(), 2);
    assert!(!table.has_errors(), "{:?}", table.rows);
    let agreement = table.rows[0].max_rel_err.unwrap();
    assert!(agreement <= 1e-6);
}

#[test]
fn csv_file_has_the_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let cfg = BenchConfig {
        out: Some(out.clone()),
        ..small(vec![4, 6, 8])
    };
    let table = run_benchmark(&cfg).unwrap();
    let (header, records) = read_csv(&out);
    assert_eq!(header, CSV_COLUMNS);
    assert_eq!(records.len(), 6);
    for (rec, row) in records.iter().zip(&table.rows) {
        assert_eq!(&rec[0], row.method);
        assert_eq!(rec[1].parse::<usize>().unwrap(), row.nx);
        assert!(rec[5].parse::<f64>().unwrap() > 0.0);
        assert_eq!(&rec[13], "");
    }
}

#[test]
fn classical_only_has_no_agreement_check() {
    let cfg = BenchConfig {
        methods: vec![Method::Classical],
        ..small(vec![5, 7])
    };
    let table = run_benchmark(&cfg).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert!(table.rows.iter().all(|r| r.method == "classical" && r.max_rel_err.is_none()));
}

#[test]
fn problem_set_is_deterministic() {
    let a = run_benchmark(&small(vec![6])).unwrap();
    let b = run_benchmark(&small(vec![6])).unwrap();
    assert_eq!(a.rows[0].max_rel_err, b.rows[0].max_rel_err);
}

#[test]
fn invalid_configs_are_refused() {
    for cfg in [
        BenchConfig { reps: 0, ..small(vec![4]) },
        BenchConfig { methods: vec![], ..small(vec![4]) },
        small(vec![1]),
        small(vec![]),
    ] {
        assert!(run_benchmark(&cfg).is_err(), "{cfg:?}");
    }
}

#[test]
fn cli_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_lqbench"))
        .args(["--nx-range", "4:8:2", "--nu", "2", "--horizon", "5", "--reps", "1", "--threads", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let (header, records) = read_csv(&out);
    assert_eq!(header, CSV_COLUMNS);
    let nx: Vec<&str> = records.iter().map(|r| &r[1]).collect();
    assert_eq!(nx, ["4", "4", "6", "6", "8", "8"]);
}

#[test]
fn cli_prints_to_stdout_and_takes_a_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    save_problem(&random_problem(5, 2, 4, 1).unwrap(), &path).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lqbench"))
        .args(["--reps", "2", "--methods", "brunovsky", "--problem"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_COLUMNS.join(","));
    assert!(lines[1].starts_with("brunovsky,5,2,4,2,"));
    assert_eq!(lines.len(), 2);
}

#[test]
fn cli_rejects_bad_arguments() {
    for args in [
        vec!["--nx-range", "10:5:1"],
        vec!["--nx-list", "4", "--nx-range", "4:8:2"],
        vec!["--methods", "newton"],
        vec!["--problem", "/nonexistent/problem.json"],
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_lqbench")).args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}
