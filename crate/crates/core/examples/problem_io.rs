//! Write a problem to JSON, read it back, and validate it.

use brunovsky_riccati::{load_problem, save_problem, validate, ProblemGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ProblemGenerator::new(3, 1, 2, 9).full().inequalities(2).generate()?;
    let path = std::env::temp_dir().join("lqocp-example.json");
    save_problem(&problem, &path)?;
    let text = std::fs::read_to_string(&path)?;
    println!("{}", &text[..text.len().min(400)]);

    let back = load_problem(&path)?;
    println!("round trip exact: {}", back == problem);
    println!("valid: {}", validate(&back).is_ok());

    let mut broken = back;
    broken.stages[1].r[(0, 0)] = -1.0;
    for issue in validate(&broken).issues {
        println!("issue: {issue}");
    }
    std::fs::remove_file(&path)?;
    Ok(())
}
