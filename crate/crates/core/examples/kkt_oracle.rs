//! Assemble the equality-constrained QP of a small problem and solve its
//! saddle-point system directly.

use brunovsky_riccati::oracle::{kkt_solve_full, DEFAULT_VARIABLE_CAP};
use brunovsky_riccati::{assemble_kkt, solve_classical, ProblemGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ProblemGenerator::new(4, 2, 5, 3).full().generate()?;
    let sys = assemble_kkt(&problem);
    println!("{} variables, {} equality constraints", sys.variables(), sys.constraints());

    let sol = kkt_solve_full(&problem, DEFAULT_VARIABLE_CAP)?;
    println!("residual {:.2e} at scale {:.2e}", sol.residual, sol.scale);

    let w = sys.stack(&sol.trajectory);
    println!("objective {:.6}, infeasibility {:.2e}", sys.objective(&w), sys.infeasibility(&w));
    let riccati = solve_classical(&problem)?;
    println!("relative gap to Riccati {:.2e}", sol.trajectory.relative_error(&riccati));
    Ok(())
}
