//! Double integrator driven to the origin with the classical Riccati
//! recursion, checked against the dense KKT solution.

use brunovsky_riccati::{kkt_solve, solve_classical, LqOcpProblem};
use nalgebra::{dmatrix, dvector, DMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dt = 0.1;
    let a = dmatrix![1.0, dt; 0.0, 1.0];
    let b = dmatrix![0.5 * dt * dt; dt];
    let q = DMatrix::identity(2, 2);
    let r = dmatrix![0.1];
    let qn = DMatrix::identity(2, 2) * 10.0;
    let problem = LqOcpProblem::time_invariant(a, b, q, r, qn, dvector![1.0, 0.0], 40);

    let traj = solve_classical(&problem)?;
    for (k, (x, u)) in traj.states.iter().zip(&traj.inputs).enumerate().step_by(5) {
        println!("k={k:2}  x=({:+.4}, {:+.4})  u={:+.4}", x[0], x[1], u[0]);
    }
    println!("final state {:?}", traj.states.last().unwrap().as_slice());
    println!("cost {:.6}", problem.objective(&traj));

    let reference = kkt_solve(&problem)?;
    println!("relative gap to the KKT solution {:.2e}", traj.relative_error(&reference));
    Ok(())
}
