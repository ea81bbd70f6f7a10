//! Stage inequalities rewritten for the controllable and Brunovsky
//! coordinates; a feasible rollout stays feasible in all three.

use brunovsky_riccati::staircase::DEFAULT_RANK_TOL;
use brunovsky_riccati::transform::{to_brunovsky_coordinates, to_controllable_coordinates};
use brunovsky_riccati::{
    brunovsky_transform, reduce_to_controllable, solve_classical, staircase_decompose, transform_inequalities,
    ProblemGenerator,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut problem = ProblemGenerator::new(6, 2, 10, 4).full().controllable_dim(4).inequalities(3).generate()?;
    let traj = solve_classical(&problem)?;

    // loosen each row just enough for the unconstrained optimum to satisfy it
    let ineq = problem.inequality.as_mut().unwrap();
    for i in 0..ineq.len() {
        let worst = (0..problem.horizon)
            .map(|k| (ineq.c.row(i) * &traj.states[k] + ineq.d.row(i) * &traj.inputs[k])[0])
            .fold(f64::NEG_INFINITY, f64::max);
        ineq.rhs[i] = worst + 1e-3;
    }

    let kd = staircase_decompose(&problem.a, &problem.b, DEFAULT_RANK_TOL)?;
    let reduced = reduce_to_controllable(&problem, &kd, 2)?;
    let bt = brunovsky_transform(&kd.a_co, &kd.b_co, DEFAULT_RANK_TOL)?;
    let tr = transform_inequalities(&reduced, &bt).expect("problem has inequalities");
    println!("Brunovsky constraint matrices:\nC = {}D = {}", tr.brunovsky.c, tr.brunovsky.d);

    let xc = to_controllable_coordinates(&traj, &kd)?;
    let z = to_brunovsky_coordinates(&xc, &bt)?;
    println!("worst slack, controllable coordinates {:+.3e}", tr.controllable.violation(&xc));
    println!("worst slack, Brunovsky coordinates    {:+.3e}", tr.brunovsky.violation(&z));
    Ok(())
}
