//! The Brunovsky pipeline step by step on a partly uncontrollable system:
//! decompose, transform the stage data, run the Riccati recursion on chains of
//! integrators with copy kernels, and map the solution back.

use brunovsky_riccati::staircase::DEFAULT_RANK_TOL;
use brunovsky_riccati::{
    backward_pass, brunovsky_transform, forward_pass, recover_solution, reduce_to_controllable, solve_classical,
    staircase_decompose, to_brunovsky_ocp, BrunovskyKernels, ProblemGenerator,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let threads = 4;
    let problem = ProblemGenerator::new(12, 3, 30, 2024).full().controllable_dim(9).generate()?;

    let kd = staircase_decompose(&problem.a, &problem.b, DEFAULT_RANK_TOL)?;
    println!("n_x = {}, controllable {}, staircase blocks {:?}", kd.n(), kd.n_c(), kd.block_sizes);

    let reduced = reduce_to_controllable(&problem, &kd, threads)?;
    let bt = brunovsky_transform(&kd.a_co, &kd.b_co, DEFAULT_RANK_TOL)?;
    println!("indices {:?}, cond(T) ≈ {:.2e}", bt.mu, bt.condition);

    let bocp = to_brunovsky_ocp(&reduced, &bt, threads)?;
    let kernels = BrunovskyKernels::new(&bt.mu)?;
    let br = backward_pass(&bocp.problem, &kernels, false)?;
    let z = forward_pass(&bocp.problem, &br)?;
    let traj = recover_solution(&z, &bt, &kd, &reduced.x_uc, threads)?;

    let dense = solve_classical(&problem)?;
    println!("relative gap to the classical recursion {:.2e}", traj.relative_error(&dense));
    println!("cost {:.6} vs {:.6}", problem.objective(&traj), problem.objective(&dense));
    Ok(())
}
