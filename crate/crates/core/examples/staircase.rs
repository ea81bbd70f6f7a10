//! Kalman controllability decomposition of a system with a hidden mode, and
//! controllability indices of its controllable part.

use brunovsky_riccati::staircase::DEFAULT_RANK_TOL;
use brunovsky_riccati::{controllability_indices, staircase_decompose};
use nalgebra::{dmatrix, DMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // two carts coupled by a spring plus a thermal mode nothing can reach
    let a = dmatrix![
        1.0, 0.1, 0.0, 0.0, 0.0;
        -0.2, 1.0, 0.2, 0.0, 0.0;
        0.0, 0.0, 1.0, 0.1, 0.0;
        0.2, 0.0, -0.2, 1.0, 0.0;
        0.0, 0.0, 0.0, 0.0, 0.95
    ];
    let b = dmatrix![0.0; 0.1; 0.0; 0.0; 0.0];

    let kd = staircase_decompose(&a, &b, DEFAULT_RANK_TOL)?;
    println!("controllable {} of {}, blocks {:?}", kd.n_c(), kd.n(), kd.block_sizes);
    println!("A_uc = {}", kd.a_uc);
    let orth = (&kd.t * kd.t.transpose() - DMatrix::identity(5, 5)).norm();
    let recon = (&kd.t * &a * kd.t.transpose() - kd.block_a()).norm();
    println!("‖TTᵀ − I‖ = {orth:.1e}, ‖TATᵀ − blocks‖ = {recon:.1e}");

    let mu = controllability_indices(&kd.a_co, &kd.b_co, DEFAULT_RANK_TOL)?;
    println!("controllability indices {mu:?}");

    let b2 = dmatrix![0.0, 0.0; 0.1, 0.0; 0.0, 0.0; 0.0, 0.1; 0.0, 0.0];
    let kd2 = staircase_decompose(&a, &b2, DEFAULT_RANK_TOL)?;
    let mu2 = controllability_indices(&kd2.a_co, &kd2.b_co, DEFAULT_RANK_TOL)?;
    println!("with a second actuator: indices {mu2:?}");
    Ok(())
}
