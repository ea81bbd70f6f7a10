//! Quadratic products with a Brunovsky pair are shifted copies of P.

use brunovsky_riccati::{brunovsky_pair, structured_quadratics};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = [3, 4];
    let n: usize = mu.iter().sum();
    // p_mn = 10 m + n makes every copied entry recognizable
    let p = DMatrix::from_fn(n, n, |i, j| {
        let (r, c) = (i.min(j), i.max(j));
        (10 * (r + 1) + c + 1) as f64
    });
    let s = structured_quadratics(&p, &mu)?;
    println!("P = {p}");
    println!("AᵀPA = {}", s.at_p_a);
    println!("BᵀPA = {}", s.bt_p_a);
    println!("BᵀPB = {}", s.bt_p_b);

    let (a, b) = brunovsky_pair(&mu)?;
    let exact = s.at_p_a == a.transpose() * &p * &a && s.bt_p_a == b.transpose() * &p * &a && s.bt_p_b == b.transpose() * &p * &b;
    println!("identical to the dense products: {exact}");
    Ok(())
}
