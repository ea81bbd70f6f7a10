//! Dense KKT reference solver for small instances.
//!
//! Variables are stacked as `(x_0, u_0, x_1, u_1, …, x_N)`; the equality
//! block fixes `x_0` and imposes the dynamics. The saddle-point system
//!
//! ```text
//! [ H  Eᵀ ] [ w ]   [ −g ]
//! [ E  0  ] [ λ ] = [  f ]
//! ```
//!
//! is solved by LU with partial pivoting, followed by a few steps of
//! iterative refinement.

use faer::linalg::solvers::Solve;
use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::error::{LqError, Result};
use crate::lqocp::{Coordinates, LqOcpProblem, Trajectory};

/// Default cap on the number of primal variables.
pub const DEFAULT_VARIABLE_CAP: usize = 5000;

/// Upper bound on iterative refinement sweeps after the LU solve.
pub const REFINEMENT_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct KktSystem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub e: DMatrix<f64>,
    pub f: DVector<f64>,
    nx: usize,
    nu: usize,
    horizon: usize,
}

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub trajectory: Trajectory,
    pub multipliers: DVector<f64>,
    /// `‖K s − rhs‖∞` of the solved saddle-point system.
    pub residual: f64,
    /// `1 + ‖g‖∞ + ‖f‖∞`
    pub scale: f64,
}

fn variable_count(p: &LqOcpProblem) -> usize {
    p.nx * (p.horizon + 1) + p.nu * p.horizon
}

impl KktSystem {
    pub fn variables(&self) -> usize {
        self.h.nrows()
    }

    pub fn constraints(&self) -> usize {
        self.e.nrows()
    }

    fn offset_x(&self, k: usize) -> usize {
        k * (self.nx + self.nu)
    }

    /// Stacks a trajectory in the variable order of the system.
    pub fn stack(&self, traj: &Trajectory) -> DVector<f64> {
        let mut w = DVector::zeros(self.variables());
        for (k, x) in traj.states.iter().enumerate() {
            w.rows_mut(self.offset_x(k), self.nx).copy_from(x);
        }
        for (k, u) in traj.inputs.iter().enumerate() {
            w.rows_mut(self.offset_x(k) + self.nx, self.nu).copy_from(u);
        }
        w
    }

    pub fn unstack(&self, w: &DVector<f64>) -> Trajectory {
        let states = (0..=self.horizon).map(|k| w.rows(self.offset_x(k), self.nx).into_owned()).collect();
        let inputs = (0..self.horizon)
            .map(|k| w.rows(self.offset_x(k) + self.nx, self.nu).into_owned())
            .collect();
        Trajectory {
            states,
            inputs,
            coordinates: Coordinates::Original,
        }
    }

    /// `½ wᵀHw + gᵀw`
    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.h * w)) + self.g.dot(w)
    }

    /// `‖E w − f‖∞`
    pub fn infeasibility(&self, w: &DVector<f64>) -> f64 {
        (&self.e * w - &self.f).amax()
    }
}

pub fn assemble_kkt(p: &LqOcpProblem) -> KktSystem {
    let (nx, nu, n) = (p.nx, p.nu, p.horizon);
    let vars = variable_count(p);
    let cons = nx * (n + 1);
    let mut h = DMatrix::zeros(vars, vars);
    let mut g = DVector::zeros(vars);
    let mut e = DMatrix::zeros(cons, vars);
    let mut f = DVector::zeros(cons);
    let stride = nx + nu;

    for (k, st) in p.stages.iter().enumerate() {
        let ox = k * stride;
        let ou = ox + nx;
        h.view_mut((ox, ox), (nx, nx)).copy_from(&st.q);
        h.view_mut((ou, ou), (nu, nu)).copy_from(&st.r);
        h.view_mut((ou, ox), (nu, nx)).copy_from(&st.s);
        h.view_mut((ox, ou), (nx, nu)).copy_from(&st.s.transpose());
        g.rows_mut(ox, nx).copy_from(&st.q_lin);
        g.rows_mut(ou, nu).copy_from(&st.r_lin);

        // x_{k+1} − A x_k − B u_k = b_k
        let row = (k + 1) * nx;
        e.view_mut((row, ox), (nx, nx)).copy_from(&(-&p.a));
        e.view_mut((row, ou), (nx, nu)).copy_from(&(-&p.b));
        e.view_mut((row, ox + stride), (nx, nx)).fill_with_identity();
        f.rows_mut(row, nx).copy_from(&st.offset);
    }
    let oxn = n * stride;
    h.view_mut((oxn, oxn), (nx, nx)).copy_from(&p.terminal.q);
    g.rows_mut(oxn, nx).copy_from(&p.terminal.q_lin);
    e.view_mut((0, 0), (nx, nx)).fill_with_identity();
    f.rows_mut(0, nx).copy_from(&p.x0);

    KktSystem {
        h,
        g,
        e,
        f,
        nx,
        nu,
        horizon: n,
    }
}

/// Solves with the default variable cap.
pub fn kkt_solve(p: &LqOcpProblem) -> Result<Trajectory> {
    Ok(kkt_solve_full(p, DEFAULT_VARIABLE_CAP)?.trajectory)
}

pub fn kkt_solve_full(p: &LqOcpProblem, variable_cap: usize) -> Result<KktSolution> {
    let vars = variable_count(p);
    if vars > variable_cap {
        return Err(LqError::OracleTooLarge { vars, cap: variable_cap });
    }
    p.ensure_valid()?;
    let sys = assemble_kkt(p);
    let cons = sys.constraints();
    let dim = vars + cons;
    let kkt = Mat::<f64>::from_fn(dim, dim, |i, j| match (i < vars, j < vars) {
        (true, true) => sys.h[(i, j)],
        (true, false) => sys.e[(j - vars, i)],
        (false, true) => sys.e[(i - vars, j)],
        (false, false) => 0.0,
    });
    let rhs = Mat::<f64>::from_fn(dim, 1, |i, _| if i < vars { -sys.g[i] } else { sys.f[i - vars] });
    let lu = kkt.partial_piv_lu();
    let mut sol = lu.solve(&rhs);
    if (0..dim).any(|i| !sol[(i, 0)].is_finite()) {
        return Err(LqError::DegenerateKkt);
    }
    let inf_norm = |m: &Mat<f64>| (0..m.nrows()).map(|i| m[(i, 0)].abs()).fold(0.0, f64::max);
    let mut res = &rhs - &kkt * &sol;
    let mut residual = inf_norm(&res);
    for _ in 0..REFINEMENT_STEPS {
        if residual == 0.0 {
            break;
        }
        let next = &sol + lu.solve(&res);
        let next_res = &rhs - &kkt * &next;
        let next_residual = inf_norm(&next_res);
        if !(next_residual < residual) {
            break;
        }
        sol = next;
        res = next_res;
        residual = next_residual;
    }
    let w = DVector::from_fn(vars, |i, _| sol[(i, 0)]);
    let multipliers = DVector::from_fn(cons, |i, _| sol[(vars + i, 0)]);
    Ok(KktSolution {
        trajectory: sys.unstack(&w),
        multipliers,
        residual,
        scale: 1.0 + sys.g.amax() + sys.f.amax(),
    })
}
