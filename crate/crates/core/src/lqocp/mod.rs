//! Problem data for finite-horizon LQ optimal control over an LTI system.
//!
//! ```text
//! min  Σ_k ½[x;u]ᵀ[[Q, Sᵀ],[S, R]][x;u] + [x;u]ᵀ[q;r]  +  ½x_Nᵀ Q_N x_N + x_Nᵀ q_N
//! s.t. x_{k+1} = A x_k + B u_k + b_k,   x_0 given,   C x_k + D u_k ≤ d
//! ```

mod io;
mod random;

use nalgebra::{DMatrix, DVector};

pub use io::{load_problem, problem_from_json, problem_to_json, save_problem, FORMAT_VERSION};
pub use random::{random_problem, ProblemGenerator, GENERATION_ATTEMPTS, R_REGULARIZATION};

use crate::error::{LqError, Result};

/// Relative tolerance on the skew part of the symmetric cost blocks.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Per-stage cost and offset data, k = 0..N-1.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// State weight Q_k (n_x × n_x).
    pub q: DMatrix<f64>,
    /// Input weight R_k (n_u × n_u).
    pub r: DMatrix<f64>,
    /// Cross weight S_k (n_u × n_x).
    pub s: DMatrix<f64>,
    /// Linear state term q_k.
    pub q_lin: DVector<f64>,
    /// Linear input term r_k.
    pub r_lin: DVector<f64>,
    /// Dynamics offset b_k.
    pub offset: DVector<f64>,
}

impl Stage {
    /// Quadratic-only stage: S, q, r and b all zero.
    pub fn quadratic(q: DMatrix<f64>, r: DMatrix<f64>) -> Self {
        let (nx, nu) = (q.nrows(), r.nrows());
        Stage {
            q,
            r,
            s: DMatrix::zeros(nu, nx),
            q_lin: DVector::zeros(nx),
            r_lin: DVector::zeros(nu),
            offset: DVector::zeros(nx),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Terminal {
    pub q: DMatrix<f64>,
    pub q_lin: DVector<f64>,
}

/// Stage-invariant linear inequalities `C x_k + D u_k ≤ d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

impl Inequality {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqOcpProblem {
    pub nx: usize,
    pub nu: usize,
    pub horizon: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub stages: Vec<Stage>,
    pub terminal: Terminal,
    pub x0: DVector<f64>,
    pub inequality: Option<Inequality>,
}

impl LqOcpProblem {
    /// Problem with the same (Q, R) at every stage, terminal weight `qn`, and
    /// all linear terms, cross terms and offsets zero.
    pub fn time_invariant(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        qn: DMatrix<f64>,
        x0: DVector<f64>,
        horizon: usize,
    ) -> Self {
        let (nx, nu) = (a.nrows(), b.ncols());
        LqOcpProblem {
            nx,
            nu,
            horizon,
            stages: vec![Stage::quadratic(q, r); horizon],
            terminal: Terminal {
                q: qn,
                q_lin: DVector::zeros(nx),
            },
            a,
            b,
            x0,
            inequality: None,
        }
    }

    /// Objective value of a trajectory in original coordinates (no constant).
    pub fn objective(&self, traj: &Trajectory) -> f64 {
        let mut cost = 0.0;
        for (k, st) in self.stages.iter().enumerate() {
            let x = &traj.states[k];
            let u = &traj.inputs[k];
            cost += 0.5 * x.dot(&(&st.q * x)) + u.dot(&(&st.s * x)) + 0.5 * u.dot(&(&st.r * u));
            cost += x.dot(&st.q_lin) + u.dot(&st.r_lin);
        }
        let xn = &traj.states[self.horizon];
        cost + 0.5 * xn.dot(&(&self.terminal.q * xn)) + xn.dot(&self.terminal.q_lin)
    }

    /// Largest per-stage dynamics violation `‖x_{k+1} − A x_k − B u_k − b_k‖∞`,
    /// including `‖x_0 − x̄_0‖∞`.
    pub fn dynamics_residual(&self, traj: &Trajectory) -> f64 {
        let mut worst = (&traj.states[0] - &self.x0).amax();
        for (k, st) in self.stages.iter().enumerate() {
            let pred = &self.a * &traj.states[k] + &self.b * &traj.inputs[k] + &st.offset;
            worst = worst.max((&traj.states[k + 1] - pred).amax());
        }
        worst
    }

    /// Optimality residual of a primal trajectory. The costates are taken
    /// from the state stationarity conditions,
    /// `λ_N = Q_N x_N + q_N`, `λ_k = Q_k x_k + S_kᵀu_k + q_k + Aᵀλ_{k+1}`,
    /// so those hold exactly and the residual lives in the input
    /// stationarity, the dynamics and the initial condition.
    pub fn kkt_residual(&self, traj: &Trajectory) -> KktResidual {
        let n = self.horizon;
        let mut input = vec![DVector::zeros(0); n];
        let mut dynamics = vec![DVector::zeros(0); n];
        let mut lambda = &self.terminal.q * &traj.states[n] + &self.terminal.q_lin;
        for k in (0..n).rev() {
            let st = &self.stages[k];
            let (x, u) = (&traj.states[k], &traj.inputs[k]);
            input[k] = &st.r * u + &st.s * x + &st.r_lin + self.b.tr_mul(&lambda);
            dynamics[k] = &self.a * x + &self.b * u + &st.offset - &traj.states[k + 1];
            lambda = &st.q * x + st.s.tr_mul(u) + &st.q_lin + self.a.tr_mul(&lambda);
        }
        KktResidual {
            input,
            dynamics,
            initial: &self.x0 - &traj.states[0],
        }
    }

    /// Checks every well-posedness condition and collects all violations.
    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let report = validate(self);
        if report.is_ok() {
            Ok(())
        } else {
            Err(LqError::Invalid(report.issues.join("; ")))
        }
    }
}

/// Coordinate system a trajectory is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    Original,
    Controllable,
    Brunovsky,
}

/// Residual of the optimality conditions, see [`LqOcpProblem::kkt_residual`].
/// A trajectory is optimal exactly when every component vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResidual {
    /// `R_k u_k + S_k x_k + r_k + Bᵀλ_{k+1}`
    pub input: Vec<DVector<f64>>,
    /// `A x_k + B u_k + b_k − x_{k+1}`
    pub dynamics: Vec<DVector<f64>>,
    /// `x̄_0 − x_0`
    pub initial: DVector<f64>,
}

impl KktResidual {
    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.input
            .iter()
            .chain(&self.dynamics)
            .map(|v| v.amax())
            .fold(self.initial.amax(), f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// x_0 .. x_N
    pub states: Vec<DVector<f64>>,
    /// u_0 .. u_{N-1}
    pub inputs: Vec<DVector<f64>>,
    pub coordinates: Coordinates,
}

impl Trajectory {
    pub fn new(
        states: Vec<DVector<f64>>,
        inputs: Vec<DVector<f64>>,
        coordinates: Coordinates,
    ) -> Result<Self> {
        if states.len() != inputs.len() + 1 {
            return Err(LqError::Dimension(format!(
                "trajectory has {} states for {} inputs",
                states.len(),
                inputs.len()
            )));
        }
        Ok(Trajectory {
            states,
            inputs,
            coordinates,
        })
    }

    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    /// Max of the relative state and input errors against `reference`.
    pub fn relative_error(&self, reference: &Trajectory) -> f64 {
        let xs = crate::linalg::relative_error(&self.states, &reference.states);
        let us = crate::linalg::relative_error(&self.inputs, &reference.inputs);
        xs.max(us)
    }

    /// True when every state and input entry is bit-identical.
    pub fn bit_identical(&self, other: &Trajectory) -> bool {
        let same = |a: &[DVector<f64>], b: &[DVector<f64>]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| {
                    x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits())
                })
        };
        same(&self.states, &other.states) && same(&self.inputs, &other.inputs)
    }
}

/// Findings of [`validate`]. Empty means well-posed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.issues.iter().any(|s| s.contains(needle))
    }
}

fn check_shape(issues: &mut Vec<String>, name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> bool {
    if m.shape() != (rows, cols) {
        issues.push(format!(
            "{name}: dimension mismatch, expected {rows}×{cols}, found {}×{}",
            m.nrows(),
            m.ncols()
        ));
        return false;
    }
    if m.iter().any(|v| !v.is_finite()) {
        issues.push(format!("{name}: non-finite entry"));
    }
    true
}

fn check_len(issues: &mut Vec<String>, name: &str, v: &DVector<f64>, len: usize) {
    if v.len() != len {
        issues.push(format!(
            "{name}: dimension mismatch, expected length {len}, found {}",
            v.len()
        ));
    } else if v.iter().any(|x| !x.is_finite()) {
        issues.push(format!("{name}: non-finite entry"));
    }
}

fn check_symmetric(issues: &mut Vec<String>, name: &str, m: &DMatrix<f64>) {
    // ‖(M − Mᵀ)/2‖_F against ‖M‖_F
    let skew = 0.5 * crate::linalg::asymmetry(m);
    if skew > SYMMETRY_TOL * m.norm() {
        issues.push(format!("{name} not symmetric (skew part {skew:.3e})"));
    }
}

/// Dimension, symmetry and definiteness checks of a problem.
pub fn validate(p: &LqOcpProblem) -> ValidationReport {
    let mut issues = Vec::new();
    let (nx, nu) = (p.nx, p.nu);
    if nx == 0 {
        issues.push("n_x must be ≥ 1".to_string());
    }
    if nu == 0 {
        issues.push("n_u must be ≥ 1".to_string());
    }
    if p.horizon == 0 {
        issues.push("N must be ≥ 1".to_string());
    }
    if p.stages.len() != p.horizon {
        issues.push(format!(
            "stages: dimension mismatch, expected {} stages, found {}",
            p.horizon,
            p.stages.len()
        ));
    }
    check_shape(&mut issues, "A", &p.a, nx, nx);
    check_shape(&mut issues, "B", &p.b, nx, nu);
    check_len(&mut issues, "x0", &p.x0, nx);
    for (k, st) in p.stages.iter().enumerate() {
        if check_shape(&mut issues, &format!("Q_{k}"), &st.q, nx, nx) {
            check_symmetric(&mut issues, &format!("Q_{k}"), &st.q);
        }
        if check_shape(&mut issues, &format!("R_{k}"), &st.r, nu, nu) {
            check_symmetric(&mut issues, &format!("R_{k}"), &st.r);
            if st.r.clone().cholesky().is_none() {
                issues.push(format!("R_{k} not positive definite"));
            }
        }
        check_shape(&mut issues, &format!("S_{k}"), &st.s, nu, nx);
        check_len(&mut issues, &format!("q_{k}"), &st.q_lin, nx);
        check_len(&mut issues, &format!("r_{k}"), &st.r_lin, nu);
        check_len(&mut issues, &format!("b_{k}"), &st.offset, nx);
    }
    if check_shape(&mut issues, "Q_N", &p.terminal.q, nx, nx) {
        check_symmetric(&mut issues, "Q_N", &p.terminal.q);
    }
    check_len(&mut issues, "q_N", &p.terminal.q_lin, nx);
    if let Some(ineq) = &p.inequality {
        let ni = ineq.rhs.len();
        check_shape(&mut issues, "C", &ineq.c, ni, nx);
        check_shape(&mut issues, "D", &ineq.d, ni, nu);
        check_len(&mut issues, "d", &ineq.rhs, ni);
    }
    ValidationReport { issues }
}
