//! Backward/forward Riccati recursion for the LQ problem.
//!
//! The three quadratic products `AᵀPA`, `BᵀPA`, `BᵀPB` and the vector
//! products with `A`, `B` are delegated to a [`QuadraticsProvider`], so the
//! same recursion runs with dense kernels in original coordinates and with
//! copy kernels in Brunovsky coordinates.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::brunovsky::StructuredQuadratics;
use crate::error::{LqError, Result};
use crate::linalg::{lower_half, sym_congruence_with_half, symmetrize, trmm_lower};
use crate::lqocp::{Coordinates, LqOcpProblem, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Dense,
    Structured,
}

/// Source of the system products used by the recursion.
pub trait QuadraticsProvider: Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// `(AᵀPA, BᵀPA, BᵀPB)` for symmetric `P`.
    fn quadratics(&self, p: &DMatrix<f64>) -> StructuredQuadratics;
    /// `Aᵀ v`
    fn a_tr_mul(&self, v: &DVector<f64>) -> DVector<f64>;
    /// `Bᵀ v`
    fn b_tr_mul(&self, v: &DVector<f64>) -> DVector<f64>;
    /// `A x + B u`
    fn propagate(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn kind(&self) -> KernelKind;
    /// Number of `quadratics` evaluations so far.
    fn calls(&self) -> usize;
}

/// Dense kernels in the symmetric variant: with `P = Π + Πᵀ`, `Π` lower
/// triangular with halved diagonal,
///
/// ```text
/// Y = ΠA (trmm)   AᵀPA = AᵀY + (AᵀY)ᵀ
/// BᵀPA = BᵀY + (ΠB)ᵀA      BᵀPB = Bᵀ(ΠB) + (Bᵀ(ΠB))ᵀ
/// ```
#[derive(Debug)]
pub struct DenseKernels {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    calls: AtomicUsize,
}

impl DenseKernels {
    pub fn new(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Self {
        DenseKernels {
            a: a.clone(),
            b: b.clone(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn for_problem(p: &LqOcpProblem) -> Self {
        Self::new(&p.a, &p.b)
    }
}

impl QuadraticsProvider for DenseKernels {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn quadratics(&self, p: &DMatrix<f64>) -> StructuredQuadratics {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let half = lower_half(p);
        let (at_p_a, y) = sym_congruence_with_half(&half, &self.a);
        let half_b = trmm_lower(&half, &self.b);
        let bt_p_a = self.b.tr_mul(&y) + half_b.tr_mul(&self.a);
        let w = self.b.tr_mul(&half_b);
        let bt_p_b = &w + w.transpose();
        StructuredQuadratics { at_p_a, bt_p_a, bt_p_b }
    }

    fn a_tr_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(v)
    }

    fn b_tr_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        self.b.tr_mul(v)
    }

    fn propagate(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn kind(&self) -> KernelKind {
        KernelKind::Dense
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Output of [`backward_pass`]: `u_k = K_k x_k + k_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiBackwardResult {
    /// `K_0 .. K_{N-1}`
    pub gains: Vec<DMatrix<f64>>,
    /// `k_0 .. k_{N-1}`
    pub feedforward: Vec<DVector<f64>>,
    /// `P_0 .. P_N` when requested.
    pub cost_to_go: Option<Vec<DMatrix<f64>>>,
    /// `p_0 .. p_N` when requested.
    pub cost_to_go_lin: Option<Vec<DVector<f64>>>,
    /// Cholesky factors of `R_e,0 .. R_e,N-1`, stored with the cost-to-go.
    pub input_factors: Option<Vec<DMatrix<f64>>>,
}

fn check_dims(problem: &LqOcpProblem, kernels: &dyn QuadraticsProvider) -> Result<()> {
    if kernels.state_dim() != problem.nx || kernels.input_dim() != problem.nu || problem.stages.len() != problem.horizon {
        return Err(LqError::Dimension(format!(
            "kernels are {}×{}, problem is n_x={}, n_u={} with {} stages for N={}",
            kernels.state_dim(),
            kernels.input_dim(),
            problem.nx,
            problem.nu,
            problem.stages.len(),
            problem.horizon
        )));
    }
    Ok(())
}

/// Backward sweep. `R_e = R + BᵀPB` is Cholesky factorized once per stage
/// and the factor serves both gains; `P` is re-symmetrized after each update.
pub fn backward_pass(
    problem: &LqOcpProblem,
    kernels: &dyn QuadraticsProvider,
    store_cost_to_go: bool,
) -> Result<RiccatiBackwardResult> {
    check_dims(problem, kernels)?;
    let n = problem.horizon;
    let mut gains = vec![DMatrix::zeros(0, 0); n];
    let mut feedforward = vec![DVector::zeros(0); n];
    let mut p_store = store_cost_to_go.then(|| vec![DMatrix::zeros(0, 0); n + 1]);
    let mut pl_store = store_cost_to_go.then(|| vec![DVector::zeros(0); n + 1]);
    let mut l_store = store_cost_to_go.then(|| vec![DMatrix::zeros(0, 0); n]);

    let mut p = problem.terminal.q.clone();
    symmetrize(&mut p);
    let mut p_lin = problem.terminal.q_lin.clone();
    for k in (0..n).rev() {
        let st = &problem.stages[k];
        let sq = kernels.quadratics(&p);
        let re = &st.r + &sq.bt_p_b;
        let chol = re.cholesky().ok_or(LqError::Factorization { stage: k })?;
        let cross = &st.s + &sq.bt_p_a;
        let h = &p * &st.offset + &p_lin;
        let g = &st.r_lin + kernels.b_tr_mul(&h);

        let k_mat = -chol.solve(&cross);
        let k_vec = -chol.solve(&g);

        let l = chol.l();
        let half = l
            .solve_lower_triangular(&cross)
            .ok_or(LqError::Factorization { stage: k })?;
        let mut p_next = &st.q + &sq.at_p_a - half.tr_mul(&half);
        symmetrize(&mut p_next);
        let p_lin_next = &st.q_lin + kernels.a_tr_mul(&h) + cross.tr_mul(&k_vec);

        if let (Some(ps), Some(pls)) = (p_store.as_mut(), pl_store.as_mut()) {
            ps[k + 1] = std::mem::replace(&mut p, p_next);
            pls[k + 1] = std::mem::replace(&mut p_lin, p_lin_next);
        } else {
            p = p_next;
            p_lin = p_lin_next;
        }
        if let Some(ls) = l_store.as_mut() {
            ls[k] = l;
        }
        gains[k] = k_mat;
        feedforward[k] = k_vec;
    }
    if let (Some(ps), Some(pls)) = (p_store.as_mut(), pl_store.as_mut()) {
        ps[0] = p;
        pls[0] = p_lin;
    }
    Ok(RiccatiBackwardResult {
        gains,
        feedforward,
        cost_to_go: p_store,
        cost_to_go_lin: pl_store,
        input_factors: l_store,
    })
}

/// Feedforward terms for new linear data (`q_k`, `r_k`, `b_k`, `q_N`) with
/// the quadratic data of a stored backward pass. Uses
/// `p_k = q_k + Aᵀh + K_kᵀg`, so each stage costs matrix-vector products
/// only. `br` must come from [`backward_pass`] with the cost-to-go stored.
pub fn backward_pass_linear(
    problem: &LqOcpProblem,
    br: &RiccatiBackwardResult,
    kernels: &dyn QuadraticsProvider,
) -> Result<Vec<DVector<f64>>> {
    check_dims(problem, kernels)?;
    let n = problem.horizon;
    let (Some(ps), Some(ls)) = (br.cost_to_go.as_ref(), br.input_factors.as_ref()) else {
        return Err(LqError::Invalid("backward result was computed without stored cost-to-go".into()));
    };
    if br.gains.len() != n || ps.len() != n + 1 || ls.len() != n {
        return Err(LqError::Dimension(format!("stored backward result does not cover a horizon of {n}")));
    }
    let mut feedforward = vec![DVector::zeros(0); n];
    let mut p_lin = problem.terminal.q_lin.clone();
    for k in (0..n).rev() {
        let st = &problem.stages[k];
        let h = &ps[k + 1] * &st.offset + &p_lin;
        let g = &st.r_lin + kernels.b_tr_mul(&h);
        let y = ls[k].solve_lower_triangular(&g).ok_or(LqError::Factorization { stage: k })?;
        let k_vec = -ls[k].tr_solve_lower_triangular(&y).ok_or(LqError::Factorization { stage: k })?;
        p_lin = &st.q_lin + kernels.a_tr_mul(&h) + br.gains[k].tr_mul(&g);
        feedforward[k] = k_vec;
    }
    Ok(feedforward)
}

/// Forward rollout `u_k = K_k x_k + k_k`, `x_{k+1} = A x_k + B u_k + b_k`.
pub fn forward_pass(problem: &LqOcpProblem, br: &RiccatiBackwardResult) -> Result<Trajectory> {
    forward_pass_with(problem, br, &DenseKernels::for_problem(problem), Coordinates::Original)
}

/// Forward rollout with the system products taken from `kernels`.
pub fn forward_pass_with(
    problem: &LqOcpProblem,
    br: &RiccatiBackwardResult,
    kernels: &dyn QuadraticsProvider,
    coordinates: Coordinates,
) -> Result<Trajectory> {
    check_dims(problem, kernels)?;
    if br.gains.len() != problem.horizon || br.feedforward.len() != problem.horizon {
        return Err(LqError::Dimension(format!(
            "{} gains for a horizon of {}",
            br.gains.len(),
            problem.horizon
        )));
    }
    let mut states = Vec::with_capacity(problem.horizon + 1);
    let mut inputs = Vec::with_capacity(problem.horizon);
    let mut x = problem.x0.clone();
    for (k, st) in problem.stages.iter().enumerate() {
        let u = &br.gains[k] * &x + &br.feedforward[k];
        let next = kernels.propagate(&x, &u) + &st.offset;
        states.push(x);
        inputs.push(u);
        x = next;
    }
    states.push(x);
    Trajectory::new(states, inputs, coordinates)
}

/// Both passes with dense kernels.
pub fn solve_classical(problem: &LqOcpProblem) -> Result<Trajectory> {
    problem.ensure_valid()?;
    let kernels = DenseKernels::for_problem(problem);
    let br = backward_pass(problem, &kernels, false)?;
    forward_pass_with(problem, &br, &kernels, Coordinates::Original)
}
