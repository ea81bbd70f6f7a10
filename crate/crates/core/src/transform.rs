//! Stage data transformations: original problem → controllable part →
//! Brunovsky coordinates, and the way back.
//!
//! Every per-stage computation reads only shared constant matrices and its
//! own stage data, so stages are mapped with [`map_stages`] under a thread
//! budget and the results do not depend on that budget.

use nalgebra::{DMatrix, DVector};

use crate::brunovsky::{brunovsky_pair, BrunovskyTransform};
use crate::error::{LqError, Result};
use crate::linalg::{sym_congruence, symmetrize};
use crate::lqocp::{Coordinates, LqOcpProblem, Stage, Terminal, Trajectory};
use crate::parallel::map_stages;
use crate::staircase::KalmanDecomposition;

/// Stage inequalities `C x_k + D u_k ≤ rhs_k` with a per-stage right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct StageInequalities {
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// `rhs_0 .. rhs_{N-1}`
    pub rhs: Vec<DVector<f64>>,
}

impl StageInequalities {
    /// Largest positive violation `max(C x_k + D u_k − rhs_k)` over the stages.
    pub fn violation(&self, traj: &Trajectory) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (k, rhs) in self.rhs.iter().enumerate() {
            let lhs = &self.c * &traj.states[k] + &self.d * &traj.inputs[k];
            worst = worst.max((lhs - rhs).max());
        }
        worst
    }
}

/// The problem restricted to its controllable states.
#[derive(Debug, Clone)]
pub struct ControllableReduction {
    pub kd: KalmanDecomposition,
    /// Uncontrollable states `x_uc_0 .. x_uc_N`.
    pub x_uc: Vec<DVector<f64>>,
    /// Reduced problem over `(A_co, B_co)` with offsets `b_co_k`.
    pub problem: LqOcpProblem,
    pub inequalities: Option<StageInequalities>,
}

/// The problem in Brunovsky coordinates `z = T x_c`, `v = G⁻¹(u − F x_c)`.
#[derive(Debug, Clone)]
pub struct BrunovskyOcp {
    pub bt: BrunovskyTransform,
    /// Problem over `(A_b, B_b)`.
    pub problem: LqOcpProblem,
    pub inequalities: Option<StageInequalities>,
}

/// Inequalities in both reduced coordinate systems.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedInequalities {
    pub controllable: StageInequalities,
    pub brunovsky: StageInequalities,
}

/// `x_uc_{k+1} = A_uc x_uc_k + b_uc_k`, `x_uc_0 = T_2 x_0`.
pub fn uncontrollable_rollout(problem: &LqOcpProblem, kd: &KalmanDecomposition) -> Vec<DVector<f64>> {
    let t2 = kd.t_uncontrollable();
    let mut out = Vec::with_capacity(problem.horizon + 1);
    let mut x = &t2 * &problem.x0;
    for st in &problem.stages {
        let next = &kd.a_uc * &x + &t2 * &st.offset;
        out.push(x);
        x = next;
    }
    out.push(x);
    out
}

fn check_decomposition(problem: &LqOcpProblem, kd: &KalmanDecomposition) -> Result<()> {
    if kd.n() != problem.nx || kd.b_co.ncols() != problem.nu {
        return Err(LqError::Dimension(format!(
            "decomposition is for n_x={}, n_u={}, problem has n_x={}, n_u={}",
            kd.n(),
            kd.b_co.ncols(),
            problem.nx,
            problem.nu
        )));
    }
    Ok(())
}

/// Cost data with the uncontrollable states substituted as known values:
///
/// ```text
/// Q_c = T_1 Q T_1ᵀ      S_c = S T_1ᵀ
/// q_c = T_1 (q + Q T_2ᵀ x_uc)      r_c = r + S T_2ᵀ x_uc
/// b_co = T_1 b + A_12 x_uc
/// ```
pub fn reduce_to_controllable(
    problem: &LqOcpProblem,
    kd: &KalmanDecomposition,
    thread_budget: usize,
) -> Result<ControllableReduction> {
    check_decomposition(problem, kd)?;
    let x_uc = uncontrollable_rollout(problem, kd);
    let t1 = kd.t_controllable();
    let t1t = t1.transpose();
    let t2t = kd.t_uncontrollable().transpose();

    let stages = map_stages(problem.horizon, thread_budget, |k| {
        let st = &problem.stages[k];
        let full_uc = &t2t * &x_uc[k];
        let mut q = sym_congruence(&st.q, &t1t);
        symmetrize(&mut q);
        Stage {
            q,
            r: st.r.clone(),
            s: &st.s * &t1t,
            q_lin: &t1 * (&st.q_lin + &st.q * &full_uc),
            r_lin: &st.r_lin + &st.s * &full_uc,
            offset: &t1 * &st.offset + &kd.a_12 * &x_uc[k],
        }
    });
    let term_uc = &t2t * &x_uc[problem.horizon];
    let mut qn = sym_congruence(&problem.terminal.q, &t1t);
    symmetrize(&mut qn);
    let terminal = Terminal {
        q: qn,
        q_lin: &t1 * (&problem.terminal.q_lin + &problem.terminal.q * term_uc),
    };
    let reduced = LqOcpProblem {
        nx: kd.n_c(),
        nu: problem.nu,
        horizon: problem.horizon,
        a: kd.a_co.clone(),
        b: kd.b_co.clone(),
        stages,
        terminal,
        x0: &t1 * &problem.x0,
        inequality: None,
    };
    let inequalities = problem.inequality.as_ref().map(|ineq| {
        let c_uc = &ineq.c * &t2t;
        StageInequalities {
            c: &ineq.c * &t1t,
            d: ineq.d.clone(),
            rhs: (0..problem.horizon).map(|k| &ineq.rhs - &c_uc * &x_uc[k]).collect(),
        }
    });
    Ok(ControllableReduction {
        kd: kd.clone(),
        x_uc,
        problem: reduced,
        inequalities,
    })
}

/// Constant maps shared by every stage: `W` takes controllable-part
/// coordinates to Brunovsky coordinates, `Φ = F T⁻¹` is the feedback seen
/// from `z`.
struct StageMaps<'a> {
    bt: &'a BrunovskyTransform,
    phi: DMatrix<f64>,
    g_t: DMatrix<f64>,
}

impl<'a> StageMaps<'a> {
    fn new(bt: &'a BrunovskyTransform) -> Self {
        StageMaps {
            phi: &bt.f * &bt.t_inv,
            g_t: bt.g.transpose(),
            bt,
        }
    }

    /// Cost rewrite for `u = Φ z + G v`, given `X = (state map)ᵀ Q (state map)`,
    /// `SW = S · (state map)` and the linear parts already in `z` coordinates
    /// for the state and in `u` coordinates for the input.
    fn stage(&self, xqx: DMatrix<f64>, sw: DMatrix<f64>, r: &DMatrix<f64>, q_z: DVector<f64>, r_u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let r_phi = r * &self.phi;
        let cross = &sw + &r_phi;
        let phi_s = self.phi.tr_mul(&sw);
        let mut q = xqx + self.phi.tr_mul(&r_phi) + &phi_s + phi_s.transpose();
        symmetrize(&mut q);
        let s = &self.g_t * &cross;
        let mut r_new = &self.g_t * r * &self.bt.g;
        symmetrize(&mut r_new);
        let q_lin = q_z + self.phi.tr_mul(r_u);
        let r_lin = &self.g_t * r_u;
        (q, s, r_new, q_lin, r_lin)
    }
}

fn brunovsky_problem(
    nu: usize,
    horizon: usize,
    bt: &BrunovskyTransform,
    stages: Vec<Stage>,
    terminal: Terminal,
    z0: DVector<f64>,
) -> Result<LqOcpProblem> {
    let (a, b) = brunovsky_pair(&bt.mu)?;
    Ok(LqOcpProblem {
        nx: bt.dim(),
        nu,
        horizon,
        a,
        b,
        stages,
        terminal,
        x0: z0,
        inequality: None,
    })
}

/// Cost and offset data in Brunovsky coordinates:
///
/// ```text
/// Q̃ = T⁻ᵀ(Q_c + S_cᵀF + FᵀS_c + FᵀRF)T⁻¹    S̃ = Gᵀ(S_c + RF)T⁻¹
/// R̃ = GᵀRG    q̃ = T⁻ᵀ(q_c + Fᵀr_c)    r̃ = Gᵀr_c    b̃ = T b_co
/// ```
pub fn to_brunovsky_ocp(red: &ControllableReduction, bt: &BrunovskyTransform, thread_budget: usize) -> Result<BrunovskyOcp> {
    let p = &red.problem;
    if bt.dim() != p.nx || bt.mu.len() != p.nu {
        return Err(LqError::Dimension(format!(
            "transform is for n_c={}, n_u={}, reduced problem has n_c={}, n_u={}",
            bt.dim(),
            bt.mu.len(),
            p.nx,
            p.nu
        )));
    }
    let maps = StageMaps::new(bt);
    let t_inv_t = bt.t_inv.transpose();
    let stages = map_stages(p.horizon, thread_budget, |k| {
        let st = &p.stages[k];
        let xqx = sym_congruence(&st.q, &bt.t_inv);
        let sw = &st.s * &bt.t_inv;
        let q_z = &t_inv_t * &st.q_lin;
        let (q, s, r, q_lin, r_lin) = maps.stage(xqx, sw, &st.r, q_z, &st.r_lin);
        Stage {
            q,
            r,
            s,
            q_lin,
            r_lin,
            offset: &bt.t * &st.offset,
        }
    });
    let mut qn = sym_congruence(&p.terminal.q, &bt.t_inv);
    symmetrize(&mut qn);
    let terminal = Terminal {
        q: qn,
        q_lin: &t_inv_t * &p.terminal.q_lin,
    };
    let problem = brunovsky_problem(p.nu, p.horizon, bt, stages, terminal, &bt.t * &p.x0)?;
    let inequalities = red.inequalities.as_ref().map(|ineq| brunovsky_inequalities(ineq, bt));
    Ok(BrunovskyOcp {
        bt: bt.clone(),
        problem,
        inequalities,
    })
}

fn brunovsky_inequalities(ineq: &StageInequalities, bt: &BrunovskyTransform) -> StageInequalities {
    StageInequalities {
        c: (&ineq.c + &ineq.d * &bt.f) * &bt.t_inv,
        d: &ineq.d * &bt.g,
        rhs: ineq.rhs.clone(),
    }
}

/// Uncontrollable rollout plus the Brunovsky-coordinate problem built in one
/// pass from the original stage data, composing both state maps into
/// `W = T_1ᵀ T⁻¹` first. Equal to [`reduce_to_controllable`] followed by
/// [`to_brunovsky_ocp`] up to rounding, with half the cubic work per stage.
pub fn to_brunovsky_ocp_direct(
    problem: &LqOcpProblem,
    kd: &KalmanDecomposition,
    bt: &BrunovskyTransform,
    thread_budget: usize,
) -> Result<(Vec<DVector<f64>>, BrunovskyOcp)> {
    check_decomposition(problem, kd)?;
    if bt.dim() != kd.n_c() || bt.mu.len() != problem.nu {
        return Err(LqError::Dimension(format!(
            "transform is for n_c={}, decomposition has n_c={}",
            bt.dim(),
            kd.n_c()
        )));
    }
    let x_uc = uncontrollable_rollout(problem, kd);
    let t1 = kd.t_controllable();
    let t2t = kd.t_uncontrollable().transpose();
    let w = t1.tr_mul(&bt.t_inv);
    let wt = w.transpose();
    let t_t1 = &bt.t * &t1;
    let t_a12 = &bt.t * &kd.a_12;
    let maps = StageMaps::new(bt);

    let stages = map_stages(problem.horizon, thread_budget, |k| {
        let st = &problem.stages[k];
        let full_uc = &t2t * &x_uc[k];
        let xqx = sym_congruence(&st.q, &w);
        let sw = &st.s * &w;
        let q_z = &wt * (&st.q_lin + &st.q * &full_uc);
        let r_u = &st.r_lin + &st.s * &full_uc;
        let (q, s, r, q_lin, r_lin) = maps.stage(xqx, sw, &st.r, q_z, &r_u);
        Stage {
            q,
            r,
            s,
            q_lin,
            r_lin,
            offset: &t_t1 * &st.offset + &t_a12 * &x_uc[k],
        }
    });
    let term_uc = &t2t * &x_uc[problem.horizon];
    let mut qn = sym_congruence(&problem.terminal.q, &w);
    symmetrize(&mut qn);
    let terminal = Terminal {
        q: qn,
        q_lin: &wt * (&problem.terminal.q_lin + &problem.terminal.q * term_uc),
    };
    let z0 = &t_t1 * &problem.x0;
    let out = brunovsky_problem(problem.nu, problem.horizon, bt, stages, terminal, z0)?;
    let inequalities = problem.inequality.as_ref().map(|ineq| {
        let c_uc = &ineq.c * &t2t;
        let reduced = StageInequalities {
            c: &ineq.c * t1.transpose(),
            d: ineq.d.clone(),
            rhs: (0..problem.horizon).map(|k| &ineq.rhs - &c_uc * &x_uc[k]).collect(),
        };
        brunovsky_inequalities(&reduced, bt)
    });
    Ok((
        x_uc,
        BrunovskyOcp {
            bt: bt.clone(),
            problem: out,
            inequalities,
        },
    ))
}

/// Overwrites the linear data (`q̃_k`, `r̃_k`, `b̃_k`, `q̃_N`, `z_0`) of
/// `target`, a problem produced by [`to_brunovsky_ocp_direct`], from the
/// linear data of `problem`. Only matrix-vector products per stage; the
/// quadratic data of `problem` must be the data `target` was built from.
/// Returns the uncontrollable rollout.
pub fn retarget_linear_data(
    problem: &LqOcpProblem,
    kd: &KalmanDecomposition,
    bt: &BrunovskyTransform,
    target: &mut LqOcpProblem,
    thread_budget: usize,
) -> Result<Vec<DVector<f64>>> {
    check_decomposition(problem, kd)?;
    if target.nx != bt.dim() || target.nu != problem.nu || target.horizon != problem.horizon {
        return Err(LqError::Dimension(format!(
            "target is n_x={}, n_u={}, N={}; expected n_x={}, n_u={}, N={}",
            target.nx,
            target.nu,
            target.horizon,
            bt.dim(),
            problem.nu,
            problem.horizon
        )));
    }
    let x_uc = uncontrollable_rollout(problem, kd);
    let t1 = kd.t_controllable();
    let t2t = kd.t_uncontrollable().transpose();
    let w = t1.tr_mul(&bt.t_inv);
    let t_t1 = &bt.t * &t1;
    let t_a12 = &bt.t * &kd.a_12;
    let phi = &bt.f * &bt.t_inv;
    let has_uc = kd.n_uc() > 0;

    let linear = map_stages(problem.horizon, thread_budget, |k| {
        let st = &problem.stages[k];
        let (q_x, r_u) = if has_uc {
            let full_uc = &t2t * &x_uc[k];
            (&st.q_lin + &st.q * &full_uc, &st.r_lin + &st.s * &full_uc)
        } else {
            (st.q_lin.clone(), st.r_lin.clone())
        };
        let q_lin = w.tr_mul(&q_x) + phi.tr_mul(&r_u);
        let r_lin = bt.g.tr_mul(&r_u);
        let offset = &t_t1 * &st.offset + &t_a12 * &x_uc[k];
        (q_lin, r_lin, offset)
    });
    for (st, (q_lin, r_lin, offset)) in target.stages.iter_mut().zip(linear) {
        st.q_lin = q_lin;
        st.r_lin = r_lin;
        st.offset = offset;
    }
    let term = &problem.terminal.q_lin + &problem.terminal.q * (&t2t * &x_uc[problem.horizon]);
    target.terminal.q_lin = w.tr_mul(&term);
    target.x0 = &t_t1 * &problem.x0;
    Ok(x_uc)
}

/// Inequalities of the original problem in controllable and Brunovsky
/// coordinates; `None` when the problem has none.
pub fn transform_inequalities(red: &ControllableReduction, bt: &BrunovskyTransform) -> Option<TransportedInequalities> {
    red.inequalities.as_ref().map(|ineq| TransportedInequalities {
        controllable: ineq.clone(),
        brunovsky: brunovsky_inequalities(ineq, bt),
    })
}

/// Maps an original-coordinate trajectory to controllable coordinates.
pub fn to_controllable_coordinates(traj: &Trajectory, kd: &KalmanDecomposition) -> Result<Trajectory> {
    let t1 = kd.t_controllable();
    Trajectory::new(
        traj.states.iter().map(|x| &t1 * x).collect(),
        traj.inputs.clone(),
        Coordinates::Controllable,
    )
}

/// Maps a controllable-coordinate trajectory to Brunovsky coordinates:
/// `z = T x_c`, `v = G⁻¹(u − F x_c)`.
pub fn to_brunovsky_coordinates(traj: &Trajectory, bt: &BrunovskyTransform) -> Result<Trajectory> {
    Trajectory::new(
        traj.states.iter().map(|x| &bt.t * x).collect(),
        traj.inputs
            .iter()
            .zip(&traj.states)
            .map(|(u, x)| &bt.g_inv * (u - &bt.f * x))
            .collect(),
        Coordinates::Brunovsky,
    )
}

/// Brunovsky-coordinate trajectory back to controllable coordinates:
/// `x_c = T⁻¹z`, `u = F x_c + G v`.
pub fn recover_controllable(z_traj: &Trajectory, bt: &BrunovskyTransform, thread_budget: usize) -> Result<Trajectory> {
    let n = z_traj.horizon();
    let states = map_stages(n + 1, thread_budget, |k| &bt.t_inv * &z_traj.states[k]);
    let inputs = map_stages(n, thread_budget, |k| &bt.f * &states[k] + &bt.g * &z_traj.inputs[k]);
    Trajectory::new(states, inputs, Coordinates::Controllable)
}

/// Brunovsky-coordinate trajectory back to original coordinates:
/// `x_c = T⁻¹z`, `u = F x_c + G v`, `x = T_kdᵀ [x_c; x_uc]`.
pub fn recover_solution(
    z_traj: &Trajectory,
    bt: &BrunovskyTransform,
    kd: &KalmanDecomposition,
    x_uc: &[DVector<f64>],
    thread_budget: usize,
) -> Result<Trajectory> {
    let n = z_traj.horizon();
    if x_uc.len() != n + 1 || z_traj.states.iter().any(|z| z.len() != bt.dim()) {
        return Err(LqError::Dimension(format!(
            "trajectory of horizon {n} with {} uncontrollable states",
            x_uc.len()
        )));
    }
    let t1t = kd.t_controllable().transpose();
    let t2t = kd.t_uncontrollable().transpose();
    let t_orig = t1t * &bt.t_inv;
    let per_stage = map_stages(n + 1, thread_budget, |k| {
        let z = &z_traj.states[k];
        let x = &t_orig * z + &t2t * &x_uc[k];
        let u = (k < n).then(|| &bt.f * (&bt.t_inv * z) + &bt.g * &z_traj.inputs[k]);
        (x, u)
    });
    let mut states = Vec::with_capacity(n + 1);
    let mut inputs = Vec::with_capacity(n);
    for (x, u) in per_stage {
        states.push(x);
        inputs.extend(u);
    }
    Trajectory::new(states, inputs, Coordinates::Original)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brunovsky::brunovsky_transform;
    use crate::lqocp::ProblemGenerator;
    use crate::staircase::staircase_decompose;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn decoupled_uncontrollable_mode_doubles() {
        let a = m(2, 2, &[0.0, 0.0, 0.0, 2.0]);
        let b = m(2, 1, &[1.0, 0.0]);
        let mut p = LqOcpProblem::time_invariant(
            a.clone(),
            b.clone(),
            DMatrix::identity(2, 2),
            DMatrix::identity(1, 1),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 1.0]),
            4,
        );
        p.stages.iter_mut().for_each(|s| s.offset.fill(0.0));
        let kd = staircase_decompose(&a, &b, 1e-9).unwrap();
        let red = reduce_to_controllable(&p, &kd, 1).unwrap();
        for (k, x) in red.x_uc.iter().enumerate() {
            assert_eq!(x[0].abs(), 2f64.powi(k as i32));
        }
        assert!(red.problem.stages.iter().all(|s| s.offset.amax() == 0.0));
    }

    #[test]
    fn identity_transforms_leave_data_alone() {
        let mu = [2, 1];
        let (a, b) = brunovsky_pair(&mu).unwrap();
        let mut p = ProblemGenerator::new(3, 2, 3, 2).full().generate().unwrap();
        p.a = a;
        p.b = b;
        let bt = BrunovskyTransform::identity(&mu);
        let kd = KalmanDecomposition {
            t: DMatrix::identity(3, 3),
            a_co: p.a.clone(),
            a_12: DMatrix::zeros(3, 0),
            a_uc: DMatrix::zeros(0, 0),
            b_co: p.b.clone(),
            block_sizes: vec![2, 1],
            discarded: 0.0,
        };
        let red = reduce_to_controllable(&p, &kd, 1).unwrap();
        let ocp = to_brunovsky_ocp(&red, &bt, 1).unwrap();
        for (a, b) in ocp.problem.stages.iter().zip(&p.stages) {
            assert!((&a.q - &b.q).amax() < 1e-14);
            assert_eq!(a.r, b.r);
            assert_eq!(a.s, b.s);
            assert_eq!(a.q_lin, b.q_lin);
            assert_eq!(a.offset, b.offset);
        }
    }

    #[test]
    fn retargeting_reproduces_linear_data() {
        let p = ProblemGenerator::new(6, 2, 4, 21).controllable_dim(4).full().generate().unwrap();
        let kd = staircase_decompose(&p.a, &p.b, 1e-9).unwrap();
        let bt = brunovsky_transform(&kd.a_co, &kd.b_co, 1e-9).unwrap();
        let (x_uc, ocp) = to_brunovsky_ocp_direct(&p, &kd, &bt, 1).unwrap();
        let mut target = ocp.problem.clone();
        for st in &mut target.stages {
            st.q_lin.fill(0.0);
            st.r_lin.fill(0.0);
            st.offset.fill(0.0);
        }
        target.x0.fill(0.0);
        assert_eq!(retarget_linear_data(&p, &kd, &bt, &mut target, 2).unwrap(), x_uc);
        for (a, b) in target.stages.iter().zip(&ocp.problem.stages) {
            assert_eq!(a.q, b.q);
            assert!((&a.q_lin - &b.q_lin).amax() <= 1e-10 * b.q_lin.amax().max(1.0));
            assert!((&a.r_lin - &b.r_lin).amax() <= 1e-10 * b.r_lin.amax().max(1.0));
            assert!((&a.offset - &b.offset).amax() <= 1e-12 * b.offset.amax().max(1.0));
        }
        assert!((&target.terminal.q_lin - &ocp.problem.terminal.q_lin).amax() <= 1e-10 * ocp.problem.terminal.q_lin.amax().max(1.0));
        assert_eq!(target.x0, ocp.problem.x0);
    }

    #[test]
    fn fused_path_matches_two_steps() {
        let p = ProblemGenerator::new(7, 2, 5, 13).controllable_dim(5).full().inequalities(3).generate().unwrap();
        let kd = staircase_decompose(&p.a, &p.b, 1e-9).unwrap();
        let bt = brunovsky_transform(&kd.a_co, &kd.b_co, 1e-9).unwrap();
        let red = reduce_to_controllable(&p, &kd, 1).unwrap();
        let two = to_brunovsky_ocp(&red, &bt, 1).unwrap();
        let (x_uc, one) = to_brunovsky_ocp_direct(&p, &kd, &bt, 3).unwrap();
        assert_eq!(x_uc, red.x_uc);
        let scale = two.problem.stages[0].q.amax().max(1.0);
        for (a, b) in one.problem.stages.iter().zip(&two.problem.stages) {
            assert!((&a.q - &b.q).amax() < 1e-9 * scale);
            assert!((&a.s - &b.s).amax() < 1e-9 * scale);
            assert!((&a.r - &b.r).amax() < 1e-12 * scale);
            assert!((&a.q_lin - &b.q_lin).amax() < 1e-9 * scale);
            assert!((&a.offset - &b.offset).amax() < 1e-9 * a.offset.amax().max(1.0));
        }
        let (ia, ib) = (one.inequalities.unwrap(), two.inequalities.unwrap());
        assert!((&ia.c - &ib.c).amax() < 1e-9 * ia.c.amax().max(1.0));
    }

    #[test]
    fn input_box_picks_up_state_coupling() {
        let a = m(2, 2, &[0.0, -1.0, 1.0, -1.0]);
        let b = m(2, 1, &[1.0, 0.0]);
        let mut p = LqOcpProblem::time_invariant(
            a.clone(),
            b.clone(),
            DMatrix::identity(2, 2),
            DMatrix::identity(1, 1),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 0.0]),
            2,
        );
        p.inequality = Some(crate::lqocp::Inequality {
            c: DMatrix::zeros(2, 2),
            d: m(2, 1, &[1.0, -1.0]),
            rhs: DVector::from_vec(vec![1.0, 1.0]),
        });
        let kd = staircase_decompose(&a, &b, 1e-9).unwrap();
        let bt = brunovsky_transform(&kd.a_co, &kd.b_co, 1e-9).unwrap();
        let red = reduce_to_controllable(&p, &kd, 1).unwrap();
        let ti = transform_inequalities(&red, &bt).unwrap();
        assert!(ti.brunovsky.c.amax() > 0.1);
        assert_eq!(ti.brunovsky.rhs[0], DVector::from_vec(vec![1.0, 1.0]));
    }

    #[test]
    fn recovered_example_trajectory_uses_deadbeat_gain() {
        let a = m(2, 2, &[0.0, -1.0, 1.0, -1.0]);
        let b = m(2, 1, &[1.0, 0.0]);
        let p = LqOcpProblem::time_invariant(
            a.clone(),
            b.clone(),
            DMatrix::identity(2, 2),
            DMatrix::identity(1, 1),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![0.3, -0.7]),
            3,
        );
        let kd = staircase_decompose(&a, &b, 1e-9).unwrap();
        let bt = brunovsky_transform(&kd.a_co, &kd.b_co, 1e-9).unwrap();
        let (x_uc, ocp) = to_brunovsky_ocp_direct(&p, &kd, &bt, 1).unwrap();
        // arbitrary inputs, states simulated in Brunovsky coordinates
        let vs: Vec<DVector<f64>> = [0.5, -1.0, 2.0].iter().map(|&v| DVector::from_element(1, v)).collect();
        let mut zs = vec![ocp.problem.x0.clone()];
        for v in &vs {
            let z = zs.last().unwrap();
            zs.push(&ocp.problem.a * z + &ocp.problem.b * v);
        }
        let zt = Trajectory::new(zs, vs.clone(), Coordinates::Brunovsky).unwrap();
        let x = recover_solution(&zt, &bt, &kd, &x_uc, 2).unwrap();
        assert!(p.dynamics_residual(&x) < 1e-12);
        for k in 0..3 {
            let expect = x.states[k][0] + vs[k][0];
            assert!((x.inputs[k][0] - expect).abs() < 1e-12);
        }
    }
}
