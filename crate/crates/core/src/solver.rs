//! One-call solve with either recursion.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::brunovsky::{brunovsky_transform, BrunovskyKernels};
use crate::error::{LqError, Phase, Result};
use crate::lqocp::{Coordinates, KktResidual, LqOcpProblem, Trajectory};
use crate::riccati::{
    backward_pass, backward_pass_linear, forward_pass_with, DenseKernels, KernelKind, QuadraticsProvider,
};
use crate::staircase::{staircase_decompose, KalmanDecomposition, DEFAULT_RANK_TOL};
use crate::transform::{recover_solution, retarget_linear_data, to_brunovsky_ocp_direct};

/// Magnitude of the uncontrollable states above which a warning is issued.
pub const UNCONTROLLABLE_WARN: f64 = 1e12;

/// Default number of refinement sweeps for the Brunovsky method.
pub const DEFAULT_REFINEMENT_STEPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Classical,
    Brunovsky,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Classical, Method::Brunovsky];

    pub fn name(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Brunovsky => "brunovsky",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classical" => Ok(Method::Classical),
            "brunovsky" => Ok(Method::Brunovsky),
            other => Err(format!("unknown method `{other}` (expected classical or brunovsky)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    /// Worker threads for the stage-parallel phases, at least one.
    pub thread_budget: usize,
    pub rank_tol: f64,
    pub collect_timings: bool,
    /// Iterative refinement sweeps after a Brunovsky solve. Each sweep
    /// evaluates the optimality residual in original coordinates and solves
    /// for a correction with the stored factorization, at matrix-vector cost
    /// per stage. A sweep is kept only if it lowers the residual.
    pub refinement_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Brunovsky,
            thread_budget: std::thread::available_parallelism().map_or(1, |n| n.get()),
            rank_tol: DEFAULT_RANK_TOL,
            collect_timings: true,
            refinement_steps: DEFAULT_REFINEMENT_STEPS,
        }
    }
}

impl SolveOptions {
    pub fn new(method: Method) -> Self {
        SolveOptions {
            method,
            ..Default::default()
        }
    }

    pub fn threads(mut self, thread_budget: usize) -> Self {
        self.thread_budget = thread_budget;
        self
    }

    pub fn refinement(mut self, steps: usize) -> Self {
        self.refinement_steps = steps;
        self
    }
}

/// Wall time per phase, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub decompose: f64,
    pub transform: f64,
    pub riccati: f64,
    pub recover: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.decompose + self.transform + self.riccati + self.recover
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveMetadata {
    pub nx: usize,
    /// Controllable dimension; `None` for the classical method, which does
    /// not decompose the system.
    pub nx_c: Option<usize>,
    pub nu: usize,
    pub horizon: usize,
    /// Controllability indices (empty for the classical method).
    pub mu: Vec<usize>,
    /// Condition estimate of the Brunovsky state map.
    pub condition: Option<f64>,
    /// Refinement sweeps that were kept.
    pub refinements: usize,
    /// `max |·|` of the optimality residual of the returned trajectory,
    /// when it was evaluated.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Solution in original coordinates.
    pub trajectory: Trajectory,
    pub timings: Option<PhaseTimings>,
    pub meta: SolveMetadata,
    /// Kernels used by the Riccati phase and how often they were called.
    pub kernel: KernelKind,
    pub quadratics_calls: usize,
    pub warnings: Vec<String>,
}

struct Clock {
    on: bool,
    last: Instant,
}

impl Clock {
    fn new(on: bool) -> Self {
        Clock { on, last: Instant::now() }
    }

    fn lap(&mut self) -> f64 {
        if !self.on {
            return 0.0;
        }
        let now = Instant::now();
        let dt = now.duration_since(self.last).as_secs_f64();
        self.last = now;
        dt
    }
}

/// Solves the problem with the requested recursion. Errors raised inside the
/// pipeline carry the phase they came from.
pub fn solve(problem: &LqOcpProblem, opts: &SolveOptions) -> Result<SolveReport> {
    if opts.thread_budget == 0 {
        return Err(LqError::Invalid("thread budget must be at least 1".into()));
    }
    problem.ensure_valid()?;
    match opts.method {
        Method::Classical => solve_dense(problem, opts),
        Method::Brunovsky => solve_chain(problem, opts),
    }
}

fn solve_dense(problem: &LqOcpProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let mut clock = Clock::new(opts.collect_timings);
    let kernels = DenseKernels::for_problem(problem);
    let br = backward_pass(problem, &kernels, false).map_err(|e| e.in_phase(Phase::Riccati))?;
    let trajectory =
        forward_pass_with(problem, &br, &kernels, Coordinates::Original).map_err(|e| e.in_phase(Phase::Riccati))?;
    let riccati = clock.lap();
    Ok(SolveReport {
        trajectory,
        timings: opts.collect_timings.then_some(PhaseTimings {
            riccati,
            ..Default::default()
        }),
        meta: SolveMetadata {
            nx: problem.nx,
            nx_c: None,
            nu: problem.nu,
            horizon: problem.horizon,
            mu: Vec::new(),
            condition: None,
            refinements: 0,
            residual: None,
        },
        kernel: kernels.kind(),
        quadratics_calls: kernels.calls(),
        warnings: Vec::new(),
    })
}

fn solve_chain(problem: &LqOcpProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let mut clock = Clock::new(opts.collect_timings);
    let threads = opts.thread_budget;

    let kd = staircase_decompose(&problem.a, &problem.b, opts.rank_tol).map_err(|e| e.in_phase(Phase::Decompose))?;
    let bt = brunovsky_transform(&kd.a_co, &kd.b_co, opts.rank_tol).map_err(|e| e.in_phase(Phase::Decompose))?;
    let decompose = clock.lap();

    let (x_uc, ocp) = to_brunovsky_ocp_direct(problem, &kd, &bt, threads).map_err(|e| e.in_phase(Phase::Transform))?;
    let transform = clock.lap();

    let kernels = BrunovskyKernels::new(&bt.mu).map_err(|e| e.in_phase(Phase::Riccati))?;
    let refine = opts.refinement_steps > 0;
    let mut br = backward_pass(&ocp.problem, &kernels, refine).map_err(|e| e.in_phase(Phase::Riccati))?;
    let z_traj = forward_pass_with(&ocp.problem, &br, &kernels, Coordinates::Brunovsky)
        .map_err(|e| e.in_phase(Phase::Riccati))?;
    let riccati = clock.lap();

    let mut trajectory =
        recover_solution(&z_traj, &bt, &kd, &x_uc, threads).map_err(|e| e.in_phase(Phase::Recover))?;
    let mut refinements = 0;
    let mut residual = None;
    if refine {
        let mut ocp_problem = ocp.problem;
        let mut chain = Chain {
            kd: &kd,
            bt: &bt,
            kernels: &kernels,
            br: &mut br,
            target: &mut ocp_problem,
            threads,
        };
        let (steps, res) = refine_solution(problem, &mut trajectory, &mut chain, opts.refinement_steps)
            .map_err(|e| e.in_phase(Phase::Recover))?;
        refinements = steps;
        residual = Some(res);
    }
    let recover = clock.lap();

    let mut warnings = Vec::new();
    let peak = x_uc.iter().map(|x| x.amax()).fold(0.0, f64::max);
    if peak > UNCONTROLLABLE_WARN || !peak.is_finite() {
        warnings.push(format!(
            "uncontrollable states reach {peak:.3e} (above {UNCONTROLLABLE_WARN:.0e}); results may be inaccurate"
        ));
    }

    Ok(SolveReport {
        trajectory,
        timings: opts.collect_timings.then_some(PhaseTimings {
            decompose,
            transform,
            riccati,
            recover,
        }),
        meta: SolveMetadata {
            nx: problem.nx,
            nx_c: Some(kd.n_c()),
            nu: problem.nu,
            horizon: problem.horizon,
            condition: Some(bt.condition),
            mu: bt.mu,
            refinements,
            residual,
        },
        kernel: kernels.kind(),
        quadratics_calls: kernels.calls(),
        warnings,
    })
}

/// Everything needed to solve another problem with the same quadratic data
/// in Brunovsky coordinates.
struct Chain<'a> {
    kd: &'a KalmanDecomposition,
    bt: &'a crate::brunovsky::BrunovskyTransform,
    kernels: &'a BrunovskyKernels,
    br: &'a mut crate::riccati::RiccatiBackwardResult,
    target: &'a mut LqOcpProblem,
    threads: usize,
}

impl Chain<'_> {
    /// Solves `problem` (same quadratic data, new linear data) with the
    /// stored factorization.
    fn solve_linear(&mut self, problem: &LqOcpProblem) -> Result<Trajectory> {
        let x_uc = retarget_linear_data(problem, self.kd, self.bt, self.target, self.threads)?;
        self.br.feedforward = backward_pass_linear(self.target, self.br, self.kernels)?;
        let z = forward_pass_with(self.target, self.br, self.kernels, Coordinates::Brunovsky)?;
        recover_solution(&z, self.bt, self.kd, &x_uc, self.threads)
    }
}

/// Same quadratic data as `problem`; linear data taken from a residual so
/// that the solution is the correction of the trajectory it came from.
fn correction_problem(problem: &LqOcpProblem, res: KktResidual) -> LqOcpProblem {
    let mut corr = problem.clone();
    for ((st, r_u), r_b) in corr.stages.iter_mut().zip(res.input).zip(res.dynamics) {
        st.q_lin.fill(0.0);
        st.r_lin = r_u;
        st.offset = r_b;
    }
    corr.terminal.q_lin.fill(0.0);
    corr.x0 = res.initial;
    corr.inequality = None;
    corr
}

fn add_trajectory(traj: &Trajectory, delta: &Trajectory) -> Result<Trajectory> {
    Trajectory::new(
        traj.states.iter().zip(&delta.states).map(|(x, d)| x + d).collect(),
        traj.inputs.iter().zip(&delta.inputs).map(|(u, d)| u + d).collect(),
        Coordinates::Original,
    )
}

/// Iterative refinement; returns the sweeps kept and the final residual.
fn refine_solution(
    problem: &LqOcpProblem,
    traj: &mut Trajectory,
    chain: &mut Chain<'_>,
    max_steps: usize,
) -> Result<(usize, f64)> {
    let mut res = problem.kkt_residual(traj);
    let mut size = res.max_abs();
    let mut kept = 0;
    while kept < max_steps && size > 0.0 {
        let delta = chain.solve_linear(&correction_problem(problem, res.clone()))?;
        let candidate = add_trajectory(traj, &delta)?;
        let cand_res = problem.kkt_residual(&candidate);
        let cand_size = cand_res.max_abs();
        if !(cand_size < size) {
            break;
        }
        *traj = candidate;
        res = cand_res;
        size = cand_size;
        kept += 1;
    }
    Ok((kept, size))
}
