//! Solvers for finite-horizon linear-quadratic optimal control over a
//! linear time-invariant system.
//!
//! Two recursions are provided:
//!
//! * the classical Riccati recursion with dense `AᵀPA`-type products, and
//! * the Brunovsky recursion, which moves the problem onto its controllable
//!   part, then into Brunovsky coordinates where `A` and `B` are chains of
//!   integrators. There the quadratic products are plain index-shifted copies
//!   of the cost-to-go matrix, and only the stage-wise data transformation
//!   (parallel across stages) carries cubic cost.
//!
//! ```
//! use brunovsky_riccati::{random_problem, solve, Method, SolveOptions};
//!
//! let problem = random_problem(8, 2, 20, 7).unwrap();
//! let fast = solve(&problem, &SolveOptions::new(Method::Brunovsky)).unwrap();
//! let dense = solve(&problem, &SolveOptions::new(Method::Classical)).unwrap();
//! assert!(fast.trajectory.relative_error(&dense.trajectory) < 1e-7);
//! ```

pub mod bench;
pub mod brunovsky;
pub mod error;
pub mod linalg;
pub mod lqocp;
pub mod oracle;
pub mod parallel;
pub mod riccati;
pub mod solver;
pub mod staircase;
pub mod transform;

pub use brunovsky::{
    brunovsky_pair, brunovsky_transform, canonical_to_brunovsky, structured_quadratics, to_controllable_canonical,
    BrunovskyKernels, BrunovskyTransform, CanonicalForm, StructuredQuadratics,
};
pub use error::{LqError, Phase, ProblemIoError};
pub use lqocp::{
    load_problem, random_problem, save_problem, validate, Coordinates, Inequality, KktResidual, LqOcpProblem, ProblemGenerator,
    Stage, Terminal, Trajectory, ValidationReport,
};
pub use oracle::{assemble_kkt, kkt_solve, KktSystem};
pub use riccati::{backward_pass, forward_pass, solve_classical, DenseKernels, QuadraticsProvider, RiccatiBackwardResult};
pub use solver::{solve, Method, SolveOptions, SolveReport};
pub use staircase::{controllability_indices, staircase_decompose, KalmanDecomposition};
pub use transform::{
    recover_solution, reduce_to_controllable, to_brunovsky_ocp, transform_inequalities, BrunovskyOcp,
    ControllableReduction,
};
