//! Seeded random instances.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Inequality, LqOcpProblem, Stage, Terminal};
use crate::error::{LqError, Result};
use crate::linalg::symmetrize;
use crate::staircase::{staircase_decompose, DEFAULT_RANK_TOL};

/// Resampling budget for the controllable pair.
pub const GENERATION_ATTEMPTS: usize = 100;

/// Shift added to every generated `R_k`.
pub const R_REGULARIZATION: f64 = 1e-3;

/// Knobs for random instances. `random_problem` uses the defaults: a
/// controllable pair, pure quadratic stage costs, zero offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemGenerator {
    pub nx: usize,
    pub nu: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Size of the controllable subspace; `None` means fully controllable.
    pub controllable_dim: Option<usize>,
    /// Draw nonzero `S_k` (joint stage Hessian kept PSD).
    pub cross_terms: bool,
    /// Draw nonzero `q_k`, `r_k`, `q_N`.
    pub linear_terms: bool,
    /// Draw nonzero `b_k`.
    pub offsets: bool,
    /// Number of inequality rows; zero gives no inequality block.
    pub inequalities: usize,
}

impl ProblemGenerator {
    pub fn new(nx: usize, nu: usize, horizon: usize, seed: u64) -> Self {
        ProblemGenerator {
            nx,
            nu,
            horizon,
            seed,
            controllable_dim: None,
            cross_terms: false,
            linear_terms: false,
            offsets: false,
            inequalities: 0,
        }
    }

    /// Turns on cross terms, linear terms and offsets.
    pub fn full(mut self) -> Self {
        self.cross_terms = true;
        self.linear_terms = true;
        self.offsets = true;
        self
    }

    pub fn controllable_dim(mut self, nc: usize) -> Self {
        self.controllable_dim = Some(nc);
        self
    }

    pub fn inequalities(mut self, rows: usize) -> Self {
        self.inequalities = rows;
        self
    }

    pub fn generate(&self) -> Result<LqOcpProblem> {
        let (nx, nu, horizon) = (self.nx, self.nu, self.horizon);
        if nu == 0 || nx < nu || horizon == 0 {
            return Err(LqError::Invalid(format!(
                "random instances need n_x ≥ n_u ≥ 1 and N ≥ 1, got n_x={nx}, n_u={nu}, N={horizon}"
            )));
        }
        let nc = self.controllable_dim.unwrap_or(nx);
        if nc < nu || nc > nx {
            return Err(LqError::Invalid(format!(
                "controllable dimension {nc} must lie in [n_u, n_x] = [{nu}, {nx}]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let (a_co, b_co) = controllable_pair(&mut rng, nc, nu)?;
        let (a, b) = if nc == nx {
            (a_co, b_co)
        } else {
            embed_uncontrollable(&mut rng, a_co, b_co, nx)?
        };

        let mut stages = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let (q, r, s) = if self.cross_terms {
                joint_cost(&mut rng, nx, nu)
            } else {
                (psd(&mut rng, nx), pd_input_weight(&mut rng, nu), DMatrix::zeros(nu, nx))
            };
            let (q_lin, r_lin) = if self.linear_terms {
                (gaussian_vec(&mut rng, nx), gaussian_vec(&mut rng, nu))
            } else {
                (DVector::zeros(nx), DVector::zeros(nu))
            };
            let offset = if self.offsets {
                gaussian_vec(&mut rng, nx)
            } else {
                DVector::zeros(nx)
            };
            stages.push(Stage {
                q,
                r,
                s,
                q_lin,
                r_lin,
                offset,
            });
        }
        let terminal = Terminal {
            q: psd(&mut rng, nx),
            q_lin: if self.linear_terms {
                gaussian_vec(&mut rng, nx)
            } else {
                DVector::zeros(nx)
            },
        };
        let x0 = gaussian_vec(&mut rng, nx);
        let inequality = (self.inequalities > 0).then(|| {
            let rows = self.inequalities;
            Inequality {
                c: gaussian(&mut rng, rows, nx),
                d: gaussian(&mut rng, rows, nu),
                rhs: DVector::from_fn(rows, |_, _| 1.0 + rng.sample::<f64, _>(StandardNormal).abs()),
            }
        });

        Ok(LqOcpProblem {
            nx,
            nu,
            horizon,
            a,
            b,
            stages,
            terminal,
            x0,
            inequality,
        })
    }
}

/// Controllable random instance with pure quadratic costs.
pub fn random_problem(nx: usize, nu: usize, horizon: usize, seed: u64) -> Result<LqOcpProblem> {
    ProblemGenerator::new(nx, nu, horizon, seed).generate()
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// `MᵀM / n`, entries of order one.
fn psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = gaussian(rng, n, n);
    let mut q = m.tr_mul(&m) / n as f64;
    symmetrize(&mut q);
    q
}

fn pd_input_weight(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut r = psd(rng, n);
    for i in 0..n {
        r[(i, i)] += R_REGULARIZATION;
    }
    r
}

/// `[[Q, Sᵀ], [S, R]]` drawn as one PSD matrix, then `R` shifted.
fn joint_cost(rng: &mut ChaCha8Rng, nx: usize, nu: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let h = psd(rng, nx + nu);
    let q = h.view((0, 0), (nx, nx)).into_owned();
    let s = h.view((nx, 0), (nu, nx)).into_owned();
    let mut r = h.view((nx, nx), (nu, nu)).into_owned();
    for i in 0..nu {
        r[(i, i)] += R_REGULARIZATION;
    }
    (q, r, s)
}

fn controllable_pair(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let scale = 1.0 / (n as f64).sqrt();
    for _ in 0..GENERATION_ATTEMPTS {
        let a = gaussian(rng, n, n) * scale;
        let b = gaussian(rng, n, m);
        if staircase_decompose(&a, &b, DEFAULT_RANK_TOL)?.n_c() == n {
            return Ok((a, b));
        }
    }
    Err(LqError::Generation {
        attempts: GENERATION_ATTEMPTS,
    })
}

/// Block upper-triangular pair with an uncontrollable tail, hidden by a
/// random orthogonal change of coordinates. The tail is scaled to spectral
/// radius at most one so that its free motion stays bounded. Redrawn when
/// the rotated pair does not decompose back to the requested dimension.
fn embed_uncontrollable(
    rng: &mut ChaCha8Rng,
    a_co: DMatrix<f64>,
    b_co: DMatrix<f64>,
    n: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let nc = a_co.nrows();
    let nuc = n - nc;
    for _ in 0..GENERATION_ATTEMPTS {
        let mut a_blk = DMatrix::zeros(n, n);
        a_blk.view_mut((0, 0), (nc, nc)).copy_from(&a_co);
        a_blk
            .view_mut((0, nc), (nc, nuc))
            .copy_from(&(gaussian(rng, nc, nuc) / (n as f64).sqrt()));
        let mut a_uc = gaussian(rng, nuc, nuc) / (nuc as f64).sqrt();
        let radius = a_uc
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max);
        if radius > 1.0 {
            a_uc /= radius;
        }
        a_blk.view_mut((nc, nc), (nuc, nuc)).copy_from(&a_uc);
        let mut b_blk = DMatrix::zeros(n, b_co.ncols());
        b_blk.rows_mut(0, nc).copy_from(&b_co);

        let basis = gaussian(rng, n, n).qr().q();
        let a = basis.transpose() * a_blk * &basis;
        let b = basis.transpose() * b_blk;
        if staircase_decompose(&a, &b, DEFAULT_RANK_TOL)?.n_c() == nc {
            return Ok((a, b));
        }
    }
    Err(LqError::Generation {
        attempts: GENERATION_ATTEMPTS,
    })
}
