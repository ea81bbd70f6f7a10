//! Feedback equivalence to Brunovsky form and the copy kernels that replace
//! the dense `AᵀPA`, `BᵀPA`, `BᵀPB` products in Brunovsky coordinates.
//!
//! A controllable pair is taken to the multi-input controllable canonical
//! (companion) form by a state map `T`, after which the free last row of
//! every chain is cancelled by `u = F x + G v`:
//!
//! ```text
//! A_b = T (A_co + B_co F) T⁻¹      B_b = T B_co G
//! ```

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::error::{LqError, Result};
use crate::linalg::{condition_1, max_abs};
use crate::riccati::{KernelKind, QuadraticsProvider};
use crate::staircase::{controllability_indices, greedy_degree_scan, staircase_decompose};

/// Tolerance for entries that the canonical pattern fixes to 0 or 1.
pub const PATTERN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BrunovskyTransform {
    /// Controllability indices, in input order.
    pub mu: Vec<usize>,
    /// State map `z = T x_c`.
    pub t: DMatrix<f64>,
    pub t_inv: DMatrix<f64>,
    /// Deadbeat feedback `F_db` (n_u × n_c).
    pub f: DMatrix<f64>,
    /// Input map `G` (n_u × n_u).
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// 1-norm condition estimate of `T`.
    pub condition: f64,
}

impl BrunovskyTransform {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn nilpotency_index(&self) -> usize {
        self.mu.iter().copied().max().unwrap_or(0)
    }

    /// The transform that maps `(A_b, B_b)` to itself.
    pub fn identity(mu: &[usize]) -> Self {
        let n: usize = mu.iter().sum();
        let m = mu.len();
        BrunovskyTransform {
            mu: mu.to_vec(),
            t: DMatrix::identity(n, n),
            t_inv: DMatrix::identity(n, n),
            f: DMatrix::zeros(m, n),
            g: DMatrix::identity(m, m),
            g_inv: DMatrix::identity(m, m),
            condition: 1.0,
        }
    }
}

/// `Aᵀ P A`, `Bᵀ P A`, `Bᵀ P B` for one cost-to-go matrix `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredQuadratics {
    pub at_p_a: DMatrix<f64>,
    pub bt_p_a: DMatrix<f64>,
    pub bt_p_b: DMatrix<f64>,
}

fn block_offsets(mu: &[usize]) -> Vec<usize> {
    let mut offs = Vec::with_capacity(mu.len());
    let mut acc = 0;
    for &m in mu {
        offs.push(acc);
        acc += m;
    }
    offs
}

fn reject_zero_indices(mu: &[usize]) -> Result<()> {
    match mu.iter().position(|&m| m == 0) {
        Some(input) => Err(LqError::RedundantInput { input }),
        None => Ok(()),
    }
}

/// Block-diagonal chains of integrators with the given sizes.
pub fn brunovsky_pair(mu: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    reject_zero_indices(mu)?;
    let n: usize = mu.iter().sum();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, mu.len());
    for (i, (&m, &o)) in mu.iter().zip(&block_offsets(mu)).enumerate() {
        for k in 0..m - 1 {
            a[(o + k, o + k + 1)] = 1.0;
        }
        b[(o + m - 1, i)] = 1.0;
    }
    Ok((a, b))
}

/// Result of [`to_controllable_canonical`].
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub t: DMatrix<f64>,
    pub t_inv: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub condition: f64,
}

/// Multi-input controllable canonical form `A_ca = T A_co T⁻¹`,
/// `B_ca = T B_co`.
///
/// With `M = [b_1, …, A^{μ_1−1}b_1 | … | b_m, …]` and `q_i` row
/// `μ_1+…+μ_i` of `M⁻¹`, `T` stacks `q_i A^k` for `k < μ_i`. The rows are
/// built on the staircase form of the pair, which makes `M` block triangular
/// in degree order, so `q_i` is found by block substitution and the fixed
/// zeros of `B_ca` come out exactly.
pub fn to_controllable_canonical(a_co: &DMatrix<f64>, b_co: &DMatrix<f64>, mu: &[usize]) -> Result<CanonicalForm> {
    let n = a_co.nrows();
    let m = b_co.ncols();
    if a_co.ncols() != n || b_co.nrows() != n || mu.len() != m {
        return Err(LqError::Dimension(format!(
            "canonical form needs A {n}×{n}, B {n}×{}, {} indices",
            mu.len(),
            m
        )));
    }
    reject_zero_indices(mu)?;
    if mu.iter().sum::<usize>() != n {
        return Err(LqError::Dimension(format!(
            "indices sum to {}, state dimension is {n}",
            mu.iter().sum::<usize>()
        )));
    }

    let kd = staircase_decompose(a_co, b_co, crate::staircase::DEFAULT_RANK_TOL)?;
    if kd.n_c() != n {
        return Err(LqError::IndexSearch {
            found: kd.n_c(),
            expected: n,
        });
    }
    let u = &kd.t;
    let a_s = &kd.a_co;
    let b_s = &kd.b_co;
    let blocks = &kd.block_sizes;
    let block_offs = block_offsets(blocks);
    let levels = blocks.len();

    // inputs alive at each degree must agree with the supplied indices
    let alive: Vec<Vec<usize>> = (0..levels).map(|d| (0..m).filter(|&i| mu[i] > d).collect()).collect();
    for (d, set) in alive.iter().enumerate() {
        if set.len() != blocks[d] {
            return Err(LqError::SingularSelection { condition: f64::INFINITY });
        }
    }
    if mu.iter().any(|&x| x > levels) {
        return Err(LqError::SingularSelection { condition: f64::INFINITY });
    }

    // chain vectors A^k b_i (normalized), by degree; each column keyed by input
    let mut chains: Vec<DMatrix<f64>> = Vec::with_capacity(levels);
    let mut cur = b_s.clone();
    for d in 0..levels {
        normalize_columns(&mut cur);
        chains.push(cur.clone());
        if d + 1 < levels {
            cur = a_s * &cur;
        }
    }

    // diagonal blocks D_d = block-(d+1) rows of the degree-d columns
    let mut diag_lu = Vec::with_capacity(levels);
    let mut worst_cond = 1.0f64;
    for d in 0..levels {
        let cols = &alive[d];
        let dm = DMatrix::from_fn(blocks[d], cols.len(), |r, c| chains[d][(block_offs[d] + r, cols[c])]);
        let dt = dm.transpose();
        let inv = dt.clone().try_inverse().ok_or(LqError::SingularSelection { condition: f64::INFINITY })?;
        worst_cond = worst_cond.max(condition_1(&dt, &inv));
        diag_lu.push(dt.lu());
    }

    // q_i: row of M⁻¹ for column (μ_i − 1, i), via block forward substitution of Mᵀ y = e
    let mut t_s = DMatrix::zeros(n, n);
    let mut row = 0;
    for i in 0..m {
        let last = mu[i] - 1;
        let mut y = DVector::zeros(n);
        for d in last..levels {
            let cols = &alive[d];
            let mut rhs = DVector::zeros(cols.len());
            if d == last {
                let pos = cols.iter().position(|&c| c == i).expect("input alive at its last degree");
                rhs[pos] = 1.0;
            }
            // subtract contributions of already solved blocks (rows before block d)
            let head = block_offs[d];
            for (c, &inp) in cols.iter().enumerate() {
                let col = chains[d].column(inp);
                let mut acc = 0.0;
                for r in 0..head {
                    acc += col[r] * y[r];
                }
                rhs[c] -= acc;
            }
            let yd = diag_lu[d]
                .solve(&rhs)
                .ok_or(LqError::SingularSelection { condition: worst_cond })?;
            y.rows_mut(head, blocks[d]).copy_from(&yd);
        }
        let mut r = y.transpose();
        for _ in 0..mu[i] {
            t_s.row_mut(row).copy_from(&r);
            r = &r * a_s;
            row += 1;
        }
    }

    // scale each chain so that its B_ca diagonal entry is exactly one
    let offs = block_offsets(mu);
    for i in 0..m {
        let last = offs[i] + mu[i] - 1;
        let pivot = t_s.row(last).dot(&b_s.column(i).transpose());
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(LqError::SingularSelection { condition: worst_cond });
        }
        t_s.rows_mut(offs[i], mu[i]).scale_mut(1.0 / pivot);
    }

    let t_s_inv = t_s
        .clone()
        .try_inverse()
        .ok_or(LqError::SingularSelection { condition: f64::INFINITY })?;
    let condition = condition_1(&t_s, &t_s_inv);

    let b_raw = &t_s * b_s;
    let mut b_ca = DMatrix::zeros(n, m);
    let mut scale = 1.0f64;
    for i in 0..m {
        scale = scale.max(b_raw.row(offs[i] + mu[i] - 1).amax());
    }
    let mut residual = 0.0f64;
    for i in 0..m {
        let last = offs[i] + mu[i] - 1;
        for r in offs[i]..last {
            residual = residual.max(b_raw.row(r).amax());
        }
        for j in 0..m {
            let v = b_raw[(last, j)];
            match j.cmp(&i) {
                std::cmp::Ordering::Less => residual = residual.max(v.abs()),
                std::cmp::Ordering::Equal => {
                    residual = residual.max((v - 1.0).abs());
                    b_ca[(last, j)] = 1.0;
                }
                std::cmp::Ordering::Greater => b_ca[(last, j)] = v,
            }
        }
    }
    if residual > PATTERN_TOL * scale {
        return Err(LqError::Pattern {
            what: "B_ca".into(),
            residual,
            condition,
        });
    }

    // A_ca: shift rows are exact by construction, last rows solve W T = q_i A^{μ_i}
    let mut a_ca = DMatrix::zeros(n, n);
    for i in 0..m {
        for k in 0..mu[i] - 1 {
            a_ca[(offs[i] + k, offs[i] + k + 1)] = 1.0;
        }
        let last = offs[i] + mu[i] - 1;
        let next = t_s.row(last) * a_s;
        a_ca.row_mut(last).copy_from(&(next * &t_s_inv));
    }

    let t = &t_s * u;
    let t_inv = u.transpose() * &t_s_inv;
    Ok(CanonicalForm {
        t,
        t_inv,
        a: a_ca,
        b: b_ca,
        condition,
    })
}

fn normalize_columns(w: &mut DMatrix<f64>) {
    for mut c in w.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
}

/// Feedback `(F, G)` cancelling the free rows of a canonical pair:
/// `G = V⁻¹`, `F = −V⁻¹W` with `V`, `W` the chain-last rows of `B_ca`, `A_ca`.
pub fn canonical_to_brunovsky(a_ca: &DMatrix<f64>, b_ca: &DMatrix<f64>, mu: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    reject_zero_indices(mu)?;
    let n: usize = mu.iter().sum();
    let m = mu.len();
    if a_ca.shape() != (n, n) || b_ca.shape() != (n, m) {
        return Err(LqError::Dimension(format!(
            "canonical pair must be {n}×{n} and {n}×{m}, got {:?} and {:?}",
            a_ca.shape(),
            b_ca.shape()
        )));
    }
    let offs = block_offsets(mu);
    let lasts: Vec<usize> = (0..m).map(|i| offs[i] + mu[i] - 1).collect();
    let v = DMatrix::from_fn(m, m, |i, j| b_ca[(lasts[i], j)]);
    let w = DMatrix::from_fn(m, n, |i, j| a_ca[(lasts[i], j)]);

    let scale = 1.0f64.max(max_abs(&v));
    let mut residual = 0.0f64;
    for i in 0..m {
        residual = residual.max((v[(i, i)] - 1.0).abs());
        for j in 0..i {
            residual = residual.max(v[(i, j)].abs());
        }
    }
    if residual > PATTERN_TOL * scale {
        return Err(LqError::Pattern {
            what: "V (chain-last rows of B_ca) is not unit upper triangular".into(),
            residual,
            condition: f64::NAN,
        });
    }
    let mut v_exact = v.upper_triangle();
    v_exact.fill_diagonal(1.0);
    let g = v_exact
        .solve_upper_triangular(&DMatrix::identity(m, m))
        .ok_or(LqError::SingularSelection { condition: f64::INFINITY })?;
    let f = -(&g * w);
    Ok((f, g))
}

/// Full feedback equivalence `(T, F, G)` of a controllable pair.
pub fn brunovsky_transform(a_co: &DMatrix<f64>, b_co: &DMatrix<f64>, rank_tol: f64) -> Result<BrunovskyTransform> {
    let mu = controllability_indices(a_co, b_co, rank_tol)?;
    reject_zero_indices(&mu)?;
    let canon = to_controllable_canonical(a_co, b_co, &mu)?;
    let (f_ca, g) = canonical_to_brunovsky(&canon.a, &canon.b, &mu)?;
    let offs = block_offsets(&mu);
    let m = mu.len();
    let mut g_inv = DMatrix::from_fn(m, m, |i, j| canon.b[(offs[i] + mu[i] - 1, j)]);
    g_inv.fill_lower_triangle(0.0, 1);
    g_inv.fill_diagonal(1.0);
    Ok(BrunovskyTransform {
        f: f_ca * &canon.t,
        t: canon.t,
        t_inv: canon.t_inv,
        g,
        g_inv,
        condition: canon.condition,
        mu,
    })
}

/// Indices as the staircase scan would report them, for callers that
/// already hold a staircase decomposition.
pub fn indices_from_staircase(kd: &crate::staircase::KalmanDecomposition, rank_tol: f64) -> Result<Vec<usize>> {
    Ok(greedy_degree_scan(kd, rank_tol)?.0)
}

/// `A_bᵀPA_b`, `B_bᵀPA_b`, `B_bᵀPB_b` by index-shifted copies of `P`.
///
/// For chains `i`, `j` with `P_ij` the `μ_i × μ_j` block of `P`:
/// `[A_iᵀP_ijA_j]_{m,n} = [P_ij]_{m−1,n−1}`, `[B_iᵀP_ijA_j]_{1,n} =
/// [P_ij]_{μ_i,n−1}`, `B_iᵀP_ijB_j = [P_ij]_{μ_i,μ_j}`, zero in the first
/// row/column. No arithmetic is performed.
pub fn structured_quadratics(p: &DMatrix<f64>, mu: &[usize]) -> Result<StructuredQuadratics> {
    let n: usize = mu.iter().sum();
    if p.shape() != (n, n) {
        return Err(LqError::Dimension(format!(
            "P is {}×{}, indices sum to {n}",
            p.nrows(),
            p.ncols()
        )));
    }
    let offs = block_offsets(mu);
    Ok(copy_kernels(p, mu, &offs))
}

fn copy_kernels(p: &DMatrix<f64>, mu: &[usize], offs: &[usize]) -> StructuredQuadratics {
    let n = p.nrows();
    let m = mu.len();
    let mut at_p_a = DMatrix::zeros(n, n);
    let mut bt_p_a = DMatrix::zeros(m, n);
    let mut bt_p_b = DMatrix::zeros(m, m);
    let lasts: Vec<usize> = mu.iter().zip(offs).map(|(&len, &o)| o + len - 1).collect();
    for (j, (&mj, &oj)) in mu.iter().zip(offs).enumerate() {
        for c in 1..mj {
            let src = p.column(oj + c - 1);
            let mut dst = at_p_a.column_mut(oj + c);
            for (&mi, &oi) in mu.iter().zip(offs) {
                for r in 1..mi {
                    dst[oi + r] = src[oi + r - 1];
                }
            }
            for (i, &li) in lasts.iter().enumerate() {
                bt_p_a[(i, oj + c)] = src[li];
            }
        }
        for (i, &li) in lasts.iter().enumerate() {
            bt_p_b[(i, j)] = p[(li, lasts[j])];
        }
    }
    StructuredQuadratics { at_p_a, bt_p_a, bt_p_b }
}

/// Riccati kernels for `(A_b, B_b)`: copies for the quadratics, shifts and
/// selections for the vector products.
#[derive(Debug)]
pub struct BrunovskyKernels {
    mu: Vec<usize>,
    offsets: Vec<usize>,
    calls: AtomicUsize,
}

impl BrunovskyKernels {
    pub fn new(mu: &[usize]) -> Result<Self> {
        reject_zero_indices(mu)?;
        Ok(BrunovskyKernels {
            mu: mu.to_vec(),
            offsets: block_offsets(mu),
            calls: AtomicUsize::new(0),
        })
    }
}

impl QuadraticsProvider for BrunovskyKernels {
    fn state_dim(&self) -> usize {
        self.mu.iter().sum()
    }

    fn input_dim(&self) -> usize {
        self.mu.len()
    }

    fn quadratics(&self, p: &DMatrix<f64>) -> StructuredQuadratics {
        self.calls.fetch_add(1, Ordering::Relaxed);
        copy_kernels(p, &self.mu, &self.offsets)
    }

    fn a_tr_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (&m, &o) in self.mu.iter().zip(&self.offsets) {
            for r in 1..m {
                out[o + r] = v[o + r - 1];
            }
        }
        out
    }

    fn b_tr_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.mu.len(),
            self.mu.iter().zip(&self.offsets).map(|(&m, &o)| v[o + m - 1]),
        )
    }

    fn propagate(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(x.len());
        for (i, (&m, &o)) in self.mu.iter().zip(&self.offsets).enumerate() {
            for r in 0..m - 1 {
                out[o + r] = x[o + r + 1];
            }
            out[o + m - 1] = u[i];
        }
        out
    }

    fn kind(&self) -> KernelKind {
        KernelKind::Structured
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}
