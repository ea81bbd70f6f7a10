//! Orthogonal controllability staircase and controllability indices.
//!
//! `staircase_decompose` produces an orthogonal `T` with
//!
//! ```text
//! T A Tᵀ = [[A_co, A_12], [0, A_uc]]      T B = [B_co; 0]
//! ```
//!
//! where `[B_co, A_co]` is block upper Hessenberg: the block sizes
//! `ρ_1 ≥ ρ_2 ≥ …` are the rank increments of the Krylov sequence.

use nalgebra::{DMatrix, DVector};

use crate::error::{LqError, Result};
use crate::linalg::{complete_orthonormal, rank_above};

/// Relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanDecomposition {
    /// Orthogonal state map, `[x_c; x_uc] = T x`.
    pub t: DMatrix<f64>,
    pub a_co: DMatrix<f64>,
    pub a_12: DMatrix<f64>,
    pub a_uc: DMatrix<f64>,
    pub b_co: DMatrix<f64>,
    /// Staircase block sizes ρ_1, ρ_2, …; they sum to `n_c`.
    pub block_sizes: Vec<usize>,
    /// Largest singular value discarded as numerically zero.
    pub discarded: f64,
}

impl KalmanDecomposition {
    pub fn n_c(&self) -> usize {
        self.a_co.nrows()
    }

    pub fn n_uc(&self) -> usize {
        self.a_uc.nrows()
    }

    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    /// First `n_c` rows of `T`.
    pub fn t_controllable(&self) -> DMatrix<f64> {
        self.t.rows(0, self.n_c()).into_owned()
    }

    /// Last `n_uc` rows of `T`.
    pub fn t_uncontrollable(&self) -> DMatrix<f64> {
        self.t.rows(self.n_c(), self.n_uc()).into_owned()
    }

    /// `T A Tᵀ` reassembled from the blocks (lower-left block exactly zero).
    pub fn block_a(&self) -> DMatrix<f64> {
        let (nc, n) = (self.n_c(), self.n());
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (nc, nc)).copy_from(&self.a_co);
        m.view_mut((0, nc), (nc, n - nc)).copy_from(&self.a_12);
        m.view_mut((nc, nc), (n - nc, n - nc)).copy_from(&self.a_uc);
        m
    }

    /// `T B` reassembled, `[B_co; 0]`.
    pub fn block_b(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n(), self.b_co.ncols());
        m.rows_mut(0, self.n_c()).copy_from(&self.b_co);
        m
    }
}

/// Singular values in descending order with the matching left vectors.
fn sorted_svd(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|_| LqError::Invalid("singular value decomposition did not converge".into()))?;
    let s = svd.S().column_vector();
    let u = svd.U();
    let sv = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((sv, DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)])))
}

/// Kalman controllability decomposition by the orthogonal staircase method.
///
/// Rank decisions count singular values above `rank_tol · max(‖A‖_F, ‖B‖_F)`.
pub fn staircase_decompose(a: &DMatrix<f64>, b: &DMatrix<f64>, rank_tol: f64) -> Result<KalmanDecomposition> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(LqError::Dimension(format!(
            "staircase needs square A and matching B, got A {}×{}, B {}×{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let threshold = rank_tol * a.norm().max(b.norm());
    let mut t = DMatrix::<f64>::identity(n, n);
    let mut at = a.clone();
    let mut bt = b.clone();
    let mut blocks = Vec::new();
    let mut offset = 0;
    let mut prev = 0;
    let mut discarded = 0.0f64;

    while offset < n {
        let rows = n - offset;
        let sub = if blocks.is_empty() {
            bt.rows(0, n).into_owned()
        } else {
            at.view((offset, prev), (rows, offset - prev)).into_owned()
        };
        if sub.ncols() == 0 {
            break;
        }
        let (sv, u) = sorted_svd(&sub)?;
        let sv_vec = DVector::from_vec(sv.clone());
        let r = if threshold > 0.0 { rank_above(&sv_vec, threshold) } else { 0 };
        discarded = discarded.max(sv.get(r).copied().unwrap_or(0.0));
        if r == 0 {
            // remaining rows are uncontrollable; clear the numerically zero coupling
            if blocks.is_empty() {
                bt.fill(0.0);
            } else {
                at.view_mut((offset, prev), (rows, offset - prev)).fill(0.0);
            }
            break;
        }
        let q = complete_orthonormal(&u.columns(0, r).into_owned());
        let qt = q.transpose();

        let t_rows = &qt * t.rows(offset, rows);
        t.rows_mut(offset, rows).copy_from(&t_rows);
        let a_rows = &qt * at.rows(offset, rows);
        at.rows_mut(offset, rows).copy_from(&a_rows);
        let a_cols = at.columns(offset, rows) * &q;
        at.columns_mut(offset, rows).copy_from(&a_cols);
        let b_rows = &qt * bt.rows(offset, rows);
        bt.rows_mut(offset, rows).copy_from(&b_rows);

        if blocks.is_empty() {
            bt.rows_mut(r, n - r).fill(0.0);
        } else {
            at.view_mut((offset + r, prev), (rows - r, offset - prev)).fill(0.0);
        }
        blocks.push(r);
        prev = offset;
        offset += r;
    }

    let nc = offset;
    Ok(KalmanDecomposition {
        a_co: at.view((0, 0), (nc, nc)).into_owned(),
        a_12: at.view((0, nc), (nc, n - nc)).into_owned(),
        a_uc: at.view((nc, nc), (n - nc, n - nc)).into_owned(),
        b_co: bt.rows(0, nc).into_owned(),
        t,
        block_sizes: blocks,
        discarded,
    })
}

/// Whether `(A, B)` is controllable under the staircase rank threshold.
pub fn is_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>, rank_tol: f64) -> bool {
    staircase_decompose(a, b, rank_tol)
        .map(|kd| kd.n_c() == a.nrows())
        .unwrap_or(false)
}

/// Controllability indices μ_1..μ_{n_u} of a controllable pair.
///
/// Columns of `[B, AB, A²B, …]` are scanned in degree order
/// `b_1, …, b_m, Ab_1, …` and accepted when independent of the columns
/// accepted before them; μ_i counts the accepted columns `A^k b_i`. The scan
/// runs on the staircase form, where the new directions at degree `d` are
/// exactly the block-(d+1) components, so no raw Krylov powers are formed.
/// Redundant inputs get μ_i = 0.
pub fn controllability_indices(a_co: &DMatrix<f64>, b_co: &DMatrix<f64>, rank_tol: f64) -> Result<Vec<usize>> {
    let n = a_co.nrows();
    let m = b_co.ncols();
    let kd = staircase_decompose(a_co, b_co, rank_tol)?;
    if kd.n_c() < n {
        return Err(LqError::IndexSearch {
            found: kd.n_c(),
            expected: n,
        });
    }
    let (mu, _) = greedy_degree_scan(&kd, rank_tol)?;
    debug_assert_eq!(mu.len(), m);
    Ok(mu)
}

/// The degree scan behind [`controllability_indices`]; also returns, per
/// degree, the inputs accepted at that degree in natural order.
pub(crate) fn greedy_degree_scan(kd: &KalmanDecomposition, rank_tol: f64) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    let m = kd.b_co.ncols();
    let nc = kd.n_c();
    let mut mu = vec![0usize; m];
    let mut per_degree = Vec::with_capacity(kd.block_sizes.len());
    if nc == 0 {
        return Ok((mu, per_degree));
    }
    let offsets: Vec<usize> = kd
        .block_sizes
        .iter()
        .scan(0, |acc, &r| {
            let o = *acc;
            *acc += r;
            Some(o)
        })
        .collect();

    // block-(d+1) components of A^d b_i, columns normalized
    let a_floor = rank_tol * kd.a_co.norm();
    let mut w = kd.b_co.rows(0, kd.block_sizes[0]).into_owned();
    normalize_columns(&mut w, rank_tol * kd.b_co.norm());
    let mut alive: Vec<usize> = (0..m).collect();
    let mut found = 0;

    for (d, &target) in kd.block_sizes.iter().enumerate() {
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(target);
        let mut accepted = Vec::with_capacity(target);
        for &i in &alive {
            if accepted.len() == target {
                break;
            }
            let col = w.column(i).into_owned();
            if col.norm() == 0.0 {
                continue;
            }
            let mut res = col;
            for _ in 0..2 {
                for e in &basis {
                    let c = e.dot(&res);
                    res.axpy(-c, e, 1.0);
                }
            }
            let norm = res.norm();
            if norm > rank_tol {
                basis.push(res / norm);
                accepted.push(i);
                mu[i] += 1;
            }
        }
        found += accepted.len();
        if accepted.len() < target {
            return Err(LqError::IndexSearch { found, expected: nc });
        }
        if d + 1 < kd.block_sizes.len() {
            let next = kd.block_sizes[d + 1];
            let sub = kd.a_co.view((offsets[d + 1], offsets[d]), (next, target));
            w = sub * w;
            normalize_columns(&mut w, a_floor);
        }
        per_degree.push(accepted.clone());
        alive = accepted;
    }
    Ok((mu, per_degree))
}

/// Scales columns to unit length; columns with norm at or below `floor` are
/// numerically zero and are cleared.
fn normalize_columns(w: &mut DMatrix<f64>, floor: f64) {
    for mut c in w.column_iter_mut() {
        let n = c.norm();
        if n > floor && n > 0.0 {
            c /= n;
        } else {
            c.fill(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn already_decomposed_pair_keeps_identity() {
        let a = m(2, 2, &[0.0, 0.0, 0.0, 2.0]);
        let b = m(2, 1, &[1.0, 0.0]);
        let kd = staircase_decompose(&a, &b, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(kd.n_c(), 1);
        assert_eq!(kd.a_co[(0, 0)].abs(), 0.0);
        assert_eq!(kd.b_co[(0, 0)].abs(), 1.0);
        assert_eq!(kd.a_uc[(0, 0)], 2.0);
        // T is I up to the sign of the singular vector
        assert_eq!(kd.t.abs(), DMatrix::identity(2, 2));
    }

    #[test]
    fn zero_input_matrix_has_nothing_controllable() {
        let a = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::zeros(2, 2);
        let kd = staircase_decompose(&a, &b, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(kd.n_c(), 0);
        assert_eq!(kd.n_uc(), 2);
        assert!((&kd.a_uc - kd.t.clone() * &a * kd.t.transpose()).norm() < 1e-14);
        assert!(kd.block_sizes.is_empty());
    }

    #[test]
    fn dimension_errors() {
        assert!(staircase_decompose(&DMatrix::zeros(2, 3), &DMatrix::zeros(2, 1), 1e-9).is_err());
        assert!(staircase_decompose(&DMatrix::zeros(2, 2), &DMatrix::zeros(3, 1), 1e-9).is_err());
    }

    #[test]
    fn example_pair_has_single_chain() {
        let a = m(2, 2, &[0.0, -1.0, 1.0, -1.0]);
        let b = m(2, 1, &[1.0, 0.0]);
        assert_eq!(controllability_indices(&a, &b, DEFAULT_RANK_TOL).unwrap(), vec![2]);
    }

    #[test]
    fn integrator_chain_indices() {
        for n in 1..8 {
            let a = DMatrix::from_fn(n, n, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
            let b = DMatrix::from_fn(n, 1, |i, _| if i == n - 1 { 1.0 } else { 0.0 });
            assert_eq!(controllability_indices(&a, &b, DEFAULT_RANK_TOL).unwrap(), vec![n]);
        }
    }

    #[test]
    fn redundant_input_gets_zero_index() {
        let a = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = m(2, 2, &[0.0, 0.0, 1.0, 2.0]);
        assert_eq!(controllability_indices(&a, &b, DEFAULT_RANK_TOL).unwrap(), vec![2, 0]);
    }

    #[test]
    fn uncontrollable_pair_is_rejected() {
        let a = m(2, 2, &[0.0, 0.0, 0.0, 2.0]);
        let b = m(2, 1, &[1.0, 0.0]);
        assert!(matches!(
            controllability_indices(&a, &b, DEFAULT_RANK_TOL),
            Err(LqError::IndexSearch { found: 1, expected: 2 })
        ));
    }

    #[test]
    fn non_generic_assignment_follows_input_order() {
        // b_1 drives a 1-chain, b_2 a 2-chain: greedy gives [1, 2]
        let a = m(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let b = m(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(controllability_indices(&a, &b, DEFAULT_RANK_TOL).unwrap(), vec![1, 2]);
    }
}
