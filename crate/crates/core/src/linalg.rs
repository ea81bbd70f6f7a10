//! Small dense kernels shared by the solvers.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};

/// Below this size the triangular multiply falls back to a plain gemm.
const TRMM_LEAF: usize = 48;

/// Replaces `m` by `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Frobenius norm of `m - mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    (m - m.transpose()).norm()
}

/// Lower triangle of a symmetric `p` with the diagonal halved, so that
/// `p = half + halfᵀ`.
pub fn lower_half(p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => p[(i, j)],
        std::cmp::Ordering::Equal => 0.5 * p[(i, i)],
        std::cmp::Ordering::Less => 0.0,
    })
}

/// `L · A` for lower-triangular `L`, skipping the structurally zero upper
/// blocks. Roughly half the flops of the equivalent gemm.
pub fn trmm_lower(l: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(l.ncols(), a.nrows(), "trmm dimension mismatch");
    let mut out = DMatrix::zeros(l.nrows(), a.ncols());
    trmm_lower_into(l.as_view(), a.as_view(), out.as_view_mut());
    out
}

fn trmm_lower_into(l: DMatrixView<f64>, a: DMatrixView<f64>, mut out: DMatrixViewMut<f64>) {
    let n = l.nrows();
    if n <= TRMM_LEAF {
        out.gemm(1.0, &l, &a, 0.0);
        return;
    }
    let h = n / 2;
    let cols = a.ncols();
    let a_top = a.rows(0, h);
    let a_bot = a.rows(h, n - h);
    {
        let out_top = out.rows_mut(0, h);
        trmm_lower_into(l.view((0, 0), (h, h)), a_top, out_top);
    }
    let mut out_bot = out.view_mut((h, 0), (n - h, cols));
    trmm_lower_into(l.view((h, h), (n - h, n - h)), a_bot, out_bot.rows_mut(0, n - h));
    out_bot.gemm(1.0, &l.view((h, 0), (n - h, h)), &a_top, 1.0);
}

/// `Xᵀ P X` for symmetric `P`, computed as `Y = ΠX`, `Z = XᵀY`, `Z + Zᵀ`
/// where `P = Π + Πᵀ`. This is the symmetric variant of the cubic kernel.
pub fn sym_congruence(p: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let half = lower_half(p);
    sym_congruence_with_half(&half, x).0
}

/// Same as [`sym_congruence`] but takes the precomputed half and also returns
/// `ΠX` for reuse.
pub fn sym_congruence_with_half(
    half: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let y = trmm_lower(half, x);
    let z = x.tr_mul(&y);
    let out = &z + z.transpose();
    (out, y)
}

/// Number of singular values strictly above `threshold`.
pub fn rank_above(singular_values: &DVector<f64>, threshold: f64) -> usize {
    singular_values.iter().filter(|&&s| s > threshold).count()
}

/// Completes the orthonormal columns of `u` (n × r) to a full orthogonal
/// n × n matrix whose first r columns span the same subspace.
pub fn complete_orthonormal(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let r = u.ncols();
    let mut aug = DMatrix::zeros(n, r + n);
    aug.columns_mut(0, r).copy_from(u);
    aug.columns_mut(r, n).fill_with_identity();
    let q = aug.qr().q();
    q.columns(0, n).into_owned()
}

/// 1-norm condition number from a matrix and its inverse.
pub fn condition_1(m: &DMatrix<f64>, inv: &DMatrix<f64>) -> f64 {
    norm_1(m) * norm_1(inv)
}

pub fn norm_1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest absolute entry, zero for empty matrices.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Relative difference `‖a − b‖ / max(‖b‖, tiny)` over concatenated vectors.
pub fn relative_error(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - y).norm_squared();
        den += y.norm_squared();
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
