#![allow(dead_code)]

use brunovsky_riccati::brunovsky::BrunovskyTransform;
use brunovsky_riccati::staircase::KalmanDecomposition;
use brunovsky_riccati::{assemble_kkt, brunovsky_pair, LqOcpProblem, ProblemGenerator, Trajectory};
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = gaussian(rng, n, n);
    (&m + m.transpose()) * 0.5
}

/// Dimension of the reachable subspace, grown by block Arnoldi: each new
/// direction `A q` is orthogonalized twice against the basis so far and kept
/// if what remains exceeds `1e-9 max(‖A‖_F, ‖B‖_F)`.
pub fn controllability_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> usize {
    let tol = 1e-9 * a.norm().max(b.norm());
    if tol == 0.0 {
        return 0;
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut frontier: Vec<DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
    while !frontier.is_empty() && basis.len() < a.nrows() {
        let mut fresh = Vec::new();
        for mut w in frontier {
            for _ in 0..2 {
                for q in &basis {
                    w -= q * q.dot(&w);
                }
            }
            let norm = w.norm();
            if norm > tol && basis.len() < a.nrows() {
                basis.push(w / norm);
                fresh.push(basis.len() - 1);
            }
        }
        frontier = fresh.into_iter().map(|i| a * &basis[i]).collect();
    }
    basis.len()
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Largest distance in a greedy nearest-neighbour matching of two
/// eigenvalue multisets; infinite when the sizes differ.
pub fn eigen_distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Staircase invariants, each already divided by its allowed bound, so a
/// value ≤ 1 passes.
#[derive(Debug, Clone, Copy)]
pub struct StaircaseCheck {
    pub orthogonality: f64,
    pub reconstruction_a: f64,
    pub reconstruction_b: f64,
    pub eigenvalues: f64,
    pub staircase_form: f64,
    pub controllable_part: bool,
    pub controllable_dim: bool,
}

impl StaircaseCheck {
    pub fn worst(&self) -> f64 {
        [
            self.orthogonality,
            self.reconstruction_a,
            self.reconstruction_b,
            self.eigenvalues,
            self.staircase_form,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn ok(&self) -> bool {
        self.worst() <= 1.0 && self.controllable_part && self.controllable_dim
    }
}

pub fn check_staircase(a: &DMatrix<f64>, b: &DMatrix<f64>, kd: &KalmanDecomposition) -> StaircaseCheck {
    let n = a.nrows();
    let t = &kd.t;
    let orth = (t * t.transpose() - DMatrix::identity(n, n)).norm() / (1e-12 * n.max(1) as f64);
    let ra = (t * a * t.transpose() - kd.block_a()).norm() / (1e-10 * a.norm()).max(f64::MIN_POSITIVE);
    let rb = if b.norm() == 0.0 {
        if kd.b_co.norm() == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        (t * b - kd.block_b()).norm() / (1e-10 * b.norm())
    };
    let mut blocks = eigenvalues(&kd.a_co);
    blocks.extend(eigenvalues(&kd.a_uc));
    let eig = eigen_distance(&eigenvalues(a), &blocks) / 1e-8;

    // [B_co, A_co] block Hessenberg: B_co nonzero only in the first block
    // row, A_co block (i, j) zero for i > j + 1.
    let tol = 1e-10 * (1.0 + a.norm() + b.norm());
    let mut offs = vec![0];
    for &s in &kd.block_sizes {
        offs.push(offs.last().unwrap() + s);
    }
    let mut form = 0.0f64;
    if let Some(&first) = kd.block_sizes.first() {
        for r in first..kd.n_c() {
            form = form.max(kd.b_co.row(r).amax());
        }
    }
    for i in 0..kd.block_sizes.len() {
        for j in 0..kd.block_sizes.len() {
            if i > j + 1 {
                let blk = kd.a_co.view((offs[i], offs[j]), (kd.block_sizes[i], kd.block_sizes[j]));
                form = form.max(blk.amax());
            }
        }
    }
    let expected = controllability_rank(a, b);
    StaircaseCheck {
        orthogonality: orth,
        reconstruction_a: ra,
        reconstruction_b: rb,
        eigenvalues: eig,
        staircase_form: form / tol,
        controllable_part: kd.n_c() == 0 || controllability_rank(&kd.a_co, &kd.b_co) == kd.n_c(),
        controllable_dim: kd.n_c() == expected,
    }
}

/// Feedback-equivalence residuals with the bounds of the transform's
/// contract; values ≤ 1 pass.
#[derive(Debug, Clone, Copy)]
pub struct FeedbackCheck {
    /// `‖T(A+BF)T⁻¹ − A_b‖_F / (1e-8 (1 + ‖A‖_F))`
    pub similarity: f64,
    /// `‖T B G − B_b‖_F / (1e-8 (1 + ‖B‖_F))`
    pub input: f64,
    /// `‖(A+BF)^μ‖_F / (1e-8 (‖A‖_F + ‖B‖_F ‖F‖_F)^μ)`
    pub nilpotency: f64,
    /// Raw residuals, for reporting.
    pub raw_similarity: f64,
    pub raw_nilpotency: f64,
    /// `‖T(A+BF) − A_b T‖_F / (‖T‖_F (‖A‖_F + ‖B‖_F ‖F‖_F))`
    pub backward_error: f64,
}

impl FeedbackCheck {
    pub fn ok(&self) -> bool {
        self.similarity <= 1.0 && self.input <= 1.0 && self.nilpotency <= 1.0
    }
}

pub fn check_feedback(a: &DMatrix<f64>, b: &DMatrix<f64>, bt: &BrunovskyTransform) -> FeedbackCheck {
    let (ab, bb) = brunovsky_pair(&bt.mu).unwrap();
    let acl = a + b * &bt.f;
    let sim = (&bt.t * &acl * &bt.t_inv - &ab).norm();
    let inp = (&bt.t * b * &bt.g - &bb).norm();
    let mut pw = DMatrix::identity(a.nrows(), a.nrows());
    for _ in 0..bt.nilpotency_index() {
        pw = &pw * &acl;
    }
    let nil = pw.norm();
    // ‖A+BF‖ itself cancels to roundoff when μ = 1, so the scale uses its factors
    let nil_scale = (a.norm() + b.norm() * bt.f.norm()).powi(bt.nilpotency_index() as i32);
    let backward = (&bt.t * &acl - &ab * &bt.t).norm() / (bt.t.norm() * (a.norm() + b.norm() * bt.f.norm()));
    FeedbackCheck {
        similarity: sim / (1e-8 * (1.0 + a.norm())),
        input: inp / (1e-8 * (1.0 + b.norm())),
        nilpotency: if nil == 0.0 { 0.0 } else { nil / (1e-8 * nil_scale) },
        raw_similarity: sim,
        raw_nilpotency: nil,
        backward_error: backward,
    }
}

/// Random instance from the oracle-equivalence envelope: `n_x ∈ [2, 40]`,
/// `n_u ∈ [1, 5]`, `N ∈ [1, 30]`, all linear terms, offsets and cross
/// terms, every third instance uncontrollable.
pub fn envelope_problem(seed: u64) -> LqOcpProblem {
    let mut r = rng(seed ^ 0x5eed_0001);
    let nx = r.random_range(2..=40);
    let nu = r.random_range(1..=5usize).min(nx);
    let horizon = r.random_range(1..=30);
    let mut g = ProblemGenerator::new(nx, nu, horizon, seed).full();
    if seed.is_multiple_of(3) && nx > nu {
        g = g.controllable_dim(r.random_range(nu..nx));
    }
    g.generate().unwrap()
}

/// Indices with `Σμ ≤ max_sum`, every entry at least one.
pub fn random_indices(rng: &mut ChaCha8Rng, max_sum: usize) -> Vec<usize> {
    let m = rng.random_range(1..=8usize.min(max_sum));
    let mut mu: Vec<usize> = (0..m).map(|_| 1).collect();
    let budget = rng.random_range(m..=max_sum) - m;
    for _ in 0..budget {
        let i = rng.random_range(0..m);
        mu[i] += 1;
    }
    mu
}

/// `A_bᵀPA_b`, `B_bᵀPA_b`, `B_bᵀPB_b` by plain matrix products.
pub fn dense_products(p: &DMatrix<f64>, mu: &[usize]) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (a, b) = brunovsky_pair(mu).unwrap();
    (a.transpose() * p * &a, b.transpose() * p * &a, b.transpose() * p * &b)
}

/// Rollout of `x_{k+1} = A x_k + B u_k + b_k` from the problem's `x_0` with
/// Gaussian inputs.
pub fn random_rollout(p: &LqOcpProblem, rng: &mut ChaCha8Rng) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let mut xs = vec![p.x0.clone()];
    let mut us = Vec::new();
    for st in &p.stages {
        let u = DVector::from_fn(p.nu, |_, _| rng.sample::<f64, _>(StandardNormal));
        let next = &p.a * xs.last().unwrap() + &p.b * &u + &st.offset;
        us.push(u);
        xs.push(next);
    }
    (xs, us)
}

/// Residual of the saddle-point conditions for a primal trajectory:
/// `max(‖Hw + g + Eᵀλ‖∞, ‖Ew − f‖∞)` with `λ` the least-squares multiplier
/// from a QR factorization of `Eᵀ`, together with `1 + ‖g‖∞ + ‖f‖∞`.
pub fn kkt_stationarity(p: &LqOcpProblem, traj: &Trajectory) -> (f64, f64) {
    let sys = assemble_kkt(p);
    let w = sys.stack(traj);
    let grad = &sys.h * &w + &sys.g;
    let qr = sys.e.transpose().qr();
    let rhs = -(qr.q().transpose() * &grad);
    let lambda = qr.r().solve_upper_triangular(&rhs).expect("E has full row rank");
    let stat = (&grad + sys.e.transpose() * lambda).amax();
    let feas = (&sys.e * &w - &sys.f).amax();
    (stat.max(feas), 1.0 + sys.g.amax() + sys.f.amax())
}

/// Random pair drawn like the generator draws it, without the
/// controllability check.
pub fn random_pair(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = gaussian(rng, n, n) / (n as f64).sqrt();
    (a, gaussian(rng, n, m))
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    gaussian(rng, n, n).qr().q()
}
