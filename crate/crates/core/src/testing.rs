//! Shared helpers for unit tests.

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fermion::{bath_mode, impurity_mode, SiamParams, Spin};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kron(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn scaled(m: &Mat<c64>, x: c64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * x)
}

pub fn identity(n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn random_matrix(n: usize, rng: &mut impl Rng) -> Mat<c64> {
    Mat::from_fn(n, n, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> Mat<c64> {
    let a = random_matrix(n, rng);
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> Vec<c64> {
    (0..n)
        .map(|_| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

/// Hermitian matrix with prescribed eigenvalues and a random eigenbasis.
pub fn hermitian_with_spectrum(vals: &[f64], rng: &mut impl Rng) -> (Mat<c64>, Mat<c64>) {
    let n = vals.len();
    let a = random_matrix(n, rng);
    let q = a.qr().compute_Q();
    let d = Mat::from_fn(n, n, |i, j| if i == j { c64::new(vals[i], 0.0) } else { c64::new(0.0, 0.0) });
    (&q * &d * q.adjoint(), q)
}

/// Dense exponential `exp(s * m)` by scaling and squaring of a Taylor series.
pub fn expm(m: &Mat<c64>, s: c64) -> Mat<c64> {
    let n = m.nrows();
    let a = scaled(m, s);
    let norm = a.norm_max() * n as f64;
    let mut k = 0;
    while norm / 2f64.powi(k) > 0.5 {
        k += 1;
    }
    let a = scaled(&a, c64::new(2f64.powi(-k), 0.0));
    let mut term = identity(n);
    let mut sum = identity(n);
    for j in 1..30 {
        term = scaled(&(&term * &a), c64::new(1.0 / j as f64, 0.0));
        sum += &term;
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

fn two(m: [[f64; 2]; 2]) -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| c64::new(m[i][j], 0.0))
}

/// Ladder operator from explicit Kronecker products; the highest mode is the
/// leftmost factor so bit `k` of the basis index is mode `k`.
pub fn kron_ladder(create: bool, mode: usize, n: usize) -> Mat<c64> {
    let id = two([[1.0, 0.0], [0.0, 1.0]]);
    let z = two([[1.0, 0.0], [0.0, -1.0]]);
    let lower = two([[0.0, 1.0], [0.0, 0.0]]);
    let raise = two([[0.0, 0.0], [1.0, 0.0]]);
    let mut out = Mat::<c64>::from_fn(1, 1, |_, _| c64::new(1.0, 0.0));
    for k in (0..n).rev() {
        let f = if k == mode {
            if create {
                &raise
            } else {
                &lower
            }
        } else if k < mode {
            &z
        } else {
            &id
        };
        out = kron(&out, f);
    }
    out
}

/// Occupation-basis Anderson Hamiltonian built from Kronecker-product operators.
pub fn kron_siam(p: &SiamParams) -> Mat<c64> {
    let n = p.n_modes();
    let dim = 1 << n;
    let re = |x: f64| c64::new(x, 0.0);
    let mut h = Mat::<c64>::zeros(dim, dim);
    let num = |m: usize| &kron_ladder(true, m, n) * &kron_ladder(false, m, n);
    h += scaled(&(num(0) + num(1)), re(p.eps_imp - p.mu));
    h += scaled(&(&num(0) * &num(1)), re(p.u));
    for j in 0..p.n_bath {
        for s in [Spin::Up, Spin::Down] {
            let b = bath_mode(j, s);
            let a = impurity_mode(s);
            h += scaled(&num(b), re(p.eps_bath[j] - p.mu));
            let hop = &kron_ladder(true, a, n) * &kron_ladder(false, b, n);
            let back = &kron_ladder(true, b, n) * &kron_ladder(false, a, n);
            h += scaled(&(hop + back), re(p.v[j]));
        }
    }
    h
}
