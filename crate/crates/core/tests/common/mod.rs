#![allow(dead_code)]

use crnn_core::linalg::{sym_eigen, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Random orthogonal matrix from the eigenvectors of a symmetric Gaussian.
pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = gaussian(rng, n, n, 1.0);
    let s = &g + &g.transpose();
    sym_eigen(&s).unwrap().vectors
}

/// Symmetric matrix with the given eigenvalues.
pub fn symmetric_with_spectrum(rng: &mut ChaCha8Rng, eig: &[f64]) -> Matrix {
    let u = orthogonal(rng, eig.len());
    let m = u.matmul(&Matrix::from_diag(eig)).matmul(&u.transpose());
    let mt = m.transpose();
    (&m + &mt).scale(0.5)
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = gaussian(rng, n, n, 1.0);
    &g.tr_matmul(&g) + &Matrix::identity(n).scale(0.5)
}

/// Connected undirected 0/1 graph: a random spanning path plus extra edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p_edge: f64) -> Matrix {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut a = Matrix::zeros(n, n);
    for w in order.windows(2) {
        a[(w[0], w[1])] = 1.0;
        a[(w[1], w[0])] = 1.0;
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p_edge) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    a
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
