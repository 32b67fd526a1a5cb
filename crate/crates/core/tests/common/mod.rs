//! Reference computations for the integration tests. They use nalgebra
//! directly and share no code paths with the library's own algorithms.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thermoform::rational::{rat, QMatrix};
use thermoform::MatrixTuple;

pub fn floats(t: &MatrixTuple) -> Vec<DMatrix<f64>> {
    t.floats().to_vec()
}

/// `A_{w_n} ... A_{w_1}` for zero-based symbols.
pub fn product(gens: &[DMatrix<f64>], word: &[usize]) -> DMatrix<f64> {
    let d = gens[0].nrows();
    word.iter().fold(DMatrix::identity(d, d), |acc, &k| &gens[k] * acc)
}

pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    SymmetricEigen::new(g).eigenvalues.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
}

pub fn min_sym_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// All words of length `n` over `m` symbols, first symbol most significant.
pub fn words(m: usize, n: usize) -> Vec<Vec<usize>> {
    let total = m.pow(n as u32);
    (0..total)
        .map(|mut i| {
            let mut w = vec![0; n];
            for k in (0..n).rev() {
                w[k] = i % m;
                i /= m;
            }
            w
        })
        .collect()
}

/// Every product of length `n`, in the same order as [`words`].
pub fn products_at(gens: &[DMatrix<f64>], n: usize) -> Vec<DMatrix<f64>> {
    let d = gens[0].nrows();
    let mut level = vec![DMatrix::identity(d, d)];
    for _ in 0..n {
        level = level.iter().flat_map(|p| gens.iter().map(move |g| g * p)).collect();
    }
    level
}

/// `Σ_i A_i ⊗ A_i`.
pub fn kron_sum(gens: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = gens[0].nrows();
    let mut s = DMatrix::zeros(d * d, d * d);
    for a in gens {
        s += a.kronecker(a);
    }
    s
}

/// The notmix2 equilibrium state as the average of two alternating
/// Bernoulli chains: in phase `p`, position `k` is symbol 1 with
/// probability 1/5 when `p + k` is even and 4/5 otherwise.
pub fn two_block(word: &[usize]) -> f64 {
    let phase = |p: usize| -> f64 {
        word.iter()
            .enumerate()
            .map(|(k, &x)| {
                let favoured = (p + k) % 2;
                if x == favoured {
                    0.2
                } else {
                    0.8
                }
            })
            .product()
    };
    0.5 * (phase(0) + phase(1))
}

/// Probability that position `k` carries symbol `x` in phase `p` of
/// [`two_block`].
pub fn two_block_marginal(p: usize, k: usize, x: usize) -> f64 {
    if x == (p + k) % 2 {
        0.2
    } else {
        0.8
    }
}

/// A rational rotation in the `(i, j)` plane from the Pythagorean pair
/// `((a² - b²)/(a² + b²), 2ab/(a² + b²))`.
pub fn plane_rotation(d: usize, i: usize, j: usize, a: i64, b: i64) -> QMatrix {
    let h = a * a + b * b;
    let (c, s) = (rat(a * a - b * b, h), rat(2 * a * b, h));
    let mut r = QMatrix::identity(d);
    r[(i, i)] = c.clone();
    r[(j, j)] = c;
    r[(i, j)] = -s.clone();
    r[(j, i)] = s;
    r
}

/// Random rational orthogonal matrix built from plane rotations and an
/// optional reflection.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> QMatrix {
    let mut o = QMatrix::identity(d);
    for i in 0..d {
        for j in i + 1..d {
            let a = rng.random_range(1..=6);
            let b = rng.random_range(0..=6);
            o = plane_rotation(d, i, j, a, b).mul(&o);
        }
    }
    if rng.random_bool(0.5) {
        let mut flip = QMatrix::identity(d);
        let k = rng.random_range(0..d);
        flip[(k, k)] = rat(-1, 1);
        o = flip.mul(&o);
    }
    o
}

/// Entries uniform on the multiples of 1/4 in `[-3, 3]`, redrawn until
/// invertible.
pub fn random_invertible(rng: &mut ChaCha8Rng, d: usize) -> QMatrix {
    loop {
        let entries: Vec<BigRational> = (0..d * d).map(|_| rat(rng.random_range(-12..=12), 4)).collect();
        let q = QMatrix::from_row_major(d, d, entries);
        if q.inverse().is_some() {
            return q;
        }
    }
}

/// `max |CᵀC - I|` over `C_i = |det A_i|^{-1/d} B⁻¹ A_i B`.
pub fn orthogonality_defect(gens: &[DMatrix<f64>], b: &DMatrix<f64>) -> f64 {
    let d = b.nrows();
    let binv = b.clone().try_inverse().expect("conjugator is invertible");
    gens.iter()
        .map(|a| {
            let scale = a.determinant().abs().powf(-1.0 / d as f64);
            let c = &binv * a * b * scale;
            (c.transpose() * &c - DMatrix::<f64>::identity(d, d)).abs().max()
        })
        .fold(0.0, f64::max)
}
