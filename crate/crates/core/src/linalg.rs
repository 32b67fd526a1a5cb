//! Double-precision helpers: spectra, singular values, kernels and spans.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Iteration cap handed to the Schur and SVD solvers.
pub const EIGEN_MAX_ITER: usize = 100_000;

/// All eigenvalues of a square matrix. Closed form for `d <= 2`, real Schur
/// decomposition otherwise.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let d = m.nrows();
    match d {
        0 => Ok(vec![]),
        1 => Ok(vec![Complex::new(m[(0, 0)], 0.0)]),
        2 => {
            let t = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = t * t - 4.0 * det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                // avoid cancellation in the smaller root
                let big = if t >= 0.0 { (t + s) / 2.0 } else { (t - s) / 2.0 };
                let small = if big != 0.0 { det / big } else { 0.0 };
                Ok(vec![Complex::new(big, 0.0), Complex::new(small, 0.0)])
            } else {
                let s = (-disc).sqrt() / 2.0;
                Ok(vec![Complex::new(t / 2.0, s), Complex::new(t / 2.0, -s)])
            }
        }
        _ => {
            let attempt = |a: &DMatrix<f64>, eps: f64| a.clone().try_schur(eps, EIGEN_MAX_ITER).map(|s| s.complex_eigenvalues());
            if let Some(ev) = attempt(m, f64::EPSILON) {
                return Ok(ev.iter().cloned().collect());
            }
            // nalgebra's shifted QR has no exceptional shifts and can cycle.
            // Remove the scalar part (nearly scalar matrices stall), then try
            // orthogonal changes of basis and looser deflation thresholds.
            let c = m.trace() / d as f64;
            let centered = m - DMatrix::identity(d, d) * c;
            let mut rng = ChaCha8Rng::seed_from_u64(0x5c4);
            let mut candidates = vec![centered.clone()];
            for _ in 0..4 {
                let q = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)).qr().q();
                candidates.push(&q * &centered * q.transpose());
            }
            for eps in [f64::EPSILON, 1e-14, 1e-12] {
                for a in &candidates {
                    if let Some(ev) = attempt(a, eps) {
                        return Ok(ev.iter().map(|z| z + c).collect());
                    }
                }
            }
            Err(Error::EigenNotConverged)
        }
    }
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    if d == 1 && m.ncols() == 1 {
        return vec![m[(0, 0)].abs()];
    }
    if d == 2 && m.ncols() == 2 {
        // eigenvalues of the 2x2 Gram matrix in closed form
        let g = m.transpose() * m;
        let (p, q, r) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
        let mean = (p + r) / 2.0;
        let rad = (((p - r) / 2.0).powi(2) + q * q).sqrt();
        let hi = mean + rad;
        let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).abs();
        let s1 = hi.max(0.0).sqrt();
        let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
        return vec![s1, s2];
    }
    let mut sv: Vec<f64> = m
        .clone()
        .try_svd(false, false, f64::EPSILON, EIGEN_MAX_ITER)
        .map(|svd| svd.singular_values.iter().cloned().collect())
        .unwrap_or_else(|| {
            let g = m.transpose() * m;
            SymmetricEigen::new(g).eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect()
        });
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn frobenius_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Kronecker product.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Orthonormal basis of the right kernel: right singular vectors whose
/// singular value is at most `rel_tol` times the largest one.
pub fn nullspace(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let n = m.ncols();
    if n == 0 {
        return vec![];
    }
    // pad to at least n rows so the decomposition yields a full V
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let Some(svd) = padded.try_svd(false, true, f64::EPSILON, EIGEN_MAX_ITER) else {
        // Gram fallback: squares the condition number, fine for a kernel test
        let eig = SymmetricEigen::new(m.transpose() * m);
        let scale = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        return (0..n)
            .filter(|&k| eig.eigenvalues[k] <= (rel_tol * rel_tol * scale).max(0.0) || scale == 0.0)
            .map(|k| eig.eigenvectors.column(k).into_owned())
            .collect();
    };
    let v_t = svd.v_t.expect("requested V");
    let scale = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    (0..n)
        .filter(|&k| svd.singular_values[k] <= rel_tol * scale || scale == 0.0)
        .map(|k| v_t.row(k).transpose())
        .collect()
}

/// Real eigen-directions of `m`: for each real eigenvalue, an orthonormal
/// basis of its eigenspace; for each complex pair, the real plane spanned by
/// the real and imaginary parts of an eigenvector.
pub fn real_invariant_pieces(m: &DMatrix<f64>) -> Result<Vec<Vec<DVector<f64>>>> {
    let d = m.nrows();
    let eigs = eigenvalues(m)?;
    let scale = eigs.iter().map(|z| z.norm()).fold(max_abs(m), f64::max).max(f64::MIN_POSITIVE);
    let mut pieces: Vec<Vec<DVector<f64>>> = Vec::new();
    let mut seen: Vec<Complex<f64>> = Vec::new();
    for z in eigs {
        if seen.iter().any(|s| (s - z).norm() <= 1e-9 * scale || (s.conj() - z).norm() <= 1e-9 * scale) {
            continue;
        }
        seen.push(z);
        if z.im.abs() <= 1e-10 * scale {
            let shifted = m - DMatrix::identity(d, d) * z.re;
            let ns = nullspace(&shifted, 1e-8);
            if !ns.is_empty() {
                pieces.push(ns);
            }
        } else {
            // complex eigenvector from the kernel of the 2d x 2d real form
            let mut big = DMatrix::zeros(2 * d, 2 * d);
            let re = m - DMatrix::identity(d, d) * z.re;
            big.view_mut((0, 0), (d, d)).copy_from(&re);
            big.view_mut((d, d), (d, d)).copy_from(&re);
            big.view_mut((0, d), (d, d)).copy_from(&(DMatrix::identity(d, d) * z.im));
            big.view_mut((d, 0), (d, d)).copy_from(&(DMatrix::identity(d, d) * -z.im));
            let ns = nullspace(&big, 1e-8);
            if let Some(v) = ns.first() {
                let x = v.rows(0, d).into_owned();
                let y = v.rows(d, d).into_owned();
                pieces.push(vec![x, y]);
            }
        }
    }
    Ok(pieces)
}

/// Symmetric positive semidefinite square root inverse `g^{-1/2}`.
pub fn inverse_sqrt_spd(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = SymmetricEigen::new(g.clone());
    if eig.eigenvalues.iter().any(|&x| x <= 0.0) {
        return None;
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()));
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

pub fn min_eigenvalue_sym(g: &DMatrix<f64>) -> f64 {
    let sym = (g + g.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Fixed-shape pairwise summation; the result depends only on the input
/// order, never on thread count.
pub fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let mid = n / 2;
            tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
        }
    }
}

/// `log Σ exp(x_i)` with the same fixed reduction shape as [`tree_sum`].
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    let shifted: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    max + tree_sum(&shifted).ln()
}

/// Incrementally maintained orthonormal basis with a relative rank
/// tolerance.
#[derive(Clone, Debug)]
pub struct FloatSpan {
    dim: usize,
    ortho: Vec<DVector<f64>>,
    tol: f64,
}

impl FloatSpan {
    pub fn new(dim: usize, tol: f64) -> Self {
        FloatSpan { dim, ortho: Vec::new(), tol }
    }

    pub fn len(&self) -> usize {
        self.ortho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ortho.is_empty()
    }

    pub fn ambient(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[DVector<f64>] {
        &self.ortho
    }

    fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.ortho {
                let c = q.dot(&r);
                r -= q * c;
            }
        }
        r
    }

    /// Adds `v` if it is independent of the current span; returns whether it
    /// was added.
    pub fn insert(&mut self, v: &DVector<f64>) -> bool {
        let norm = v.norm();
        if norm == 0.0 || self.ortho.len() == self.dim {
            return false;
        }
        let r = self.residual(v);
        let rn = r.norm();
        if rn <= self.tol * norm {
            return false;
        }
        self.ortho.push(r / rn);
        true
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        let norm = v.norm();
        norm == 0.0 || self.residual(v).norm() <= self.tol * norm
    }

    /// Relative distance of `v` from the span.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        let norm = v.norm();
        if norm == 0.0 {
            0.0
        } else {
            self.residual(v).norm() / norm
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schur_stall_is_recovered() {
        // plain shifted QR cycles on this one; spectrum is {0, -58 ± 15.36i}
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[-30.0, -90.857_142_857_142_83, 7.142857142857146, 6.2e-15, -27.428571428571423, -11.428571428571423, 30.0, -32.57142857142858, -58.571428571428555],
        );
        let ev = eigenvalues(&m).unwrap();
        let sum: Complex<f64> = ev.iter().sum();
        assert!((sum.re - m.trace()).abs() < 1e-9 && sum.im.abs() < 1e-9);
        let rho = spectral_radius(&m).unwrap();
        assert!((rho - (58f64.powi(2) + 15.362291495737239f64.powi(2)).sqrt()).abs() < 1e-8, "{rho}");
    }

    #[test]
    fn spectral_radius_examples() {
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(spectral_radius(&nil).unwrap(), 0.0);
        let diag = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        assert_eq!(spectral_radius(&diag).unwrap(), 4.0);
        let th: f64 = 0.7;
        let rot = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        assert!((spectral_radius(&rot).unwrap() - 1.0).abs() < 1e-15);
        let big = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!((spectral_radius(&big).unwrap() - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn singular_values_closed_form_matches_svd() {
        let m = DMatrix::from_row_slice(2, 2, &[0.3, -1.2, 2.5, 0.7]);
        let closed = singular_values(&m);
        let svd = m.clone().svd(false, false).singular_values;
        let mut s: Vec<f64> = svd.iter().cloned().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in closed.iter().zip(&s) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nullspace_of_rank_one() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let ns = nullspace(&m, 1e-10);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((&m * v).norm() < 1e-12);
        }
    }

    #[test]
    fn invariant_pieces_of_rotation_and_diagonal() {
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let pieces = real_invariant_pieces(&rot).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].len(), 2);
        let diag = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let pieces = real_invariant_pieces(&diag).unwrap();
        assert_eq!(pieces.len(), 2);
        assert!(pieces.iter().all(|p| p.len() == 1));
    }

    #[test]
    fn float_span_rank() {
        let mut s = FloatSpan::new(3, 1e-10);
        assert!(s.insert(&DVector::from_vec(vec![1.0, 0.0, 0.0])));
        assert!(!s.insert(&DVector::from_vec(vec![2.0, 0.0, 0.0])));
        assert!(s.insert(&DVector::from_vec(vec![1.0, 1.0, 0.0])));
        assert!(s.contains(&DVector::from_vec(vec![3.0, -1.0, 0.0])));
        assert!(!s.contains(&DVector::from_vec(vec![0.0, 0.0, 1.0])));
    }

    #[test]
    fn tree_sum_is_order_fixed() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_eq!(tree_sum(&xs), tree_sum(&xs.clone()));
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }
}
