//! The `s = 2` equilibrium state in closed form.
//!
//! The transfer operators `L(B) = Σ A_iᵀ B A_i` and `L̂(B) = Σ A_i B A_iᵀ`
//! act on symmetric matrices. Their positive definite Perron eigenmatrices
//! `Q` and `Q̂`, normalized so that `tr(Q Q̂) = 1`, give the cylinder measures
//! `μ([w]) = e^{-nP} ‖U A_w Ûᵀ‖_F²` with `Q = UᵀU`, `Q̂ = ÛᵀÛ`.

use nalgebra::{Cholesky, Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, tree_sum};
use crate::pressure::kron_square_sum;
use crate::products::ProductTree;
use crate::structure::{find_invariant_subspace, SearchBudget};
use crate::tuple::{Budget, MatrixTuple, Word};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Relative distance below which a second eigenvalue counts as a copy of
/// the Perron eigenvalue.
pub const PERRON_SIMPLICITY_TOL: f64 = 1e-6;

/// Number of coordinates of a symmetric `d x d` matrix.
pub fn sym_dim(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Upper-triangle coordinates in the basis `E_ii`, `E_ij + E_ji`.
pub fn sym_coords(b: &DMatrix<f64>) -> DVector<f64> {
    let d = b.nrows();
    let mut v = DVector::zeros(sym_dim(d));
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            v[k] = if i == j { b[(i, i)] } else { 0.5 * (b[(i, j)] + b[(j, i)]) };
            k += 1;
        }
    }
    v
}

pub fn sym_from_coords(v: &DVector<f64>, d: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            b[(i, j)] = v[k];
            b[(j, i)] = v[k];
            k += 1;
        }
    }
    b
}

fn sym_weights(d: usize) -> DVector<f64> {
    let mut w = DVector::zeros(sym_dim(d));
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            w[k] = if i == j { 1.0 } else { 2.0 };
            k += 1;
        }
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `B ↦ Σ A_iᵀ B A_i`.
    TransposeSide,
    /// `B ↦ Σ A_i B A_iᵀ`.
    PlainSide,
}

/// A linear map on symmetric matrices stored in symmetric coordinates.
#[derive(Clone, Debug)]
pub struct SymOperator {
    side: Side,
    dim: usize,
    generators: Vec<DMatrix<f64>>,
    matrix: DMatrix<f64>,
    weights: DVector<f64>,
}

impl SymOperator {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Matrix of the map in symmetric coordinates.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Direct application to a symmetric matrix.
    pub fn apply(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for a in &self.generators {
            out += match self.side {
                Side::TransposeSide => a.transpose() * b * a,
                Side::PlainSide => a * b * a.transpose(),
            };
        }
        out
    }

    fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.component_mul(&self.weights).dot(y)
    }

    /// Frobenius norm of the symmetric matrix with coordinates `x`.
    fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).sqrt()
    }
}

pub fn build_transfer_operator(tuple: &MatrixTuple, side: Side) -> SymOperator {
    let d = tuple.dim();
    let n = sym_dim(d);
    let generators = tuple.floats().to_vec();
    let mut op = SymOperator { side, dim: d, generators, matrix: DMatrix::zeros(n, n), weights: sym_weights(d) };
    let mut col = 0;
    for i in 0..d {
        for j in i..d {
            let mut e = DMatrix::zeros(d, d);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let image = sym_coords(&op.apply(&e));
            op.matrix.set_column(col, &image);
            col += 1;
        }
    }
    op
}

#[derive(Clone, Debug, Serialize)]
pub struct PerronEigen {
    pub eigenvalue: f64,
    /// Unit Frobenius norm, positive trace.
    #[serde(serialize_with = "ser_matrix")]
    pub eigenmatrix: DMatrix<f64>,
    /// `‖L Q - λ Q‖_F / ‖Q‖_F`.
    pub residual: f64,
    pub iterations: usize,
}

pub(crate) fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        seq.serialize_element(&m.row(r).iter().cloned().collect::<Vec<f64>>())?;
    }
    seq.end()
}

/// Positive root of `1 + λ + ... + λ^{k-1} = c`.
fn geometric_root(c: f64, k: usize) -> f64 {
    if c <= 1.0 {
        return 0.0;
    }
    let f = |x: f64| (0..k).fold((0.0, 1.0), |(acc, p), _| (acc + p, p * x)).0 - c;
    let (mut lo, mut hi) = (0.0, c.max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Power iteration for the Perron eigenmatrix, seeded with the identity and
/// run on `Σ_{k<d} L^k`, whose images of nonzero semidefinite matrices are
/// definite when the tuple is irreducible.
pub fn perron_eigen(op: &SymOperator, tol: f64, max_iter: usize) -> Result<PerronEigen> {
    let d = op.dim;
    let l = &op.matrix;
    let accelerate = |x: &DVector<f64>| {
        let mut term = x.clone();
        let mut acc = x.clone();
        for _ in 1..d {
            term = l * term;
            acc += &term;
        }
        acc
    };
    let mut x = sym_coords(&DMatrix::identity(d, d));
    x /= op.norm(&x);
    let mut last_res = f64::INFINITY;
    let residual_of = |x: &DVector<f64>| {
        let lx = l * x;
        let lam = op.inner(x, &lx);
        (lam, op.norm(&(lx - x * lam)))
    };
    for it in 1..=max_iter {
        let y = accelerate(&x);
        let ny = op.norm(&y);
        if ny == 0.0 {
            return Err(Error::DegenerateEigenmatrix { min_eigenvalue: 0.0 });
        }
        let acc_value = op.inner(&x, &y);
        x = y / ny;
        let (rayleigh, res) = residual_of(&x);
        last_res = res;
        if res <= tol * rayleigh.abs().max(1.0) {
            // one more shifted solve takes the eigenvector to working
            // precision; the stopping rule alone leaves errors of order
            // tol / spectral gap
            if let Some(polished) = inverse_polish(op, &x, rayleigh) {
                let (r2, res2) = residual_of(&polished);
                if res2 <= res {
                    let acc_value = op.inner(&polished, &accelerate(&polished));
                    return finish(op, polished, acc_value, r2, it);
                }
            }
            return finish(op, x, acc_value, rayleigh, it);
        }
        // polish with a few shifted inverse steps once the direction settles
        if it % 64 == 0 && res < 1e-4 * rayleigh.abs().max(1.0) {
            if let Some(polished) = inverse_polish(op, &x, rayleigh) {
                let (r2, res2) = residual_of(&polished);
                if res2 < res {
                    x = polished;
                    if res2 <= tol * r2.abs().max(1.0) {
                        let acc_value = op.inner(&x, &accelerate(&x));
                        return finish(op, x, acc_value, r2, it);
                    }
                }
            }
        }
    }
    Err(Error::NotConverged { max_iter, residual: last_res })
}

fn inverse_polish(op: &SymOperator, x: &DVector<f64>, shift: f64) -> Option<DVector<f64>> {
    let n = op.matrix.nrows();
    let shifted = &op.matrix - DMatrix::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut v = x.clone();
    for _ in 0..3 {
        let z = lu.solve(&v)?;
        let nz = op.norm(&z);
        if !nz.is_finite() || nz == 0.0 {
            return None;
        }
        v = z / nz;
    }
    if op.inner(&v, x) < 0.0 {
        v = -v;
    }
    Some(v)
}

fn finish(op: &SymOperator, mut x: DVector<f64>, acc_value: f64, rayleigh: f64, iterations: usize) -> Result<PerronEigen> {
    let d = op.dim;
    let eigenvalue = if (2..=4).contains(&d) { geometric_root(acc_value, d) } else { rayleigh };
    let mut q = sym_from_coords(&x, d);
    if q.trace() < 0.0 {
        q = -q;
        x = -x;
    }
    let residual = op.norm(&(&op.matrix * &x - &x * eigenvalue)) / op.norm(&x);
    Ok(PerronEigen { eigenvalue, eigenmatrix: q, residual, iterations })
}

/// Eigen data of the `s = 2` equilibrium state.
#[derive(Clone, Debug, Serialize)]
pub struct KusuokaData {
    /// `P(A, 2) = log λ`.
    pub pressure: f64,
    /// Perron eigenvalue `λ = e^{P(A,2)}`.
    pub eigenvalue: f64,
    #[serde(serialize_with = "ser_matrix")]
    pub q: DMatrix<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub q_hat: DMatrix<f64>,
    /// Upper triangular with `Q = UᵀU`.
    #[serde(serialize_with = "ser_matrix")]
    pub u: DMatrix<f64>,
    /// Upper triangular with `Q̂ = ÛᵀÛ`.
    #[serde(serialize_with = "ser_matrix")]
    pub u_hat: DMatrix<f64>,
    pub residual: f64,
    pub residual_hat: f64,
    pub min_eigenvalue_q: f64,
    pub min_eigenvalue_q_hat: f64,
    pub iterations: usize,
    /// Present when the invariant-subspace search found a witness.
    pub reducibility_warning: Option<String>,
    #[serde(skip)]
    tuple: MatrixTuple,
}

fn check_definite(q: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let min = linalg::min_eigenvalue_sym(q);
    let scale = linalg::frobenius_norm(q);
    if min <= tol.sqrt() * scale {
        return Err(Error::DegenerateEigenmatrix { min_eigenvalue: min });
    }
    Ok(min)
}

fn upper_factor(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (q + q.transpose()) * 0.5;
    let ch = Cholesky::new(sym).ok_or(Error::DegenerateEigenmatrix { min_eigenvalue: linalg::min_eigenvalue_sym(q) })?;
    Ok(ch.l().transpose())
}

/// Computes `Q`, `Q̂`, their factorizations and the pressure `P(A, 2)`.
pub fn kusuoka_measure(tuple: &MatrixTuple, tol: f64) -> Result<KusuokaData> {
    kusuoka_measure_with(tuple, tol, DEFAULT_MAX_ITER)
}

pub fn kusuoka_measure_with(tuple: &MatrixTuple, tol: f64, max_iter: usize) -> Result<KusuokaData> {
    let mut reducibility_warning = find_invariant_subspace(tuple, &SearchBudget::default())
        .witness()
        .map(|w| format!("tuple has a {}-dimensional invariant subspace; the measure may be degenerate", w.dim()));
    let l = build_transfer_operator(tuple, Side::TransposeSide);
    let l_hat = build_transfer_operator(tuple, Side::PlainSide);
    let pe = perron_eigen(&l, tol, max_iter)?;
    let pe_hat = perron_eigen(&l_hat, tol, max_iter)?;
    // a nilpotent transfer operator has no equilibrium state to normalize
    if pe.eigenvalue.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::DegenerateEigenmatrix { min_eigenvalue: 0.0 });
    }
    if reducibility_warning.is_none() {
        // invariant subspaces with irrational coordinates escape the search
        // above but still show up as a repeated Perron eigenvalue
        let copies = linalg::eigenvalues(l.matrix())?
            .iter()
            .filter(|z| (*z - pe.eigenvalue).norm() <= PERRON_SIMPLICITY_TOL * pe.eigenvalue)
            .count();
        if copies > 1 {
            reducibility_warning = Some(format!(
                "the Perron eigenvalue {} has multiplicity {copies}; the tuple is reducible over the reals and the measure is not unique",
                pe.eigenvalue
            ));
        }
    }
    let min_q = check_definite(&pe.eigenmatrix, tol)?;
    let min_q_hat = check_definite(&pe_hat.eigenmatrix, tol)?;
    let q_hat = pe_hat.eigenmatrix.clone();
    let scale = (&pe.eigenmatrix * &q_hat).trace();
    let q = &pe.eigenmatrix / scale;
    let u = upper_factor(&q)?;
    let u_hat = upper_factor(&q_hat)?;
    Ok(KusuokaData {
        pressure: pe.eigenvalue.ln(),
        eigenvalue: pe.eigenvalue,
        min_eigenvalue_q: min_q / scale,
        min_eigenvalue_q_hat: min_q_hat,
        q,
        q_hat,
        u,
        u_hat,
        residual: pe.residual,
        residual_hat: pe_hat.residual,
        iterations: pe.iterations.max(pe_hat.iterations),
        reducibility_warning,
        tuple: tuple.clone(),
    })
}

impl KusuokaData {
    pub fn tuple(&self) -> &MatrixTuple {
        &self.tuple
    }

    fn weight(&self, a: &DMatrix<f64>) -> f64 {
        let m = &self.u * a * self.u_hat.transpose();
        m.iter().map(|x| x * x).sum()
    }

    /// `μ([w])`; exactly zero when the product is exactly zero.
    pub fn cylinder_measure(&self, w: &Word) -> Result<f64> {
        let p = self.tuple.word_product(w)?;
        if p.is_zero(self.tuple.zero_threshold(w.len())) {
            return Ok(0.0);
        }
        Ok(self.weight(p.float()) * (-(w.len() as f64) * self.pressure).exp())
    }

    /// `μ([x] ∩ σ^{-n}[y])` for `n >= |x|`, by the closed form
    /// `e^{-(n+|y|)P} tr((A_x Q̂ A_xᵀ) L^{n-|x|}(A_yᵀ Q A_y))`.
    pub fn correlation(&self, x: &Word, y: &Word, n: usize) -> Result<f64> {
        Ok(self.correlation_series(x, y, n)?.pop().map(|(_, v)| v).unwrap_or(0.0))
    }

    /// `(n, μ([x] ∩ σ^{-n}[y]))` for `n = |x|..=n_max`.
    pub fn correlation_series(&self, x: &Word, y: &Word, n_max: usize) -> Result<Vec<(usize, f64)>> {
        if n_max < x.len() {
            return Err(Error::InvalidArgument(format!("shift {n_max} is shorter than the first word ({})", x.len())));
        }
        let ax = self.tuple.word_product(x)?;
        let ay = self.tuple.word_product(y)?;
        let left = ax.float() * &self.q_hat * ax.float().transpose();
        let mut right = ay.float().transpose() * &self.q * ay.float();
        let op = build_transfer_operator(&self.tuple, Side::TransposeSide);
        let mut out = Vec::with_capacity(n_max + 1 - x.len());
        for n in x.len()..=n_max {
            if n > x.len() {
                right = op.apply(&right);
            }
            let scale = (-((n + y.len()) as f64) * self.pressure).exp();
            out.push((n, (&left * &right).trace() * scale));
        }
        Ok(out)
    }

    /// All cylinder measures, norms and singular values up to length
    /// `n_max`.
    pub fn cylinder_table(&self, n_max: usize, budget: &Budget) -> Result<CylinderTable> {
        budget.check_words(self.tuple.symbols(), n_max)?;
        let d = self.tuple.dim();
        let mut levels = vec![CylinderLevel {
            n: 0,
            measure: vec![1.0],
            norm: vec![1.0],
            zero: vec![false],
            singular_values: vec![vec![1.0; d]],
        }];
        let mut tree = ProductTree::new(&self.tuple, budget);
        for n in 1..=n_max {
            let scale = (-(n as f64) * self.pressure).exp();
            let level = tree.advance()?;
            let rows: Vec<(f64, Vec<f64>)> = level.par_map(|_, m, zero| {
                if zero {
                    return (0.0, vec![0.0; d]);
                }
                let m = m.into_owned();
                (self.weight(&m) * scale, linalg::singular_values(&m))
            });
            let zero: Vec<bool> = (0..level.len()).map(|i| level.is_zero(i)).collect();
            let mut measure = Vec::with_capacity(rows.len());
            let mut norm = Vec::with_capacity(rows.len());
            let mut singular_values = Vec::with_capacity(rows.len());
            for (mu, sv) in rows {
                measure.push(mu);
                norm.push(sv[0]);
                singular_values.push(sv);
            }
            levels.push(CylinderLevel { n, measure, norm, zero, singular_values });
        }
        Ok(CylinderTable { symbols: self.tuple.symbols(), dim: d, eigenvalue: self.eigenvalue, pressure: self.pressure, levels })
    }

    /// `(c_lower, c_upper)` bracketing `μ([w]) e^{nP} / ‖A_w‖²`.
    pub fn gibbs_constants(&self) -> (f64, f64) {
        let su = linalg::singular_values(&self.u);
        let sh = linalg::singular_values(&self.u_hat);
        let lower = su.last().unwrap().powi(2) * sh.last().unwrap().powi(2);
        let upper = self.tuple.dim() as f64 * su[0].powi(2) * sh[0].powi(2);
        (lower, upper)
    }
}

#[derive(Clone, Debug)]
pub struct CylinderLevel {
    pub n: usize,
    /// `μ([w])` in lexicographic word order.
    pub measure: Vec<f64>,
    /// `‖A_w‖`.
    pub norm: Vec<f64>,
    /// Zero-product flags (exact under the rational policy).
    pub zero: Vec<bool>,
    /// Singular values of `A_w`, decreasing.
    pub singular_values: Vec<Vec<f64>>,
}

/// Cylinder data by word length; level `n` lists words of length `n`
/// lexicographically.
#[derive(Clone, Debug)]
pub struct CylinderTable {
    pub symbols: usize,
    pub dim: usize,
    pub eigenvalue: f64,
    pub pressure: f64,
    pub levels: Vec<CylinderLevel>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub n_max: usize,
    /// `max |Σ_k μ([k w]) - μ([w])|`.
    pub left: f64,
    /// `max |Σ_k μ([w k]) - μ([w])|`.
    pub right: f64,
    /// `max_n |Σ_{|w|=n} μ([w]) - 1|`.
    pub mass: f64,
}

impl ConsistencyReport {
    pub fn max_violation(&self) -> f64 {
        self.left.max(self.right).max(self.mass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GibbsReport {
    pub c_lower: f64,
    pub c_upper: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub min_word: Option<Word>,
    pub max_word: Option<Word>,
    pub words_checked: usize,
    /// First word whose ratio leaves `[c_lower, c_upper]`.
    pub violation: Option<Word>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovRow {
    pub n: usize,
    /// `(1/n) Σ μ([w]) log ‖A_w‖`.
    pub raw: f64,
    /// Minimum of `raw` over lengths up to `n`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumRow {
    pub n: usize,
    /// `(1/n) Σ μ([w]) log α_i(A_w)`, `i = 1..d`.
    pub exponents: Vec<f64>,
    /// Running minimum over lengths up to `n` of the partial sums
    /// `Σ_{i<=k} exponents_i`.
    pub partial_sum_bounds: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    /// `H_n = -Σ_{|w|=n} μ([w]) log μ([w])`.
    pub block_entropy: f64,
    /// `H_n / n`.
    pub block_average: f64,
    /// `H_n - H_{n-1}`, reported as the Shannon entropy estimate.
    pub shannon: f64,
    /// `P - 2 Λ_n` with `Λ_n` the top Lyapunov bound.
    pub variational: f64,
    pub gap: f64,
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

impl CylinderTable {
    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn measure(&self, w: &Word) -> f64 {
        self.levels[w.len()].measure[w.index(self.symbols)]
    }

    pub fn consistency_check(&self) -> ConsistencyReport {
        let m = self.symbols;
        let (mut left, mut right, mut mass) = (0.0f64, 0.0f64, 0.0f64);
        for n in 1..self.levels.len() {
            let prev = &self.levels[n - 1].measure;
            let cur = &self.levels[n].measure;
            let stride = prev.len();
            for (j, &mu) in prev.iter().enumerate() {
                let l: Vec<f64> = (0..m).map(|k| cur[k * stride + j]).collect();
                let r: Vec<f64> = (0..m).map(|k| cur[j * m + k]).collect();
                left = left.max((tree_sum(&l) - mu).abs());
                right = right.max((tree_sum(&r) - mu).abs());
            }
            mass = mass.max((tree_sum(cur) - 1.0).abs());
        }
        ConsistencyReport { n_max: self.n_max(), left, right, mass }
    }

    pub fn gibbs_verify(&self, constants: (f64, f64)) -> GibbsReport {
        let (c_lower, c_upper) = constants;
        let mut rep = GibbsReport {
            c_lower,
            c_upper,
            min_ratio: f64::INFINITY,
            max_ratio: f64::NEG_INFINITY,
            min_word: None,
            max_word: None,
            words_checked: 0,
            violation: None,
        };
        let slack = 1e-9;
        for level in &self.levels[1..] {
            let growth = (level.n as f64 * self.pressure).exp();
            for i in 0..level.measure.len() {
                if level.zero[i] || level.norm[i] == 0.0 {
                    continue;
                }
                let ratio = level.measure[i] * growth / (level.norm[i] * level.norm[i]);
                rep.words_checked += 1;
                let word = || Word::from_index(i, self.symbols, level.n);
                if ratio < rep.min_ratio {
                    rep.min_ratio = ratio;
                    rep.min_word = Some(word());
                }
                if ratio > rep.max_ratio {
                    rep.max_ratio = ratio;
                    rep.max_word = Some(word());
                }
                if rep.violation.is_none() && (ratio < c_lower * (1.0 - slack) || ratio > c_upper * (1.0 + slack)) {
                    rep.violation = Some(word());
                }
            }
        }
        rep
    }

    pub fn lyapunov_top(&self) -> Vec<LyapunovRow> {
        let mut bound = f64::INFINITY;
        self.levels[1..]
            .iter()
            .map(|level| {
                let terms: Vec<f64> = level
                    .measure
                    .iter()
                    .zip(&level.norm)
                    .map(|(&mu, &nm)| if mu > 0.0 { mu * nm.ln() } else { 0.0 })
                    .collect();
                let raw = tree_sum(&terms) / level.n as f64;
                bound = bound.min(raw);
                LyapunovRow { n: level.n, raw, bound }
            })
            .collect()
    }

    pub fn lyapunov_spectrum(&self) -> Vec<SpectrumRow> {
        let mut bounds = vec![f64::INFINITY; self.dim];
        self.levels[1..]
            .iter()
            .map(|level| {
                let exponents: Vec<f64> = (0..self.dim)
                    .map(|i| {
                        let terms: Vec<f64> = level
                            .measure
                            .iter()
                            .zip(&level.singular_values)
                            .map(|(&mu, sv)| if mu > 0.0 { mu * sv[i].ln() } else { 0.0 })
                            .collect();
                        tree_sum(&terms) / level.n as f64
                    })
                    .collect();
                let mut partial = 0.0;
                for (k, e) in exponents.iter().enumerate() {
                    partial += e;
                    bounds[k] = bounds[k].min(partial);
                }
                SpectrumRow { n: level.n, exponents, partial_sum_bounds: bounds.clone() }
            })
            .collect()
    }

    pub fn entropy_estimate(&self) -> Vec<EntropyRow> {
        let lyap = self.lyapunov_top();
        let mut prev = 0.0;
        self.levels[1..]
            .iter()
            .zip(lyap)
            .map(|(level, ly)| {
                let terms: Vec<f64> = level.measure.iter().map(|&m| -xlogx(m)).collect();
                let h = tree_sum(&terms);
                let shannon = h - prev;
                prev = h;
                let variational = self.pressure - 2.0 * ly.bound;
                EntropyRow {
                    n: level.n,
                    block_entropy: h,
                    block_average: h / level.n as f64,
                    shannon,
                    variational,
                    gap: (shannon - variational).abs(),
                }
            })
            .collect()
    }
}

/// Spectral verdict on mixing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeripheralVerdict {
    /// `e^P` is the only eigenvalue of maximal modulus.
    MixingConsistent,
    /// Further eigenvalues of maximal modulus exist.
    ObstructionSuspected,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeripheralSpectrum {
    pub spectral_radius: f64,
    /// `(re, im)` pairs with modulus at least `(1 - tol) ρ`.
    pub eigenvalues: Vec<(f64, f64)>,
    pub verdict: PeripheralVerdict,
}

/// Eigenvalues of `Σ A_i ⊗ A_i` of modulus at least `(1 - tol) e^P`.
pub fn peripheral_spectrum(tuple: &MatrixTuple, tol: f64, budget: &Budget) -> Result<PeripheralSpectrum> {
    budget.check_dimension(tuple.dim() * tuple.dim())?;
    let eigs: Vec<Complex<f64>> = linalg::eigenvalues(&kron_square_sum(tuple))?;
    let rho = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut peripheral: Vec<(f64, f64)> =
        eigs.iter().filter(|z| z.norm() >= (1.0 - tol) * rho).map(|z| (z.re, z.im)).collect();
    peripheral.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let verdict = if peripheral.len() == 1 && peripheral[0].0 > 0.0 {
        PeripheralVerdict::MixingConsistent
    } else {
        PeripheralVerdict::ObstructionSuspected
    };
    Ok(PeripheralSpectrum { spectral_radius: rho, eigenvalues: peripheral, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn notmix() -> MatrixTuple {
        MatrixTuple::from_ints(2, &[&[0, 2, 1, 0], &[0, 1, 2, 0]]).unwrap()
    }

    fn alpha() -> MatrixTuple {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.8, 0.6, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.6, 0.8, 0.0]);
        MatrixTuple::from_float(vec![a, b]).unwrap()
    }

    fn scalar() -> MatrixTuple {
        MatrixTuple::from_ints(1, &[&[2], &[3]]).unwrap()
    }

    #[test]
    fn operator_examples() {
        let id = MatrixTuple::from_ints(2, &[&[1, 0, 0, 1], &[1, 0, 0, 1]]).unwrap();
        let op = build_transfer_operator(&id, Side::TransposeSide);
        assert_eq!(op.matrix(), &(DMatrix::identity(3, 3) * 2.0));
        let op = build_transfer_operator(&alpha(), Side::TransposeSide);
        let out = op.apply(&DMatrix::identity(2, 2));
        assert!((out - DMatrix::identity(2, 2)).abs().max() < 1e-15);
        let op = build_transfer_operator(&notmix(), Side::TransposeSide);
        let out = op.apply(&DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 7.0]));
        assert_eq!(out, DMatrix::from_row_slice(2, 2, &[35.0, 0.0, 0.0, 15.0]));
    }

    #[test]
    fn operator_matrix_matches_direct_application() {
        let t = MatrixTuple::from_ints(3, &[&[1, 2, 0, -1, 0, 3, 2, 2, 1], &[0, 1, 1, 1, 0, 0, -2, 1, 1]]).unwrap();
        for side in [Side::TransposeSide, Side::PlainSide] {
            let op = build_transfer_operator(&t, side);
            let b = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 3.0, 0.25, 0.5, 0.25, 1.0]);
            let via = sym_from_coords(&(op.matrix() * sym_coords(&b)), 3);
            assert!((via - op.apply(&b)).abs().max() < 1e-12);
        }
    }

    #[test]
    fn perron_examples() {
        let pe = perron_eigen(&build_transfer_operator(&notmix(), Side::TransposeSide), 1e-12, 10_000).unwrap();
        assert!((pe.eigenvalue - 5.0).abs() < 1e-12);
        assert!((pe.eigenmatrix.clone() - DMatrix::identity(2, 2) / 2f64.sqrt()).abs().max() < 1e-12);
        let pe = perron_eigen(&build_transfer_operator(&scalar(), Side::TransposeSide), 1e-12, 10).unwrap();
        assert!((pe.eigenvalue - 13.0).abs() < 1e-12);
        let pe = perron_eigen(&build_transfer_operator(&alpha(), Side::TransposeSide), 1e-12, 10_000).unwrap();
        assert!((pe.eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn notmix_measure() {
        let kd = kusuoka_measure(&notmix(), 1e-12).unwrap();
        assert!((kd.pressure - 5f64.ln()).abs() < 1e-12);
        assert!((kd.q.clone() - DMatrix::identity(2, 2) / 2f64.sqrt()).abs().max() < 1e-12);
        let mu = |w: &[usize]| kd.cylinder_measure(&Word::from_one_based(w)).unwrap();
        assert!((mu(&[]) - 1.0).abs() < 1e-12);
        assert!((mu(&[1, 1]) - 4.0 / 25.0).abs() < 1e-12);
        assert!((mu(&[1, 2]) - 17.0 / 50.0).abs() < 1e-12);
        let (lo, hi) = kd.gibbs_constants();
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        assert!(kd.reducibility_warning.is_none());
    }

    #[test]
    fn reducible_pair_is_degenerate() {
        let t = MatrixTuple::from_ints(2, &[&[1, 0, 0, 2], &[3, 0, 0, 1]]).unwrap();
        assert!(matches!(kusuoka_measure(&t, 1e-12), Err(Error::DegenerateEigenmatrix { .. })));
    }

    #[test]
    fn irrational_invariant_lines_are_flagged() {
        // commuting symmetric pair: shared eigenlines with slopes involving √10
        let t = MatrixTuple::from_ints(2, &[&[0, -3, -3, -2], &[2, -3, -3, 0]]).unwrap();
        let kd = kusuoka_measure(&t, 1e-12).unwrap();
        assert!(kd.reducibility_warning.is_some());
        let copies = linalg::eigenvalues(build_transfer_operator(&t, Side::TransposeSide).matrix())
            .unwrap()
            .iter()
            .filter(|z| (*z - kd.eigenvalue).norm() <= PERRON_SIMPLICITY_TOL * kd.eigenvalue)
            .count();
        assert_eq!(copies, 2);
        assert!(kusuoka_measure(&notmix(), 1e-12).unwrap().reducibility_warning.is_none());
    }

    #[test]
    fn zero_tuple_has_no_measure() {
        let t = MatrixTuple::from_ints(1, &[&[0], &[0]]).unwrap();
        assert!(matches!(kusuoka_measure(&t, 1e-12), Err(Error::DegenerateEigenmatrix { .. })));
    }

    #[test]
    fn tables_and_estimates() {
        let kd = kusuoka_measure(&notmix(), 1e-12).unwrap();
        let table = kd.cylinder_table(6, &Budget::default()).unwrap();
        assert!(table.consistency_check().max_violation() < 1e-12);
        let g = table.gibbs_verify(kd.gibbs_constants());
        assert!(g.violation.is_none());
        let kd = kusuoka_measure(&scalar(), 1e-12).unwrap();
        let table = kd.cylinder_table(4, &Budget::default()).unwrap();
        let expected = (4.0 * 2f64.ln() + 9.0 * 3f64.ln()) / 13.0;
        for row in table.lyapunov_top() {
            assert!((row.raw - expected).abs() < 1e-12);
        }
        let g = table.gibbs_verify(kd.gibbs_constants());
        assert!((g.min_ratio - 1.0).abs() < 1e-12 && (g.max_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_of_empty_words_is_one() {
        let kd = kusuoka_measure(&notmix(), 1e-12).unwrap();
        for (_, v) in kd.correlation_series(&Word::empty(), &Word::empty(), 5).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let x = Word::from_one_based(&[1]);
        let c = kd.correlation(&x, &x, 2).unwrap();
        let direct = kd.cylinder_measure(&Word::from_one_based(&[1, 1, 1])).unwrap()
            + kd.cylinder_measure(&Word::from_one_based(&[1, 2, 1])).unwrap();
        assert!((c - direct).abs() < 1e-12);
        assert!(kd.correlation(&Word::from_one_based(&[1, 1]), &x, 1).is_err());
    }

    #[test]
    fn peripheral() {
        let ps = peripheral_spectrum(&notmix(), 1e-9, &Budget::default()).unwrap();
        assert_eq!(ps.eigenvalues.len(), 2);
        assert!((ps.eigenvalues[0].0 - 5.0).abs() < 1e-9 && (ps.eigenvalues[1].0 + 5.0).abs() < 1e-9);
        assert_eq!(ps.verdict, PeripheralVerdict::ObstructionSuspected);
        let ps = peripheral_spectrum(&scalar(), 1e-9, &Budget::default()).unwrap();
        assert_eq!(ps.eigenvalues, vec![(13.0, 0.0)]);
        assert_eq!(ps.verdict, PeripheralVerdict::MixingConsistent);
    }
}
