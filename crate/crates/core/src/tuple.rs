//! Matrix tuples, words over their symbols, and products along words.

use std::fmt;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::{ratio_to_f64, QMatrix};

/// Default cap on the number of words of a single length.
pub const DEFAULT_PRODUCT_CAP: u128 = 10_000_000;
/// Default cap on the size of Kronecker-square problems.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;
/// Environment variable overriding [`Budget::product_cap`].
pub const BUDGET_ENV: &str = "THERMOFORM_BUDGET_CAP";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum number of words enumerated at one length.
    pub product_cap: u128,
    /// Maximum dimension of a Kronecker-square operator.
    pub dimension_cap: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { product_cap: DEFAULT_PRODUCT_CAP, dimension_cap: DEFAULT_DIMENSION_CAP }
    }
}

impl Budget {
    /// Default budget with the product cap taken from `THERMOFORM_BUDGET_CAP`
    /// when it is set to a positive integer.
    pub fn from_env() -> Self {
        let mut b = Budget::default();
        if let Some(cap) = std::env::var(BUDGET_ENV).ok().and_then(|v| v.trim().parse::<u128>().ok()) {
            if cap > 0 {
                b.product_cap = cap;
            }
        }
        b
    }

    pub fn check_words(&self, symbols: usize, n: usize) -> Result<u128> {
        let count = word_count(symbols, n);
        if count > self.product_cap {
            return Err(Error::BudgetExceeded {
                what: format!("{symbols}^{n} words"),
                required: count,
                cap: self.product_cap,
            });
        }
        Ok(count)
    }

    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        if dim > self.dimension_cap {
            return Err(Error::DimensionCap { dim, cap: self.dimension_cap });
        }
        Ok(())
    }
}

/// `symbols^n`, saturating.
pub fn word_count(symbols: usize, n: usize) -> u128 {
    let mut c: u128 = 1;
    for _ in 0..n {
        c = c.saturating_mul(symbols as u128);
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarPolicy {
    ExactRational,
    DoublePrecision,
}

impl fmt::Display for ScalarPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalarPolicy::ExactRational => "exact-rational",
            ScalarPolicy::DoublePrecision => "double-precision",
        })
    }
}

/// A finite string of symbols, stored zero-based. Displayed and serialized
/// one-based, matching the usual `1..=M` labelling.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_zero_based(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    /// Builds a word from one-based symbols.
    ///
    /// # Panics
    /// On a zero symbol.
    pub fn from_one_based(symbols: &[usize]) -> Self {
        Word(symbols.iter().map(|&s| s.checked_sub(1).expect("symbols are one-based")).collect())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().trim_start_matches('(').trim_end_matches(')');
        if t.is_empty() {
            return Ok(Word::empty());
        }
        let mut out = Vec::new();
        for part in t.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()) {
            let s: usize = part
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad symbol {part:?} in word {text:?}")))?;
            if s == 0 {
                return Err(Error::InvalidArgument(format!("symbols are 1-based, got 0 in {text:?}")));
            }
            out.push(s - 1);
        }
        Ok(Word(out))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|s| s + 1).collect()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `(w_i, ..., w_n, w_1, ..., w_{i-1})` for zero-based `i`.
    pub fn rotate(&self, i: usize) -> Word {
        let mut v = self.0.clone();
        if !v.is_empty() {
            v.rotate_left(i % self.0.len());
        }
        Word(v)
    }

    /// Position of the word in the lexicographic enumeration of its length.
    pub fn index(&self, symbols: usize) -> usize {
        self.0.iter().fold(0, |acc, &s| acc * symbols + s)
    }

    /// Inverse of [`Word::index`].
    pub fn from_index(mut index: usize, symbols: usize, len: usize) -> Word {
        let mut v = vec![0; len];
        for slot in v.iter_mut().rev() {
            *slot = index % symbols;
            index /= symbols;
        }
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", s + 1)?;
        }
        write!(f, ")")
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        if v.contains(&0) {
            return Err(serde::de::Error::custom("symbols are 1-based"));
        }
        Ok(Word::from_one_based(&v))
    }
}

/// Lexicographic odometer over all words of a fixed length.
pub struct Words {
    symbols: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for Words {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let cur = self.current.take()?;
        let mut next = cur.clone();
        let mut i = next.len();
        let mut carried = true;
        while i > 0 {
            i -= 1;
            if next[i] + 1 < self.symbols {
                next[i] += 1;
                carried = false;
                break;
            }
            next[i] = 0;
        }
        if !carried {
            self.current = Some(next);
        }
        Some(Word(cur))
    }
}

/// All `symbols^n` words of length `n` in lexicographic order.
pub fn enumerate_words(symbols: usize, n: usize, budget: &Budget) -> Result<Words> {
    if symbols == 0 {
        return Err(Error::InvalidArgument("alphabet must be nonempty".into()));
    }
    budget.check_words(symbols, n)?;
    Ok(Words { symbols, current: Some(vec![0; n]) })
}

/// A square matrix in double precision, carrying its exact rational value
/// when one is known.
#[derive(Clone, Debug)]
pub struct Matrix {
    float: DMatrix<f64>,
    exact: Option<QMatrix>,
}

impl PartialEq for Matrix {
    fn eq(&self, other: &Self) -> bool {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.float == other.float,
        }
    }
}

impl Matrix {
    pub fn from_exact(q: QMatrix) -> Self {
        assert!(q.is_square(), "matrices must be square");
        Matrix { float: q.to_f64(), exact: Some(q) }
    }

    pub fn from_float(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "matrices must be square");
        Matrix { float: m, exact: None }
    }

    pub fn from_ints(d: usize, entries: &[i64]) -> Self {
        Matrix::from_exact(QMatrix::from_ints(d, entries))
    }

    pub fn identity(d: usize, policy: ScalarPolicy) -> Self {
        match policy {
            ScalarPolicy::ExactRational => Matrix::from_exact(QMatrix::identity(d)),
            ScalarPolicy::DoublePrecision => Matrix::from_float(DMatrix::identity(d, d)),
        }
    }

    pub fn dim(&self) -> usize {
        self.float.nrows()
    }

    pub fn float(&self) -> &DMatrix<f64> {
        &self.float
    }

    pub fn exact(&self) -> Option<&QMatrix> {
        self.exact.as_ref()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Matrix::from_exact(a.mul(b)),
            _ => Matrix::from_float(&self.float * &other.float),
        }
    }

    pub fn transpose(&self) -> Matrix {
        match &self.exact {
            Some(q) => Matrix::from_exact(q.transpose()),
            None => Matrix::from_float(self.float.transpose()),
        }
    }

    pub fn kron(&self, other: &Matrix) -> Matrix {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Matrix::from_exact(a.kron(b)),
            _ => Matrix::from_float(linalg::kron(&self.float, &other.float)),
        }
    }

    pub fn inverse(&self) -> Option<Matrix> {
        match &self.exact {
            Some(q) => q.inverse().map(Matrix::from_exact),
            None => {
                let inv = self.float.clone().try_inverse()?;
                inv.iter().all(|x| x.is_finite()).then(|| Matrix::from_float(inv))
            }
        }
    }

    /// Exact zero test under the rational policy; otherwise every entry
    /// must be at most `threshold` in absolute value.
    pub fn is_zero(&self, threshold: f64) -> bool {
        match &self.exact {
            Some(q) => q.is_zero(),
            None => linalg::max_abs(&self.float) <= threshold,
        }
    }

    pub fn operator_norm(&self) -> f64 {
        linalg::operator_norm(&self.float)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        if let Some(q) = &self.exact {
            if q.is_zero() {
                return Ok(0.0);
            }
            if let Some(r) = exact_small_radius(q) {
                return Ok(r);
            }
        }
        linalg::spectral_radius(&self.float)
    }

    /// Exact squared Frobenius norm, when the entries are exact.
    pub fn frobenius_sq_exact(&self) -> Option<BigRational> {
        self.exact.as_ref().map(|q| q.entries().iter().fold(BigRational::zero(), |acc, x| acc + x * x))
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self.frobenius_sq_exact() {
            Some(f) => ratio_to_f64(&f).sqrt(),
            None => linalg::frobenius_norm(&self.float),
        }
    }

    /// Exact determinant under the rational policy, else the LU value.
    pub fn det(&self) -> (f64, Option<BigRational>) {
        match &self.exact {
            Some(q) => {
                let d = q.det();
                (ratio_to_f64(&d), Some(d))
            }
            None => (self.float.determinant(), None),
        }
    }

    /// `self^d == 0`; exact under the rational policy.
    pub fn is_nilpotent(&self, rel_tol: f64) -> bool {
        let d = self.dim();
        match &self.exact {
            Some(q) => q.pow(d).is_zero(),
            None => {
                let scale = linalg::operator_norm(&self.float).powi(d as i32);
                let p = (0..d).fold(DMatrix::identity(d, d), |acc, _| &self.float * acc);
                linalg::max_abs(&p) <= rel_tol * scale.max(f64::MIN_POSITIVE)
            }
        }
    }
}

/// An ordered tuple of `M >= 2` square matrices of a common dimension.
#[derive(Clone, Debug)]
pub struct MatrixTuple {
    dim: usize,
    float: Vec<DMatrix<f64>>,
    exact: Option<Vec<QMatrix>>,
    label: Option<String>,
}

impl PartialEq for MatrixTuple {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.generators().iter().zip(other.generators()).all(|(a, b)| *a == b)
    }
}

fn validate_count(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidTuple(format!("need at least 2 matrices, got {m}")));
    }
    Ok(())
}

impl MatrixTuple {
    pub fn from_exact(mats: Vec<QMatrix>) -> Result<Self> {
        validate_count(mats.len())?;
        let dim = mats[0].rows();
        if dim == 0 {
            return Err(Error::InvalidTuple("dimension must be at least 1".into()));
        }
        for (i, m) in mats.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::InvalidTuple(format!(
                    "matrix {} is {}x{}, expected {dim}x{dim}",
                    i + 1,
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let float = mats.iter().map(QMatrix::to_f64).collect();
        Ok(MatrixTuple { dim, float, exact: Some(mats), label: None })
    }

    pub fn from_float(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        validate_count(mats.len())?;
        let dim = mats[0].nrows();
        if dim == 0 {
            return Err(Error::InvalidTuple("dimension must be at least 1".into()));
        }
        for (i, m) in mats.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidTuple(format!(
                    "matrix {} is {}x{}, expected {dim}x{dim}",
                    i + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidTuple(format!("matrix {} has a non-finite entry", i + 1)));
            }
        }
        Ok(MatrixTuple { dim, float: mats, exact: None, label: None })
    }

    /// Integer tuple from row-major entry lists, one per generator.
    pub fn from_ints(d: usize, mats: &[&[i64]]) -> Result<Self> {
        for m in mats {
            if m.len() != d * d {
                return Err(Error::InvalidTuple(format!("expected {} entries, got {}", d * d, m.len())));
            }
        }
        MatrixTuple::from_exact(mats.iter().map(|m| QMatrix::from_ints(d, m)).collect())
    }

    pub fn from_matrices(mats: Vec<Matrix>) -> Result<Self> {
        if mats.iter().all(|m| m.exact.is_some()) {
            MatrixTuple::from_exact(mats.into_iter().map(|m| m.exact.unwrap()).collect())
        } else {
            MatrixTuple::from_float(mats.into_iter().map(|m| m.float).collect())
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symbols(&self) -> usize {
        self.float.len()
    }

    pub fn policy(&self) -> ScalarPolicy {
        if self.exact.is_some() {
            ScalarPolicy::ExactRational
        } else {
            ScalarPolicy::DoublePrecision
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn floats(&self) -> &[DMatrix<f64>] {
        &self.float
    }

    pub fn exacts(&self) -> Option<&[QMatrix]> {
        self.exact.as_deref()
    }

    pub fn generator(&self, i: usize) -> Matrix {
        Matrix { float: self.float[i].clone(), exact: self.exact.as_ref().map(|e| e[i].clone()) }
    }

    pub fn generators(&self) -> Vec<Matrix> {
        (0..self.symbols()).map(|i| self.generator(i)).collect()
    }

    /// Largest absolute entry over all generators.
    pub fn max_magnitude(&self) -> f64 {
        self.float.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    /// Largest operator norm over all generators.
    pub fn max_operator_norm(&self) -> f64 {
        self.float.iter().map(linalg::operator_norm).fold(0.0, f64::max)
    }

    /// Entrywise zero threshold for a product of length `n` under the
    /// double-precision policy.
    pub fn zero_threshold(&self, n: usize) -> f64 {
        let d = self.dim as f64;
        let m = self.max_magnitude();
        1e-14 * (d * m).powi(n.max(1) as i32) / d
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        for &s in w.symbols() {
            if s >= self.symbols() {
                return Err(Error::SymbolOutOfRange { symbol: s + 1, symbols: self.symbols() });
            }
        }
        Ok(())
    }

    /// `A_{x_n} ... A_{x_1}` for the word `(x_1, ..., x_n)`; the identity for
    /// the empty word.
    pub fn word_product(&self, w: &Word) -> Result<Matrix> {
        self.check_word(w)?;
        Ok(match &self.exact {
            Some(e) => {
                let mut p = QMatrix::identity(self.dim);
                for &s in w.symbols() {
                    p = e[s].mul(&p);
                }
                Matrix::from_exact(p)
            }
            None => {
                let mut p = DMatrix::identity(self.dim, self.dim);
                for &s in w.symbols() {
                    p = &self.float[s] * p;
                }
                Matrix::from_float(p)
            }
        })
    }

    /// Member-wise `l`-fold Kronecker power.
    pub fn kronecker_power(&self, l: usize, budget: &Budget) -> Result<MatrixTuple> {
        if l == 0 {
            return Err(Error::InvalidArgument("Kronecker power must be at least 1".into()));
        }
        let dim = (self.dim as u128).checked_pow(l as u32).unwrap_or(u128::MAX);
        if dim > budget.dimension_cap as u128 {
            return Err(Error::DimensionCap { dim: dim.min(usize::MAX as u128) as usize, cap: budget.dimension_cap });
        }
        let mats = self
            .generators()
            .into_iter()
            .map(|g| (1..l).fold(g.clone(), |acc, _| acc.kron(&g)))
            .collect();
        Ok(MatrixTuple::from_matrices(mats)?.relabel(self, &format!("⊗{l}")))
    }

    pub fn transpose(&self) -> MatrixTuple {
        MatrixTuple::from_matrices(self.generators().iter().map(Matrix::transpose).collect())
            .expect("transpose preserves shape")
            .relabel(self, "ᵀ")
    }

    /// `(B⁻¹ A_i B)_i`.
    pub fn conjugate(&self, b: &Matrix) -> Result<MatrixTuple> {
        if b.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!("basis change is {0}x{0}, tuple is {1}x{1}", b.dim(), self.dim)));
        }
        let inv = b.inverse().ok_or(Error::SingularMatrix)?;
        let gens = self.generators();
        let mats = gens
            .iter()
            .map(|g| {
                if self.is_exact() && b.exact().is_some() {
                    inv.mul(g).mul(b)
                } else {
                    Matrix::from_float(inv.float() * g.float() * b.float())
                }
            })
            .collect();
        Ok(MatrixTuple::from_matrices(mats)?.relabel(self, "^B"))
    }

    /// The tuple of all `M^n` products of length `n`, in lexicographic word
    /// order.
    pub fn product_tuple(&self, n: usize, budget: &Budget) -> Result<MatrixTuple> {
        if n == 0 {
            return Err(Error::InvalidArgument("product length must be at least 1".into()));
        }
        let mats = enumerate_words(self.symbols(), n, budget)?
            .map(|w| self.word_product(&w))
            .collect::<Result<Vec<_>>>()?;
        Ok(MatrixTuple::from_matrices(mats)?.relabel(self, &format!("^({n})")))
    }

    /// The `size x size` sub-block at `(row0, col0)` of every generator.
    pub(crate) fn block(&self, row0: usize, col0: usize, size: usize) -> MatrixTuple {
        let mats = self
            .generators()
            .iter()
            .map(|g| match g.exact() {
                Some(q) => {
                    let mut out = QMatrix::zeros(size, size);
                    for r in 0..size {
                        for c in 0..size {
                            out[(r, c)] = q[(row0 + r, col0 + c)].clone();
                        }
                    }
                    Matrix::from_exact(out)
                }
                None => Matrix::from_float(g.float().view((row0, col0), (size, size)).into_owned()),
            })
            .collect();
        MatrixTuple::from_matrices(mats).expect("sub-block of a valid tuple")
    }

    fn relabel(mut self, from: &MatrixTuple, suffix: &str) -> MatrixTuple {
        self.label = from.label.as_ref().map(|l| format!("{l}{suffix}"));
        self
    }

    /// Index of the first singular generator.
    pub fn has_singular_generator(&self) -> Option<usize> {
        self.generators().iter().position(|g| match g.det() {
            (_, Some(d)) => d.is_zero(),
            (v, None) => v.abs() <= 1e-14 * g.operator_norm().powi(self.dim as i32),
        })
    }

    pub(crate) fn det_abs(&self, i: usize) -> (f64, Option<BigRational>) {
        let (v, e) = self.generator(i).det();
        (v.abs(), e.map(|x| x.abs()))
    }
}

/// Spectral radius of a 1x1 or 2x2 exact matrix from its trace and
/// determinant. Float eigensolvers lose half the digits on a defective
/// 2x2 block; here only the final square root is rounded.
fn exact_small_radius(q: &QMatrix) -> Option<f64> {
    match q.rows() {
        1 => Some(ratio_to_f64(&q[(0, 0)]).abs()),
        2 => {
            let t = &q[(0, 0)] + &q[(1, 1)];
            let det = q.det();
            let disc = &t * &t - &det * BigRational::from_integer(4.into());
            let t = ratio_to_f64(&t).abs();
            Some(if disc.is_negative() {
                ratio_to_f64(&det).sqrt()
            } else {
                0.5 * (t + ratio_to_f64(&disc).sqrt())
            })
        }
        _ => None,
    }
}
