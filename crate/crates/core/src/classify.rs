//! Witness-producing checks for the structural dichotomies of a tuple:
//! periodic support, Bernoulli equilibrium states, conformal conjugacy,
//! `s`-independence and equality of equilibrium states.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kusuoka::{self, ser_matrix, sym_dim, KusuokaData, PeripheralSpectrum};
use crate::linalg;
use crate::pressure::pressure_bracket;
use crate::rational::{exact_root, ratio_to_f64, QMatrix};
use crate::structure::{
    self, find_invariant_subspace, Certainty, IrreducibilityVerdict, MixingObstruction, SearchBudget, Subspace, Vector,
    ZeroProductSearch,
};
use crate::tuple::{enumerate_words, word_count, Budget, Matrix, MatrixTuple, Word};

fn ser_matrices<S: serde::Serializer>(ms: &[DMatrix<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct M<'a>(#[serde(serialize_with = "ser_matrix")] &'a DMatrix<f64>);
    s.collect_seq(ms.iter().map(M))
}

fn words_up_to(symbols: usize, max_len: usize, budget: &Budget) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    for n in 1..=max_len {
        out.extend(enumerate_words(symbols, n, budget)?);
    }
    Ok(out)
}

/// Support on a single periodic orbit: length-`n` products vanish except
/// along cyclic permutations of `word`, which rotate the blocks `R_j`.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicStructure {
    pub period: usize,
    pub block_dim: usize,
    pub word: Word,
    /// `R_1, ..., R_n`, with `A_{ω_j} R_j = R_{j+1}` and `A_i R_j = 0`
    /// for `i != ω_j`.
    pub blocks: Vec<Subspace>,
    pub certainty: Certainty,
}

fn divisors(d: usize) -> Vec<usize> {
    (1..=d).filter(|n| d.is_multiple_of(*n)).collect()
}

fn whole_space(d: usize, exact: bool) -> Subspace {
    let units: Vec<Vector> = (0..d).map(|i| Vector::unit(d, i, exact)).collect();
    Subspace::spanned_by(d, &units)
}

/// Searches periods dividing `d` in increasing order for a verified
/// periodic structure.
pub fn zero_entropy_structure(tuple: &MatrixTuple, budget: &Budget) -> Result<Option<PeriodicStructure>> {
    let d = tuple.dim();
    let m = tuple.symbols();
    for n in divisors(d) {
        if word_count(m, n) > budget.product_cap {
            break;
        }
        let mut tree = crate::products::ProductTree::new(tuple, budget);
        for _ in 1..n {
            tree.advance()?;
        }
        let level = tree.advance()?;
        let nonzero: Vec<Word> = (0..level.len()).filter(|&i| !level.is_zero(i)).map(|i| level.word(i)).collect();
        let Some(omega) = nonzero.first().cloned() else { continue };
        let mut rotations: Vec<Word> = (0..n).map(|i| omega.rotate(i)).collect();
        rotations.sort();
        rotations.dedup();
        if rotations != nonzero {
            continue;
        }
        if let Some(s) = verify_periodic(tuple, &omega)? {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

fn verify_periodic(tuple: &MatrixTuple, omega: &Word) -> Result<Option<PeriodicStructure>> {
    let d = tuple.dim();
    let n = omega.len();
    let exact = tuple.is_exact();
    let full = whole_space(d, exact);
    let gens = tuple.generators();
    let mut blocks = Vec::with_capacity(n);
    for j in 0..n {
        let ret = tuple.word_product(&omega.rotate(j))?;
        let power = (1..d).fold(ret.clone(), |acc, _| ret.mul(&acc));
        blocks.push(full.image(&power));
    }
    let r = blocks[0].dim();
    if r == 0 || r * n != d || blocks.iter().any(|b| b.dim() != r) {
        return Ok(None);
    }
    let omega_sym = omega.symbols();
    for j in 0..n {
        for (i, g) in gens.iter().enumerate() {
            let img = blocks[j].image(g);
            if i == omega_sym[j] {
                if !img.same_as(&blocks[(j + 1) % n]) {
                    return Ok(None);
                }
            } else if img.dim() != 0 {
                return Ok(None);
            }
        }
    }
    let mut sum = if exact { Subspace::new_exact(d) } else { Subspace::new_float(d) };
    for b in &blocks {
        for v in b.basis() {
            sum.insert(&v);
        }
    }
    if sum.dim() != d {
        return Ok(None);
    }
    let certainty = if blocks.iter().all(|b| b.certainty() == Certainty::Exact) { Certainty::Exact } else { Certainty::Numerical };
    Ok(Some(PeriodicStructure { period: n, block_dim: r, word: omega.clone(), blocks, certainty }))
}

/// Outcome of testing `ρ(A_u A_v) = ρ(A_u) ρ(A_v)` on all short words.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum MultiplicativeVerdict {
    CounterexamplePair { first: Word, second: Word, radius_product: f64, product_of_radii: f64, defect: f64 },
    HoldsUpToBudget { max_len: usize, pairs_checked: usize },
}

/// Tests ordered pairs of words of lengths `1..=max_len`, in (length,
/// lexicographic) order, and returns the first pair whose relative defect
/// exceeds `tol`.
pub fn multiplicative_sr_check(tuple: &MatrixTuple, max_len: usize, tol: f64, budget: &Budget) -> Result<MultiplicativeVerdict> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("word length budget must be at least 1".into()));
    }
    let words = words_up_to(tuple.symbols(), max_len, budget)?;
    let pairs = (words.len() as u128).pow(2);
    if pairs > budget.product_cap {
        return Err(Error::BudgetExceeded { what: "word pairs".into(), required: pairs, cap: budget.product_cap });
    }
    let products = words.iter().map(|w| tuple.word_product(w)).collect::<Result<Vec<_>>>()?;
    let radii = products.iter().map(Matrix::spectral_radius).collect::<Result<Vec<_>>>()?;
    let mut checked = 0;
    for (i, p) in products.iter().enumerate() {
        for (j, q) in products.iter().enumerate() {
            checked += 1;
            let joint = p.mul(q).spectral_radius()?;
            let separate = radii[i] * radii[j];
            let scale = joint.max(separate);
            let defect = if scale == 0.0 { 0.0 } else { (joint - separate).abs() / scale };
            if defect > tol {
                return Ok(MultiplicativeVerdict::CounterexamplePair {
                    first: words[i].clone(),
                    second: words[j].clone(),
                    radius_product: joint,
                    product_of_radii: separate,
                    defect,
                });
            }
        }
    }
    Ok(MultiplicativeVerdict::HoldsUpToBudget { max_len, pairs_checked: checked })
}

/// Why no conformal conjugator was produced.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ConformalObstacle {
    NotInvertible { index: usize },
    NoPositiveDefiniteElement { dimension: usize },
    ResidualAboveTolerance { residual: f64 },
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum ConformalVerdict {
    /// `|det A_i|^{-1/d} B⁻¹ A_i B` is orthogonal for every `i`.
    Conjugator {
        #[serde(serialize_with = "ser_matrix")]
        b: DMatrix<f64>,
        residual: f64,
        fixed_space_dimension: usize,
        exact_fixed_space: bool,
    },
    NoConjugator {
        reason: ConformalObstacle,
        /// Basis of the joint fixed space, as symmetric matrices.
        #[serde(serialize_with = "ser_matrices")]
        fixed_space: Vec<DMatrix<f64>>,
        exact_fixed_space: bool,
    },
}

impl ConformalVerdict {
    pub fn conjugator(&self) -> Option<&DMatrix<f64>> {
        match self {
            ConformalVerdict::Conjugator { b, .. } => Some(b),
            ConformalVerdict::NoConjugator { .. } => None,
        }
    }

    /// The conjugator, or the matching error.
    pub fn into_result(self) -> Result<DMatrix<f64>> {
        match self {
            ConformalVerdict::Conjugator { b, .. } => Ok(b),
            ConformalVerdict::NoConjugator { reason, .. } => Err(match reason {
                ConformalObstacle::NotInvertible { index } => Error::NotInvertible { index: index + 1 },
                ConformalObstacle::NoPositiveDefiniteElement { dimension } => Error::NoPositiveDefiniteElement { dimension },
                ConformalObstacle::ResidualAboveTolerance { residual } => {
                    Error::InvalidArgument(format!("orthogonality residual {residual:e} above tolerance"))
                }
            }),
        }
    }
}

const PD_RANDOM_TRIALS: usize = 256;
const PD_GRID_STEPS: usize = 720;
const PD_SEED: u64 = 0x0c0f_07a1;

fn sym_index_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect()
}

/// Rows of `c_i⁻¹ A_iᵀ B A_i - B` in symmetric coordinates, exactly.
fn exact_fixed_space(gens: &[QMatrix], scales: &[BigRational]) -> Vec<DMatrix<f64>> {
    let d = gens[0].rows();
    let pairs = sym_index_pairs(d);
    let s = pairs.len();
    let mut rows = Vec::with_capacity(gens.len() * s * s);
    for (a, c) in gens.iter().zip(scales) {
        let at = a.transpose();
        let inv = BigRational::one() / c;
        let mut block = QMatrix::zeros(s, s);
        for (col, &(i, j)) in pairs.iter().enumerate() {
            let mut e = QMatrix::zeros(d, d);
            e[(i, j)] = BigRational::one();
            e[(j, i)] = BigRational::one();
            let img = at.mul(&e).mul(a).scale(&inv);
            for (row, &(k, l)) in pairs.iter().enumerate() {
                let mut v = img[(k, l)].clone();
                if row == col {
                    v -= BigRational::one();
                }
                block[(row, col)] = v;
            }
        }
        rows.extend(block.entries().iter().cloned());
    }
    let stacked = QMatrix::from_row_major(gens.len() * s, s, rows);
    stacked
        .nullspace()
        .into_iter()
        .map(|v| {
            let f = nalgebra::DVector::from_iterator(s, v.iter().map(ratio_to_f64));
            kusuoka::sym_from_coords(&f, d)
        })
        .collect()
}

fn float_fixed_space(gens: &[DMatrix<f64>], scales: &[f64]) -> Vec<DMatrix<f64>> {
    let d = gens[0].nrows();
    let s = sym_dim(d);
    let pairs = sym_index_pairs(d);
    let mut stacked = DMatrix::zeros(gens.len() * s, s);
    for (g, (a, c)) in gens.iter().zip(scales).enumerate() {
        for (col, &(i, j)) in pairs.iter().enumerate() {
            let mut e = DMatrix::zeros(d, d);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let img = a.transpose() * e * a / *c;
            for (row, &(k, l)) in pairs.iter().enumerate() {
                stacked[(g * s + row, col)] = img[(k, l)] - if row == col { 1.0 } else { 0.0 };
            }
        }
    }
    linalg::nullspace(&stacked, 1e-10).iter().map(|v| kusuoka::sym_from_coords(v, d)).collect()
}

fn is_positive_definite(g: &DMatrix<f64>) -> bool {
    let scale = linalg::frobenius_norm(g);
    scale > 0.0 && linalg::min_eigenvalue_sym(g) > 1e-10 * scale
}

fn find_positive_definite(basis: &[DMatrix<f64>]) -> Option<DMatrix<f64>> {
    for g in basis {
        for sign in [1.0, -1.0] {
            let c = g * sign;
            if is_positive_definite(&c) {
                return Some(c);
            }
        }
    }
    if basis.len() < 2 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PD_SEED);
    for _ in 0..PD_RANDOM_TRIALS {
        let c = basis.iter().fold(DMatrix::zeros(basis[0].nrows(), basis[0].ncols()), |acc, g| acc + g * rng.random_range(-1.0..=1.0));
        if is_positive_definite(&c) {
            return Some(c);
        }
    }
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            for k in 0..PD_GRID_STEPS {
                let t = std::f64::consts::TAU * k as f64 / PD_GRID_STEPS as f64;
                let c = &basis[i] * t.cos() + &basis[j] * t.sin();
                if is_positive_definite(&c) {
                    return Some(c);
                }
            }
        }
    }
    None
}

/// Looks for `B` with `|det A_i|^{-1/d} B⁻¹ A_i B` orthogonal for all `i`.
///
/// `G = B^{-2}` must be a positive definite common fixed point of
/// `G ↦ |det A_i|^{-2/d} A_iᵀ G A_i`.
pub fn conformal_conjugacy_check(tuple: &MatrixTuple, tol: f64) -> Result<ConformalVerdict> {
    let d = tuple.dim();
    if let Some(index) = tuple.has_singular_generator() {
        return Ok(ConformalVerdict::NoConjugator {
            reason: ConformalObstacle::NotInvertible { index },
            fixed_space: Vec::new(),
            exact_fixed_space: false,
        });
    }
    let dets: Vec<(f64, Option<BigRational>)> = (0..tuple.symbols()).map(|i| tuple.det_abs(i)).collect();
    let exact_scales: Option<Vec<BigRational>> =
        dets.iter().map(|(_, e)| e.as_ref().and_then(|x| exact_root(&(x * x), d as u32))).collect();
    let (basis, exact) = match (tuple.exacts(), exact_scales) {
        (Some(gens), Some(scales)) => (exact_fixed_space(gens, &scales), true),
        _ => {
            let scales: Vec<f64> = dets.iter().map(|(v, _)| v.powf(2.0 / d as f64)).collect();
            (float_fixed_space(tuple.floats(), &scales), false)
        }
    };
    let none = |reason| ConformalVerdict::NoConjugator { reason, fixed_space: basis.clone(), exact_fixed_space: exact };
    let Some(g) = find_positive_definite(&basis) else {
        return Ok(none(ConformalObstacle::NoPositiveDefiniteElement { dimension: basis.len() }));
    };
    let g = &g * (d as f64 / g.trace());
    let Some(b) = linalg::inverse_sqrt_spd(&g) else {
        return Ok(none(ConformalObstacle::NoPositiveDefiniteElement { dimension: basis.len() }));
    };
    let residual = orthogonality_residual(tuple, &b)?;
    if residual > tol {
        return Ok(none(ConformalObstacle::ResidualAboveTolerance { residual }));
    }
    Ok(ConformalVerdict::Conjugator { b, residual, fixed_space_dimension: basis.len(), exact_fixed_space: exact })
}

/// `max_i ‖C_iᵀ C_i - Id‖` with `C_i = |det A_i|^{-1/d} B⁻¹ A_i B`.
pub fn orthogonality_residual(tuple: &MatrixTuple, b: &DMatrix<f64>) -> Result<f64> {
    let d = tuple.dim();
    let b_inv = b.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    let mut worst: f64 = 0.0;
    for a in tuple.floats() {
        let c = a.determinant().abs().powf(-1.0 / d as f64);
        let m = &b_inv * a * b * c;
        let defect = m.transpose() * &m - DMatrix::identity(d, d);
        worst = worst.max(linalg::operator_norm(&defect));
    }
    Ok(worst)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    scale == 0.0 || (a - b).abs() <= tol * scale
}

/// Point value of `P(A, s)`: exact when available, else the bracket midpoint
/// provided the bracket is narrower than `tol`.
pub fn pressure_value(tuple: &MatrixTuple, s: f64, n_max: usize, tol: f64, budget: &Budget) -> Result<f64> {
    let bracket = pressure_bracket(tuple, s, n_max, budget)?;
    match bracket.exact {
        Some(p) => Ok(p),
        None if bracket.width() < tol => Ok(bracket.value()),
        None => Err(Error::UnsupportedPrecision { width: bracket.width(), tol }),
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum EqualityVerdict {
    EqualUpToBudget { pressure_a: f64, pressure_b: f64, words_checked: usize },
    Violation { word: Word, lhs: f64, rhs: f64 },
}

/// `e^{-nP} ρ^s`, taken as 0 for a nilpotent product even when `P = -∞`.
fn normalized_radius(rho: f64, s: f64, n: f64, p: f64) -> f64 {
    if rho == 0.0 {
        0.0
    } else {
        (-n * p).exp() * rho.powf(s)
    }
}

/// Compares `e^{-nP(A,s)} ρ(A_w)^s` with `e^{-nP(B,t)} ρ(B_w)^t` on all
/// words of length `1..=n_max`.
pub fn equilibrium_equality_check(
    a: (&MatrixTuple, f64),
    b: (&MatrixTuple, f64),
    n_max: usize,
    tol: f64,
    budget: &Budget,
) -> Result<EqualityVerdict> {
    let (ta, s) = a;
    let (tb, t) = b;
    if ta.symbols() != tb.symbols() {
        return Err(Error::DimensionMismatch(format!("{} symbols against {}", ta.symbols(), tb.symbols())));
    }
    let pa = pressure_value(ta, s, n_max, tol, budget)?;
    let pb = pressure_value(tb, t, n_max, tol, budget)?;
    let mut checked = 0;
    for w in words_up_to(ta.symbols(), n_max, budget)? {
        let n = w.len() as f64;
        let lhs = normalized_radius(ta.word_product(&w)?.spectral_radius()?, s, n, pa);
        let rhs = normalized_radius(tb.word_product(&w)?.spectral_radius()?, t, n, pb);
        checked += 1;
        if !close(lhs, rhs, tol) {
            return Ok(EqualityVerdict::Violation { word: w, lhs, rhs });
        }
    }
    Ok(EqualityVerdict::EqualUpToBudget { pressure_a: pa, pressure_b: pb, words_checked: checked })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum SIndependence {
    /// Every non-nilpotent product has `ρ(A_w)^{1/|w|} = e^λ`.
    Constant { lambda: f64, words_checked: usize },
    /// Two words with different normalized spectral radii.
    Varies { first: Word, first_value: f64, second: Word, second_value: f64 },
    AllNilpotent { max_len: usize },
}

impl SIndependence {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            SIndependence::Constant { lambda, .. } => Some(*lambda),
            _ => None,
        }
    }
}

pub fn s_independence_check(tuple: &MatrixTuple, n_max: usize, tol: f64, budget: &Budget) -> Result<SIndependence> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let mut reference: Option<(Word, f64)> = None;
    let mut checked = 0;
    for w in words_up_to(tuple.symbols(), n_max, budget)? {
        let p = tuple.word_product(&w)?;
        checked += 1;
        if p.is_nilpotent(1e-12) {
            continue;
        }
        let value = p.spectral_radius()?.powf(1.0 / w.len() as f64);
        match &reference {
            None => reference = Some((w, value)),
            Some((w0, v0)) => {
                if !close(*v0, value, tol) {
                    return Ok(SIndependence::Varies { first: w0.clone(), first_value: *v0, second: w, second_value: value });
                }
            }
        }
    }
    Ok(match reference {
        Some((_, v)) => SIndependence::Constant { lambda: v.ln(), words_checked: checked },
        None => SIndependence::AllNilpotent { max_len: n_max },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximalEntropyVerdict {
    pub holds: bool,
    pub n_max: usize,
    /// `max |μ([w]) M^{|w|} - 1|` over the checked words.
    pub max_relative_deviation: f64,
    pub worst_word: Option<Word>,
}

/// Whether `μ([w]) = M^{-|w|}` for all words up to `n_max`, within `tol`.
pub fn maximal_entropy_check(kd: &KusuokaData, n_max: usize, tol: f64, budget: &Budget) -> Result<MaximalEntropyVerdict> {
    let table = kd.cylinder_table(n_max, budget)?;
    let m = table.symbols as f64;
    let mut worst = 0.0;
    let mut worst_word = None;
    for level in &table.levels[1..] {
        let uniform = m.powi(level.n as i32);
        for (i, mu) in level.measure.iter().enumerate() {
            let dev = (mu * uniform - 1.0).abs();
            if dev > worst {
                worst = dev;
                worst_word = Some(Word::from_index(i, table.symbols, level.n));
            }
        }
    }
    Ok(MaximalEntropyVerdict { holds: worst <= tol, n_max, max_relative_deviation: worst, worst_word })
}

/// A sub-check result; failures keep the error message.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check<T> {
    Done(T),
    Failed(String),
}

impl<T> Check<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Check::Done(v),
            Err(e) => Check::Failed(e.to_string()),
        }
    }

    pub fn done(&self) -> Option<&T> {
        match self {
            Check::Done(v) => Some(v),
            Check::Failed(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassifyOptions {
    /// Longest word examined for zero products.
    pub support_len: usize,
    /// Longest product length scanned for invariant subspaces.
    pub mixing_len: usize,
    /// Word length budget of the multiplicativity check.
    pub multiplicative_len: usize,
    /// Word length budget of the `s`-independence check.
    pub s_independence_len: usize,
    /// Cylinder length for measure-level checks.
    pub cylinder_len: usize,
    pub tol: f64,
    pub conformal_tol: f64,
    pub search: SearchBudget,
    pub budget: Budget,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            support_len: 8,
            mixing_len: 3,
            multiplicative_len: 3,
            s_independence_len: 6,
            cylinder_len: 8,
            tol: 1e-9,
            conformal_tol: 1e-8,
            search: SearchBudget::default(),
            budget: Budget::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

/// Everything the structural checks say about one tuple.
#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub options: ClassifyOptions,
    pub irreducibility: IrreducibilityVerdict,
    pub support: Check<ZeroProductSearch>,
    /// A witness here obstructs a sufficient condition for mixing; it does
    /// not prove non-mixing by itself.
    pub mixing_obstruction: Check<Option<MixingObstruction>>,
    pub peripheral_spectrum: Check<PeripheralSpectrum>,
    pub zero_entropy: Check<Option<PeriodicStructure>>,
    pub bernoulli: Check<MultiplicativeVerdict>,
    pub conformal: Check<ConformalVerdict>,
    pub s_independence: Check<SIndependence>,
    pub maximal_entropy: Check<MaximalEntropyVerdict>,
    pub cross_checks: Vec<CrossCheck>,
}

pub fn classification_report(tuple: &MatrixTuple, opts: &ClassifyOptions) -> ClassificationReport {
    let budget = &opts.budget;
    let irreducibility = find_invariant_subspace(tuple, &opts.search);
    let support = Check::from_result(structure::zero_product_search(tuple, opts.support_len, budget));
    let mixing_obstruction =
        Check::from_result(structure::mixing_obstruction_scan(tuple, opts.mixing_len, &opts.search, budget));
    let peripheral_spectrum = Check::from_result(kusuoka::peripheral_spectrum(tuple, 1e-6, budget));
    let zero_entropy = Check::from_result(zero_entropy_structure(tuple, budget));
    let bernoulli = Check::from_result(multiplicative_sr_check(tuple, opts.multiplicative_len, opts.tol, budget));
    let conformal = Check::from_result(conformal_conjugacy_check(tuple, opts.conformal_tol));
    let s_independence = Check::from_result(s_independence_check(tuple, opts.s_independence_len, opts.tol, budget));
    let kd = kusuoka::kusuoka_measure(tuple, kusuoka::DEFAULT_TOL);
    let table = kd.as_ref().ok().map(|kd| kd.cylinder_table(opts.cylinder_len, budget));
    let maximal_entropy = match &kd {
        Ok(kd) => Check::from_result(maximal_entropy_check(kd, opts.cylinder_len, 1e-9, budget)),
        Err(e) => Check::Failed(e.to_string()),
    };

    let mut cross_checks = Vec::new();
    if let (Some(ConformalVerdict::Conjugator { .. }), Some(Ok(table))) = (conformal.done(), &table) {
        let row = table.lyapunov_spectrum().into_iter().find(|r| r.n == 4.min(table.n_max()));
        if let Some(row) = row {
            let spread = row.exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - row.exponents.iter().cloned().fold(f64::INFINITY, f64::min);
            cross_checks.push(CrossCheck {
                name: "conformal-equal-lyapunov",
                holds: spread <= 1e-9,
                detail: format!("spread of Lyapunov estimates at n = {}: {spread:e}", row.n),
            });
        }
    }
    if let Some(Some(ps)) = zero_entropy.done() {
        let n = 2 * ps.period;
        let entropy = kd.as_ref().ok().map(|kd| kd.cylinder_table(n, budget).map(|t| t.entropy_estimate()));
        if let Some(Ok(rows)) = entropy {
            let h = rows.last().map(|r| r.shannon).unwrap_or(0.0);
            cross_checks.push(CrossCheck {
                name: "periodic-zero-entropy",
                holds: h <= 1e-9,
                detail: format!("entropy estimate at n = {n}: {h:e}"),
            });
        }
    }
    if let (Some(MultiplicativeVerdict::CounterexamplePair { .. }), Some(me)) = (bernoulli.done(), maximal_entropy.done()) {
        cross_checks.push(CrossCheck {
            name: "counterexample-not-maximal-entropy",
            holds: !me.holds,
            detail: format!("maximal entropy deviation {:e}", me.max_relative_deviation),
        });
    }

    ClassificationReport {
        options: *opts,
        irreducibility,
        support,
        mixing_obstruction,
        peripheral_spectrum,
        zero_entropy,
        bernoulli,
        conformal,
        s_independence,
        maximal_entropy,
        cross_checks,
    }
}
