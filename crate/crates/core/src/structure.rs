//! Invariant subspaces, block triangular forms, zero products and related
//! searches over the semigroup generated by a tuple.
//!
//! Searches are bounded. A returned witness is verified (exactly under the
//! rational policy); "no witness" is evidence, never proof.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, FloatSpan};
use crate::products::ProductTree;
use crate::rational::{format_rational, int, rationalize, QMatrix, QSpan};
use crate::tuple::{enumerate_words, Budget, Matrix, MatrixTuple, Word};

/// Relative tolerance for float span membership.
pub const SPAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum Vector {
    Exact(Vec<BigRational>),
    Float(DVector<f64>),
}

impl Vector {
    pub fn to_float(&self) -> DVector<f64> {
        match self {
            Vector::Exact(v) => DVector::from_iterator(v.len(), v.iter().map(crate::rational::ratio_to_f64)),
            Vector::Float(v) => v.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Vector::Exact(v) => v.iter().all(Zero::is_zero),
            Vector::Float(v) => v.iter().all(|x| *x == 0.0),
        }
    }

    pub fn unit(dim: usize, i: usize, exact: bool) -> Vector {
        if exact {
            let mut v = vec![BigRational::zero(); dim];
            v[i] = BigRational::one();
            Vector::Exact(v)
        } else {
            Vector::Float(DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
        }
    }

    fn apply(&self, m: &Matrix) -> Vector {
        match (self, m.exact()) {
            (Vector::Exact(v), Some(q)) => Vector::Exact(q.mul_vec(v)),
            _ => Vector::Float(m.float() * self.to_float()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certainty {
    /// Verified in exact rational arithmetic.
    Exact,
    /// Verified in double precision to a relative residual.
    Numerical,
}

#[derive(Clone, Debug)]
enum SpanKind {
    Exact(QSpan),
    Float(FloatSpan),
}

/// A linear subspace of `R^d` given by a basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    kind: SpanKind,
}

impl Subspace {
    pub fn new_exact(dim: usize) -> Self {
        Subspace { kind: SpanKind::Exact(QSpan::new(dim)) }
    }

    pub fn new_float(dim: usize) -> Self {
        Subspace { kind: SpanKind::Float(FloatSpan::new(dim, SPAN_TOL)) }
    }

    fn like(&self) -> Subspace {
        match &self.kind {
            SpanKind::Exact(s) => Subspace::new_exact(s.ambient()),
            SpanKind::Float(s) => Subspace::new_float(s.ambient()),
        }
    }

    /// Span of the given vectors; exact when all of them are.
    pub fn spanned_by(dim: usize, vectors: &[Vector]) -> Subspace {
        let exact = vectors.iter().all(|v| matches!(v, Vector::Exact(_)));
        let mut s = if exact { Subspace::new_exact(dim) } else { Subspace::new_float(dim) };
        for v in vectors {
            s.insert(v);
        }
        s
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SpanKind::Exact(s) => s.len(),
            SpanKind::Float(s) => s.len(),
        }
    }

    pub fn ambient(&self) -> usize {
        match &self.kind {
            SpanKind::Exact(s) => s.ambient(),
            SpanKind::Float(s) => s.ambient(),
        }
    }

    pub fn certainty(&self) -> Certainty {
        match self.kind {
            SpanKind::Exact(_) => Certainty::Exact,
            SpanKind::Float(_) => Certainty::Numerical,
        }
    }

    pub fn is_proper(&self) -> bool {
        self.dim() > 0 && self.dim() < self.ambient()
    }

    pub fn basis(&self) -> Vec<Vector> {
        match &self.kind {
            SpanKind::Exact(s) => s.basis().iter().cloned().map(Vector::Exact).collect(),
            SpanKind::Float(s) => s.basis().iter().cloned().map(Vector::Float).collect(),
        }
    }

    pub fn float_basis(&self) -> Vec<DVector<f64>> {
        self.basis().iter().map(Vector::to_float).collect()
    }

    fn to_float_span(&self) -> FloatSpan {
        let mut f = FloatSpan::new(self.ambient(), SPAN_TOL);
        for v in self.float_basis() {
            f.insert(&v);
        }
        f
    }

    /// Inserts `v`; an exact span silently turns numerical when given a
    /// float vector.
    pub fn insert(&mut self, v: &Vector) -> bool {
        match (&mut self.kind, v) {
            (SpanKind::Exact(s), Vector::Exact(x)) => s.insert(x),
            (SpanKind::Float(s), _) => s.insert(&v.to_float()),
            (SpanKind::Exact(_), Vector::Float(x)) => {
                let mut f = self.to_float_span();
                let added = f.insert(x);
                self.kind = SpanKind::Float(f);
                added
            }
        }
    }

    pub fn contains(&self, v: &Vector) -> bool {
        match (&self.kind, v) {
            (SpanKind::Exact(s), Vector::Exact(x)) => s.contains(x),
            (SpanKind::Float(s), _) => s.contains(&v.to_float()),
            (SpanKind::Exact(_), Vector::Float(x)) => self.to_float_span().contains(x),
        }
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis().iter().all(|v| self.contains(v))
    }

    pub fn same_as(&self, other: &Subspace) -> bool {
        self.dim() == other.dim() && self.contains_subspace(other)
    }

    /// `m(self)`.
    pub fn image(&self, m: &Matrix) -> Subspace {
        let mut out = self.like();
        for v in self.basis() {
            out.insert(&v.apply(m));
        }
        out
    }

    /// Orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let d = self.ambient();
        match &self.kind {
            SpanKind::Exact(s) => {
                let rows: Vec<BigRational> = s.basis().iter().flatten().cloned().collect();
                let m = QMatrix::from_row_major(s.len(), d, rows);
                let mut out = Subspace::new_exact(d);
                if s.is_empty() {
                    for i in 0..d {
                        out.insert(&Vector::unit(d, i, true));
                    }
                } else {
                    for v in m.nullspace() {
                        out.insert(&Vector::Exact(v));
                    }
                }
                out
            }
            SpanKind::Float(s) => {
                let mut out = Subspace::new_float(d);
                if s.is_empty() {
                    for i in 0..d {
                        out.insert(&Vector::unit(d, i, false));
                    }
                    return out;
                }
                let m = DMatrix::from_fn(s.len(), d, |r, c| s.basis()[r][c]);
                for v in linalg::nullspace(&m, 1e-10) {
                    out.insert(&Vector::Float(v));
                }
                out
            }
        }
    }

    /// `A_i U ⊆ U` for every generator, checked exactly under the rational
    /// policy.
    pub fn is_invariant(&self, tuple: &MatrixTuple) -> bool {
        let basis = self.basis();
        tuple.generators().iter().all(|g| basis.iter().all(|v| self.contains(&v.apply(g))))
    }
}

#[derive(Serialize)]
struct SubspaceRepr {
    dimension: usize,
    ambient: usize,
    certainty: Certainty,
    basis: serde_json::Value,
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let basis = match &self.kind {
            SpanKind::Exact(q) => serde_json::json!(q
                .basis()
                .iter()
                .map(|v| v.iter().map(format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>()),
            SpanKind::Float(f) => {
                serde_json::json!(f.basis().iter().map(|v| v.iter().cloned().collect::<Vec<f64>>()).collect::<Vec<_>>())
            }
        };
        SubspaceRepr { dimension: self.dim(), ambient: self.ambient(), certainty: self.certainty(), basis }
            .serialize(s)
    }
}

/// Parameters of the candidate searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    /// Longest product whose eigenvectors seed the search.
    pub product_length: usize,
    /// Number of pseudo-random rational seed vectors.
    pub random_vectors: usize,
    pub seed: u64,
    /// Cap on the number of products whose eigenvectors are used.
    pub max_pool_matrices: usize,
    /// Cap on the members of a candidate finite invariant union.
    pub union_cap: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { product_length: 3, random_vectors: 64, seed: 0x7e57_5eed, max_pool_matrices: 2048, union_cap: 48 }
    }
}

/// Span of `{A_w v : |w| <= d - 1}`; invariant under the tuple when proper.
pub fn orbit_span(tuple: &MatrixTuple, v: &Vector) -> Result<Subspace> {
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(orbit_of(tuple, std::slice::from_ref(v)))
}

fn orbit_of(tuple: &MatrixTuple, seeds: &[Vector]) -> Subspace {
    let d = tuple.dim();
    let exact = tuple.is_exact() && seeds.iter().all(|v| matches!(v, Vector::Exact(_)));
    let mut span = if exact { Subspace::new_exact(d) } else { Subspace::new_float(d) };
    let mut queue = Vec::new();
    for v in seeds {
        let v = if exact { v.clone() } else { Vector::Float(v.to_float()) };
        if span.insert(&v) {
            queue.push(v);
        }
    }
    let gens = tuple.generators();
    let mut head = 0;
    while head < queue.len() && span.dim() < d {
        let u = queue[head].clone();
        head += 1;
        for g in &gens {
            let w = u.apply(g);
            if span.insert(&w) {
                queue.push(w);
                if span.dim() == d {
                    break;
                }
            }
        }
    }
    span
}

/// Where a candidate seed came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CandidateSource {
    StandardBasis { index: usize },
    Eigenspace { word: Word, piece: usize },
    EigenVector { word: Word, piece: usize, vector: usize },
    Random { index: usize },
}

struct Candidate {
    source: CandidateSource,
    seeds: Vec<Vector>,
}

/// Real invariant pieces of a single matrix: eigenspaces of real eigenvalues
/// and real planes of complex pairs. Exact under the rational policy when the
/// eigenvalue (or the quadratic factor of a pair) is rational.
fn invariant_pieces(m: &Matrix) -> Vec<Vec<Vector>> {
    let d = m.dim();
    let Ok(eigs) = linalg::eigenvalues(m.float()) else { return vec![] };
    let mut pieces = Vec::new();
    let mut float_fallback = false;
    if let Some(q) = m.exact() {
        let scale = eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut done: Vec<QMatrix> = Vec::new();
        for z in &eigs {
            let poly = if z.im.abs() <= 1e-10 * scale {
                rationalize(z.re, 1_000_000, 1e-10).map(|r| q.sub(&QMatrix::identity(d).scale(&r)))
            } else {
                let t = rationalize(2.0 * z.re, 1_000_000, 1e-10);
                let n = rationalize(z.norm_sqr(), 1_000_000, 1e-10);
                match (t, n) {
                    (Some(t), Some(n)) => {
                        Some(q.mul(q).sub(&q.scale(&t)).add(&QMatrix::identity(d).scale(&n)))
                    }
                    _ => None,
                }
            };
            match poly {
                Some(p) => {
                    if done.contains(&p) {
                        continue;
                    }
                    let ns = p.nullspace();
                    done.push(p);
                    if ns.is_empty() {
                        float_fallback = true;
                    } else if ns.len() < d {
                        pieces.push(ns.into_iter().map(Vector::Exact).collect());
                    }
                }
                None => float_fallback = true,
            }
        }
        if !float_fallback {
            return pieces;
        }
    }
    if let Ok(fp) = linalg::real_invariant_pieces(m.float()) {
        for piece in fp {
            if piece.len() >= d {
                continue;
            }
            let vs: Vec<Vector> = if m.exact().is_some() {
                piece.iter().map(rationalize_vector).collect()
            } else {
                piece.into_iter().map(Vector::Float).collect()
            };
            // skip pieces already found exactly
            let dup = pieces.iter().any(|p: &Vec<Vector>| {
                let s = Subspace::spanned_by(d, p);
                vs.iter().all(|v| s.contains(v))
            });
            if !dup {
                pieces.push(vs);
            }
        }
    }
    pieces
}

/// Rational vector proportional to `v` when one with small denominators
/// reproduces it; otherwise `v` itself.
fn rationalize_vector(v: &DVector<f64>) -> Vector {
    let big = v.iter().cloned().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    if big == 0.0 {
        return Vector::Float(v.clone());
    }
    let scaled = v / big;
    let mut out = Vec::with_capacity(v.len());
    for &x in scaled.iter() {
        match rationalize(x, 10_000, 1e-11).or_else(|| (x.abs() < 1e-12).then(BigRational::zero)) {
            Some(r) => out.push(r),
            None => return Vector::Float(v.clone()),
        }
    }
    Vector::Exact(out)
}

fn pool_matrices(tuple: &MatrixTuple, sb: &SearchBudget) -> Vec<(Word, Matrix)> {
    let mut out = Vec::new();
    let m = tuple.symbols();
    let unlimited = Budget { product_cap: u128::MAX, ..Budget::default() };
    'outer: for n in 1..=sb.product_length {
        for w in enumerate_words(m, n, &unlimited).expect("unbounded budget") {
            if out.len() >= sb.max_pool_matrices {
                break 'outer;
            }
            let p = tuple.word_product(&w).expect("symbols in range");
            out.push((w, p));
        }
    }
    out
}

fn candidate_pool(tuple: &MatrixTuple, sb: &SearchBudget) -> Vec<Candidate> {
    let d = tuple.dim();
    let exact = tuple.is_exact();
    let mut out: Vec<Candidate> = (0..d)
        .map(|i| Candidate { source: CandidateSource::StandardBasis { index: i }, seeds: vec![Vector::unit(d, i, exact)] })
        .collect();
    for (w, p) in pool_matrices(tuple, sb) {
        for (pi, piece) in invariant_pieces(&p).into_iter().enumerate() {
            if piece.len() > 1 {
                for (vi, v) in piece.iter().enumerate() {
                    out.push(Candidate {
                        source: CandidateSource::EigenVector { word: w.clone(), piece: pi, vector: vi },
                        seeds: vec![v.clone()],
                    });
                }
            }
            out.push(Candidate { source: CandidateSource::Eigenspace { word: w.clone(), piece: pi }, seeds: piece });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sb.seed);
    for i in 0..sb.random_vectors {
        let v: Vec<BigRational> = (0..d).map(|_| int(rng.random_range(-9..=9))).collect();
        let v = if exact { Vector::Exact(v) } else { Vector::Float(Vector::Exact(v).to_float()) };
        if !v.is_zero() {
            out.push(Candidate { source: CandidateSource::Random { index: i }, seeds: vec![v] });
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum IrreducibilityOutcome {
    ReducibleWitness {
        subspace: Subspace,
        source: CandidateSource,
        /// Found as the complement of an orbit of the transposed tuple.
        dual: bool,
    },
    NoWitnessFound,
}

#[derive(Clone, Debug, Serialize)]
pub struct IrreducibilityVerdict {
    #[serde(flatten)]
    pub outcome: IrreducibilityOutcome,
    pub budget: SearchBudget,
    pub candidates_tried: usize,
}

impl IrreducibilityVerdict {
    pub fn witness(&self) -> Option<&Subspace> {
        match &self.outcome {
            IrreducibilityOutcome::ReducibleWitness { subspace, .. } => Some(subspace),
            IrreducibilityOutcome::NoWitnessFound => None,
        }
    }

    pub fn is_reducible(&self) -> bool {
        self.witness().is_some()
    }
}

fn proper_invariant(tuple: &MatrixTuple, seeds: &[Vector]) -> Option<Subspace> {
    let s = orbit_of(tuple, seeds);
    (s.is_proper() && s.is_invariant(tuple)).then_some(s)
}

/// Deterministic witness search for a common proper invariant subspace.
///
/// Candidates are scanned in order: standard basis vectors, invariant pieces
/// of generators and short products, then seeded random vectors. Each is
/// tried on the tuple and, through orthogonal complements, on its transpose.
pub fn find_invariant_subspace(tuple: &MatrixTuple, sb: &SearchBudget) -> IrreducibilityVerdict {
    let d = tuple.dim();
    let done = |outcome, tried| IrreducibilityVerdict { outcome, budget: *sb, candidates_tried: tried };
    if d == 1 {
        return done(IrreducibilityOutcome::NoWitnessFound, 0);
    }
    let transposed = tuple.transpose();
    let primal = candidate_pool(tuple, sb);
    let dual = candidate_pool(&transposed, sb);
    let mut tried = 0;
    for i in 0..primal.len().max(dual.len()) {
        if let Some(c) = primal.get(i) {
            tried += 1;
            if let Some(s) = proper_invariant(tuple, &c.seeds) {
                return done(IrreducibilityOutcome::ReducibleWitness { subspace: s, source: c.source.clone(), dual: false }, tried);
            }
        }
        if let Some(c) = dual.get(i) {
            tried += 1;
            let s = orbit_of(&transposed, &c.seeds);
            if s.is_proper() {
                let comp = s.complement();
                if comp.is_proper() && comp.is_invariant(tuple) {
                    return done(
                        IrreducibilityOutcome::ReducibleWitness { subspace: comp, source: c.source.clone(), dual: true },
                        tried,
                    );
                }
            }
        }
    }
    done(IrreducibilityOutcome::NoWitnessFound, tried)
}

/// `B⁻¹ A_i B` block upper triangular with the listed diagonal blocks.
#[derive(Clone, Debug)]
pub struct BlockForm {
    pub basis_change: Matrix,
    pub blocks: Vec<MatrixTuple>,
}

impl BlockForm {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(MatrixTuple::dim).collect()
    }
}

fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = (a.dim(), b.dim());
    match (a.exact(), b.exact()) {
        (Some(x), Some(y)) => {
            let mut out = QMatrix::zeros(p + q, p + q);
            for r in 0..p {
                for c in 0..p {
                    out[(r, c)] = x[(r, c)].clone();
                }
            }
            for r in 0..q {
                for c in 0..q {
                    out[(p + r, p + c)] = y[(r, c)].clone();
                }
            }
            Matrix::from_exact(out)
        }
        _ => {
            let mut out = DMatrix::zeros(p + q, p + q);
            out.view_mut((0, 0), (p, p)).copy_from(a.float());
            out.view_mut((p, p), (q, q)).copy_from(b.float());
            Matrix::from_float(out)
        }
    }
}

/// Basis of `R^d` whose first vectors span `w`.
fn completed_basis(w: &Subspace) -> Matrix {
    let d = w.ambient();
    match w.certainty() {
        Certainty::Exact => {
            let mut s = w.clone();
            for i in 0..d {
                s.insert(&Vector::unit(d, i, true));
            }
            let cols: Vec<Vec<BigRational>> = s
                .basis()
                .into_iter()
                .map(|v| match v {
                    Vector::Exact(x) => x,
                    Vector::Float(_) => unreachable!("exact span"),
                })
                .collect();
            Matrix::from_exact(QMatrix::from_columns(d, &cols))
        }
        Certainty::Numerical => {
            let mut s = FloatSpan::new(d, SPAN_TOL);
            for v in w.float_basis() {
                s.insert(&v);
            }
            for i in 0..d {
                s.insert(&DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 }));
            }
            Matrix::from_float(DMatrix::from_columns(s.basis()))
        }
    }
}

/// Repeatedly splits off witnessed invariant subspaces until every diagonal
/// block yields no witness.
pub fn block_triangularize(tuple: &MatrixTuple, sb: &SearchBudget) -> Result<BlockForm> {
    let d = tuple.dim();
    let verdict = find_invariant_subspace(tuple, sb);
    let Some(w) = verdict.witness() else {
        return Ok(BlockForm { basis_change: Matrix::identity(d, tuple.policy()), blocks: vec![tuple.clone()] });
    };
    let k = w.dim();
    let c = completed_basis(w);
    let c = if tuple.is_exact() { c } else { Matrix::from_float(c.float().clone()) };
    let conj = tuple.conjugate(&c)?;
    let upper = block_triangularize(&conj.block(0, 0, k), sb)?;
    let lower = block_triangularize(&conj.block(k, k, d - k), sb)?;
    let inner = block_diag(&upper.basis_change, &lower.basis_change);
    let basis_change = if c.exact().is_some() && inner.exact().is_some() {
        c.mul(&inner)
    } else {
        Matrix::from_float(c.float() * inner.float())
    };
    let mut blocks = upper.blocks;
    blocks.extend(lower.blocks);
    Ok(BlockForm { basis_change, blocks })
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingObstruction {
    /// Length of the products forming the reducible tuple.
    pub n: usize,
    pub witness: Subspace,
}

/// First `n <= max_n` whose tuple of all length-`n` products has a witnessed
/// invariant subspace. `None` means the products stayed without a witness up
/// to `max_n`.
pub fn mixing_obstruction_scan(
    tuple: &MatrixTuple,
    max_n: usize,
    sb: &SearchBudget,
    budget: &Budget,
) -> Result<Option<MixingObstruction>> {
    for n in 1..=max_n {
        let products = tuple.product_tuple(n, budget)?;
        if let Some(w) = find_invariant_subspace(&products, sb).witness() {
            return Ok(Some(MixingObstruction { n, witness: w.clone() }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroProductSearch {
    /// Shortest (then lexicographically first) word with a zero product.
    pub word: Option<Word>,
    /// Largest word length examined.
    pub searched_up_to: usize,
}

/// Breadth-first search for a zero product of length at most `max_n`.
pub fn zero_product_search(tuple: &MatrixTuple, max_n: usize, budget: &Budget) -> Result<ZeroProductSearch> {
    let mut tree = ProductTree::new(tuple, budget);
    for n in 1..=max_n {
        let level = tree.advance()?;
        if let Some(i) = (0..level.len()).find(|&i| level.is_zero(i)) {
            return Ok(ZeroProductSearch { word: Some(level.word(i)), searched_up_to: n });
        }
    }
    Ok(ZeroProductSearch { word: None, searched_up_to: max_n })
}

/// Word `w` with `|w| < d` maximizing `‖B1 A_w B2‖`, scanned by length then
/// lexicographically; ties keep the earlier word.
pub fn connecting_word(tuple: &MatrixTuple, b1: &Matrix, b2: &Matrix) -> Result<(Word, f64)> {
    let d = tuple.dim();
    if b1.dim() != d || b2.dim() != d {
        return Err(Error::DimensionMismatch("B1 and B2 must match the tuple dimension".into()));
    }
    let budget = Budget::default();
    let mut best: Option<(Word, f64)> = None;
    for n in 0..d {
        for w in enumerate_words(tuple.symbols(), n, &budget)? {
            let p = tuple.word_product(&w)?;
            let m = b1.mul(&p).mul(b2);
            let value = if m.is_zero(0.0) { 0.0 } else { m.operator_norm() };
            let better = match &best {
                None => true,
                Some((_, v)) => value > *v * (1.0 + 1e-12),
            };
            if better {
                best = Some((w, value));
            }
        }
    }
    match best {
        Some((w, v)) if v > 0.0 => Ok((w, v)),
        _ => Err(Error::AllCandidatesZero),
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum StrongIrreducibilityVerdict {
    /// Proper subspaces whose union every generator maps into itself.
    FiniteInvariantUnion { members: Vec<Subspace>, certainty: Certainty },
    NoWitnessFound { seeds_tried: usize, union_cap: usize },
}

/// Closes seed subspaces under the generator images and reports a finite
/// invariant union if one stabilizes within `sb.union_cap` members.
pub fn strong_irreducibility_scan(tuple: &MatrixTuple, sb: &SearchBudget) -> StrongIrreducibilityVerdict {
    let d = tuple.dim();
    let gens = tuple.generators();
    let mut seeds_tried = 0;
    if d > 1 {
        let mut seeds: Vec<Subspace> = Vec::new();
        for (_, p) in pool_matrices(tuple, &SearchBudget { product_length: sb.product_length.min(2), ..*sb }) {
            for piece in invariant_pieces(&p) {
                let seed = Subspace::spanned_by(d, &piece);
                if seed.is_proper() && !seeds.iter().any(|s| s.same_as(&seed)) {
                    seeds.push(seed);
                }
            }
        }
        // exact seeds first: their closures cannot be fooled by rounding
        seeds.sort_by_key(|s| s.certainty() != Certainty::Exact);
        for seed in seeds {
            seeds_tried += 1;
            if let Some(members) = close_union(seed, &gens, sb.union_cap) {
                let certainty = if members.iter().all(|m| m.certainty() == Certainty::Exact) {
                    Certainty::Exact
                } else {
                    Certainty::Numerical
                };
                return StrongIrreducibilityVerdict::FiniteInvariantUnion { members, certainty };
            }
        }
    }
    StrongIrreducibilityVerdict::NoWitnessFound { seeds_tried, union_cap: sb.union_cap }
}

/// Smallest separation under which two numerically computed members are
/// considered unresolved rather than distinct.
const UNION_SEPARATION: f64 = 1e-6;

fn separation(a: &Subspace, b: &Subspace) -> f64 {
    let fa = a.to_float_span();
    let fb = b.to_float_span();
    let ab = b.float_basis().iter().map(|v| fa.distance(v)).fold(0.0, f64::max);
    let ba = a.float_basis().iter().map(|v| fb.distance(v)).fold(0.0, f64::max);
    ab.max(ba)
}

fn close_union(seed: Subspace, gens: &[Matrix], cap: usize) -> Option<Vec<Subspace>> {
    let mut members = vec![seed];
    let mut head = 0;
    while head < members.len() {
        let s = members[head].clone();
        head += 1;
        for g in gens {
            let img = s.image(g);
            if img.dim() == 0 || members.iter().any(|m| m.same_as(&img)) {
                continue;
            }
            members.push(img);
            if members.len() > cap {
                return None;
            }
        }
    }
    let numerical = members.iter().any(|m| m.certainty() == Certainty::Numerical);
    if numerical {
        for (i, a) in members.iter().enumerate() {
            if members[i + 1..].iter().any(|b| separation(a, b) < UNION_SEPARATION) {
                return None;
            }
        }
    }
    Some(members)
}
