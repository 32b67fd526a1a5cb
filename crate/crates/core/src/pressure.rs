//! Pressure brackets from word enumeration, exact pressure at even integer
//! exponents, `p`-radii and the joint spectral radius bracket.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, log_sum_exp, tree_sum};
use crate::products::ProductTree;
use crate::rational::{ln_abs, QMatrix};
use crate::tuple::{Budget, MatrixTuple};

/// Outside this range individual terms are summed in log space.
const LINEAR_RANGE: (f64, f64) = (1e-100, 1e100);

fn check_exponent(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent must be a positive number, got {s}")));
    }
    Ok(())
}

/// `Some(l)` when `s = 2l` for a positive integer `l`.
pub fn even_half(s: f64) -> Option<usize> {
    let l = s / 2.0;
    (l >= 1.0 && l.fract() == 0.0 && l <= 64.0).then_some(l as usize)
}

/// `log Σ x_i^s` over the given nonnegative bases, in the fixed reduction
/// order.
fn log_power_sum(bases: &[f64], s: f64) -> f64 {
    let pow = |x: f64| if s == 2.0 { x * x } else { x.powf(s) };
    let terms: Vec<f64> = bases.iter().map(|&x| pow(x)).collect();
    let linear = terms.iter().all(|&t| t == 0.0 || (t > LINEAR_RANGE.0 && t < LINEAR_RANGE.1));
    if linear {
        return tree_sum(&terms).ln();
    }
    let logs: Vec<f64> = bases.iter().map(|&x| if x > 0.0 { s * x.ln() } else { f64::NEG_INFINITY }).collect();
    log_sum_exp(&logs)
}

/// Per-level norms and spectral radii of all products of one length.
struct LevelStats {
    norms: Vec<f64>,
    radii: Vec<f64>,
}

fn level_stats(level: &crate::products::Level) -> Result<LevelStats> {
    let pairs: Vec<Result<(f64, f64)>> = level.par_map(|_, m, zero| {
        if zero {
            return Ok((0.0, 0.0));
        }
        let m = m.into_owned();
        Ok((linalg::operator_norm(&m), linalg::spectral_radius(&m)?))
    });
    let mut norms = Vec::with_capacity(pairs.len());
    let mut radii = Vec::with_capacity(pairs.len());
    for p in pairs {
        let (a, b) = p?;
        norms.push(a);
        radii.push(b);
    }
    Ok(LevelStats { norms, radii })
}

/// `log S_n` with `S_n = Σ_{|w| = n} ‖A_w‖^s`.
pub fn log_partition_sum(tuple: &MatrixTuple, s: f64, n: usize, budget: &Budget) -> Result<f64> {
    check_exponent(s)?;
    if n == 0 {
        return Err(Error::InvalidArgument("word length must be at least 1".into()));
    }
    budget.check_words(tuple.symbols(), n)?;
    let mut tree = ProductTree::new(tuple, budget);
    for _ in 1..n {
        tree.advance()?;
    }
    let stats = level_stats(tree.advance()?)?;
    Ok(log_power_sum(&stats.norms, s))
}

/// `S_n = Σ_{|w| = n} ‖A_w‖^s`.
pub fn partition_sum(tuple: &MatrixTuple, s: f64, n: usize, budget: &Budget) -> Result<f64> {
    Ok(log_partition_sum(tuple, s, n, budget)?.exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct PressureRow {
    pub n: usize,
    /// `(1/n) log S_n`.
    pub raw_upper: f64,
    /// Minimum of `raw_upper` over lengths up to `n`.
    pub upper: f64,
    /// `max_{|w| = n} (s/n) log ρ(A_w)`.
    pub raw_periodic_lower: f64,
    /// Maximum of `raw_periodic_lower` over lengths up to `n`.
    pub periodic_lower: f64,
    /// `(1/n) log Σ ρ(A_w)^s`, reported without a bound guarantee.
    pub spectral_diagnostic: f64,
    /// `(1/n) log tr(L^n Id)`, the exact Frobenius series at `s = 2` under
    /// the rational policy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frobenius_exact: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PressureBracket {
    pub s: f64,
    pub n_max: usize,
    pub upper: f64,
    pub periodic_lower: f64,
    pub series: Vec<PressureRow>,
    /// Exact value when available (even integer `s`, or dimension one).
    pub exact: Option<f64>,
}

impl PressureBracket {
    pub fn width(&self) -> f64 {
        match self.exact {
            Some(_) => 0.0,
            None => self.upper - self.periodic_lower,
        }
    }

    /// Best available point value: the exact value, else the bracket
    /// midpoint.
    pub fn value(&self) -> f64 {
        match self.exact {
            Some(e) => e,
            None if self.upper == self.periodic_lower => self.upper,
            None => 0.5 * (self.upper + self.periodic_lower),
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.periodic_lower - tol && x <= self.upper + tol
    }
}

/// Exact `log tr(L^n Id)` for `n = 1..=n_max`, `L(B) = Σ A_iᵀ B A_i`.
pub fn frobenius_series(tuple: &MatrixTuple, n_max: usize) -> Option<Vec<f64>> {
    let gens = tuple.exacts()?;
    let transposed: Vec<QMatrix> = gens.iter().map(QMatrix::transpose).collect();
    let mut b = QMatrix::identity(tuple.dim());
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let mut next = QMatrix::zeros(tuple.dim(), tuple.dim());
        for (a, at) in gens.iter().zip(&transposed) {
            next = next.add(&at.mul(&b).mul(a));
        }
        b = next;
        let tr: BigRational = b.trace();
        out.push(if tr.is_zero() { f64::NEG_INFINITY } else { ln_abs(&tr) });
    }
    Some(out)
}

/// Upper bound from `min_n (1/n) log S_n`, lower bound from periodic words,
/// and the exact value when one is available.
pub fn pressure_bracket(tuple: &MatrixTuple, s: f64, n_max: usize, budget: &Budget) -> Result<PressureBracket> {
    check_exponent(s)?;
    if n_max == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    budget.check_words(tuple.symbols(), n_max)?;
    let frob = if s == 2.0 { frobenius_series(tuple, n_max) } else { None };
    let mut tree = ProductTree::new(tuple, budget);
    let mut series = Vec::with_capacity(n_max);
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let stats = level_stats(tree.advance()?)?;
        let nf = n as f64;
        let raw_upper = log_power_sum(&stats.norms, s) / nf;
        let rho_max = stats.radii.iter().cloned().fold(0.0, f64::max);
        let raw_lower = if rho_max > 0.0 { s * rho_max.ln() / nf } else { f64::NEG_INFINITY };
        upper = upper.min(raw_upper);
        lower = lower.max(raw_lower);
        series.push(PressureRow {
            n,
            raw_upper,
            upper,
            raw_periodic_lower: raw_lower,
            periodic_lower: lower,
            spectral_diagnostic: log_power_sum(&stats.radii, s) / nf,
            frobenius_exact: frob.as_ref().map(|f| f[n - 1] / nf),
        });
    }
    let exact = if tuple.dim() == 1 {
        let bases: Vec<f64> = tuple.floats().iter().map(|m| m[(0, 0)].abs()).collect();
        Some(log_power_sum(&bases, s))
    } else if let Some(l) = even_half(s) {
        match pressure_exact_even(tuple, l, budget) {
            Ok(p) => Some(p),
            Err(Error::DimensionCap { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(PressureBracket { s, n_max, upper, periodic_lower: lower, series, exact })
}

/// `P(A, 2l) = log ρ(Σ_i K_i ⊗ K_i)` with `K_i = A_i^{⊗l}`.
pub fn pressure_exact_even(tuple: &MatrixTuple, l: usize, budget: &Budget) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    let big = (tuple.dim() as u128).checked_pow(2 * l as u32).unwrap_or(u128::MAX);
    if big > budget.dimension_cap as u128 {
        return Err(Error::DimensionCap { dim: big.min(usize::MAX as u128) as usize, cap: budget.dimension_cap });
    }
    let k = tuple.kronecker_power(l, budget)?;
    let rho = linalg::spectral_radius(&kron_square_sum(&k))?;
    Ok(if rho > 0.0 { rho.ln() } else { f64::NEG_INFINITY })
}

/// `Σ_i A_i ⊗ A_i` in double precision.
pub fn kron_square_sum(tuple: &MatrixTuple) -> nalgebra::DMatrix<f64> {
    let d2 = tuple.dim() * tuple.dim();
    let mut s = nalgebra::DMatrix::zeros(d2, d2);
    for a in tuple.floats() {
        s += linalg::kron(a, a);
    }
    s
}

/// Exponent of a `p`-radius: a positive number or infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadiusExponent {
    Finite(f64),
    Infinity,
}

impl FromStr for RadiusExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "inf" || t == "infinity" || t == "∞" {
            return Ok(RadiusExponent::Infinity);
        }
        let p: f64 = t.parse().map_err(|_| Error::InvalidArgument(format!("bad exponent {s:?}")))?;
        check_exponent(p)?;
        Ok(RadiusExponent::Finite(p))
    }
}

impl fmt::Display for RadiusExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusExponent::Finite(p) => write!(f, "{p}"),
            RadiusExponent::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for RadiusExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusRow {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusBracket {
    pub p: RadiusExponent,
    pub lower: f64,
    pub upper: f64,
    pub n_max: usize,
    pub exact: bool,
    pub series: Vec<RadiusRow>,
}

/// Bracket for `ϱ_p = e^{P(A,p)/p}`; exact for even integer `p`.
pub fn p_radius(tuple: &MatrixTuple, p: f64, n_max: usize, budget: &Budget) -> Result<RadiusBracket> {
    let bracket = pressure_bracket(tuple, p, n_max, budget)?;
    let series = bracket
        .series
        .iter()
        .map(|r| RadiusRow { n: r.n, lower: (r.periodic_lower / p).exp(), upper: (r.upper / p).exp() })
        .collect();
    let (lower, upper, exact) = match bracket.exact {
        Some(e) => ((e / p).exp(), (e / p).exp(), true),
        None => ((bracket.periodic_lower / p).exp(), (bracket.upper / p).exp(), false),
    };
    Ok(RadiusBracket { p: RadiusExponent::Finite(p), lower, upper, n_max, exact, series })
}

/// `max_{n<=N} max_w ρ(A_w)^{1/n} <= ϱ_∞ <= min_{n<=N} max_w ‖A_w‖^{1/n}`.
pub fn jsr_bracket(tuple: &MatrixTuple, n_max: usize, budget: &Budget) -> Result<RadiusBracket> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    budget.check_words(tuple.symbols(), n_max)?;
    let mut tree = ProductTree::new(tuple, budget);
    let mut lower: f64 = 0.0;
    let mut upper = f64::INFINITY;
    let mut series = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let stats = level_stats(tree.advance()?)?;
        let root = |x: f64| if n == 1 { x } else if n == 2 { x.sqrt() } else { x.powf(1.0 / n as f64) };
        lower = lower.max(root(stats.radii.iter().cloned().fold(0.0, f64::max)));
        upper = upper.min(root(stats.norms.iter().cloned().fold(0.0, f64::max)));
        series.push(RadiusRow { n, lower, upper });
    }
    Ok(RadiusBracket { p: RadiusExponent::Infinity, lower, upper, n_max, exact: lower == upper, series })
}

/// Dispatches on the exponent.
pub fn radius(tuple: &MatrixTuple, p: RadiusExponent, n_max: usize, budget: &Budget) -> Result<RadiusBracket> {
    match p {
        RadiusExponent::Finite(p) => p_radius(tuple, p, n_max, budget),
        RadiusExponent::Infinity => jsr_bracket(tuple, n_max, budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn notmix() -> MatrixTuple {
        MatrixTuple::from_ints(2, &[&[0, 2, 1, 0], &[0, 1, 2, 0]]).unwrap()
    }

    fn nilpotent() -> MatrixTuple {
        MatrixTuple::from_ints(2, &[&[0, 1, 0, 0], &[0, 0, 1, 0]]).unwrap()
    }

    fn scalar() -> MatrixTuple {
        MatrixTuple::from_ints(1, &[&[2], &[3]]).unwrap()
    }

    #[test]
    fn partition_sums() {
        let b = Budget::default();
        assert_eq!(partition_sum(&scalar(), 2.0, 1, &b).unwrap(), 13.0);
        // length-2 products 2Id, diag(4,1), diag(1,4), 2Id
        let s2 = partition_sum(&notmix(), 2.0, 2, &b).unwrap();
        assert!((s2 - 40.0).abs() < 1e-12, "{s2}");
        assert!((partition_sum(&nilpotent(), 2.0, 2, &b).unwrap() - 2.0).abs() < 1e-12);
        assert!(partition_sum(&notmix(), -1.0, 2, &b).is_err());
    }

    #[test]
    fn exact_even_pressure() {
        let b = Budget::default();
        assert!((pressure_exact_even(&notmix(), 1, &b).unwrap() - 5f64.ln()).abs() < 1e-12);
        assert!(pressure_exact_even(&nilpotent(), 1, &b).unwrap().abs() < 1e-12);
        assert!((pressure_exact_even(&scalar(), 1, &b).unwrap() - 13f64.ln()).abs() < 1e-12);
        let tiny = Budget { dimension_cap: 3, ..b };
        assert!(matches!(pressure_exact_even(&notmix(), 1, &tiny), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn scalar_bracket_collapses() {
        let br = pressure_bracket(&scalar(), 1.0, 5, &Budget::default()).unwrap();
        assert!((br.upper - 5f64.ln()).abs() < 1e-12);
        assert!((br.periodic_lower - 3f64.ln()).abs() < 1e-12);
        assert!((br.exact.unwrap() - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn notmix_bracket() {
        let br = pressure_bracket(&notmix(), 2.0, 8, &Budget::default()).unwrap();
        assert!((br.periodic_lower - 4f64.ln()).abs() < 1e-12);
        assert!(br.contains(5f64.ln(), 0.0));
        for w in br.series.windows(2) {
            assert!(w[1].upper <= w[0].upper);
            assert!(w[1].periodic_lower >= w[0].periodic_lower);
        }
        let frob = br.series[7].frobenius_exact.unwrap();
        assert!((frob - (2.0 * 5f64.powi(8)).ln() / 8.0).abs() < 1e-12);
    }

    #[test]
    fn radii() {
        let b = Budget::default();
        let r = p_radius(&notmix(), 2.0, 4, &b).unwrap();
        assert!(r.exact && (r.lower - 5f64.sqrt()).abs() < 1e-12);
        let r = p_radius(&scalar(), 1.0, 3, &b).unwrap();
        assert!((r.lower - 5.0).abs() < 1e-12 && (r.upper - 5.0).abs() < 1e-12);
        let r = p_radius(&nilpotent(), 2.0, 3, &b).unwrap();
        assert!((r.upper - 1.0).abs() < 1e-12);
        let j = jsr_bracket(&notmix(), 2, &b).unwrap();
        assert_eq!((j.lower, j.upper), (2.0, 2.0));
        let j = jsr_bracket(&nilpotent(), 2, &b).unwrap();
        assert_eq!((j.lower, j.upper), (1.0, 1.0));
        let orth = MatrixTuple::from_ints(2, &[&[0, -1, 1, 0], &[1, 0, 0, -1]]).unwrap();
        let j = jsr_bracket(&orth, 1, &b).unwrap();
        assert_eq!((j.lower, j.upper), (1.0, 1.0));
        assert_eq!("inf".parse::<RadiusExponent>().unwrap(), RadiusExponent::Infinity);
        assert!("-2".parse::<RadiusExponent>().is_err());
    }
}
