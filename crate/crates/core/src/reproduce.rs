//! Regenerates the report bundle of every built-in tuple and evaluates the
//! acceptance criteria.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::builtins;
use crate::classify::{self, ClassifyOptions, ConformalObstacle, ConformalVerdict, MultiplicativeVerdict, SIndependence};
use crate::error::{Error, Result};
use crate::kusuoka::{self, PeripheralVerdict};
use crate::pressure::{jsr_bracket, pressure_bracket, pressure_exact_even};
use crate::rational::{rat, QMatrix};
use crate::report::{self, RunReport};
use crate::structure::{self, SearchBudget};
use crate::tuple::{enumerate_words, Budget, Matrix, MatrixTuple, Word};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Reproduction {
    pub criteria: Vec<CriterionResult>,
    pub bundles: Vec<PathBuf>,
}

impl Reproduction {
    pub fn failures(&self) -> Vec<&CriterionResult> {
        self.criteria.iter().filter(|c| !c.passed).collect()
    }

    /// One line per criterion.
    pub fn summary_table(&self) -> String {
        let mut out = String::from("id  status  criterion\n");
        for c in &self.criteria {
            out += &format!("{:>2}  {:<6}  {}: {}\n", c.id, if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        }
        out
    }
}

/// Built-in tuples with their directory names.
pub fn builtin_set() -> Vec<(String, MatrixTuple)> {
    let mut out = vec![
        ("notmix2".to_string(), builtins::notmix2()),
        ("nilpotent2".to_string(), builtins::nilpotent2()),
        ("alpha".to_string(), builtins::alpha(rat(3, 5), rat(4, 5))),
        ("rankone4".to_string(), builtins::rankone4()),
    ];
    for (slug, e) in [("eps-0", rat(0, 1)), ("eps-1_4", rat(1, 4)), ("eps-1", rat(1, 1))] {
        out.push((slug.to_string(), builtins::eps(e)));
    }
    out
}

type Outcome = Result<(bool, String)>;

fn criterion(id: usize, name: &'static str, f: impl FnOnce() -> Outcome) -> CriterionResult {
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, name, passed, detail }
}

fn pressure_identity(budget: &Budget) -> Outcome {
    let t = builtins::notmix2();
    let exact = pressure_exact_even(&t, 1, budget)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let start = Instant::now();
    let bracket = pool.install(|| pressure_bracket(&t, 2.0, 10, budget))?;
    let secs = start.elapsed().as_secs_f64();
    let log5 = 5f64.ln();
    let gap = bracket.upper - log5;
    let ok = (exact - log5).abs() <= 1e-12 && gap <= 0.05 && bracket.contains(log5, 0.0) && secs < 10.0;
    Ok((ok, format!("exact - log 5 = {:.1e}, upper - log 5 = {gap:.4} (limit 0.05), {secs:.2} s", exact - log5)))
}

fn kusuoka_exactness() -> Outcome {
    let kd = kusuoka::kusuoka_measure(&builtins::notmix2(), kusuoka::DEFAULT_TOL)?;
    let mu = |w: &[usize]| kd.cylinder_measure(&Word::from_one_based(w));
    let expected = [(vec![1, 1], 0.16), (vec![1, 2], 0.34), (vec![2, 1], 0.34), (vec![2, 2], 0.16)];
    let mut worst: f64 = 0.0;
    for (w, v) in &expected {
        worst = worst.max((mu(w)? - v).abs());
    }
    let table = kd.cylinder_table(8, &Budget::default())?;
    let mut block_worst: f64 = 0.0;
    for level in &table.levels[1..] {
        for (i, m) in level.measure.iter().enumerate() {
            let w = Word::from_index(i, 2, level.n);
            block_worst = block_worst.max((m - two_block_bernoulli(&w)).abs());
        }
    }
    Ok((worst <= 1e-10 && block_worst <= 1e-10, format!("length-2 error {worst:.1e}, two-block error {block_worst:.1e}")))
}

/// Average of the two alternating Bernoulli measures, one per phase.
fn two_block_bernoulli(w: &Word) -> f64 {
    let phase = |start: usize| {
        w.symbols().iter().enumerate().fold(1.0, |acc, (k, &x)| {
            let state = (start + k) % 2;
            acc * if x == state { 0.2 } else { 0.8 }
        })
    };
    0.5 * (phase(0) + phase(1))
}

fn measure_consistency(budget: &Budget) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for (slug, t) in builtin_set() {
        let kd = kusuoka::kusuoka_measure(&t, kusuoka::DEFAULT_TOL)?;
        let v = kd.cylinder_table(8, budget)?.consistency_check().max_violation();
        if v > 1e-10 {
            names.push(slug);
        }
        worst = worst.max(v);
    }
    Ok((names.is_empty(), format!("max violation {worst:.1e}{}", fail_list(&names))))
}

fn fail_list(names: &[String]) -> String {
    if names.is_empty() {
        String::new()
    } else {
        format!(", failing: {}", names.join(" "))
    }
}

fn gibbs_sandwich(budget: &Budget) -> Outcome {
    let mut names = Vec::new();
    let mut notmix_bounds = (0.0, 0.0);
    for (slug, t) in builtin_set() {
        let kd = kusuoka::kusuoka_measure(&t, kusuoka::DEFAULT_TOL)?;
        let g = kd.cylinder_table(10, budget)?.gibbs_verify(kd.gibbs_constants());
        if g.violation.is_some() {
            names.push(slug.clone());
        }
        if slug == "notmix2" {
            notmix_bounds = (g.c_lower, g.c_upper);
        }
    }
    let bounds_ok = (notmix_bounds.0 - 0.5).abs() <= 1e-10 && (notmix_bounds.1 - 1.0).abs() <= 1e-10;
    Ok((
        names.is_empty() && bounds_ok,
        format!("notmix2 bounds [{:.6}, {:.6}]{}", notmix_bounds.0, notmix_bounds.1, fail_list(&names)),
    ))
}

fn non_mixing(budget: &Budget) -> Outcome {
    let t = builtins::notmix2();
    let ps = kusuoka::peripheral_spectrum(&t, 1e-9, budget)?;
    let spectrum_ok = ps.eigenvalues.len() == 2
        && (ps.eigenvalues[0].0 - 5.0).abs() <= 1e-9
        && (ps.eigenvalues[1].0 + 5.0).abs() <= 1e-9
        && ps.eigenvalues.iter().all(|z| z.1.abs() <= 1e-9)
        && ps.verdict == PeripheralVerdict::ObstructionSuspected;
    let kd = kusuoka::kusuoka_measure(&t, kusuoka::DEFAULT_TOL)?;
    let one = Word::from_one_based(&[1]);
    let mu1 = kd.cylinder_measure(&one)?;
    let series = kd.correlation_series(&one, &one, 20)?;
    let odd_ok = series.iter().filter(|(n, _)| n % 2 == 1).all(|(_, c)| (c - mu1 * mu1).abs() > 0.01);
    let cesaro = series.iter().map(|(_, c)| c).sum::<f64>() / series.len() as f64;
    let cesaro_ok = (cesaro - mu1 * mu1).abs() <= 0.01;
    let scan = structure::mixing_obstruction_scan(&t, 3, &SearchBudget::default(), budget)?;
    let scan_ok = match &scan {
        Some(o) => {
            o.n == 2 && o.witness.dim() == 1 && o.witness.float_basis()[0].iter().filter(|x| **x == 0.0).count() == 1
        }
        None => false,
    };
    Ok((
        spectrum_ok && odd_ok && cesaro_ok && scan_ok,
        format!(
            "peripheral {:?}, odd gap ok {odd_ok}, Cesaro {cesaro:.4} vs {:.4}, obstruction at n = {:?}",
            ps.eigenvalues,
            mu1 * mu1,
            scan.map(|o| o.n)
        ),
    ))
}

fn zero_entropy(budget: &Budget) -> Outcome {
    let t = builtins::nilpotent2();
    let ps = classify::zero_entropy_structure(&t, budget)?;
    let structure_ok = matches!(&ps, Some(s) if s.period == 2 && s.block_dim == 1
        && s.word == Word::from_one_based(&[1, 2]) && s.certainty == structure::Certainty::Exact);
    let p = pressure_exact_even(&t, 1, budget)?;
    let kd = kusuoka::kusuoka_measure(&t, kusuoka::DEFAULT_TOL)?;
    let h = kd.cylinder_table(10, budget)?.entropy_estimate().last().map(|r| r.shannon).unwrap_or(f64::NAN);
    Ok((structure_ok && p.abs() <= 1e-12 && h <= 1e-9, format!("structure {structure_ok}, P = {p:.1e}, entropy at n = 10: {h:.1e}")))
}

fn jsr(budget: &Budget) -> Outcome {
    let a = jsr_bracket(&builtins::notmix2(), 2, budget)?;
    let b = jsr_bracket(&builtins::nilpotent2(), 2, budget)?;
    let ok = a.lower == 2.0 && a.upper == 2.0 && b.lower == 1.0 && b.upper == 1.0;
    Ok((ok, format!("notmix2 [{}, {}], nilpotent2 [{}, {}]", a.lower, a.upper, b.lower, b.upper)))
}

fn bernoulli_counterexample(budget: &Budget) -> Outcome {
    match classify::multiplicative_sr_check(&builtins::alpha(rat(3, 5), rat(4, 5)), 2, 1e-9, budget)? {
        MultiplicativeVerdict::CounterexamplePair { first, second, radius_product, product_of_radii, .. } => {
            let ok = first == Word::from_one_based(&[1])
                && second == Word::from_one_based(&[2])
                && (radius_product - 16.0 / 25.0).abs() <= 1e-12
                && (product_of_radii - 12.0 / 25.0).abs() <= 1e-12;
            Ok((ok, format!("pair {first} {second}: {radius_product} vs {product_of_radii}")))
        }
        v => Ok((false, format!("{v:?}"))),
    }
}

/// A multiple of 1/2 in `[-half_steps/2, half_steps/2]`.
fn random_rational(rng: &mut ChaCha8Rng, half_steps: i64) -> BigRational {
    rat(rng.random_range(-half_steps..=half_steps), 2)
}

/// A rational orthogonal matrix: Cayley transform of a random skew matrix,
/// with a random reflection.
pub fn random_rational_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> QMatrix {
    let mut k = QMatrix::zeros(d, d);
    for i in 0..d {
        for j in i + 1..d {
            let v = rat(rng.random_range(-4..=4), rng.random_range(1..=3));
            k[(i, j)] = v.clone();
            k[(j, i)] = -v;
        }
    }
    let id = QMatrix::identity(d);
    let o = id.sub(&k).mul(&id.add(&k).inverse().expect("I + K is invertible for skew K"));
    if rng.random_bool(0.5) {
        let mut flip = QMatrix::identity(d);
        flip[(0, 0)] = -BigRational::one();
        flip.mul(&o)
    } else {
        o
    }
}

fn conformal_round_trip(_budget: &Budget) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c0f_0a11);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for trial in 0..100 {
        let d = 2 + trial % 2;
        let m = rng.random_range(2..=3);
        let gens: Vec<QMatrix> = (0..m)
            .map(|_| random_rational_orthogonal(&mut rng, d).scale(&rat(rng.random_range(1..=5), rng.random_range(1..=5))))
            .collect();
        let b = loop {
            let entries: Vec<BigRational> = (0..d * d).map(|_| random_rational(&mut rng, 6)).collect();
            let q = QMatrix::from_row_major(d, d, entries);
            if !q.det().is_zero() {
                break q;
            }
        };
        let t = MatrixTuple::from_exact(gens)?.conjugate(&Matrix::from_exact(b))?;
        match classify::conformal_conjugacy_check(&t, 1e-8)? {
            ConformalVerdict::Conjugator { residual, .. } => worst = worst.max(residual),
            _ => failures += 1,
        }
    }
    let notmix_ok = matches!(
        classify::conformal_conjugacy_check(&builtins::notmix2(), 1e-8)?,
        ConformalVerdict::NoConjugator { reason: ConformalObstacle::NoPositiveDefiniteElement { dimension: 1 }, ref fixed_space, .. }
            if fixed_space[0][(0, 0)] == 0.0 && fixed_space[0][(1, 1)] == 0.0
    );
    Ok((failures == 0 && worst <= 1e-8 && notmix_ok, format!("{failures} of 100 unrecovered, worst residual {worst:.1e}, notmix2 none {notmix_ok}")))
}

fn s_independence(budget: &Budget) -> Outcome {
    let lam = |t: &MatrixTuple| classify::s_independence_check(t, 6, 1e-9, budget);
    let a = lam(&builtins::rankone4())?;
    let b = lam(&builtins::nilpotent2())?;
    let c = lam(&builtins::notmix2())?;
    let zero = |v: &SIndependence| v.lambda().is_some_and(|l| l.abs() <= 1e-12);
    let ok = zero(&a) && zero(&b) && matches!(c, SIndependence::Varies { .. });
    Ok((ok, format!("rankone4 {:?}, nilpotent2 {:?}, notmix2 varies {}", a.lambda(), b.lambda(), c.lambda().is_none())))
}

fn correlation_oracle(budget: &Budget) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0_44e1);
    let mut done = 0;
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    while done < 200 {
        let d = rng.random_range(1..=3);
        let m = rng.random_range(2..=3);
        let gens: Vec<DMatrix<i64>> = (0..m).map(|_| DMatrix::from_fn(d, d, |_, _| rng.random_range(-3..=3))).collect();
        let rows: Vec<Vec<i64>> = gens.iter().map(|g| g.transpose().iter().cloned().collect()).collect();
        let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
        let t = MatrixTuple::from_ints(d, &refs)?;
        let kd = match kusuoka::kusuoka_measure(&t, kusuoka::DEFAULT_TOL) {
            Ok(kd) => kd,
            Err(Error::DegenerateEigenmatrix { .. }) | Err(Error::NotConverged { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let word = |rng: &mut ChaCha8Rng| {
            let len = rng.random_range(0..=2);
            Word::from_zero_based((0..len).map(|_| rng.random_range(0..m)).collect())
        };
        let x = word(&mut rng);
        let y = word(&mut rng);
        let n = rng.random_range(x.len()..=6);
        let closed = kd.correlation(&x, &y, n)?;
        let mut brute = Vec::new();
        for z in enumerate_words(m, n - x.len(), budget)? {
            brute.push(kd.cylinder_measure(&x.concat(&z).concat(&y))?);
        }
        let brute = crate::linalg::tree_sum(&brute);
        worst = worst.max((closed - brute).abs() / closed.abs().max(1.0));
        done += 1;
    }
    Ok((worst <= 1e-10, format!("200 tuples ({skipped} degenerate redrawn), worst error {worst:.1e}")))
}

fn eigen_quality() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for (slug, t) in builtin_set() {
        let kd = kusuoka::kusuoka_measure(&t, kusuoka::DEFAULT_TOL)?;
        let r = kd.residual.max(kd.residual_hat);
        worst = worst.max(r);
        if r > 1e-10 || kd.min_eigenvalue_q <= 0.0 || kd.min_eigenvalue_q_hat <= 0.0 {
            names.push(slug);
        }
    }
    let reducible = MatrixTuple::from_ints(2, &[&[1, 0, 0, 2], &[3, 0, 0, 1]])?;
    let degenerate = matches!(kusuoka::kusuoka_measure(&reducible, kusuoka::DEFAULT_TOL), Err(Error::DegenerateEigenmatrix { .. }));
    Ok((names.is_empty() && degenerate, format!("worst residual {worst:.1e}, reducible pair degenerate {degenerate}{}", fail_list(&names))))
}

/// Evaluates every acceptance criterion.
pub fn evaluate_criteria(budget: &Budget) -> Vec<CriterionResult> {
    vec![
        criterion(1, "pressure identity", || pressure_identity(budget)),
        criterion(2, "cylinder exactness", kusuoka_exactness),
        criterion(3, "measure consistency", || measure_consistency(budget)),
        criterion(4, "Gibbs sandwich", || gibbs_sandwich(budget)),
        criterion(5, "non-mixing evidence", || non_mixing(budget)),
        criterion(6, "zero entropy", || zero_entropy(budget)),
        criterion(7, "joint spectral radius", || jsr(budget)),
        criterion(8, "Bernoulli counterexample", || bernoulli_counterexample(budget)),
        criterion(9, "conformal round trip", || conformal_round_trip(budget)),
        criterion(10, "s-independence", || s_independence(budget)),
        criterion(11, "correlation oracle", || correlation_oracle(budget)),
        criterion(12, "eigen quality", eigen_quality),
    ]
}

fn bundle(dir: &Path, slug: &str, tuple: &MatrixTuple, budget: &Budget) -> Result<()> {
    let start = Instant::now();
    let sb = SearchBudget::default();
    let inspect = report::inspect(tuple, 8, &sb, budget)?;
    let pressure = pressure_bracket(tuple, 2.0, 10, budget)?;
    let jsr = jsr_bracket(tuple, 8, budget)?;
    let measure = report::kusuoka_summary(tuple, 8, kusuoka::DEFAULT_TOL, budget);
    let classification = classify::classification_report(tuple, &ClassifyOptions { budget: *budget, ..Default::default() });
    let mut extras = json!({});
    if slug == "notmix2" {
        let kd = kusuoka::kusuoka_measure(tuple, kusuoka::DEFAULT_TOL)?;
        let one = Word::from_one_based(&[1]);
        extras["correlation_1_1"] = json!(kd.correlation_series(&one, &one, 20)?);
        extras["mu_1_squared"] = json!(kd.cylinder_measure(&one)?.powi(2));
    }
    if slug.starts_with("eps") {
        extras["mixing_obstruction_up_to_3"] = json!(structure::mixing_obstruction_scan(tuple, 3, &sb, budget)?);
    }
    let (measure_json, table) = match &measure {
        Ok((summary, table)) => (serde_json::to_value(summary)?, Some(table)),
        Err(e) => (json!({ "error": e.to_string() }), None),
    };
    let report = RunReport::new("reproduce", &format!("builtin:{}", tuple.label().unwrap_or(slug)), tuple, json!({"s": 2, "N": 10, "n_max": 8}), budget)
        .with_results(json!({
            "inspect": inspect,
            "pressure": pressure,
            "joint_spectral_radius": jsr,
            "kusuoka": measure_json,
            "classification": classification,
            "extras": extras,
        }))?
        .timed(start);
    report::write_bundle(&dir.join(slug), &report, &report::pressure_series(&pressure), table)
}

/// Writes one bundle per built-in under `out` plus `summary.json`, and
/// evaluates the acceptance criteria.
pub fn reproduce(out: &Path, budget: &Budget) -> Result<Reproduction> {
    std::fs::create_dir_all(out)?;
    let mut bundles = Vec::new();
    for (slug, t) in builtin_set() {
        bundle(out, &slug, &t, budget)?;
        bundles.push(out.join(&slug));
    }
    let rep = Reproduction { criteria: evaluate_criteria(budget), bundles };
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&rep)? + "\n")?;
    std::fs::write(out.join("summary.txt"), rep.summary_table())?;
    Ok(rep)
}
