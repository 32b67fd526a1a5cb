//! Machine-readable run reports and their CSV companions.

use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::kusuoka::{
    self, ser_matrix, ConsistencyReport, CylinderTable, EntropyRow, GibbsReport, KusuokaData, LyapunovRow,
    PeripheralSpectrum, SpectrumRow,
};
use crate::pressure::{PressureBracket, RadiusBracket};
use crate::spec_file;
use crate::structure::{self, IrreducibilityVerdict, SearchBudget, StrongIrreducibilityVerdict, ZeroProductSearch};
use crate::tuple::{Budget, MatrixTuple, ScalarPolicy, Word};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the canonical JSON form of the tuple.
pub fn input_digest(tuple: &MatrixTuple) -> String {
    let text = serde_json::to_string(&spec_file::to_json(tuple)).expect("tuple serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Clone, Debug, Serialize)]
pub struct InputInfo {
    pub source: String,
    pub digest: String,
    pub label: Option<String>,
    pub dimension: usize,
    pub symbols: usize,
    pub policy: ScalarPolicy,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub elapsed_ms: f64,
}

/// One run of one operation. Everything except `timings` is reproducible
/// from the inputs and the tool version.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub operation: String,
    pub input: InputInfo,
    pub parameters: Value,
    pub results: Value,
    pub witnesses: Value,
    pub budgets: Budget,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(operation: &str, source: &str, tuple: &MatrixTuple, parameters: Value, budget: &Budget) -> Self {
        RunReport {
            tool: TOOL,
            version: VERSION,
            operation: operation.to_string(),
            input: InputInfo {
                source: source.to_string(),
                digest: input_digest(tuple),
                label: tuple.label().map(str::to_string),
                dimension: tuple.dim(),
                symbols: tuple.symbols(),
                policy: tuple.policy(),
            },
            parameters,
            results: Value::Null,
            witnesses: Value::Null,
            budgets: *budget,
            timings: Timings { elapsed_ms: 0.0 },
        }
    }

    pub fn with_results(mut self, results: impl Serialize) -> Result<Self> {
        self.results = serde_json::to_value(results)?;
        Ok(self)
    }

    pub fn with_witnesses(mut self, witnesses: impl Serialize) -> Result<Self> {
        self.witnesses = serde_json::to_value(witnesses)?;
        Ok(self)
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.timings.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A row of `series.csv`.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesRow {
    pub n: usize,
    pub upper: f64,
    pub periodic_lower: f64,
    pub spectral_diagnostic: Option<f64>,
}

pub fn pressure_series(b: &PressureBracket) -> Vec<SeriesRow> {
    b.series
        .iter()
        .map(|r| SeriesRow {
            n: r.n,
            upper: r.upper,
            periodic_lower: r.periodic_lower,
            spectral_diagnostic: Some(r.spectral_diagnostic),
        })
        .collect()
}

/// Radius brackets reuse the pressure columns; there is no diagnostic.
pub fn radius_series(b: &RadiusBracket) -> Vec<SeriesRow> {
    b.series
        .iter()
        .map(|r| SeriesRow { n: r.n, upper: r.upper, periodic_lower: r.lower, spectral_diagnostic: None })
        .collect()
}

fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn series_csv<W: std::io::Write>(rows: &[SeriesRow], w: W) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(["n", "upper", "periodic_lower", "spectral_diagnostic"])?;
    for r in rows {
        wr.write_record([
            r.n.to_string(),
            r.upper.to_string(),
            r.periodic_lower.to_string(),
            r.spectral_diagnostic.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn cylinders_csv<W: std::io::Write>(table: Option<&CylinderTable>, w: W) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(["word", "length", "measure", "norm", "zero_product"])?;
    if let Some(t) = table {
        for level in &t.levels[1..] {
            for i in 0..level.measure.len() {
                wr.write_record([
                    Word::from_index(i, t.symbols, level.n).to_string(),
                    level.n.to_string(),
                    level.measure[i].to_string(),
                    level.norm[i].to_string(),
                    level.zero[i].to_string(),
                ])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// Writes `report.json`, `series.csv` and `cylinders.csv` into `dir`.
/// The CSV files carry only their header when the run has no such data.
pub fn write_bundle(dir: &Path, report: &RunReport, series: &[SeriesRow], cylinders: Option<&CylinderTable>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json_pretty()? + "\n")?;
    series_csv(series, std::fs::File::create(dir.join("series.csv"))?)?;
    cylinders_csv(cylinders, std::fs::File::create(dir.join("cylinders.csv"))?)?;
    Ok(())
}

/// Structure evidence for a tuple.
#[derive(Clone, Debug, Serialize)]
pub struct InspectReport {
    pub irreducibility: IrreducibilityVerdict,
    pub block_sizes: Vec<usize>,
    #[serde(serialize_with = "ser_matrix")]
    pub basis_change: DMatrix<f64>,
    pub strong_irreducibility: StrongIrreducibilityVerdict,
    pub zero_products: ZeroProductSearch,
}

pub fn inspect(tuple: &MatrixTuple, zero_search_len: usize, sb: &SearchBudget, budget: &Budget) -> Result<InspectReport> {
    let block = structure::block_triangularize(tuple, sb)?;
    Ok(InspectReport {
        irreducibility: structure::find_invariant_subspace(tuple, sb),
        block_sizes: block.block_sizes(),
        basis_change: block.basis_change.float().clone(),
        strong_irreducibility: structure::strong_irreducibility_scan(tuple, sb),
        zero_products: structure::zero_product_search(tuple, zero_search_len, budget)?,
    })
}

/// The measure, its self-checks and the derived series.
#[derive(Clone, Debug, Serialize)]
pub struct KusuokaSummary {
    pub data: KusuokaData,
    pub n_max: usize,
    pub consistency: ConsistencyReport,
    pub gibbs: GibbsReport,
    pub lyapunov_top: Vec<LyapunovRow>,
    pub lyapunov_spectrum: Vec<SpectrumRow>,
    pub entropy: Vec<EntropyRow>,
    pub peripheral_spectrum: PeripheralSpectrum,
}

pub fn kusuoka_summary(tuple: &MatrixTuple, n_max: usize, tol: f64, budget: &Budget) -> Result<(KusuokaSummary, CylinderTable)> {
    let data = kusuoka::kusuoka_measure(tuple, tol)?;
    let table = data.cylinder_table(n_max, budget)?;
    let summary = KusuokaSummary {
        n_max,
        consistency: table.consistency_check(),
        gibbs: table.gibbs_verify(data.gibbs_constants()),
        lyapunov_top: table.lyapunov_top(),
        lyapunov_spectrum: table.lyapunov_spectrum(),
        entropy: table.entropy_estimate(),
        peripheral_spectrum: kusuoka::peripheral_spectrum(tuple, 1e-6, budget)?,
        data,
    };
    Ok((summary, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::pressure::pressure_bracket;

    #[test]
    fn digest_is_stable() {
        let a = input_digest(&builtins::notmix2());
        assert_eq!(a, input_digest(&builtins::eps(num_rational::BigRational::from_integer(0.into())).with_label("notmix2")));
        assert_eq!(a.len(), 64);
        assert_ne!(a, input_digest(&builtins::nilpotent2()));
    }

    #[test]
    fn series_csv_layout() {
        let b = pressure_bracket(&builtins::notmix2(), 2.0, 3, &Budget::default()).unwrap();
        let mut out = Vec::new();
        series_csv(&pressure_series(&b), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("n,upper,periodic_lower,spectral_diagnostic\n1,"));
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
    }
}
