use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use thermoform::classify::{self, ClassifyOptions};
use thermoform::kusuoka;
use thermoform::pressure::{self, RadiusExponent};
use thermoform::report::{self, RunReport};
use thermoform::structure::SearchBudget;
use thermoform::{builtins, reproduce, spec_file, Budget, Error, MatrixTuple, Result, Word};

const AFTER_HELP: &str = "Built-in tuples: builtin:notmix2, builtin:nilpotent2, builtin:alpha(a1,a2), builtin:rankone4, builtin:eps(e).
Exit codes: 0 success, 2 input error, 3 numeric failure, 4 budget exceeded, 5 acceptance failure.
THERMOFORM_BUDGET_CAP overrides the cap on words enumerated per length.";

#[derive(Parser)]
#[command(name = "thermoform", version, about = "Pressure, radii and equilibrium states of matrix tuples", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for report.json, series.csv and cylinders.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Tuple file (JSON).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in tuple, e.g. notmix2 or eps(1/4).
    #[arg(long)]
    builtin: Option<String>,
}

impl Input {
    fn load(&self) -> Result<(String, MatrixTuple)> {
        match (&self.input, &self.builtin) {
            (Some(p), _) => Ok((p.display().to_string(), spec_file::read_tuple(p)?)),
            (None, Some(name)) => {
                let t = builtins::builtin(name)?;
                Ok((format!("builtin:{}", name.trim_start_matches("builtin:")), t))
            }
            (None, None) => Err(Error::InvalidArgument("one of --input or --builtin is required".into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Irreducibility evidence, block form, finite invariant unions, zero products.
    Inspect {
        #[command(flatten)]
        input: Input,
        /// Longest word searched for a zero product.
        #[arg(long = "N", default_value_t = 8)]
        n: usize,
    },
    /// Pressure bracket at exponent s.
    Pressure {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        #[arg(long = "N", default_value_t = 10)]
        n: usize,
    },
    /// p-radius bracket; p = inf gives the joint spectral radius.
    Radius {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "inf")]
        p: String,
        #[arg(long = "N", default_value_t = 8)]
        n: usize,
    },
    /// The s = 2 equilibrium state with its checks and series.
    Kusuoka {
        #[command(flatten)]
        input: Input,
        #[arg(long = "n-max", default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = kusuoka::DEFAULT_TOL)]
        tol: f64,
    },
    /// Runs every classification check.
    Classify {
        #[command(flatten)]
        input: Input,
        /// Cylinder length for measure-level checks.
        #[arg(long = "n-max", default_value_t = 8)]
        n_max: usize,
        /// Word length budget for semigroup checks.
        #[arg(long = "N", default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// μ([x] ∩ σ^{-n}[y]) for n up to n-max.
    Correlate {
        #[command(flatten)]
        input: Input,
        /// First word, e.g. "(1)" or "1,2".
        #[arg(long, default_value = "(1)")]
        x: String,
        #[arg(long, default_value = "(1)")]
        y: String,
        #[arg(long = "n-max", default_value_t = 20)]
        n_max: usize,
        #[arg(long, default_value_t = kusuoka::DEFAULT_TOL)]
        tol: f64,
    },
    /// Regenerates all built-in bundles and checks the acceptance criteria.
    Reproduce,
}

struct Run {
    report: RunReport,
    series: Vec<report::SeriesRow>,
    cylinders: Option<kusuoka::CylinderTable>,
    correlations: Option<Vec<(usize, f64)>>,
}

impl Run {
    fn new(report: RunReport) -> Self {
        Run { report, series: Vec::new(), cylinders: None, correlations: None }
    }
}

fn execute(cli: &Cli, budget: &Budget) -> Result<Run> {
    let start = Instant::now();
    let sb = SearchBudget::default();
    let run = match &cli.command {
        Command::Inspect { input, n } => {
            let (src, t) = input.load()?;
            let r = report::inspect(&t, *n, &sb, budget)?;
            let witnesses = json!({ "invariant_subspace": r.irreducibility.witness(), "zero_product": r.zero_products.word });
            Run::new(RunReport::new("inspect", &src, &t, json!({ "N": n, "search": sb }), budget).with_results(&r)?.with_witnesses(witnesses)?)
        }
        Command::Pressure { input, s, n } => {
            let (src, t) = input.load()?;
            let b = pressure::pressure_bracket(&t, *s, *n, budget)?;
            let status = match (b.exact, t.dim()) {
                (None, _) => "bracket",
                (Some(_), 1) => "exact (dimension one)",
                (Some(_), _) => "exact (even s)",
            };
            let results = json!({ "status": status, "value": b.value(), "width": b.width(), "bracket": b });
            let mut run = Run::new(RunReport::new("pressure", &src, &t, json!({ "s": s, "N": n }), budget).with_results(results)?);
            run.series = report::pressure_series(&b);
            run
        }
        Command::Radius { input, p, n } => {
            let (src, t) = input.load()?;
            let p: RadiusExponent = p.parse()?;
            let b = pressure::radius(&t, p, *n, budget)?;
            let mut run = Run::new(RunReport::new("radius", &src, &t, json!({ "p": p, "N": n }), budget).with_results(&b)?);
            run.series = report::radius_series(&b);
            run
        }
        Command::Kusuoka { input, n_max, tol } => {
            let (src, t) = input.load()?;
            let (summary, table) = report::kusuoka_summary(&t, *n_max, *tol, budget)?;
            let bracket = pressure::pressure_bracket(&t, 2.0, (*n_max).max(1), budget)?;
            let witnesses = json!({ "gibbs_violation": summary.gibbs.violation, "gibbs_extremes": [summary.gibbs.min_word, summary.gibbs.max_word] });
            let mut run = Run::new(
                RunReport::new("kusuoka", &src, &t, json!({ "n_max": n_max, "tol": tol }), budget)
                    .with_results(&summary)?
                    .with_witnesses(witnesses)?,
            );
            run.series = report::pressure_series(&bracket);
            run.cylinders = Some(table);
            run
        }
        Command::Classify { input, n_max, n, tol } => {
            let (src, t) = input.load()?;
            let opts = ClassifyOptions { cylinder_len: *n_max, multiplicative_len: *n, tol: *tol, budget: *budget, ..Default::default() };
            let r = classify::classification_report(&t, &opts);
            Run::new(RunReport::new("classify", &src, &t, json!({ "n_max": n_max, "N": n, "tol": tol }), budget).with_results(&r)?)
        }
        Command::Correlate { input, x, y, n_max, tol } => {
            let (src, t) = input.load()?;
            let (x, y) = (Word::parse(x)?, Word::parse(y)?);
            let kd = kusuoka::kusuoka_measure(&t, *tol)?;
            let series = kd.correlation_series(&x, &y, *n_max)?;
            let product = kd.cylinder_measure(&x)? * kd.cylinder_measure(&y)?;
            let cesaro = series.iter().map(|(_, c)| c).sum::<f64>() / series.len() as f64;
            let results = json!({ "x": x, "y": y, "product_of_measures": product, "cesaro_average": cesaro, "series": series });
            let mut run =
                Run::new(RunReport::new("correlate", &src, &t, json!({ "x": x, "y": y, "n_max": n_max, "tol": tol }), budget).with_results(results)?);
            run.correlations = Some(series);
            run
        }
        Command::Reproduce => unreachable!("handled separately"),
    };
    Ok(Run { report: run.report.timed(start), ..run })
}

fn emit(cli: &Cli, run: &Run) -> Result<()> {
    if let Some(dir) = &cli.out {
        report::write_bundle(dir, &run.report, &run.series, run.cylinders.as_ref())?;
    }
    let stdout = std::io::stdout().lock();
    match cli.format {
        Format::Json => {
            println!("{}", run.report.to_json_pretty()?);
        }
        Format::Csv => {
            if let Some(c) = &run.correlations {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(stdout);
                w.write_record(["n", "correlation"])?;
                for (n, v) in c {
                    w.write_record([n.to_string(), v.to_string()])?;
                }
                w.flush()?;
            } else if run.cylinders.is_some() {
                report::cylinders_csv(run.cylinders.as_ref(), stdout)?;
            } else if !run.series.is_empty() {
                report::series_csv(&run.series, stdout)?;
            } else {
                return Err(Error::InvalidArgument(format!("no CSV output for {}", run.report.operation)));
            }
        }
    }
    Ok(())
}

fn run_reproduce(cli: &Cli, budget: &Budget) -> Result<ExitCode> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("reproduce-out"));
    let rep = reproduce::reproduce(&out, budget)?;
    print!("{}", rep.summary_table());
    let failures = rep.failures();
    if failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for f in failures {
        eprintln!("acceptance criterion {} ({}) failed: {}", f.id, f.name, f.detail);
    }
    Ok(ExitCode::from(5))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let budget = Budget::from_env();
    let result = match cli.command {
        Command::Reproduce => run_reproduce(&cli, &budget),
        _ => execute(&cli, &budget).and_then(|run| emit(&cli, &run)).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
