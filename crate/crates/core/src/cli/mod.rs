//! Command line front end.
//!
//! Exit status: 0 on success, 2 for configuration or parse errors, 3 for
//! numerical accuracy failures, 4 for domain errors (1 for i/o failures).

mod config;
mod oracle;

pub use config::{DecayConfig, KernelConfig, MetricConfig, OpConfig, RunConfig, SpecRef};
pub use oracle::{run_oracles, OracleResult};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::decay::{
    compare_bounds, fit_decay, mean_value_check, near_diagonal_check, sample_pairs, write_plot_data,
    write_samples_csv, BoundComparison, NearDiagonalReport, SlackPolicy, Strategy,
};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::kernel::{compute_moments, ClosedFormKernel, GramBasis, GramOptions, KernelSource, Method, SeriesKernel};
use crate::metric::{distance, GraphBuildOptions, MetricGraph};
use crate::weights::{check_op_conditions, OPCheckOptions, WeightSpec};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "BERGMAN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bergman", version, about = "Weighted Bergman kernels on the unit disc")]
pub struct Cli {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Weight as a JSON file path or inline JSON object.
    #[arg(long, global = true)]
    pub spec: Option<String>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the membership constants C1, C2 and search for a C3 witness.
    CheckOp(CheckOpArgs),
    /// Evaluate K(z, w).
    Kernel(KernelArgs),
    /// Geodesic distance between two points.
    Distance(DistanceArgs),
    /// Sample pairs, fit the decay envelope and write the report.
    DecayReport(DecayArgs),
    /// Compare against analytic values for the standard weight.
    OracleTest(OracleArgs),
}

#[derive(Debug, Args)]
pub struct CheckOpArgs {
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Series,
    Closed,
    Gram,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Series => Method::Series,
            MethodArg::Closed => Method::ClosedForm,
            MethodArg::Gram => Method::Gram,
        }
    }
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [re, im] = parts.as_slice() else {
        return Err(format!("expected `re,im`, got `{s}`"));
    };
    let re: f64 = re.trim().parse().map_err(|e| format!("{e}"))?;
    let im: f64 = im.trim().parse().map_err(|e| format!("{e}"))?;
    Ok(Complex64::new(re, im))
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub z: Complex64,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub w: Complex64,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Moment table size for the series route.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Basis degree for the Gram route.
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub z: Complex64,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub w: Complex64,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub slack: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Rays,
    Random,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Output of `distance`.
#[derive(Debug, Serialize)]
struct DistanceOutput {
    distance: f64,
    snap_error: f64,
    h: f64,
    r_max: f64,
}

/// Side results of `decay-report` next to the envelope fit.
#[derive(Debug, Serialize)]
struct DecaySummary {
    spec: WeightSpec,
    samples: usize,
    excluded: usize,
    comparison: Vec<BoundComparison>,
    comparison_error: Option<String>,
    near_diagonal: NearDiagonalReport,
    mean_value_max_ratio: f64,
}

/// Parses `args`, runs the subcommand and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, v: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    write_atomic(&dir.join(name), &bytes)
}

fn load(cli: &Cli) -> Result<(RunConfig, Option<WeightSpec>)> {
    let (mut cfg, mut base) = match &cli.config {
        Some(p) => (RunConfig::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (RunConfig::default(), PathBuf::new()),
    };
    if let Some(s) = &cli.spec {
        cfg.spec = Some(SpecRef::from_arg(s)?);
        base = PathBuf::new();
    }
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    let spec = cfg.spec.as_ref().map(|s| s.resolve(&base)).transpose()?;
    Ok((cfg, spec))
}

fn require(spec: Option<WeightSpec>) -> Result<WeightSpec> {
    spec.ok_or_else(|| Error::Config("no weight given: use --spec or the `spec` config key".into()))
}

/// Kernel source for `spec` according to `cfg`; the method defaults to series
/// for radial weights and Gram otherwise.
pub fn kernel_source(spec: &WeightSpec, cfg: &KernelConfig) -> Result<Box<dyn KernelSource>> {
    let method = cfg.method.unwrap_or(if spec.is_radial() { Method::Series } else { Method::Gram });
    match method {
        Method::Series => {
            let table = compute_moments(spec, cfg.n, cfg.tol)?;
            Ok(Box::new(OwnedSeries { spec: spec.clone(), table, tol: cfg.tol }))
        }
        Method::ClosedForm => {
            if spec.b != 0.0 || spec.harmonic_coeffs.iter().any(|c| c.norm() != 0.0) {
                return Err(Error::MethodMismatch("the closed form needs B = 0 and g = 0".into()));
            }
            Ok(Box::new(ClosedFormKernel::new(spec.a)))
        }
        Method::Gram => {
            let opts = GramOptions { degree: cfg.gram_degree, r_quad: cfg.r_quad, ..Default::default() };
            Ok(Box::new(GramBasis::build(spec, &opts)?))
        }
    }
}

struct OwnedSeries {
    spec: WeightSpec,
    table: crate::MomentTable,
    tol: f64,
}

impl KernelSource for OwnedSeries {
    fn spec(&self) -> &WeightSpec {
        &self.spec
    }
    fn eval(&self, z: Complex64, w: Complex64) -> Result<crate::KernelValue> {
        SeriesKernel { spec: &self.spec, table: &self.table, tol: self.tol }.eval(z, w)
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (mut cfg, spec) = load(&cli)?;
    match cli.command {
        Command::CheckOp(a) => {
            if let Some(r) = a.r_max {
                cfg.op.r_max = r;
            }
            if let Some(n) = a.samples {
                cfg.op.n_samples = n;
            }
            cfg.validate()?;
            let spec = require(spec)?;
            let report = check_op_conditions(&spec, &OPCheckOptions::from(&cfg.op))?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            write_json(&cfg.output_dir, "op_report.json", &report)?;
            print_json(&report)
        }
        Command::Kernel(a) => {
            if let Some(m) = a.method {
                cfg.kernel.method = Some(m.into());
            }
            if let Some(n) = a.n {
                cfg.kernel.n = n;
            }
            if let Some(t) = a.tol {
                cfg.kernel.tol = t;
            }
            if let Some(d) = a.degree {
                cfg.kernel.gram_degree = d;
            }
            cfg.validate()?;
            let spec = require(spec)?;
            for p in [a.z, a.w] {
                if !(p.norm() < 1.0) {
                    return Err(Error::Domain(format!("{p} is not inside the unit disc")));
                }
            }
            let src = kernel_source(&spec, &cfg.kernel)?;
            print_json(&src.eval(a.z, a.w)?)
        }
        Command::Distance(a) => {
            if let Some(h) = a.h {
                cfg.metric.h = h;
            }
            if let Some(r) = a.rmax {
                cfg.metric.r_max = r;
            }
            cfg.validate()?;
            let spec = require(spec)?;
            let opts = GraphBuildOptions { r_max: cfg.metric.r_max, h: cfg.metric.h };
            for p in [a.z, a.w] {
                if !(p.norm() <= opts.r_max) {
                    return Err(Error::Domain(format!("|{p}| exceeds r_max = {}", opts.r_max)));
                }
            }
            let graph = MetricGraph::build(&spec, opts)?;
            let d = distance(&graph, &spec, a.z, a.w)?;
            print_json(&DistanceOutput { distance: d.distance, snap_error: d.snap_error, h: opts.h, r_max: opts.r_max })
        }
        Command::DecayReport(a) => {
            let d = &mut cfg.decay;
            if let Some(s) = a.strategy {
                d.strategy = match s {
                    StrategyArg::Rays => Strategy::Rays,
                    StrategyArg::Random => Strategy::Random,
                };
            }
            if let Some(c) = a.count {
                d.count = c;
            }
            if let Some(s) = a.seed {
                d.seed = s;
            }
            if let Some(b) = a.bin_width {
                d.bin_width = b;
            }
            if let Some(s) = a.slack {
                d.slack = s;
            }
            if let Some(h) = a.h {
                cfg.metric.h = h;
            }
            if let Some(r) = a.rmax {
                cfg.metric.r_max = r;
            }
            cfg.validate()?;
            let spec = require(spec)?;
            decay_report(&spec, &cfg)
        }
        Command::OracleTest(a) => {
            cfg.validate()?;
            let a_exp = match &spec {
                Some(s) if s.b == 0.0 && s.harmonic_coeffs.iter().all(|c| c.norm() == 0.0) => s.a,
                _ => 1.0,
            };
            let results = run_oracles(a_exp, cfg.metric.h, a.seed.unwrap_or(cfg.decay.seed))?;
            for r in &results {
                println!(
                    "{} {}: max rel err {:.3e} (tol {:.0e})",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.max_rel_err,
                    r.tolerance
                );
            }
            match results.iter().find(|r| !r.passed) {
                Some(r) => Err(Error::Accuracy { achieved: r.max_rel_err, requested: r.tolerance }),
                None => Ok(()),
            }
        }
    }
}

/// Runs the full decay pipeline and writes `decay_report.json`,
/// `decay_summary.json`, `samples.csv` and `decay.dat` into the output directory.
pub fn decay_report(spec: &WeightSpec, cfg: &RunConfig) -> Result<()> {
    let d = &cfg.decay;
    let src = kernel_source(spec, &cfg.kernel)?;
    let graph = MetricGraph::build(spec, GraphBuildOptions { r_max: cfg.metric.r_max, h: cfg.metric.h })?;
    let set = sample_pairs(&graph, src.as_ref(), d.strategy, d.count, d.seed)?;
    let report = fit_decay(&set.pairs, d.bin_width, SlackPolicy::ErrorMultiple(d.slack))?;
    let (comparison, comparison_error) = match compare_bounds(&report, &set.pairs, &d.k_list) {
        Ok(t) => (t, None),
        Err(e @ Error::InsufficientRange(_)) => (Vec::new(), Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let near_diagonal = near_diagonal_check(src.as_ref(), d.alpha, 200, d.seed)?;
    let mut mean_value_max_ratio: f64 = 0.0;
    for p in set.pairs.iter().step_by((set.pairs.len() / 20).max(1)).take(20) {
        match mean_value_check(src.as_ref(), p.z, p.w, d.beta, 16) {
            Ok(r) => mean_value_max_ratio = mean_value_max_ratio.max(r),
            Err(Error::Domain(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let summary = DecaySummary {
        spec: spec.clone(),
        samples: set.pairs.len(),
        excluded: set.excluded,
        comparison,
        comparison_error,
        near_diagonal,
        mean_value_max_ratio,
    };
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    write_samples_csv(&dir.join("samples.csv"), &set.pairs)?;
    write_plot_data(&dir.join("decay.dat"), &set.pairs)?;
    write_json(dir, "decay_summary.json", &summary)?;
    write_json(dir, "decay_report.json", &report)?;
    print_json(&report)
}
