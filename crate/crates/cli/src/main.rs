//! `lrdwaved`: simulate, estimate and benchmark wavelet deconvolution under
//! long-range dependent noise.
//!
//! Exit codes: 0 success, 2 usage, 3 validation, 4 runtime.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use lrdwaved::bench::{
    compare_with_published, render_table, run_benchmark, run_rate_experiment, run_table, BenchOptions, RateConfig,
    TableSpec, PUBLISHED_ALPHAS,
};
use lrdwaved::covariance::KernelSpec;
use lrdwaved::estimator::{estimate_sigma, default_sigma_level, run_estimator, DeconvolutionProblem, EstimatorOptions};
use lrdwaved::finescale::{estimate_fine_level, KernelChannel};
use lrdwaved::io::{self, DatasetRecord};
use lrdwaved::meyer::MeyerWindow;
use lrdwaved::noise::{NoiseKind, NoiseModel};
use lrdwaved::signals::{gamma_kernel, DatasetTemplate, ExperimentConfig, TestSignal, GAMMA_SCALE, GAMMA_SHAPE};
use lrdwaved::thresholds::{Smoothing, ThresholdMethod};
use lrdwaved::{Error, SampledSignal};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "lrdwaved", version, about = "Wavelet deconvolution with long-range dependent noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one synthetic dataset.
    Simulate(SimulateArgs),
    /// Estimate a signal from a dataset file.
    Estimate(EstimateArgs),
    /// Monte Carlo comparison of the i.i.d. and LRD methods.
    Benchmark(BenchmarkArgs),
    /// Both comparison tables next to the published values.
    Table(TableArgs),
    /// Rate-of-convergence experiment over a grid of sample sizes.
    Rates(RatesArgs),
    /// Sample standardised long-memory noise.
    Noise(NoiseArgs),
    /// Fourier stopping-rule diagnostics for a dataset.
    StoppingTrace(TraceArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed (falls back to LRDWAVED_SEED).
    #[arg(long, env = "LRDWAVED_SEED", default_value_t = 1)]
    seed: u64,
    /// Output directory, created if absent.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment configuration; replaces the signal flags.
    #[arg(long, conflicts_with_all = ["signal", "alpha", "snr"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    signal: Option<String>,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, required_unless_present = "config")]
    alpha: Option<f64>,
    /// Gamma shape of the blur (its degree of ill-posedness).
    #[arg(long, default_value_t = GAMMA_SHAPE)]
    nu: f64,
    #[arg(long, required_unless_present = "config")]
    snr: Option<f64>,
    #[arg(long, default_value = "farima")]
    noise: String,
    /// Replication index selecting the noise stream.
    #[arg(long, default_value_t = 0)]
    replication: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct KernelArgs {
    /// Gamma shape of the blur.
    #[arg(long, conflicts_with = "kernel_file")]
    nu: Option<f64>,
    /// Kernel table with columns ell,re,im.
    #[arg(long)]
    kernel_file: Option<PathBuf>,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, default_value = "lrd")]
    method: String,
    /// LRD smoothing: sqrtalpha, sqrt2alpha or a number.
    #[arg(long)]
    xi: Option<String>,
    /// i.i.d. smoothing.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 3)]
    j0: i64,
    /// Fixed fine level instead of the stopping rule.
    #[arg(long)]
    j1: Option<i64>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Dataset CSV (columns t,y and optionally f_true,blurred).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    method: MethodArgs,
    /// Use the exact kernel coefficients in the stopping rule.
    #[arg(long)]
    exact_kernel: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, conflicts_with_all = ["signal", "alpha_grid", "snr"])]
    config: Option<PathBuf>,
    #[arg(long, default_value = "cusp")]
    signal: String,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = GAMMA_SHAPE)]
    nu: f64,
    #[arg(long, default_value_t = 20.0)]
    snr: f64,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',', default_values_t = PUBLISHED_ALPHAS)]
    alpha_grid: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    replications: usize,
    /// Use the published replication count (1024).
    #[arg(long, conflicts_with = "replications")]
    full: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec!["cusp".to_string(), "lidar".into(), "bumps".into(), "doppler".into()])]
    signals: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 20.0, 30.0])]
    snr_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = PUBLISHED_ALPHAS)]
    alpha_grid: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    replications: usize,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long, default_value = "cusp")]
    signal: String,
    #[arg(long, default_value = "lrd")]
    method: String,
    #[arg(long)]
    xi: Option<String>,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = GAMMA_SHAPE)]
    nu: f64,
    #[arg(long, default_value_t = 30.0)]
    snr: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1024usize, 2048, 4096, 8192, 16384])]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 32)]
    replications: usize,
    #[arg(long)]
    noiseless: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value = "farima")]
    kind: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, default_value = "lrd")]
    method: String,
    #[arg(long, default_value_t = 3)]
    j0: i64,
    #[arg(long)]
    exact_kernel: bool,
    #[command(flatten)]
    common: Common,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_validation() { 3 } else { 4 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 4, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Table(a) => cmd_table(a),
        Command::Rates(a) => cmd_rates(a),
        Command::Noise(a) => cmd_noise(a),
        Command::StoppingTrace(a) => cmd_trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            for line in f.message.lines() {
                eprintln!("error: {line}");
            }
            ExitCode::from(f.code)
        }
    }
}

/// Provenance shared by every output of one invocation.
struct Provenance {
    hash: String,
    seed: u64,
}

impl Provenance {
    fn new(config: &serde_json::Value, seed: u64) -> Self {
        let digest = Sha256::digest(config.to_string().as_bytes());
        let hash = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Provenance { hash, seed }
    }

    fn comment(&self) -> Vec<String> {
        vec![format!("lrdwaved {VERSION} config={} seed={}", self.hash, self.seed)]
    }

    fn json(&self) -> serde_json::Value {
        json!({ "tool": "lrdwaved", "version": VERSION, "config_hash": self.hash, "seed": self.seed })
    }
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: 4,
        message: format!("cannot create output directory {}: {e}", dir.display()),
    })
}

fn write_file(path: &Path, contents: &[u8]) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure {
        code: 4,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 4,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn json_document(provenance: &Provenance, body: serde_json::Value) -> Result<Vec<u8>, Failure> {
    let doc = json!({ "provenance": provenance.json(), "result": body });
    Ok(io::to_json(&doc)?.into_bytes())
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure { code: 4, message: e.to_string() })
}

fn parse_signal(s: &str) -> Result<TestSignal, Failure> {
    Ok(s.parse::<TestSignal>()?)
}

fn parse_method(s: &str) -> Result<ThresholdMethod, Failure> {
    Ok(s.parse::<ThresholdMethod>()?)
}

fn smoothing_for(method: ThresholdMethod, xi: Option<&str>, eta: Option<f64>) -> Result<Smoothing, Failure> {
    match method {
        ThresholdMethod::Iid => match eta {
            Some(v) if v > 0.0 && v.is_finite() => Ok(Smoothing::Value(v)),
            Some(v) => Err(invalid(format!("invalid eta = {v}: must be positive"))),
            None => Ok(Smoothing::SQRT_6),
        },
        ThresholdMethod::Lrd => match xi {
            Some(s) => Ok(s.parse::<Smoothing>()?),
            None => Ok(Smoothing::SQRT_ALPHA),
        },
    }
}

fn load_kernel(args: &KernelArgs, n: usize) -> Result<KernelSpec, Failure> {
    match &args.kernel_file {
        Some(path) => {
            let text = read_file(path)?;
            let kernel = io::read_kernel_table(text.as_bytes(), args.nu)?;
            if kernel.n() != n {
                return Err(Error::KernelLength { got: kernel.n(), expected: n }.into());
            }
            Ok(kernel)
        }
        None => Ok(gamma_kernel(n, args.nu.unwrap_or(GAMMA_SHAPE), GAMMA_SCALE)?),
    }
}

fn load_dataset(path: &Path) -> Result<DatasetRecord, Failure> {
    let text = read_file(path)?;
    Ok(io::read_dataset_csv(text.as_bytes())?)
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let config = match &a.config {
        Some(path) => {
            let mut c = io::read_config_json(&read_file(path)?)?;
            c.seed = a.common.seed;
            c
        }
        None => {
            let mut c = ExperimentConfig::table_cell(
                parse_signal(a.signal.as_deref().unwrap_or_default())?,
                a.alpha.unwrap_or(1.0),
                a.snr.unwrap_or(20.0),
                1,
                a.common.seed,
            );
            c.n = a.n;
            c.nu = a.nu;
            c.noise = a.noise.parse::<NoiseKind>()?;
            c
        }
    };
    config.validate()?;
    let provenance = Provenance::new(&json!({ "command": "simulate", "config": to_value(&config)?, "replication": a.replication }), config.seed);
    let template = DatasetTemplate::new(&config)?;
    let data = template.realize(&config, a.replication)?;
    let record = DatasetRecord {
        t: data.truth.grid(),
        y: data.problem.observations().to_vec(),
        f_true: Some(data.truth.to_vec()),
        blurred: Some(data.blurred.to_vec()),
    };
    prepare_out(&a.common.out)?;
    let mut csv = Vec::new();
    io::write_dataset_csv(&mut csv, &record, &provenance.comment())?;
    write_file(&a.common.out.join("dataset.csv"), &csv)?;
    let body = json!({ "config": to_value(&config)?, "replication": a.replication, "sigma": data.sigma, "noise_sd": data.noise_sd });
    write_file(&a.common.out.join("config.json"), &json_document(&provenance, body)?)?;
    println!("wrote {}", a.common.out.join("dataset.csv").display());
    Ok(())
}

fn build_problem(record: &DatasetRecord, kernel: KernelSpec, alpha: f64, exact: bool, seed: u64) -> Result<DeconvolutionProblem, Failure> {
    let problem = DeconvolutionProblem::new(SampledSignal::new(record.y.clone()), kernel, alpha)?;
    Ok(if exact {
        problem
    } else {
        problem.with_kernel_channel(KernelChannel::Synthetic { seed, noise_level: None })
    })
}

fn cmd_estimate(a: EstimateArgs) -> CmdResult {
    let record = load_dataset(&a.input)?;
    let n = record.len();
    let kernel = load_kernel(&a.kernel, n)?;
    let method = parse_method(&a.method.method)?;
    let smoothing = smoothing_for(method, a.method.xi.as_deref(), a.method.eta)?;
    let problem = build_problem(&record, kernel, a.alpha, a.exact_kernel, a.common.seed)?;
    let options = EstimatorOptions {
        j0: a.method.j0,
        j1_override: a.method.j1,
        ..Default::default()
    };
    let window = MeyerWindow::default();
    let report = run_estimator(&window, &problem, method, smoothing, &options)?;

    let settings = json!({
        "command": "estimate",
        "input": a.input.display().to_string(),
        "alpha": a.alpha,
        "method": to_value(&method)?,
        "smoothing": smoothing.label(),
        "j0": a.method.j0,
        "j1": a.method.j1,
        "nu": a.kernel.nu,
        "kernel_file": a.kernel.kernel_file.as_ref().map(|p| p.display().to_string()),
        "exact_kernel": a.exact_kernel,
    });
    let provenance = Provenance::new(&settings, a.common.seed);
    prepare_out(&a.common.out)?;
    let mut csv = Vec::new();
    io::write_estimate_csv(
        &mut csv,
        &record.t,
        &report.estimate,
        record.f_true.as_deref(),
        Some(&record.y),
        &provenance.comment(),
    )?;
    write_file(&a.common.out.join("estimate.csv"), &csv)?;

    let mse = record
        .f_true
        .as_ref()
        .map(|f| lrdwaved::fourier::grid_distance_sq(&report.estimate, f));
    let body = json!({
        "settings": settings,
        "method": to_value(&report.method)?,
        "smoothing": report.policy.smoothing,
        "sigma_hat": report.sigma_hat,
        "j0": report.policy.j0,
        "fine_level_used": report.fine_level_used,
        "fine_level": report.fine_level.as_ref().map(|f| json!({
            "level": f.level,
            "m": f.stopping.m,
            "j_hat": f.stopping.j_hat,
            "saturated": f.stopping.saturated,
            "clamped_low": f.clamped_low,
            "clamped_high": f.clamped_high,
        })),
        "lambdas": report.policy.lambdas,
        "kept_count": report.kept_count,
        "mse": mse,
    });
    write_file(&a.common.out.join("report.json"), &json_document(&provenance, body)?)?;
    println!(
        "method={} sigma_hat={:.6} j1={} kept={}",
        a.method.method,
        report.sigma_hat,
        report.fine_level_used,
        report.kept_count.iter().sum::<usize>()
    );
    Ok(())
}

fn cmd_benchmark(a: BenchmarkArgs) -> CmdResult {
    let replications = if a.full { 1024 } else { a.replications };
    let configs: Vec<ExperimentConfig> = match &a.config {
        Some(path) => {
            let mut c = io::read_config_json(&read_file(path)?)?;
            c.seed = a.common.seed;
            vec![c]
        }
        None => {
            let signal = parse_signal(&a.signal)?;
            if a.alpha_grid.is_empty() {
                return Err(invalid("alpha grid is empty"));
            }
            a.alpha_grid
                .iter()
                .map(|&alpha| {
                    let mut c = ExperimentConfig::table_cell(signal, alpha, a.snr, replications, a.common.seed);
                    c.n = a.n;
                    c.nu = a.nu;
                    c
                })
                .collect()
        }
    };
    for c in &configs {
        c.validate()?;
    }
    let provenance = Provenance::new(&json!({ "command": "benchmark", "configs": to_value(&configs)? }), a.common.seed);
    let options = BenchOptions { threads: a.threads, ..Default::default() };
    let results = configs
        .iter()
        .map(|c| run_benchmark(c, &options))
        .collect::<Result<Vec<_>, _>>()?;
    write_bench_outputs(&a.common.out, &provenance, &results, "bench")?;
    print!("{}", render_table(&results));
    Ok(())
}

fn write_bench_outputs(
    out: &Path,
    provenance: &Provenance,
    results: &[lrdwaved::bench::BenchResult],
    stem: &str,
) -> CmdResult {
    prepare_out(out)?;
    let mut csv = Vec::new();
    io::write_bench_csv(&mut csv, results, &provenance.comment())?;
    write_file(&out.join(format!("{stem}.csv")), &csv)?;
    let body = json!({ "results": to_value(&results)?, "comparison": to_value(&compare_with_published(results))? });
    write_file(&out.join(format!("{stem}.json")), &json_document(provenance, body)?)?;
    let mut text = provenance.comment().iter().map(|c| format!("# {c}\n")).collect::<String>();
    text.push_str(&render_table(results));
    write_file(&out.join(format!("{stem}.txt")), text.as_bytes())?;
    Ok(())
}

fn cmd_table(a: TableArgs) -> CmdResult {
    let signals = a.signals.iter().map(|s| parse_signal(s)).collect::<Result<Vec<_>, _>>()?;
    let spec = TableSpec {
        signals,
        snrs: a.snr_grid.clone(),
        alphas: a.alpha_grid.clone(),
        n: 4096,
        replications: a.replications,
        seed: a.common.seed,
    };
    let provenance = Provenance::new(&json!({ "command": "table", "spec": to_value(&spec)? }), a.common.seed);
    let options = BenchOptions { threads: a.threads, ..Default::default() };
    let results = run_table(&spec, &options)?;
    write_bench_outputs(&a.common.out, &provenance, &results, "table")?;
    print!("{}", render_table(&results));
    let cmp = compare_with_published(&results);
    if !cmp.is_empty() {
        let exact = cmp.iter().filter(|c| c.winner_agrees()).count();
        let family = cmp.iter().filter(|c| c.family_agrees()).count();
        println!(
            "published winner reproduced in {exact}/{} cells (i.i.d. versus LRD: {family}/{})",
            cmp.len(),
            cmp.len()
        );
    }
    Ok(())
}

fn cmd_rates(a: RatesArgs) -> CmdResult {
    let signal = parse_signal(&a.signal)?;
    let method = parse_method(&a.method)?;
    let smoothing = smoothing_for(method, a.xi.as_deref(), None)?;
    let config = RateConfig {
        signal,
        method,
        smoothing,
        alpha: a.alpha,
        nu: a.nu,
        snr_db: a.snr,
        n_grid: a.n_grid.clone(),
        replications: a.replications,
        seed: a.common.seed,
        noiseless: a.noiseless,
        smoothness: (signal == TestSignal::Cusp).then_some((1.0, 2.0)),
    };
    let provenance = Provenance::new(&json!({ "command": "rates", "config": to_value(&config)? }), a.common.seed);
    let options = BenchOptions { threads: a.threads, ..Default::default() };
    let result = run_rate_experiment(&config, &options)?;
    prepare_out(&a.common.out)?;
    let mut csv = Vec::new();
    io::write_rate_csv(&mut csv, &result, &provenance.comment())?;
    write_file(&a.common.out.join("rates.csv"), &csv)?;
    write_file(&a.common.out.join("rates.json"), &json_document(&provenance, to_value(&result)?)?)?;
    for p in &result.points {
        println!("n={:<6} mse={:.6} se={:.6} j1={}", p.n, p.mean_mse, p.se, p.typical_j1);
    }
    match result.rho {
        Some(rho) => println!("slope={:.4} (theory -{rho:.4})", result.slope),
        None => println!("slope={:.4}", result.slope),
    }
    Ok(())
}

fn cmd_noise(a: NoiseArgs) -> CmdResult {
    let kind = a.kind.parse::<NoiseKind>()?;
    let model = NoiseModel::new(a.alpha, kind, a.common.seed)?;
    let values = model.sample(a.n)?;
    let provenance = Provenance::new(
        &json!({ "command": "noise", "n": a.n, "alpha": a.alpha, "kind": to_value(&kind)? }),
        a.common.seed,
    );
    prepare_out(&a.common.out)?;
    let mut csv = Vec::new();
    io::write_noise_csv(&mut csv, &values, &provenance.comment())?;
    write_file(&a.common.out.join("noise.csv"), &csv)?;
    println!("wrote {} samples", values.len());
    Ok(())
}

fn cmd_trace(a: TraceArgs) -> CmdResult {
    let record = load_dataset(&a.input)?;
    let n = record.len();
    let kernel = load_kernel(&a.kernel, n)?;
    let method = parse_method(&a.method)?;
    let problem = build_problem(&record, kernel, a.alpha, a.exact_kernel, a.common.seed)?;
    let window = MeyerWindow::default();
    let sigma_hat = estimate_sigma(&window, &record.y, default_sigma_level(n)?)?;
    let rule_alpha = match method {
        ThresholdMethod::Iid => 1.0,
        ThresholdMethod::Lrd => a.alpha,
    };
    let fine = estimate_fine_level(&problem, rule_alpha, sigma_hat, a.j0)?;
    let settings = json!({
        "command": "stopping-trace",
        "input": a.input.display().to_string(),
        "alpha": a.alpha,
        "method": to_value(&method)?,
        "j0": a.j0,
        "exact_kernel": a.exact_kernel,
    });
    let provenance = Provenance::new(&settings, a.common.seed);
    prepare_out(&a.common.out)?;
    let mut csv = Vec::new();
    io::write_trace_csv(&mut csv, &fine.stopping.trace, &provenance.comment())?;
    write_file(&a.common.out.join("trace.csv"), &csv)?;
    println!(
        "M={} j_hat={} level={} saturated={}",
        fine.stopping.m, fine.stopping.j_hat, fine.level, fine.stopping.saturated
    );
    Ok(())
}
