//! Monte Carlo harness: comparison tables and rate experiments.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{run_estimator, EstimatorOptions};
use crate::fourier::{grid_distance_sq, is_power_of_two};
use crate::meyer::MeyerWindow;
use crate::noise::check_alpha;
use crate::signals::{DatasetTemplate, ExperimentConfig, TestSignal};
use crate::thresholds::{Smoothing, ThresholdMethod};

/// Execution settings that must not change results.
#[derive(Debug, Clone, Copy, Default)]
pub struct BenchOptions {
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
    pub estimator: EstimatorOptions,
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub mse: f64,
    pub fine_level: i64,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: ThresholdMethod,
    pub smoothing: String,
    pub smoothing_value: f64,
    pub mean_mse: f64,
    /// Sample standard deviation over `√M`.
    pub se: f64,
    /// Mode of the fine level, ties resolved towards the coarser level.
    pub typical_j1: i64,
    pub j1_counts: BTreeMap<i64, usize>,
    pub mean_kept: f64,
    pub min_kept: usize,
    pub max_kept: usize,
}

impl MethodSummary {
    /// Short label such as `iid`, `lrd(sqrtalpha)`.
    pub fn label(&self) -> String {
        match self.method {
            ThresholdMethod::Iid => "iid".to_string(),
            ThresholdMethod::Lrd => format!("lrd({})", self.smoothing),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub config: ExperimentConfig,
    pub replications: usize,
    pub methods: Vec<MethodSummary>,
}

impl BenchResult {
    /// Index of the method with the smallest mean MSE (first on ties).
    pub fn winner(&self) -> usize {
        let mut best = 0;
        for (i, m) in self.methods.iter().enumerate() {
            if m.mean_mse < self.methods[best].mean_mse {
                best = i;
            }
        }
        best
    }
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(format!("cannot build thread pool: {e}"))))?;
    Ok(pool.install(job))
}

fn summarize(method: ThresholdMethod, smoothing: Smoothing, alpha: f64, outcomes: &[MethodOutcome]) -> MethodSummary {
    let m = outcomes.len() as f64;
    let mean = outcomes.iter().map(|o| o.mse).sum::<f64>() / m;
    let se = if outcomes.len() > 1 {
        let var = outcomes.iter().map(|o| (o.mse - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    let mut j1_counts = BTreeMap::new();
    for o in outcomes {
        *j1_counts.entry(o.fine_level).or_insert(0) += 1;
    }
    let typical_j1 = modal_level(&j1_counts);
    MethodSummary {
        method,
        smoothing: smoothing.label(),
        smoothing_value: smoothing.resolve(alpha),
        mean_mse: mean,
        se,
        typical_j1,
        j1_counts,
        mean_kept: outcomes.iter().map(|o| o.kept as f64).sum::<f64>() / m,
        min_kept: outcomes.iter().map(|o| o.kept).min().unwrap_or(0),
        max_kept: outcomes.iter().map(|o| o.kept).max().unwrap_or(0),
    }
}

/// Most frequent level; the coarser one wins ties.
pub fn modal_level(counts: &BTreeMap<i64, usize>) -> i64 {
    let mut best = (0usize, 0i64);
    for (&level, &count) in counts {
        if count > best.0 {
            best = (count, level);
        }
    }
    best.1
}

/// Runs every configured method on replications `0..M` and reduces the
/// outcomes in replication order.
pub fn run_benchmark(config: &ExperimentConfig, options: &BenchOptions) -> Result<BenchResult> {
    let template = DatasetTemplate::new(config)?;
    let outcomes = replicate(config, &template, options, None)?;
    Ok(reduce(config, &outcomes))
}

fn replicate(
    config: &ExperimentConfig,
    template: &DatasetTemplate,
    options: &BenchOptions,
    sigma: Option<f64>,
) -> Result<Vec<Vec<MethodOutcome>>> {
    let window = MeyerWindow::default();
    let estimator = options.estimator;
    let one = |index: usize| -> Result<Vec<MethodOutcome>> {
        let data = match sigma {
            Some(s) => template.realize_with_sigma(config, index as u64, s)?,
            None => template.realize(config, index as u64)?,
        };
        config
            .methods
            .iter()
            .zip(&config.smoothing)
            .map(|(&method, &smoothing)| {
                let report = run_estimator(&window, &data.problem, method, smoothing, &estimator)?;
                Ok(MethodOutcome {
                    mse: grid_distance_sq(&report.estimate, &data.truth),
                    fine_level: report.fine_level_used,
                    kept: report.kept_count.iter().sum(),
                })
            })
            .collect()
    };
    let results: Vec<Result<Vec<MethodOutcome>>> =
        with_pool(options.threads, || (0..config.replications).into_par_iter().map(one).collect())?;
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Replication {
                index,
                seed: config.seed,
                source: Box::new(e),
            })
        })
        .collect()
}

fn reduce(config: &ExperimentConfig, outcomes: &[Vec<MethodOutcome>]) -> BenchResult {
    let methods = config
        .methods
        .iter()
        .zip(&config.smoothing)
        .enumerate()
        .map(|(i, (&method, &smoothing))| {
            let column: Vec<MethodOutcome> = outcomes.iter().map(|o| o[i]).collect();
            summarize(method, smoothing, config.alpha, &column)
        })
        .collect();
    BenchResult {
        config: config.clone(),
        replications: outcomes.len(),
        methods,
    }
}

/// Grid of table cells sharing replication count and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub signals: Vec<TestSignal>,
    pub snrs: Vec<f64>,
    pub alphas: Vec<f64>,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

impl TableSpec {
    /// Both published tables at the given replication count.
    pub fn full(replications: usize, seed: u64) -> Self {
        TableSpec {
            signals: vec![TestSignal::Cusp, TestSignal::Lidar, TestSignal::Bumps, TestSignal::Doppler],
            snrs: vec![10.0, 20.0, 30.0],
            alphas: PUBLISHED_ALPHAS.to_vec(),
            n: 4096,
            replications,
            seed,
        }
    }

    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &signal in &self.signals {
            for &snr in &self.snrs {
                for &alpha in &self.alphas {
                    let mut c = ExperimentConfig::table_cell(signal, alpha, snr, self.replications, self.seed);
                    c.n = self.n;
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Runs each cell of a table; every cell uses the table's master seed.
pub fn run_table(spec: &TableSpec, options: &BenchOptions) -> Result<Vec<BenchResult>> {
    spec.cells().iter().map(|c| run_benchmark(c, options)).collect()
}

/// Text layout with one block per signal and SNR, one row per method and one
/// column per `α`. The best method in each column is starred.
pub fn render_table(results: &[BenchResult]) -> String {
    let mut blocks: Vec<(TestSignal, f64)> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    for r in results {
        let key = (r.config.signal, r.config.snr_db);
        if !blocks.contains(&key) {
            blocks.push(key);
        }
        if !alphas.contains(&r.config.alpha) {
            alphas.push(r.config.alpha);
        }
    }
    let mut out = String::new();
    out.push_str(&format!("{:<8} {:<6} {:<16}", "signal", "snr", "method"));
    for a in &alphas {
        out.push_str(&format!(" {:>16}", format!("alpha={a}")));
    }
    out.push('\n');
    for (signal, snr) in blocks {
        let row_cells: Vec<Option<&BenchResult>> = alphas
            .iter()
            .map(|a| {
                results
                    .iter()
                    .find(|r| r.config.signal == signal && r.config.snr_db == snr && r.config.alpha == *a)
            })
            .collect();
        let n_methods = row_cells.iter().flatten().map(|r| r.methods.len()).max().unwrap_or(0);
        for m in 0..n_methods {
            let label = row_cells
                .iter()
                .flatten()
                .find_map(|r| r.methods.get(m).map(|s| s.label()))
                .unwrap_or_default();
            let (sig, snr_txt) = if m == 0 {
                (signal.name().to_string(), format!("{snr}dB"))
            } else {
                (String::new(), String::new())
            };
            out.push_str(&format!("{sig:<8} {snr_txt:<6} {label:<16}"));
            for cell in &row_cells {
                let text = match cell.and_then(|r| r.methods.get(m).map(|s| (r, s))) {
                    Some((r, s)) => {
                        let star = if r.winner() == m { "*" } else { " " };
                        format!("{:.4}{star}({})", s.mean_mse, s.typical_j1)
                    }
                    None => "-".to_string(),
                };
                out.push_str(&format!(" {text:>16}"));
            }
            out.push('\n');
        }
    }
    out
}

/// `α` columns of the published tables.
pub const PUBLISHED_ALPHAS: [f64; 5] = [1.0, 0.8, 0.6, 0.4, 0.2];

/// One published block: three method rows (i.i.d., `ξ=√α`, `ξ=√(2α)`) by
/// five `α` columns, with the bold (best) method per column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedBlock {
    pub signal: TestSignal,
    pub snr_db: f64,
    pub mse: [[f64; 5]; 3],
    pub levels: [[i64; 5]; 3],
    pub bold: [usize; 5],
}

macro_rules! block {
    ($sig:ident, $snr:expr, [$($m0:expr),*], [$($l0:expr),*], [$($m1:expr),*], [$($l1:expr),*], [$($m2:expr),*], [$($l2:expr),*], [$($b:expr),*]) => {
        PublishedBlock {
            signal: TestSignal::$sig,
            snr_db: $snr,
            mse: [[$($m0),*], [$($m1),*], [$($m2),*]],
            levels: [[$($l0),*], [$($l1),*], [$($l2),*]],
            bold: [$($b),*],
        }
    };
}

/// Published mean MSE values and typical fine levels (n = 4096, M = 1024).
pub const PUBLISHED_BLOCKS: [PublishedBlock; 12] = [
    block!(Cusp, 10.0,
        [0.0056, 0.0089, 0.0557, 0.2525, 0.6633], [3, 3, 4, 4, 4],
        [0.0056, 0.0091, 0.0238, 0.0728, 0.2235], [3, 3, 3, 3, 3],
        [0.0056, 0.0091, 0.0223, 0.0606, 0.1895], [3, 3, 3, 3, 3],
        [1, 0, 2, 2, 2]),
    block!(Cusp, 20.0,
        [0.0035, 0.0039, 0.0148, 0.0650, 0.1683], [5, 5, 5, 5, 5],
        [0.0030, 0.0037, 0.0070, 0.0099, 0.0243], [5, 4, 4, 3, 3],
        [0.0039, 0.0042, 0.0054, 0.0084, 0.0206], [5, 4, 4, 3, 3],
        [1, 1, 2, 2, 2]),
    block!(Cusp, 30.0,
        [0.0013, 0.0014, 0.0036, 0.0148, 0.0392], [6, 6, 6, 6, 6],
        [0.0011, 0.0014, 0.0025, 0.0059, 0.0069], [6, 5, 5, 5, 4],
        [0.0015, 0.0016, 0.0020, 0.0034, 0.0055], [6, 5, 5, 5, 4],
        [1, 1, 2, 2, 2]),
    block!(Lidar, 10.0,
        [0.0430, 0.0418, 0.0517, 0.0972, 0.4365], [4, 4, 4, 4, 5],
        [0.0363, 0.0403, 0.0512, 0.0636, 0.0993], [4, 4, 3, 3, 3],
        [0.0473, 0.0488, 0.0548, 0.0633, 0.0913], [4, 4, 3, 3, 3],
        [1, 1, 1, 2, 2]),
    block!(Lidar, 20.0,
        [0.0128, 0.0133, 0.0167, 0.0483, 0.1100], [5, 5, 5, 6, 6],
        [0.0103, 0.0122, 0.0248, 0.0299, 0.0393], [5, 5, 4, 4, 4],
        [0.0151, 0.0164, 0.0262, 0.0305, 0.0382], [5, 5, 4, 4, 4],
        [1, 1, 0, 1, 2]),
    block!(Lidar, 30.0,
        [0.0049, 0.0049, 0.0060, 0.0111, 0.0230], [6, 7, 7, 7, 7],
        [0.0041, 0.0044, 0.0057, 0.0088, 0.0103], [6, 6, 6, 6, 5],
        [0.0053, 0.0054, 0.0059, 0.0073, 0.0096], [6, 6, 6, 6, 5],
        [1, 1, 1, 2, 2]),
    block!(Bumps, 10.0,
        [0.7657, 0.7717, 0.7904, 0.8277, 0.9475], [4, 4, 4, 4, 5],
        [0.7615, 0.7705, 0.9376, 0.9511, 0.9831], [4, 4, 3, 3, 3],
        [0.7687, 0.7768, 0.9380, 0.9517, 0.9818], [4, 4, 3, 3, 3],
        [1, 1, 0, 0, 0]),
    block!(Bumps, 20.0,
        [0.5384, 0.5405, 0.2905, 0.2702, 0.3165], [5, 5, 6, 6, 6],
        [0.5374, 0.5405, 0.5469, 0.7583, 0.7661], [5, 5, 5, 4, 4],
        [0.5391, 0.5417, 0.5473, 0.7583, 0.7660], [5, 5, 5, 4, 4],
        [1, 0, 0, 0, 0]),
    block!(Bumps, 30.0,
        [0.0793, 0.0807, 0.0838, 0.0897, 0.0988], [7, 7, 7, 7, 7],
        [0.0777, 0.2074, 0.2093, 0.21246, 0.3141], [7, 6, 6, 6, 6],
        [0.0811, 0.2080, 0.2094, 0.2118, 0.3133], [7, 6, 6, 6, 6],
        [1, 0, 0, 0, 0]),
    block!(Doppler, 10.0,
        [0.0278, 0.0293, 0.0369, 0.0631, 0.1199], [5, 5, 5, 5, 5],
        [0.0263, 0.0472, 0.0570, 0.0689, 0.1203], [5, 4, 4, 4, 3],
        [0.0292, 0.0481, 0.0568, 0.0666, 0.1196], [5, 4, 4, 4, 3],
        [1, 0, 0, 0, 2]),
    block!(Doppler, 20.0,
        [0.0103, 0.0106, 0.0122, 0.0183, 0.0455], [6, 6, 6, 6, 7],
        [0.0096, 0.0104, 0.0200, 0.0257, 0.0304], [6, 6, 5, 5, 5],
        [0.0107, 0.0110, 0.0197, 0.0248, 0.0284], [6, 6, 5, 5, 5],
        [1, 1, 0, 0, 2]),
    block!(Doppler, 30.0,
        [0.0029, 0.0030, 0.0032, 0.0043, 0.0075], [7, 7, 7, 8, 8],
        [0.0027, 0.0029, 0.0036, 0.0055, 0.0094], [7, 7, 7, 7, 7],
        [0.0031, 0.0031, 0.0033, 0.0039, 0.0066], [7, 7, 7, 7, 7],
        [1, 1, 0, 2, 2]),
];

/// Published block for a signal and SNR.
pub fn published_block(signal: TestSignal, snr_db: f64) -> Option<&'static PublishedBlock> {
    PUBLISHED_BLOCKS.iter().find(|b| b.signal == signal && b.snr_db == snr_db)
}

fn alpha_column(alpha: f64) -> Option<usize> {
    PUBLISHED_ALPHAS.iter().position(|a| (a - alpha).abs() < 1e-12)
}

/// Our result next to the published cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    pub signal: TestSignal,
    pub snr_db: f64,
    pub alpha: f64,
    pub published_mse: [f64; 3],
    pub published_levels: [i64; 3],
    pub published_winner: usize,
    pub mse: Vec<f64>,
    pub levels: Vec<i64>,
    pub winner: usize,
}

impl CellComparison {
    /// Same best method, counting published ties as agreement.
    pub fn winner_agrees(&self) -> bool {
        let best = self.published_mse[self.published_winner];
        self.winner == self.published_winner || self.published_mse.get(self.winner) == Some(&best)
    }

    /// Same family (i.i.d. versus LRD) wins.
    pub fn family_agrees(&self) -> bool {
        (self.winner == 0) == (self.published_winner == 0) || self.winner_agrees()
    }

    /// Every method within a factor `f` of the published value.
    pub fn within_factor(&self, f: f64) -> bool {
        self.mse
            .iter()
            .zip(&self.published_mse)
            .all(|(ours, theirs)| ours / theirs <= f && theirs / ours <= f)
    }

    /// Every typical level within `tol` of the published value.
    pub fn levels_within(&self, tol: i64) -> bool {
        self.levels
            .iter()
            .zip(&self.published_levels)
            .all(|(ours, theirs)| (ours - theirs).abs() <= tol)
    }
}

/// Pairs results in the default three-method layout with published cells.
/// Results outside the published grid are skipped.
pub fn compare_with_published(results: &[BenchResult]) -> Vec<CellComparison> {
    results
        .iter()
        .filter(|r| r.methods.len() == 3)
        .filter_map(|r| {
            let block = published_block(r.config.signal, r.config.snr_db)?;
            let col = alpha_column(r.config.alpha)?;
            Some(CellComparison {
                signal: r.config.signal,
                snr_db: r.config.snr_db,
                alpha: r.config.alpha,
                published_mse: [block.mse[0][col], block.mse[1][col], block.mse[2][col]],
                published_levels: [block.levels[0][col], block.levels[1][col], block.levels[2][col]],
                published_winner: block.bold[col],
                mse: r.methods.iter().map(|m| m.mean_mse).collect(),
                levels: r.methods.iter().map(|m| m.typical_j1).collect(),
                winner: r.winner(),
            })
        })
        .collect()
}

/// Convergence exponent `ρ` for `f` in a Besov ball `B^s_{π,r}` and loss
/// `L_p`: the dense branch `αsp/(2s+2ν+α)` when `s ≥ (2ν+α)(p/(2π) − 1/2)`
/// and the sparse branch `αp(s − 1/π + 1/p)/(2s + 2ν + α − 2/π)` otherwise.
pub fn rate_exponent(s: f64, p: f64, nu: f64, alpha: f64, pi: f64) -> Result<f64> {
    check_alpha(alpha).map_err(|_| Error::Inadmissible(format!("alpha = {alpha} must lie in (0, 1]")))?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Inadmissible(format!("s = {s} must be positive")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Inadmissible(format!("p = {p} must be at least 1")));
    }
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::Inadmissible(format!("nu = {nu} must be nonnegative")));
    }
    if !(pi >= 1.0 && pi.is_finite()) {
        return Err(Error::Inadmissible(format!("pi = {pi} must be at least 1")));
    }
    let d = 2.0 * nu + alpha;
    if s >= d * (p / (2.0 * pi) - 0.5) {
        return Ok(alpha * s * p / (2.0 * s + d));
    }
    if p <= 2.0 / d {
        return Err(Error::Inadmissible(format!(
            "sparse phase requires p > 2/(2nu + alpha) = {}",
            2.0 / d
        )));
    }
    if s <= 1.0 / pi - d / 2.0 {
        return Err(Error::Inadmissible(format!(
            "sparse phase requires s > 1/pi - nu - alpha/2 = {}",
            1.0 / pi - d / 2.0
        )));
    }
    Ok(alpha * p * (s - 1.0 / pi + 1.0 / p) / (2.0 * s + d - 2.0 / pi))
}

/// Settings of a rate-of-convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub signal: TestSignal,
    pub method: ThresholdMethod,
    pub smoothing: Smoothing,
    pub alpha: f64,
    pub nu: f64,
    pub snr_db: f64,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    /// Drop the noise entirely; only truncation and bias remain.
    #[serde(default)]
    pub noiseless: bool,
    /// Besov smoothness `(s, π)` of the signal, used for `ρ` with `p = 2`.
    #[serde(default)]
    pub smoothness: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub mean_mse: f64,
    pub se: f64,
    pub typical_j1: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub config: RateConfig,
    pub points: Vec<RatePoint>,
    /// Least-squares slope of `log MSE` against `log(n / log n)`.
    pub slope: f64,
    pub intercept: f64,
    pub rho: Option<f64>,
}

/// Ordinary least squares `y ≈ a + b x`, returning `(b, a)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn run_rate_experiment(config: &RateConfig, options: &BenchOptions) -> Result<RateResult> {
    if config.n_grid.len() < 4 {
        return Err(Error::InvalidParameter {
            name: "n_grid",
            value: config.n_grid.len() as f64,
            constraint: "needs at least 4 grid sizes",
        });
    }
    if let Some(&n) = config.n_grid.iter().find(|n| !is_power_of_two(**n)) {
        return Err(Error::NotPowerOfTwo { n });
    }
    let mut points = Vec::new();
    for &n in &config.n_grid {
        let cell = ExperimentConfig {
            signal: config.signal,
            n,
            alpha: config.alpha,
            nu: config.nu,
            snr_db: config.snr_db,
            methods: vec![config.method],
            smoothing: vec![config.smoothing],
            replications: config.replications,
            seed: config.seed,
            noise: Default::default(),
        };
        let template = DatasetTemplate::new(&cell)?;
        let sigma = config.noiseless.then_some(0.0);
        let outcomes = replicate(&cell, &template, options, sigma)?;
        let summary = &reduce(&cell, &outcomes).methods[0];
        points.push(RatePoint {
            n,
            mean_mse: summary.mean_mse,
            se: summary.se,
            typical_j1: summary.typical_j1,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64 / (p.n as f64).ln()).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.mean_mse.ln()).collect();
    let (slope, intercept) = least_squares(&x, &y);
    let rho = match config.smoothness {
        Some((s, pi)) => Some(rate_exponent(s, 2.0, config.nu, config.alpha, pi)?),
        None => None,
    };
    Ok(RateResult {
        config: config.clone(),
        points,
        slope,
        intercept,
        rho,
    })
}
