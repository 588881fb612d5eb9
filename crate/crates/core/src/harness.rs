//! Experiment orchestration: divisor-pair enumeration, campaign execution
//! with per-trial substreams keyed by global trial index (so any worker
//! count emits identical bytes), least-squares slope fitting, and CSV/JSON
//! report emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::oracles::{mc_energy, EnergyRun, OracleError};
use crate::pevp::{EnsembleParams, PevpError};
use crate::sampling::TrialStreams;
use crate::theory::expected_energy;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("pair {d}x{r} does not multiply to N = {n}")]
    PairMismatch { d: u64, r: u64, n: u64 },
    #[error("cannot parse pair spec {0:?}; expected e.g. 2x6")]
    BadPairSpec(String),
    #[error("need at least 3 reports for a line fit, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Pevp(#[from] PevpError),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Which (d, r) factorizations of N a campaign covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSelection {
    AllDivisors,
    Explicit(Vec<(u64, u64)>),
}

impl PairSelection {
    /// Parses "all" or a comma-separated list like "2x6,3x4".
    pub fn parse(spec: &str) -> Result<Self, HarnessError> {
        if spec.trim() == "all" {
            return Ok(PairSelection::AllDivisors);
        }
        let mut pairs = Vec::new();
        for part in spec.split(',') {
            let part = part.trim();
            let (d, r) = part
                .split_once('x')
                .ok_or_else(|| HarnessError::BadPairSpec(part.to_string()))?;
            let d = d
                .parse::<u64>()
                .map_err(|_| HarnessError::BadPairSpec(part.to_string()))?;
            let r = r
                .parse::<u64>()
                .map_err(|_| HarnessError::BadPairSpec(part.to_string()))?;
            pairs.push((d, r));
        }
        if pairs.is_empty() {
            return Err(HarnessError::BadPairSpec(spec.to_string()));
        }
        Ok(PairSelection::Explicit(pairs))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: u64,
    pub pairs: PairSelection,
    pub trials: u64,
    pub master_seed: u64,
    pub violin_bins: usize,
    pub output_path: PathBuf,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    /// The campaign's pairs in ascending d, each validated against N.
    pub fn resolve_pairs(&self) -> Result<Vec<EnsembleParams>, HarnessError> {
        let raw: Vec<(u64, u64)> = match &self.pairs {
            PairSelection::AllDivisors => enumerate_divisor_pairs(self.n),
            PairSelection::Explicit(list) => {
                let mut list = list.clone();
                list.sort();
                list
            }
        };
        let mut out = Vec::with_capacity(raw.len());
        for (d, r) in raw {
            if d * r != self.n {
                return Err(HarnessError::PairMismatch { d, r, n: self.n });
            }
            out.push(EnsembleParams::new(d, r)?);
        }
        Ok(out)
    }
}

/// Per-pair campaign summary with the violin histogram of trial energies.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub params: EnsembleParams,
    pub trials_completed: u64,
    /// Trials excluded from statistics: near-singular leading blocks,
    /// eigensolver failures, or coincident projected points.
    pub trials_degenerate: u64,
    pub empirical_mean: f64,
    pub empirical_std: f64,
    pub stderr: f64,
    pub theory_s2: f64,
    pub difference: f64,
    pub z_score: f64,
    pub violin: Vec<(f64, u64)>,
}

/// All ordered factorizations N = d*r, ascending in d.
pub fn enumerate_divisor_pairs(n: u64) -> Vec<(u64, u64)> {
    (1..=n).filter(|d| n % d == 0).map(|d| (d, n / d)).collect()
}

fn histogram(values: &[f64], bins: usize) -> Vec<(f64, u64)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if max > min { (max - min) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = (((v - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (min + (k as f64 + 0.5) * width, c))
        .collect()
}

fn report_from_run(params: EnsembleParams, run: &EnergyRun, bins: usize) -> EnergyReport {
    let theory_s2 = expected_energy(params).s2_value;
    let difference = run.estimate.mean - theory_s2;
    EnergyReport {
        params,
        trials_completed: run.per_trial.len() as u64,
        trials_degenerate: run.trials_degenerate + run.trials_coincident,
        empirical_mean: run.estimate.mean,
        empirical_std: run.estimate.stderr * (run.per_trial.len() as f64).sqrt(),
        stderr: run.estimate.stderr,
        theory_s2,
        difference,
        z_score: difference / run.estimate.stderr,
        violin: histogram(&run.per_trial, bins),
    }
}

/// Runs the full campaign: for pair index p, trial t draws from
/// substream(master_seed, p*trials + t), so the streams depend only on the
/// configuration and the emitted payload is schedule-independent.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<EnergyReport>, HarnessError> {
    let pairs = cfg.resolve_pairs()?;
    let mut reports = Vec::with_capacity(pairs.len());
    for (pair_index, &params) in pairs.iter().enumerate() {
        let streams =
            TrialStreams::with_base(cfg.master_seed, pair_index as u64 * cfg.trials);
        let run = mc_energy(params, cfg.trials, &streams)?;
        reports.push(report_from_run(params, &run, cfg.violin_bins));
    }
    Ok(reports)
}

/// Ordinary least squares y = slope*x + intercept; returns
/// (slope, intercept, residual rms).
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64), HarnessError> {
    if xs.len() < 3 || xs.len() != ys.len() {
        return Err(HarnessError::TooFewPoints(xs.len().min(ys.len())));
    }
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

/// Least-squares line of the empirical means against d.
pub fn fit_linear_in_d(reports: &[EnergyReport]) -> Result<(f64, f64, f64), HarnessError> {
    let xs: Vec<f64> = reports.iter().map(|r| r.params.d() as f64).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.empirical_mean).collect();
    ols(&xs, &ys)
}

pub const CSV_HEADER: &str =
    "N,d,r,trials,degenerate,empirical_mean,empirical_std,stderr,theory_s2,difference,z_score";
pub const VIOLIN_CSV_HEADER: &str = "N,d,bin_center,count";

/// Floats are printed with 17 significant digits so emitted values survive a
/// parse round-trip bit for bit.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct ReportRow {
    #[serde(rename = "N")]
    n: u64,
    d: u64,
    r: u64,
    trials: u64,
    degenerate: u64,
    empirical_mean: f64,
    empirical_std: f64,
    stderr: f64,
    theory_s2: f64,
    difference: f64,
    z_score: f64,
}

#[derive(Serialize)]
struct ViolinRow {
    #[serde(rename = "N")]
    n: u64,
    d: u64,
    bin_center: f64,
    count: u64,
}

#[derive(Serialize)]
struct JsonPayload {
    reports: Vec<ReportRow>,
    violin: Vec<ViolinRow>,
}

fn report_row(report: &EnergyReport) -> ReportRow {
    ReportRow {
        n: report.params.n(),
        d: report.params.d(),
        r: report.params.r(),
        trials: report.trials_completed,
        degenerate: report.trials_degenerate,
        empirical_mean: report.empirical_mean,
        empirical_std: report.empirical_std,
        stderr: report.stderr,
        theory_s2: report.theory_s2,
        difference: report.difference,
        z_score: report.z_score,
    }
}

fn violin_rows(reports: &[EnergyReport]) -> Vec<ViolinRow> {
    let mut rows = Vec::new();
    for report in reports {
        for &(bin_center, count) in &report.violin {
            rows.push(ViolinRow {
                n: report.params.n(),
                d: report.params.d(),
                bin_center,
                count,
            });
        }
    }
    rows
}

/// Paths written by [`emit`]: the main table and, for CSV, the sibling
/// violin table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub main: PathBuf,
    pub violin: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Emits the campaign reports. CSV produces the main table plus
/// `<output>.violin.csv`; JSON mirrors both tables in one file with the
/// same field names.
pub fn emit(reports: &[EnergyReport], cfg: &ExperimentConfig) -> Result<EmittedFiles, HarnessError> {
    match cfg.format {
        OutputFormat::Csv => {
            let mut main = String::new();
            main.push_str(CSV_HEADER);
            main.push('\n');
            for report in reports {
                let row = report_row(report);
                main.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    row.n,
                    row.d,
                    row.r,
                    row.trials,
                    row.degenerate,
                    fmt_f64(row.empirical_mean),
                    fmt_f64(row.empirical_std),
                    fmt_f64(row.stderr),
                    fmt_f64(row.theory_s2),
                    fmt_f64(row.difference),
                    fmt_f64(row.z_score),
                ));
            }
            write_file(&cfg.output_path, main.as_bytes())?;

            let mut violin = String::new();
            violin.push_str(VIOLIN_CSV_HEADER);
            violin.push('\n');
            for row in violin_rows(reports) {
                violin.push_str(&format!(
                    "{},{},{},{}\n",
                    row.n,
                    row.d,
                    fmt_f64(row.bin_center),
                    row.count
                ));
            }
            let mut violin_path = cfg.output_path.clone().into_os_string();
            violin_path.push(".violin.csv");
            let violin_path = PathBuf::from(violin_path);
            write_file(&violin_path, violin.as_bytes())?;
            Ok(EmittedFiles {
                main: cfg.output_path.clone(),
                violin: Some(violin_path),
            })
        }
        OutputFormat::Json => {
            let payload = JsonPayload {
                reports: reports.iter().map(report_row).collect(),
                violin: violin_rows(reports),
            };
            let bytes = to_json_17_digits(&payload)?;
            write_file(&cfg.output_path, &bytes)?;
            Ok(EmittedFiles {
                main: cfg.output_path.clone(),
                violin: None,
            })
        }
    }
}

/// JSON serialization with every float printed at 17 significant digits.
fn to_json_17_digits<T: Serialize>(value: &T) -> Result<Vec<u8>, serde_json::Error> {
    struct SciFormatter;
    impl serde_json::ser::Formatter for SciFormatter {
        fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
        where
            W: ?Sized + std::io::Write,
        {
            write!(writer, "{value:.16e}")
        }
    }
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// The theory table: the run schema minus its empirical columns.
pub const THEORY_CSV_HEADER: &str = "N,d,r,theory_s2";

pub fn theory_table(n: u64, pairs: &PairSelection) -> Result<String, HarnessError> {
    let cfg = ExperimentConfig {
        n,
        pairs: pairs.clone(),
        trials: 1,
        master_seed: 0,
        violin_bins: 0,
        output_path: PathBuf::new(),
        format: OutputFormat::Csv,
    };
    let mut out = String::new();
    out.push_str(THEORY_CSV_HEADER);
    out.push('\n');
    for params in cfg.resolve_pairs()? {
        let t = expected_energy(params);
        out.push_str(&format!(
            "{},{},{},{}\n",
            params.n(),
            params.d(),
            params.r(),
            fmt_f64(t.s2_value)
        ));
    }
    Ok(out)
}
