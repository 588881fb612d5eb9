use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pevp_energy::harness::{
    self, emit, run_experiment, ExperimentConfig, OutputFormat, PairSelection,
};
use pevp_energy::oracles::{
    mc_density_at_zero, mc_det_sq, mc_det_sq_log_det, mc_energy, mc_first_term, mc_log_det,
    mc_radial_law, quad_kac_rice_second_term, MCEstimate,
};
use pevp_energy::pevp::EnsembleParams;
use pevp_energy::sampling::TrialStreams;
use pevp_energy::theory::expected_three_terms;

#[derive(Parser)]
#[command(
    name = "pevp-energy",
    about = "Monte Carlo experiments on the logarithmic energy of random matrix-polynomial root ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the energy campaign over divisor pairs of N and emit reports.
    Run {
        #[arg(long)]
        n: u64,
        /// "all" or explicit pairs like "1x12,3x4"
        #[arg(long, default_value = "all")]
        pairs: String,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Violin histogram bins per pair
        #[arg(long, default_value_t = 60)]
        bins: usize,
        /// Worker threads (default: all cores); the payload does not depend
        /// on this
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the closed-form energy table for divisor pairs of N.
    Theory {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value = "all")]
        pairs: String,
    },
    /// Check one identity against its closed form and report pass/fail.
    Verify {
        #[arg(long, value_enum)]
        check: CheckArg,
        #[arg(long)]
        r: u64,
        #[arg(long, default_value_t = 1)]
        d: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disk radius for the density check
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Entry variance for the density check
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Logdet,
    Detsqlog,
    Detsq,
    Density,
    Radial,
    Firstterm,
    Kacrice,
    Energy,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run {
            n,
            pairs,
            trials,
            seed,
            out,
            format,
            bins,
            workers,
        } => {
            let cfg = ExperimentConfig {
                n,
                pairs: PairSelection::parse(&pairs).map_err(|e| e.to_string())?,
                trials,
                master_seed: seed,
                violin_bins: bins,
                output_path: out,
                format: match format {
                    FormatArg::Csv => OutputFormat::Csv,
                    FormatArg::Json => OutputFormat::Json,
                },
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.unwrap_or(0))
                .build()
                .map_err(|e| e.to_string())?;
            let reports = pool
                .install(|| run_experiment(&cfg))
                .map_err(|e| e.to_string())?;
            let files = emit(&reports, &cfg).map_err(|e| e.to_string())?;
            println!("wrote {}", files.main.display());
            if let Some(violin) = files.violin {
                println!("wrote {}", violin.display());
            }
            for report in &reports {
                println!(
                    "d={} r={} trials={} degenerate={} mean={:.6} theory={:.6} z={:+.3}",
                    report.params.d(),
                    report.params.r(),
                    report.trials_completed,
                    report.trials_degenerate,
                    report.empirical_mean,
                    report.theory_s2,
                    report.z_score
                );
            }
            Ok(true)
        }
        Command::Theory { n, pairs } => {
            let selection = PairSelection::parse(&pairs).map_err(|e| e.to_string())?;
            let table = harness::theory_table(n, &selection).map_err(|e| e.to_string())?;
            print!("{table}");
            Ok(true)
        }
        Command::Verify {
            check,
            r,
            d,
            trials,
            seed,
            eps,
            sigma2,
        } => run_verify(check, r, d, trials, seed, eps, sigma2),
    }
}

fn print_estimate(name: &str, estimate: &MCEstimate, z_limit: f64) -> bool {
    let passed = estimate.passes(z_limit);
    println!(
        "check={name} trials={} mean={:.10e} stderr={:.4e} target={:.10e} z={:+.4} {}",
        estimate.trials,
        estimate.mean,
        estimate.stderr,
        estimate.target,
        estimate.z_score,
        if passed { "PASS" } else { "FAIL" }
    );
    passed
}

fn run_verify(
    check: CheckArg,
    r: u64,
    d: u64,
    trials: u64,
    seed: u64,
    eps: f64,
    sigma2: f64,
) -> Result<bool, String> {
    let streams = TrialStreams::new(seed);
    let z_limit = 5.0;
    match check {
        CheckArg::Logdet => {
            let run = mc_log_det(r, trials, &streams).map_err(|e| e.to_string())?;
            if run.excluded > 0 {
                println!("excluded {} underflow samples", run.excluded);
            }
            Ok(print_estimate("logdet", &run.estimate, z_limit))
        }
        CheckArg::Detsqlog => {
            let (run, diag) = mc_det_sq_log_det(r, trials, &streams).map_err(|e| e.to_string())?;
            println!(
                "tail: max|sample|={:.4e} excess_kurtosis={:.2}",
                diag.max_abs_sample, diag.excess_kurtosis
            );
            Ok(print_estimate("detsqlog", &run.estimate, z_limit))
        }
        CheckArg::Detsq => {
            let run = mc_det_sq(r, trials, &streams).map_err(|e| e.to_string())?;
            Ok(print_estimate("detsq", &run.estimate, z_limit))
        }
        CheckArg::Density => {
            let run =
                mc_density_at_zero(r, sigma2, eps, trials, &streams).map_err(|e| e.to_string())?;
            println!(
                "hits={} hits_half={} richardson={:.10e}",
                run.hits, run.hits_half, run.richardson
            );
            Ok(print_estimate("density", &run.raw, z_limit))
        }
        CheckArg::Radial => {
            let params = EnsembleParams::new(d, r).map_err(|e| e.to_string())?;
            let run = mc_radial_law(params, 1.0, trials, &streams).map_err(|e| e.to_string())?;
            if run.trials_degenerate > 0 {
                println!("excluded {} degenerate trials", run.trials_degenerate);
            }
            Ok(print_estimate("radial", &run.estimate, z_limit))
        }
        CheckArg::Firstterm => {
            let params = EnsembleParams::new(d, r).map_err(|e| e.to_string())?;
            let run = mc_first_term(params, trials, &streams).map_err(|e| e.to_string())?;
            Ok(print_estimate("firstterm", &run.estimate, z_limit))
        }
        CheckArg::Kacrice => {
            let params = EnsembleParams::new(d, r).map_err(|e| e.to_string())?;
            let quad = quad_kac_rice_second_term(params).map_err(|e| e.to_string())?;
            let (_, closed, _) = expected_three_terms(params);
            let rel = (quad - closed).abs() / closed.abs().max(1e-300);
            let passed = rel <= 1e-8;
            println!(
                "check=kacrice d={d} r={r} quadrature={quad:.12e} closed={closed:.12e} rel_err={rel:.3e} {}",
                if passed { "PASS" } else { "FAIL" }
            );
            Ok(passed)
        }
        CheckArg::Energy => {
            let params = EnsembleParams::new(d, r).map_err(|e| e.to_string())?;
            let run = mc_energy(params, trials, &streams).map_err(|e| e.to_string())?;
            if run.trials_degenerate + run.trials_coincident > 0 {
                println!(
                    "excluded degenerate={} coincident={}",
                    run.trials_degenerate, run.trials_coincident
                );
            }
            println!(
                "decomposition max relative gap: {:.3e}",
                run.decomposition_max_rel_err
            );
            Ok(print_estimate("energy", &run.estimate, z_limit))
        }
    }
}
