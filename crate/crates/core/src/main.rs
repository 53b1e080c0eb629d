use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nbiot_rach::cli::{
    parse_config, run_experiment, write_results, write_results_to, ExperimentName, ExperimentSpec, Format, Modes,
    RunConfig,
};

/// Sweeps NB-IoT random access success probabilities, analytically and by
/// Monte Carlo simulation, and writes the table as CSV or JSON.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// Configuration file of `key = value [unit]` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig3_sinr_sweep, fig4_single_vs_three, fig5_density_sweep,
    /// fig6_timeseries, fig7_acb_sweep, fig8_bo_sweep or custom
    /// (short forms fig3 .. fig8 work too).
    #[arg(long, default_value = "fig3_sinr_sweep")]
    experiment: ExperimentName,
    /// analytic, sim or both.
    #[arg(long)]
    mode: Option<Modes>,
    /// Monte Carlo deployments per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Slots per run.
    #[arg(long)]
    slots: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> nbiot_rach::Result<usize> {
    let mut base = match &args.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = args.mode {
        base.modes = Some(m);
    }
    if let Some(t) = args.trials {
        base.trials = t;
    }
    if let Some(s) = args.seed {
        base.seed = s;
    }
    let mut spec = ExperimentSpec::named(args.experiment, base)?;
    if let Some(slots) = args.slots {
        spec = spec.with_slots(slots)?;
    }
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| nbiot_rach::Error::Config(format!("thread pool: {e}")))?;
    }
    let result = run_experiment(&spec)?;
    match &args.out {
        Some(path) => write_results(&result, args.format, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_results_to(&result, args.format, &mut lock, "<stdout>".as_ref())?;
            lock.flush().ok();
        }
    }
    Ok(result.failed_rows())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} rows failed; see the diag column");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
