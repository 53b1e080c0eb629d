//! Runs a registered experiment from configuration text and writes the
//! table as CSV to standard output.

use nbiot_rach::cli::{parse_config_str, run_experiment, write_csv, ExperimentName, ExperimentSpec};

const CONFIG: &str = "
# barring sweep at a 0 dB threshold
gamma_th = 0 dB
lambda_d = 10 per_km2
modes = analytic
sweep_grid = 0.2, 0.4, 0.6, 0.8, 1.0
";

fn main() -> nbiot_rach::Result<()> {
    let base = parse_config_str(CONFIG, "example")?;
    let spec = ExperimentSpec::named(ExperimentName::AcbSweep, base)?;
    let result = run_experiment(&spec)?;
    write_csv(&result.rows, std::io::stdout().lock()).map_err(|e| nbiot_rach::Error::Config(e.to_string()))?;
    Ok(())
}
