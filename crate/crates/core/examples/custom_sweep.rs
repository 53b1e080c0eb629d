//! A custom sweep over the uplink noise power, analytic and simulated,
//! written as JSON.

use nbiot_rach::cli::{parse_config_str, run_experiment, write_json, ExperimentName, ExperimentSpec};

const CONFIG: &str = "
experiment = custom
sweep_var = sigma2_dbm
sweep_grid = -135, -130, -125, -120
modes = analytic, sim
trials = 20
area = 500 km2
seed = 3
";

fn main() -> nbiot_rach::Result<()> {
    let base = parse_config_str(CONFIG, "example")?;
    let spec = ExperimentSpec::named(ExperimentName::Custom, base)?;
    let result = run_experiment(&spec)?;
    write_json(&result.rows, std::io::stdout().lock())
}
