//! Configuration files, the experiment registry and result output.

mod config;
mod experiment;
mod output;

pub use config::{parse_config, parse_config_str, Modes, RunConfig};
pub use experiment::{
    round_sig10, run_experiment, ExperimentName, ExperimentResult, ExperimentSpec, Report, ResultRow, Variant,
    SLOT_SWEEP,
};
pub use output::{format_number, read_json, write_csv, write_json, write_results, write_results_to, Format, CSV_HEADER};
