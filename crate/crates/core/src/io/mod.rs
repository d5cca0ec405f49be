//! Configuration, trace files, reports and the mode runner.

mod atomic;
pub mod config;
mod report;
mod run;
mod trace_csv;

pub use atomic::{write_atomic, write_table};
pub use config::{parse_config, parse_config_str, FieldError, Mode, RawConfig, RunConfig};
pub use report::{
    error_report, exit_code, Provenance, Report, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_DATA,
    FORMAT_VERSION, TOOL_NAME, TOOL_VERSION,
};
pub use run::run;
pub use trace_csv::{read_trace, read_trace_from, trace_to_csv, write_trace};
