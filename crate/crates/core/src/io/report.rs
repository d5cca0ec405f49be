use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{Mode, RawConfig};
use crate::Error;

pub const TOOL_NAME: &str = "scpw";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the report, trace and table formats.
pub const FORMAT_VERSION: u32 = 1;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub rng: String,
    pub started_unix: f64,
    pub finished_unix: f64,
}

/// Everything needed to reproduce a run: the resolved config (also as TOML
/// text), the results block and the files written next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub tool_version: String,
    pub format_version: u32,
    pub mode: Mode,
    pub config: RawConfig,
    pub config_toml: String,
    pub results: Value,
    pub files: Vec<String>,
    pub provenance: Provenance,
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Convergence { .. } => EXIT_CONVERGENCE,
        _ => EXIT_DATA,
    }
}

fn kind(code: i32) -> &'static str {
    match code {
        EXIT_CONFIG => "config",
        EXIT_CONVERGENCE => "convergence",
        _ => "data",
    }
}

/// Machine-readable error block, `{"error": {...}}`.
pub fn error_report(err: &Error, code: i32) -> Value {
    let mut body = json!({
        "kind": kind(code),
        "exit_code": code,
        "message": err.to_string(),
    });
    match err {
        Error::Config(fields) => body["fields"] = json!(fields),
        Error::TraceFormat { path, line, .. } => {
            body["path"] = json!(path);
            body["line"] = json!(line);
        }
        Error::Convergence { iterations, best } => {
            body["iterations"] = json!(iterations);
            body["best_params"] = json!(best.params);
            body["best_cost"] = json!(best.cost);
        }
        _ => {}
    }
    json!({ "tool": TOOL_NAME, "tool_version": TOOL_VERSION, "error": body })
}
