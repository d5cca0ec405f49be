//! S21 trace files: header `freq_hz,re_s21,im_s21` with an optional fourth
//! column `power_dbm` that is constant over the file.

use std::path::Path;

use num_complex::Complex64;

use super::atomic::write_atomic;
use crate::fit::S21Trace;
use crate::{Error, Result};

const HEADER: [&str; 3] = ["freq_hz", "re_s21", "im_s21"];
const POWER: &str = "power_dbm";

pub fn read_trace(path: &Path) -> Result<S21Trace> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_trace_from(file, path)
}

/// Parses trace CSV from any reader; `path` is used only in error messages.
pub fn read_trace_from<R: std::io::Read>(reader: R, path: &Path) -> Result<S21Trace> {
    let fail = |line: u64, message: String| Error::TraceFormat {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| fail(1, e.to_string()))?,
        None => return Err(fail(1, "empty file".into())),
    };
    let names: Vec<&str> = header.iter().collect();
    let with_power = if names == HEADER {
        false
    } else if names.len() == 4 && names[..3] == HEADER && names[3] == POWER {
        true
    } else {
        return Err(fail(
            1,
            format!(
                "header must be `freq_hz,re_s21,im_s21[,power_dbm]`, found `{}`",
                names.join(",")
            ),
        ));
    };
    let columns = if with_power { 4 } else { 3 };

    let mut freq = Vec::new();
    let mut s21 = Vec::new();
    let mut power: Option<f64> = None;
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            fail(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != columns {
            return Err(fail(
                line,
                format!("expected {columns} columns, found {}", rec.len()),
            ));
        }
        let mut vals = [0.0; 4];
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| fail(line, format!("column {} is not a number: `{field}`", k + 1)))?;
            if !v.is_finite() {
                return Err(fail(line, format!("column {} is not finite", k + 1)));
            }
            vals[k] = v;
        }
        if let Some(&prev) = freq.last() {
            if !(vals[0] > prev) {
                return Err(fail(line, "frequency is not strictly increasing".into()));
            }
        }
        if with_power {
            match power {
                None => power = Some(vals[3]),
                Some(p) if p != vals[3] => {
                    return Err(fail(
                        line,
                        "power_dbm must be constant within a file".into(),
                    ))
                }
                Some(_) => {}
            }
        }
        freq.push(vals[0]);
        s21.push(Complex64::new(vals[1], vals[2]));
    }
    if freq.is_empty() {
        return Err(fail(2, "no data rows".into()));
    }
    S21Trace::new(freq, s21, power)
}

pub fn trace_to_csv(trace: &S21Trace) -> String {
    let mut out = String::with_capacity(64 * trace.len());
    out.push_str(&HEADER.join(","));
    if trace.power_dbm.is_some() {
        out.push(',');
        out.push_str(POWER);
    }
    out.push('\n');
    for (f, s) in trace.freq().iter().zip(&trace.s21) {
        out.push_str(&format!("{f:?},{:?},{:?}", s.re, s.im));
        if let Some(p) = trace.power_dbm {
            out.push_str(&format!(",{p:?}"));
        }
        out.push('\n');
    }
    out
}

/// Writes the trace atomically with round-trip float precision.
pub fn write_trace(path: &Path, trace: &S21Trace) -> Result<()> {
    write_atomic(path, trace_to_csv(trace).as_bytes())
}
