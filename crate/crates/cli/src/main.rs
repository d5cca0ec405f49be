use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use scpw_core::io::{
    error_report, exit_code, parse_config, run, Mode, RunConfig, EXIT_CONFIG, FORMAT_VERSION,
    TOOL_NAME, TOOL_VERSION,
};
use scpw_core::parallel::Execution;
use scpw_core::Error;

/// Kinetic-inductance aware CPW resonator design and S21 analysis.
#[derive(Debug, Parser)]
#[command(name = "scpw", disable_version_flag = true)]
struct Args {
    /// design, sweep, mc, synth, fit or tls
    #[arg(value_parser = parse_mode, required_unless_present = "version")]
    mode: Option<Mode>,

    /// TOML run configuration
    #[arg(long, required_unless_present = "version")]
    config: Option<PathBuf>,

    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,

    /// RNG seed (overrides seed)
    #[arg(long)]
    seed: Option<u64>,

    /// Monte-Carlo trials (overrides trials)
    #[arg(long)]
    trials: Option<usize>,

    /// Trace CSV files for fit and tls (override fit.traces)
    #[arg(long = "trace", num_args = 1..)]
    traces: Vec<PathBuf>,

    /// Run on the calling thread only
    #[arg(long)]
    serial: bool,

    /// Print tool and format versions
    #[arg(long)]
    version: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn load(args: &Args) -> Result<RunConfig, Error> {
    let path = args.config.as_ref().expect("clap enforces --config");
    let cfg = parse_config(path)?;
    if args.out.is_none() && args.seed.is_none() && args.trials.is_none() && args.traces.is_empty()
    {
        return Ok(cfg);
    }
    let mut raw = cfg.raw;
    if let Some(dir) = &args.out {
        raw.output.dir = dir.clone();
    }
    if let Some(seed) = args.seed {
        raw.seed = seed;
    }
    if let Some(trials) = args.trials {
        raw.trials = trials;
    }
    if !args.traces.is_empty() {
        raw.fit.traces = args
            .traces
            .iter()
            .map(|p| std::path::absolute(p).unwrap_or_else(|_| p.clone()))
            .collect();
    }
    RunConfig::from_raw(raw)
}

fn fail(err: &Error, code: i32, out_dir: Option<&PathBuf>) -> ExitCode {
    let block = error_report(err, code);
    eprintln!("{block:#}");
    if let Some(dir) = out_dir {
        let _ =
            scpw_core::io::write_atomic(&dir.join("error.json"), format!("{block:#}").as_bytes());
    }
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.version {
        println!("{TOOL_NAME} {TOOL_VERSION} (format {FORMAT_VERSION})");
        return ExitCode::SUCCESS;
    }
    let mode = args.mode.expect("clap enforces the mode");
    let cfg = match load(&args) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e, EXIT_CONFIG, args.out.as_ref()),
    };
    let exec = if args.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    match run(mode, &cfg, exec) {
        Ok(report) => {
            println!(
                "{mode}: wrote {} files to {}",
                report.files.len(),
                cfg.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, exit_code(&e), Some(&cfg.output_dir)),
    }
}
