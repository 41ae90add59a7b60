use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cgo_core::cli::{exit_code, run, EXIT_VALIDATION};
use cgo_core::config::{parse_config, RunConfig};
use clap::Parser;

/// Complex geometric optics experiments on a cylinder.
#[derive(Parser, Debug)]
#[command(name = "cgo", version)]
struct Args {
    /// eikonal, amplitude, cgo-residual, forward, carleman, identity,
    /// moments, radon, support or reconstruct. Falls back to `command` in
    /// the config file.
    command: Option<String>,
    /// TOML run configuration; all keys are optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides CGO_OUT_DIR and `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized commands; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION as u8 } else { 0 });
        }
    };
    let mut cfg = match &args.config {
        Some(p) => match parse_config(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_VALIDATION as u8);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = args
        .out
        .or_else(|| std::env::var_os("CGO_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| cfg.out_dir.clone());
    cfg.out_dir = out.clone();
    let Some(command) = args.command.or_else(|| cfg.command.clone()) else {
        eprintln!("error: no command given");
        return ExitCode::from(EXIT_VALIDATION as u8);
    };
    let result = run(&command, &cfg, &out);
    match &result {
        Ok(o) => {
            let mut out = std::io::stdout().lock();
            for r in &o.summary.rows {
                let line: Vec<String> = r.iter().map(|c| c.render()).collect();
                if writeln!(out, "{}", line.join("  ")).is_err() {
                    break;
                }
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
