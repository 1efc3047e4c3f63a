use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use phibench_cli::config::{Command, RunConfig};
use phibench_cli::{execute, overall_status};

/// Numerical checks for spherical functions on SL(n, R).
///
/// Either name a subcommand (run with its default settings) or pass a
/// configuration file. Exit status: 0 all checks passed, 1 bad input,
/// 2 a check failed, 3 a quadrature missed its error budget.
#[derive(Debug, Parser)]
#[command(name = "phibench", version)]
struct Args {
    /// Subcommand to run with default settings, e.g. `all` or `npp-scan`.
    #[arg(conflicts_with = "config")]
    command: Option<String>,

    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Report directory; overrides the `out` key.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, value_name = "N", env = "PHIBENCH_THREADS")]
    threads: Option<usize>,

    /// Random seed (decimal or 0x-prefixed hex); overrides the `seed` key.
    #[arg(long, value_name = "S")]
    seed: Option<String>,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("phibench: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let mut cfg = match (&args.command, &args.config) {
        (Some(name), None) => match name.parse::<Command>() {
            Ok(c) => RunConfig::defaults_for(c),
            Err(e) => return fail(e),
        },
        (None, Some(path)) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return fail(format!("{}: {e}", path.display())),
            };
            match RunConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => return fail(format!("{}: {e}", path.display())),
            }
        }
        _ => return fail("give a subcommand or --config PATH (see --help)"),
    };
    if let Some(s) = &args.seed {
        if let Err(e) = cfg.set("seed", s) {
            return fail(e);
        }
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(o) = &args.out {
        cfg.out = o.display().to_string();
    }
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            return fail(e);
        }
    }

    let out = PathBuf::from(&cfg.out);
    let result = execute(&cfg, &out, &mut |o, took| {
        print!("{}", o.render());
        if !took.is_zero() {
            println!("  ({:.1} s)", took.as_secs_f64());
        }
    });
    match result {
        Ok(outcomes) => {
            let status = overall_status(&outcomes);
            println!("reports in {}", out.display());
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("phibench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
