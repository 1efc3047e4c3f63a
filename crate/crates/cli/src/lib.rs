//! Batch driver for the phibench checks: configuration files, report
//! tables, the `phi` grid cache and one runner per subcommand.

pub mod cache;
pub mod commands;
pub mod config;
pub mod report;

use std::path::Path;
use std::time::{Duration, Instant};

pub use commands::{RunError, RunResult};
use config::{Command, RunConfig};
use report::{Check, Outcome, Status};

/// Runs `cfg`, writes its reports under `out` and returns the outcomes in
/// run order. For `all` the last outcome lists one check per sub-run.
/// `on_done` sees every outcome as soon as it is written.
pub fn execute(
    cfg: &RunConfig,
    out: &Path,
    on_done: &mut dyn FnMut(&Outcome, Duration),
) -> Result<Vec<Outcome>, RunError> {
    let cache_dir = out.join("cache");
    if cfg.command != Command::All {
        let start = Instant::now();
        let o = commands::run_single(cfg, &cache_dir)?;
        o.write(out)?;
        on_done(&o, start.elapsed());
        return Ok(vec![o]);
    }
    let mut outcomes = Vec::new();
    let mut suite = Outcome::new(Command::All);
    for (label, sub) in commands::suite_configs(cfg) {
        let start = Instant::now();
        let mut o = commands::run_single(&sub, &cache_dir)?;
        o.label = label;
        o.write(out)?;
        on_done(&o, start.elapsed());
        let status = o.status();
        suite.check(Check::new(
            o.label.clone(),
            "suite",
            status != Status::Failed,
            status == Status::Flagged,
            format!("{} checks", o.checks.len()),
        ));
        outcomes.push(o);
    }
    suite.write(out)?;
    on_done(&suite, Duration::ZERO);
    outcomes.push(suite);
    Ok(outcomes)
}

/// Worst status over `outcomes`.
pub fn overall_status(outcomes: &[Outcome]) -> Status {
    outcomes.iter().map(Outcome::status).max().unwrap_or(Status::Pass)
}
