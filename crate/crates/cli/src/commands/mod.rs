//! One function per subcommand. Each returns an [`Outcome`]; writing the
//! files is left to [`crate::execute`].

mod reps;
mod rms;
mod roots;
mod spherical;
mod suite;

use std::fmt;
use std::io;

use nalgebra::DVector;
use rand::Rng;

use phibench::groups::cartan_radius;
use phibench::quadrature::{chunk_rng, Rule};
use phibench::rootsys::RootSystem;
use phibench::Error;

use crate::cache::CacheError;
use crate::config::{Command, ConfigError, RunConfig};
use crate::report::{num, Outcome};

pub use suite::suite_configs;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Library(Error),
    Io(io::Error),
}

impl RunError {
    /// 1 for anything traceable to the input; 2 for the library's own
    /// consistency failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Library(Error::Calibration(_) | Error::HullDisagreement { .. }) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config: {e}"),
            RunError::Library(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Library(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<CacheError> for RunError {
    fn from(e: CacheError) -> Self {
        match e {
            CacheError::Io(e) => RunError::Io(e),
            other => RunError::Io(io::Error::new(io::ErrorKind::InvalidData, other.to_string())),
        }
    }
}

pub type RunResult = std::result::Result<Outcome, RunError>;

/// Runs one non-suite command. `cache_dir` is used by `phi-eval`.
pub fn run_single(cfg: &RunConfig, cache_dir: &std::path::Path) -> RunResult {
    use Command::*;
    match cfg.command {
        PhiEval => spherical::phi_eval(cfg, cache_dir),
        PhiConstRho => spherical::phi_const_rho(cfg),
        FunctionalEq => spherical::functional_eq(cfg),
        NppScan => spherical::npp_scan(cfg),
        Compare => spherical::compare(cfg),
        Hull => roots::hull(cfg),
        Hermitean => roots::hermitean(cfg),
        MinimalLambda => roots::minimal_lambda(cfg),
        CriticalQ => roots::critical_q(cfg),
        Rms => rms::rms(cfg),
        ConvSubmult => rms::conv_submult(cfg),
        NormLambda => rms::norm_lambda(cfg),
        StarNorm => rms::star_norm(cfg),
        Eigenfunction => rms::eigenfunction(cfg),
        RepUnitarity => reps::rep_unitarity(cfg),
        RepPhiLock => reps::rep_phi_lock(cfg),
        ThmBKfinite => reps::kfinite(cfg),
        ThmBRms => reps::rms_bound(cfg),
        All => Err(RunError::Config(ConfigError::BadValue {
            key: "command".into(),
            value: "all".into(),
            reason: "the suite is run through execute".into(),
        })),
    }
}

// Seed salts keep the random streams of different commands apart.
const SALT_POINTS: u64 = 0x9E37_79B9_7F4A_7C15;
const SALT_PARAMS: u64 = 0xC2B2_AE3D_27D4_EB4F;
const SALT_FUNCS: u64 = 0x1656_67B1_9E37_79F9;

fn point_rng(cfg: &RunConfig, i: usize) -> rand_chacha::ChaCha8Rng {
    chunk_rng(cfg.seed ^ SALT_POINTS, i as u64)
}

fn param_rng(cfg: &RunConfig, i: usize) -> rand_chacha::ChaCha8Rng {
    chunk_rng(cfg.seed ^ SALT_PARAMS, i as u64)
}

fn func_rng(cfg: &RunConfig, i: usize) -> rand_chacha::ChaCha8Rng {
    chunk_rng(cfg.seed ^ SALT_FUNCS, i as u64)
}

/// The root system of the group on which `phi` is evaluated. The abstract
/// types `A1`, `A2` are realised by `SL(2, R)` and `SL(3, R)`, which share
/// their frames.
fn group_system(cfg: &RunConfig) -> Result<RootSystem, RunError> {
    let rs = cfg.root_system()?;
    if rs.group_size().is_some() {
        return Ok(rs);
    }
    match rs.label() {
        "A1" | "A2" => Ok(RootSystem::build(&format!("sl({},R)", rs.rank() + 1))?),
        other => Err(Error::Unsupported {
            op: cfg.command.name(),
            what: format!("the abstract root system {other}; it has no group realisation here"),
        }
        .into()),
    }
}

/// Requires `SL(2, R)`.
fn sl2_system(cfg: &RunConfig) -> Result<RootSystem, RunError> {
    let rs = group_system(cfg)?;
    if rs.group_size() != Some(2) {
        return Err(ConfigError::BadValue {
            key: "group".into(),
            value: cfg.group.clone(),
            reason: format!("`{}` is implemented on sl(2,R) only", cfg.command),
        }
        .into());
    }
    Ok(rs)
}

fn coords_text(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

fn dual_text(rs: &RootSystem, v: &DVector<f64>) -> Result<String, RunError> {
    Ok(coords_text(&rs.dual_coords(v)?))
}

/// `n` equally spaced values on `[a, b]`; a single value sits at `b`.
fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![b],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn uniform_coords<R: Rng + ?Sized>(rng: &mut R, rank: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..rank).map(|_| rng.random_range(lo..hi)).collect()
}

fn radius_text(x: &phibench::groups::GroupElement) -> String {
    num(cartan_radius(x))
}

fn is_monte_carlo(cfg: &RunConfig) -> bool {
    matches!(cfg.quad().rule, Rule::MonteCarlo { .. })
}

fn need(cfg: &RunConfig, key: &'static str, value: usize) -> Result<(), RunError> {
    if value == 0 {
        return Err(ConfigError::BadValue {
            key: key.into(),
            value: "0".into(),
            reason: format!("`{}` needs at least one", cfg.command),
        }
        .into());
    }
    Ok(())
}
