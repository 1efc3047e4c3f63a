//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key except
//! `command` is optional; missing keys take the defaults of the command,
//! which reproduce the acceptance settings. Unknown and repeated keys are
//! rejected. [`RunConfig::to_text`] writes every key, and parsing its output
//! gives back an equal config.

use std::fmt;
use std::str::FromStr;

use phibench::quadrature::{QuadratureSpec, Rule, DEFAULT_SEED};
use phibench::rootsys::{RootSystem, SpectralParam};
use phibench::spherical::GridSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Syntax { line: usize, text: String },
    UnknownKey(String),
    DuplicateKey(String),
    MissingKey(&'static str),
    BadValue { key: String, value: String, reason: String },
}

impl ConfigError {
    /// The offending key, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey(k) | ConfigError::DuplicateKey(k) => Some(k),
            ConfigError::MissingKey(k) => Some(k),
            ConfigError::BadValue { key, .. } => Some(key),
            ConfigError::Syntax { .. } => None,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, text } => write!(f, "line {line}: expected `key = value`, got `{text}`"),
            ConfigError::UnknownKey(k) => write!(f, "unknown key `{k}`"),
            ConfigError::DuplicateKey(k) => write!(f, "key `{k}` given twice"),
            ConfigError::MissingKey(k) => write!(f, "missing key `{k}`"),
            ConfigError::BadValue { key, value, reason } => write!(f, "key `{key}`: bad value `{value}`: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

macro_rules! commands {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Command { $($variant),* }

        impl Command {
            pub const ALL: &'static [Command] = &[$(Command::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Command::$variant => $name),* }
            }
        }

        impl FromStr for Command {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s { $($name => Ok(Command::$variant),)* _ => Err(format!("unknown command `{s}`")) }
            }
        }
    };
}

commands! {
    PhiEval => "phi-eval",
    PhiConstRho => "phi-const-rho",
    FunctionalEq => "functional-eq",
    NppScan => "npp-scan",
    Compare => "compare",
    Hull => "hull",
    Hermitean => "hermitean",
    MinimalLambda => "minimal-lambda",
    CriticalQ => "critical-q",
    Rms => "rms",
    ConvSubmult => "conv-submult",
    NormLambda => "norm-lambda",
    StarNorm => "star-norm",
    Eigenfunction => "eigenfunction",
    RepUnitarity => "rep-unitarity",
    RepPhiLock => "rep-phi-lock",
    ThmBKfinite => "thmB-kfinite",
    ThmBRms => "thmB-rms",
    All => "all",
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A real parameter in dual coordinates, or a multiple of `rho`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coords {
    Dual(Vec<f64>),
    Rho(f64),
}

impl Coords {
    pub fn zero() -> Self {
        Coords::Rho(0.0)
    }

    pub fn resolve(&self, rs: &RootSystem) -> Result<nalgebra::DVector<f64>, String> {
        match self {
            Coords::Rho(t) => Ok(rs.rho() * *t),
            Coords::Dual(c) => {
                if c.len() != rs.rank() {
                    return Err(format!("expected {} coordinates, got {}", rs.rank(), c.len()));
                }
                rs.from_dual_coords(c).map_err(|e| e.to_string())
            }
        }
    }
}

impl fmt::Display for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coords::Rho(t) => write!(f, "rho*{t}"),
            Coords::Dual(c) => write!(f, "{}", join(c)),
        }
    }
}

impl FromStr for Coords {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "rho" {
            return Ok(Coords::Rho(1.0));
        }
        if let Some(t) = s.strip_prefix("rho*") {
            return parse_f64(t).map(Coords::Rho);
        }
        parse_list(s).map(Coords::Dual)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    GaussCircle,
    ProductGauss,
    MonteCarlo,
}

impl RuleKind {
    fn name(self) -> &'static str {
        match self {
            RuleKind::GaussCircle => "gauss-circle",
            RuleKind::ProductGauss => "product-gauss",
            RuleKind::MonteCarlo => "monte-carlo",
        }
    }
}

impl FromStr for RuleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gauss-circle" => Ok(RuleKind::GaussCircle),
            "product-gauss" => Ok(RuleKind::ProductGauss),
            "monte-carlo" => Ok(RuleKind::MonteCarlo),
            _ => Err("expected gauss-circle, product-gauss or monte-carlo".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Root system or group identifier, e.g. `sl(2,R)` or `A2`.
    pub group: String,
    pub lambda: Coords,
    pub lambda_im: Coords,
    pub mu: Coords,
    /// Principal-series parameter.
    pub nu: f64,
    pub rule: RuleKind,
    pub order: usize,
    pub orders: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub truncation_radius: f64,
    pub tolerance: f64,
    pub grid_radius: f64,
    pub grid_r_min: f64,
    pub grid_radii: usize,
    pub grid_rays: usize,
    pub grid_wall_offset: f64,
    pub grid_origin: bool,
    /// Number of random points or parameter sets, per command.
    pub points: usize,
    /// Number of random pairs, per command; zero means use the explicit
    /// parameters.
    pub pairs: usize,
    pub n_max: usize,
    /// Rotations per factor of the `K x K` grid in the K-finite check.
    pub k_grid: usize,
    /// Worker threads; zero leaves the choice to the environment.
    pub threads: usize,
    /// Reuse cached `phi` grids under `<out>/cache`.
    pub cache: bool,
    pub out: String,
}

const KEYS: &[&str] = &[
    "command",
    "group",
    "lambda",
    "lambda_im",
    "mu",
    "nu",
    "rule",
    "order",
    "orders",
    "samples",
    "seed",
    "truncation_radius",
    "tolerance",
    "grid_radius",
    "grid_r_min",
    "grid_radii",
    "grid_rays",
    "grid_wall_offset",
    "grid_origin",
    "points",
    "pairs",
    "n_max",
    "k_grid",
    "threads",
    "cache",
    "out",
];

impl RunConfig {
    /// Defaults of `command`; they reproduce the acceptance settings.
    pub fn defaults_for(command: Command) -> Self {
        let mut c = RunConfig {
            command,
            group: "sl(2,R)".into(),
            lambda: Coords::zero(),
            lambda_im: Coords::zero(),
            mu: Coords::zero(),
            nu: 1.0,
            rule: RuleKind::GaussCircle,
            order: 256,
            orders: vec![24, 256],
            samples: 100_000,
            seed: DEFAULT_SEED,
            truncation_radius: 6.0,
            tolerance: 1e-6,
            grid_radius: 6.0,
            grid_r_min: 0.1,
            grid_radii: 12,
            grid_rays: 3,
            grid_wall_offset: 1e-2,
            grid_origin: true,
            points: 0,
            pairs: 0,
            n_max: 64,
            k_grid: 8,
            threads: 0,
            cache: false,
            out: "reports".into(),
        };
        use Command::*;
        match command {
            PhiEval => c.cache = true,
            PhiConstRho => {
                c.grid_radius = 5.0;
                c.points = 51;
            }
            FunctionalEq => {
                c.lambda = Coords::Rho(0.4);
                c.order = 512;
                c.grid_radius = 3.0;
                c.points = 100;
                c.tolerance = 1e-5;
            }
            NppScan => c.grid_radii = 60,
            Compare => {
                c.lambda = Coords::Rho(1.0);
                c.mu = Coords::Rho(0.5);
            }
            Hull => {
                c.group = "A2".into();
                c.pairs = 1000;
            }
            Hermitean => {
                c.group = "A2".into();
                c.points = 100;
            }
            MinimalLambda => {
                c.group = "A2".into();
                c.points = 20;
            }
            CriticalQ => {}
            Rms => c.points = 20,
            ConvSubmult => {
                c.lambda = Coords::Rho(0.5);
                c.rule = RuleKind::MonteCarlo;
                c.pairs = 5;
                c.points = 50;
            }
            NormLambda => {
                c.lambda = Coords::Rho(0.5);
                c.points = 20;
                c.tolerance = 1e-5;
            }
            StarNorm => {
                c.lambda = Coords::Rho(0.5);
                c.points = 100;
                c.pairs = 10;
                c.tolerance = 1e-5;
            }
            Eigenfunction => {
                c.lambda = Coords::Rho(0.5);
                c.grid_radius = 2.0;
                c.points = 10;
                c.tolerance = 1e-4;
            }
            RepUnitarity => {
                c.order = 1024;
                // modes up to 8 stay inside N_max = 64 out to this radius
                c.grid_radius = 0.5;
                c.pairs = 100;
            }
            RepPhiLock => {
                c.order = 1024;
                c.grid_radius = 4.0;
                c.points = 41;
            }
            ThmBKfinite => {
                c.order = 1024;
                c.grid_radius = 4.0;
                c.points = 21;
            }
            ThmBRms => {
                c.order = 1024;
                c.nu = 0.7;
                c.grid_radius = 4.0;
                c.points = 9;
                c.pairs = 10;
            }
            All => {}
        }
        c
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey(k));
            }
            if pairs.iter().any(|(p, _)| *p == k) {
                return Err(ConfigError::DuplicateKey(k));
            }
            pairs.push((k, v));
        }
        let command = pairs
            .iter()
            .find(|(k, _)| k == "command")
            .ok_or(ConfigError::MissingKey("command"))?;
        let command = Command::from_str(&command.1).map_err(|r| bad("command", &command.1, r))?;
        let mut cfg = RunConfig::defaults_for(command);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assigns one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let e = |r: String| bad(key, value, r);
        match key {
            "command" => self.command = value.parse().map_err(e)?,
            "group" => {
                RootSystem::build(value).map_err(|x| e(x.to_string()))?;
                self.group = value.to_string();
            }
            "lambda" => self.lambda = value.parse().map_err(e)?,
            "lambda_im" => self.lambda_im = value.parse().map_err(e)?,
            "mu" => self.mu = value.parse().map_err(e)?,
            "nu" => self.nu = parse_f64(value).map_err(e)?,
            "rule" => self.rule = value.parse().map_err(e)?,
            "order" => self.order = parse_usize(value).map_err(e)?,
            "orders" => {
                self.orders = value
                    .split(',')
                    .map(|s| parse_usize(s.trim()))
                    .collect::<Result<_, _>>()
                    .map_err(e)?
            }
            "samples" => self.samples = parse_usize(value).map_err(e)?,
            "seed" => self.seed = parse_u64(value).map_err(e)?,
            "truncation_radius" => self.truncation_radius = parse_f64(value).map_err(e)?,
            "tolerance" => self.tolerance = parse_f64(value).map_err(e)?,
            "grid_radius" => self.grid_radius = parse_f64(value).map_err(e)?,
            "grid_r_min" => self.grid_r_min = parse_f64(value).map_err(e)?,
            "grid_radii" => self.grid_radii = parse_usize(value).map_err(e)?,
            "grid_rays" => self.grid_rays = parse_usize(value).map_err(e)?,
            "grid_wall_offset" => self.grid_wall_offset = parse_f64(value).map_err(e)?,
            "grid_origin" => self.grid_origin = parse_bool(value).map_err(e)?,
            "points" => self.points = parse_usize(value).map_err(e)?,
            "pairs" => self.pairs = parse_usize(value).map_err(e)?,
            "n_max" => self.n_max = parse_usize(value).map_err(e)?,
            "k_grid" => self.k_grid = parse_usize(value).map_err(e)?,
            "threads" => self.threads = parse_usize(value).map_err(e)?,
            "cache" => self.cache = parse_bool(value).map_err(e)?,
            "out" => {
                if value.is_empty() {
                    return Err(e("empty path".into()));
                }
                self.out = value.to_string()
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Range checks that do not need the root system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, value: String, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(bad(key, &value, reason))
            }
        };
        check(self.order > 0, "order", self.order.to_string(), "must be positive")?;
        check(
            !self.orders.is_empty() && !self.orders.contains(&0),
            "orders",
            join_usize(&self.orders),
            "must be a nonempty list of positive orders",
        )?;
        check(self.samples >= 2, "samples", self.samples.to_string(), "need at least two samples")?;
        check(
            self.tolerance > 0.0 && self.tolerance.is_finite(),
            "tolerance",
            self.tolerance.to_string(),
            "must be positive",
        )?;
        check(
            self.truncation_radius > 0.0 && self.truncation_radius.is_finite(),
            "truncation_radius",
            self.truncation_radius.to_string(),
            "must be positive",
        )?;
        check(self.grid_radii > 0, "grid_radii", "0".into(), "empty grid")?;
        check(
            self.grid_radius > 0.0 && self.grid_radius.is_finite(),
            "grid_radius",
            self.grid_radius.to_string(),
            "must be positive",
        )?;
        check(
            self.grid_r_min > 0.0 && self.grid_r_min <= self.grid_radius,
            "grid_r_min",
            self.grid_r_min.to_string(),
            "must lie in (0, grid_radius]",
        )?;
        check(
            self.grid_wall_offset >= 0.0,
            "grid_wall_offset",
            self.grid_wall_offset.to_string(),
            "must be nonnegative",
        )?;
        check(self.nu.is_finite(), "nu", self.nu.to_string(), "must be finite")?;
        check(
            self.n_max >= 2 && self.n_max % 2 == 0,
            "n_max",
            self.n_max.to_string(),
            "must be even and at least 2",
        )?;
        check(self.k_grid > 0, "k_grid", "0".into(), "must be positive")?;
        Ok(())
    }

    /// Every key in a fixed order.
    pub fn to_text(&self) -> String {
        let values: Vec<(&str, String)> = vec![
            ("command", self.command.to_string()),
            ("group", self.group.clone()),
            ("lambda", self.lambda.to_string()),
            ("lambda_im", self.lambda_im.to_string()),
            ("mu", self.mu.to_string()),
            ("nu", self.nu.to_string()),
            ("rule", self.rule.name().to_string()),
            ("order", self.order.to_string()),
            ("orders", join_usize(&self.orders)),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.to_string()),
            ("truncation_radius", self.truncation_radius.to_string()),
            ("tolerance", self.tolerance.to_string()),
            ("grid_radius", self.grid_radius.to_string()),
            ("grid_r_min", self.grid_r_min.to_string()),
            ("grid_radii", self.grid_radii.to_string()),
            ("grid_rays", self.grid_rays.to_string()),
            ("grid_wall_offset", self.grid_wall_offset.to_string()),
            ("grid_origin", self.grid_origin.to_string()),
            ("points", self.points.to_string()),
            ("pairs", self.pairs.to_string()),
            ("n_max", self.n_max.to_string()),
            ("k_grid", self.k_grid.to_string()),
            ("threads", self.threads.to_string()),
            ("cache", self.cache.to_string()),
            ("out", self.out.clone()),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn root_system(&self) -> Result<RootSystem, ConfigError> {
        RootSystem::build(&self.group).map_err(|e| bad("group", &self.group, e.to_string()))
    }

    pub fn quad(&self) -> QuadratureSpec {
        let rule = match self.rule {
            RuleKind::GaussCircle => Rule::GaussCircle { order: self.order },
            RuleKind::ProductGauss => Rule::ProductGauss {
                orders: self.orders.clone(),
            },
            RuleKind::MonteCarlo => Rule::MonteCarlo {
                samples: self.samples,
                seed: self.seed,
            },
        };
        QuadratureSpec {
            rule,
            truncation_radius: self.truncation_radius,
            tolerance: self.tolerance,
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            radius: self.grid_radius,
            r_min: self.grid_r_min,
            radii: self.grid_radii,
            interior_rays: self.grid_rays,
            wall_offset: self.grid_wall_offset,
            include_origin: self.grid_origin,
        }
    }

    /// `lambda + i lambda_im`.
    pub fn lambda_param(&self, rs: &RootSystem) -> Result<SpectralParam, ConfigError> {
        let re = self.lambda.resolve(rs).map_err(|r| bad("lambda", &self.lambda.to_string(), r))?;
        let im = self
            .lambda_im
            .resolve(rs)
            .map_err(|r| bad("lambda_im", &self.lambda_im.to_string(), r))?;
        Ok(SpectralParam::complex(re, im))
    }

    pub fn mu_param(&self, rs: &RootSystem) -> Result<SpectralParam, ConfigError> {
        let re = self.mu.resolve(rs).map_err(|r| bad("mu", &self.mu.to_string(), r))?;
        Ok(SpectralParam::real(re))
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn join_usize(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| "expected a number".to_string())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("expected a finite number".into())
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_f64).collect()
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| "expected a nonnegative integer".into())
}

fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.trim();
    match s.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|_| "expected an unsigned integer".into())
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}
