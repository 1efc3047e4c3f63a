//! On-disk cache of `phi_lambda` grids.
//!
//! File layout (UTF-8 text):
//!
//! ```text
//! phibench-cache v1
//! group = sl(2,R)
//! lambda = 0.5;0
//! quad = gauss-circle(256);R=6e0;tol=1e-6
//! code = phibench 0.1.0 / ...
//! checksum = <sha256 of the payload, hex>
//! ---
//! <h_1> <h_2> ...;<re>;<im>;<error>
//! ```
//!
//! Floats use the shortest representation that parses back to the same
//! value, so a write followed by a read gives an equal entry.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};

const MAGIC: &str = "phibench-cache v1";
const SEPARATOR: &str = "---";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheHeader {
    pub group: String,
    pub lambda: String,
    pub quad: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachePoint {
    pub h: Vec<f64>,
    pub re: f64,
    pub im: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub header: CacheHeader,
    pub payload: Vec<CachePoint>,
}

#[derive(Debug)]
pub enum CacheError {
    Io(io::Error),
    Format(String),
    Checksum { stored: String, actual: String },
}

impl fmt::Display for CacheError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CacheError::Io(e) => write!(f, "cache i/o: {e}"),
            CacheError::Format(m) => write!(f, "malformed cache file: {m}"),
            CacheError::Checksum { stored, actual } => {
                write!(f, "cache checksum mismatch (stored {stored}, payload {actual})")
            }
        }
    }
}

impl std::error::Error for CacheError {}

impl From<io::Error> for CacheError {
    fn from(e: io::Error) -> Self {
        CacheError::Io(e)
    }
}

/// Identifies the numerical code that produced a cache entry. It changes
/// with the crate version and with the calibrated spherical convention.
pub fn code_fingerprint() -> String {
    let conv = phibench::spherical::convention()
        .map(|c| c.describe())
        .unwrap_or_else(|_| "uncalibrated".into());
    format!("phibench {} / {conv}", env!("CARGO_PKG_VERSION"))
}

fn payload_text(payload: &[CachePoint]) -> String {
    let mut s = String::new();
    for p in payload {
        let h: Vec<String> = p.h.iter().map(|x| x.to_string()).collect();
        s.push_str(&format!("{};{};{};{}\n", h.join(" "), p.re, p.im, p.error));
    }
    s
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl CacheEntry {
    pub fn to_text(&self) -> String {
        let payload = payload_text(&self.payload);
        let h = &self.header;
        format!(
            "{MAGIC}\ngroup = {}\nlambda = {}\nquad = {}\ncode = {}\nchecksum = {}\n{SEPARATOR}\n{payload}",
            h.group,
            h.lambda,
            h.quad,
            h.code,
            sha256_hex(payload.as_bytes())
        )
    }

    pub fn parse(text: &str) -> Result<Self, CacheError> {
        let (head, payload) = text
            .split_once(&format!("\n{SEPARATOR}\n"))
            .ok_or_else(|| CacheError::Format("missing separator".into()))?;
        let mut lines = head.lines();
        if lines.next() != Some(MAGIC) {
            return Err(CacheError::Format("bad magic line".into()));
        }
        let mut field = |key: &str| -> Result<String, CacheError> {
            let line = lines.next().ok_or_else(|| CacheError::Format(format!("missing `{key}`")))?;
            line.strip_prefix(&format!("{key} = "))
                .map(str::to_string)
                .ok_or_else(|| CacheError::Format(format!("expected `{key}`, got `{line}`")))
        };
        let header = CacheHeader {
            group: field("group")?,
            lambda: field("lambda")?,
            quad: field("quad")?,
            code: field("code")?,
        };
        let stored = field("checksum")?;
        let actual = sha256_hex(payload.as_bytes());
        if stored != actual {
            return Err(CacheError::Checksum { stored, actual });
        }
        let bad = |l: &str| CacheError::Format(format!("bad payload line `{l}`"));
        let mut points = Vec::new();
        for l in payload.lines() {
            let parts: Vec<&str> = l.split(';').collect();
            if parts.len() != 4 {
                return Err(bad(l));
            }
            let f = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            let h = if parts[0].is_empty() {
                Vec::new()
            } else {
                parts[0].split(' ').map(f).collect::<Result<_, _>>()?
            };
            points.push(CachePoint {
                h,
                re: f(parts[1])?,
                im: f(parts[2])?,
                error: f(parts[3])?,
            });
        }
        Ok(CacheEntry { header, payload: points })
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_text())
    }

    pub fn read(path: &Path) -> Result<Self, CacheError> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// How [`load_or_compute`] obtained its entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Missing,
    /// The header differs from the requested one, e.g. another code version.
    Stale,
    Corrupt(String),
}

/// Returns the cached entry when its header matches `header` exactly;
/// otherwise recomputes, rewrites the file and says why.
pub fn load_or_compute<E>(
    path: &Path,
    header: &CacheHeader,
    compute: impl FnOnce() -> Result<Vec<CachePoint>, E>,
) -> Result<(CacheEntry, CacheStatus), E>
where
    E: From<io::Error>,
{
    let status = match CacheEntry::read(path) {
        Ok(e) if e.header == *header => return Ok((e, CacheStatus::Hit)),
        Ok(_) => CacheStatus::Stale,
        Err(CacheError::Io(e)) if e.kind() == io::ErrorKind::NotFound => CacheStatus::Missing,
        Err(e) => CacheStatus::Corrupt(e.to_string()),
    };
    let entry = CacheEntry {
        header: header.clone(),
        payload: compute()?,
    };
    entry.write(path)?;
    Ok((entry, status))
}

/// File name for a header: readable prefix plus a hash of the full header.
pub fn file_name(header: &CacheHeader) -> String {
    let key = format!("{}\n{}\n{}", header.group, header.lambda, header.quad);
    let tag: String = header
        .group
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("phi-{tag}-{}.cache", &sha256_hex(key.as_bytes())[..16])
}
