//! Run configuration: defaults, then a flat TOML file, then flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use contact_bo::effpot::BETA2_CLAIMED;
use contact_bo::PhysicalParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_UMIN: f64 = 1e-3;
pub const DEFAULT_UMAX: f64 = 20.0;
pub const DEFAULT_UCOUNT: usize = 200;
pub const DEFAULT_MASS_RATIO: f64 = 1e3;
pub const DEFAULT_TOL: f64 = 1e-14;
pub const TOL_RANGE: (f64, f64) = (1e-14, 1e-6);
pub const MAX_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Where the centrifugal strength comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta2Source {
    Paper,
    Extracted,
    Value(f64),
}

impl FromStr for Beta2Source {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "paper" => Ok(Self::Paper),
            "extracted" => Ok(Self::Extracted),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .map(Self::Value)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "beta2 must be 'paper', 'extracted' or a finite value >= 0, got '{other}'"
                    ))
                }),
        }
    }
}

impl fmt::Display for Beta2Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Paper => write!(f, "paper"),
            Self::Extracted => write!(f, "extracted"),
            Self::Value(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Beta2Source {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Value(v) => s.serialize_f64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl Beta2Source {
    /// The fixed value, if one does not have to be fitted.
    pub fn fixed(&self) -> Option<f64> {
        match self {
            Self::Paper => Some(BETA2_CLAIMED),
            Self::Extracted => None,
            Self::Value(v) => Some(*v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
}

impl Grid {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.min > 0.0) || !self.min.is_finite() {
            return Err(CliError::Usage(format!("umin must be > 0, got {}", self.min)));
        }
        if !(self.max > self.min) || !self.max.is_finite() {
            return Err(CliError::Usage(format!(
                "umax must be finite and > umin, got umin={} umax={}",
                self.min, self.max
            )));
        }
        if self.count < 2 {
            return Err(CliError::Usage(format!("ucount must be >= 2, got {}", self.count)));
        }
        Ok(())
    }

    /// Grid points in increasing order; both endpoints are exact.
    pub fn points(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        let mut us: Vec<f64> = (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                if self.log {
                    self.min * (self.max / self.min).powf(t)
                } else {
                    self.min + (self.max - self.min) * t
                }
            })
            .collect();
        us[self.count - 1] = self.max;
        us
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Units {
    /// `hbar = epsilon = 2 m* = 1`.
    Reduced { mass_ratio: f64 },
    Dimensional {
        m: f64,
        #[serde(rename = "M")]
        big_m: f64,
        hbar: f64,
        epsilon: f64,
    },
}

impl Units {
    pub fn params(&self) -> Result<PhysicalParams, CliError> {
        let p = match *self {
            Units::Reduced { mass_ratio } => PhysicalParams::reduced(mass_ratio),
            Units::Dimensional {
                m,
                big_m,
                hbar,
                epsilon,
            } => PhysicalParams::new(m, big_m, hbar, epsilon),
        };
        p.map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub units: Units,
    pub grid: Grid,
    pub beta2: Beta2Source,
    pub tol: f64,
    pub levels: usize,
    pub points: usize,
    pub tol_scale: f64,
    pub format: Format,
    /// Not echoed: two runs differing only in destination must produce the
    /// same bytes.
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            units: Units::Reduced {
                mass_ratio: DEFAULT_MASS_RATIO,
            },
            grid: Grid {
                min: DEFAULT_UMIN,
                max: DEFAULT_UMAX,
                count: DEFAULT_UCOUNT,
                log: true,
            },
            beta2: Beta2Source::Paper,
            tol: DEFAULT_TOL,
            levels: 4,
            points: 100,
            tol_scale: 1.0,
            format: Format::Csv,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum Beta2Entry {
    Number(f64),
    Text(String),
}

/// Keys accepted in the configuration file. Flags use the same names.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mass_ratio: Option<f64>,
    m: Option<f64>,
    #[serde(rename = "M")]
    big_m: Option<f64>,
    hbar: Option<f64>,
    epsilon: Option<f64>,
    umin: Option<f64>,
    umax: Option<f64>,
    ucount: Option<usize>,
    ulog: Option<bool>,
    beta2: Option<Beta2Entry>,
    tol: Option<f64>,
    levels: Option<usize>,
    points: Option<usize>,
    tol_scale: Option<f64>,
    format: Option<Format>,
    out: Option<PathBuf>,
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub mass_ratio: Option<f64>,
    pub m: Option<f64>,
    pub big_m: Option<f64>,
    pub hbar: Option<f64>,
    pub epsilon: Option<f64>,
    pub umin: Option<f64>,
    pub umax: Option<f64>,
    pub ucount: Option<usize>,
    pub ulog: Option<bool>,
    pub beta2: Option<String>,
    pub tol: Option<f64>,
    pub levels: Option<usize>,
    pub points: Option<usize>,
    pub tol_scale: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(flags: &Overrides) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let mut cfg = RunConfig::default();

        let dims = [
            flags.m.or(file.m),
            flags.big_m.or(file.big_m),
            flags.hbar.or(file.hbar),
            flags.epsilon.or(file.epsilon),
        ];
        let ratio = flags.mass_ratio.or(file.mass_ratio);
        let given = dims.iter().filter(|d| d.is_some()).count();
        cfg.units = match (given, ratio) {
            (0, r) => Units::Reduced {
                mass_ratio: r.unwrap_or(DEFAULT_MASS_RATIO),
            },
            (4, None) => Units::Dimensional {
                m: dims[0].unwrap(),
                big_m: dims[1].unwrap(),
                hbar: dims[2].unwrap(),
                epsilon: dims[3].unwrap(),
            },
            (4, Some(_)) => {
                return Err(CliError::Usage(
                    "mass_ratio selects reduced units; drop it or drop m, M, hbar, epsilon".into(),
                ))
            }
            _ => {
                return Err(CliError::Usage(
                    "dimensional mode needs all of m, M, hbar and epsilon".into(),
                ))
            }
        };

        cfg.grid.min = flags.umin.or(file.umin).unwrap_or(cfg.grid.min);
        cfg.grid.max = flags.umax.or(file.umax).unwrap_or(cfg.grid.max);
        cfg.grid.count = flags.ucount.or(file.ucount).unwrap_or(cfg.grid.count);
        cfg.grid.log = flags.ulog.or(file.ulog).unwrap_or(cfg.grid.log);

        cfg.beta2 = match (&flags.beta2, &file.beta2) {
            (Some(s), _) => s.parse()?,
            (None, Some(Beta2Entry::Text(s))) => s.parse()?,
            (None, Some(Beta2Entry::Number(v))) => v.to_string().parse()?,
            (None, None) => Beta2Source::Paper,
        };
        cfg.tol = flags.tol.or(file.tol).unwrap_or(cfg.tol);
        cfg.levels = flags.levels.or(file.levels).unwrap_or(cfg.levels);
        cfg.points = flags.points.or(file.points).unwrap_or(cfg.points);
        cfg.tol_scale = flags.tol_scale.or(file.tol_scale).unwrap_or(cfg.tol_scale);
        cfg.format = flags.format.or(file.format).unwrap_or(cfg.format);
        cfg.out = flags.out.clone().or(file.out);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid.validate()?;
        self.units.params()?;
        let (lo, hi) = TOL_RANGE;
        if !(self.tol >= lo && self.tol <= hi) {
            return Err(CliError::Usage(format!("tol must lie in [{lo:e}, {hi:e}], got {}", self.tol)));
        }
        if self.levels == 0 || self.levels > MAX_LEVELS {
            return Err(CliError::Usage(format!(
                "levels must be between 1 and {MAX_LEVELS}, got {}",
                self.levels
            )));
        }
        if !(2..=100_000).contains(&self.points) {
            return Err(CliError::Usage(format!("points must be between 2 and 100000, got {}", self.points)));
        }
        if !(self.tol_scale > 0.0) || !self.tol_scale.is_finite() {
            return Err(CliError::Usage(format!("tol_scale must be positive, got {}", self.tol_scale)));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams, CliError> {
        self.units.params()
    }
}
