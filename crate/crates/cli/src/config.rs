//! Optional TOML defaults. Every key mirrors a long flag (dashes become underscores);
//! a flag given on the command line overrides the file, and the file overrides the
//! built-in defaults. Relative paths are taken relative to the file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::args::{FormatArg, SuiteArg};

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma0: Option<f64>,
    pub lambda0: Option<f64>,
    pub gamma1: Option<f64>,
    pub lambda1: Option<f64>,
    pub t1: Option<f64>,
    pub ramp_start: Option<f64>,
    pub ramp_end: Option<f64>,
    pub schedule: Option<PathBuf>,
    pub xmax: Option<usize>,
    pub tmax: Option<f64>,
    pub dt: Option<f64>,
    pub observable: Option<String>,
    pub quadrature: Option<usize>,
    pub samples: Option<usize>,
    pub step: Option<f64>,
    pub averaged: Option<bool>,
    pub sites: Option<usize>,
    pub tolerance: Option<f64>,
    pub suite: Option<String>,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.schedule, &mut cfg.output].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn format(&self) -> Result<Option<FormatArg>, String> {
        self.format
            .as_deref()
            .map(|s| match s {
                "csv" => Ok(FormatArg::Csv),
                "json" => Ok(FormatArg::Json),
                other => Err(format!("config: unknown format {other:?} (csv or json)")),
            })
            .transpose()
    }

    pub fn suite(&self) -> Result<Option<SuiteArg>, String> {
        self.suite
            .as_deref()
            .map(|s| match s {
                "invariants" => Ok(SuiteArg::Invariants),
                "oracle" => Ok(SuiteArg::Oracle),
                "all" => Ok(SuiteArg::All),
                other => Err(format!("config: unknown suite {other:?} (invariants, oracle or all)")),
            })
            .transpose()
    }
}

/// First of flag, file value, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
