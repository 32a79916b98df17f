//! Plot-ready serialization of fields, dispersion tables and oracle reports.
//!
//! CSV output is long-form with a header row. JSON output carries a metadata object
//! (parameters or schedule, grid, quadrature, tool version) next to the values. Floats
//! are written in shortest round-trip form, so reading a file back gives the exact
//! `f64` values. Files are written atomically: a temporary sibling is renamed over the
//! target.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::correlations::CorrelationField;
use crate::error::{Error, Result};
use crate::model::DispersionTable;
use crate::oracle::OracleReport;

pub const TOOL_NAME: &str = "spinwave";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Format implied by a file extension, if recognised.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?} (csv or json)"))),
        }
    }
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

const TOOL: Tool = Tool { name: TOOL_NAME, version: TOOL_VERSION };

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn field_to_csv(field: &CorrelationField) -> String {
    let mut out = String::from("x,t,value\n");
    for (t, row) in field.times.iter().zip(&field.values) {
        let t = format_float(*t);
        for (x, v) in field.positions.iter().zip(row) {
            writeln!(out, "{x},{t},{}", format_float(*v)).expect("writing to a String");
        }
    }
    out
}

pub fn field_to_json(field: &CorrelationField) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        tool: Tool,
        observable: &'a crate::correlations::Observable,
        metadata: &'a crate::correlations::FieldMetadata,
        times: &'a [f64],
        positions: &'a [i64],
        values: &'a [Vec<f64>],
    }
    let doc = Doc {
        tool: TOOL,
        observable: &field.observable,
        metadata: &field.metadata,
        times: &field.times,
        positions: &field.positions,
        values: &field.values,
    };
    serde_json::to_string_pretty(&doc).expect("field is serializable") + "\n"
}

pub fn dispersion_to_csv(table: &DispersionTable) -> String {
    let mut out = String::from("phi,epsilon,group_velocity\n");
    for s in &table.samples {
        writeln!(out, "{},{},{}", format_float(s.phi), format_float(s.epsilon), format_float(s.group_velocity))
            .expect("writing to a String");
    }
    out
}

pub fn dispersion_to_json(table: &DispersionTable) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        tool: Tool,
        max_abs_velocity: f64,
        #[serde(flatten)]
        table: &'a DispersionTable,
    }
    let doc = Doc { tool: TOOL, max_abs_velocity: table.max_abs_velocity(), table };
    serde_json::to_string_pretty(&doc).expect("table is serializable") + "\n"
}

pub fn report_to_csv(report: &OracleReport) -> String {
    let mut out = String::from("x,t,closed_form,oracle,in_window\n");
    for p in &report.points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.x,
            format_float(p.t),
            format_float(p.closed_form),
            format_float(p.oracle),
            p.in_window
        )
        .expect("writing to a String");
    }
    out
}

pub fn report_to_json(report: &OracleReport) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        tool: Tool,
        #[serde(flatten)]
        report: &'a OracleReport,
    }
    serde_json::to_string_pretty(&Doc { tool: TOOL, report }).expect("report is serializable") + "\n"
}

pub fn render_field(field: &CorrelationField, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => field_to_csv(field),
        OutputFormat::Json => field_to_json(field),
    }
}

pub fn render_dispersion(table: &DispersionTable, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => dispersion_to_csv(table),
        OutputFormat::Json => dispersion_to_json(table),
    }
}

pub fn render_report(report: &OracleReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => report_to_csv(report),
        OutputFormat::Json => report_to_json(report),
    }
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| {
        std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name")
    })?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
