//! Report serialization: JSON with fixed-width floats so identical inputs
//! produce byte-identical files, plus CSV views of tabular results.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clamp_core::{margin_level, Position};
use serde::Serialize;

use crate::error::CliError;

/// Emits every finite float with 17 significant digits so that distinct
/// doubles never collide and equal doubles always render identically.
/// Non-finite values fall back to JSON null upstream.
struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Renders one float for CSV cells with the same 17-digit convention.
pub fn format_float(value: f64) -> String {
    if value.is_nan() {
        "nan".to_string()
    } else if value == f64::INFINITY {
        "inf".to_string()
    } else if value == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{value:.16e}")
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Analysis(format!("report serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(buf)
}

/// Which report files a verb writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    pub fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

/// Position context repeated at the head of every report.
#[derive(Debug, Serialize)]
pub struct PositionSummary {
    pub liquidity: f64,
    pub range_lower: f64,
    pub range_upper: f64,
    pub collateral_base: f64,
    pub collateral_quote: f64,
    pub debt_base: f64,
    pub debt_quote: f64,
    pub deploy_price: f64,
    pub margin_at_deploy: f64,
}

impl PositionSummary {
    pub fn of(pos: &Position) -> Self {
        PositionSummary {
            liquidity: pos.liquidity,
            range_lower: pos.range.lower,
            range_upper: pos.range.upper,
            collateral_base: pos.collateral.base,
            collateral_quote: pos.collateral.quote,
            debt_base: pos.debt.base,
            debt_quote: pos.debt.quote,
            deploy_price: pos.deploy_price,
            margin_at_deploy: margin_level(pos, pos.deploy_price),
        }
    }
}

/// Full report document for one verb.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub verb: &'static str,
    pub scenario: String,
    pub position: PositionSummary,
    pub result: T,
}

/// Writes the JSON and/or CSV files for one verb and returns the paths
/// written. `csv` carries pre-rendered rows, `None` for verbs with no
/// tabular view.
pub fn write_report<T: Serialize>(
    out_dir: &Path,
    stem: &str,
    format: OutputFormat,
    report: &Report<T>,
    csv: Option<String>,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    if format.wants_json() {
        let path = out_dir.join(format!("{stem}-{}.json", report.verb));
        fs::write(&path, to_json_bytes(report)?)?;
        written.push(path);
    }
    if let Some(body) = csv {
        if format.wants_csv() {
            let path = out_dir.join(format!("{stem}-{}.csv", report.verb));
            fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Builds a CSV document from a header and rows of pre-rendered cells.
pub fn csv_document(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
