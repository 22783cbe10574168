//! Atomic file output.

use std::io::Write;
use std::path::Path;

use bbhk_core::verify::Report;
use serde::Serialize;

use crate::CliError;

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

/// Serializes `rows` as CSV with a header and writes them atomically.
pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Serialize)]
struct CaseRow<'a> {
    id: &'a str,
    group: &'a str,
    measured: f64,
    error: f64,
    bound: f64,
    ratio: f64,
    abscissa: Option<f64>,
    hits: Option<u64>,
    inputs: String,
}

/// `report.json` and its CSV mirror `cases.csv` in `dir`.
pub fn write_report(dir: &Path, report: &Report) -> Result<(), CliError> {
    write_atomic(&dir.join("report.json"), (report.to_json() + "\n").as_bytes())?;
    let rows: Vec<CaseRow> = report
        .cases
        .iter()
        .map(|c| CaseRow {
            id: &c.id,
            group: &c.group,
            measured: c.measured,
            error: c.error,
            bound: c.bound,
            ratio: c.ratio,
            abscissa: c.abscissa,
            hits: c.hits,
            inputs: c.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
        })
        .collect();
    write_csv(&dir.join("cases.csv"), &rows)
}

/// `(a b c)` for CSV cells.
pub fn point(p: &[f64]) -> String {
    bbhk_core::verify::fmt_point(p)
}
