use std::fs::{self, File};
use std::path::{Path, PathBuf};

use phonia::infotheory::build_report;
use phonia::MiReport;

use crate::error::{CliError, CliResult};
use crate::table::read_table;

/// Where the matrix CSV goes when no explicit path is given.
pub fn default_matrix_path(report: &Path) -> CliResult<PathBuf> {
    let matrix = report.with_extension("csv");
    if matrix == report {
        return Err(CliError::Usage(format!(
            "report path {} would collide with its matrix CSV; use a .json name or --matrix",
            report.display()
        )));
    }
    Ok(matrix)
}

pub fn analyze(table: &Path, report_path: &Path, matrix_path: &Path, bins: usize) -> CliResult<MiReport> {
    let file = File::open(table).map_err(|e| CliError::io(table, e))?;
    let ds = read_table(file)?;
    let report = build_report(&ds, bins)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(report_path, json + "\n").map_err(|e| CliError::io(report_path, e))?;
    fs::write(matrix_path, report.matrix_csv()).map_err(|e| CliError::io(matrix_path, e))?;
    Ok(report)
}

/// Features by decreasing relative intrinsic information.
pub fn ranking(report: &MiReport) -> Vec<(&str, f64)> {
    let mut r: Vec<(&str, f64)> = report
        .feature_names
        .iter()
        .map(String::as_str)
        .zip(report.relative_intrinsic.iter().copied())
        .collect();
    r.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    r
}
